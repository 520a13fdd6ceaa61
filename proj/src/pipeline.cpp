#include "krds/pipeline.hpp"

#include <cmath>

namespace krds {

namespace {

void check_scalar_obs(const ObservableSet& obs, const ModelSpec& model) {
    obs.validate();
    require(obs.state_dim() == model_dim(model),
            "observable " + observable_kind_name(obs.kind) + " does not match the model dimension");
}

[[noreturn]] void rethrow_with(const IntegrationDiverged& d, const std::string& ctx) {
    throw IntegrationDiverged(std::string(d.what()) + " [" + ctx + "]", d.step, d.path);
}

} // namespace

std::string sharing_name(NoiseSharing s) { return s == NoiseSharing::common ? "common" : "independent"; }

NoiseSharing sharing_from_name(const std::string& s) {
    if (s == "common") return NoiseSharing::common;
    if (s == "independent") return NoiseSharing::independent;
    throw InvalidArgument("unknown noise sharing '" + s + "'");
}

std::string hankel_mode_name(HankelMode m) {
    return m == HankelMode::pilot_continuation ? "pilot_continuation" : "averaged_trajectory";
}

HankelMode hankel_mode_from_name(const std::string& s) {
    if (s == "pilot_continuation") return HankelMode::pilot_continuation;
    if (s == "averaged_trajectory") return HankelMode::averaged_trajectory;
    throw InvalidArgument("unknown hankel mode '" + s + "'");
}

void HankelSpec::validate() const {
    require(n_rows >= 1 && m_cols >= 2, "hankel spec: need n_rows >= 1 and m_cols >= 2");
    require(averaging_N >= 1, "hankel spec: averaging_N must be >= 1");
    observable.validate();
    require(observable.size() == 1, "hankel spec: observable must be scalar");
}

std::vector<State> initial_points_grid(const std::vector<double>& lo, const std::vector<double>& hi,
                                       int m) {
    require(lo.size() == hi.size() && (lo.size() == 1 || lo.size() == 2),
            "initial points: box must be 1-d or 2-d");
    require(m >= 2, "initial points: need m >= 2");
    std::vector<State> pts;
    if (lo.size() == 1) {
        for (int j = 0; j < m; ++j)
            pts.push_back(make_state({lo[0] + (hi[0] - lo[0]) * j / (m - 1)}));
        return pts;
    }
    int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(m))));
    require(side * side == m, "initial points: 2-d grid needs a square point count");
    for (int a = 0; a < side; ++a)
        for (int b = 0; b < side; ++b)
            pts.push_back(make_state({lo[0] + (hi[0] - lo[0]) * a / (side - 1),
                                      lo[1] + (hi[1] - lo[1]) * b / (side - 1)}));
    return pts;
}

std::vector<State> initial_points_random(const std::vector<double>& lo,
                                         const std::vector<double>& hi, int m,
                                         RngStream& stream) {
    require(lo.size() == hi.size() && (lo.size() == 1 || lo.size() == 2),
            "initial points: box must be 1-d or 2-d");
    require(m >= 1, "initial points: need m >= 1");
    std::vector<State> pts;
    for (int j = 0; j < m; ++j) {
        State s(static_cast<Eigen::Index>(lo.size()));
        for (std::size_t d = 0; d < lo.size(); ++d)
            s(static_cast<Eigen::Index>(d)) = lo[d] + (hi[d] - lo[d]) * stream.uniform();
        pts.push_back(s);
    }
    return pts;
}

ExpectationEstimate estimate_time_expectation(const ModelSpec& model, const State& x0,
                                              const ObservableSet& obs, int n_times,
                                              const StepConfig& cfg, int N, std::uint64_t seed,
                                              std::uint64_t base_stream) {
    check_scalar_obs(obs, model);
    require(n_times >= 1, "time expectation: n_times must be >= 1");
    require(N >= 1, "time expectation: N must be >= 1");
    Propagator prop(model, cfg);
    const int n = obs.size();
    CMat sum = CMat::Zero(n, n_times);
    Mat sum2 = Mat::Zero(n, n_times);
    CVec f(n);
    for (int p = 0; p < N; ++p) {
        RngStream rng(seed, base_stream + static_cast<std::uint64_t>(p));
        PathCursor c{x0, 0, 0.0};
        try {
            for (int k = 0; k < n_times; ++k) {
                if (k > 0) prop.advance(c, 1, rng);
                evaluate_into(obs, c.x, f);
                sum.col(k) += f;
                sum2.col(k) += f.cwiseAbs2();
            }
        } catch (const IntegrationDiverged& d) {
            rethrow_with(d, "path " + std::to_string(p));
        }
    }
    ExpectationEstimate est;
    est.n_samples = N;
    est.values = sum / static_cast<double>(N);
    est.standard_error = Mat::Zero(n, n_times);
    if (N > 1) {
        Mat var = (sum2 - sum.cwiseAbs2() / static_cast<double>(N)) / static_cast<double>(N - 1);
        est.standard_error = var.cwiseMax(0.0).cwiseSqrt() / std::sqrt(static_cast<double>(N));
    }
    return est;
}

std::vector<SnapshotMatrices> assemble_ensemble_pairs_lags(
    const ModelSpec& model, const std::vector<State>& points, const ObservableSet& obs,
    const std::vector<int>& lags, const StepConfig& cfg, int N, std::uint64_t seed,
    std::uint64_t base_stream, NoiseSharing sharing) {
    check_scalar_obs(obs, model);
    const int m = static_cast<int>(points.size());
    require(m >= 2, "ensemble pairs: need m >= 2 points");
    require(N >= 1, "ensemble pairs: N must be >= 1");
    require(!lags.empty(), "ensemble pairs: no lags");
    for (std::size_t i = 0; i < lags.size(); ++i) {
        require(lags[i] >= 1, "ensemble pairs: lag k must be >= 1");
        if (i > 0) require(lags[i] > lags[i - 1], "ensemble pairs: lags must increase");
    }
    Propagator prop(model, cfg);
    const int n = obs.size();
    CMat X(n, m);
    for (int j = 0; j < m; ++j) evaluate_into(obs, points[static_cast<std::size_t>(j)], X.col(j));

    std::vector<CMat> Ysum(lags.size(), CMat::Zero(n, m));
    CVec f(n);
    for (int j = 0; j < m; ++j) {
        for (int p = 0; p < N; ++p) {
            std::uint64_t sid = sharing == NoiseSharing::common
                                    ? base_stream + static_cast<std::uint64_t>(p)
                                    : base_stream + static_cast<std::uint64_t>(j) * N + p;
            RngStream rng(seed, sid);
            PathCursor c{points[static_cast<std::size_t>(j)], 0, 0.0};
            int done = 0;
            try {
                for (std::size_t l = 0; l < lags.size(); ++l) {
                    prop.advance(c, lags[l] - done, rng);
                    done = lags[l];
                    evaluate_into(obs, c.x, f);
                    Ysum[l].col(j) += f;
                }
            } catch (const IntegrationDiverged& d) {
                rethrow_with(d, "point " + std::to_string(j) + ", path " + std::to_string(p));
            }
        }
    }
    std::vector<SnapshotMatrices> out;
    for (std::size_t l = 0; l < lags.size(); ++l)
        out.push_back({X, Ysum[l] / static_cast<double>(N), Layout::ensemble_pairs,
                       lags[l] * cfg.dt});
    return out;
}

SnapshotMatrices assemble_ensemble_pairs(const ModelSpec& model, const std::vector<State>& points,
                                         const ObservableSet& obs, int k, const StepConfig& cfg,
                                         int N, std::uint64_t seed, std::uint64_t base_stream,
                                         NoiseSharing sharing) {
    require(k >= 1, "ensemble pairs: lag k must be >= 1");
    return assemble_ensemble_pairs_lags(model, points, obs, {k}, cfg, N, seed, base_stream,
                                        sharing)
        .front();
}

SnapshotMatrices assemble_time_delayed(const ModelSpec& model, const State& x0,
                                       const ObservableSet& obs, int m, const StepConfig& cfg,
                                       int N, std::uint64_t seed, std::uint64_t base_stream) {
    require(m >= 2, "time delayed: need m >= 2");
    auto est = estimate_time_expectation(model, x0, obs, m + 1, cfg, N, seed, base_stream);
    return {est.values.leftCols(m), est.values.rightCols(m), Layout::time_delayed, cfg.dt};
}

SnapshotMatrices assemble_renormalized_pairs(const ModelSpec& model, const State& x0, int m,
                                             const StepConfig& cfg, RngStream& stream) {
    require(std::holds_alternative<DiscreteLinear>(model) ||
                std::holds_alternative<SwitchingLinear>(model),
            "renormalized pairs: model must be linear");
    require(m >= 2, "renormalized pairs: need m >= 2");
    require(x0.norm() > 0.0, "renormalized pairs: x0 must be nonzero");
    Propagator prop(model, cfg);
    const int d = model_dim(model);
    SnapshotMatrices s{CMat(d, m), CMat(d, m), Layout::time_delayed, cfg.dt};
    PathCursor c{x0 / x0.norm(), 0, 0.0};
    for (int k = 0; k < m; ++k) {
        s.X.col(k) = c.x.cast<cplx>();
        prop.advance(c, 1, stream);
        s.Y.col(k) = c.x.cast<cplx>();
        double nrm = c.x.norm();
        if (!(nrm > 0.0) || !std::isfinite(nrm))
            throw NumericalError("renormalized pairs: state norm degenerate at step " +
                                 std::to_string(k));
        c.x /= nrm;
    }
    return s;
}

CMat hankel_from_series(const CVec& series, int n_rows, int n_cols) {
    require(n_rows >= 1 && n_cols >= 1, "hankel: empty shape");
    require(series.size() >= n_rows + n_cols - 1, "hankel: series too short");
    CMat H(n_rows, n_cols);
    for (int i = 0; i < n_rows; ++i)
        for (int k = 0; k < n_cols; ++k) H(i, k) = series(i + k);
    return H;
}

SnapshotMatrices assemble_stochastic_hankel(const ModelSpec& model, const State& x0,
                                            const HankelSpec& spec, const StepConfig& cfg,
                                            std::uint64_t seed, std::uint64_t base_stream) {
    spec.validate();
    check_scalar_obs(spec.observable, model);
    const int nr = spec.n_rows, mc = spec.m_cols, N = spec.averaging_N;
    CMat H(nr, mc + 1);

    if (spec.mode == HankelMode::averaged_trajectory) {
        auto est = estimate_time_expectation(model, x0, spec.observable, nr + mc, cfg, N, seed,
                                             base_stream);
        H = hankel_from_series(est.values.row(0).transpose(), nr, mc + 1);
    } else {
        Propagator prop(model, cfg);
        std::vector<State> pilot;
        pilot.reserve(static_cast<std::size_t>(nr));
        {
            RngStream rng(seed, base_stream);
            PathCursor c{x0, 0, 0.0};
            try {
                for (int i = 0; i < nr; ++i) {
                    if (i > 0) prop.advance(c, 1, rng);
                    pilot.push_back(c.x);
                }
            } catch (const IntegrationDiverged& d) {
                rethrow_with(d, "pilot path");
            }
        }
        H.setZero();
        CVec f(1);
        for (int i = 0; i < nr; ++i) {
            for (int p = 0; p < N; ++p) {
                std::uint64_t sid =
                    spec.sharing == NoiseSharing::common
                        ? base_stream + 1 + static_cast<std::uint64_t>(p)
                        : base_stream + 1 + static_cast<std::uint64_t>(i) * N + p;
                RngStream rng(seed, sid);
                PathCursor c{pilot[static_cast<std::size_t>(i)], 0, 0.0};
                try {
                    for (int k = 0; k <= mc; ++k) {
                        if (k > 0) prop.advance(c, 1, rng);
                        evaluate_into(spec.observable, c.x, f);
                        H(i, k) += f(0);
                    }
                } catch (const IntegrationDiverged& d) {
                    rethrow_with(d, "row " + std::to_string(i) + ", path " + std::to_string(p));
                }
            }
        }
        H /= static_cast<double>(N);
    }
    return {H.leftCols(mc), H.rightCols(mc), Layout::hankel, cfg.dt};
}

} // namespace krds
