#include "krds/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "krds/observables.hpp"
#include "krds/oracle.hpp"
#include "krds/pipeline.hpp"

namespace krds {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

json cj(cplx z) { return json::array({z.real(), z.imag()}); }

// Runs inside one experiment draw from disjoint stream ranges.
std::uint64_t derive_stream(std::uint64_t base, std::uint64_t run) { return base + (run << 32); }

template <class T>
T get(const json& j, const std::string& key) {
    require(j.is_object() && j.contains(key), "missing config parameter '" + key + "'");
    return j.at(key).get<T>();
}

StepConfig step_from(const json& j) {
    StepConfig s;
    s.dt = get<double>(j, "dt");
    s.substeps = get<int>(j, "substeps");
    s.scheme = scheme_from_name(get<std::string>(j, "scheme"));
    s.validate();
    return s;
}

json step_json(double dt, int substeps, const std::string& scheme) {
    return {{"dt", dt}, {"substeps", substeps}, {"scheme", scheme}};
}

DmdOptions dmd_for(const ExperimentConfig& c, const json& run) {
    if (run.is_object() && run.contains("dmd")) return dmd_options_from_json(run.at("dmd"), c.dmd);
    return c.dmd;
}

json dmd_json(double eps, double thr) {
    DmdOptions o;
    o.eps = eps;
    o.residual_threshold = thr;
    return dmd_options_to_json(o);
}

State state_from(const json& j, const std::string& key) {
    return make_state(get<std::vector<double>>(j, key));
}

ObservableSet obs_kind(ObservableKind k) {
    ObservableSet o;
    o.kind = k;
    return o;
}

void add_rows(ExperimentResult& res, const std::string& run, const DmdResult& r, double thr) {
    int i = 0;
    for (const auto& p : r.pairs)
        res.eigenvalues.push_back({run, i++, p.lambda, p.continuous_lambda, p.residual, thr});
}

int find_pair(const DmdResult& r, cplx lambda, bool continuous) {
    for (std::size_t i = 0; i < r.pairs.size(); ++i) {
        cplx v = continuous ? r.pairs[i].continuous_lambda : r.pairs[i].lambda;
        if (v == lambda) return static_cast<int>(i);
    }
    return -1;
}

CVec normalized(CVec v) {
    double m = v.cwiseAbs().maxCoeff();
    if (m > 0.0) v /= m;
    return v;
}

// phi(x) = xi^H f(x) on sample points.
CVec dictionary_eigenfunction(const RitzPair& p, const ObservableSet& obs,
                              const std::vector<State>& pts) {
    CVec out(static_cast<Eigen::Index>(pts.size()));
    if (p.left_vector.size() == 0) throw NumericalError("eigenfunction: no left vector");
    for (std::size_t i = 0; i < pts.size(); ++i)
        out(static_cast<Eigen::Index>(i)) = p.left_vector.dot(evaluate(obs, pts[i]));
    return out;
}

Mat coords_of(const std::vector<State>& pts) {
    const int d = pts.empty() ? 0 : static_cast<int>(pts.front().size());
    Mat c(static_cast<Eigen::Index>(pts.size()), d);
    for (std::size_t i = 0; i < pts.size(); ++i) c.row(static_cast<Eigen::Index>(i)) = pts[i].transpose();
    return c;
}

void add_dictionary_block(ExperimentResult& res, const std::string& run, const DmdResult& r,
                          int pair, const ObservableSet& obs, const std::vector<State>& pts) {
    if (pair < 0) return;
    const auto& p = r.pairs[static_cast<std::size_t>(pair)];
    if (p.left_vector.size() == 0) return;
    res.eigenfunctions.push_back(
        {run, pair, p.continuous_lambda, coords_of(pts), normalized(dictionary_eigenfunction(p, obs, pts))});
}

void add_hankel_block(ExperimentResult& res, const std::string& run, const DmdResult& r, int pair) {
    if (pair < 0) return;
    const auto& p = r.pairs[static_cast<std::size_t>(pair)];
    Mat t(p.ritz_vector.size(), 1);
    for (Eigen::Index i = 0; i < t.rows(); ++i) t(i, 0) = static_cast<double>(i) * r.dt;
    res.eigenfunctions.push_back({run, pair, p.continuous_lambda, t, normalized(p.ritz_vector)});
}

std::vector<State> grid_1d(double lo, double hi, int n) {
    return initial_points_grid({lo}, {hi}, n);
}

Trajectory sample_path(const ModelSpec& m, const State& x0, const StepConfig& cfg, int n,
                       const ExperimentConfig& c) {
    RngStream rng(c.seed, derive_stream(c.stream_id, 15));
    return integrate(m, x0, cfg, n, rng);
}

// Number of references with some computed value within tol (no one-to-one pairing).
int count_recovered(const std::vector<cplx>& computed, const std::vector<cplx>& refs, double tol) {
    int n = 0;
    for (cplx r : refs) {
        double best = kInf;
        for (cplx c : computed) best = std::min(best, std::abs(c - r));
        if (best < tol) ++n;
    }
    return n;
}

double match_linf_or_inf(const EigMatchReport& m) {
    return m.unmatched_reference.empty() ? m.linf : kInf;
}

// ---------------------------------------------------------------- rotation

ExperimentResult run_rotation(const ExperimentConfig& c) {
    ExperimentResult res;
    const auto& P = c.params;
    auto rot = std::get<NoisyRotation>(c.model);
    const int n1 = get<int>(P, "n1"), m = get<int>(P, "m"), jmax = get<int>(P, "j_max");
    State x0 = make_state({get<double>(P, "x0")});
    ObservableSet obs = obs_kind(ObservableKind::fourier_circle);
    obs.n1 = n1;
    StepConfig sc{1.0, 1, Scheme::srk};

    auto ref_spec = rotation_spectrum(rot.theta, rot.delta, jmax);
    std::vector<cplx> refs;
    for (std::size_t i = 0; i < ref_spec.indices.size(); ++i)
        if (ref_spec.indices[i] != 0) refs.push_back(ref_spec.eigenvalues[i]);

    auto data = assemble_time_delayed(c.model, x0, obs, m, sc, 1, c.seed, derive_stream(c.stream_id, 0));
    DmdOptions so = dmd_for(c, P.at("stochastic"));
    DmdResult r = dmd_rrr(data, so);
    add_rows(res, "stochastic", r, so.residual_threshold);
    auto match = match_eigenvalues(r.eigenvalues(), refs);
    res.details["stochastic"] = {{"rank_r", r.rank_r}, {"retained", r.pairs.size()},
                                 {"match", match_to_json(match)}};
    res.checks.push_back(make_check("stochastic_leading_linf", match_linf_or_inf(match), "<",
                                    get<double>(P.at("tolerances"), "stochastic_linf"), 0.0,
                                    std::to_string(refs.size()) + " eigenvalues, |j| <= " +
                                        std::to_string(jmax)));

    auto grid = grid_1d(0.0, 1.0 - 1.0 / 200.0, 200);
    for (const auto& mp : match.matched)
        if (mp.reference_index < 3 || (mp.reference_index >= jmax && mp.reference_index < jmax + 3))
            add_dictionary_block(res, "stochastic", r, find_pair(r, mp.computed, false), obs, grid);

    NoisyRotation det = rot;
    det.delta = 0.0;
    auto ddata = assemble_time_delayed(det, x0, obs, m, sc, 1, c.seed, derive_stream(c.stream_id, 1));
    DmdOptions dopt = dmd_for(c, P.at("deterministic"));
    DmdResult dr = dmd_rrr(ddata, dopt);
    add_rows(res, "deterministic", dr, dopt.residual_threshold);
    double dev = dr.pairs.empty() ? kInf : 0.0;
    for (const auto& p : dr.pairs) dev = std::max(dev, std::abs(std::abs(p.lambda) - 1.0));
    res.details["deterministic"] = {{"rank_r", dr.rank_r}, {"retained", dr.pairs.size()},
                                    {"max_unit_circle_deviation", dev}};
    res.checks.push_back(make_check("deterministic_unit_circle_deviation", dev, "<",
                                    get<double>(P.at("tolerances"), "unit_circle"), 0.0,
                                    std::to_string(dr.pairs.size()) + " retained eigenvalues"));
    res.coord_names = {"x"};
    res.sample_path = sample_path(c.model, x0, sc, 1000, c);
    return res;
}

// ------------------------------------------------------ discrete linear sweep

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double lx = std::log(x[i]), ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

ExperimentResult run_discrete_linear(const ExperimentConfig& c) {
    ExperimentResult res;
    const auto& P = c.params;
    auto model = std::get<DiscreteLinear>(c.model);
    auto ms = get<std::vector<int>>(P, "m_values");
    const int np = get<int>(P, "n_points");
    require(ms.size() >= 2, "discrete-linear-sweep: need at least two m values");
    RngStream prng(c.seed, derive_stream(c.stream_id, 0));
    auto pts = initial_points_random(get<std::vector<double>>(P, "box_lo"),
                                     get<std::vector<double>>(P, "box_hi"), np, prng);
    auto ref = discrete_linear_spectrum(model.distribution(), 1).eigenvalues;
    StepConfig sc{1.0, 1, Scheme::srk};

    std::vector<double> l1s, l2s, linfs, mvals;
    json runs = json::array();
    for (std::size_t i = 0; i < ms.size(); ++i) {
        double l1 = 0, l2 = 0, linf = 0;
        int unmatched = 0;
        for (int j = 0; j < np; ++j) {
            RngStream rng(c.seed, derive_stream(c.stream_id, 1 + i) + static_cast<std::uint64_t>(j));
            auto data = assemble_renormalized_pairs(c.model, pts[static_cast<std::size_t>(j)], ms[i], sc, rng);
            DmdResult r = dmd_rrr(data, c.dmd);
            auto mt = match_eigenvalues(r.eigenvalues(), ref);
            unmatched += static_cast<int>(mt.unmatched_reference.size());
            l1 += mt.l1;
            l2 += mt.l2;
            linf += mt.linf;
            if (j == 0) {
                add_rows(res, "m=" + std::to_string(ms[i]), r, c.dmd.residual_threshold);
                if (i + 1 == ms.size()) {
                    auto g = initial_points_grid({-1.0, -1.0}, {1.0, 1.0}, 121);
                    auto o = obs_kind(ObservableKind::full_state);
                    o.dim = 2;
                    for (int k = 0; k < static_cast<int>(r.pairs.size()); ++k)
                        add_dictionary_block(res, "m=" + std::to_string(ms[i]), r, k, o, g);
                }
            }
        }
        l1 /= np;
        l2 /= np;
        linf /= np;
        l1s.push_back(l1);
        l2s.push_back(l2);
        linfs.push_back(linf);
        mvals.push_back(ms[i]);
        runs.push_back({{"m", ms[i]}, {"mean_l1", l1}, {"mean_l2", l2}, {"mean_linf", linf},
                        {"unmatched_reference", unmatched}});
    }
    res.details["runs"] = runs;
    res.details["reference"] = {cj(ref[0]), cj(ref[1])};
    auto ratio = [](const std::vector<double>& v) {
        double worst = 0.0;
        for (std::size_t i = 1; i < v.size(); ++i) worst = std::max(worst, v[i] / v[i - 1]);
        return worst;
    };
    res.checks.push_back(make_check("l1_monotone_decrease", ratio(l1s), "<", 1.0, 0.0,
                                    "largest ratio of consecutive mean errors"));
    res.checks.push_back(make_check("l2_monotone_decrease", ratio(l2s), "<", 1.0));
    res.checks.push_back(make_check("linf_monotone_decrease", ratio(linfs), "<", 1.0));
    const auto& T = P.at("tolerances");
    double slope = loglog_slope(mvals, l2s);
    res.details["l2_loglog_slope"] = slope;
    res.checks.push_back(make_check("l2_loglog_slope", slope, "in", get<double>(T, "slope_lo"),
                                    get<double>(T, "slope_hi")));
    res.coord_names = {"x1", "x2"};
    RngStream rng(c.seed, derive_stream(c.stream_id, 15));
    res.sample_path = integrate(c.model, pts.front(), sc, 50, rng);
    return res;
}

// --------------------------------------------------------- switching linear

ExperimentResult run_switching(const ExperimentConfig& c) {
    ExperimentResult res;
    const auto& P = c.params;
    auto base = std::get<SwitchingLinear>(c.model);
    auto p1s = get<std::vector<double>>(P, "p1_values");
    const double dt = get<double>(P, "dt"), tmax = get<double>(P, "t_max");
    const int np = get<int>(P, "n_points"), N = get<int>(P, "N");
    const int R = get<int>(P, "replicates"), W = get<int>(P, "windows");
    require(R >= 2 && W >= 2, "switching-linear: need replicates >= 2 and windows >= 2");
    NoiseSharing sharing = sharing_from_name(get<std::string>(P, "sharing"));
    auto pts = initial_points_grid(get<std::vector<double>>(P, "box_lo"),
                                   get<std::vector<double>>(P, "box_hi"), np);
    const int K = static_cast<int>(std::floor(tmax / dt + 1e-9));
    require(K >= W, "switching-linear: t_max / dt must cover the windows");
    std::vector<int> lags(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) lags[static_cast<std::size_t>(k)] = k + 1;
    StepConfig sc{dt, 1, Scheme::srk};
    auto obs = obs_kind(ObservableKind::full_state);
    obs.dim = 2;
    const double rel_tol = get<double>(P.at("tolerances"), "relative_error");
    const std::uint64_t rep_stride =
        sharing == NoiseSharing::common ? static_cast<std::uint64_t>(N)
                                        : static_cast<std::uint64_t>(N) * static_cast<std::uint64_t>(np);

    json per_p = json::array();
    for (std::size_t ip = 0; ip < p1s.size(); ++ip) {
        SwitchingLinear m = base;
        m.p1 = p1s[ip];
        std::string tag = "p1=" + json(p1s[ip]).dump();
        // err[rep][k][sign]
        std::vector<std::vector<std::array<cplx, 2>>> err(static_cast<std::size_t>(R));
        double max_rel = 0.0;
        json series = json::array();
        for (int rep = 0; rep < R; ++rep) {
            std::uint64_t sb = derive_stream(c.stream_id, ip) + static_cast<std::uint64_t>(rep) * rep_stride;
            auto snaps = assemble_ensemble_pairs_lags(m, pts, obs, lags, sc, N, c.seed, sb, sharing);
            err[static_cast<std::size_t>(rep)].resize(static_cast<std::size_t>(K));
            for (int k = 0; k < K; ++k) {
                const double t = (k + 1) * dt;
                DmdResult r = dmd_rrr(snaps[static_cast<std::size_t>(k)], c.dmd);
                auto ev = switching_linear_spectrum(m.a1, m.a2, m.b, m.p1, m.switch_dt, t);
                auto mt = match_eigenvalues(r.eigenvalues(), {ev.plus, ev.minus});
                std::array<cplx, 2> e{cplx(kInf, 0.0), cplx(kInf, 0.0)};
                for (const auto& mp : mt.matched)
                    e[static_cast<std::size_t>(mp.reference_index)] =
                        (mp.computed - mp.reference) / std::abs(mp.reference);
                err[static_cast<std::size_t>(rep)][static_cast<std::size_t>(k)] = e;
                if (rep == 0) {
                    max_rel = std::max({max_rel, std::abs(e[0]), std::abs(e[1])});
                    add_rows(res, tag + ",t=" + json(t).dump(), r, c.dmd.residual_threshold);
                    series.push_back({{"t", t}, {"clt_valid", ev.clt_valid},
                                      {"reference_plus", cj(ev.plus)},
                                      {"rel_error_plus", std::abs(e[0])},
                                      {"rel_error_minus", std::abs(e[1])}});
                    if (k + 1 == K && ip == p1s.size() / 2) {
                        auto g = initial_points_grid({-1.0, -1.0}, {1.0, 1.0}, 121);
                        for (int q = 0; q < static_cast<int>(r.pairs.size()); ++q)
                            add_dictionary_block(res, tag + ",t=" + json(t).dump(), r, q, obs, g);
                    }
                }
            }
        }
        // variance over replicates of the normalized error, averaged over both eigenvalues
        std::vector<double> var(static_cast<std::size_t>(K), 0.0);
        for (int k = 0; k < K; ++k)
            for (int s = 0; s < 2; ++s) {
                cplx mean = 0.0;
                for (int rep = 0; rep < R; ++rep) mean += err[static_cast<std::size_t>(rep)][static_cast<std::size_t>(k)][static_cast<std::size_t>(s)];
                mean /= static_cast<double>(R);
                double v = 0.0;
                for (int rep = 0; rep < R; ++rep)
                    v += std::norm(err[static_cast<std::size_t>(rep)][static_cast<std::size_t>(k)][static_cast<std::size_t>(s)] - mean);
                var[static_cast<std::size_t>(k)] += 0.5 * v / (R - 1);
            }
        std::vector<double> wvar;
        for (int w = 0; w < W; ++w) {
            int lo = w * K / W, hi = (w + 1) * K / W;
            double s = 0.0;
            for (int k = lo; k < hi; ++k) s += var[static_cast<std::size_t>(k)];
            wvar.push_back(s / (hi - lo));
        }
        double min_step = kInf;
        for (std::size_t w = 1; w < wvar.size(); ++w) min_step = std::min(min_step, wvar[w] - wvar[w - 1]);
        per_p.push_back({{"p1", p1s[ip]}, {"max_relative_error", max_rel}, {"windowed_variance", wvar},
                         {"series", series}});
        res.checks.push_back(make_check(tag + "_max_relative_error", max_rel, "<", rel_tol, 0.0,
                                        "t <= " + json(tmax).dump()));
        res.checks.push_back(make_check(tag + "_windowed_variance_min_increment", min_step, ">=", 0.0,
                                        0.0, std::to_string(R) + " replicates, " + std::to_string(W) + " windows"));
    }
    res.details["per_p1"] = per_p;
    res.coord_names = {"x1", "x2"};
    res.sample_path = sample_path(base, pts.front(), sc, K, c);
    return res;
}

// ------------------------------------------------------------- OU / pitchfork

struct ScalarSdeRun {
    SnapshotMatrices data;
    DmdResult result;
    ObservableSet obs;
    std::vector<State> points;
};

ObservableSet scalar_dictionary(const ModelSpec& model, const json& run) {
    ObservableSet o;
    const std::string kind = get<std::string>(run, "observable");
    o.kind = observable_kind_from_name(kind);
    o.min_degree = get<int>(run, "min_degree");
    o.max_degree = get<int>(run, "max_degree");
    if (auto* ou = std::get_if<OuLinear>(&model)) {
        o.mu = ou->mu;
        o.alpha = std::sqrt(std::abs(ou->mu) / ou->sigma);
    }
    if (auto* pf = std::get_if<Pitchfork>(&model)) o.mu = pf->mu;
    o.validate();
    return o;
}

ScalarSdeRun ensemble_run(const ExperimentConfig& c, const json& run, std::uint64_t stream) {
    ScalarSdeRun out;
    out.obs = scalar_dictionary(c.model, run);
    out.points = grid_1d(get<double>(run, "lo"), get<double>(run, "hi"), get<int>(run, "n_points"));
    out.data = assemble_ensemble_pairs(c.model, out.points, out.obs, get<int>(run, "k"), step_from(run),
                                       get<int>(run, "N"), c.seed, stream,
                                       sharing_from_name(get<std::string>(run, "sharing")));
    out.result = dmd_rrr(out.data, dmd_for(c, run));
    return out;
}

ScalarSdeRun time_delayed_run(const ExperimentConfig& c, const json& run, std::uint64_t stream) {
    ScalarSdeRun out;
    out.obs = scalar_dictionary(c.model, run);
    out.data = assemble_time_delayed(c.model, make_state({get<double>(run, "x0")}), out.obs,
                                     get<int>(run, "m"), step_from(run), get<int>(run, "N"), c.seed, stream);
    out.result = dmd_rrr(out.data, dmd_for(c, run));
    return out;
}

double abs_correlation(const CVec& a, const CVec& b) {
    return std::abs(a.dot(b)) / (a.norm() * b.norm());
}

ExperimentResult run_ou(const ExperimentConfig& c) {
    ExperimentResult res;
    const auto& P = c.params;
    auto ou = std::get<OuLinear>(c.model);
    const auto& T = P.at("tolerances");
    const int n_eigs = get<int>(P, "n_eigs");
    std::vector<cplx> refs;
    for (int n = 1; n <= n_eigs; ++n) refs.emplace_back(n * ou.mu, 0.0);

    auto ens = ensemble_run(c, P.at("ensemble"), derive_stream(c.stream_id, 0));
    add_rows(res, "ensemble", ens.result, dmd_for(c, P.at("ensemble")).residual_threshold);
    auto mt = match_eigenvalues(ens.result.continuous_eigenvalues(), refs);
    res.details["ensemble"] = {{"rank_r", ens.result.rank_r}, {"match", match_to_json(mt)}};
    res.checks.push_back(make_check("ensemble_leading_linf", match_linf_or_inf(mt), "<",
                                    get<double>(T, "eigenvalue"), 0.0,
                                    "n mu for n = 1.." + std::to_string(n_eigs)));

    const double alpha = std::sqrt(std::abs(ou.mu) / ou.sigma);
    const int hmax = get<int>(P, "hermite_max");
    json corr = json::array();
    for (const auto& mp : mt.matched) {
        int n = mp.reference_index + 1;
        int idx = find_pair(ens.result, mp.computed, true);
        if (idx < 0) continue;
        add_dictionary_block(res, "ensemble", ens.result, idx, ens.obs, ens.points);
        if (n > hmax) continue;
        CVec phi = dictionary_eigenfunction(ens.result.pairs[static_cast<std::size_t>(idx)], ens.obs, ens.points);
        CVec h(phi.size());
        for (std::size_t i = 0; i < ens.points.size(); ++i)
            h(static_cast<Eigen::Index>(i)) = hermite(n, alpha * ens.points[i](0));
        double r = abs_correlation(phi, h);
        corr.push_back({{"n", n}, {"correlation", r}});
        res.checks.push_back(make_check("hermite_correlation_n=" + std::to_string(n), r, ">",
                                        get<double>(T, "hermite_correlation")));
    }
    for (int n = 1; n <= hmax; ++n) {
        bool found = false;
        for (const auto& e : corr) found = found || e["n"].get<int>() == n;
        if (!found)
            res.checks.push_back(make_check("hermite_correlation_n=" + std::to_string(n), 0.0, ">",
                                            get<double>(T, "hermite_correlation"), 0.0, "eigenvalue not matched"));
    }
    res.details["hermite_correlation"] = corr;

    auto td = time_delayed_run(c, P.at("time_delayed"), derive_stream(c.stream_id, 1));
    add_rows(res, "time_delayed", td.result, dmd_for(c, P.at("time_delayed")).residual_threshold);
    int rec = count_recovered(td.result.continuous_eigenvalues(), refs, get<double>(T, "eigenvalue"));
    res.details["time_delayed"] = {{"rank_r", td.result.rank_r}, {"recovered", rec},
                                   {"match", match_to_json(match_eigenvalues(td.result.continuous_eigenvalues(), refs))}};
    res.checks.push_back(make_check("time_delayed_recovered", rec, ">=",
                                    get<double>(T, "time_delayed_min_recovered"), 0.0,
                                    "eigenvalues within tolerance of n mu"));
    res.coord_names = {"x"};
    res.sample_path = sample_path(c.model, make_state({get<double>(P.at("time_delayed"), "x0")}),
                                  step_from(P.at("time_delayed")), 200, c);
    return res;
}

FdSpectrum pitchfork_fd(const Pitchfork& pf, const json& fd, bool check_grid) {
    const double hw = get<double>(fd, "half_width");
    const double mu = pf.mu, s = pf.sigma;
    return kolmogorov_fd_spectrum([mu](double x) { return mu * x - x * x * x; },
                                  [s](double) { return s; }, -hw, hw, get<int>(fd, "grid_n"),
                                  get<int>(fd, "k_eigs"), Boundary::reflecting, check_grid);
}

ExperimentResult run_pitchfork(const ExperimentConfig& c) {
    ExperimentResult res;
    const auto& P = c.params;
    auto pf = std::get<Pitchfork>(c.model);
    const auto& T = P.at("tolerances");
    auto fd = pitchfork_fd(pf, P.at("fd"), true);
    const auto& fdev = fd.spectrum.eigenvalues;
    const int nl = get<int>(P, "n_leading");
    require(nl <= static_cast<int>(fdev.size()), "pitchfork: n_leading exceeds fd k_eigs");
    std::vector<cplx> lead(fdev.begin(), fdev.begin() + nl);
    json fdj = json::array();
    for (auto z : fdev) fdj.push_back(cj(z));
    res.details["fd_oracle"] = {{"eigenvalues", fdj}, {"grid_converged", fd.grid_converged},
                                {"max_relative_shift", fd.max_relative_shift}};

    auto ens = ensemble_run(c, P.at("ensemble"), derive_stream(c.stream_id, 0));
    add_rows(res, "ensemble", ens.result, dmd_for(c, P.at("ensemble")).residual_threshold);
    auto mt = match_eigenvalues(ens.result.continuous_eigenvalues(), lead);
    res.details["ensemble"] = {{"rank_r", ens.result.rank_r}, {"match", match_to_json(mt)}};
    res.checks.push_back(make_check("ensemble_leading_linf", match_linf_or_inf(mt), "<",
                                    get<double>(T, "eigenvalue"), 0.0,
                                    "leading " + std::to_string(nl) + " finite-difference eigenvalues"));
    for (const auto& mp : mt.matched)
        add_dictionary_block(res, "ensemble", ens.result, find_pair(ens.result, mp.computed, true),
                             ens.obs, ens.points);

    auto td = time_delayed_run(c, P.at("time_delayed"), derive_stream(c.stream_id, 1));
    add_rows(res, "time_delayed", td.result, dmd_for(c, P.at("time_delayed")).residual_threshold);
    int rec = count_recovered(td.result.continuous_eigenvalues(), fdev, get<double>(T, "eigenvalue"));
    res.details["time_delayed"] = {{"rank_r", td.result.rank_r}, {"recovered", rec},
                                   {"match", match_to_json(match_eigenvalues(td.result.continuous_eigenvalues(), fdev))}};
    res.checks.push_back(make_check("time_delayed_recovered", rec, ">=",
                                    get<double>(T, "time_delayed_min_recovered")));
    res.coord_names = {"x"};
    res.sample_path = sample_path(c.model, make_state({get<double>(P.at("time_delayed"), "x0")}),
                                  step_from(P.at("time_delayed")), 200, c);
    return res;
}

// ------------------------------------------------------------ Hankel helpers

struct HankelRun {
    SnapshotMatrices data;
    DmdResult result;
};

HankelRun hankel_run(const ExperimentConfig& c, const ModelSpec& model, const State& x0,
                     const ObservableSet& obs, const json& run, std::uint64_t stream) {
    HankelSpec hs;
    hs.n_rows = get<int>(run, "n_rows");
    hs.m_cols = get<int>(run, "m_cols");
    hs.observable = obs;
    hs.averaging_N = get<int>(run, "N");
    hs.mode = hankel_mode_from_name(get<std::string>(run, "mode"));
    hs.sharing = sharing_from_name(get<std::string>(run, "sharing"));
    HankelRun out;
    out.data = assemble_stochastic_hankel(model, x0, hs, step_from(run), c.seed, stream);
    out.result = dmd_rrr(out.data, dmd_for(c, run));
    return out;
}

json hankel_run_json(const HankelRun& h, const std::string& mode) {
    json ev = json::array();
    for (const auto& p : h.result.pairs) ev.push_back({{"continuous", cj(p.continuous_lambda)}, {"residual", p.residual}});
    return {{"rank_r", h.result.rank_r}, {"retained", h.result.pairs.size()},
            {"rejected", h.result.rejected.size()}, {"mode", mode}, {"eigenvalues", ev}};
}

json hankel_defaults(int n_rows, int m_cols, int N, double dt, int substeps, const std::string& scheme,
                     const json& dmd) {
    json j = step_json(dt, substeps, scheme);
    j["n_rows"] = n_rows;
    j["m_cols"] = m_cols;
    j["N"] = N;
    j["mode"] = "averaged_trajectory";
    j["sharing"] = "common";
    j["dmd"] = dmd;
    return j;
}

// -------------------------------------------------------------- Stuart-Landau

ExperimentResult run_stuart_landau(const ExperimentConfig& c) {
    ExperimentResult res;
    const auto& P = c.params;
    auto sl = std::get<StuartLandau>(c.model);
    const auto& T = P.at("tolerances");
    ObservableSet obs = obs_kind(ObservableKind::stuart_landau_sum);
    obs.K = get<int>(P, "K");
    obs.beta = sl.beta;
    obs.delta = sl.delta;
    const std::string rr = get<std::string>(P, "radius_ref");
    obs.radius_ref = rr == "delta" ? RadiusRef::delta : RadiusRef::sqrt_delta;
    require(rr == "delta" || rr == "sqrt_delta", "stuart-landau: radius_ref must be delta or sqrt_delta");
    State x0 = state_from(P, "x0");
    const int nmax = get<int>(P, "n_max");
    const double w0 = sl.gamma - sl.beta * sl.delta;
    const double tol_im = get<double>(T, "imag");

    StuartLandau det = sl;
    det.eps = 0.0;
    std::vector<cplx> det_ref, sto_ref;
    const double dcoef = sl.eps * sl.eps * (1.0 + sl.beta * sl.beta) / (2.0 * sl.delta);
    for (int n = 1; n <= nmax; ++n) {
        det_ref.emplace_back(0.0, n * w0);
        sto_ref.emplace_back(-n * n * dcoef, n * w0);
    }

    auto imag_error = [&](const EigMatchReport& m) {
        if (!m.unmatched_reference.empty()) return kInf;
        double e = 0.0;
        for (const auto& mp : m.matched) e = std::max(e, std::abs(mp.computed.imag() - mp.reference.imag()));
        return e;
    };

    const json& dj = P.at("deterministic");
    auto dh = hankel_run(c, det, x0, obs, dj, derive_stream(c.stream_id, 0));
    add_rows(res, "deterministic", dh.result, dmd_for(c, dj).residual_threshold);
    auto dm = match_eigenvalues(dh.result.continuous_eigenvalues(), det_ref);
    res.details["deterministic"] = hankel_run_json(dh, get<std::string>(dj, "mode"));
    res.details["deterministic"]["match"] = match_to_json(dm);
    res.checks.push_back(make_check("deterministic_imag_max_error", imag_error(dm), "<", tol_im, 0.0,
                                    "n = 1.." + std::to_string(nmax)));

    const json& sj = P.at("stochastic");
    auto sh = hankel_run(c, sl, x0, obs, sj, derive_stream(c.stream_id, 1));
    add_rows(res, "stochastic", sh.result, dmd_for(c, sj).residual_threshold);
    auto sm = match_eigenvalues(sh.result.continuous_eigenvalues(), sto_ref);
    res.details["stochastic"] = hankel_run_json(sh, get<std::string>(sj, "mode"));
    res.details["stochastic"]["match"] = match_to_json(sm);
    res.checks.push_back(make_check("stochastic_imag_max_error", imag_error(sm), "<", tol_im, 0.0,
                                    "n = 1.." + std::to_string(nmax)));

    double max_re = -kInf, worst_factor = 1.0, worst_order = -kInf;
    if (!sm.unmatched_reference.empty()) max_re = worst_factor = worst_order = kInf;
    for (std::size_t i = 0; i < sm.matched.size(); ++i) {
        const auto& mp = sm.matched[i];
        max_re = std::max(max_re, mp.computed.real());
        double ratio = mp.computed.real() / mp.reference.real();
        worst_factor = std::max(worst_factor, ratio > 0.0 ? std::max(ratio, 1.0 / ratio) : kInf);
        if (i > 0) worst_order = std::max(worst_order, mp.computed.real() - sm.matched[i - 1].computed.real());
    }
    res.checks.push_back(make_check("stochastic_real_max", max_re, "<", 0.0, 0.0, "all real parts negative"));
    res.checks.push_back(make_check("stochastic_real_factor", worst_factor, "<=", get<double>(T, "real_factor"),
                                    0.0, "max(ratio, 1/ratio) against -n^2 eps^2 (1 + beta^2) / (2 delta)"));
    res.checks.push_back(make_check("stochastic_real_ordering", worst_order, "<", 0.0, 0.0,
                                    "Re lambda_{0,n+1} - Re lambda_{0,n}"));
    for (const auto& mp : sm.matched)
        add_hankel_block(res, "stochastic", sh.result, find_pair(sh.result, mp.computed, true));
    res.coord_names = {"t"};
    res.sample_path = sample_path(sl, x0, step_from(sj), 1000, c);
    return res;
}

// --------------------------------------------------------------- Van der Pol

State burn_in(const ModelSpec& det, const State& x0, double t_burn) {
    if (t_burn <= 0.0) return x0;
    const double h = 0.005;
    const int n = static_cast<int>(std::lround(t_burn / h));
    auto tr = integrate_rk4(det, x0, h, n);
    return tr.state(tr.size() - 1);
}

ExperimentResult run_van_der_pol(const ExperimentConfig& c) {
    ExperimentResult res;
    const auto& P = c.params;
    auto vdp = std::get<VanDerPol>(c.model);
    const auto& T = P.at("tolerances");
    ModelSpec det = deterministic_counterpart(c.model);
    State x0 = burn_in(det, state_from(P, "x0"), get<double>(P, "burn_in"));
    ObservableSet obs = obs_kind(ObservableKind::van_der_pol_combo);

    const json& dj = P.at("deterministic");
    auto dh = hankel_run(c, det, x0, obs, dj, derive_stream(c.stream_id, 0));
    DmdOptions dopt = dmd_for(c, dj);
    add_rows(res, "deterministic", dh.result, dopt.residual_threshold);
    auto ct = dh.result.continuous_eigenvalues();
    res.details["deterministic"] = hankel_run_json(dh, get<std::string>(dj, "mode"));

    double best = kInf, freq = 0.0;
    int best_idx = -1;
    for (std::size_t i = 0; i < ct.size(); ++i) {
        double d = std::abs(ct[i] - cplx(0.0, kVanDerPolOmega0));
        if (d < best) {
            best = d;
            freq = ct[i].imag();
            best_idx = static_cast<int>(i);
        }
    }
    double ferr = best_idx < 0 ? kInf : std::abs(freq - kVanDerPolOmega0);
    res.details["deterministic"]["base_frequency"] = freq;
    res.checks.push_back(make_check("deterministic_base_frequency_error", ferr, "<=",
                                    get<double>(T, "base_frequency"), 0.0,
                                    "reference " + json(kVanDerPolOmega0).dump()));
    double max_res = dh.result.pairs.empty() ? kInf : 0.0;
    for (const auto& p : dh.result.pairs) max_res = std::max(max_res, p.residual);
    res.checks.push_back(make_check("deterministic_max_residual", max_res, "<=", get<double>(T, "residual")));

    const double dt = get<double>(dj, "dt");
    const int kmax = static_cast<int>(std::ceil(kPi / (dt * kVanDerPolOmega0))) + 1;
    auto lattice = van_der_pol_lattice(vdp.mu, kVanDerPolOmega0, kmax);
    double worst = ct.empty() ? kInf : 0.0;
    for (cplx z : ct) {
        double d = kInf;
        for (cplx l : lattice) d = std::min(d, std::abs(z - l));
        worst = std::max(worst, d);
    }
    res.details["deterministic"]["max_lattice_distance"] = worst;
    res.checks.push_back(make_check("deterministic_lattice_distance", worst, "<",
                                    get<double>(T, "lattice"), 0.0,
                                    std::to_string(ct.size()) + " retained eigenvalues"));
    add_hankel_block(res, "deterministic", dh.result, best_idx);

    // Stochastic run: reported, no pass/fail criterion.
    const json& sj = P.at("stochastic");
    auto sh = hankel_run(c, c.model, x0, obs, sj, derive_stream(c.stream_id, 1));
    add_rows(res, "stochastic", sh.result, dmd_for(c, sj).residual_threshold);
    res.details["stochastic"] = hankel_run_json(sh, get<std::string>(sj, "mode"));
    res.coord_names = {"t"};
    res.sample_path = sample_path(c.model, x0, step_from(sj), 1000, c);
    return res;
}

// ------------------------------------------------------------ Lotka-Volterra

ExperimentResult run_lotka_volterra(const ExperimentConfig& c) {
    ExperimentResult res;
    const auto& P = c.params;
    ObservableSet obs = obs_kind(ObservableKind::state_sum);
    ModelSpec det = deterministic_counterpart(c.model);

    auto one = [&](const std::string& run, const ModelSpec& model, std::uint64_t stream) {
        const json& j = P.at(run);
        auto refv = get<std::vector<double>>(j, "reference");
        require(refv.size() == 2, "lotka-volterra: reference must be [re, im]");
        std::vector<cplx> refs{{refv[0], refv[1]}, {refv[0], -refv[1]}};
        auto h = hankel_run(c, model, state_from(j, "x0"), obs, j, stream);
        add_rows(res, run, h.result, dmd_for(c, j).residual_threshold);
        auto mt = match_eigenvalues(h.result.continuous_eigenvalues(), refs);
        res.details[run] = hankel_run_json(h, get<std::string>(j, "mode"));
        res.details[run]["match"] = match_to_json(mt);
        res.checks.push_back(make_check(run + "_principal_max_error", match_linf_or_inf(mt), "<",
                                        get<double>(j, "tolerance"), 0.0,
                                        "reference " + cj(refs[0]).dump() + " and conjugate"));
        for (const auto& mp : mt.matched)
            add_hankel_block(res, run, h.result, find_pair(h.result, mp.computed, true));
    };
    one("deterministic", det, derive_stream(c.stream_id, 0));
    one("stochastic", c.model, derive_stream(c.stream_id, 1));

    auto lv = std::get<LotkaVolterra>(c.model);
    json jac;
    for (bool shifted : {false, true}) {
        Eigen::EigenSolver<Eigen::Matrix2d> es(lv.jacobian_at(lv.equilibrium(shifted)));
        jac[shifted ? "shifted_equilibrium" : "equilibrium"] = cj(es.eigenvalues()(0));
    }
    res.details["jacobian_eigenvalues"] = jac;
    res.coord_names = {"t"};
    const json& sj = P.at("stochastic");
    res.sample_path = sample_path(c.model, state_from(sj, "x0"), step_from(sj), 1000, c);
    return res;
}

// ----------------------------------------------------------------- defaults

json tolerances_for(const std::string& name) {
    if (name == "rotation") return {{"stochastic_linf", 1e-3}, {"unit_circle", 1e-6}};
    if (name == "discrete-linear-sweep") return {{"slope_lo", -0.65}, {"slope_hi", -0.35}};
    if (name == "switching-linear") return {{"relative_error", 0.1}};
    if (name == "ou")
        return {{"eigenvalue", 1e-2}, {"hermite_correlation", 0.99}, {"time_delayed_min_recovered", 4}};
    if (name == "pitchfork") return {{"eigenvalue", 2e-2}, {"time_delayed_min_recovered", 3}};
    if (name == "stuart-landau") return {{"imag", 1e-2}, {"real_factor", 2.0}};
    if (name == "van-der-pol") return {{"base_frequency", 1e-3}, {"residual", 1e-3}, {"lattice", 5e-2}};
    return json::object();
}

ExperimentConfig make_default(const std::string& name) {
    ExperimentConfig c;
    c.name = name;
    json p;
    const json inf_dmd = dmd_json(1e-12, kInf);
    if (name == "rotation") {
        c.model = default_model(ModelKind::noisy_rotation);
        p = {{"n1", 150}, {"m", 5000}, {"x0", 0.0}, {"j_max", 10},
             {"stochastic", {{"dmd", inf_dmd}}},
             {"deterministic", {{"dmd", dmd_json(1e-12, 1e-3)}}}};
    } else if (name == "discrete-linear-sweep") {
        c.model = default_model(ModelKind::discrete_linear);
        p = {{"m_values", {100, 1000, 10000}}, {"n_points", 1000},
             {"box_lo", {0.0, 0.0}}, {"box_hi", {1.0, 1.0}}};
    } else if (name == "switching-linear") {
        c.model = default_model(ModelKind::switching_linear_rde);
        p = {{"p1_values", {0.25, 0.5, 0.75}}, {"dt", kPi / 60.0}, {"n_points", 100}, {"N", 100},
             {"box_lo", {-1.0, -1.0}}, {"box_hi", {1.0, 1.0}}, {"t_max", 5.0},
             {"replicates", 20}, {"windows", 3}, {"sharing", "common"}};
    } else if (name == "ou" || name == "pitchfork") {
        const bool ou = name == "ou";
        c.model = default_model(ou ? ModelKind::ou_linear_sde : ModelKind::scalar_pitchfork_sde);
        const std::string kind = ou ? "monomials" : "pitchfork_eigenfunctions";
        const int dmin = ou ? 1 : 0;
        json ens = step_json(0.01, 1, "srk");
        ens.update({{"observable", kind}, {"min_degree", dmin}, {"max_degree", 10}, {"n_points", 100},
                    {"lo", -1.0}, {"hi", 1.0}, {"k", 100}, {"N", 1000}, {"sharing", "common"},
                    {"dmd", inf_dmd}});
        json td = ou ? step_json(0.05, 5, "srk") : step_json(0.05, 50, "srk");
        td.update({{"observable", kind}, {"min_degree", dmin}, {"max_degree", 10},
                   {"x0", ou ? 30.0 : 1.0}, {"m", ou ? 1000 : 200}, {"N", ou ? 1000 : 10000},
                   {"dmd", inf_dmd}});
        p = {{"ensemble", ens}, {"time_delayed", td}};
        if (ou) {
            p["n_eigs"] = 10;
            p["hermite_max"] = 3;
        } else {
            p["n_leading"] = 5;
            p["fd"] = {{"half_width", 0.017}, {"grid_n", 2000}, {"k_eigs", 11}};
        }
    } else if (name == "stuart-landau") {
        StuartLandau sl;
        sl.eps = 0.03;
        c.model = sl;
        p = {{"K", 5}, {"radius_ref", "sqrt_delta"}, {"x0", {std::sqrt(sl.delta), 0.0}}, {"n_max", 5},
             {"deterministic", hankel_defaults(100, 500, 1, 0.1, 10, "srk", dmd_json(1e-12, 1e-3))},
             {"stochastic", hankel_defaults(100, 500, 4000, 0.1, 10, "srk", inf_dmd)}};
    } else if (name == "van-der-pol") {
        c.model = default_model(ModelKind::van_der_pol);
        p = {{"x0", {2.0, 0.0}}, {"burn_in", 200.0},
             {"deterministic", hankel_defaults(250, 250, 1, 0.1, 20, "rk4", dmd_json(1e-12, 1e-3))},
             {"stochastic", hankel_defaults(250, 250, 100, 0.1, 10, "srk", dmd_json(1e-12, 1e-3))}};
    } else if (name == "lotka-volterra") {
        LotkaVolterra lv;
        lv.sigma1 = lv.sigma2 = 0.05;
        c.model = lv;
        json d = hankel_defaults(250, 100, 1, 0.5, 100, "rk4", dmd_json(1e-12, 1e-3));
        d.update({{"x0", {4.0, 2.0}}, {"reference", {-0.02500799, 0.863524}}, {"tolerance", 1e-4}});
        json s = hankel_defaults(750, 250, 1000, 0.05, 5, "srk", dmd_json(1e-3, kInf));
        s.update({{"x0", {4.0, 2.0}}, {"reference", {-0.02509, 0.86363}}, {"tolerance", 5e-3}});
        p = {{"deterministic", d}, {"stochastic", s}};
    } else {
        throw InvalidArgument("unknown experiment '" + name + "' (see `koopman-rds list`)");
    }
    json t = tolerances_for(name);
    if (!t.empty()) p["tolerances"] = t;
    c.params = p;
    return c;
}

void overlay(json& base, const json& over, const std::string& path) {
    require(over.is_object(), "config: '" + path + "' must be an object");
    for (auto it = over.begin(); it != over.end(); ++it) {
        const std::string key = path.empty() ? it.key() : path + "." + it.key();
        require(base.contains(it.key()), "config: unknown key '" + key + "'");
        json& b = base[it.key()];
        if (b.is_object() && it.value().is_object() && it.key() != "dmd")
            overlay(b, it.value(), key);
        else if (it.key() == "dmd")
            b = dmd_options_to_json(dmd_options_from_json(it.value(), dmd_options_from_json(b)));
        else
            b = it.value();
    }
}

void write_complex(std::ostream& os, cplx z) { os << ',' << z.real() << ',' << z.imag(); }

std::string csv_comment(const ExperimentResult& r) {
    std::ostringstream os;
    os << "# experiment=" << r.config.name << " seed=" << r.config.seed
       << " stream_id=" << r.config.stream_id << " schema_version=" << kSchemaVersion;
    return os.str();
}

} // namespace

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names = {
        "rotation", "discrete-linear-sweep", "switching-linear", "ou",
        "pitchfork", "stuart-landau", "van-der-pol", "lotka-volterra"};
    return names;
}

bool is_experiment(const std::string& name) {
    const auto& n = experiment_names();
    return std::find(n.begin(), n.end(), name) != n.end();
}

ExperimentConfig default_config(const std::string& name) { return make_default(name); }

json config_to_json(const ExperimentConfig& c) {
    return {{"schema_version", kSchemaVersion}, {"experiment", c.name}, {"seed", c.seed},
            {"stream_id", c.stream_id}, {"model", model_to_json(c.model)},
            {"dmd", dmd_options_to_json(c.dmd)}, {"params", c.params}, {"out_dir", c.out_dir}};
}

ExperimentConfig config_from_json(const json& in, const std::string& name) {
    require(in.is_object(), "config must be a JSON object");
    const json& j = in.contains("config") && in.at("config").is_object() ? in.at("config") : in;
    std::string exp = name;
    if (j.contains("experiment")) {
        auto named = j.at("experiment").get<std::string>();
        require(exp.empty() || exp == named,
                "config is for experiment '" + named + "', not '" + exp + "'");
        exp = named;
    }
    require(!exp.empty(), "config does not name an experiment");
    try {
        ExperimentConfig c = make_default(exp);
        for (auto it = j.begin(); it != j.end(); ++it) {
            const std::string& k = it.key();
            if (k == "schema_version") {
                require(it.value().get<int>() == kSchemaVersion, "config: unsupported schema_version");
            } else if (k == "experiment") {
            } else if (k == "seed") {
                c.seed = it.value().get<std::uint64_t>();
            } else if (k == "stream_id") {
                c.stream_id = it.value().get<std::uint64_t>();
            } else if (k == "model") {
                json mj = model_to_json(c.model);
                const json& v = it.value();
                require(v.is_object(), "config: 'model' must be an object");
                if (v.contains("kind"))
                    require(v.at("kind") == mj.at("kind"),
                            "config: experiment '" + exp + "' requires model kind " + mj.at("kind").get<std::string>());
                if (v.contains("params")) {
                    require(v.at("params").is_object(), "config: model params must be an object");
                    mj["params"].update(v.at("params"));
                }
                c.model = model_from_json(mj);
            } else if (k == "dmd") {
                c.dmd = dmd_options_from_json(it.value(), c.dmd);
            } else if (k == "params") {
                overlay(c.params, it.value(), "params");
            } else if (k == "out_dir") {
                c.out_dir = it.value().get<std::string>();
            } else {
                throw InvalidArgument("config: unknown key '" + k + "'");
            }
        }
        return c;
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("config: ") + e.what());
    }
}

EigMatchReport match_eigenvalues(const std::vector<cplx>& computed, const std::vector<cplx>& reference) {
    struct Cand {
        double d;
        std::size_t ci, ri;
    };
    std::vector<Cand> cands;
    cands.reserve(computed.size() * reference.size());
    for (std::size_t i = 0; i < computed.size(); ++i)
        for (std::size_t j = 0; j < reference.size(); ++j)
            cands.push_back({std::abs(computed[i] - reference[j]), i, j});
    std::stable_sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
        if (a.d != b.d) return a.d < b.d;
        if (a.ri != b.ri) return a.ri < b.ri;
        return a.ci < b.ci;
    });
    std::vector<char> cu(computed.size(), 0), ru(reference.size(), 0);
    std::vector<MatchedPair> by_ref(reference.size());
    for (const auto& cd : cands) {
        if (cu[cd.ci] || ru[cd.ri]) continue;
        cu[cd.ci] = ru[cd.ri] = 1;
        by_ref[cd.ri] = {computed[cd.ci], reference[cd.ri], cd.d, static_cast<int>(cd.ri)};
    }
    EigMatchReport r;
    double s2 = 0.0;
    for (std::size_t j = 0; j < reference.size(); ++j) {
        if (!ru[j]) {
            r.unmatched_reference.push_back(reference[j]);
            continue;
        }
        r.matched.push_back(by_ref[j]);
        r.l1 += by_ref[j].error;
        s2 += by_ref[j].error * by_ref[j].error;
        r.linf = std::max(r.linf, by_ref[j].error);
    }
    r.l2 = std::sqrt(s2);
    for (std::size_t i = 0; i < computed.size(); ++i)
        if (!cu[i]) r.unmatched_computed.push_back(computed[i]);
    return r;
}

json match_to_json(const EigMatchReport& r) {
    json m = json::array();
    for (const auto& p : r.matched)
        m.push_back({{"computed", cj(p.computed)}, {"reference", cj(p.reference)}, {"error", p.error},
                     {"reference_index", p.reference_index}});
    json ur = json::array();
    for (auto z : r.unmatched_reference) ur.push_back(cj(z));
    return {{"matched", m}, {"l1", r.l1}, {"l2", r.l2}, {"linf", r.linf},
            {"unmatched_computed", r.unmatched_computed.size()}, {"unmatched_reference", ur}};
}

Check make_check(std::string name, double value, std::string relation, double bound, double bound_hi,
                 std::string detail) {
    Check c{std::move(name), value, std::move(relation), bound, bound_hi, false, std::move(detail)};
    if (c.relation == "<") c.passed = value < bound;
    else if (c.relation == "<=") c.passed = value <= bound;
    else if (c.relation == ">") c.passed = value > bound;
    else if (c.relation == ">=") c.passed = value >= bound;
    else if (c.relation == "in") c.passed = value >= bound && value <= bound_hi;
    else throw InvalidArgument("check: unknown relation '" + c.relation + "'");
    return c;
}

bool ExperimentResult::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
    require(is_experiment(config.name), "unknown experiment '" + config.name + "'");
    config.dmd.validate();
    auto t0 = std::chrono::steady_clock::now();
    ExperimentResult r;
    try {
        const auto& n = config.name;
        if (n == "rotation") r = run_rotation(config);
        else if (n == "discrete-linear-sweep") r = run_discrete_linear(config);
        else if (n == "switching-linear") r = run_switching(config);
        else if (n == "ou") r = run_ou(config);
        else if (n == "pitchfork") r = run_pitchfork(config);
        else if (n == "stuart-landau") r = run_stuart_landau(config);
        else if (n == "van-der-pol") r = run_van_der_pol(config);
        else r = run_lotka_volterra(config);
    } catch (const json::exception& e) {
        throw InvalidArgument(config.name + ": bad parameter: " + e.what());
    } catch (const IntegrationDiverged& e) {
        throw IntegrationDiverged(config.name + ": " + e.what(), e.step, e.path);
    } catch (const InvalidArgument& e) {
        throw InvalidArgument(config.name + ": " + e.what());
    } catch (const DegenerateData& e) {
        throw DegenerateData(config.name + ": " + e.what());
    } catch (const NumericalError& e) {
        throw NumericalError(config.name + ": " + e.what());
    } catch (const Unsupported& e) {
        throw Unsupported(config.name + ": " + e.what());
    }
    r.config = config;
    r.runtime_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

json report_json(const ExperimentResult& r) {
    json checks = json::array();
    for (const auto& c : r.checks) {
        json cj_ = {{"name", c.name}, {"value", c.value}, {"relation", c.relation},
                    {"bound", c.bound}, {"passed", c.passed}};
        if (c.relation == "in") cj_["bound_hi"] = c.bound_hi;
        if (!c.detail.empty()) cj_["detail"] = c.detail;
        if (!std::isfinite(c.value)) cj_["value"] = c.value > 0 ? "inf" : "-inf";
        checks.push_back(cj_);
    }
    return {{"schema_version", kSchemaVersion}, {"experiment", r.config.name}, {"seed", r.config.seed},
            {"stream_id", r.config.stream_id}, {"passed", r.passed()}, {"checks", checks},
            {"details", r.details}};
}

json metadata_json(const ExperimentResult& r) {
    auto now = std::chrono::system_clock::now();
    auto secs = std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
    return {{"schema_version", kSchemaVersion}, {"experiment", r.config.name}, {"seed", r.config.seed},
            {"stream_id", r.config.stream_id}, {"config", config_to_json(r.config)},
            {"created_unix", secs}, {"runtime_seconds", r.runtime_seconds},
            {"files", {"eigenvalues.csv", "eigenfunctions.csv", "trajectory.csv", "trajectory.json",
                       "report.json"}}};
}

void write_trajectory_csv(const Trajectory& t, const std::string& path, const json& extra) {
    std::ofstream os(path);
    if (!os) throw InvalidArgument("cannot write " + path);
    os.precision(17);
    os << "t";
    for (int d = 0; d < t.dim(); ++d) os << ",x" << d + 1;
    os << '\n';
    for (int k = 0; k < t.size(); ++k) {
        os << t.times[static_cast<std::size_t>(k)];
        for (int d = 0; d < t.dim(); ++d) os << ',' << t.states(d, k);
        os << '\n';
    }
    json side = extra;
    side["schema_version"] = kSchemaVersion;
    side["seed"] = t.seed;
    side["stream_id"] = t.stream_id;
    side["columns"] = json::array({"t"});
    for (int d = 0; d < t.dim(); ++d) side["columns"].push_back("x" + std::to_string(d + 1));
    side["length"] = t.size();
    std::string sp = path.substr(0, path.size() >= 4 && path.ends_with(".csv") ? path.size() - 4 : path.size()) + ".json";
    std::ofstream js(sp);
    if (!js) throw InvalidArgument("cannot write " + sp);
    js << side.dump(2) << '\n';
}

void write_artifacts(const ExperimentResult& r, const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw InvalidArgument("cannot create output directory " + dir + ": " + ec.message());
    const std::string head = csv_comment(r);
    {
        std::ofstream os(fs::path(dir) / "eigenvalues.csv");
        if (!os) throw InvalidArgument("cannot write eigenvalues.csv in " + dir);
        os.precision(17);
        os << head << '\n'
           << "run,index,lambda_re,lambda_im,continuous_re,continuous_im,residual,residual_threshold\n";
        for (const auto& e : r.eigenvalues) {
            os << '"' << e.run << '"' << ',' << e.index;
            write_complex(os, e.lambda);
            write_complex(os, e.continuous);
            os << ',' << e.residual << ',' << e.threshold << '\n';
        }
    }
    {
        std::ofstream os(fs::path(dir) / "eigenfunctions.csv");
        if (!os) throw InvalidArgument("cannot write eigenfunctions.csv in " + dir);
        os.precision(17);
        os << head << '\n' << "run,pair,lambda_re,lambda_im";
        for (const auto& n : r.coord_names) os << ',' << n;
        os << ",value_re,value_im\n";
        for (const auto& b : r.eigenfunctions)
            for (Eigen::Index i = 0; i < b.values.size(); ++i) {
                os << '"' << b.run << '"' << ',' << b.pair;
                write_complex(os, b.lambda);
                for (Eigen::Index k = 0; k < b.coords.cols(); ++k) os << ',' << b.coords(i, k);
                write_complex(os, b.values(i));
                os << '\n';
            }
    }
    if (r.sample_path.size() > 0)
        write_trajectory_csv(r.sample_path, (fs::path(dir) / "trajectory.csv").string(),
                             {{"experiment", r.config.name}, {"model", model_to_json(r.config.model)}});
    {
        std::ofstream os(fs::path(dir) / "report.json");
        os << report_json(r).dump(2) << '\n';
    }
    {
        std::ofstream os(fs::path(dir) / "metadata.json");
        os << metadata_json(r).dump(2) << '\n';
    }
}

json experiment_oracle(const ExperimentConfig& c) {
    json out = {{"schema_version", kSchemaVersion}, {"experiment", c.name},
                {"model", model_to_json(c.model)}};
    const auto& P = c.params;
    const auto& n = c.name;
    if (n == "rotation") {
        auto m = std::get<NoisyRotation>(c.model);
        out["spectrum"] = spectrum_to_json(rotation_spectrum(m.theta, m.delta, get<int>(P, "j_max")));
    } else if (n == "discrete-linear-sweep") {
        auto m = std::get<DiscreteLinear>(c.model);
        out["spectrum"] = spectrum_to_json(discrete_linear_spectrum(m.distribution(), 1));
    } else if (n == "switching-linear") {
        auto m = std::get<SwitchingLinear>(c.model);
        json rows = json::array();
        for (double p1 : get<std::vector<double>>(P, "p1_values"))
            for (int i = 1; i <= 10; ++i) {
                double t = 0.5 * i;
                auto e = switching_linear_spectrum(m.a1, m.a2, m.b, p1, m.switch_dt, t);
                rows.push_back({{"p1", p1}, {"t", t}, {"plus", cj(e.plus)}, {"minus", cj(e.minus)},
                                {"clt_valid", e.clt_valid}});
            }
        out["eigenvalues"] = rows;
    } else if (n == "pitchfork") {
        out["spectrum"] = spectrum_to_json(sde_spectra(c.model, 10));
        auto fd = pitchfork_fd(std::get<Pitchfork>(c.model), P.at("fd"), false);
        out["fd_spectrum"] = spectrum_to_json(fd.spectrum);
    } else if (n == "lotka-volterra") {
        out["spectrum"] = spectrum_to_json(sde_spectra(c.model, 1));
        out["deterministic_spectrum"] = spectrum_to_json(sde_spectra(deterministic_counterpart(c.model), 1));
        out["published"] = {{"deterministic", P.at("deterministic").at("reference")},
                            {"stochastic", P.at("stochastic").at("reference")}};
    } else {
        out["spectrum"] = spectrum_to_json(sde_spectra(c.model, n == "van-der-pol" ? 3 : 5));
    }
    return out;
}

ExitCode exit_code_for(const Error& e) {
    switch (e.kind()) {
    case ErrorKind::invalid_argument:
    case ErrorKind::unsupported: return exit_usage;
    default: return exit_numerical;
    }
}

} // namespace krds
