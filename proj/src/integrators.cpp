#include "krds/integrators.hpp"

#include <cmath>
#include <sstream>

namespace krds {

namespace {

template <class... Ts> struct overloaded : Ts... { using Ts::operator()...; };

template <class M> constexpr bool additive_noise() {
    return std::is_same_v<M, OuLinear> || std::is_same_v<M, Pitchfork> ||
           std::is_same_v<M, VanDerPol>;
}

template <class M> State em_step(const M& m, const State& x, double h, const double* dW) {
    DiffMat B = m.diffusion(x);
    State y = x + m.drift(x) * h;
    for (int j = 0; j < M::noise_dim; ++j) y += B.col(j) * dW[j];
    return y;
}

template <class M> State srk_step(const M& m, const State& x, double h, const double* dW) {
    const State a = m.drift(x);
    const DiffMat B = m.diffusion(x);
    State noise = State::Zero(x.size());
    for (int j = 0; j < M::noise_dim; ++j) noise += B.col(j) * dW[j];
    const State xa = x + a * h;
    State y = x + 0.5 * (a + m.drift(State(xa + noise))) * h + noise;
    if constexpr (!additive_noise<M>()) {
        const double sh = std::sqrt(h);
        for (int j = 0; j < M::noise_dim; ++j) {
            State ups = xa + B.col(j) * sh;
            y += (m.diffusion(ups).col(j) - B.col(j)) * ((dW[j] * dW[j] - h) / (2.0 * sh));
        }
    }
    return y;
}

template <class M> State rk4_step(const M& m, const State& x, double h) {
    State k1 = m.drift(x);
    State k2 = m.drift(State(x + 0.5 * h * k1));
    State k3 = m.drift(State(x + 0.5 * h * k2));
    State k4 = m.drift(State(x + h * k3));
    return x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

[[noreturn]] void diverged(const ModelSpec& m, long step, const State& x) {
    std::ostringstream os;
    os << kind_name(kind_of(m)) << ": integration diverged or left the domain at step " << step
       << " (state";
    for (int i = 0; i < x.size(); ++i) os << ' ' << x(i);
    os << ')';
    throw IntegrationDiverged(os.str(), step);
}

} // namespace

std::string scheme_name(Scheme s) {
    switch (s) {
    case Scheme::euler_maruyama: return "euler_maruyama";
    case Scheme::srk: return "srk";
    case Scheme::rk4: return "rk4";
    }
    return "?";
}

Scheme scheme_from_name(const std::string& name) {
    if (name == "euler_maruyama" || name == "em") return Scheme::euler_maruyama;
    if (name == "srk") return Scheme::srk;
    if (name == "rk4") return Scheme::rk4;
    throw InvalidArgument("unknown integration scheme '" + name + "'");
}

void StepConfig::validate() const {
    require(dt > 0.0 && std::isfinite(dt), "step config: dt must be positive");
    require(substeps >= 1, "step config: substeps must be >= 1");
}

Propagator::Propagator(ModelSpec model, StepConfig cfg) : model_(std::move(model)), cfg_(cfg) {
    cfg_.validate();
    if (cfg_.scheme == Scheme::rk4 && !is_discrete(model_))
        require(is_deterministic(model_) || std::holds_alternative<SwitchingLinear>(model_),
                "rk4 scheme requires a zero-noise model");
    if (auto* s = std::get_if<SwitchingLinear>(&model_)) {
        require(s->switch_dt > 0.0, "switching model: switch_dt must be positive");
        double ratio = s->switch_dt / cfg_.h();
        long k = std::lround(ratio);
        require(k >= 1 && std::abs(ratio - static_cast<double>(k)) <= 1e-9 * ratio,
                "switching model: step must divide switch_dt");
        switch_every_ = k;
        s->distribution().validate();
    }
    if (auto* d = std::get_if<DiscreteLinear>(&model_)) d->distribution().validate();
}

void Propagator::advance(PathCursor& c, int n, RngStream& rng) const {
    require(n >= 0, "advance: negative step count");
    const double h = cfg_.h();
    const int sub = cfg_.substeps;
    std::visit(
        overloaded{
            [&](const NoisyRotation& m) {
                for (int k = 0; k < n; ++k) {
                    double draw = m.delta * (rng.uniform() - 0.5);
                    c.x(0) = m.step(c.x(0), draw);
                    ++c.step;
                }
            },
            [&](const DiscreteLinear& m) {
                auto dist = m.distribution();
                for (int k = 0; k < n; ++k) {
                    c.x = m.step(c.x, dist.sample(rng.uniform()));
                    ++c.step;
                    if (!c.x.allFinite()) diverged(model_, c.step, c.x);
                }
            },
            [&](const SwitchingLinear& m) {
                auto dist = m.distribution();
                Eigen::Matrix2d P1 = m.propagator(m.a1, h), P2 = m.propagator(m.a2, h);
                for (long k = 0; k < static_cast<long>(n) * sub; ++k) {
                    if (c.step % switch_every_ == 0) c.omega = dist.sample(rng.uniform());
                    const Eigen::Matrix2d& P =
                        c.omega == m.a1 ? P1 : (c.omega == m.a2 ? P2 : m.propagator(c.omega, h));
                    Eigen::Vector2d v = P * Eigen::Vector2d(c.x(0), c.x(1));
                    c.x(0) = v(0);
                    c.x(1) = v(1);
                    ++c.step;
                }
                if (!c.x.allFinite()) diverged(model_, c.step, c.x);
            },
            [&](const auto& m) {
                using M = std::decay_t<decltype(m)>;
                double dW[2] = {0.0, 0.0};
                const double sh = std::sqrt(h);
                const bool noisy = !is_deterministic(model_);
                for (long k = 0; k < static_cast<long>(n) * sub; ++k) {
                    if (cfg_.scheme == Scheme::rk4) {
                        c.x = rk4_step(m, c.x, h);
                    } else {
                        if (noisy)
                            for (int j = 0; j < M::noise_dim; ++j) dW[j] = sh * rng.normal();
                        c.x = cfg_.scheme == Scheme::srk ? srk_step(m, c.x, h, dW)
                                                         : em_step(m, c.x, h, dW);
                    }
                    ++c.step;
                    if (!in_domain(model_, c.x)) diverged(model_, c.step, c.x);
                }
            },
        },
        model_);
}

Trajectory integrate(const ModelSpec& model, const State& x0, const StepConfig& cfg, int n_steps,
                     RngStream& stream) {
    require(n_steps >= 0, "integrate: n_steps must be >= 0");
    require(x0.size() == model_dim(model), "integrate: x0 dimension mismatch");
    require(in_domain(model, x0), "integrate: x0 outside the model domain");
    Propagator prop(model, cfg);
    Trajectory tr;
    tr.seed = stream.seed();
    tr.stream_id = stream.stream_id();
    tr.states.resize(x0.size(), n_steps + 1);
    tr.times.resize(static_cast<std::size_t>(n_steps) + 1);
    PathCursor c{x0, 0, 0.0};
    tr.states.col(0) = x0;
    tr.times[0] = 0.0;
    for (int k = 1; k <= n_steps; ++k) {
        prop.advance(c, 1, stream);
        tr.states.col(k) = c.x;
        tr.times[static_cast<std::size_t>(k)] = k * cfg.dt;
    }
    return tr;
}

Trajectory integrate_em(const ModelSpec& model, const State& x0, double dt, int n_steps,
                        RngStream& stream, int substeps) {
    require(!is_discrete(model), "integrate_em: model must be continuous");
    return integrate(model, x0, {dt, substeps, Scheme::euler_maruyama}, n_steps, stream);
}

Trajectory integrate_srk(const ModelSpec& model, const State& x0, double dt, int n_steps,
                         RngStream& stream, int substeps) {
    require(!is_discrete(model), "integrate_srk: model must be continuous");
    return integrate(model, x0, {dt, substeps, Scheme::srk}, n_steps, stream);
}

Trajectory integrate_rk4(const ModelSpec& model, const State& x0, double dt, int n_steps,
                         int substeps) {
    require(!is_discrete(model), "integrate_rk4: model must be continuous");
    RngStream unused(0, 0);
    return integrate(model, x0, {dt, substeps, Scheme::rk4}, n_steps, unused);
}

Trajectory integrate_switching_linear(double a1, double a2, double b, double p1, double switch_dt,
                                      const State& x0, double dt, int n_steps, RngStream& stream) {
    SwitchingLinear m{a1, a2, b, p1, switch_dt};
    return integrate(m, x0, {dt, 1, Scheme::rk4}, n_steps, stream);
}

State integrate_with_increments(const ModelSpec& model, const State& x0, double h, const Mat& dW,
                                Scheme scheme) {
    require(h > 0.0, "integrate_with_increments: h must be positive");
    require(is_sde(model), "integrate_with_increments: model must be an SDE");
    require(dW.rows() == noise_dim(model), "integrate_with_increments: increment rows mismatch");
    require(scheme != Scheme::rk4, "integrate_with_increments: rk4 takes no increments");
    State x = x0;
    std::visit(
        [&](const auto& m) {
            using M = std::decay_t<decltype(m)>;
            if constexpr (requires { M::noise_dim; }) {
                double w[2] = {0.0, 0.0};
                for (Eigen::Index k = 0; k < dW.cols(); ++k) {
                    for (int j = 0; j < M::noise_dim; ++j) w[j] = dW(j, k);
                    x = scheme == Scheme::srk ? srk_step(m, x, h, w) : em_step(m, x, h, w);
                    if (!in_domain(model, x)) diverged(model, k + 1, x);
                }
            }
        },
        model);
    return x;
}

Ensemble run_ensemble(const ModelSpec& model, const State& x0, const StepConfig& cfg, int n_steps,
                      int N, std::uint64_t seed, std::uint64_t base_stream) {
    require(N >= 1, "run_ensemble: N must be >= 1");
    Ensemble e;
    e.seed = seed;
    e.base_stream = base_stream;
    e.members.reserve(static_cast<std::size_t>(N));
    for (int k = 0; k < N; ++k) {
        RngStream rng(seed, base_stream + static_cast<std::uint64_t>(k));
        try {
            e.members.push_back(integrate(model, x0, cfg, n_steps, rng));
        } catch (const IntegrationDiverged& d) {
            throw IntegrationDiverged(std::string(d.what()) + " [path " + std::to_string(k) + "]",
                                      d.step, k);
        }
    }
    return e;
}

} // namespace krds
