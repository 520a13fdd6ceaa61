#include "krds/models.hpp"

#include <cmath>
#include <map>
#include <numbers>

namespace krds {

double NoisyRotation::step(double x, double draw) const {
    double y = x + theta + draw;
    y -= std::floor(y);
    return y >= 1.0 ? 0.0 : y;
}

State DiscreteLinear::step(const State& x, double w) const {
    State y(2);
    y << w * x(1), -w * x(0);
    return y;
}

State SwitchingLinear::drift(const State& x, double w) const {
    State y(2);
    y << w * x(0) + x(1), -b * b * x(0) + w * x(1);
    return y;
}

Eigen::Matrix2d SwitchingLinear::propagator(double w, double h) const {
    Eigen::Matrix2d B;
    B << 0.0, 1.0, -b * b, 0.0;
    double c = std::cos(b * h);
    double s = b == 0.0 ? h : std::sin(b * h) / b;
    return std::exp(w * h) * (c * Eigen::Matrix2d::Identity() + s * B);
}

State OuLinear::drift(const State& x) const { return mu * x; }

DiffMat OuLinear::diffusion(const State&) const { return DiffMat::Constant(1, 1, sigma); }

State Pitchfork::drift(const State& x) const {
    State y(1);
    y(0) = mu * x(0) - x(0) * x(0) * x(0);
    return y;
}

DiffMat Pitchfork::diffusion(const State&) const { return DiffMat::Constant(1, 1, sigma); }

State StuartLandau::drift(const State& x) const {
    const double r = x(0);
    State y(2);
    y << delta * r - r * r * r + eps * eps / r, gamma - beta * r * r;
    return y;
}

DiffMat StuartLandau::diffusion(const State& x) const {
    DiffMat d = DiffMat::Zero(2, 2);
    d(0, 0) = eps;
    d(1, 1) = eps / x(0);
    return d;
}

State VanDerPol::drift(const State& x) const {
    State y(2);
    y << x(1), mu * (1.0 - x(0) * x(0)) * x(1) - x(0);
    return y;
}

DiffMat VanDerPol::diffusion(const State&) const {
    DiffMat d = DiffMat::Zero(2, 1);
    d(1, 0) = std::sqrt(2.0 * eps);
    return d;
}

State LotkaVolterra::drift(const State& x) const {
    State y(2);
    y << (a1 - b1 * x(1) - c1 * x(0)) * x(0), (-a2 + b2 * x(0) - c2 * x(1)) * x(1);
    return y;
}

DiffMat LotkaVolterra::diffusion(const State& x) const {
    DiffMat d = DiffMat::Zero(2, 2);
    d(0, 0) = sigma1 * x(0);
    d(1, 1) = sigma2 * x(1);
    return d;
}

Eigen::Vector2d LotkaVolterra::equilibrium(bool shifted) const {
    double r1 = a1 - (shifted ? 0.5 * sigma1 * sigma1 : 0.0);
    double r2 = a2 + (shifted ? 0.5 * sigma2 * sigma2 : 0.0);
    // c1 x + b1 y = r1, b2 x - c2 y = r2
    Eigen::Matrix2d M;
    M << c1, b1, b2, -c2;
    return M.lu().solve(Eigen::Vector2d(r1, r2));
}

Eigen::Matrix2d LotkaVolterra::jacobian_at(const Eigen::Vector2d& e) const {
    Eigen::Matrix2d J;
    J << -c1 * e(0), -b1 * e(0), b2 * e(1), -c2 * e(1);
    return J;
}

namespace {

const std::vector<std::pair<ModelKind, std::string>>& kind_names() {
    static const std::vector<std::pair<ModelKind, std::string>> names = {
        {ModelKind::noisy_rotation, "noisy_rotation"},
        {ModelKind::discrete_linear, "discrete_linear"},
        {ModelKind::switching_linear_rde, "switching_linear_rde"},
        {ModelKind::ou_linear_sde, "ou_linear_sde"},
        {ModelKind::scalar_pitchfork_sde, "scalar_pitchfork_sde"},
        {ModelKind::stuart_landau, "stuart_landau"},
        {ModelKind::van_der_pol, "van_der_pol"},
        {ModelKind::lotka_volterra, "lotka_volterra"},
    };
    return names;
}

template <class... Ts> struct overloaded : Ts... { using Ts::operator()...; };

// Canonical parameter names per kind, bound to struct members.
template <class M> std::vector<std::pair<const char*, double M::*>> fields();

template <> std::vector<std::pair<const char*, double NoisyRotation::*>> fields<NoisyRotation>() {
    return {{"theta", &NoisyRotation::theta}, {"delta", &NoisyRotation::delta}};
}
template <> std::vector<std::pair<const char*, double DiscreteLinear::*>> fields<DiscreteLinear>() {
    return {{"p1", &DiscreteLinear::p1}, {"w1", &DiscreteLinear::w1}, {"w2", &DiscreteLinear::w2}};
}
template <>
std::vector<std::pair<const char*, double SwitchingLinear::*>> fields<SwitchingLinear>() {
    return {{"a1", &SwitchingLinear::a1},
            {"a2", &SwitchingLinear::a2},
            {"b", &SwitchingLinear::b},
            {"p1", &SwitchingLinear::p1},
            {"switch_dt", &SwitchingLinear::switch_dt}};
}
template <> std::vector<std::pair<const char*, double OuLinear::*>> fields<OuLinear>() {
    return {{"mu", &OuLinear::mu}, {"sigma", &OuLinear::sigma}};
}
template <> std::vector<std::pair<const char*, double Pitchfork::*>> fields<Pitchfork>() {
    return {{"mu", &Pitchfork::mu}, {"sigma", &Pitchfork::sigma}};
}
template <> std::vector<std::pair<const char*, double StuartLandau::*>> fields<StuartLandau>() {
    return {{"delta", &StuartLandau::delta},
            {"beta", &StuartLandau::beta},
            {"gamma", &StuartLandau::gamma},
            {"eps", &StuartLandau::eps}};
}
template <> std::vector<std::pair<const char*, double VanDerPol::*>> fields<VanDerPol>() {
    return {{"mu", &VanDerPol::mu}, {"eps", &VanDerPol::eps}};
}
template <> std::vector<std::pair<const char*, double LotkaVolterra::*>> fields<LotkaVolterra>() {
    return {{"a1", &LotkaVolterra::a1},         {"b1", &LotkaVolterra::b1},
            {"c1", &LotkaVolterra::c1},         {"a2", &LotkaVolterra::a2},
            {"b2", &LotkaVolterra::b2},         {"c2", &LotkaVolterra::c2},
            {"sigma1", &LotkaVolterra::sigma1}, {"sigma2", &LotkaVolterra::sigma2}};
}

template <class M> nlohmann::json to_params(const M& m) {
    nlohmann::json p = nlohmann::json::object();
    for (auto& [name, ptr] : fields<M>()) p[name] = m.*ptr;
    return p;
}

template <class M> M from_params(const nlohmann::json& p, M m) {
    auto fs = fields<M>();
    for (auto it = p.begin(); it != p.end(); ++it) {
        bool found = false;
        for (auto& [name, ptr] : fs) {
            if (it.key() == name) {
                require(it.value().is_number(), "model param '" + it.key() + "' must be a number");
                m.*ptr = it.value().get<double>();
                found = true;
            }
        }
        require(found, "unknown model parameter '" + it.key() + "'");
    }
    return m;
}

} // namespace

ModelKind kind_of(const ModelSpec& m) { return static_cast<ModelKind>(m.index()); }

std::string kind_name(ModelKind k) {
    for (auto& [kk, n] : kind_names())
        if (kk == k) return n;
    throw InvalidArgument("unknown model kind");
}

ModelKind kind_from_name(const std::string& name) {
    for (auto& [k, n] : kind_names())
        if (n == name) return k;
    throw InvalidArgument("unknown model kind '" + name + "'");
}

int model_dim(const ModelSpec& m) {
    return std::visit([](const auto& s) { return std::decay_t<decltype(s)>::dim; }, m);
}

int noise_dim(const ModelSpec& m) {
    return std::visit(
        [](const auto& s) -> int {
            using M = std::decay_t<decltype(s)>;
            if constexpr (requires { M::noise_dim; })
                return M::noise_dim;
            else
                return 0;
        },
        m);
}

bool is_discrete(const ModelSpec& m) {
    return std::holds_alternative<NoisyRotation>(m) || std::holds_alternative<DiscreteLinear>(m);
}

bool is_sde(const ModelSpec& m) { return noise_dim(m) > 0; }

bool is_deterministic(const ModelSpec& m) {
    return std::visit(overloaded{
                          [](const NoisyRotation& s) { return s.delta == 0.0; },
                          [](const DiscreteLinear& s) { return s.p1 == 1.0 || s.w1 == s.w2; },
                          [](const SwitchingLinear& s) { return s.p1 == 1.0 || s.a1 == s.a2; },
                          [](const OuLinear& s) { return s.sigma == 0.0; },
                          [](const Pitchfork& s) { return s.sigma == 0.0; },
                          [](const StuartLandau& s) { return s.eps == 0.0; },
                          [](const VanDerPol& s) { return s.eps == 0.0; },
                          [](const LotkaVolterra& s) { return s.sigma1 == 0.0 && s.sigma2 == 0.0; },
                      },
                      m);
}

ModelSpec deterministic_counterpart(const ModelSpec& m) {
    return std::visit(overloaded{
                          [](NoisyRotation s) -> ModelSpec { s.delta = 0.0; return s; },
                          [](DiscreteLinear s) -> ModelSpec { s.p1 = 1.0; return s; },
                          [](SwitchingLinear s) -> ModelSpec { s.p1 = 1.0; return s; },
                          [](OuLinear s) -> ModelSpec { s.sigma = 0.0; return s; },
                          [](Pitchfork s) -> ModelSpec { s.sigma = 0.0; return s; },
                          [](StuartLandau s) -> ModelSpec { s.eps = 0.0; return s; },
                          [](VanDerPol s) -> ModelSpec { s.eps = 0.0; return s; },
                          [](LotkaVolterra s) -> ModelSpec {
                              s.sigma1 = s.sigma2 = 0.0;
                              return s;
                          },
                      },
                      m);
}

ModelSpec default_model(ModelKind k) {
    switch (k) {
    case ModelKind::noisy_rotation: return NoisyRotation{std::numbers::pi / 320.0, 0.01};
    case ModelKind::discrete_linear: return DiscreteLinear{};
    case ModelKind::switching_linear_rde: {
        SwitchingLinear s;
        s.switch_dt = std::numbers::pi / 30.0;
        return s;
    }
    case ModelKind::ou_linear_sde: return OuLinear{};
    case ModelKind::scalar_pitchfork_sde: return Pitchfork{};
    case ModelKind::stuart_landau: return StuartLandau{};
    case ModelKind::van_der_pol: return VanDerPol{0.3, 0.005};
    case ModelKind::lotka_volterra: return LotkaVolterra{};
    }
    throw InvalidArgument("unknown model kind");
}

nlohmann::json model_to_json(const ModelSpec& m) {
    nlohmann::json j;
    j["kind"] = kind_name(kind_of(m));
    j["params"] = std::visit([](const auto& s) { return to_params(s); }, m);
    return j;
}

ModelSpec model_from_json(const nlohmann::json& j) {
    require(j.is_object() && j.contains("kind"), "model config needs a 'kind'");
    ModelSpec base = default_model(kind_from_name(j.at("kind").get<std::string>()));
    nlohmann::json p = j.value("params", nlohmann::json::object());
    require(p.is_object(), "model 'params' must be an object");
    return std::visit([&](const auto& s) -> ModelSpec { return from_params(p, s); }, base);
}

State step_discrete(const ModelSpec& m, const State& x, double noise_draw) {
    return std::visit(overloaded{
                          [&](const NoisyRotation& s) -> State {
                              require(x.size() == 1, "noisy_rotation: state must be 1-d");
                              return make_state({s.step(x(0), noise_draw)});
                          },
                          [&](const DiscreteLinear& s) -> State {
                              require(x.size() == 2, "discrete_linear: state must be 2-d");
                              return s.step(x, noise_draw);
                          },
                          [](const auto&) -> State {
                              throw InvalidArgument("step_discrete: model is not a discrete map");
                          },
                      },
                      m);
}

State drift(const ModelSpec& m, const State& x, double t, const SwitchingSignal* signal) {
    require(x.size() == model_dim(m), "drift: state dimension mismatch");
    return std::visit(overloaded{
                          [](const NoisyRotation&) -> State {
                              throw InvalidArgument("drift: model is a discrete map");
                          },
                          [](const DiscreteLinear&) -> State {
                              throw InvalidArgument("drift: model is a discrete map");
                          },
                          [&](const SwitchingLinear& s) -> State {
                              require(signal != nullptr, "drift: switching model needs a signal");
                              return s.drift(x, signal->value_at(t));
                          },
                          [&](const auto& s) -> State { return s.drift(x); },
                      },
                      m);
}

DiffMat diffusion(const ModelSpec& m, const State& x) {
    require(x.size() == model_dim(m), "diffusion: state dimension mismatch");
    return std::visit(
        [&](const auto& s) -> DiffMat {
            if constexpr (requires { s.diffusion(x); })
                return s.diffusion(x);
            else
                throw InvalidArgument("diffusion: " + kind_name(kind_of(ModelSpec(s))) +
                                      " has no Wiener noise");
        },
        m);
}

bool in_domain(const ModelSpec& m, const State& x) {
    if (!x.allFinite()) return false;
    return std::visit(overloaded{
                          [&](const NoisyRotation&) { return x(0) >= 0.0 && x(0) < 1.0; },
                          [&](const StuartLandau&) { return x(0) > 0.0; },
                          [&](const LotkaVolterra&) { return x(0) >= 0.0 && x(1) >= 0.0; },
                          [](const auto&) { return true; },
                      },
                      m);
}

State make_state(std::initializer_list<double> v) {
    State s(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double d : v) s(i++) = d;
    return s;
}

State make_state(const std::vector<double>& v) {
    require(v.size() >= 1 && v.size() <= 2, "state must have 1 or 2 coordinates");
    State s(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) s(static_cast<Eigen::Index>(i)) = v[i];
    return s;
}

} // namespace krds
