#include "krds/observables.hpp"

#include <cmath>
#include <numbers>

namespace krds {

namespace {

const std::vector<std::pair<ObservableKind, std::string>>& names() {
    static const std::vector<std::pair<ObservableKind, std::string>> n = {
        {ObservableKind::full_state, "full_state"},
        {ObservableKind::monomials, "monomials"},
        {ObservableKind::fourier_circle, "fourier_circle"},
        {ObservableKind::pitchfork_eigenfunctions, "pitchfork_eigenfunctions"},
        {ObservableKind::ou_eigenfunctions, "ou_eigenfunctions"},
        {ObservableKind::stuart_landau_modes, "stuart_landau_modes"},
        {ObservableKind::stuart_landau_sum, "stuart_landau_sum"},
        {ObservableKind::van_der_pol_combo, "van_der_pol_combo"},
        {ObservableKind::state_sum, "state_sum"},
    };
    return n;
}

double sl_phase(const ObservableSet& s, const State& x) {
    double ref = s.radius_ref == RadiusRef::sqrt_delta ? std::sqrt(s.delta) : s.delta;
    return x(1) - s.beta * std::log(x(0) / ref);
}

} // namespace

std::string observable_kind_name(ObservableKind k) {
    for (auto& [kk, n] : names())
        if (kk == k) return n;
    return "?";
}

ObservableKind observable_kind_from_name(const std::string& s) {
    for (auto& [k, n] : names())
        if (n == s) return k;
    throw InvalidArgument("unknown observable kind '" + s + "'");
}

std::string radius_ref_name(RadiusRef r) { return r == RadiusRef::sqrt_delta ? "sqrt_delta" : "delta"; }

int ObservableSet::size() const {
    switch (kind) {
    case ObservableKind::full_state: return dim;
    case ObservableKind::monomials:
    case ObservableKind::pitchfork_eigenfunctions:
    case ObservableKind::ou_eigenfunctions: return max_degree - min_degree + 1;
    case ObservableKind::fourier_circle: return 2 * n1;
    case ObservableKind::stuart_landau_modes: return 2 * K;
    case ObservableKind::stuart_landau_sum:
    case ObservableKind::van_der_pol_combo:
    case ObservableKind::state_sum: return 1;
    }
    return 0;
}

int ObservableSet::state_dim() const {
    switch (kind) {
    case ObservableKind::full_state: return dim;
    case ObservableKind::monomials:
    case ObservableKind::pitchfork_eigenfunctions:
    case ObservableKind::ou_eigenfunctions:
    case ObservableKind::fourier_circle: return 1;
    default: return 2;
    }
}

void ObservableSet::validate() const {
    require(dim >= 1 && dim <= 2, "observable: dim must be 1 or 2");
    require(min_degree >= 0 && max_degree >= min_degree, "observable: bad degree range");
    require(n1 >= 1, "observable: n1 must be >= 1");
    require(K >= 1, "observable: K must be >= 1");
    require(delta > 0.0, "observable: delta must be positive");
}

nlohmann::json observable_to_json(const ObservableSet& o) {
    nlohmann::json j;
    j["kind"] = observable_kind_name(o.kind);
    switch (o.kind) {
    case ObservableKind::full_state: j["dim"] = o.dim; break;
    case ObservableKind::monomials:
        j["min_degree"] = o.min_degree;
        j["max_degree"] = o.max_degree;
        break;
    case ObservableKind::pitchfork_eigenfunctions:
        j["min_degree"] = o.min_degree;
        j["max_degree"] = o.max_degree;
        j["mu"] = o.mu;
        break;
    case ObservableKind::ou_eigenfunctions:
        j["min_degree"] = o.min_degree;
        j["max_degree"] = o.max_degree;
        j["alpha"] = o.alpha;
        break;
    case ObservableKind::fourier_circle: j["n1"] = o.n1; break;
    case ObservableKind::stuart_landau_modes:
    case ObservableKind::stuart_landau_sum:
        j["K"] = o.K;
        j["beta"] = o.beta;
        j["delta"] = o.delta;
        j["radius_ref"] = radius_ref_name(o.radius_ref);
        break;
    default: break;
    }
    return j;
}

ObservableSet observable_from_json(const nlohmann::json& j) {
    require(j.is_object() && j.contains("kind"), "observable config needs a 'kind'");
    ObservableSet o;
    o.kind = observable_kind_from_name(j.at("kind").get<std::string>());
    o.dim = j.value("dim", o.dim);
    o.min_degree = j.value("min_degree", o.min_degree);
    o.max_degree = j.value("max_degree", o.max_degree);
    o.n1 = j.value("n1", o.n1);
    o.K = j.value("K", o.K);
    o.mu = j.value("mu", o.mu);
    o.alpha = j.value("alpha", o.alpha);
    o.beta = j.value("beta", o.beta);
    o.delta = j.value("delta", o.delta);
    if (j.contains("radius_ref")) {
        auto r = j.at("radius_ref").get<std::string>();
        require(r == "sqrt_delta" || r == "delta", "observable: radius_ref must be sqrt_delta or delta");
        o.radius_ref = r == "delta" ? RadiusRef::delta : RadiusRef::sqrt_delta;
    }
    o.validate();
    return o;
}

double hermite(int n, double z) {
    if (n == 0) return 1.0;
    double h0 = 1.0, h1 = 2.0 * z;
    for (int k = 1; k < n; ++k) {
        double h2 = 2.0 * z * h1 - 2.0 * k * h0;
        h0 = h1;
        h1 = h2;
    }
    return h1;
}

void evaluate_into(const ObservableSet& s, const State& x, Eigen::Ref<CVec> out) {
    if (x.size() != s.state_dim())
        throw InvalidArgument("observable " + observable_kind_name(s.kind) + ": expected state dim " +
                              std::to_string(s.state_dim()) + ", got " + std::to_string(x.size()));
    switch (s.kind) {
    case ObservableKind::full_state:
        for (int i = 0; i < s.dim; ++i) out(i) = x(i);
        break;
    case ObservableKind::monomials: {
        double p = std::pow(x(0), s.min_degree);
        for (int d = s.min_degree, i = 0; d <= s.max_degree; ++d, ++i, p *= x(0)) out(i) = p;
        break;
    }
    case ObservableKind::pitchfork_eigenfunctions: {
        double u = x(0) / std::sqrt(x(0) * x(0) + std::abs(s.mu));
        double p = std::pow(u, s.min_degree);
        for (int d = s.min_degree, i = 0; d <= s.max_degree; ++d, ++i, p *= u) out(i) = p;
        break;
    }
    case ObservableKind::ou_eigenfunctions:
        for (int d = s.min_degree, i = 0; d <= s.max_degree; ++d, ++i)
            out(i) = hermite(d, s.alpha * x(0));
        break;
    case ObservableKind::fourier_circle: {
        const double w = 2.0 * std::numbers::pi * x(0);
        for (int j = 1; j <= s.n1; ++j) {
            out(2 * (j - 1)) = std::cos(j * w);
            out(2 * (j - 1) + 1) = std::sin(j * w);
        }
        break;
    }
    case ObservableKind::stuart_landau_modes: {
        const double psi = sl_phase(s, x);
        int i = 0;
        for (int k = -s.K; k <= s.K; ++k)
            if (k != 0) out(i++) = std::polar(1.0, k * psi);
        break;
    }
    case ObservableKind::stuart_landau_sum: {
        const double psi = sl_phase(s, x);
        double acc = 0.0;
        for (int k = 1; k <= s.K; ++k) acc += 2.0 * std::cos(k * psi);
        out(0) = acc;
        break;
    }
    case ObservableKind::van_der_pol_combo:
        out(0) = x(0) + x(1) + std::hypot(x(0), x(1));
        break;
    case ObservableKind::state_sum: out(0) = x(0) + x(1); break;
    }
}

CVec evaluate(const ObservableSet& set, const State& x) {
    CVec out(set.size());
    evaluate_into(set, x, out);
    return out;
}

CMat evaluate_along(const ObservableSet& set, const Trajectory& traj) {
    CMat out(set.size(), traj.size());
    for (int k = 0; k < traj.size(); ++k) {
        State x = traj.state(k);
        evaluate_into(set, x, out.col(k));
    }
    return out;
}

} // namespace krds
