#pragma once

#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "krds/common.hpp"
#include "krds/noise.hpp"

namespace krds {

// T(w, x) = x + theta + pi(w) mod 1, pi(w) uniform on [-delta/2, delta/2].
struct NoisyRotation {
    double theta = 0.0;
    double delta = 0.0;
    static constexpr int dim = 1;
    double step(double x, double draw) const;
};

// x -> A(w) x with A(w) = [[0, w], [-w, 0]], P(w = w1) = p1.
struct DiscreteLinear {
    double p1 = 0.75;
    double w1 = 1.0;
    double w2 = 2.0;
    static constexpr int dim = 2;
    DiscreteDistribution distribution() const { return two_point(w1, w2, p1); }
    State step(const State& x, double w) const;
};

// x' = A(w(t)) x, A(w) = [[w, 1], [-b^2, w]], w piecewise constant on switch_dt.
struct SwitchingLinear {
    double a1 = -0.1;
    double a2 = 0.1;
    double b = 2.0;
    double p1 = 0.5;
    double switch_dt = 0.0;
    static constexpr int dim = 2;
    DiscreteDistribution distribution() const { return two_point(a1, a2, p1); }
    State drift(const State& x, double w) const;
    //! exp(A(w) h), closed form since A(w) = w I + B with B^2 = -b^2 I.
    Eigen::Matrix2d propagator(double w, double h) const;
};

struct OuLinear {
    double mu = -0.5;
    double sigma = 0.001;
    static constexpr int dim = 1;
    static constexpr int noise_dim = 1;
    State drift(const State& x) const;
    DiffMat diffusion(const State& x) const;
};

struct Pitchfork {
    double mu = -0.5;
    double sigma = 0.001;
    static constexpr int dim = 1;
    static constexpr int noise_dim = 1;
    State drift(const State& x) const;
    DiffMat diffusion(const State& x) const;
};

// Polar form (r, theta) with the eps^2/r correction in the radial drift.
struct StuartLandau {
    double delta = 0.5;
    double beta = 1.0;
    double gamma = 1.0;
    double eps = 0.0;
    static constexpr int dim = 2;
    static constexpr int noise_dim = 2;
    State drift(const State& x) const;
    DiffMat diffusion(const State& x) const;
};

struct VanDerPol {
    double mu = 0.3;
    double eps = 0.0;
    static constexpr int dim = 2;
    static constexpr int noise_dim = 1;
    State drift(const State& x) const;
    DiffMat diffusion(const State& x) const;
};

struct LotkaVolterra {
    double a1 = 1.0, b1 = 0.5, c1 = 0.01;
    double a2 = 0.75, b2 = 0.25, c2 = 0.01;
    double sigma1 = 0.0, sigma2 = 0.0;
    static constexpr int dim = 2;
    static constexpr int noise_dim = 2;
    State drift(const State& x) const;
    DiffMat diffusion(const State& x) const;
    //! Interior fixed point of the drift. With shifted = true the Ito
    //! corrections -sigma_i^2/2 are folded into a1 and a2.
    Eigen::Vector2d equilibrium(bool shifted) const;
    //! Jacobian of (a1 - b1 y - c1 x) x, (-a2 + b2 x - c2 y) y at an equilibrium.
    Eigen::Matrix2d jacobian_at(const Eigen::Vector2d& e) const;
};

using ModelSpec = std::variant<NoisyRotation, DiscreteLinear, SwitchingLinear, OuLinear, Pitchfork,
                               StuartLandau, VanDerPol, LotkaVolterra>;

enum class ModelKind {
    noisy_rotation,
    discrete_linear,
    switching_linear_rde,
    ou_linear_sde,
    scalar_pitchfork_sde,
    stuart_landau,
    van_der_pol,
    lotka_volterra,
};

ModelKind kind_of(const ModelSpec& m);
std::string kind_name(ModelKind k);
ModelKind kind_from_name(const std::string& name);
int model_dim(const ModelSpec& m);
//! Number of Wiener components (0 for discrete maps and the switching RDE).
int noise_dim(const ModelSpec& m);
bool is_discrete(const ModelSpec& m);
bool is_sde(const ModelSpec& m);
//! True when every noise amplitude is zero.
bool is_deterministic(const ModelSpec& m);
//! Copy of the model with all noise amplitudes set to zero.
ModelSpec deterministic_counterpart(const ModelSpec& m);

ModelSpec default_model(ModelKind k);

nlohmann::json model_to_json(const ModelSpec& m);
//! Missing parameters take the defaults of the kind; unknown names are rejected.
ModelSpec model_from_json(const nlohmann::json& j);

// Generic evaluation entry points.
State step_discrete(const ModelSpec& m, const State& x, double noise_draw);
State drift(const ModelSpec& m, const State& x, double t, const SwitchingSignal* signal = nullptr);
DiffMat diffusion(const ModelSpec& m, const State& x);

//! Domain check for a state (finite, rotation in [0,1), LV nonnegative, SL r > 0).
bool in_domain(const ModelSpec& m, const State& x);

State make_state(std::initializer_list<double> v);
State make_state(const std::vector<double>& v);

} // namespace krds
