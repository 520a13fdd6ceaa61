#pragma once

#include <string>

#include <json.hpp>

#include "krds/common.hpp"
#include "krds/integrators.hpp"

namespace krds {

enum class ObservableKind {
    full_state,
    //! x^p for p = min_degree..max_degree (1-d states).
    monomials,
    //! (cos 2 pi j x, sin 2 pi j x) for j = 1..n1, interleaved per j.
    fourier_circle,
    //! Pitchfork eigenfunctions (x / sqrt(x^2 + |mu|))^n, n = min_degree..max_degree.
    pitchfork_eigenfunctions,
    //! Hermite polynomials H_n(alpha x), n = min_degree..max_degree.
    ou_eigenfunctions,
    //! e^{i k psi} for k = -K..-1, 1..K with psi = theta - beta log(r / r_ref).
    stuart_landau_modes,
    //! Scalar sum over k = 1..K of e^{i k psi} + e^{-i k psi}.
    stuart_landau_sum,
    //! Scalar x1 + x2 + sqrt(x1^2 + x2^2).
    van_der_pol_combo,
    //! Scalar x1 + x2.
    state_sum,
};

//! Reference radius in the Stuart-Landau phase psi = theta - beta log(r / r_ref).
enum class RadiusRef { sqrt_delta, delta };

struct ObservableSet {
    ObservableKind kind = ObservableKind::full_state;
    int dim = 1;        // state dimension for full_state
    int min_degree = 1; // monomials / analytic eigenfunction families
    int max_degree = 1;
    int n1 = 1;         // fourier_circle
    int K = 1;          // stuart_landau_*
    double mu = -0.5;   // pitchfork / ou
    double alpha = 1.0; // ou
    double beta = 1.0;  // stuart_landau
    double delta = 0.5; // stuart_landau
    RadiusRef radius_ref = RadiusRef::sqrt_delta;

    //! Output length n.
    int size() const;
    //! Expected state dimension.
    int state_dim() const;
    void validate() const;
};

std::string observable_kind_name(ObservableKind k);
ObservableKind observable_kind_from_name(const std::string& s);
std::string radius_ref_name(RadiusRef r);

nlohmann::json observable_to_json(const ObservableSet& o);
ObservableSet observable_from_json(const nlohmann::json& j);

CVec evaluate(const ObservableSet& set, const State& x);
//! Writes into out (length set.size()) without allocating.
void evaluate_into(const ObservableSet& set, const State& x, Eigen::Ref<CVec> out);
CMat evaluate_along(const ObservableSet& set, const Trajectory& traj);

//! Physicists' Hermite polynomial H_n(z).
double hermite(int n, double z);

} // namespace krds
