#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "krds/common.hpp"
#include "krds/models.hpp"
#include "krds/noise.hpp"

namespace krds {

enum class TimeScale { discrete, continuous };

struct AnalyticSpectrum {
    std::vector<cplx> eigenvalues;
    //! Index label per eigenvalue (j, n or k as in the source formula).
    std::vector<int> indices;
    std::vector<std::function<cplx(const State&)>> eigenfunctions; // may be empty
    TimeScale scale = TimeScale::continuous;
    std::string notes;
};

nlohmann::json spectrum_to_json(const AnalyticSpectrum& s);

//! One-step eigenvalues sinc(j pi delta) e^{i 2 pi j theta}, j = -j_max..j_max.
AnalyticSpectrum rotation_spectrum(double theta, double delta, int j_max);

//! Rotation eigenvalue for noise quantized to q equally weighted midpoints of
//! [-delta/2, delta/2], by exhaustive enumeration.
cplx rotation_quantized_eigenvalue(double theta, double delta, int j, int q);

//! Eigenvalues of E[A(w)]^n for the skew map A(w) = [[0, w], [-w, 0]].
AnalyticSpectrum discrete_linear_spectrum(const DiscreteDistribution& dist, int n);

//! E[A(w_n) ... A(w_1)] by enumerating all value sequences (|values|^n terms).
Eigen::Matrix2d discrete_linear_bruteforce(const DiscreteDistribution& dist, int n);

struct SwitchingEigenvalues {
    cplx plus;
    cplx minus;
    bool clt_valid = true; // t / switch_dt >= 30
};

//! exp((a_hat +- i b) t + sigma_hat^2 / 2), sigma_hat^2 = p1 (1-p1) (a1-a2)^2 switch_dt t.
SwitchingEigenvalues switching_linear_spectrum(double a1, double a2, double b, double p1,
                                               double switch_dt, double t);

//! Closed-form generator spectra for OU, pitchfork, Stuart-Landau (l = 0
//! branch for n = -n_max..n_max, then l >= 1), Van der Pol lattice and
//! Lotka-Volterra principal pair.
AnalyticSpectrum sde_spectra(const ModelSpec& model, int n_max = 10);

//! Lattice {i k w0, -mu + i k w0}, |k| <= k_max.
std::vector<cplx> van_der_pol_lattice(double mu, double omega0, int k_max);
//! Reference base frequency (numerically computed) and the series 1 - mu^2/16 + 17 mu^4/3072.
constexpr double kVanDerPolOmega0 = 0.9944151;
double van_der_pol_omega0_series(double mu);

enum class Boundary { reflecting, absorbing };

struct FdSpectrum {
    AnalyticSpectrum spectrum;
    bool grid_converged = true; // leading eigenvalues stable to 1% under grid doubling
    double max_relative_shift = 0.0;
};

//! Leading k eigenvalues (real part descending) of the central-difference
//! discretization of G f' + sigma^2 f'' / 2 on [lo, hi].
FdSpectrum kolmogorov_fd_spectrum(const std::function<double(double)>& drift_fn,
                                  const std::function<double(double)>& sigma_fn, double lo,
                                  double hi, int grid_n, int k_eigs,
                                  Boundary boundary = Boundary::reflecting,
                                  bool check_grid = false);

//! The discretized generator itself (grid_n x grid_n, nodes lo + i h).
Mat kolmogorov_fd_matrix(const std::function<double(double)>& drift_fn,
                         const std::function<double(double)>& sigma_fn, double lo, double hi,
                         int grid_n, Boundary boundary = Boundary::reflecting);

struct EigenfunctionWithGradient {
    std::function<cplx(const State&)> value;
    std::function<CVec(const State&)> gradient;
};

struct PropertyCheck {
    bool holds = false;
    double max_deviation = 0.0;
};

//! Checks E[F] . grad(phi1 phi2) = (l1 + l2) phi1 phi2 on the sample points
//! for the mean vector field of a linear RDE model.
PropertyCheck generator_product_property_check(cplx l1, const EigenfunctionWithGradient& phi1,
                                               cplx l2, const EigenfunctionWithGradient& phi2,
                                               const ModelSpec& model,
                                               const std::vector<State>& samples,
                                               double tol = 1e-10);

//! Principal eigenpairs of E[A] for the switching RDE: phi_j(x) = <x, w_j>
//! with w_j a left eigenvector, eigenvalue the generator eigenvalue.
std::vector<std::pair<cplx, EigenfunctionWithGradient>> linear_rde_principal_eigenfunctions(
    const SwitchingLinear& m);

//! e^{lambda_j t} for the eigenvalues of a constant 2x2 drift matrix: the
//! mean of <X_t, w_j> / <x0, w_j> for dX = A X dt + noise (additive or
//! multiplicative with commuting coefficients).
std::vector<cplx> linear_sde_mean_factors(const Eigen::Matrix2d& A, double t);

} // namespace krds
