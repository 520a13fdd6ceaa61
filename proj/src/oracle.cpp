#include "krds/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "krds/observables.hpp"

namespace krds {

namespace {

constexpr double kPi = std::numbers::pi;

double sinc_pi(double z) { return z == 0.0 ? 1.0 : std::sin(kPi * z) / (kPi * z); }

nlohmann::json cplx_json(cplx z) { return nlohmann::json::array({z.real(), z.imag()}); }

} // namespace

nlohmann::json spectrum_to_json(const AnalyticSpectrum& s) {
    nlohmann::json j;
    j["scale"] = s.scale == TimeScale::discrete ? "discrete" : "continuous";
    auto ev = nlohmann::json::array();
    for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) {
        nlohmann::json e = {{"lambda", cplx_json(s.eigenvalues[i])}};
        if (i < s.indices.size()) e["index"] = s.indices[i];
        ev.push_back(e);
    }
    j["eigenvalues"] = ev;
    j["notes"] = s.notes;
    return j;
}

AnalyticSpectrum rotation_spectrum(double theta, double delta, int j_max) {
    require(delta >= 0.0, "rotation_spectrum: delta must be >= 0");
    require(j_max >= 0, "rotation_spectrum: j_max must be >= 0");
    AnalyticSpectrum s;
    s.scale = TimeScale::discrete;
    for (int j = -j_max; j <= j_max; ++j) {
        s.eigenvalues.push_back(sinc_pi(j * delta) * std::polar(1.0, 2.0 * kPi * j * theta));
        s.indices.push_back(j);
        s.eigenfunctions.push_back(
            [j](const State& x) { return std::polar(1.0, 2.0 * kPi * j * x(0)); });
    }
    s.notes = "one-step eigenvalues, eigenfunctions exp(i 2 pi j x)";
    return s;
}

cplx rotation_quantized_eigenvalue(double theta, double delta, int j, int q) {
    require(q >= 1, "rotation_quantized_eigenvalue: q must be >= 1");
    cplx acc = 0.0;
    for (int l = 0; l < q; ++l) {
        double pi_l = -0.5 * delta + (l + 0.5) * delta / q;
        acc += std::polar(1.0, 2.0 * kPi * j * pi_l);
    }
    return std::polar(1.0, 2.0 * kPi * j * theta) * acc / static_cast<double>(q);
}

AnalyticSpectrum discrete_linear_spectrum(const DiscreteDistribution& dist, int n) {
    dist.validate();
    require(n >= 1, "discrete_linear_spectrum: n must be >= 1");
    const double w = dist.mean();
    AnalyticSpectrum s;
    s.scale = TimeScale::discrete;
    // eig([[0, w], [-w, 0]]) = +-i w; i.i.d. draws give E[Phi(n)] = E[A]^n.
    s.eigenvalues = {std::pow(cplx(0.0, w), n), std::pow(cplx(0.0, -w), n)};
    s.indices = {1, -1};
    s.notes = "eigenvalues of E[A]^n; eigenfunctions <x, w_j> with w_j left eigenvectors of E[A]";
    return s;
}

Eigen::Matrix2d discrete_linear_bruteforce(const DiscreteDistribution& dist, int n) {
    dist.validate();
    require(n >= 1 && n <= 24, "discrete_linear_bruteforce: n must be in [1, 24]");
    const std::size_t q = dist.values.size();
    std::size_t total = 1;
    for (int i = 0; i < n; ++i) total *= q;
    Eigen::Matrix2d acc = Eigen::Matrix2d::Zero();
    for (std::size_t code = 0; code < total; ++code) {
        std::size_t c = code;
        Eigen::Matrix2d P = Eigen::Matrix2d::Identity();
        double prob = 1.0;
        for (int i = 0; i < n; ++i) {
            std::size_t idx = c % q;
            c /= q;
            double w = dist.values[idx];
            Eigen::Matrix2d A;
            A << 0.0, w, -w, 0.0;
            P = A * P;
            prob *= dist.probs[idx];
        }
        acc += prob * P;
    }
    return acc;
}

SwitchingEigenvalues switching_linear_spectrum(double a1, double a2, double b, double p1,
                                               double switch_dt, double t) {
    require(p1 >= 0.0 && p1 <= 1.0, "switching spectrum: p1 must lie in [0, 1]");
    require(switch_dt > 0.0 && t >= 0.0, "switching spectrum: bad time arguments");
    const double ahat = p1 * a1 + (1.0 - p1) * a2;
    const double s2 = p1 * (1.0 - p1) * (a1 - a2) * (a1 - a2) * switch_dt * t;
    SwitchingEigenvalues e;
    e.plus = std::exp(cplx(ahat * t + 0.5 * s2, b * t));
    e.minus = std::exp(cplx(ahat * t + 0.5 * s2, -b * t));
    e.clt_valid = t / switch_dt >= 30.0;
    return e;
}

std::vector<cplx> van_der_pol_lattice(double mu, double omega0, int k_max) {
    std::vector<cplx> out;
    for (int k = -k_max; k <= k_max; ++k) out.emplace_back(0.0, k * omega0);
    for (int k = -k_max; k <= k_max; ++k) out.emplace_back(-mu, k * omega0);
    return out;
}

double van_der_pol_omega0_series(double mu) {
    const double m2 = mu * mu;
    return 1.0 - m2 / 16.0 + 17.0 * m2 * m2 / 3072.0;
}

AnalyticSpectrum sde_spectra(const ModelSpec& model, int n_max) {
    require(n_max >= 1, "sde_spectra: n_max must be >= 1");
    AnalyticSpectrum s;
    s.scale = TimeScale::continuous;
    if (auto* m = std::get_if<OuLinear>(&model)) {
        const double alpha = m->sigma > 0.0 ? std::sqrt(std::abs(m->mu) / m->sigma) : 0.0;
        for (int n = 0; n <= n_max; ++n) {
            s.eigenvalues.emplace_back(n * m->mu, 0.0);
            s.indices.push_back(n);
            if (alpha > 0.0)
                s.eigenfunctions.push_back(
                    [n, alpha](const State& x) { return cplx(hermite(n, alpha * x(0)), 0.0); });
        }
        s.notes = "lambda_n = n mu, phi_n = H_n(alpha x), alpha = sqrt(|mu| / sigma)";
        return s;
    }
    if (auto* m = std::get_if<Pitchfork>(&model)) {
        const double amu = std::abs(m->mu);
        for (int n = 0; n <= n_max; ++n) {
            s.eigenvalues.emplace_back(n * m->mu, 0.0);
            s.indices.push_back(n);
            s.eigenfunctions.push_back([n, amu](const State& x) {
                return cplx(std::pow(x(0) / std::sqrt(x(0) * x(0) + amu), n), 0.0);
            });
        }
        s.notes = "lambda_n = n mu, phi_n = (x / sqrt(x^2 + |mu|))^n; exact for sigma = 0";
        return s;
    }
    if (auto* m = std::get_if<StuartLandau>(&model)) {
        const double w0 = m->gamma - m->beta * m->delta;
        const double diffusion = m->eps * m->eps * (1.0 + m->beta * m->beta) / (2.0 * m->delta);
        const double rref = std::sqrt(m->delta);
        const double beta = m->beta;
        for (int n = -n_max; n <= n_max; ++n) {
            s.eigenvalues.emplace_back(-n * n * diffusion, n * w0);
            s.indices.push_back(n);
            s.eigenfunctions.push_back([n, beta, rref](const State& x) {
                return std::polar(1.0, n * (x(1) - beta * std::log(x(0) / rref)));
            });
        }
        for (int l = 1; l <= 2; ++l)
            for (int n = -n_max; n <= n_max; ++n) {
                s.eigenvalues.emplace_back(-2.0 * l * m->delta, n * w0);
                s.indices.push_back(n);
            }
        s.notes = "l = 0 branch first (O(eps^4) accurate), then l = 1, 2 (O(eps^2))";
        return s;
    }
    if (auto* m = std::get_if<VanDerPol>(&model)) {
        s.eigenvalues = van_der_pol_lattice(m->mu, kVanDerPolOmega0, n_max);
        for (int rep = 0; rep < 2; ++rep)
            for (int k = -n_max; k <= n_max; ++k) s.indices.push_back(k);
        s.notes = "lattice {i k w0, -mu + i k w0}, w0 = 0.9944151 (series value " +
                  std::to_string(van_der_pol_omega0_series(m->mu)) + ")";
        return s;
    }
    if (auto* m = std::get_if<LotkaVolterra>(&model)) {
        const bool stochastic = m->sigma1 != 0.0 || m->sigma2 != 0.0;
        Eigen::Vector2d e = m->equilibrium(stochastic);
        Eigen::EigenSolver<Eigen::Matrix2d> es(m->jacobian_at(e));
        cplx a = es.eigenvalues()(0), b = es.eigenvalues()(1);
        if (a.imag() < b.imag()) std::swap(a, b);
        s.eigenvalues = {a, b};
        s.indices = {1, -1};
        s.notes = stochastic ? "Jacobian eigenvalues at the noise-shifted equilibrium"
                             : "Jacobian eigenvalues at the interior equilibrium";
        return s;
    }
    throw Unsupported("sde_spectra: no closed form for " + kind_name(kind_of(model)));
}

Mat kolmogorov_fd_matrix(const std::function<double(double)>& drift_fn,
                         const std::function<double(double)>& sigma_fn, double lo, double hi,
                         int grid_n, Boundary boundary) {
    require(grid_n >= 3, "kolmogorov_fd_matrix: grid_n must be >= 3");
    require(hi > lo, "kolmogorov_fd_matrix: empty interval");
    const double h = (hi - lo) / (grid_n - 1);
    Mat L = Mat::Zero(grid_n, grid_n);
    for (int i = 0; i < grid_n; ++i) {
        const double x = lo + i * h;
        const double G = drift_fn(x);
        const double s = sigma_fn(x);
        const double d = 0.5 * s * s / (h * h);
        const double c = G / (2.0 * h);
        L(i, i) = -2.0 * d;
        if (i == 0 || i == grid_n - 1) {
            if (boundary == Boundary::reflecting) {
                // ghost node mirrors the interior neighbour
                L(i, i == 0 ? 1 : grid_n - 2) = 2.0 * d;
            } else {
                if (i == 0) L(i, 1) = d + c;
                else L(i, grid_n - 2) = d - c;
            }
        } else {
            L(i, i - 1) = d - c;
            L(i, i + 1) = d + c;
        }
    }
    return L;
}

namespace {

std::vector<cplx> leading_eigs(const Mat& L, int k) {
    const Eigen::Index n = L.rows();
    bool symmetrizable = true;
    for (Eigen::Index i = 0; i + 1 < n; ++i)
        if (!(L(i, i + 1) * L(i + 1, i) > 0.0)) symmetrizable = false;
    std::vector<cplx> ev;
    if (symmetrizable) {
        Vec diag = L.diagonal();
        Vec sub(n - 1);
        for (Eigen::Index i = 0; i + 1 < n; ++i) sub(i) = std::sqrt(L(i, i + 1) * L(i + 1, i));
        Eigen::SelfAdjointEigenSolver<Mat> es;
        es.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw NumericalError("fd spectrum: eigensolver failed");
        for (Eigen::Index i = 0; i < n; ++i) ev.emplace_back(es.eigenvalues()(i), 0.0);
    } else {
        Eigen::EigenSolver<Mat> es(L, false);
        if (es.info() != Eigen::Success) throw NumericalError("fd spectrum: eigensolver failed");
        for (Eigen::Index i = 0; i < n; ++i) ev.push_back(es.eigenvalues()(i));
    }
    std::stable_sort(ev.begin(), ev.end(), [](cplx a, cplx b) {
        if (a.real() != b.real()) return a.real() > b.real();
        return a.imag() > b.imag();
    });
    if (static_cast<int>(ev.size()) > k) ev.resize(static_cast<std::size_t>(k));
    return ev;
}

} // namespace

FdSpectrum kolmogorov_fd_spectrum(const std::function<double(double)>& drift_fn,
                                  const std::function<double(double)>& sigma_fn, double lo,
                                  double hi, int grid_n, int k_eigs, Boundary boundary,
                                  bool check_grid) {
    require(grid_n >= 200, "kolmogorov_fd_spectrum: grid_n must be >= 200");
    require(k_eigs >= 1 && k_eigs <= grid_n, "kolmogorov_fd_spectrum: bad k_eigs");
    FdSpectrum out;
    out.spectrum.scale = TimeScale::continuous;
    out.spectrum.eigenvalues =
        leading_eigs(kolmogorov_fd_matrix(drift_fn, sigma_fn, lo, hi, grid_n, boundary), k_eigs);
    for (int i = 0; i < static_cast<int>(out.spectrum.eigenvalues.size()); ++i)
        out.spectrum.indices.push_back(i);
    out.spectrum.notes = boundary == Boundary::reflecting ? "central differences, reflecting ends"
                                                          : "central differences, absorbing ends";
    if (check_grid) {
        auto fine = leading_eigs(
            kolmogorov_fd_matrix(drift_fn, sigma_fn, lo, hi, 2 * grid_n - 1, boundary), k_eigs);
        double scale = 0.0;
        for (auto z : out.spectrum.eigenvalues) scale = std::max(scale, std::abs(z));
        double worst = 0.0;
        for (std::size_t i = 0; i < std::min(fine.size(), out.spectrum.eigenvalues.size()); ++i) {
            double ref = std::max(std::abs(out.spectrum.eigenvalues[i]), 1e-3 * scale);
            if (ref > 0.0)
                worst = std::max(worst, std::abs(fine[i] - out.spectrum.eigenvalues[i]) / ref);
        }
        out.max_relative_shift = worst;
        out.grid_converged = worst <= 0.01;
    }
    return out;
}

PropertyCheck generator_product_property_check(cplx l1, const EigenfunctionWithGradient& phi1,
                                               cplx l2, const EigenfunctionWithGradient& phi2,
                                               const ModelSpec& model,
                                               const std::vector<State>& samples, double tol) {
    auto* m = std::get_if<SwitchingLinear>(&model);
    if (m == nullptr)
        throw Unsupported("product property: " + kind_name(kind_of(model)) + " is not a linear RDE");
    require(!samples.empty(), "product property: no sample points");
    const double ahat = m->p1 * m->a1 + (1.0 - m->p1) * m->a2;
    PropertyCheck out;
    for (const State& x : samples) {
        Eigen::Vector2cd F(ahat * x(0) + x(1), -m->b * m->b * x(0) + ahat * x(1));
        cplx v1 = phi1.value(x), v2 = phi2.value(x);
        CVec g = v1 * phi2.gradient(x) + v2 * phi1.gradient(x);
        cplx lhs = F.cwiseProduct(g).sum();
        cplx rhs = (l1 + l2) * v1 * v2;
        out.max_deviation = std::max(out.max_deviation, std::abs(lhs - rhs));
    }
    out.holds = out.max_deviation <= tol;
    return out;
}

std::vector<std::pair<cplx, EigenfunctionWithGradient>> linear_rde_principal_eigenfunctions(
    const SwitchingLinear& m) {
    const double ahat = m.p1 * m.a1 + (1.0 - m.p1) * m.a2;
    Eigen::Matrix2d EA;
    EA << ahat, 1.0, -m.b * m.b, ahat;
    Eigen::EigenSolver<Eigen::Matrix2d> es(EA.transpose());
    std::vector<std::pair<cplx, EigenfunctionWithGradient>> out;
    for (int j = 0; j < 2; ++j) {
        Eigen::Vector2cd w = es.eigenvectors().col(j);
        EigenfunctionWithGradient f;
        f.value = [w](const State& x) { return w(0) * x(0) + w(1) * x(1); };
        f.gradient = [w](const State&) { return CVec(w); };
        out.emplace_back(es.eigenvalues()(j), f);
    }
    return out;
}

std::vector<cplx> linear_sde_mean_factors(const Eigen::Matrix2d& A, double t) {
    Eigen::EigenSolver<Eigen::Matrix2d> es(A);
    return {std::exp(es.eigenvalues()(0) * t), std::exp(es.eigenvalues()(1) * t)};
}

} // namespace krds
