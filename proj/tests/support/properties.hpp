#pragma once

// Property computations shared by the unit tests and the acceptance binary.
// Each returns the measured quantity; callers compare against their bounds.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "krds/dmd.hpp"
#include "krds/experiments.hpp"
#include "krds/integrators.hpp"
#include "krds/noise.hpp"
#include "krds/oracle.hpp"

namespace krds::props {

inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
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

inline Mat random_matrix(RngStream& rng, int r, int c) {
    Mat A(r, c);
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j) A(i, j) = rng.normal();
    return A;
}

inline std::vector<cplx> eig_values(const Mat& K) {
    Eigen::EigenSolver<Mat> es(K, false);
    std::vector<cplx> v;
    for (Eigen::Index i = 0; i < K.rows(); ++i) v.push_back(es.eigenvalues()(i));
    return v;
}

// Y = K X for random K (n x n) and X (n x m); worst matched eigenvalue error over trials.
inline double dmd_oracle_equivalence(std::uint64_t seed, int trials = 20) {
    double worst = 0.0;
    for (int t = 0; t < trials; ++t) {
        RngStream rng(seed, static_cast<std::uint64_t>(t));
        const int n = 2 + t % 5;
        const int m = 4 * n + t;
        Mat K = random_matrix(rng, n, n) / std::sqrt(static_cast<double>(n));
        Mat X = random_matrix(rng, n, m);
        SnapshotMatrices s{X.cast<cplx>(), (K * X).cast<cplx>(), Layout::time_delayed, 1.0};
        DmdResult r = dmd_rrr(s);
        auto mt = match_eigenvalues(r.eigenvalues(), eig_values(K));
        worst = std::max(worst, mt.unmatched_reference.empty() ? mt.linf : 1e300);
    }
    return worst;
}

inline SnapshotMatrices noisy_linear_data(std::uint64_t seed, int n, int m, double noise) {
    RngStream rng(seed, 99);
    Mat K = random_matrix(rng, n, n) / std::sqrt(static_cast<double>(n));
    Mat X = random_matrix(rng, n, m);
    Mat Y = K * X + noise * random_matrix(rng, n, m);
    return {X.cast<cplx>(), Y.cast<cplx>(), Layout::time_delayed, 1.0};
}

// |reported residual - recomputed residual| over all pairs, both frames.
inline double residual_identity(std::uint64_t seed) {
    double worst = 0.0;
    for (bool scale : {true, false}) {
        DmdOptions o;
        o.scale_columns = scale;
        auto s = noisy_linear_data(seed, 6, 40, 0.1);
        DmdResult r = dmd_rrr(s, o);
        for (const auto& p : r.pairs)
            worst = std::max(worst, std::abs(ritz_residual(s, o, p.lambda, p.ritz_vector) - p.residual));
    }
    return worst;
}

// Joint positive column scaling of X and Y leaves the retained eigenvalues unchanged.
inline double scaling_invariance(std::uint64_t seed) {
    auto s = noisy_linear_data(seed, 5, 30, 0.05);
    RngStream rng(seed, 100);
    SnapshotMatrices t = s;
    for (Eigen::Index j = 0; j < s.X.cols(); ++j) {
        double d = std::exp(3.0 * (rng.uniform() - 0.5));
        t.X.col(j) *= d;
        t.Y.col(j) *= d;
    }
    auto a = dmd_rrr(s).eigenvalues();
    auto b = dmd_rrr(t).eigenvalues();
    if (a.size() != b.size()) return 1e300;
    auto mt = match_eigenvalues(b, a);
    return mt.linf;
}

struct StrongOrder {
    double em_slope = 0.0;
    double srk_slope = 0.0;
    std::vector<double> hs, em_err, srk_err;
};

// RMS endpoint error against a fine-step SRK reference driven by the same
// Brownian path, for multiplicative diagonal noise (stochastic Lotka-Volterra).
inline StrongOrder strong_order(std::uint64_t seed, int paths = 200) {
    LotkaVolterra lv;
    lv.sigma1 = 0.3;
    lv.sigma2 = 0.3;
    const State x0 = make_state({4.0, 2.0});
    const double T = 1.0;
    const int fine = 1 << 12;
    const double hf = T / fine;
    const std::vector<int> levels = {4, 5, 6, 7, 8};
    StrongOrder out;
    std::vector<double> se(levels.size(), 0.0), ss(levels.size(), 0.0);
    for (int p = 0; p < paths; ++p) {
        RngStream rng(seed, static_cast<std::uint64_t>(p));
        auto inc = gaussian_increments(rng, 2, fine, hf);
        State ref = integrate_with_increments(lv, x0, hf, inc.increments, Scheme::srk);
        for (std::size_t l = 0; l < levels.size(); ++l) {
            const int n = 1 << levels[l];
            const int agg = fine / n;
            Mat dW = Mat::Zero(2, n);
            for (int k = 0; k < n; ++k) dW.col(k) = inc.increments.middleCols(k * agg, agg).rowwise().sum();
            State em = integrate_with_increments(lv, x0, T / n, dW, Scheme::euler_maruyama);
            State sr = integrate_with_increments(lv, x0, T / n, dW, Scheme::srk);
            se[l] += (em - ref).squaredNorm();
            ss[l] += (sr - ref).squaredNorm();
        }
    }
    for (std::size_t l = 0; l < levels.size(); ++l) {
        out.hs.push_back(T / (1 << levels[l]));
        out.em_err.push_back(std::sqrt(se[l] / paths));
        out.srk_err.push_back(std::sqrt(ss[l] / paths));
    }
    out.em_slope = loglog_slope(out.hs, out.em_err);
    out.srk_slope = loglog_slope(out.hs, out.srk_err);
    return out;
}

// Max interior error of the FD generator applied to f = sin(2x) for OU-type
// drift against the analytic G f' + sigma^2 f'' / 2, under grid refinement.
inline double fd_convergence_slope() {
    const double mu = -0.5, s = 0.4, lo = -2.0, hi = 2.0;
    auto G = [mu](double x) { return mu * x - 0.2 * x * x * x; };
    auto S = [s](double) { return s; };
    std::vector<double> hs, errs;
    for (int n : {41, 81, 161, 321, 641}) {
        Mat L = kolmogorov_fd_matrix(G, S, lo, hi, n);
        const double h = (hi - lo) / (n - 1);
        Vec f(n);
        for (int i = 0; i < n; ++i) f(i) = std::sin(2.0 * (lo + i * h));
        Vec Lf = L * f;
        double err = 0.0;
        for (int i = 1; i < n - 1; ++i) {
            double x = lo + i * h;
            double exact = G(x) * 2.0 * std::cos(2.0 * x) - 0.5 * s * s * 4.0 * std::sin(2.0 * x);
            err = std::max(err, std::abs(Lf(i) - exact));
        }
        hs.push_back(h);
        errs.push_back(err);
    }
    return loglog_slope(hs, errs);
}

// Largest deviation of the product corollary over pairs of principal eigenfunctions
// of the switching RDE (and the constant eigenfunction) on a 10 x 10 grid.
inline double product_property_deviation() {
    std::vector<State> grid;
    for (int a = 0; a < 10; ++a)
        for (int b = 0; b < 10; ++b) grid.push_back(make_state({-1.0 + a * 2.0 / 9.0, -1.0 + b * 2.0 / 9.0}));
    double worst = 0.0;
    for (double p1 : {0.25, 0.5, 0.75}) {
        SwitchingLinear m;
        m.p1 = p1;
        m.switch_dt = std::numbers::pi / 30.0;
        auto ef = linear_rde_principal_eigenfunctions(m);
        EigenfunctionWithGradient one{[](const State&) { return cplx(1.0, 0.0); },
                                      [](const State& x) { return CVec(CVec::Zero(x.size())); }};
        ef.emplace_back(cplx(0.0, 0.0), one);
        for (std::size_t i = 0; i < ef.size(); ++i)
            for (std::size_t j = i; j < ef.size(); ++j) {
                auto pc = generator_product_property_check(ef[i].first, ef[i].second, ef[j].first,
                                                           ef[j].second, m, grid, 1e-10);
                worst = std::max(worst, pc.max_deviation);
            }
    }
    return worst;
}

struct QuantizedRotation {
    double z_score = 0.0; // |MC - exact| / standard error, worst over j
    double exact_vs_continuum = 0.0;
};

// One-step expectation of e^{i 2 pi j x} under q-level quantized noise:
// enumeration vs Monte Carlo, and enumeration vs the continuum formula at large q.
inline QuantizedRotation quantized_rotation(std::uint64_t seed, int samples = 20000) {
    const double theta = std::numbers::pi / 320.0, delta = 0.01;
    QuantizedRotation out;
    const int q = 7;
    for (int j = 1; j <= 10; ++j) {
        cplx exact = rotation_quantized_eigenvalue(theta, delta, j, q);
        RngStream rng(seed, static_cast<std::uint64_t>(j));
        NoisyRotation rot{theta, delta};
        cplx sum = 0.0;
        double sum2 = 0.0;
        for (int s = 0; s < samples; ++s) {
            int l = static_cast<int>(rng.uniform() * q);
            double draw = -0.5 * delta + (l + 0.5) * delta / q;
            double y = rot.step(0.0, draw);
            cplx v = std::polar(1.0, 2.0 * std::numbers::pi * j * y);
            sum += v;
            sum2 += std::norm(v);
        }
        cplx mean = sum / static_cast<double>(samples);
        double var = (sum2 / samples - std::norm(mean)) * samples / (samples - 1.0);
        double se = std::sqrt(std::max(var, 1e-300) / samples);
        out.z_score = std::max(out.z_score, std::abs(mean - exact) / se);
        cplx cont = rotation_spectrum(theta, delta, j).eigenvalues.back();
        out.exact_vs_continuum =
            std::max(out.exact_vs_continuum, std::abs(rotation_quantized_eigenvalue(theta, delta, j, 4096) - cont));
    }
    return out;
}

} // namespace krds::props
