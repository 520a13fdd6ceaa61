#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "krds/integrators.hpp"
#include "support/properties.hpp"

using namespace krds;

TEST(Integrators, EulerOuDeterministic) {
    RngStream r(1, 0);
    auto t = integrate_em(OuLinear{-0.5, 0.0}, make_state({1.0}), 1e-3, 2000, r);
    EXPECT_NEAR(t.states(0, t.size() - 1), std::exp(-1.0), 2e-3);
}

TEST(Integrators, ZeroStepsIsIdentity) {
    RngStream r(1, 0);
    auto t = integrate_srk(VanDerPol{0.3, 0.005}, make_state({1.0, 2.0}), 0.01, 0, r);
    ASSERT_EQ(t.size(), 1);
    EXPECT_EQ(t.state(0), make_state({1.0, 2.0}));
    EXPECT_EQ(t.times.size(), 1u);
}

TEST(Integrators, TimeGrid) {
    RngStream r(1, 0);
    auto t = integrate_srk(OuLinear{}, make_state({1.0}), 0.05, 200, r, 4);
    ASSERT_EQ(t.times.size(), static_cast<std::size_t>(t.size()));
    for (std::size_t k = 1; k < t.times.size(); ++k)
        EXPECT_NEAR(t.times[k] - t.times[k - 1], 0.05, 0.05 * 1e-12);
}

TEST(Integrators, RejectsBadStep) {
    RngStream r(1, 0);
    EXPECT_THROW(integrate_srk(OuLinear{}, make_state({1.0}), 0.0, 10, r), InvalidArgument);
    EXPECT_THROW(integrate_em(OuLinear{}, make_state({1.0}), -0.1, 10, r), InvalidArgument);
    EXPECT_THROW(integrate_rk4(OuLinear{-0.5, 0.1}, make_state({1.0}), 0.1, 10), InvalidArgument);
}

TEST(Integrators, SrkMatchesRk4WithoutNoise) {
    RngStream r(1, 0);
    VanDerPol m{0.3, 0.0};
    const double period = 2.0 * std::numbers::pi / 0.9944151;
    const int n = static_cast<int>(period / 1e-3);
    auto a = integrate_srk(m, make_state({2.0, 0.0}), 1e-3, n, r);
    auto b = integrate_rk4(m, make_state({2.0, 0.0}), 1e-3, n, 10);
    EXPECT_LT((a.state(a.size() - 1) - b.state(b.size() - 1)).norm(), 1e-5);
}

TEST(Integrators, OuEnsembleMean) {
    OuLinear m{-0.5, 0.001};
    StepConfig cfg{0.01, 1, Scheme::srk};
    auto e = run_ensemble(m, make_state({1.0}), cfg, 100, 10000, 1, 0);
    double s = 0.0, s2 = 0.0;
    for (const auto& t : e.members) {
        double x = t.states(0, t.size() - 1);
        s += x;
        s2 += x * x;
    }
    const double n = 10000.0;
    double mean = s / n, sd = std::sqrt(s2 / n - mean * mean);
    EXPECT_LT(std::abs(mean - std::exp(-0.5)), 3.0 * sd / std::sqrt(n) + 1e-6);
}

TEST(Integrators, EnsembleDeterministicAndMatchesSingle) {
    OuLinear m{-0.5, 0.1};
    StepConfig cfg{0.01, 2, Scheme::srk};
    auto a = run_ensemble(m, make_state({1.0}), cfg, 50, 3, 11, 5);
    auto b = run_ensemble(m, make_state({1.0}), cfg, 50, 3, 11, 5);
    for (int k = 0; k < 3; ++k) EXPECT_EQ(a.members[k].states, b.members[k].states);
    RngStream r(11, 6);
    auto single = integrate(m, make_state({1.0}), cfg, 50, r);
    EXPECT_EQ(single.states, a.members[1].states);
    auto one = run_ensemble(m, make_state({1.0}), cfg, 50, 1, 11, 5);
    EXPECT_EQ(one.members[0].states, a.members[0].states);
}

TEST(Integrators, SwitchingAlwaysA1IsExact) {
    RngStream r(1, 0);
    const double pi = std::numbers::pi;
    auto t = integrate_switching_linear(-0.1, 0.1, 2.0, 1.0, pi / 30.0, make_state({1.0, 0.5}), pi / 60.0, 60, r);
    // x(t) = e^{-0.1 t} (cos 2t I + sin 2t / 2 B) x0, B = [[0, 1], [-4, 0]]
    const double T = pi, c = std::cos(2 * T), s = std::sin(2 * T) / 2.0, g = std::exp(-0.1 * T);
    Eigen::Vector2d x0(1.0, 0.5);
    Eigen::Matrix2d M;
    M << c, s, -4.0 * s, c;
    Eigen::Vector2d expect = g * M * x0;
    EXPECT_NEAR(t.states(0, 60), expect(0), 1e-10);
    EXPECT_NEAR(t.states(1, 60), expect(1), 1e-10);
}

TEST(Integrators, SwitchingRequiresCommensurateStep) {
    RngStream r(1, 0);
    const double pi = std::numbers::pi;
    EXPECT_THROW(integrate_switching_linear(-0.1, 0.1, 2.0, 0.5, pi / 30.0, make_state({1.0, 0.0}), 0.07, 10, r),
                 InvalidArgument);
}

TEST(Integrators, SwitchingMeanNormBounded) {
    const double pi = std::numbers::pi;
    SwitchingLinear m;
    m.switch_dt = pi / 30.0;
    StepConfig cfg{pi / 60.0, 1, Scheme::srk};
    const int n = static_cast<int>(10.0 / cfg.dt);
    auto e = run_ensemble(m, make_state({1.0, 0.0}), cfg, n, 2000, 3, 0);
    for (int k = 0; k <= n; k += 10) {
        double s = 0.0;
        for (const auto& t : e.members) s += t.states.col(k).norm();
        EXPECT_LT(s / 2000.0, 10.0);
    }
}

TEST(Integrators, LotkaVolterraStaysInQuadrant) {
    LotkaVolterra m;
    m.sigma1 = m.sigma2 = 0.05;
    StepConfig cfg{0.05, 5, Scheme::srk};
    auto e = run_ensemble(m, make_state({4.0, 2.0}), cfg, 400, 50, 1, 0);
    for (const auto& t : e.members) EXPECT_GE(t.states.minCoeff(), 0.0);
}

TEST(Integrators, DivergenceReported) {
    // x' = mu x - x^3 from a huge start overflows with an oversized step.
    RngStream r(1, 0);
    try {
        integrate_em(Pitchfork{-0.5, 0.001}, make_state({1e6}), 1.0, 10, r);
        FAIL() << "expected divergence";
    } catch (const IntegrationDiverged& d) {
        EXPECT_GE(d.step, 0);
    }
}

TEST(Integrators, StrongOrder) {
    auto so = props::strong_order(7, 100);
    EXPECT_NEAR(so.em_slope, 0.5, 0.2);
    EXPECT_NEAR(so.srk_slope, 1.0, 0.2);
    for (std::size_t i = 0; i < so.hs.size(); ++i) EXPECT_LT(so.srk_err[i], so.em_err[i]);
}

TEST(Integrators, ZeroNoiseMatchesDeterministicSolver) {
    RngStream r(1, 0);
    LotkaVolterra lv;
    auto a = integrate_srk(lv, make_state({4.0, 2.0}), 0.01, 500, r);
    auto b = integrate_rk4(lv, make_state({4.0, 2.0}), 0.01, 500, 10);
    EXPECT_LT((a.states - b.states).cwiseAbs().maxCoeff(), 1e-4);
}
