#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "krds/experiments.hpp"
#include "krds/pipeline.hpp"
#include "support/properties.hpp"

using namespace krds;

namespace {

ObservableSet full(int d) {
    ObservableSet o;
    o.kind = ObservableKind::full_state;
    o.dim = d;
    return o;
}

ObservableSet scalar(ObservableKind k) {
    ObservableSet o;
    o.kind = k;
    return o;
}

} // namespace

TEST(Pipeline, HankelFromSeries) {
    CVec s(6);
    s << 0, 1, 2, 3, 4, 5;
    auto H = hankel_from_series(s, 3, 4);
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 4; ++k) EXPECT_EQ(H(i, k), cplx(i + k));
    EXPECT_THROW(hankel_from_series(s, 4, 4), InvalidArgument);
}

TEST(Pipeline, EnsemblePairsDeterministicExact) {
    VanDerPol m{0.3, 0.0};
    StepConfig cfg{0.1, 10, Scheme::rk4};
    auto pts = initial_points_grid({-1.0, -1.0}, {1.0, 1.0}, 9);
    auto s = assemble_ensemble_pairs(m, pts, full(2), 3, cfg, 1, 1, 0);
    EXPECT_EQ(s.layout, Layout::ensemble_pairs);
    EXPECT_NEAR(s.dt, 0.3, 1e-15);
    for (int j = 0; j < 9; ++j) {
        auto t = integrate_rk4(m, pts[static_cast<std::size_t>(j)], 0.01, 30);
        EXPECT_LT((s.Y.col(j).real() - t.state(30)).norm(), 1e-13);
        EXPECT_LT((s.X.col(j).real() - pts[static_cast<std::size_t>(j)]).norm(), 1e-15);
    }
}

TEST(Pipeline, EnsemblePairsRejectsZeroLag) {
    auto pts = initial_points_grid({-1.0}, {1.0}, 5);
    StepConfig cfg{0.1, 1, Scheme::srk};
    EXPECT_THROW(assemble_ensemble_pairs(OuLinear{}, pts, full(1), 0, cfg, 10, 1, 0), InvalidArgument);
}

TEST(Pipeline, SharingChangesStreams) {
    auto pts = initial_points_grid({0.5}, {0.5 + 1e-9}, 2); // two (almost) identical points
    StepConfig cfg{0.1, 1, Scheme::srk};
    OuLinear m{-0.5, 0.5};
    auto c = assemble_ensemble_pairs(m, pts, full(1), 5, cfg, 3, 1, 0, NoiseSharing::common);
    auto i = assemble_ensemble_pairs(m, pts, full(1), 5, cfg, 3, 1, 0, NoiseSharing::independent);
    EXPECT_NEAR(std::abs(c.Y(0, 0) - c.Y(0, 1)), 0.0, 1e-8);
    EXPECT_GT(std::abs(i.Y(0, 0) - i.Y(0, 1)), 1e-3);
    EXPECT_EQ(c.Y(0, 0), i.Y(0, 0)); // point 0 uses base + p in both schedules
}

TEST(Pipeline, LagsShareOnePathSet) {
    auto pts = initial_points_grid({-1.0}, {1.0}, 4);
    StepConfig cfg{0.1, 1, Scheme::srk};
    OuLinear m{-0.5, 0.2};
    auto all = assemble_ensemble_pairs_lags(m, pts, full(1), {2, 5}, cfg, 4, 3, 0);
    auto five = assemble_ensemble_pairs(m, pts, full(1), 5, cfg, 4, 3, 0);
    EXPECT_LT((all[1].Y - five.Y).norm(), 1e-15);
    EXPECT_NEAR(all[0].dt, 0.2, 1e-15);
}

TEST(Pipeline, TimeDelayedDeterministicOrbit) {
    VanDerPol m{0.3, 0.0};
    StepConfig cfg{0.1, 20, Scheme::rk4};
    auto o = scalar(ObservableKind::van_der_pol_combo);
    auto s = assemble_time_delayed(m, make_state({2.0, 0.0}), o, 50, cfg, 1, 1, 0);
    auto t = integrate_rk4(m, make_state({2.0, 0.0}), 0.005, 51 * 20, 1);
    for (int k = 0; k < 50; ++k) {
        State x = t.state(k * 20);
        double f = x(0) + x(1) + x.norm();
        EXPECT_NEAR(s.X(0, k).real(), f, 1e-12);
        EXPECT_EQ(s.X(0, k + 1 < 50 ? k + 1 : 49), k + 1 < 50 ? s.Y(0, k) : s.X(0, 49));
    }
}

TEST(Pipeline, ConstantObservableGivesUnitEigenvalue) {
    ObservableSet o;
    o.kind = ObservableKind::monomials;
    o.min_degree = 0;
    o.max_degree = 0;
    StepConfig cfg{0.1, 1, Scheme::srk};
    auto s = assemble_time_delayed(OuLinear{}, make_state({1.0}), o, 20, cfg, 5, 1, 0);
    auto r = dmd_rrr(s);
    EXPECT_EQ(r.rank_r, 1);
    ASSERT_EQ(r.pairs.size(), 1u);
    EXPECT_NEAR(std::abs(r.pairs[0].lambda - 1.0), 0.0, 1e-14);
}

TEST(Pipeline, RotationSingleTrajectoryLayout) {
    NoisyRotation m{std::numbers::pi / 320.0, 0.01};
    ObservableSet o;
    o.kind = ObservableKind::fourier_circle;
    o.n1 = 2;
    StepConfig cfg{1.0, 1, Scheme::srk};
    auto s = assemble_time_delayed(m, make_state({0.0}), o, 100, cfg, 1, 4, 9);
    RngStream r(4, 9);
    auto t = integrate(m, make_state({0.0}), cfg, 100, r);
    for (int k = 0; k < 100; ++k) {
        EXPECT_LT((s.X.col(k) - evaluate(o, t.state(k))).norm(), 1e-14);
        EXPECT_LT((s.Y.col(k) - evaluate(o, t.state(k + 1))).norm(), 1e-14);
    }
}

TEST(Pipeline, HankelDeterministicCollapse) {
    LotkaVolterra m;
    StepConfig cfg{0.5, 50, Scheme::rk4};
    HankelSpec hs;
    hs.n_rows = 6;
    hs.m_cols = 4;
    hs.observable = scalar(ObservableKind::state_sum);
    for (auto mode : {HankelMode::averaged_trajectory, HankelMode::pilot_continuation}) {
        hs.mode = mode;
        auto s = assemble_stochastic_hankel(m, make_state({4.0, 2.0}), hs, cfg, 1, 0);
        auto t = integrate_rk4(m, make_state({4.0, 2.0}), 0.01, 10 * 50);
        for (int i = 0; i < 6; ++i)
            for (int k = 0; k < 4; ++k) {
                State x = t.state((i + k) * 50);
                EXPECT_NEAR(s.X(i, k).real(), x.sum(), 1e-9);
                State y = t.state((i + k + 1) * 50);
                EXPECT_NEAR(s.Y(i, k).real(), y.sum(), 1e-9);
            }
    }
}

TEST(Pipeline, HankelSpecValidation) {
    HankelSpec hs;
    hs.n_rows = 3;
    hs.m_cols = 5;
    hs.observable = full(2);
    EXPECT_THROW(hs.validate(), InvalidArgument); // vector observable
    hs.observable = scalar(ObservableKind::state_sum);
    EXPECT_NO_THROW(hs.validate());
    EXPECT_FALSE(hs.recommended_shape());
    hs.averaging_N = 0;
    EXPECT_THROW(hs.validate(), InvalidArgument);
}

TEST(Pipeline, StandardErrorScaling) {
    OuLinear m{-0.5, 0.3};
    StepConfig cfg{0.1, 1, Scheme::srk};
    ObservableSet o = full(1);
    std::vector<double> Ns, se;
    for (int N : {100, 1000, 10000}) {
        auto e = estimate_time_expectation(m, make_state({1.0}), o, 6, cfg, N, 2, 0);
        EXPECT_EQ(e.n_samples, N);
        Ns.push_back(N);
        se.push_back(e.standard_error(0, 5));
    }
    EXPECT_NEAR(props::loglog_slope(Ns, se), -0.5, 0.15);
}

TEST(Pipeline, OuMeanWithinStandardError) {
    OuLinear m{-0.5, 0.3};
    StepConfig cfg{0.1, 2, Scheme::srk};
    auto e = estimate_time_expectation(m, make_state({1.0}), full(1), 11, cfg, 4000, 2, 0);
    EXPECT_LT(std::abs(e.values(0, 10).real() - std::exp(-0.5)), 3.0 * e.standard_error(0, 10) + 1e-4);
}

TEST(Pipeline, ErgodicGramOfRotation) {
    NoisyRotation m{std::numbers::pi / 320.0, 0.01};
    ObservableSet o;
    o.kind = ObservableKind::fourier_circle;
    o.n1 = 3;
    StepConfig cfg{1.0, 1, Scheme::srk};
    RngStream r(1, 0);
    auto t = integrate(m, make_state({0.0}), cfg, 10000, r);
    CMat F = evaluate_along(o, t) * std::sqrt(2.0);
    CMat G = F * F.adjoint() / static_cast<double>(F.cols());
    EXPECT_LT((G - CMat::Identity(6, 6)).cwiseAbs().maxCoeff(), 5e-2);
}

TEST(Pipeline, RenormalizedPairsRecoverMeanMap) {
    DiscreteLinear m;
    RngStream r(1, 0);
    StepConfig cfg{1.0, 1, Scheme::srk};
    auto s = assemble_renormalized_pairs(m, make_state({0.3, 0.7}), 20000, cfg, r);
    for (Eigen::Index k = 0; k < s.X.cols(); ++k) EXPECT_NEAR(s.X.col(k).norm(), 1.0, 1e-12);
    auto ev = dmd_rrr(s).eigenvalues();
    auto mt = match_eigenvalues(ev, {cplx(0.0, 1.25), cplx(0.0, -1.25)});
    EXPECT_LT(mt.linf, 2e-2);
}

TEST(Pipeline, InitialPoints) {
    auto g = initial_points_grid({0.0, 0.0}, {1.0, 1.0}, 16);
    ASSERT_EQ(g.size(), 16u);
    EXPECT_EQ(g.back(), make_state({1.0, 1.0}));
    EXPECT_THROW(initial_points_grid({0.0, 0.0}, {1.0, 1.0}, 15), InvalidArgument);
    RngStream r(1, 0);
    auto u = initial_points_random({0.0, 0.0}, {1.0, 1.0}, 1000, r);
    for (const auto& p : u) {
        EXPECT_GE(p.minCoeff(), 0.0);
        EXPECT_LT(p.maxCoeff(), 1.0);
    }
}
