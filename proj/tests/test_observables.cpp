#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "krds/observables.hpp"

using namespace krds;

TEST(Observables, FourierAtZero) {
    ObservableSet o;
    o.kind = ObservableKind::fourier_circle;
    o.n1 = 1;
    auto v = evaluate(o, make_state({0.0}));
    ASSERT_EQ(v.size(), 2);
    EXPECT_EQ(v(0), cplx(1.0, 0.0));
    EXPECT_EQ(v(1), cplx(0.0, 0.0));
}

TEST(Observables, FourierPeriodic) {
    ObservableSet o;
    o.kind = ObservableKind::fourier_circle;
    o.n1 = 5;
    auto a = evaluate(o, make_state({0.137}));
    auto b = evaluate(o, make_state({1.137}));
    EXPECT_LT((a - b).norm(), 1e-12);
    EXPECT_EQ(o.size(), 10);
}

TEST(Observables, Monomials) {
    ObservableSet o;
    o.kind = ObservableKind::monomials;
    o.max_degree = 3;
    auto v = evaluate(o, make_state({2.0}));
    ASSERT_EQ(v.size(), 3);
    EXPECT_EQ(v(0), cplx(2.0));
    EXPECT_EQ(v(1), cplx(4.0));
    EXPECT_EQ(v(2), cplx(8.0));
}

TEST(Observables, Hermite) {
    EXPECT_DOUBLE_EQ(hermite(0, 0.7), 1.0);
    EXPECT_DOUBLE_EQ(hermite(1, 0.7), 1.4);
    EXPECT_NEAR(hermite(2, 0.7), 4 * 0.49 - 2, 1e-14);
    EXPECT_NEAR(hermite(3, 0.7), 8 * 0.343 - 12 * 0.7, 1e-14);
    EXPECT_NEAR(hermite(5, 1.3), 32 * std::pow(1.3, 5) - 160 * std::pow(1.3, 3) + 120 * 1.3, 1e-10);
}

TEST(Observables, StuartLandauModeOnCycle) {
    ObservableSet o;
    o.kind = ObservableKind::stuart_landau_modes;
    o.K = 1;
    o.beta = 1.0;
    o.delta = 0.5;
    auto v = evaluate(o, make_state({std::sqrt(0.5), 0.0}));
    ASSERT_EQ(v.size(), 2); // k = -1, +1
    EXPECT_NEAR(std::abs(v(1) - cplx(1.0, 0.0)), 0.0, 1e-15);
    o.radius_ref = RadiusRef::delta;
    auto w = evaluate(o, make_state({0.5, 0.0}));
    EXPECT_NEAR(std::abs(w(1) - cplx(1.0, 0.0)), 0.0, 1e-15);
}

TEST(Observables, StuartLandauSumIsRealCombination) {
    ObservableSet modes;
    modes.kind = ObservableKind::stuart_landau_modes;
    modes.K = 3;
    ObservableSet sum = modes;
    sum.kind = ObservableKind::stuart_landau_sum;
    State x = make_state({0.8, 1.1});
    auto m = evaluate(modes, x);
    auto s = evaluate(sum, x);
    ASSERT_EQ(s.size(), 1);
    EXPECT_NEAR(std::abs(s(0) - m.sum()), 0.0, 1e-13);
    EXPECT_NEAR(s(0).imag(), 0.0, 1e-13);
}

TEST(Observables, ScalarCombos) {
    ObservableSet v;
    v.kind = ObservableKind::van_der_pol_combo;
    EXPECT_NEAR(evaluate(v, make_state({3.0, 4.0}))(0).real(), 12.0, 1e-14);
    ObservableSet s;
    s.kind = ObservableKind::state_sum;
    EXPECT_EQ(evaluate(s, make_state({3.0, 4.0}))(0), cplx(7.0));
}

TEST(Observables, PitchforkAndOuFamilies) {
    ObservableSet p;
    p.kind = ObservableKind::pitchfork_eigenfunctions;
    p.min_degree = 0;
    p.max_degree = 2;
    p.mu = -0.5;
    auto v = evaluate(p, make_state({0.5}));
    ASSERT_EQ(v.size(), 3);
    EXPECT_EQ(v(0), cplx(1.0));
    EXPECT_NEAR(v(1).real(), 0.5 / std::sqrt(0.75), 1e-15);
    ObservableSet o;
    o.kind = ObservableKind::ou_eigenfunctions;
    o.min_degree = 2;
    o.max_degree = 2;
    o.alpha = 3.0;
    EXPECT_NEAR(evaluate(o, make_state({0.2}))(0).real(), hermite(2, 0.6), 1e-14);
}

TEST(Observables, EvaluateAlongAndValidation) {
    ObservableSet o;
    o.kind = ObservableKind::full_state;
    o.dim = 2;
    Trajectory t;
    t.times = {0.0, 1.0};
    t.states = Mat(2, 2);
    t.states << 1, 2, 3, 4;
    auto M = evaluate_along(o, t);
    EXPECT_EQ(M.rows(), 2);
    EXPECT_EQ(M(1, 0), cplx(3.0));
    ObservableSet bad;
    bad.kind = ObservableKind::monomials;
    bad.min_degree = 3;
    bad.max_degree = 2;
    EXPECT_THROW(bad.validate(), InvalidArgument);
    EXPECT_THROW(evaluate(o, make_state({1.0})), InvalidArgument);
}

TEST(Observables, JsonRoundTrip) {
    ObservableSet o;
    o.kind = ObservableKind::stuart_landau_sum;
    o.K = 4;
    o.radius_ref = RadiusRef::delta;
    auto j = observable_to_json(o);
    EXPECT_EQ(observable_to_json(observable_from_json(j)), j);
    EXPECT_THROW(observable_from_json({{"kind", "bogus"}}), InvalidArgument);
}
