#include <gtest/gtest.h>

#include <cmath>

#include "krds/dmd.hpp"
#include "krds/experiments.hpp"
#include "support/properties.hpp"

using namespace krds;

namespace {

SnapshotMatrices pair_of(const Mat& X, const Mat& Y, Layout l = Layout::time_delayed) {
    return {X.cast<cplx>(), Y.cast<cplx>(), l, 1.0};
}

} // namespace

TEST(Dmd, Identity) {
    Mat I = Mat::Identity(3, 3);
    auto r = dmd_rrr(pair_of(I, I));
    ASSERT_EQ(r.pairs.size(), 3u);
    for (const auto& p : r.pairs) {
        EXPECT_NEAR(std::abs(p.lambda - 1.0), 0.0, 1e-14);
        EXPECT_LT(p.residual, 1e-14);
    }
}

TEST(Dmd, ScalarOperator) {
    RngStream rng(3, 0);
    Mat X = props::random_matrix(rng, 4, 10);
    auto r = dmd_rrr(pair_of(X, 2.0 * X));
    for (const auto& p : r.pairs) {
        EXPECT_NEAR(std::abs(p.lambda - 2.0), 0.0, 1e-12);
        EXPECT_LE(p.residual, 1e-12);
    }
}

TEST(Dmd, OracleEquivalence) { EXPECT_LT(props::dmd_oracle_equivalence(11), 1e-8); }

TEST(Dmd, ResidualIdentity) { EXPECT_LT(props::residual_identity(11), 1e-10); }

TEST(Dmd, ScalingInvariance) { EXPECT_LT(props::scaling_invariance(11), 1e-8); }

TEST(Dmd, RitzVectorsUnitNorm) {
    auto s = props::noisy_linear_data(5, 6, 30, 0.1);
    auto r = dmd_rrr(s);
    for (const auto& p : r.pairs) EXPECT_NEAR(p.ritz_vector.norm(), 1.0, 1e-12);
}

TEST(Dmd, SortedByResidual) {
    auto s = props::noisy_linear_data(5, 6, 30, 0.3);
    auto r = dmd_rrr(s);
    for (std::size_t i = 1; i < r.pairs.size(); ++i) EXPECT_LE(r.pairs[i - 1].residual, r.pairs[i].residual);
}

TEST(Dmd, ThresholdSplitsPairs) {
    auto s = props::noisy_linear_data(5, 6, 30, 0.3);
    DmdOptions o;
    auto all = dmd_rrr(s, o);
    ASSERT_GE(all.pairs.size(), 2u);
    o.residual_threshold = 0.5 * (all.pairs.front().residual + all.pairs.back().residual);
    auto r = dmd_rrr(s, o);
    EXPECT_EQ(r.pairs.size() + r.rejected.size(), all.pairs.size());
    for (const auto& p : r.pairs) EXPECT_LE(p.residual, o.residual_threshold);
    for (const auto& p : r.rejected) EXPECT_GT(p.residual, o.residual_threshold);
}

TEST(Dmd, TruncationRankAndMonotonicity) {
    RngStream rng(8, 0);
    Mat A = props::random_matrix(rng, 8, 3), B = props::random_matrix(rng, 3, 20);
    Mat X = A * B; // rank 3
    Mat Y = props::random_matrix(rng, 8, 20);
    int prev = 0;
    for (double eps : {1e-2, 1e-6, 1e-10, 1e-14}) {
        DmdOptions o;
        o.eps = eps;
        o.scale_columns = false;
        auto r = dmd_rrr(pair_of(X, Y), o);
        EXPECT_GE(r.rank_r, prev);
        prev = r.rank_r;
        int expect = 0;
        for (double s : r.singular_values)
            if (s >= r.singular_values.front() * eps) ++expect;
        EXPECT_EQ(r.rank_r, expect);
    }
    DmdOptions o;
    o.eps = 1e-10;
    EXPECT_EQ(dmd_rrr(pair_of(X, Y), o).rank_r, 3);
}

TEST(Dmd, ZeroColumnsFlagged) {
    RngStream rng(8, 1);
    Mat X = props::random_matrix(rng, 3, 6);
    X.col(2).setZero();
    Mat Y = 0.5 * X;
    auto r = dmd_rrr(pair_of(X, Y));
    ASSERT_EQ(r.zero_columns.size(), 1u);
    EXPECT_EQ(r.zero_columns[0], 2);
}

TEST(Dmd, Errors) {
    Mat Z = Mat::Zero(3, 4);
    EXPECT_THROW(dmd_rrr(pair_of(Z, Z)), DegenerateData);
    Mat X = Mat::Ones(3, 4);
    EXPECT_THROW(dmd_rrr(pair_of(X, Mat::Ones(3, 5))), InvalidArgument);
    Mat N = X;
    N(0, 0) = std::nan("");
    EXPECT_THROW(dmd_rrr(pair_of(N, X)), InvalidArgument);
    DmdOptions bad;
    bad.eps = 1.5;
    EXPECT_THROW(dmd_rrr(pair_of(X, X), bad), InvalidArgument);
    bad.eps = 1e-12;
    bad.residual_threshold = 0.0;
    EXPECT_THROW(dmd_rrr(pair_of(X, X), bad), InvalidArgument);
}

TEST(Dmd, ContinuousEigenvalues) {
    Mat X(1, 3), Y(1, 3);
    X << 1, 2, 3;
    Y = std::exp(-0.5 * 0.1) * X;
    SnapshotMatrices s{X.cast<cplx>(), Y.cast<cplx>(), Layout::time_delayed, 0.1};
    auto r = dmd_rrr(s);
    ASSERT_EQ(r.pairs.size(), 1u);
    EXPECT_NEAR(std::abs(r.pairs[0].continuous_lambda - cplx(-0.5, 0.0)), 0.0, 1e-12);
}

namespace {

// f_k = sum_j c_j lambda_j^k with three modes.
SnapshotMatrices krylov_hankel(int rows, int cols, const std::vector<cplx>& lam) {
    CVec series(rows + cols);
    for (int k = 0; k < rows + cols; ++k) {
        cplx v = 0.0;
        for (std::size_t j = 0; j < lam.size(); ++j) v += (1.0 + 0.3 * j) * std::pow(lam[j], k);
        series(k) = v;
    }
    CMat H(rows, cols + 1);
    for (int i = 0; i < rows; ++i)
        for (int k = 0; k <= cols; ++k) H(i, k) = series(i + k);
    return {H.leftCols(cols), H.rightCols(cols), Layout::hankel, 1.0};
}

} // namespace

TEST(CompanionDmd, KnownMatrix) {
    std::vector<cplx> lam = {0.9, cplx(0.6, 0.5), cplx(0.6, -0.5)};
    auto s = krylov_hankel(12, 3, lam);
    auto r = companion_dmd(s);
    auto mt = match_eigenvalues(r.eigenvalues(), lam);
    EXPECT_TRUE(mt.unmatched_reference.empty());
    EXPECT_LT(mt.linf, 1e-8);
}

TEST(CompanionDmd, NeedsTwoColumns) {
    Mat X(3, 1);
    X << 1, 0.7, 0.49;
    SnapshotMatrices s{X.cast<cplx>(), (0.7 * X).cast<cplx>(), Layout::hankel, 1.0};
    EXPECT_THROW(companion_dmd(s), InvalidArgument);
}

TEST(CompanionDmd, AgreesWithRrr) {
    std::vector<cplx> lam = {0.95, cplx(0.7, 0.4), cplx(0.7, -0.4), 0.3};
    auto s = krylov_hankel(30, 4, lam);
    auto a = companion_dmd(s).eigenvalues();
    auto b = dmd_rrr(s).eigenvalues();
    ASSERT_EQ(a.size(), b.size());
    EXPECT_LT(match_eigenvalues(b, a).linf, 1e-6);
}

TEST(CompanionDmd, RejectsRankDeficient) {
    std::vector<cplx> lam = {0.9, 0.5};
    auto s = krylov_hankel(10, 4, lam); // 4 columns, only 2 modes
    EXPECT_THROW(companion_dmd(s), DegenerateData);
    auto t = s;
    t.layout = Layout::time_delayed;
    EXPECT_THROW(companion_dmd(t), InvalidArgument);
}

TEST(EigenfunctionCoefficients, IdentityGivesConstant) {
    // Ensemble data of a one-observable identity map: phi is constant.
    Mat X(1, 4);
    X << 1, 1, 1, 1;
    SnapshotMatrices s{X.cast<cplx>(), X.cast<cplx>(), Layout::ensemble_pairs, 1.0};
    auto r = dmd_rrr(s);
    auto C = eigenfunction_coefficients(r, s);
    ASSERT_EQ(C.cols(), 1);
    EXPECT_NEAR(std::abs(C(0, 0)), 1.0, 1e-14);
    EXPECT_NEAR(std::abs(r.pairs[0].lambda - 1.0), 0.0, 1e-14);
}

TEST(EigenfunctionCoefficients, LeftVectorsGiveEigenfunctions) {
    // Y = K X; phi(x) = xi^H x must satisfy phi(Kx) = lambda phi(x).
    RngStream rng(4, 0);
    Mat K = props::random_matrix(rng, 3, 3) / 2.0;
    Mat X = props::random_matrix(rng, 3, 12);
    SnapshotMatrices s{X.cast<cplx>(), (K * X).cast<cplx>(), Layout::ensemble_pairs, 1.0};
    auto r = dmd_rrr(s);
    auto C = eigenfunction_coefficients(r, s);
    Eigen::Vector3d x(0.3, -1.0, 2.0);
    for (int k = 0; k < C.cols(); ++k) {
        cplx a = C.col(k).dot((K * x).cast<cplx>());
        cplx b = C.col(k).dot(x.cast<cplx>());
        EXPECT_NEAR(std::abs(a - r.pairs[static_cast<std::size_t>(k)].lambda * b), 0.0, 1e-10);
    }
}

TEST(DmdOptions, JsonRoundTrip) {
    DmdOptions o;
    o.eps = 1e-8;
    auto j = dmd_options_to_json(o);
    EXPECT_EQ(j["residual_threshold"], "inf");
    auto back = dmd_options_from_json(j);
    EXPECT_EQ(back.eps, 1e-8);
    EXPECT_TRUE(std::isinf(back.residual_threshold));
    EXPECT_THROW(dmd_options_from_json({{"tolerance", 1}}), InvalidArgument);
}
