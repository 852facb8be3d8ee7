#include <gtest/gtest.h>

#include "support.hpp"
#include "treesne/diagnostics.hpp"
#include "treesne/tree.hpp"

using namespace treesne;

TEST(Rank, Basics) {
    EXPECT_EQ(matrix_rank(Matrix<double>::Zero(4, 4)).rank, 0);
    EXPECT_EQ(matrix_rank(Matrix<double>::Identity(5, 5)).rank, 5);
    const Matrix<double> low = oracle::gaussian(6, 3, 1) * oracle::gaussian(3, 6, 2);
    const auto r = matrix_rank(low, 1e-6, 3);
    EXPECT_EQ(r.rank, 3);
    EXPECT_TRUE(r.matches_expected);
    EXPECT_NEAR(r.tolerance, 1e-6 * r.singular_values.front(), 1e-18);
    EXPECT_EQ(r.sweep.size(), rank_sweep_tolerances().size());
}

TEST(Rank, OrthogonalInvariance) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 10; ++t) {
        const Matrix<double> m = oracle::gaussian(7, 4, t) * oracle::gaussian(4, 7, t + 50);
        const Matrix<double> u = random_rotation<double>(7, rng), v = random_rotation<double>(7, rng);
        EXPECT_EQ(matrix_rank(Matrix<double>(u * m * v)).rank, matrix_rank(m).rank);
    }
}

TEST(Rank, RigidQuotientDimension) {
    EXPECT_EQ(rigid_quotient_rank(5, 2), 7);
    EXPECT_EQ(rigid_quotient_rank(3, 2), 3);
    EXPECT_EQ(rigid_quotient_rank(2, 1), 1);
    EXPECT_EQ(rigid_quotient_rank(1, 3), 0);
}

TEST(HessianRank, TwoPointsInOneDimensionIsZero) {
    Matrix<double> p(2, 2);
    p << 0, 0.5, 0.5, 0;
    Matrix<double> y(2, 1);
    y << 0, 1.3;
    EXPECT_EQ(hessian_rank_check(p, y, KernelParam<double>{1.0}).rank, 0);
}

TEST(HessianRank, EquilateralTriangleIsDeficient) {
    for (double side : {0.5, 1.0, 2.0}) {
        const auto r = hessian_rank_check(oracle::uniform_p(3), oracle::equilateral(side), KernelParam<double>{1.0});
        EXPECT_EQ(r.expected_rank, 3);
        for (const auto& [tol, rank] : r.sweep)
            if (tol >= 1e-6) EXPECT_LE(rank, 2) << "side " << side << " tol " << tol;
    }
}

TEST(HessianRank, NeverAboveQuotientAtConvergedEmbeddings) {
    for (std::uint64_t s = 0; s < 4; ++s) {
        const auto data = make_dataset<double>(oracle::gaussian(12, 4, s));
        const auto aff = build_affinities(data, 4.0);
        OptimizerConfig<double> cfg;
        cfg.max_iters = 20000;
        cfg.grad_tol = 1e-8;
        const auto res = descend(aff.p, random_init<double>(12, 2, 1e-2, s), KernelParam<double>{1.0}, cfg);
        if (!res.report.converged) continue;
        const auto r = hessian_rank_check(aff.p, res.coords, KernelParam<double>{1.0});
        EXPECT_LE(r.rank, r.expected_rank);
    }
}

TEST(RigidMotions, BasisIsOrthonormalAndTangentToLevelSet) {
    const Matrix<double> p = oracle::random_p(6, 1);
    const Matrix<double> y = oracle::gaussian(6, 3, 2);
    const Matrix<double> b = rigid_motion_basis(y);
    ASSERT_EQ(b.cols(), 6);
    EXPECT_LT((b.transpose() * b - Matrix<double>::Identity(6, 6)).cwiseAbs().maxCoeff(), 1e-12);
    // The loss is invariant along every rigid motion, so the gradient is orthogonal.
    const Vector<double> g = flatten<double>(gradient(p, y, KernelParam<double>{0.5}));
    EXPECT_LT((b.transpose() * g).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(RigidMotions, QuotientRankOfEquilateralAndPerturbation) {
    const Matrix<double> y = oracle::equilateral(0.1);
    const KernelParam<double> k{1.0};
    const auto base = quotient_hessian_rank_check(oracle::uniform_p(3), y, k);
    EXPECT_EQ(base.expected_rank, 3);
    EXPECT_EQ(base.rank, 2);
    AffinityMatrix<double> aff;
    aff.p = oracle::uniform_p(3);
    int regained = 0;
    for (std::uint64_t s = 0; s < 20; ++s)
        regained += quotient_hessian_rank_check(perturb_affinities(aff, 1e-4, s).p, y, k).rank == 3;
    EXPECT_GE(regained, 17);
}

TEST(GradientCheck, Examples) {
    Matrix<double> p2(2, 2);
    p2 << 0, 0.5, 0.5, 0;
    Matrix<double> y2(2, 2);
    y2 << 0, 0, 1, 1;
    EXPECT_EQ(gradient_check(p2, y2, KernelParam<double>{1.0}).max_rel_error, 0.0);
    const Matrix<double> p = oracle::random_p(7, 3);
    const Matrix<double> y = oracle::gaussian(7, 2, 4);
    EXPECT_LT(gradient_check(p, y, KernelParam<double>{1.0}, 1e-5).max_rel_error, 1e-5);
}

TEST(GradientCheck, SecondOrderInStep) {
    const Matrix<double> p = oracle::random_p(5, 5);
    const Matrix<double> y = oracle::gaussian(5, 2, 6);
    const KernelParam<double> k{0.5};
    const double coarse = gradient_check(p, y, k, 1e-2).max_abs_error;
    const double fine = gradient_check(p, y, k, 5e-3).max_abs_error;
    EXPECT_GT(coarse / fine, 3.5);
    EXPECT_LT(coarse / fine, 4.5);
}

TEST(RigidInvariance, Examples) {
    const Matrix<double> p = oracle::random_p(10, 7);
    const Matrix<double> y = oracle::gaussian(10, 2, 8);
    const KernelParam<double> k{1.0};
    EXPECT_EQ(kl_loss(p, rigid_transform<double>(y, Matrix<double>::Identity(2, 2), Vector<double>::Zero(2)), k),
              kl_loss(p, y, k));
    const Vector<double> far = Vector<double>::Constant(2, 1e6);
    EXPECT_LT(std::abs(kl_loss(p, rigid_transform<double>(y, Matrix<double>::Identity(2, 2), far), k) - kl_loss(p, y, k)),
              1e-8);
    EXPECT_LT(rigid_invariance_check(p, y, k, 1), 1e-10);
    std::mt19937_64 rng(1);
    for (Eigen::Index d : {2, 3, 4}) {
        const Matrix<double> r = random_rotation<double>(d, rng);
        EXPECT_NEAR(r.determinant(), 1.0, 1e-12);
        EXPECT_LT((r.transpose() * r - Matrix<double>::Identity(d, d)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Jacobian, TwoPointsAndInterlacing) {
    Matrix<double> p(2, 2);
    p << 0, 0.5, 0.5, 0;
    Matrix<double> y(2, 1);
    y << 0, 2;
    auto fixed2 = [&](double) {
        AffinityMatrix<double> a;
        a.p = p;
        return a;
    };
    EXPECT_EQ(f_jacobian_rank<double>(fixed2, y, 1.0).rank.rank, 0);

    const auto data = make_dataset<double>(oracle::gaussian(6, 3, 9));
    auto aff_at = [&](double a) { return build_affinities(data, 2.0 + a); };
    for (std::uint64_t s = 0; s < 3; ++s) {
        const Matrix<double> ys = oracle::gaussian(6, 2, s);
        const auto r = f_jacobian_rank<double>(aff_at, ys, 0.7);
        EXPECT_GE(r.rank.rank, r.hessian_rank);
        EXPECT_GT(r.alpha_column_norm, 0.0);
    }
}

TEST(Continuity, Examples) {
    LayerStack<double> s;
    Layer<double> l;
    l.coords = oracle::gaussian(5, 2, 1);
    s.layers = {l, l, l};
    const auto same = continuity_report(s);
    EXPECT_EQ(same.overall_max, 0.0);
    for (const auto& t : same.transitions) EXPECT_EQ(t.mean_displacement, 0.0);
    s.layers[2].coords(3, 0) += 3.0;
    s.layers[2].coords(3, 1) += 4.0;
    const auto jump = continuity_report(s);
    EXPECT_NEAR(jump.transitions[1].max_displacement, 5.0, 1e-12);
    EXPECT_EQ(jump.transitions[1].argmax_point, 3);
    EXPECT_EQ(jump.transitions[0].max_displacement, 0.0);
    s.layers.resize(1);
    EXPECT_THROW(continuity_report(s), DataError);
}
