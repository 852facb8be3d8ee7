#include <gtest/gtest.h>

#include "support.hpp"
#include "treesne/affinity.hpp"

using namespace treesne;

TEST(Affinity, PairwiseSquaredDistances) {
    const Matrix<double> x = oracle::gaussian(7, 3, 1);
    const Matrix<double> sq = pairwise_sq_dists(x);
    for (Eigen::Index i = 0; i < 7; ++i)
        for (Eigen::Index j = 0; j < 7; ++j) EXPECT_NEAR(sq(i, j), std::pow(oracle::dist(x, i, j), 2), 1e-12);
}

TEST(Affinity, ConditionalRowMatchesOracle) {
    const Matrix<double> x = oracle::gaussian(9, 4, 2);
    const Matrix<double> sq = pairwise_sq_dists(x);
    for (double sigma : {0.3, 1.0, 4.0}) {
        const auto ref = oracle::conditional(x, 3, sigma);
        const Vector<double> row = conditional_row(sq.col(3), 3, sigma);
        EXPECT_EQ(row(3), 0.0);
        EXPECT_NEAR(row.sum(), 1.0, 1e-14);
        for (Eigen::Index j = 0; j < 9; ++j) EXPECT_NEAR(row(j), ref[static_cast<std::size_t>(j)], 1e-13);
    }
}

TEST(Affinity, UniformRowPerplexityIsCount) {
    for (int k : {1, 2, 5, 17}) {
        Vector<double> row = Vector<double>::Constant(k + 1, 1.0 / k);
        row(0) = 0;
        EXPECT_NEAR(row_perplexity(row), k, 1e-12);
    }
}

TEST(Affinity, CalibrationHitsTargetPerplexity) {
    const Matrix<double> x = oracle::gaussian(50, 10, 3);
    const auto data = make_dataset<double>(x);
    for (double target : {5.0, 15.0, 30.0}) {
        const auto aff = build_affinities(data, target);
        for (Eigen::Index i = 0; i < 50; ++i) {
            EXPECT_NEAR(aff.achieved_perplexity(i), target, 1e-6);
            // independent recomputation from sigma
            EXPECT_NEAR(oracle::perplexity(oracle::conditional(x, i, aff.sigmas(i))), target, 1e-6);
        }
    }
}

TEST(Affinity, CalibrationIsIdempotent) {
    const Matrix<double> x = oracle::gaussian(30, 5, 4);
    const Matrix<double> sq = pairwise_sq_dists(x);
    for (Eigen::Index i = 0; i < 30; ++i) {
        const auto first = calibrate_sigma(sq.col(i), i, 8.0);
        const auto again = calibrate_sigma(sq.col(i), i, 8.0, 1e-6, 200, first.sigma);
        EXPECT_EQ(again.sigma, first.sigma);
        EXPECT_LE(again.iterations, 1);
    }
}

TEST(Affinity, SymmetricNormalizedZeroDiagonal) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto aff = build_affinities(make_dataset<double>(oracle::gaussian(40, 6, seed)), 10.0);
        EXPECT_NEAR(aff.p.sum(), 1.0, 1e-10);
        EXPECT_EQ((aff.p - aff.p.transpose()).cwiseAbs().maxCoeff(), 0.0);
        EXPECT_EQ(aff.p.diagonal().cwiseAbs().maxCoeff(), 0.0);
        EXPECT_GE(aff.p.minCoeff(), 0.0);
    }
}

TEST(Affinity, SymmetrizeFormula) {
    Matrix<double> cond = oracle::gaussian(4, 4, 5).cwiseAbs();
    cond.diagonal().setZero();
    for (Eigen::Index i = 0; i < 4; ++i) cond.row(i) /= cond.row(i).sum();
    const auto aff = symmetrize(cond);
    for (Eigen::Index i = 0; i < 4; ++i)
        for (Eigen::Index j = 0; j < 4; ++j)
            if (i != j) EXPECT_NEAR(aff.p(i, j), (cond(i, j) + cond(j, i)) / 8.0, 1e-16);
}

TEST(Affinity, PerplexityIsClampedIntoRange) {
    std::vector<std::string> notes;
    EXPECT_NEAR(clamp_perplexity(30.0, 10, &notes), 9.0 - 1e-3, 1e-12);
    EXPECT_NEAR(clamp_perplexity(0.5, 10, &notes), 1.0 + 1e-3, 1e-12);
    EXPECT_EQ(clamp_perplexity(4.0, 10), 4.0);
    EXPECT_EQ(notes.size(), 2u);
    const auto aff = build_affinities(make_dataset<double>(oracle::gaussian(6, 2, 6)), 30.0);
    EXPECT_LT(aff.target_perplexity, 5.0);
    EXPECT_FALSE(aff.notes.empty());
}

TEST(Affinity, EquidistantNeighboursAreDegenerate) {
    Matrix<double> x(3, 2);
    x << 0, 0, 1, 0, 0.5, std::sqrt(3.0) / 2;
    const auto aff = build_affinities(make_dataset<double>(x), 1.5);
    for (Eigen::Index i = 0; i < 3; ++i)
        for (Eigen::Index j = 0; j < 3; ++j)
            if (i != j) EXPECT_NEAR(aff.p(i, j), 1.0 / 6, 1e-15);
    bool noted = false;
    for (const auto& n : aff.notes) noted = noted || n.find("equidistant") != std::string::npos;
    EXPECT_TRUE(noted);
}

TEST(Affinity, WarmStartedSigmasAgree) {
    const auto data = make_dataset<double>(oracle::gaussian(40, 5, 7));
    const auto cold = build_affinities(data, 12.0);
    const auto near = build_affinities(data, 11.0);
    const auto warm = build_affinities(data, 12.0, {}, &near.sigmas);
    for (Eigen::Index i = 0; i < 40; ++i) EXPECT_NEAR(warm.achieved_perplexity(i), 12.0, 1e-6);
    EXPECT_LT((warm.p - cold.p).cwiseAbs().maxCoeff(), 1e-7);
}

TEST(Affinity, ThreadedMatchesSequential) {
    const auto data = make_dataset<double>(oracle::gaussian(60, 4, 8));
    CalibrationOptions<double> par;
    par.threads = 3;
    const auto a = build_affinities(data, 9.0);
    const auto b = build_affinities(data, 9.0, par);
    EXPECT_EQ((a.p - b.p).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Affinity, PerturbationKeepsInvariants) {
    const auto aff = build_affinities(make_dataset<double>(oracle::gaussian(10, 3, 9)), 4.0);
    const auto a = perturb_affinities(aff, 1e-3, 1);
    const auto b = perturb_affinities(aff, 1e-3, 1);
    const auto c = perturb_affinities(aff, 1e-3, 2);
    EXPECT_EQ((a.p - b.p).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_GT((a.p - c.p).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_NEAR(a.p.sum(), 1.0, 1e-12);
    EXPECT_GE(a.p.minCoeff(), 0.0);
    EXPECT_EQ((a.p - a.p.transpose()).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ(a.p.diagonal().cwiseAbs().maxCoeff(), 0.0);
    EXPECT_EQ((perturb_affinities(aff, 0.0, 3).p - aff.p).cwiseAbs().maxCoeff(), 0.0);
    EXPECT_THROW(perturb_affinities(aff, -1.0, 0), DataError);
}

TEST(Affinity, RejectsInvalidData) {
    EXPECT_THROW(build_affinities(make_dataset<double>(Matrix<double>::Zero(1, 3)), 2.0), DataError);
    Matrix<double> bad = oracle::gaussian(5, 2, 10);
    bad(2, 1) = std::nan("");
    EXPECT_THROW(build_affinities(make_dataset<double>(bad), 2.0), DataError);
    EXPECT_THROW(conditional_row(Vector<double>::Ones(3), 0, 0.0), DataError);
}
