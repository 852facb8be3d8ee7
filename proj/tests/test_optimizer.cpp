#include <gtest/gtest.h>

#include "support.hpp"
#include "treesne/affinity.hpp"
#include "treesne/optimizer.hpp"

using namespace treesne;

namespace {

AffinityMatrix<double> instance(Eigen::Index n, std::uint64_t seed) {
    return build_affinities(make_dataset<double>(oracle::gaussian(n, 5, seed)), 5.0);
}

}  // namespace

TEST(Optimizer, DecreasesLossAndConverges) {
    const auto aff = instance(30, 1);
    OptimizerConfig<double> cfg;
    cfg.max_iters = 40000;
    const KernelParam<double> k{1.0};
    const Matrix<double> y0 = random_init<double>(30, 2, 1e-2, 1);
    const auto r = descend(aff.p, y0, k, cfg);
    EXPECT_TRUE(r.report.converged);
    EXPECT_LE(r.report.final_grad_norm, cfg.grad_tol);
    EXPECT_LT(r.report.final_loss, kl_loss(aff.p, y0, k));
    EXPECT_EQ(r.report.loss_trace.size(), static_cast<std::size_t>(r.report.iters) + 1);
    EXPECT_NEAR(r.report.final_loss, kl_loss(aff.p, r.coords, k), 1e-12);
}

TEST(Optimizer, CriticalStartIsReturnedUnchanged) {
    // n = 2: q is always 1/2 per ordered pair, so every embedding is critical.
    Matrix<double> p(2, 2);
    p << 0, 0.5, 0.5, 0;
    Matrix<double> y(2, 1);
    y << -1, 2;
    const auto r = descend(p, y, KernelParam<double>{0.5}, OptimizerConfig<double>{});
    EXPECT_TRUE(r.report.converged);
    EXPECT_EQ(r.report.iters, 0);
    EXPECT_EQ(r.coords, y);
}

TEST(Optimizer, Deterministic) {
    const auto aff = instance(25, 2);
    OptimizerConfig<double> cfg;
    cfg.max_iters = 400;
    const Matrix<double> y0 = random_init<double>(25, 2, 1e-2, 3);
    const auto a = descend(aff.p, y0, KernelParam<double>{0.5}, cfg);
    const auto b = descend(aff.p, y0, KernelParam<double>{0.5}, cfg);
    EXPECT_EQ(a.coords, b.coords);
    EXPECT_EQ(a.report.loss_trace, b.report.loss_trace);
}

TEST(Optimizer, CoincidentStartIsJittered) {
    const auto aff = instance(6, 3);
    Matrix<double> y0 = random_init<double>(6, 2, 1e-2, 4);
    y0.row(4) = y0.row(1);
    OptimizerConfig<double> cfg;
    cfg.max_iters = 50;
    const auto r = descend(aff.p, y0, KernelParam<double>{1.0}, cfg);
    EXPECT_GE(r.report.jitter_retries, 1);
    EXPECT_TRUE(r.coords.allFinite());
}

TEST(Optimizer, ExaggerationOnlyAffectsEarlyIterations) {
    const auto aff = instance(20, 5);
    const Matrix<double> y0 = random_init<double>(20, 2, 1e-2, 5);
    OptimizerConfig<double> with, without;
    with.max_iters = without.max_iters = 100;
    without.early_exaggeration_iters = 0;
    const auto a = descend(aff.p, y0, KernelParam<double>{1.0}, with);
    const auto b = descend(aff.p, y0, KernelParam<double>{1.0}, without);
    EXPECT_NE(a.coords, b.coords);
    // trace records the true loss even while exaggerating
    EXPECT_NEAR(a.report.loss_trace.front(), kl_loss(aff.p, y0, KernelParam<double>{1.0}), 1e-14);
}

TEST(Optimizer, OscillationHalvesLearningRate) {
    // a stiff attracting pair overshoots at this rate and flips its gradient every step
    Matrix<double> p(3, 3);
    p << 0, 0.45, 0.025, 0.45, 0, 0.025, 0.025, 0.025, 0;
    Matrix<double> y(3, 2);
    y << 0, 0, 0.3, 0.1, 5, 5;
    OptimizerConfig<double> cfg;
    cfg.learning_rate = 20;
    cfg.max_iters = 300;
    cfg.early_exaggeration_iters = 0;
    const auto r = descend(p, y, KernelParam<double>{1.0}, cfg);
    EXPECT_EQ(r.report.final_learning_rate, 10.0);
    EXPECT_TRUE(r.report.converged);
    cfg.halve_after_reversals = 0;
    cfg.halve_after_increases = 1000000;
    EXPECT_EQ(descend(p, y, KernelParam<double>{1.0}, cfg).report.final_learning_rate, 20.0);
}

TEST(Optimizer, ValidatesConfig) {
    const auto aff = instance(5, 7);
    const Matrix<double> y0 = random_init<double>(5, 2);
    auto bad = [&](auto mutate) {
        OptimizerConfig<double> cfg;
        mutate(cfg);
        EXPECT_THROW(descend(aff.p, y0, KernelParam<double>{1.0}, cfg), DataError);
    };
    bad([](auto& c) { c.learning_rate = 0; });
    bad([](auto& c) { c.momentum = 1; });
    bad([](auto& c) { c.grad_tol = 0; });
    bad([](auto& c) { c.max_iters = -1; });
    bad([](auto& c) { c.early_exaggeration_factor = 0.5; });
    bad([](auto& c) { c.halve_after_increases = 0; });
    Matrix<double> nan = y0;
    nan(0, 0) = std::nan("");
    EXPECT_THROW(descend(aff.p, nan, KernelParam<double>{1.0}, OptimizerConfig<double>{}), DataError);
    EXPECT_THROW(random_init<double>(1, 2), DataError);
}
