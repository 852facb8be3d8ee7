#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "treesne/common.hpp"
#include "treesne/kernel.hpp"
#include "treesne/objective.hpp"

namespace treesne {

template <typename Scalar>
struct OptimizerConfig {
    Scalar learning_rate = 200;
    Scalar momentum = Scalar(0.8);
    int max_iters = 1000;
    /// Convergence threshold on the infinity norm of the (unexaggerated) gradient.
    Scalar grad_tol = Scalar(1e-5);
    Scalar early_exaggeration_factor = 12;
    int early_exaggeration_iters = 250;
    std::uint64_t jitter_seed = 0;
    int max_jitter_retries = 5;
    /// Halve the learning rate after this many consecutive loss increases.
    int halve_after_increases = 10;
    /// Also halve after this many consecutive steps whose gradient points
    /// against the previous one (a period-two oscillation the loss test misses).
    /// Zero disables the test.
    int halve_after_reversals = 10;
    int threads = 0;
};

template <typename Scalar>
void validate(const OptimizerConfig<Scalar>& cfg) {
    if (!(cfg.learning_rate > 0)) throw DataError("learning_rate must be positive");
    if (!(cfg.momentum >= 0 && cfg.momentum < 1)) throw DataError("momentum must be in [0, 1)");
    if (cfg.max_iters < 0) throw DataError("max_iters must be nonnegative");
    if (!(cfg.grad_tol > 0)) throw DataError("grad_tol must be positive");
    if (!(cfg.early_exaggeration_factor >= 1)) throw DataError("exaggeration factor must be >= 1");
    if (cfg.early_exaggeration_iters < 0) throw DataError("exaggeration iterations must be >= 0");
    if (cfg.halve_after_increases < 1) throw DataError("halve_after_increases must be >= 1");
    if (cfg.halve_after_reversals < 0) throw DataError("halve_after_reversals must be >= 0");
}

template <typename Scalar>
struct OptimizerReport {
    bool converged = false;
    int iters = 0;
    Scalar final_loss = 0;
    Scalar final_grad_norm = 0;
    Scalar final_learning_rate = 0;
    int jitter_retries = 0;
    std::vector<Scalar> loss_trace;
};

template <typename Scalar>
struct DescentResult {
    Matrix<Scalar> coords;
    OptimizerReport<Scalar> report;
};

/// I.i.d. N(0, scale^2) coordinates.
template <typename Scalar = double>
Matrix<Scalar> random_init(Eigen::Index n, Eigen::Index d, Scalar scale = Scalar(1e-2),
                           std::uint64_t seed = 0) {
    if (n < 2 || d < 1) throw DataError("random_init: need n >= 2 and d >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<Scalar> normal(0, scale);
    Matrix<Scalar> y(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index k = 0; k < d; ++k) y(i, k) = normal(rng);
    return y;
}

/// Momentum gradient descent on KL(P || Q) from `init`.
///
/// During the first early_exaggeration_iters iterations the attractive term
/// uses early_exaggeration_factor * p. Convergence is always judged on the
/// true gradient, so a starting point that is already critical is returned
/// unchanged. Coincident points are separated by a seeded jitter of size
/// 1e-9 times the coordinate scale.
template <typename Scalar>
DescentResult<Scalar> descend(const Matrix<Scalar>& p, const Matrix<Scalar>& init,
                              const KernelParam<Scalar>& param, const OptimizerConfig<Scalar>& cfg) {
    validate(cfg);
    internal::check_shapes(p, init);
    if (!init.allFinite()) throw DataError("descend: initial embedding is not finite");

    DescentResult<Scalar> out;
    auto& report = out.report;
    Matrix<Scalar>& y = out.coords;
    y = init;
    Matrix<Scalar> velocity = Matrix<Scalar>::Zero(y.rows(), y.cols());
    Scalar lr = cfg.learning_rate;
    Scalar previous = std::numeric_limits<Scalar>::infinity();
    int increases = 0;
    int reversals = 0;
    Matrix<Scalar> previous_g;
    const Scalar entropy_term = internal::p_log_p(p);
    report.loss_trace.reserve(static_cast<std::size_t>(cfg.max_iters) + 1);

    internal::PairTerms<Scalar> terms;
    int it = 0;
    for (;; ++it) {
        for (;;) {
            try {
                internal::pair_terms_into(terms, y, param, cfg.threads, &p);
                break;
            } catch (const CoincidentPoints&) {
                if (report.jitter_retries >= cfg.max_jitter_retries) throw;
                const Scalar scale = std::max<Scalar>(y.cwiseAbs().maxCoeff(), Scalar(1));
                std::mt19937_64 rng(cfg.jitter_seed + static_cast<std::uint64_t>(report.jitter_retries));
                std::normal_distribution<Scalar> jitter(0, Scalar(1e-9) * scale);
                for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] += jitter(rng);
                ++report.jitter_retries;
            }
        }
        const Scalar loss = internal::loss_from_terms(p, terms, entropy_term);
        const Matrix<Scalar> g = internal::gradient_from_terms(p, terms, y, Scalar(1), cfg.threads);
        if (!std::isfinite(loss) || !g.allFinite())
            throw NumericalFailure("non-finite loss or gradient at iteration " + std::to_string(it), it);
        report.loss_trace.push_back(loss);
        report.final_loss = loss;
        report.final_grad_norm = g.cwiseAbs().maxCoeff();
        if (report.final_grad_norm <= cfg.grad_tol) {
            report.converged = true;
            break;
        }
        if (it == cfg.max_iters) break;

        const bool exaggerating = it < cfg.early_exaggeration_iters && cfg.early_exaggeration_factor != 1;
        if (!exaggerating) {
            increases = loss > previous ? increases + 1 : 0;
            if (previous_g.size() == g.size())
                reversals = (g.array() * previous_g.array()).sum() < 0 ? reversals + 1 : 0;
            if (increases >= cfg.halve_after_increases ||
                (cfg.halve_after_reversals > 0 && reversals >= cfg.halve_after_reversals)) {
                lr /= 2;
                velocity.setZero();
                increases = 0;
                reversals = 0;
            }
            previous_g = g;
        }
        previous = loss;
        if (exaggerating) {
            velocity = cfg.momentum * velocity -
                       lr * internal::gradient_from_terms(p, terms, y, cfg.early_exaggeration_factor,
                                                          cfg.threads);
        } else {
            velocity = cfg.momentum * velocity - lr * g;
        }
        y += velocity;
    }
    report.iters = it;
    report.final_learning_rate = lr;
    return out;
}

}  // namespace treesne
