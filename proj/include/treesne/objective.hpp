#pragma once

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "treesne/affinity.hpp"
#include "treesne/common.hpp"
#include "treesne/kernel.hpp"

namespace treesne {

// The loss is KL(P || Q) with q_ij = K(|y_i - y_j|) / sum_{k != l} K(|y_k - y_l|),
// and its gradient is
//
//   dL/dy_i = 4 sum_{j != i} (p_ij - q_ij) w_ij (y_i - y_j),   w = -dlog K / d(d^2).
//
// The factor 4 follows the usual t-SNE convention; it only rescales the step
// size. For the GaussianLimit kernel w_ij = K_ij^(1/alpha).
//
// All coordinate matrices are n x d with one point per row. Every reduction
// runs in a fixed order, so a given thread count is bit-reproducible. The
// kernel pass is identical for any thread count; the gradient's matrix
// products are split by rows and agree with the sequential result to rounding.

/// Squared distance below which two embedding points count as coincident.
inline constexpr double kCoincidentSqDist = 1e-60;

namespace internal {

template <typename Scalar>
struct PairTerms {
    Matrix<Scalar> kernel;  // K_ij, zero diagonal
    Matrix<Scalar> slope;   // w_ij, zero diagonal
    Scalar normalizer = 0;  // sum over ordered pairs of K_ij
    Scalar p_log_kernel = 0;  // sum_{i != j} p_ij log K_ij, when p was supplied
};

// log K for one squared distance; K itself is exp of this.
template <typename Scalar>
Scalar log_kernel_sq(const KernelParam<Scalar>& param, Scalar sq_dist) {
    using std::log1p;
    const Scalar a = param.alpha;
    if (param.form == KernelForm::GaussianLimit) return -a * log1p(sq_dist / a);
    return -a * log1p(literal_base(a, sq_dist));
}

/// Kernel values and gradient weights for all pairs. Column i is evaluated
/// for rows j < i with Eigen's vectorized array functions and then mirrored.
/// When `p` is given the cross term needed by the loss is accumulated in the
/// same pass.
/// Writes into `t`, reusing its storage when the size is unchanged.
template <typename Derived>
void pair_terms_into(PairTerms<typename Derived::Scalar>& t, const Eigen::MatrixBase<Derived>& y,
                     const KernelParam<typename Derived::Scalar>& param, int threads = 0,
                     const Matrix<typename Derived::Scalar>* p = nullptr) {
    using Scalar = typename Derived::Scalar;
    using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
    if (!(param.alpha > 0)) throw std::domain_error("kernel: alpha must be positive");
    const Eigen::Index n = y.rows();
    const Eigen::Index d = y.cols();
    const Scalar a = param.alpha;
    const Matrix<Scalar> coords = y;
    if (!coords.allFinite()) throw NumericalFailure("non-finite embedding coordinates");
    t.kernel.resize(n, n);
    t.slope.resize(n, n);
    Vector<Scalar> col_cross = Vector<Scalar>::Zero(n);
    std::vector<Eigen::Index> close_pair(static_cast<std::size_t>(n), -1);

    parallel_rows(static_cast<std::size_t>(n), threads, [&](std::size_t b, std::size_t e) {
        Array sq(n), log_k(n), u(n);
        for (auto i = static_cast<Eigen::Index>(b); i < static_cast<Eigen::Index>(e); ++i) {
            auto s = sq.head(i);
            s.setZero();
            for (Eigen::Index k = 0; k < d; ++k)
                s += (coords.col(k).head(i).array() - coords(i, k)).square();
            auto kernel = t.kernel.col(i).head(i).array();
            auto slope = t.slope.col(i).head(i).array();
            auto lk = log_k.head(i);
            if (a == 1) {
                // both forms reduce to 1 / (1 + d^2)
                kernel = (Scalar(1) + s).inverse();
                slope = kernel;
                if (p) lk = kernel.log();
            } else if (param.form == KernelForm::GaussianLimit) {
                auto v = u.head(i);
                v = Scalar(1) + s / a;
                lk = -a * v.log();
                kernel = lk.exp();
                slope = v.inverse();
            } else {
                auto ls = u.head(i);
                ls = s.log();
                lk = -a * ((ls / a).exp() + Scalar(1)).log();
                kernel = lk.exp();
                slope = ((Scalar(1) / a - Scalar(1)) * ls).exp() / (Scalar(1) + (ls / a).exp());
            }
            if (i > 0) {
                Eigen::Index j;
                if (s.minCoeff(&j) < Scalar(kCoincidentSqDist)) close_pair[static_cast<std::size_t>(i)] = j;
                if (p)
                    col_cross(i) = ((p->col(i).head(i).array() + p->row(i).head(i).transpose().array()) *
                                    lk)
                                       .sum();
            }
        }
    });
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Index j = close_pair[static_cast<std::size_t>(i)];
        if (j >= 0)
            throw CoincidentPoints(static_cast<std::size_t>(std::min(i, j)),
                                   static_cast<std::size_t>(std::max(i, j)));
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        t.kernel(i, i) = 0;
        t.slope(i, i) = 0;
        for (Eigen::Index j = i + 1; j < n; ++j) {
            t.kernel(j, i) = t.kernel(i, j);
            t.slope(j, i) = t.slope(i, j);
        }
    }
    Scalar z = 0, cross = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        z += t.kernel.col(i).head(i).sum();
        cross += col_cross(i);
    }
    t.normalizer = 2 * z;
    t.p_log_kernel = cross;
    if (!(t.normalizer > 0) || !std::isfinite(t.normalizer))
        throw NumericalFailure("kernel normalizer is not positive and finite");
}

template <typename Derived>
PairTerms<typename Derived::Scalar> pair_terms(const Eigen::MatrixBase<Derived>& y,
                                               const KernelParam<typename Derived::Scalar>& param,
                                               int threads = 0,
                                               const Matrix<typename Derived::Scalar>* p = nullptr) {
    PairTerms<typename Derived::Scalar> t;
    pair_terms_into(t, y, param, threads, p);
    return t;
}

/// 4 sum_j (scale * p_ij - q_ij) w_ij (y_i - y_j) for every row i, i.e.
/// 4 (diag(W 1) Y - W Y) with W = (scale * P - Q) .* w.
template <typename Derived, typename Scalar = typename Derived::Scalar>
Matrix<Scalar> gradient_from_terms(const Matrix<Scalar>& p, const PairTerms<Scalar>& t,
                                   const Eigen::MatrixBase<Derived>& y, Scalar p_scale = 1,
                                   int threads = 0) {
    const Eigen::Index n = y.rows();
    const Scalar z = t.normalizer;
    const Matrix<Scalar> coords = y;
    Matrix<Scalar> g(n, y.cols());
    parallel_rows(static_cast<std::size_t>(n), threads, [&](std::size_t b, std::size_t e) {
        // small row chunks keep the temporary out of the allocator's mmap range
        constexpr Eigen::Index chunk = 16;
        Matrix<Scalar> w;
        for (auto first = static_cast<Eigen::Index>(b); first < static_cast<Eigen::Index>(e); first += chunk) {
            const Eigen::Index rows = std::min(chunk, static_cast<Eigen::Index>(e) - first);
            w = ((p_scale * p.middleRows(first, rows).array() -
                  t.kernel.middleRows(first, rows).array() / z) *
                 t.slope.middleRows(first, rows).array())
                    .matrix();
            g.middleRows(first, rows).noalias() = w.rowwise().sum().asDiagonal() * coords.middleRows(first, rows);
            g.middleRows(first, rows).noalias() -= w * coords;
        }
    });
    g *= 4;
    return g;
}

/// sum_{i != j, p_ij > 0} p_ij log p_ij.
template <typename Scalar>
Scalar p_log_p(const Matrix<Scalar>& p) {
    Scalar acc = 0;
    for (Eigen::Index i = 0; i < p.rows(); ++i)
        for (Eigen::Index j = 0; j < p.cols(); ++j)
            if (j != i && p(i, j) > 0) acc += p(i, j) * std::log(p(i, j));
    return acc;
}

/// KL(P || Q) = sum p log p - sum p log K + (sum p) log Z. Requires terms
/// built with the same p; `entropy_term` is p_log_p(p), cacheable across calls.
template <typename Scalar>
Scalar loss_from_terms(const Matrix<Scalar>& p, const PairTerms<Scalar>& t, Scalar entropy_term) {
    Scalar mass = 0;
    for (Eigen::Index i = 0; i < p.rows(); ++i)
        for (Eigen::Index j = 0; j < p.cols(); ++j)
            if (j != i) mass += p(i, j);
    return entropy_term - t.p_log_kernel + mass * std::log(t.normalizer);
}

template <typename Scalar, typename Derived>
void check_shapes(const Matrix<Scalar>& p, const Eigen::MatrixBase<Derived>& y) {
    if (p.rows() != p.cols() || p.rows() != y.rows())
        throw DataError("affinity matrix and embedding sizes differ");
    if (y.rows() < 2 || y.cols() < 1) throw DataError("embedding needs n >= 2 and d >= 1");
}

}  // namespace internal

/// q_ij for every ordered pair; symmetric, zero diagonal, total mass one.
template <typename Derived>
Matrix<typename Derived::Scalar> low_dim_affinities(
    const Eigen::MatrixBase<Derived>& y, const KernelParam<typename Derived::Scalar>& param,
    int threads = 0) {
    const auto t = internal::pair_terms(y, param, threads);
    return t.kernel / t.normalizer;
}

template <typename Derived>
typename Derived::Scalar kl_loss(const Matrix<typename Derived::Scalar>& p,
                                 const Eigen::MatrixBase<Derived>& y,
                                 const KernelParam<typename Derived::Scalar>& param,
                                 int threads = 0) {
    internal::check_shapes(p, y);
    return internal::loss_from_terms(p, internal::pair_terms(y, param, threads, &p),
                                     internal::p_log_p(p));
}

template <typename Derived>
Matrix<typename Derived::Scalar> gradient(const Matrix<typename Derived::Scalar>& p,
                                          const Eigen::MatrixBase<Derived>& y,
                                          const KernelParam<typename Derived::Scalar>& param,
                                          int threads = 0) {
    internal::check_shapes(p, y);
    const auto t = internal::pair_terms(y, param, threads);
    return internal::gradient_from_terms(p, t, y, typename Derived::Scalar(1), threads);
}

template <typename Scalar>
struct LossAndGradient {
    Scalar loss = 0;
    Matrix<Scalar> gradient;
};

/// One kernel pass for both loss and gradient.
template <typename Derived>
LossAndGradient<typename Derived::Scalar> loss_and_gradient(
    const Matrix<typename Derived::Scalar>& p, const Eigen::MatrixBase<Derived>& y,
    const KernelParam<typename Derived::Scalar>& param, int threads = 0) {
    using Scalar = typename Derived::Scalar;
    internal::check_shapes(p, y);
    const auto t = internal::pair_terms(y, param, threads, &p);
    return {internal::loss_from_terms(p, t, internal::p_log_p(p)),
            internal::gradient_from_terms(p, t, y, Scalar(1), threads)};
}

/// Default finite-difference step: 1e-5 times the largest absolute coordinate.
template <typename Derived>
typename Derived::Scalar default_fd_step(const Eigen::MatrixBase<Derived>& y) {
    using Scalar = typename Derived::Scalar;
    const Scalar scale = y.size() > 0 ? y.cwiseAbs().maxCoeff() : Scalar(0);
    return Scalar(1e-5) * (scale > 0 ? scale : Scalar(1));
}

namespace internal {

/// Central differences of the analytic gradient, before symmetrization.
/// Column k holds d(grad)/d(flat coordinate k) in point-major order.
template <typename Scalar>
Matrix<Scalar> fd_hessian(const Matrix<Scalar>& p, const Matrix<Scalar>& y,
                          const KernelParam<Scalar>& param, Scalar h, int threads = 0) {
    const Eigen::Index n = y.rows();
    const Eigen::Index d = y.cols();
    Matrix<Scalar> h_raw(n * d, n * d);
    Matrix<Scalar> shifted = y;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < d; ++k) {
            const Scalar orig = y(i, k);
            shifted(i, k) = orig + h;
            const Vector<Scalar> plus = flatten<Scalar>(gradient(p, shifted, param, threads));
            shifted(i, k) = orig - h;
            const Vector<Scalar> minus = flatten<Scalar>(gradient(p, shifted, param, threads));
            shifted(i, k) = orig;
            h_raw.col(i * d + k) = (plus - minus) / (2 * h);
        }
    }
    return h_raw;
}

}  // namespace internal

/// nd x nd Hessian of the loss by central differences of the analytic
/// gradient with step h (h <= 0 selects default_fd_step), symmetrized.
template <typename Scalar>
Matrix<Scalar> hessian(const Matrix<Scalar>& p, const Matrix<Scalar>& y,
                       const KernelParam<Scalar>& param, Scalar h = 0, int threads = 0) {
    internal::check_shapes(p, y);
    if (!(h > 0)) h = default_fd_step(y);
    Matrix<Scalar> raw = internal::fd_hessian(p, y, param, h, threads);
    return (raw + raw.transpose()) / Scalar(2);
}

/// d(gradient)/d(alpha) by central differences in alpha. `affinities_at(a)`
/// returns the affinity matrix for parameter a (re-calibrated at the
/// perplexity the schedule assigns to a), so the estimate includes the
/// dependence of p on alpha.
template <typename Scalar, typename AffinityFn>
Matrix<Scalar> grad_alpha_cross(AffinityFn&& affinities_at, const Matrix<Scalar>& y, Scalar alpha,
                                Scalar h, KernelForm form = KernelForm::GaussianLimit,
                                int threads = 0) {
    if (!(h > 0) || !(alpha - h > 0))
        throw DataError("grad_alpha_cross: need 0 < h < alpha");
    const KernelParam<Scalar> up{alpha + h, form};
    const KernelParam<Scalar> down{alpha - h, form};
    const Matrix<Scalar> g_up = gradient(affinities_at(alpha + h).p, y, up, threads);
    const Matrix<Scalar> g_down = gradient(affinities_at(alpha - h).p, y, down, threads);
    return (g_up - g_down) / (2 * h);
}

/// Analytic d(gradient)/d(alpha) with the affinities held fixed.
template <typename Scalar>
Matrix<Scalar> gradient_dalpha_fixed_affinities(const Matrix<Scalar>& p, const Matrix<Scalar>& y,
                                                const KernelParam<Scalar>& param) {
    internal::check_shapes(p, y);
    const Eigen::Index n = y.rows();
    const Eigen::Index d = y.cols();
    const auto t = internal::pair_terms(y, param);
    const Matrix<Scalar> sq = pairwise_sq_dists(y);
    Matrix<Scalar> dk = Matrix<Scalar>::Zero(n, n), ds = Matrix<Scalar>::Zero(n, n);
    Scalar dz = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            dk(i, j) = kernel_dalpha_sq(param, sq(i, j));
            ds(i, j) = kernel_slope_dalpha_sq(param, sq(i, j));
            dz += dk(i, j);
        }
    }
    Matrix<Scalar> out = Matrix<Scalar>::Zero(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) continue;
            const Scalar q = t.kernel(i, j) / t.normalizer;
            const Scalar dq = (dk(i, j) - q * dz) / t.normalizer;
            const Scalar c = 4 * (-dq * t.slope(i, j) + (p(i, j) - q) * ds(i, j));
            for (Eigen::Index k = 0; k < d; ++k) out(i, k) += c * (y(i, k) - y(j, k));
        }
    }
    return out;
}

}  // namespace treesne
