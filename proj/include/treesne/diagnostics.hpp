#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/SVD>

#include "treesne/common.hpp"
#include "treesne/kernel.hpp"
#include "treesne/objective.hpp"

namespace treesne {

struct RankReport {
    std::vector<double> singular_values;  // descending
    int rank = 0;
    double rel_tol = 1e-6;
    /// Absolute threshold actually applied (rel_tol times the reference scale).
    double tolerance = 0;
    int expected_rank = -1;
    bool matches_expected = false;
    /// Rank at each rel_tol in rank_sweep_tolerances(), same reference scale.
    std::vector<std::pair<double, int>> sweep;
};

inline const std::vector<double>& rank_sweep_tolerances() {
    static const std::vector<double> tols{1e-4, 1e-5, 1e-6, 1e-7, 1e-8};
    return tols;
}

/// nd - d(d+1)/2, clamped at zero.
inline int rigid_quotient_rank(Eigen::Index n, Eigen::Index d) {
    const auto r = n * d - d * (d + 1) / 2;
    return static_cast<int>(std::max<Eigen::Index>(r, 0));
}

namespace internal {

inline int count_above(const std::vector<double>& sv, double threshold) {
    int r = 0;
    for (double s : sv)
        if (s > threshold) ++r;
    return r;
}

/// Rank report where thresholds are relative to `scale` instead of the
/// matrix's own largest singular value.
inline RankReport rank_report(std::vector<double> sv, double scale, double rel_tol, int expected) {
    RankReport out;
    out.singular_values = std::move(sv);
    out.rel_tol = rel_tol;
    out.tolerance = rel_tol * scale;
    out.rank = count_above(out.singular_values, out.tolerance);
    out.expected_rank = expected;
    out.matches_expected = expected >= 0 && out.rank == expected;
    for (double t : rank_sweep_tolerances())
        out.sweep.emplace_back(t, count_above(out.singular_values, t * scale));
    return out;
}

template <typename Derived>
std::vector<double> singular_values(const Eigen::MatrixBase<Derived>& m) {
    if (!m.allFinite()) throw NumericalFailure("rank: matrix has non-finite entries");
    Eigen::JacobiSVD<Matrix<double>> svd(m.template cast<double>().eval());
    const auto& s = svd.singularValues();
    return std::vector<double>(s.data(), s.data() + s.size());
}

}  // namespace internal

/// Numerical rank: singular values above rel_tol * sigma_max.
template <typename Derived>
RankReport matrix_rank(const Eigen::MatrixBase<Derived>& m, double rel_tol = 1e-6,
                       int expected_rank = -1) {
    auto sv = internal::singular_values(m);
    const double top = sv.empty() ? 0.0 : sv.front();
    return internal::rank_report(std::move(sv), top, rel_tol, expected_rank);
}

/// Rank of the finite-difference Hessian against nd - d(d+1)/2.
template <typename Scalar>
RankReport hessian_rank_check(const Matrix<Scalar>& p, const Matrix<Scalar>& y,
                              const KernelParam<Scalar>& param, Scalar h = 0,
                              double rel_tol = 1e-6) {
    const Matrix<Scalar> hess = hessian(p, y, param, h);
    return matrix_rank(hess, rel_tol, rigid_quotient_rank(y.rows(), y.cols()));
}

/// Orthonormal basis (nd x d(d+1)/2) of the infinitesimal rigid motions at y:
/// d translations, then rotations in each (a, b) plane about the centroid.
template <typename Scalar>
Matrix<Scalar> rigid_motion_basis(const Matrix<Scalar>& y) {
    const Eigen::Index n = y.rows(), d = y.cols();
    const Eigen::Index k = d * (d + 1) / 2;
    Matrix<Scalar> b = Matrix<Scalar>::Zero(n * d, k);
    const auto centre = y.colwise().mean().eval();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index a = 0; a < d; ++a) b(i * d + a, a) = 1;
    Eigen::Index col = d;
    for (Eigen::Index a = 0; a < d; ++a)
        for (Eigen::Index c = a + 1; c < d; ++c, ++col)
            for (Eigen::Index i = 0; i < n; ++i) {
                b(i * d + a, col) = -(y(i, c) - centre(c));
                b(i * d + c, col) = y(i, a) - centre(a);
            }
    Eigen::HouseholderQR<Matrix<Scalar>> qr(b);
    return Matrix<Scalar>(qr.householderQ()).leftCols(std::min(k, n * d));
}

/// Hessian rank on the complement of the rigid motions, C^T H C, with the
/// threshold taken relative to the full Hessian's largest singular value.
/// Away from critical points rotations are not null directions of H, so this
/// is the meaningful rank test there.
template <typename Scalar>
RankReport quotient_hessian_rank_check(const Matrix<Scalar>& p, const Matrix<Scalar>& y,
                                       const KernelParam<Scalar>& param, Scalar h = 0,
                                       double rel_tol = 1e-6) {
    const Matrix<Scalar> hess = hessian(p, y, param, h);
    const Eigen::Index nd = y.size();
    const Eigen::Index k = std::min<Eigen::Index>(nd, y.cols() * (y.cols() + 1) / 2);
    Eigen::HouseholderQR<Matrix<Scalar>> qr(rigid_motion_basis(y));
    const Matrix<Scalar> c = Matrix<Scalar>(qr.householderQ()).rightCols(nd - k);
    const auto top = internal::singular_values(hess);
    const Matrix<Scalar> reduced = c.transpose() * hess * c;
    return internal::rank_report(internal::singular_values(reduced), top.empty() ? 0.0 : top.front(),
                                 rel_tol, rigid_quotient_rank(y.rows(), y.cols()));
}

struct JacobianRankReport {
    RankReport rank;
    int hessian_rank = 0;
    /// |c - proj_range(H) c| / |c| for the alpha column c.
    double alpha_column_residual = 0;
    double alpha_column_norm = 0;
    /// The alpha column lies in the Hessian's column space, so the zero set
    /// admits a tangent direction along which alpha changes.
    bool alpha_column_in_span = false;
};

inline constexpr double kSpanResidualTol = 1e-4;

/// Rank of the Jacobian of F(alpha, y) = grad L, i.e. [dF/dalpha | Hessian].
/// Both ranks use the same threshold, rel_tol times the Hessian's largest
/// singular value, so rank(Jacobian) >= rank(Hessian) holds by interlacing.
template <typename Scalar, typename AffinityFn>
JacobianRankReport f_jacobian_rank(AffinityFn&& affinities_at, const Matrix<Scalar>& y, Scalar alpha,
                                   KernelForm form = KernelForm::GaussianLimit,
                                   Scalar alpha_step = Scalar(1e-4), Scalar h = 0,
                                   double rel_tol = 1e-6) {
    const Eigen::Index nd = y.size();
    const KernelParam<Scalar> param{alpha, form};
    const Matrix<Scalar> hess = hessian(affinities_at(alpha).p, y, param, h);
    const Vector<Scalar> column = flatten<Scalar>(grad_alpha_cross<Scalar>(affinities_at, y, alpha, alpha_step, form));

    Matrix<double> jac(nd, nd + 1);
    jac.col(0) = column.template cast<double>();
    jac.rightCols(nd) = hess.template cast<double>();

    Eigen::JacobiSVD<Matrix<double>> svd_h(hess.template cast<double>().eval(), Eigen::ComputeFullU);
    const auto& sh = svd_h.singularValues();
    const double scale = sh.size() > 0 ? sh(0) : 0.0;
    const int expected = rigid_quotient_rank(y.rows(), y.cols());

    JacobianRankReport out;
    out.rank = internal::rank_report(internal::singular_values(jac), scale, rel_tol, expected);
    out.hessian_rank = internal::count_above(std::vector<double>(sh.data(), sh.data() + sh.size()),
                                             rel_tol * scale);
    const Vector<double> c = column.template cast<double>();
    out.alpha_column_norm = c.norm();
    if (out.alpha_column_norm > 0) {
        const auto basis = svd_h.matrixU().leftCols(out.hessian_rank);
        const Vector<double> residual = c - basis * (basis.transpose() * c);
        out.alpha_column_residual = residual.norm() / out.alpha_column_norm;
    }
    out.alpha_column_in_span = out.alpha_column_residual <= kSpanResidualTol;
    return out;
}

struct GradientCheck {
    double max_rel_error = 0;
    double max_abs_error = 0;  // raw, before the roundoff cut
    double roundoff = 0;
};

/// Analytic gradient against central differences of the loss.
/// Relative error per entry uses max(|analytic|, |numeric|) floored at 1e-12.
/// Differences within the roundoff bound of the central difference,
/// 8 eps max(1, |L|) / h, count as zero.
template <typename Scalar>
GradientCheck gradient_check(const Matrix<Scalar>& p, const Matrix<Scalar>& y,
                             const KernelParam<Scalar>& param, Scalar h = Scalar(1e-5)) {
    const Matrix<Scalar> analytic = gradient(p, y, param);
    Matrix<Scalar> shifted = y;
    GradientCheck out;
    const double roundoff = 8 * std::numeric_limits<double>::epsilon() *
                            std::max(1.0, std::abs(static_cast<double>(kl_loss(p, y, param)))) /
                            static_cast<double>(h);
    out.roundoff = roundoff;
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        for (Eigen::Index k = 0; k < y.cols(); ++k) {
            const Scalar orig = y(i, k);
            shifted(i, k) = orig + h;
            const Scalar up = kl_loss(p, shifted, param);
            shifted(i, k) = orig - h;
            const Scalar down = kl_loss(p, shifted, param);
            shifted(i, k) = orig;
            const double numeric = static_cast<double>((up - down) / (2 * h));
            const double exact = static_cast<double>(analytic(i, k));
            const double err = std::abs(numeric - exact);
            const double denom = std::max({std::abs(numeric), std::abs(exact), 1e-12});
            out.max_abs_error = std::max(out.max_abs_error, err);
            if (err > roundoff) out.max_rel_error = std::max(out.max_rel_error, err / denom);
        }
    }
    return out;
}

/// Uniformly distributed rotation (det = +1): QR of a Gaussian matrix with
/// the sign of R's diagonal folded into Q.
template <typename Scalar = double, typename Rng>
Matrix<Scalar> random_rotation(Eigen::Index d, Rng& rng) {
    std::normal_distribution<Scalar> normal(0, 1);
    Matrix<Scalar> g(d, d);
    for (Eigen::Index i = 0; i < d; ++i)
        for (Eigen::Index j = 0; j < d; ++j) g(i, j) = normal(rng);
    Eigen::HouseholderQR<Matrix<Scalar>> qr(g);
    Matrix<Scalar> q = qr.householderQ();
    const Matrix<Scalar> r = qr.matrixQR().template triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < d; ++j)
        if (r(j, j) < 0) q.col(j) *= -1;
    if (q.determinant() < 0) q.col(0) *= -1;
    return q;
}

/// Applies y -> y R^T + t to every point (row).
template <typename Scalar>
Matrix<Scalar> rigid_transform(const Matrix<Scalar>& y, const Matrix<Scalar>& rotation,
                               const Vector<Scalar>& translation) {
    Matrix<Scalar> out = y * rotation.transpose();
    out.rowwise() += translation.transpose();
    return out;
}

/// Largest |L(Y R^T + t) - L(Y)| over `trials` seeded rigid motions.
template <typename Scalar>
Scalar rigid_invariance_check(const Matrix<Scalar>& p, const Matrix<Scalar>& y,
                              const KernelParam<Scalar>& param, std::uint64_t seed,
                              int trials = 10, Scalar translation_scale = 1) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<Scalar> normal(0, translation_scale);
    const Scalar base = kl_loss(p, y, param);
    Scalar worst = 0;
    for (int t = 0; t < trials; ++t) {
        const Matrix<Scalar> rot = random_rotation<Scalar>(y.cols(), rng);
        Vector<Scalar> shift(y.cols());
        for (Eigen::Index k = 0; k < shift.size(); ++k) shift(k) = normal(rng);
        worst = std::max(worst, std::abs(kl_loss(p, rigid_transform(y, rot, shift), param) - base));
    }
    return worst;
}

struct TransitionDisplacement {
    std::size_t from = 0;
    double max_displacement = 0;
    double mean_displacement = 0;
    Eigen::Index argmax_point = 0;
    /// Bounding-box diagonal of the source layer.
    double source_diagonal = 0;
};

struct ContinuityReport {
    std::vector<TransitionDisplacement> transitions;
    double overall_max = 0;
    /// Largest max_displacement / source_diagonal over all transitions.
    double max_relative_jump = 0;
};

/// Per-point Euclidean displacement between consecutive layers.
template <typename Stack>
ContinuityReport continuity_report(const Stack& stack) {
    if (stack.layers.size() < 2) throw DataError("continuity_report: need at least two layers");
    ContinuityReport out;
    for (std::size_t l = 0; l + 1 < stack.layers.size(); ++l) {
        const auto& a = stack.layers[l].coords;
        const auto& b = stack.layers[l + 1].coords;
        if (a.rows() != b.rows() || a.cols() != b.cols())
            throw DataError("continuity_report: layer shapes differ");
        TransitionDisplacement t;
        t.from = l;
        double total = 0;
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            const double disp = static_cast<double>((b.row(i) - a.row(i)).norm());
            total += disp;
            if (disp > t.max_displacement) {
                t.max_displacement = disp;
                t.argmax_point = i;
            }
        }
        t.mean_displacement = a.rows() > 0 ? total / static_cast<double>(a.rows()) : 0.0;
        t.source_diagonal =
            static_cast<double>((a.colwise().maxCoeff() - a.colwise().minCoeff()).norm());
        out.overall_max = std::max(out.overall_max, t.max_displacement);
        if (t.source_diagonal > 0)
            out.max_relative_jump =
                std::max(out.max_relative_jump, t.max_displacement / t.source_diagonal);
        out.transitions.push_back(t);
    }
    return out;
}

}  // namespace treesne
