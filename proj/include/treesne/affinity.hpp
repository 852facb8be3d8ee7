#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "treesne/common.hpp"

namespace treesne {

/// n points in R^D, one per row, with optional labels and stable ids.
template <typename Scalar>
struct Dataset {
    Matrix<Scalar> points;
    std::optional<std::vector<std::string>> labels;
    std::vector<std::int64_t> ids;

    Eigen::Index size() const { return points.rows(); }
    Eigen::Index dim() const { return points.cols(); }
};

template <typename Scalar>
Dataset<Scalar> make_dataset(Matrix<Scalar> points,
                             std::optional<std::vector<std::string>> labels = std::nullopt) {
    Dataset<Scalar> data{std::move(points), std::move(labels), {}};
    data.ids.resize(static_cast<std::size_t>(data.points.rows()));
    for (std::size_t i = 0; i < data.ids.size(); ++i) data.ids[i] = static_cast<std::int64_t>(i);
    return data;
}

template <typename Scalar>
void validate(const Dataset<Scalar>& data) {
    if (data.points.rows() < 2) throw DataError("dataset needs at least 2 points");
    if (data.points.cols() < 1) throw DataError("dataset needs at least 1 feature");
    if (!data.points.allFinite()) throw DataError("dataset contains non-finite values");
    if (data.ids.size() != static_cast<std::size_t>(data.points.rows()))
        throw DataError("dataset ids do not match point count");
    if (data.labels && data.labels->size() != data.ids.size())
        throw DataError("dataset labels do not match point count");
}

/// Symmetrized, normalized input affinities plus calibration results.
template <typename Scalar>
struct AffinityMatrix {
    Matrix<Scalar> p;
    Vector<Scalar> sigmas;
    Vector<Scalar> achieved_perplexity;
    Scalar target_perplexity = 0;
    /// Warnings and deviations worth surfacing in output metadata.
    std::vector<std::string> notes;

    Eigen::Index size() const { return p.rows(); }
};

template <typename Derived>
Matrix<typename Derived::Scalar> pairwise_sq_dists(const Eigen::MatrixBase<Derived>& x) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = x.rows();
    Matrix<Scalar> out = Matrix<Scalar>::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            Scalar s = 0;
            for (Eigen::Index k = 0; k < x.cols(); ++k) {
                const Scalar diff = x(i, k) - x(j, k);
                s += diff * diff;
            }
            out(i, j) = s;
            out(j, i) = s;
        }
    }
    return out;
}

/// p_{j|i} for a single row of squared distances. Entry `self` is zero.
template <typename Derived>
Vector<typename Derived::Scalar> conditional_row(const Eigen::MatrixBase<Derived>& sq_dists,
                                                 Eigen::Index self,
                                                 typename Derived::Scalar sigma) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = sq_dists.size();
    if (!(sigma > 0)) throw DataError("conditional_row: sigma must be positive");
    Vector<Scalar> row(n);
    const Scalar inv_var = Scalar(1) / (sigma * sigma);
    // Shift exponents by the nearest neighbour so the largest term is exp(0).
    Scalar nearest = std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index j = 0; j < n; ++j)
        if (j != self) nearest = std::min<Scalar>(nearest, sq_dists(j));
    if (!std::isfinite(nearest)) throw DataError("conditional_row: no finite neighbour");
    Scalar total = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        row(j) = j == self ? Scalar(0) : std::exp(-(sq_dists(j) - nearest) * inv_var);
        total += row(j);
    }
    if (!(total >= 1)) throw NumericalFailure("conditional_row: normalizer underflow");
    row /= total;
    return row;
}

/// 2^H where H is the Shannon entropy in bits; zero entries contribute 0.
template <typename Derived>
typename Derived::Scalar row_perplexity(const Eigen::MatrixBase<Derived>& p) {
    using Scalar = typename Derived::Scalar;
    Scalar neg_entropy_nats = 0;
    for (Eigen::Index j = 0; j < p.size(); ++j)
        if (p(j) > 0) neg_entropy_nats += p(j) * std::log(p(j));
    return std::exp(-neg_entropy_nats);
}

/// Target perplexity must lie strictly inside (1, n-1).
template <typename Scalar>
Scalar clamp_perplexity(Scalar target, Eigen::Index n, std::vector<std::string>* notes = nullptr) {
    const Scalar lo = Scalar(1) + Scalar(1e-3);
    const Scalar hi = Scalar(n - 1) - Scalar(1e-3);
    Scalar clamped = std::min(std::max(target, lo), hi);
    if (hi < lo) clamped = Scalar(n - 1);
    if (clamped != target && notes)
        notes->push_back("target perplexity " + std::to_string(target) + " clamped to " +
                         std::to_string(clamped));
    return clamped;
}

template <typename Scalar>
struct Calibration {
    Scalar sigma = 1;
    Scalar perplexity = 0;
    int iterations = 0;
    /// Perplexity did not depend on sigma (all neighbours equidistant).
    bool degenerate = false;
};

template <typename Scalar>
struct CalibrationOptions {
    Scalar tol = Scalar(1e-6);
    int max_iter = 200;
    int threads = 0;
};

/// Finds sigma such that the conditional row hits `target` perplexity, by
/// bracket doubling followed by bisection on log(sigma). The initial guess
/// defaults to the mean neighbour distance.
template <typename Derived>
Calibration<typename Derived::Scalar> calibrate_sigma(
    const Eigen::MatrixBase<Derived>& sq_dists, Eigen::Index self, typename Derived::Scalar target,
    typename Derived::Scalar tol = 1e-6, int max_iter = 200,
    std::optional<typename Derived::Scalar> initial = std::nullopt) {
    using Scalar = typename Derived::Scalar;
    const Eigen::Index n = sq_dists.size();
    if (n < 2) throw DataError("calibrate_sigma: row needs at least one neighbour");
    if (!(tol > 0)) throw DataError("calibrate_sigma: tolerance must be positive");
    target = clamp_perplexity(target, n);

    Scalar lo_d = std::numeric_limits<Scalar>::infinity(), hi_d = 0, mean_d = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (j == self) continue;
        lo_d = std::min(lo_d, sq_dists(j));
        hi_d = std::max(hi_d, sq_dists(j));
        mean_d += std::sqrt(sq_dists(j));
    }
    mean_d /= Scalar(n - 1);

    Calibration<Scalar> out;
    auto perplexity_at = [&](Scalar sigma) {
        ++out.iterations;
        return row_perplexity(conditional_row(sq_dists, self, sigma));
    };

    // equal up to rounding of the squared distances
    if (hi_d - lo_d <= 64 * std::numeric_limits<Scalar>::epsilon() * hi_d) {
        out.sigma = mean_d > 0 ? mean_d : Scalar(1);
        out.perplexity = perplexity_at(out.sigma);
        out.degenerate = true;
        return out;
    }

    Scalar sigma = initial && *initial > 0 ? *initial : (mean_d > 0 ? mean_d : Scalar(1));
    Scalar perp = perplexity_at(sigma);
    if (std::abs(perp - target) <= tol) {
        out.sigma = sigma;
        out.perplexity = perp;
        return out;
    }

    Scalar lo = sigma, hi = sigma;
    int doublings = 0;
    auto accept = [&](Scalar at, Scalar value) {
        out.sigma = at;
        out.perplexity = value;
        return out;
    };
    if (perp < target) {
        while (perp < target) {
            if (++doublings > max_iter) throw NumericalFailure("calibrate_sigma: no upper bracket");
            lo = hi;
            hi *= 2;
            perp = perplexity_at(hi);
            if (std::abs(perp - target) <= tol) return accept(hi, perp);
        }
    } else {
        while (perp > target) {
            if (++doublings > max_iter) throw NumericalFailure("calibrate_sigma: no lower bracket");
            hi = lo;
            lo /= 2;
            perp = perplexity_at(lo);
            if (std::abs(perp - target) <= tol) return accept(lo, perp);
        }
    }

    for (int it = 0; it < max_iter; ++it) {
        const Scalar mid = std::sqrt(lo * hi);
        if (!(mid > lo && mid < hi)) break;  // bracket exhausted at working precision
        perp = perplexity_at(mid);
        if (std::abs(perp - target) <= tol) return accept(mid, perp);
        (perp < target ? lo : hi) = mid;
    }
    throw NumericalFailure("calibrate_sigma: bisection did not reach tolerance");
}

/// p_ij = (p_{j|i} + p_{i|j}) / (2n).
template <typename Scalar>
AffinityMatrix<Scalar> symmetrize(const Matrix<Scalar>& cond) {
    const Eigen::Index n = cond.rows();
    if (cond.cols() != n) throw DataError("symmetrize: matrix must be square");
    AffinityMatrix<Scalar> out;
    out.p = (cond + cond.transpose()) / Scalar(2 * n);
    out.p.diagonal().setZero();
    return out;
}

/// Sum of all entries, accumulated row by row.
template <typename Derived>
typename Derived::Scalar ordered_sum(const Eigen::MatrixBase<Derived>& m) {
    typename Derived::Scalar s = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) s += m(i, j);
    return s;
}

/// Adds symmetric i.i.d. N(0, noise_sd^2) noise to the off-diagonal
/// affinities, clamps at zero and renormalizes to total mass one.
template <typename Scalar>
AffinityMatrix<Scalar> perturb_affinities(const AffinityMatrix<Scalar>& aff, Scalar noise_sd,
                                          std::uint64_t seed) {
    if (!(noise_sd >= 0)) throw DataError("perturb_affinities: noise_sd must be nonnegative");
    AffinityMatrix<Scalar> out = aff;
    if (noise_sd == 0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<Scalar> noise(0, noise_sd);
    const Eigen::Index n = out.p.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            const Scalar v = std::max<Scalar>(0, out.p(i, j) + noise(rng));
            out.p(i, j) = v;
            out.p(j, i) = v;
        }
    }
    const Scalar total = ordered_sum(out.p);
    if (!(total > 0)) throw NumericalFailure("perturb_affinities: all affinities clamped to zero");
    out.p /= total;
    out.notes.push_back("affinities perturbed with noise_sd=" + std::to_string(noise_sd) +
                        " seed=" + std::to_string(seed) + "; clamped at 0 and renormalized");
    return out;
}

/// Full pipeline: squared distances, per-row bandwidth calibration,
/// conditional rows and symmetrization. `initial_sigmas`, when given,
/// warm-starts each row's search.
template <typename Scalar>
AffinityMatrix<Scalar> build_affinities(const Dataset<Scalar>& data, Scalar target_perplexity,
                                        const CalibrationOptions<Scalar>& opts = {},
                                        const Vector<Scalar>* initial_sigmas = nullptr) {
    validate(data);
    const Eigen::Index n = data.size();
    std::vector<std::string> notes;
    const Scalar target = clamp_perplexity(target_perplexity, n, &notes);
    const Matrix<Scalar> sq = pairwise_sq_dists(data.points);

    Matrix<Scalar> cond = Matrix<Scalar>::Zero(n, n);
    Vector<Scalar> sigmas(n), achieved(n);
    std::vector<char> degenerate(static_cast<std::size_t>(n), 0);
    parallel_rows(static_cast<std::size_t>(n), opts.threads, [&](std::size_t b, std::size_t e) {
        for (auto i = static_cast<Eigen::Index>(b); i < static_cast<Eigen::Index>(e); ++i) {
            std::optional<Scalar> init;
            if (initial_sigmas && initial_sigmas->size() == n) init = (*initial_sigmas)(i);
            Calibration<Scalar> cal;
            try {
                cal = calibrate_sigma(sq.col(i), i, target, opts.tol, opts.max_iter, init);
            } catch (const NumericalFailure& ex) {
                throw NumericalFailure("row " + std::to_string(i) + ": " + ex.what());
            }
            sigmas(i) = cal.sigma;
            achieved(i) = cal.perplexity;
            degenerate[static_cast<std::size_t>(i)] = cal.degenerate;
            cond.col(i) = conditional_row(sq.col(i), i, cal.sigma);
        }
    });
    cond.transposeInPlace();

    for (Eigen::Index i = 0; i < n; ++i)
        if (degenerate[static_cast<std::size_t>(i)])
            notes.push_back("row " + std::to_string(i) +
                            ": equidistant neighbours, perplexity independent of sigma");
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = i + 1; j < n; ++j) {
            if (sq(i, j) == 0) {
                notes.push_back("duplicate points detected (e.g. rows " + std::to_string(i) +
                                " and " + std::to_string(j) + ")");
                i = n;
                break;
            }
        }
    }

    AffinityMatrix<Scalar> out = symmetrize(cond);
    out.sigmas = std::move(sigmas);
    out.achieved_perplexity = std::move(achieved);
    out.target_perplexity = target;
    out.notes = std::move(notes);
    return out;
}

}  // namespace treesne
