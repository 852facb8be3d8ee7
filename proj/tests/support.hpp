#pragma once

// Reference implementations used as oracles. Written directly from the
// defining formulas with plain loops, sharing nothing with the library
// beyond the Matrix typedef.

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "treesne/common.hpp"

namespace oracle {

using treesne::Matrix;

inline Matrix<double> gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed, double sd = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0, sd);
    Matrix<double> m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
    return m;
}

/// Random symmetric affinities, zero diagonal, total mass one.
inline Matrix<double> random_p(Eigen::Index n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.05, 1.0);
    Matrix<double> p = Matrix<double>::Zero(n, n);
    double total = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j) {
            p(i, j) = p(j, i) = u(rng);
            total += 2 * p(i, j);
        }
    return p / total;
}

inline double dist(const Matrix<double>& y, Eigen::Index i, Eigen::Index j) {
    double s = 0;
    for (Eigen::Index k = 0; k < y.cols(); ++k) s += (y(i, k) - y(j, k)) * (y(i, k) - y(j, k));
    return std::sqrt(s);
}

/// (1 + d^2/alpha)^(-alpha), or the literal (1 + d^(2/alpha))^(-alpha).
inline double kernel(double alpha, double d, bool literal = false) {
    return literal ? std::pow(1 + std::pow(d, 2 / alpha), -alpha) : std::pow(1 + d * d / alpha, -alpha);
}

inline Matrix<double> q(const Matrix<double>& y, double alpha, bool literal = false) {
    const Eigen::Index n = y.rows();
    Matrix<double> out = Matrix<double>::Zero(n, n);
    double z = 0;
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j)
            if (i != j) z += out(i, j) = kernel(alpha, dist(y, i, j), literal);
    return out / z;
}

inline double kl(const Matrix<double>& p, const Matrix<double>& y, double alpha, bool literal = false) {
    const Matrix<double> qq = q(y, alpha, literal);
    double s = 0;
    for (Eigen::Index i = 0; i < p.rows(); ++i)
        for (Eigen::Index j = 0; j < p.cols(); ++j)
            if (i != j && p(i, j) > 0) s += p(i, j) * std::log(p(i, j) / qq(i, j));
    return s;
}

/// Classical t-SNE gradient, 4 sum_j (p_ij - q_ij)(1 + d_ij^2)^(-1)(y_i - y_j).
inline Matrix<double> tsne_gradient(const Matrix<double>& p, const Matrix<double>& y) {
    const Matrix<double> qq = q(y, 1.0);
    Matrix<double> g = Matrix<double>::Zero(y.rows(), y.cols());
    for (Eigen::Index i = 0; i < y.rows(); ++i)
        for (Eigen::Index j = 0; j < y.rows(); ++j) {
            if (i == j) continue;
            const double d = dist(y, i, j);
            const double c = 4 * (p(i, j) - qq(i, j)) / (1 + d * d);
            for (Eigen::Index k = 0; k < y.cols(); ++k) g(i, k) += c * (y(i, k) - y(j, k));
        }
    return g;
}

/// Central differences of the reference loss.
inline Matrix<double> fd_gradient(const Matrix<double>& p, const Matrix<double>& y, double alpha, double h,
                                  bool literal = false) {
    Matrix<double> g(y.rows(), y.cols());
    Matrix<double> s = y;
    for (Eigen::Index i = 0; i < y.rows(); ++i)
        for (Eigen::Index k = 0; k < y.cols(); ++k) {
            s(i, k) = y(i, k) + h;
            const double up = kl(p, s, alpha, literal);
            s(i, k) = y(i, k) - h;
            const double down = kl(p, s, alpha, literal);
            s(i, k) = y(i, k);
            g(i, k) = (up - down) / (2 * h);
        }
    return g;
}

/// 2^(entropy in bits) of a probability row.
inline double perplexity(const std::vector<double>& row) {
    double h = 0;
    for (double v : row)
        if (v > 0) h -= v * std::log2(v);
    return std::pow(2.0, h);
}

/// Conditional Gaussian row p_{.|i}, exp(-d^2 / sigma^2) normalized.
inline std::vector<double> conditional(const Matrix<double>& x, Eigen::Index i, double sigma) {
    std::vector<double> row(static_cast<std::size_t>(x.rows()), 0.0);
    double total = 0;
    for (Eigen::Index j = 0; j < x.rows(); ++j) {
        if (j == i) continue;
        const double d = dist(x, i, j);
        total += row[static_cast<std::size_t>(j)] = std::exp(-d * d / (sigma * sigma));
    }
    for (double& v : row) v /= total;
    return row;
}

/// DBSCAN by reachability closure: core points connect when within eps,
/// components come from repeated relaxation to a fixed point; border points
/// join the smallest component id among their core neighbours, where
/// component ids are ordered by smallest core index.
inline std::vector<int> dbscan(const Matrix<double>& x, double eps, int min_pts) {
    const auto n = static_cast<std::size_t>(x.rows());
    std::vector<std::vector<bool>> near(n, std::vector<bool>(n));
    std::vector<bool> core(n);
    for (std::size_t i = 0; i < n; ++i) {
        int c = 0;
        for (std::size_t j = 0; j < n; ++j) {
            near[i][j] = dist(x, static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) <= eps;
            c += near[i][j];
        }
        core[i] = c >= min_pts;
    }
    // reach[i][j]: j density-reachable from core i
    std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
    for (std::size_t i = 0; i < n; ++i)
        if (core[i])
            for (std::size_t j = 0; j < n; ++j) reach[i][j] = near[i][j] && core[j];
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            if (reach[i][k])
                for (std::size_t j = 0; j < n; ++j)
                    if (reach[k][j]) reach[i][j] = true;
    std::vector<int> rep(n, -1);  // smallest core index in the component
    for (std::size_t i = 0; i < n; ++i)
        if (core[i]) {
            rep[i] = static_cast<int>(i);
            for (std::size_t j = 0; j < i; ++j)
                if (reach[i][j]) {
                    rep[i] = static_cast<int>(j);
                    break;
                }
        }
    std::map<int, int> id;
    for (std::size_t i = 0; i < n; ++i)
        if (core[i] && !id.count(rep[i])) id.emplace(rep[i], static_cast<int>(id.size()));
    std::vector<int> labels(n, -1);
    for (std::size_t i = 0; i < n; ++i) {
        if (core[i]) {
            labels[i] = id[rep[i]];
            continue;
        }
        for (std::size_t j = 0; j < n; ++j)
            if (core[j] && near[i][j] && (labels[i] == -1 || id[rep[j]] < labels[i])) labels[i] = id[rep[j]];
    }
    return labels;
}

/// Same partition up to renaming of non-negative ids; noise must match exactly.
inline bool same_partition(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) return false;
    std::map<int, int> fwd, back;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if ((a[i] < 0) != (b[i] < 0)) return false;
        if (a[i] < 0) continue;
        auto f = fwd.emplace(a[i], b[i]).first;
        auto g = back.emplace(b[i], a[i]).first;
        if (f->second != b[i] || g->second != a[i]) return false;
    }
    return true;
}

inline Matrix<double> equilateral(double side) {
    Matrix<double> y(3, 2);
    for (int i = 0; i < 3; ++i) {
        const double th = 2 * M_PI * i / 3;
        y(i, 0) = side / std::sqrt(3.0) * std::cos(th);
        y(i, 1) = side / std::sqrt(3.0) * std::sin(th);
    }
    return y;
}

inline Matrix<double> uniform_p(Eigen::Index n) {
    Matrix<double> p = Matrix<double>::Constant(n, n, 1.0 / static_cast<double>(n * (n - 1)));
    p.diagonal().setZero();
    return p;
}

}  // namespace oracle
