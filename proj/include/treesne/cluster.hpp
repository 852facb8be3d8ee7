#pragma once

#include <cmath>
#include <map>
#include <vector>

#include "treesne/common.hpp"

namespace treesne {

/// DBSCAN output: -1 marks noise, clusters are numbered 0..k-1.
struct ClusterLabels {
    std::vector<int> labels;
    double eps = 0;
    int min_pts = 1;

    int cluster_count() const {
        int k = 0;
        for (int l : labels) k = std::max(k, l + 1);
        return k;
    }
    std::size_t noise_count() const {
        return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), -1));
    }
};

inline constexpr int kNoise = -1;

/// Density-based clustering with the following fixed conventions:
///  - a point's eps-neighbourhood includes itself and is closed (dist <= eps);
///  - core points have at least min_pts neighbours;
///  - cluster ids follow the index of each cluster's first core point;
///  - a border point reachable from several clusters joins the lowest id.
template <typename Derived>
ClusterLabels dbscan(const Eigen::MatrixBase<Derived>& points, double eps, int min_pts) {
    if (!(eps > 0)) throw DataError("dbscan: eps must be positive");
    if (min_pts < 1) throw DataError("dbscan: min_pts must be >= 1");
    if (!points.allFinite()) throw DataError("dbscan: points must be finite");
    const Eigen::Index n = points.rows();
    const double eps_sq = eps * eps;

    std::vector<std::vector<Eigen::Index>> neighbours(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double sq = static_cast<double>((points.row(i) - points.row(j)).squaredNorm());
            if (sq <= eps_sq) neighbours[static_cast<std::size_t>(i)].push_back(j);
        }
    }
    std::vector<char> core(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < core.size(); ++i)
        core[i] = static_cast<int>(neighbours[i].size()) >= min_pts;

    ClusterLabels out;
    out.eps = eps;
    out.min_pts = min_pts;
    out.labels.assign(static_cast<std::size_t>(n), kNoise);
    int next_id = 0;
    std::vector<Eigen::Index> stack;
    for (Eigen::Index seed = 0; seed < n; ++seed) {
        const auto s = static_cast<std::size_t>(seed);
        if (!core[s] || out.labels[s] != kNoise) continue;
        const int id = next_id++;
        out.labels[s] = id;
        stack.assign(1, seed);
        while (!stack.empty()) {
            const auto u = static_cast<std::size_t>(stack.back());
            stack.pop_back();
            for (Eigen::Index v : neighbours[u]) {
                const auto vs = static_cast<std::size_t>(v);
                if (core[vs] && out.labels[vs] == kNoise) {
                    out.labels[vs] = id;
                    stack.push_back(v);
                }
            }
        }
    }
    // Border points: lowest id among adjacent core points.
    for (std::size_t i = 0; i < core.size(); ++i) {
        if (core[i]) continue;
        int best = kNoise;
        for (Eigen::Index v : neighbours[i]) {
            const auto vs = static_cast<std::size_t>(v);
            if (core[vs] && (best == kNoise || out.labels[vs] < best)) best = out.labels[vs];
        }
        out.labels[i] = best;
    }
    return out;
}

/// 5% of the bounding-box diagonal.
template <typename Derived>
double default_dbscan_eps(const Eigen::MatrixBase<Derived>& points) {
    const auto extent = (points.colwise().maxCoeff() - points.colwise().minCoeff()).eval();
    const double diag = static_cast<double>(extent.norm());
    return diag > 0 ? 0.05 * diag : 1.0;
}

/// For each cluster of one layer, how many of its members land in each
/// cluster (or noise) of the next layer.
using TransitionTable = std::map<int, std::map<int, int>>;

inline TransitionTable transition_table(const ClusterLabels& from, const ClusterLabels& to) {
    if (from.labels.size() != to.labels.size()) throw DataError("transition_table: size mismatch");
    TransitionTable table;
    for (std::size_t i = 0; i < from.labels.size(); ++i) ++table[from.labels[i]][to.labels[i]];
    return table;
}

struct ClusterTrajectory {
    std::vector<ClusterLabels> layers;
    std::vector<TransitionTable> transitions;  // transitions[i]: layer i -> i+1
};

/// Clusters every layer of a stack (anything exposing layers[i].coords).
template <typename Stack>
ClusterTrajectory cluster_trajectory(const Stack& stack, const std::vector<double>& eps_per_layer,
                                     int min_pts) {
    if (eps_per_layer.size() != stack.layers.size())
        throw DataError("cluster_trajectory: one eps per layer required");
    ClusterTrajectory out;
    for (std::size_t i = 0; i < stack.layers.size(); ++i)
        out.layers.push_back(dbscan(stack.layers[i].coords, eps_per_layer[i], min_pts));
    for (std::size_t i = 0; i + 1 < out.layers.size(); ++i)
        out.transitions.push_back(transition_table(out.layers[i], out.layers[i + 1]));
    return out;
}

/// Adjusted Rand index between two labelings (noise treated as one more
/// label value).
template <typename A, typename B>
double adjusted_rand_index(const std::vector<A>& x, const std::vector<B>& y) {
    if (x.size() != y.size()) throw DataError("adjusted_rand_index: size mismatch");
    std::map<A, std::map<B, double>> table;
    std::map<A, double> rows;
    std::map<B, double> cols;
    for (std::size_t i = 0; i < x.size(); ++i) {
        table[x[i]][y[i]] += 1;
        rows[x[i]] += 1;
        cols[y[i]] += 1;
    }
    auto pairs = [](double c) { return c * (c - 1) / 2; };
    double index = 0, a = 0, b = 0;
    for (const auto& [_, row] : table)
        for (const auto& [__, c] : row) index += pairs(c);
    for (const auto& [_, c] : rows) a += pairs(c);
    for (const auto& [_, c] : cols) b += pairs(c);
    const double total = pairs(static_cast<double>(x.size()));
    const double expected = total > 0 ? a * b / total : 0;
    const double max_index = (a + b) / 2;
    if (max_index == expected) return 1.0;
    return (index - expected) / (max_index - expected);
}

}  // namespace treesne
