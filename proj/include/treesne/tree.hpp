#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "treesne/affinity.hpp"
#include "treesne/cluster.hpp"
#include "treesne/common.hpp"
#include "treesne/kernel.hpp"
#include "treesne/optimizer.hpp"

namespace treesne {

/// Per-layer alpha and perplexity values plus the optimizer settings.
/// alphas start at 1 and strictly decrease; perplexities never increase.
template <typename Scalar>
struct Schedule {
    std::vector<Scalar> alphas;
    std::vector<Scalar> perplexities;
    OptimizerConfig<Scalar> optimizer;

    std::size_t size() const { return alphas.size(); }
};

template <typename Scalar>
void validate(const Schedule<Scalar>& s) {
    if (s.alphas.empty()) throw DataError("schedule has no layers");
    if (s.perplexities.size() != s.alphas.size())
        throw DataError("schedule: one perplexity per layer required");
    if (s.alphas.front() != 1) throw DataError("schedule: first alpha must be 1");
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (!(s.alphas[i] > 0)) throw DataError("schedule: alphas must be positive");
        if (!(s.perplexities[i] > 1)) throw DataError("schedule: perplexities must exceed 1");
        if (i > 0 && !(s.alphas[i] < s.alphas[i - 1]))
            throw DataError("schedule: alphas must strictly decrease");
        if (i > 0 && s.perplexities[i] > s.perplexities[i - 1])
            throw DataError("schedule: perplexities must not increase");
    }
    validate(s.optimizer);
}

/// Geometric alphas from 1 down to alpha_min and perplexities affine in alpha,
/// from perplexity0 at alpha = 1 to perplexity_min at alpha = alpha_min.
template <typename Scalar>
Schedule<Scalar> make_schedule(int m, Scalar alpha_min, Scalar perplexity0, Scalar perplexity_min,
                               const OptimizerConfig<Scalar>& optimizer = {}) {
    if (m < 1) throw DataError("make_schedule: need at least one layer");
    if (!(alpha_min > 0 && alpha_min <= 1)) throw DataError("make_schedule: alpha_min must be in (0, 1]");
    if (m > 1 && alpha_min == 1) throw DataError("make_schedule: alpha_min must be < 1 for m > 1");
    if (!(perplexity_min > 1 && perplexity0 >= perplexity_min))
        throw DataError("make_schedule: need 1 < perplexity_min <= perplexity0");
    Schedule<Scalar> s;
    s.optimizer = optimizer;
    for (int i = 0; i < m; ++i) {
        const Scalar a = m == 1 ? Scalar(1) : std::pow(alpha_min, Scalar(i) / Scalar(m - 1));
        s.alphas.push_back(a);
        const Scalar frac = m == 1 ? Scalar(1) : (a - alpha_min) / (Scalar(1) - alpha_min);
        s.perplexities.push_back(perplexity_min + (perplexity0 - perplexity_min) * frac);
    }
    validate(s);
    return s;
}

template <typename Scalar>
struct Layer {
    Scalar alpha = 1;
    Scalar perplexity = 0;
    Matrix<Scalar> coords;
    OptimizerReport<Scalar> report;
    Vector<Scalar> sigmas;  // not serialized
    std::optional<ClusterLabels> clusters;
};

template <typename Scalar>
struct StackMeta {
    std::uint64_t seed = 0;
    std::string dataset_hash;
    Schedule<Scalar> schedule;
    KernelForm form = KernelForm::GaussianLimit;
    std::vector<std::string> notes;
};

/// Stacked layers sharing point identity; layer i+1 was initialized at
/// layer i's final coordinates.
template <typename Scalar>
struct LayerStack {
    std::vector<Layer<Scalar>> layers;
    std::vector<std::int64_t> point_ids;
    std::optional<std::vector<std::string>> labels;
    StackMeta<Scalar> meta;

    std::size_t size() const { return layers.size(); }
    Eigen::Index points() const { return static_cast<Eigen::Index>(point_ids.size()); }
    Eigen::Index dim() const { return layers.empty() ? 0 : layers.front().coords.cols(); }
};

/// FNV-1a over the shape and raw bytes of the points, as 16 hex digits.
template <typename Scalar>
std::string dataset_hash(const Dataset<Scalar>& data) {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* bytes, std::size_t len) {
        const auto* b = static_cast<const unsigned char*>(bytes);
        for (std::size_t i = 0; i < len; ++i) {
            h ^= b[i];
            h *= 1099511628211ULL;
        }
    };
    const std::int64_t shape[2] = {data.points.rows(), data.points.cols()};
    mix(shape, sizeof(shape));
    for (Eigen::Index i = 0; i < data.points.rows(); ++i)
        for (Eigen::Index k = 0; k < data.points.cols(); ++k) {
            const Scalar v = data.points(i, k);
            mix(&v, sizeof(v));
        }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

template <typename Scalar>
struct TreeOptions {
    Eigen::Index dim = 2;
    KernelForm form = KernelForm::GaussianLimit;
    Scalar init_scale = Scalar(1e-2);
    CalibrationOptions<Scalar> calibration;
    int threads = 0;
};

/// Builds the layer stack. Layer 1 descends from a seeded random start at
/// alpha = 1 with early exaggeration; every later layer re-calibrates the
/// affinities at its own perplexity and descends, without exaggeration,
/// from the previous layer's final coordinates.
template <typename Scalar>
LayerStack<Scalar> build_tree(const Dataset<Scalar>& data, const Schedule<Scalar>& sched,
                              std::uint64_t seed, const TreeOptions<Scalar>& opts = {}) {
    validate(data);
    validate(sched);
    if (opts.dim < 1) throw DataError("build_tree: embedding dimension must be >= 1");
    LayerStack<Scalar> stack;
    stack.point_ids = data.ids;
    stack.labels = data.labels;
    stack.meta.seed = seed;
    stack.meta.dataset_hash = dataset_hash(data);
    stack.meta.schedule = sched;
    stack.meta.form = opts.form;

    CalibrationOptions<Scalar> cal = opts.calibration;
    cal.threads = opts.threads;
    Matrix<Scalar> current = random_init<Scalar>(data.size(), opts.dim, opts.init_scale, seed);
    const Vector<Scalar>* previous_sigmas = nullptr;
    for (std::size_t l = 0; l < sched.size(); ++l) {
        Layer<Scalar> layer;
        layer.alpha = sched.alphas[l];
        layer.perplexity = sched.perplexities[l];
        try {
            AffinityMatrix<Scalar> aff = build_affinities(data, layer.perplexity, cal, previous_sigmas);
            layer.perplexity = aff.target_perplexity;  // after clamping
            for (const auto& note : aff.notes)
                stack.meta.notes.push_back("layer " + std::to_string(l) + ": " + note);
            OptimizerConfig<Scalar> cfg = sched.optimizer;
            cfg.threads = opts.threads;
            cfg.jitter_seed = seed + 7919 * static_cast<std::uint64_t>(l + 1);
            if (l > 0) cfg.early_exaggeration_iters = 0;
            auto result = descend(aff.p, current, KernelParam<Scalar>{layer.alpha, opts.form}, cfg);
            layer.coords = std::move(result.coords);
            layer.report = std::move(result.report);
            layer.sigmas = std::move(aff.sigmas);
        } catch (const NumericalFailure& ex) {
            throw NumericalFailure("layer " + std::to_string(l) + ": " + ex.what(), ex.iteration());
        } catch (const DataError& ex) {
            throw DataError("layer " + std::to_string(l) + ": " + ex.what());
        }
        current = layer.coords;
        stack.layers.push_back(std::move(layer));
        previous_sigmas = &stack.layers.back().sigmas;
    }
    return stack;
}

/// Piecewise-linear interpolation between layers; t is 1-based in [1, m].
template <typename Scalar>
Matrix<Scalar> interpolate(const LayerStack<Scalar>& stack, Scalar t) {
    const auto m = static_cast<Scalar>(stack.size());
    if (stack.layers.empty() || !(t >= 1 && t <= m)) throw DataError("interpolate: t out of range");
    const auto k = static_cast<std::size_t>(std::floor(t));
    const Scalar frac = t - static_cast<Scalar>(k);
    if (frac == 0) return stack.layers[k - 1].coords;
    return (Scalar(1) - frac) * stack.layers[k - 1].coords + frac * stack.layers[k].coords;
}

}  // namespace treesne
