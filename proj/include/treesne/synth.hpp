#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "treesne/affinity.hpp"
#include "treesne/common.hpp"

namespace treesne {

/// Gaussian mixture of mixtures: `macro` well separated components, each
/// split into `sub` closer subcomponents, unit-variance points around each
/// subcomponent centre.
struct SynthSpec {
    Eigen::Index n = 400;
    Eigen::Index dim = 10;
    int macro = 4;
    int sub = 2;
    double macro_spread = 20.0;  // sd of macro centres
    double sub_spread = 3.0;     // distance of subcentres from their macro centre
    double point_sd = 1.0;
    std::uint64_t seed = 0;
};

struct SynthData {
    Dataset<double> data;
    std::vector<int> macro_labels;
    std::vector<int> sub_labels;  // global subcomponent index
};

inline SynthData make_mixture_of_mixtures(const SynthSpec& spec) {
    if (spec.n < 2 || spec.dim < 1 || spec.macro < 1 || spec.sub < 1)
        throw DataError("synth: invalid mixture shape");
    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0, 1);
    const int groups = spec.macro * spec.sub;
    Matrix<double> centres(groups, spec.dim);
    for (int m = 0; m < spec.macro; ++m) {
        Vector<double> macro_centre(spec.dim);
        for (Eigen::Index k = 0; k < spec.dim; ++k) macro_centre(k) = spec.macro_spread * normal(rng);
        for (int s = 0; s < spec.sub; ++s) {
            Vector<double> dir(spec.dim);
            for (Eigen::Index k = 0; k < spec.dim; ++k) dir(k) = normal(rng);
            dir.normalize();
            centres.row(m * spec.sub + s) = (macro_centre + spec.sub_spread * dir).transpose();
        }
    }
    SynthData out;
    Matrix<double> points(spec.n, spec.dim);
    std::vector<std::string> names;
    for (Eigen::Index i = 0; i < spec.n; ++i) {
        // Balanced, contiguous assignment of points to subcomponents.
        const int g = static_cast<int>(i * groups / spec.n);
        for (Eigen::Index k = 0; k < spec.dim; ++k)
            points(i, k) = centres(g, k) + spec.point_sd * normal(rng);
        out.macro_labels.push_back(g / spec.sub);
        out.sub_labels.push_back(g);
        names.push_back(std::string(1, static_cast<char>('A' + (g / spec.sub) % 26)) +
                        std::to_string(g % spec.sub));
    }
    out.data = make_dataset<double>(std::move(points), std::move(names));
    return out;
}

}  // namespace treesne
