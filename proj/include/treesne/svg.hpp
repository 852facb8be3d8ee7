#pragma once

#include <string>
#include <vector>

#include "treesne/tree.hpp"

namespace treesne {

/// Colour key per point for one layer: cluster ids when the layer carries
/// them (noise = -1), otherwise label order of first appearance, otherwise 0.
std::vector<int> colour_keys(const LayerStack<double>& stack, std::size_t layer);

/// Scatter of the first two coordinates (1-d layers plot against zero).
std::string layer_svg(const Matrix<double>& coords, const std::vector<int>& keys, const std::string& title);

/// Side view: x = first coordinate, y = layer index, one polyline per point.
std::string trajectory_svg(const LayerStack<double>& stack, const std::vector<int>& keys);

/// Inserts a <metadata> element (escaped text) right after the root tag.
std::string with_metadata(const std::string& svg, const std::string& text);

}  // namespace treesne
