#include "treesne/svg.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace treesne {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 480;
constexpr double kMargin = 30;

const char* palette(int key) {
    static const char* colours[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    if (key < 0) return "#bbbbbb";
    return colours[key % 10];
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Axis {
    double lo, hi, out_lo, out_hi;
    double operator()(double v) const {
        const double span = hi > lo ? hi - lo : 1.0;
        return out_lo + (v - lo) / span * (out_hi - out_lo);
    }
};

std::string header(const std::string& title) {
    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
       << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
       << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
       << "<text x=\"" << kMargin << "\" y=\"18\" font-family=\"sans-serif\" font-size=\"13\">" << escape(title)
       << "</text>\n";
    return os.str();
}

}  // namespace

std::vector<int> colour_keys(const LayerStack<double>& stack, std::size_t layer) {
    const auto n = static_cast<std::size_t>(stack.points());
    if (layer < stack.size() && stack.layers[layer].clusters) return stack.layers[layer].clusters->labels;
    std::vector<int> keys(n, 0);
    if (stack.labels) {
        std::map<std::string, int> seen;
        for (std::size_t i = 0; i < n; ++i) {
            const auto& lab = (*stack.labels)[i];
            auto it = seen.find(lab);
            if (it == seen.end()) it = seen.emplace(lab, static_cast<int>(seen.size())).first;
            keys[i] = it->second;
        }
    }
    return keys;
}

std::string layer_svg(const Matrix<double>& coords, const std::vector<int>& keys, const std::string& title) {
    const Eigen::Index n = coords.rows();
    auto x = [&](Eigen::Index i) { return coords(i, 0); };
    auto y = [&](Eigen::Index i) { return coords.cols() > 1 ? coords(i, 1) : 0.0; };
    double xlo = 0, xhi = 0, ylo = 0, yhi = 0;
    if (n > 0) {
        xlo = xhi = x(0);
        ylo = yhi = y(0);
        for (Eigen::Index i = 1; i < n; ++i) {
            xlo = std::min(xlo, x(i)), xhi = std::max(xhi, x(i));
            ylo = std::min(ylo, y(i)), yhi = std::max(yhi, y(i));
        }
    }
    const Axis ax{xlo, xhi, kMargin, kWidth - kMargin};
    const Axis ay{ylo, yhi, kHeight - kMargin, kMargin};
    std::ostringstream os;
    os << header(title) << "<g>\n";
    for (Eigen::Index i = 0; i < n; ++i) {
        const int key = static_cast<std::size_t>(i) < keys.size() ? keys[static_cast<std::size_t>(i)] : 0;
        os << "<circle cx=\"" << ax(x(i)) << "\" cy=\"" << ay(y(i)) << "\" r=\"2.5\" fill=\"" << palette(key)
           << "\"/>\n";
    }
    os << "</g>\n</svg>\n";
    return os.str();
}

std::string trajectory_svg(const LayerStack<double>& stack, const std::vector<int>& keys) {
    const Eigen::Index n = stack.points();
    const std::size_t m = stack.size();
    double xlo = 0, xhi = 0;
    bool first = true;
    for (const auto& layer : stack.layers)
        for (Eigen::Index i = 0; i < n; ++i) {
            const double v = layer.coords(i, 0);
            if (first) xlo = xhi = v, first = false;
            xlo = std::min(xlo, v), xhi = std::max(xhi, v);
        }
    const Axis ax{xlo, xhi, kMargin, kWidth - kMargin};
    const Axis ay{0, m > 1 ? static_cast<double>(m - 1) : 1.0, kMargin, kHeight - kMargin};
    std::ostringstream os;
    os << header("trajectories: y1 against layer") << "<g fill=\"none\" stroke-width=\"0.8\" stroke-opacity=\"0.6\">\n";
    for (Eigen::Index i = 0; i < n; ++i) {
        const int key = static_cast<std::size_t>(i) < keys.size() ? keys[static_cast<std::size_t>(i)] : 0;
        os << "<polyline stroke=\"" << palette(key) << "\" points=\"";
        for (std::size_t l = 0; l < m; ++l) {
            if (l) os << ' ';
            os << ax(stack.layers[l].coords(i, 0)) << ',' << ay(static_cast<double>(l));
        }
        os << "\"/>\n";
    }
    os << "</g>\n</svg>\n";
    return os.str();
}

std::string with_metadata(const std::string& svg, const std::string& text) {
    const auto open = svg.find("<svg");
    const auto end = open == std::string::npos ? open : svg.find('>', open);
    if (end == std::string::npos) return svg;
    return svg.substr(0, end + 1) + "\n<metadata>" + escape(text) + "</metadata>" + svg.substr(end + 1);
}

}  // namespace treesne
