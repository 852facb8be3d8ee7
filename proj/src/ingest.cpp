#include "treesne/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>
#include <vector>

namespace treesne {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, bool comma) {
    std::vector<std::string> out;
    if (comma) {
        std::size_t start = 0;
        for (;;) {
            const auto pos = line.find(',', start);
            out.push_back(trim(line.substr(start, pos == std::string::npos ? std::string::npos : pos - start)));
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
    } else {
        std::istringstream is(line);
        std::string tok;
        while (is >> tok) out.push_back(tok);
    }
    return out;
}

std::optional<double> to_number(const std::string& tok) {
    if (tok.empty()) return std::nullopt;
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (*first == '+') ++first;
    double v = 0;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last) return std::nullopt;
    return v;
}

bool is_index(const std::string& s) {
    return !s.empty() && s.find_first_not_of("0123456789") == std::string::npos;
}

struct Line {
    std::size_t number;
    std::vector<std::string> fields;
};

}  // namespace

Dataset<double> parse_dataset(std::istream& in, const std::optional<std::string>& label_column) {
    std::vector<Line> lines;
    std::optional<bool> comma;
    std::string raw;
    for (std::size_t number = 1; std::getline(in, raw); ++number) {
        const auto hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        if (trim(raw).empty()) continue;
        if (!comma) comma = raw.find(',') != std::string::npos;
        lines.push_back({number, split(raw, *comma)});
    }
    if (lines.empty()) throw DataError("input has no data rows");

    const std::size_t width = lines.front().fields.size();
    std::optional<std::size_t> label_idx;  // 0-based
    if (label_column && is_index(*label_column)) {
        const auto k = std::stoul(*label_column);
        if (k < 1 || k > width) throw DataError("label column " + *label_column + " out of range");
        label_idx = k - 1;
    }

    bool header = false;
    for (std::size_t c = 0; c < width; ++c)
        if (c != label_idx && !to_number(lines.front().fields[c])) header = true;

    if (label_column && !label_idx) {
        if (!header) throw DataError("label column '" + *label_column + "' given but input has no header");
        const auto& names = lines.front().fields;
        for (std::size_t c = 0; c < names.size(); ++c)
            if (names[c] == *label_column) label_idx = c;
        if (!label_idx) throw DataError("label column '" + *label_column + "' not in header");
    } else if (label_column && header) {
        // a header may also name a purely numeric column
        const auto& names = lines.front().fields;
        for (std::size_t c = 0; c < names.size(); ++c)
            if (names[c] == *label_column) label_idx = c;
    }

    const std::size_t first = header ? 1 : 0;
    const std::size_t n = lines.size() - first;
    const std::size_t features = width - (label_idx ? 1 : 0);
    if (features == 0) throw DataError("input has no numeric columns");
    Matrix<double> points(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(features));
    std::vector<std::string> labels;
    for (std::size_t r = first; r < lines.size(); ++r) {
        const auto& line = lines[r];
        if (line.fields.size() != width) throw DimensionMismatch(line.number, width, line.fields.size());
        Eigen::Index k = 0;
        for (std::size_t c = 0; c < width; ++c) {
            const auto& tok = line.fields[c];
            if (c == label_idx) {
                labels.push_back(tok);
                continue;
            }
            const auto v = to_number(tok);
            if (!v) throw ParseError(line.number, c + 1, tok);
            if (!std::isfinite(*v)) throw ParseError(line.number, c + 1, tok, "is not finite");
            points(static_cast<Eigen::Index>(r - first), k++) = *v;
        }
    }
    std::optional<std::vector<std::string>> lab;
    if (label_idx) lab = std::move(labels);
    return make_dataset<double>(std::move(points), std::move(lab));
}

Dataset<double> ingest(const std::string& path, const std::optional<std::string>& label_column) {
    std::ifstream in(path);
    if (!in) throw FileNotFound(path);
    return parse_dataset(in, label_column);
}

std::string format_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace treesne
