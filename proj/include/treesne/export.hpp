#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "treesne/diagnostics.hpp"
#include "treesne/tree.hpp"

namespace treesne {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

struct TreeDocument {
    LayerStack<double> stack;
    Json config;
};

/// Tree document: metadata, per-layer optimizer reports and optional cluster
/// labels, per-point trajectories [layer, alpha, y1..yd]. Coordinates live
/// only in the trajectories.
Json tree_to_json(const LayerStack<double>& stack, const Json& config);
/// Inverse of tree_to_json. Loss traces are not stored and come back empty.
TreeDocument tree_from_json(const Json& doc);

/// Two-space indent plus trailing newline. Doubles print in shortest
/// round-trip form.
std::string dump_json(const Json& doc);
Json parse_json(const std::string& text);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

/// First line of every CSV: "# schema_version=1 config=<json>".
std::string csv_preamble(const Json& config);
/// point_id[,label],y1..yd
std::string layer_csv(const Matrix<double>& coords, const std::vector<std::int64_t>& ids,
                      const std::optional<std::vector<std::string>>& labels, const Json& config);
/// layer,alpha,perplexity,point_id[,label],y1..yd
std::string layers_csv(const LayerStack<double>& stack, const Json& config);

Json optimizer_report_json(const OptimizerReport<double>& r, bool with_trace = false);
Json rank_report_json(const RankReport& r);
Json run_report_json(const LayerStack<double>& stack, const Json& config);

}  // namespace treesne
