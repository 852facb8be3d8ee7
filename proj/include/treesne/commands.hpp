#pragma once

#include <functional>
#include <iosfwd>
#include <string>

#include "treesne/config.hpp"
#include "treesne/export.hpp"

namespace treesne {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumerical = 3;
/// cmd_check ran to completion but at least one check failed.
inline constexpr int kExitCheckFailed = 4;

/// Single layer at alpha = 1: layer_0.csv, report.json.
int cmd_embed(const RunConfig& cfg);
/// layers.csv, tree.json, report.json (+ SVGs when cfg.plot).
int cmd_tree(const RunConfig& cfg);
/// diagnostics.json. Uses cfg.input when set, otherwise a seeded random
/// n = 6, D = 4 Gaussian sample.
int cmd_check(const RunConfig& cfg);
/// Reads cfg.tree_path, writes clusters_<layer>.csv and annotates the tree.
int cmd_cluster(const RunConfig& cfg);
/// layer_<k>.svg per layer plus trajectories.svg into cfg.output_dir.
int cmd_plot(const RunConfig& cfg);
/// Mixture-of-mixtures sample written to cfg.output_dir/synth.csv.
int cmd_synth(const RunConfig& cfg);

/// Runs `body`, mapping exceptions to exit codes and writing one JSON
/// object {"error", "message", "exit_code", ...} to `err`.
int run_guarded(const std::function<int()>& body, std::ostream& err);

/// Ingest honouring cfg.input and cfg.label_column.
Dataset<double> load_input(const RunConfig& cfg);

}  // namespace treesne
