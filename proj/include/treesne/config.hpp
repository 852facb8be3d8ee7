#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "treesne/common.hpp"
#include "treesne/kernel.hpp"
#include "treesne/optimizer.hpp"
#include "treesne/tree.hpp"

namespace treesne {

/// Bad command line or configuration (exit code 1).
class UsageError : public Error {
public:
    using Error::Error;
};

struct RunConfig {
    std::string input;
    std::string output_dir = "out";
    int dim = 2;
    int layers = 10;
    double alpha_min = 0.1;
    double perplexity0 = 30;
    double perplexity_min = 5;
    std::uint64_t seed = 0;
    int iters = 1000;
    double lr = 200;
    double momentum = 0.8;
    double grad_tol = 1e-5;
    double exaggeration = 12;
    int exaggeration_iters = 250;
    std::optional<std::string> label_column;
    int threads = 0;
    bool plot = false;
    KernelForm kernel = KernelForm::GaussianLimit;

    // cluster
    std::string tree_path;
    std::optional<int> cluster_layer;  // unset: every layer
    std::optional<double> eps;         // unset: per-layer default
    int min_pts = 5;

    // synth
    int synth_n = 400;
    int synth_features = 10;
    int synth_macro = 4;
    int synth_sub = 2;
    double synth_sub_spread = 3.0;

    OptimizerConfig<double> optimizer() const;
    Schedule<double> schedule() const;
};

using ConfigValues = std::map<std::string, std::string>;

/// `key = value` lines; '#' comments; blank lines ignored.
ConfigValues parse_config_text(const std::string& text);
ConfigValues read_config_file(const std::string& path);

/// Throws UsageError on unknown keys or malformed values.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

/// defaults < env seed < config file < flags.
RunConfig resolve_config(const ConfigValues& file, const ConfigValues& flags,
                         const char* env_seed = nullptr);

nlohmann::ordered_json config_to_json(const RunConfig& cfg);

}  // namespace treesne
