#include "treesne/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "treesne/io.hpp"

namespace treesne {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

template <typename T>
T parse_as(const std::string& key, const std::string& value) {
    T v{};
    const char* first = value.data();
    const char* last = first + value.size();
    if (first != last && *first == '+') ++first;
    const auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc() || res.ptr != last || value.empty())
        throw UsageError("config: bad value '" + value + "' for " + key);
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw UsageError("config: bad boolean '" + value + "' for " + key);
}

}  // namespace

OptimizerConfig<double> RunConfig::optimizer() const {
    OptimizerConfig<double> o;
    o.learning_rate = lr;
    o.momentum = momentum;
    o.max_iters = iters;
    o.grad_tol = grad_tol;
    o.early_exaggeration_factor = exaggeration;
    o.early_exaggeration_iters = exaggeration_iters;
    o.threads = threads;
    o.jitter_seed = seed;
    try {
        validate(o);
    } catch (const DataError& e) {
        throw UsageError(e.what());
    }
    return o;
}

Schedule<double> RunConfig::schedule() const {
    try {
        return make_schedule<double>(layers, alpha_min, perplexity0, perplexity_min, optimizer());
    } catch (const DataError& e) {
        throw UsageError(e.what());
    }
}

ConfigValues parse_config_text(const std::string& text) {
    ConfigValues out;
    std::istringstream in(text);
    std::string line;
    for (int number = 1; std::getline(in, line); ++number) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        if (trim(line).empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError("config line " + std::to_string(number) + ": expected key = value");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw UsageError("config line " + std::to_string(number) + ": empty key");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

ConfigValues read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FileNotFound(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "input") cfg.input = value;
    else if (key == "output_dir") cfg.output_dir = value;
    else if (key == "dim") cfg.dim = parse_as<int>(key, value);
    else if (key == "layers") cfg.layers = parse_as<int>(key, value);
    else if (key == "alpha_min") cfg.alpha_min = parse_as<double>(key, value);
    else if (key == "perplexity0" || key == "perplexity") cfg.perplexity0 = parse_as<double>(key, value);
    else if (key == "perplexity_min") cfg.perplexity_min = parse_as<double>(key, value);
    else if (key == "seed") cfg.seed = parse_as<std::uint64_t>(key, value);
    else if (key == "iters") cfg.iters = parse_as<int>(key, value);
    else if (key == "lr") cfg.lr = parse_as<double>(key, value);
    else if (key == "momentum") cfg.momentum = parse_as<double>(key, value);
    else if (key == "grad_tol") cfg.grad_tol = parse_as<double>(key, value);
    else if (key == "exaggeration") cfg.exaggeration = parse_as<double>(key, value);
    else if (key == "exaggeration_iters") cfg.exaggeration_iters = parse_as<int>(key, value);
    else if (key == "label_column") {
        if (value.empty()) cfg.label_column.reset();
        else cfg.label_column = value;
    } else if (key == "threads") cfg.threads = parse_as<int>(key, value);
    else if (key == "plot") cfg.plot = parse_bool(key, value);
    else if (key == "kernel") {
        try {
            cfg.kernel = kernel_form_from_string(value);
        } catch (const std::invalid_argument& e) {
            throw UsageError(std::string("config: ") + e.what());
        }
    } else if (key == "tree") cfg.tree_path = value;
    else if (key == "layer") {
        if (value == "all") cfg.cluster_layer.reset();
        else cfg.cluster_layer = parse_as<int>(key, value);
    } else if (key == "eps") {
        if (value == "auto") cfg.eps.reset();
        else cfg.eps = parse_as<double>(key, value);
    } else if (key == "min_pts") cfg.min_pts = parse_as<int>(key, value);
    else if (key == "synth_n") cfg.synth_n = parse_as<int>(key, value);
    else if (key == "synth_features") cfg.synth_features = parse_as<int>(key, value);
    else if (key == "synth_macro") cfg.synth_macro = parse_as<int>(key, value);
    else if (key == "synth_sub") cfg.synth_sub = parse_as<int>(key, value);
    else if (key == "synth_sub_spread") cfg.synth_sub_spread = parse_as<double>(key, value);
    else throw UsageError("config: unknown key '" + key + "'");

    if (cfg.threads < 0) throw UsageError("threads must be >= 0");
    if (cfg.dim < 1) throw UsageError("dim must be >= 1");
}

RunConfig resolve_config(const ConfigValues& file, const ConfigValues& flags, const char* env_seed) {
    RunConfig cfg;
    if (env_seed && *env_seed) set_config_value(cfg, "seed", env_seed);
    for (const auto& [k, v] : file) set_config_value(cfg, k, v);
    for (const auto& [k, v] : flags) set_config_value(cfg, k, v);
    return cfg;
}

nlohmann::ordered_json config_to_json(const RunConfig& cfg) {
    nlohmann::ordered_json j;
    j["input"] = cfg.input;
    j["output_dir"] = cfg.output_dir;
    j["dim"] = cfg.dim;
    j["layers"] = cfg.layers;
    j["alpha_min"] = cfg.alpha_min;
    j["perplexity0"] = cfg.perplexity0;
    j["perplexity_min"] = cfg.perplexity_min;
    j["seed"] = cfg.seed;
    j["iters"] = cfg.iters;
    j["lr"] = cfg.lr;
    j["momentum"] = cfg.momentum;
    j["grad_tol"] = cfg.grad_tol;
    j["exaggeration"] = cfg.exaggeration;
    j["exaggeration_iters"] = cfg.exaggeration_iters;
    j["label_column"] = cfg.label_column ? nlohmann::ordered_json(*cfg.label_column) : nullptr;
    j["threads"] = cfg.threads;
    j["plot"] = cfg.plot;
    j["kernel"] = to_string(cfg.kernel);
    return j;
}

}  // namespace treesne
