#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "treesne/commands.hpp"

namespace {

struct Flag {
    const char* name;
    const char* key;
    const char* help;
};

// Flags are kept as strings and applied through the same setter as the
// config file, so both share one validation path.
const std::vector<Flag> kRunFlags = {
    {"-i,--input", "input", "input data file"},
    {"-o,--output", "output_dir", "output directory"},
    {"--dim", "dim", "embedding dimension"},
    {"--layers", "layers", "number of layers"},
    {"--alpha-min", "alpha_min", "smallest alpha"},
    {"--perplexity", "perplexity0", "perplexity at alpha = 1"},
    {"--perplexity-min", "perplexity_min", "perplexity at alpha_min"},
    {"--seed", "seed", "random seed (falls back to TREESNE_SEED)"},
    {"--iters", "iters", "iterations per layer"},
    {"--lr", "lr", "learning rate"},
    {"--momentum", "momentum", "momentum"},
    {"--grad-tol", "grad_tol", "gradient tolerance"},
    {"--exaggeration", "exaggeration", "early exaggeration factor"},
    {"--exaggeration-iters", "exaggeration_iters", "early exaggeration iterations"},
    {"--label-column", "label_column", "label column name or 1-based index"},
    {"--threads", "threads", "worker threads, 0 = sequential"},
    {"--kernel", "kernel", "gaussian-limit or literal"},
};

void add_flags(CLI::App* cmd, const std::vector<Flag>& flags, std::map<std::string, std::string>& values,
               std::map<std::string, CLI::Option*>& options) {
    for (const auto& f : flags) options[f.key] = cmd->add_option(f.name, values[f.key], f.help);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tree-SNE: stacked heavy-tailed t-SNE embeddings"};
    app.require_subcommand(1);
    app.fallthrough();
    std::string config_path;
    app.add_option("-c,--config", config_path, "key = value config file")->check(CLI::ExistingFile);

    std::map<std::string, std::string> values;
    bool plot = false;

    auto* embed = app.add_subcommand("embed", "single t-SNE layer at alpha = 1");
    auto* tree = app.add_subcommand("tree", "build the layer stack");
    auto* check = app.add_subcommand("check", "numerical diagnostics");
    auto* cluster = app.add_subcommand("cluster", "DBSCAN on tree layers");
    auto* plotc = app.add_subcommand("plot", "SVG slices and trajectories");
    auto* synth = app.add_subcommand("synth", "synthetic mixture-of-mixtures data");

    // CLI11 option names must be unique per subcommand; keys repeat freely.
    std::vector<std::map<std::string, CLI::Option*>> per_cmd(6);
    std::vector<CLI::App*> cmds{embed, tree, check, cluster, plotc, synth};
    for (std::size_t c = 0; c < 3; ++c) add_flags(cmds[c], kRunFlags, values, per_cmd[c]);
    tree->add_flag("--plot", plot, "also write SVG plots");
    add_flags(cluster,
              {{"--tree", "tree", "tree.json to annotate"},
               {"-o,--output", "output_dir", "output directory"},
               {"--layer", "layer", "layer index or 'all'"},
               {"--eps", "eps", "DBSCAN radius or 'auto'"},
               {"--min-pts", "min_pts", "DBSCAN min_pts"}},
              values, per_cmd[3]);
    add_flags(plotc, {{"--tree", "tree", "tree.json"}, {"-o,--output", "output_dir", "output directory"}}, values,
              per_cmd[4]);
    add_flags(synth,
              {{"-o,--output", "output_dir", "output directory"},
               {"--seed", "seed", "random seed"},
               {"--n", "synth_n", "points"},
               {"--features", "synth_features", "ambient dimension"},
               {"--macro", "synth_macro", "macro clusters"},
               {"--sub", "synth_sub", "subclusters per macro cluster"},
               {"--sub-spread", "synth_sub_spread", "subcentre offset"}},
              values, per_cmd[5]);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : treesne::kExitUsage;
    }

    return treesne::run_guarded(
        [&]() -> int {
            treesne::ConfigValues flags;
            for (std::size_t c = 0; c < cmds.size(); ++c) {
                if (!cmds[c]->parsed()) continue;
                for (const auto& [key, opt] : per_cmd[c])
                    if (opt->count() > 0) flags[key] = values[key];
            }
            if (plot) flags["plot"] = "true";
            const treesne::ConfigValues file =
                config_path.empty() ? treesne::ConfigValues{} : treesne::read_config_file(config_path);
            const auto cfg = treesne::resolve_config(file, flags, std::getenv("TREESNE_SEED"));
            if (embed->parsed()) return treesne::cmd_embed(cfg);
            if (tree->parsed()) return treesne::cmd_tree(cfg);
            if (check->parsed()) return treesne::cmd_check(cfg);
            if (cluster->parsed()) return treesne::cmd_cluster(cfg);
            if (plotc->parsed()) return treesne::cmd_plot(cfg);
            return treesne::cmd_synth(cfg);
        },
        std::cerr);
}
