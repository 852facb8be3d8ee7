#include "treesne/commands.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <ostream>
#include <random>

#include "treesne/cluster.hpp"
#include "treesne/diagnostics.hpp"
#include "treesne/io.hpp"
#include "treesne/svg.hpp"
#include "treesne/synth.hpp"

namespace treesne {

namespace fs = std::filesystem;

namespace {

std::string out_path(const RunConfig& cfg, const std::string& name) {
    return (fs::path(cfg.output_dir) / name).string();
}

void ensure_output_dir(const RunConfig& cfg) {
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec || !fs::is_directory(cfg.output_dir))
        throw DataError("cannot create output directory " + cfg.output_dir);
}

TreeOptions<double> tree_options(const RunConfig& cfg) {
    TreeOptions<double> o;
    o.dim = cfg.dim;
    o.form = cfg.kernel;
    o.threads = cfg.threads;
    return o;
}

void write_plots(const LayerStack<double>& stack, const std::string& dir, const Json& config) {
    const std::string meta = Json{{"schema_version", kSchemaVersion}, {"config", config}}.dump();
    for (std::size_t l = 0; l < stack.size(); ++l) {
        const auto& layer = stack.layers[l];
        std::ostringstream title;
        title << "layer " << l << "  alpha=" << layer.alpha << "  perplexity=" << layer.perplexity;
        write_text_file((fs::path(dir) / ("layer_" + std::to_string(l) + ".svg")).string(),
                        with_metadata(layer_svg(layer.coords, colour_keys(stack, l), title.str()), meta));
    }
    write_text_file((fs::path(dir) / "trajectories.svg").string(),
                    with_metadata(trajectory_svg(stack, colour_keys(stack, 0)), meta));
}

Matrix<double> equilateral(double side) {
    Matrix<double> y(3, 2);
    for (int i = 0; i < 3; ++i) {
        const double th = 2 * M_PI * i / 3;
        y(i, 0) = side / std::sqrt(3.0) * std::cos(th);
        y(i, 1) = side / std::sqrt(3.0) * std::sin(th);
    }
    return y;
}

}  // namespace

Dataset<double> load_input(const RunConfig& cfg) {
    if (cfg.input.empty()) throw UsageError("no input file given");
    return ingest(cfg.input, cfg.label_column);
}

int cmd_embed(const RunConfig& cfg) {
    const auto data = load_input(cfg);
    Schedule<double> sched;
    sched.alphas = {1.0};
    sched.perplexities = {cfg.perplexity0};
    sched.optimizer = cfg.optimizer();
    ensure_output_dir(cfg);
    const auto stack = build_tree(data, sched, cfg.seed, tree_options(cfg));
    const Json config = config_to_json(cfg);
    write_text_file(out_path(cfg, "layer_0.csv"),
                    layer_csv(stack.layers[0].coords, stack.point_ids, stack.labels, config));
    write_text_file(out_path(cfg, "report.json"), dump_json(run_report_json(stack, config)));
    const auto& r = stack.layers[0].report;
    std::cout << "embed: n=" << data.size() << " loss=" << r.final_loss << " grad=" << r.final_grad_norm
              << (r.converged ? " converged" : " not converged") << " in " << r.iters << " iterations\n";
    return kExitOk;
}

int cmd_tree(const RunConfig& cfg) {
    const auto data = load_input(cfg);
    const auto sched = cfg.schedule();
    ensure_output_dir(cfg);
    const auto stack = build_tree(data, sched, cfg.seed, tree_options(cfg));
    const Json config = config_to_json(cfg);
    write_text_file(out_path(cfg, "layers.csv"), layers_csv(stack, config));
    write_text_file(out_path(cfg, "tree.json"), dump_json(tree_to_json(stack, config)));
    write_text_file(out_path(cfg, "report.json"), dump_json(run_report_json(stack, config)));
    if (cfg.plot) write_plots(stack, cfg.output_dir, config_to_json(cfg));
    int converged = 0;
    for (const auto& l : stack.layers) converged += l.report.converged;
    std::cout << "tree: " << stack.size() << " layers, " << converged << " converged, alpha " << sched.alphas.front()
              << " -> " << sched.alphas.back() << "\n";
    return kExitOk;
}

int cmd_check(const RunConfig& cfg) {
    Dataset<double> data;
    if (!cfg.input.empty()) {
        data = load_input(cfg);
    } else {
        std::mt19937_64 rng(cfg.seed);
        std::normal_distribution<double> normal(0, 1);
        Matrix<double> x(6, 4);
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            for (Eigen::Index k = 0; k < x.cols(); ++k) x(i, k) = normal(rng);
        data = make_dataset<double>(std::move(x));
    }
    validate(data);
    const Eigen::Index n = data.size();
    const double perplexity = std::min(cfg.perplexity0, (static_cast<double>(n) - 1) / 2);
    const auto aff = build_affinities(data, perplexity);
    const KernelParam<double> param{1.0, cfg.kernel};
    Json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["config"] = config_to_json(cfg);
    doc["n"] = n;
    doc["dim"] = cfg.dim;
    doc["perplexity"] = aff.target_perplexity;
    bool all_pass = true;
    auto record = [&](const char* name, Json j, bool pass) {
        j["pass"] = pass;
        all_pass = all_pass && pass;
        doc["checks"][name] = std::move(j);
    };

    // Gradient at a generic (non-critical) point.
    const Matrix<double> probe = random_init<double>(n, cfg.dim, 1.0, cfg.seed + 1);
    const auto gc = gradient_check(aff.p, probe, param, 1e-5);
    record("gradient", {{"max_rel_error", gc.max_rel_error}, {"max_abs_error", gc.max_abs_error}, {"roundoff", gc.roundoff}, {"h", 1e-5},
                        {"threshold", 1e-5}},
           gc.max_rel_error < 1e-5);

    OptimizerConfig<double> oc = cfg.optimizer();
    oc.grad_tol = std::min(cfg.grad_tol, 1e-7);
    oc.max_iters = std::max(cfg.iters, 100000);
    const auto result = descend(aff.p, random_init<double>(n, cfg.dim, 1e-2, cfg.seed), param, oc);
    const Matrix<double>& y = result.coords;
    record("descent", optimizer_report_json(result.report), result.report.converged);

    const double rigid = rigid_invariance_check(aff.p, y, param, cfg.seed);
    record("rigid_invariance", {{"max_loss_deviation", rigid}, {"threshold", 1e-10}}, rigid < 1e-10);

    // At a critical point the rank can only fall short of nd - d(d+1)/2.
    const auto hr = hessian_rank_check(aff.p, y, param);
    record("hessian_rank", rank_report_json(hr), hr.rank <= hr.expected_rank);
    const auto qr = quotient_hessian_rank_check(aff.p, y, param);
    record("quotient_hessian_rank", rank_report_json(qr), qr.rank <= qr.expected_rank);

    const auto affinities_at = [&](double) { return aff; };
    const auto jr = f_jacobian_rank<double>(affinities_at, y, 1.0, cfg.kernel);
    Json jj = rank_report_json(jr.rank);
    jj["hessian_rank"] = jr.hessian_rank;
    jj["alpha_column_norm"] = jr.alpha_column_norm;
    jj["alpha_column_residual"] = jr.alpha_column_residual;
    jj["alpha_column_in_span"] = jr.alpha_column_in_span;
    record("f_jacobian_rank", jj, jr.rank.rank >= jr.hessian_rank);

    Matrix<double> uniform = Matrix<double>::Constant(3, 3, 1.0 / 6);
    uniform.diagonal().setZero();
    Json eq = Json::array();
    bool eq_pass = true;
    for (double side : {0.5, 1.0, 2.0}) {
        const auto r = hessian_rank_check(uniform, equilateral(side), KernelParam<double>{1.0, cfg.kernel});
        bool plateau = true;
        for (const auto& [tol, rank] : r.sweep)
            if (tol >= 1e-6) plateau = plateau && rank <= 2;
        eq_pass = eq_pass && plateau;
        Json e = rank_report_json(r);
        e["side"] = side;
        eq.push_back(e);
    }
    record("equilateral_rank_deficiency", {{"bound", 2}, {"cases", eq}}, eq_pass);

    doc["all_pass"] = all_pass;
    ensure_output_dir(cfg);
    write_text_file(out_path(cfg, "diagnostics.json"), dump_json(doc));
    for (const auto& [name, c] : doc["checks"].items())
        std::cout << (c["pass"].get<bool>() ? "PASS " : "FAIL ") << name << "\n";
    return all_pass ? kExitOk : kExitCheckFailed;
}

int cmd_cluster(const RunConfig& cfg) {
    if (cfg.tree_path.empty()) throw UsageError("cluster: --tree is required");
    if (cfg.min_pts < 1) throw UsageError("min_pts must be >= 1");
    if (cfg.eps && !(*cfg.eps > 0)) throw UsageError("eps must be positive");
    auto doc = tree_from_json(parse_json(read_text_file(cfg.tree_path)));
    auto& stack = doc.stack;
    std::vector<std::size_t> which;
    if (cfg.cluster_layer) {
        if (*cfg.cluster_layer < 0 || static_cast<std::size_t>(*cfg.cluster_layer) >= stack.size())
            throw UsageError("cluster: layer out of range");
        which.push_back(static_cast<std::size_t>(*cfg.cluster_layer));
    } else {
        for (std::size_t l = 0; l < stack.size(); ++l) which.push_back(l);
    }
    ensure_output_dir(cfg);
    const Json config = config_to_json(cfg);
    Json summary;
    summary["schema_version"] = kSchemaVersion;
    summary["config"] = config;
    Json layers = Json::array();
    for (std::size_t l : which) {
        auto& layer = stack.layers[l];
        const double eps = cfg.eps ? *cfg.eps : default_dbscan_eps(layer.coords);
        layer.clusters = dbscan(layer.coords, eps, cfg.min_pts);
        std::ostringstream os;
        os << csv_preamble(config) << "point_id" << (stack.labels ? ",label" : "") << ",cluster\n";
        for (std::size_t i = 0; i < stack.point_ids.size(); ++i) {
            os << stack.point_ids[i];
            if (stack.labels) os << ',' << (*stack.labels)[i];
            os << ',' << layer.clusters->labels[i] << "\n";
        }
        write_text_file(out_path(cfg, "clusters_" + std::to_string(l) + ".csv"), os.str());
        layers.push_back({{"layer", l},
                          {"eps", eps},
                          {"clusters", layer.clusters->cluster_count()},
                          {"noise", layer.clusters->noise_count()}});
        std::cout << "layer " << l << ": " << layer.clusters->cluster_count() << " clusters, "
                  << layer.clusters->noise_count() << " noise (eps=" << eps << ")\n";
    }
    summary["layers"] = layers;
    Json transitions = Json::array();
    for (std::size_t k = 0; k + 1 < which.size(); ++k) {
        if (which[k + 1] != which[k] + 1) continue;
        Json t;
        t["from_layer"] = which[k];
        for (const auto& [from, row] :
             transition_table(*stack.layers[which[k]].clusters, *stack.layers[which[k + 1]].clusters))
            for (const auto& [to, count] : row)
                t["counts"].push_back({{"from", from}, {"to", to}, {"count", count}});
        transitions.push_back(t);
    }
    summary["transitions"] = transitions;
    write_text_file(out_path(cfg, "clusters.json"), dump_json(summary));
    write_text_file(cfg.tree_path, dump_json(tree_to_json(stack, doc.config)));
    return kExitOk;
}

int cmd_plot(const RunConfig& cfg) {
    if (cfg.tree_path.empty()) throw UsageError("plot: --tree is required");
    const auto doc = tree_from_json(parse_json(read_text_file(cfg.tree_path)));
    ensure_output_dir(cfg);
    write_plots(doc.stack, cfg.output_dir, config_to_json(cfg));
    std::cout << "plot: " << doc.stack.size() << " layer slices and trajectories.svg in " << cfg.output_dir << "\n";
    return kExitOk;
}

int cmd_synth(const RunConfig& cfg) {
    SynthSpec spec;
    spec.n = cfg.synth_n;
    spec.dim = cfg.synth_features;
    spec.macro = cfg.synth_macro;
    spec.sub = cfg.synth_sub;
    spec.sub_spread = cfg.synth_sub_spread;
    spec.seed = cfg.seed;
    const auto sd = make_mixture_of_mixtures(spec);
    ensure_output_dir(cfg);
    Json config = config_to_json(cfg);
    config["synth"] = {{"n", spec.n},
                       {"features", spec.dim},
                       {"macro", spec.macro},
                       {"sub", spec.sub},
                       {"macro_spread", spec.macro_spread},
                       {"sub_spread", spec.sub_spread},
                       {"point_sd", spec.point_sd}};
    std::ostringstream os;
    os << csv_preamble(config);
    for (Eigen::Index k = 0; k < spec.dim; ++k) os << 'x' << k + 1 << ',';
    os << "label\n";
    const auto& x = sd.data.points;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index k = 0; k < x.cols(); ++k) os << format_number(x(i, k)) << ',';
        os << (*sd.data.labels)[static_cast<std::size_t>(i)] << "\n";
    }
    write_text_file(out_path(cfg, "synth.csv"), os.str());
    std::cout << "synth: " << spec.n << " points in " << spec.dim << " dimensions\n";
    return kExitOk;
}

int run_guarded(const std::function<int()>& body, std::ostream& err) {
    Json e;
    int code = kExitOk;
    try {
        return body();
    } catch (const UsageError& ex) {
        code = kExitUsage;
        e = {{"error", "usage"}, {"message", ex.what()}};
    } catch (const ParseError& ex) {
        code = kExitData;
        e = {{"error", "parse"}, {"message", ex.what()}, {"row", ex.row}, {"col", ex.col}, {"token", ex.token}};
    } catch (const FileNotFound& ex) {
        code = kExitData;
        e = {{"error", "file_not_found"}, {"message", ex.what()}, {"path", ex.path}};
    } catch (const DimensionMismatch& ex) {
        code = kExitData;
        e = {{"error", "dimension_mismatch"}, {"message", ex.what()}, {"row", ex.row},
             {"expected", ex.expected}, {"got", ex.got}};
    } catch (const DataError& ex) {
        code = kExitData;
        e = {{"error", "data"}, {"message", ex.what()}};
    } catch (const NumericalFailure& ex) {
        code = kExitNumerical;
        e = {{"error", "numerical"}, {"message", ex.what()}, {"iteration", ex.iteration()}};
    } catch (const std::invalid_argument& ex) {
        code = kExitData;
        e = {{"error", "data"}, {"message", ex.what()}};
    } catch (const std::domain_error& ex) {
        code = kExitData;
        e = {{"error", "data"}, {"message", ex.what()}};
    } catch (const std::exception& ex) {
        code = kExitNumerical;
        e = {{"error", "internal"}, {"message", ex.what()}};
    }
    e["exit_code"] = code;
    err << e.dump() << std::endl;
    return code;
}

}  // namespace treesne
