#include "treesne/export.hpp"

#include <fstream>
#include <sstream>

#include "treesne/config.hpp"
#include "treesne/io.hpp"

namespace treesne {

namespace {

Json schedule_json(const Schedule<double>& s) {
    Json j;
    j["alphas"] = s.alphas;
    j["perplexities"] = s.perplexities;
    const auto& o = s.optimizer;
    j["optimizer"] = {{"learning_rate", o.learning_rate},
                      {"momentum", o.momentum},
                      {"max_iters", o.max_iters},
                      {"grad_tol", o.grad_tol},
                      {"early_exaggeration_factor", o.early_exaggeration_factor},
                      {"early_exaggeration_iters", o.early_exaggeration_iters},
                      {"halve_after_increases", o.halve_after_increases},
                      {"halve_after_reversals", o.halve_after_reversals},
                      {"max_jitter_retries", o.max_jitter_retries}};
    return j;
}

Schedule<double> schedule_from_json(const Json& j) {
    Schedule<double> s;
    s.alphas = j.at("alphas").get<std::vector<double>>();
    s.perplexities = j.at("perplexities").get<std::vector<double>>();
    const auto& o = j.at("optimizer");
    s.optimizer.learning_rate = o.at("learning_rate").get<double>();
    s.optimizer.momentum = o.at("momentum").get<double>();
    s.optimizer.max_iters = o.at("max_iters").get<int>();
    s.optimizer.grad_tol = o.at("grad_tol").get<double>();
    s.optimizer.early_exaggeration_factor = o.at("early_exaggeration_factor").get<double>();
    s.optimizer.early_exaggeration_iters = o.at("early_exaggeration_iters").get<int>();
    s.optimizer.halve_after_increases = o.at("halve_after_increases").get<int>();
    s.optimizer.halve_after_reversals = o.at("halve_after_reversals").get<int>();
    s.optimizer.max_jitter_retries = o.at("max_jitter_retries").get<int>();
    return s;
}

OptimizerReport<double> report_from_json(const Json& j) {
    OptimizerReport<double> r;
    r.converged = j.at("converged").get<bool>();
    r.iters = j.at("iters").get<int>();
    r.final_loss = j.at("final_loss").get<double>();
    r.final_grad_norm = j.at("final_grad_norm").get<double>();
    r.final_learning_rate = j.at("final_learning_rate").get<double>();
    r.jitter_retries = j.at("jitter_retries").get<int>();
    return r;
}

}  // namespace

Json optimizer_report_json(const OptimizerReport<double>& r, bool with_trace) {
    Json j;
    j["converged"] = r.converged;
    j["iters"] = r.iters;
    j["final_loss"] = r.final_loss;
    j["final_grad_norm"] = r.final_grad_norm;
    j["final_learning_rate"] = r.final_learning_rate;
    j["jitter_retries"] = r.jitter_retries;
    if (with_trace) j["loss_trace"] = r.loss_trace;
    return j;
}

Json rank_report_json(const RankReport& r) {
    Json j;
    j["rank"] = r.rank;
    j["expected_rank"] = r.expected_rank;
    j["matches_expected"] = r.matches_expected;
    j["rel_tol"] = r.rel_tol;
    j["tolerance"] = r.tolerance;
    j["singular_values"] = r.singular_values;
    Json sweep = Json::array();
    for (const auto& [tol, rank] : r.sweep) sweep.push_back({{"rel_tol", tol}, {"rank", rank}});
    j["sweep"] = sweep;
    return j;
}

Json tree_to_json(const LayerStack<double>& stack, const Json& config) {
    const Eigen::Index n = stack.points();
    const Eigen::Index d = stack.dim();
    Json doc;
    doc["schema_version"] = kSchemaVersion;
    Json meta;
    meta["seed"] = stack.meta.seed;
    meta["dataset_hash"] = stack.meta.dataset_hash;
    meta["n"] = n;
    meta["dim"] = d;
    meta["kernel"] = to_string(stack.meta.form);
    meta["schedule"] = schedule_json(stack.meta.schedule);
    meta["config"] = config;
    meta["notes"] = stack.meta.notes;
    doc["metadata"] = meta;
    doc["point_ids"] = stack.point_ids;
    doc["labels"] = stack.labels ? Json(*stack.labels) : Json(nullptr);

    Json layers = Json::array();
    for (std::size_t l = 0; l < stack.size(); ++l) {
        const auto& layer = stack.layers[l];
        Json jl;
        jl["layer"] = l;
        jl["alpha"] = layer.alpha;
        jl["perplexity"] = layer.perplexity;
        jl["report"] = optimizer_report_json(layer.report);
        if (layer.clusters)
            jl["clusters"] = {{"eps", layer.clusters->eps},
                              {"min_pts", layer.clusters->min_pts},
                              {"labels", layer.clusters->labels}};
        layers.push_back(jl);
    }
    doc["layers"] = layers;

    Json traj = Json::array();
    for (Eigen::Index i = 0; i < n; ++i) {
        Json path = Json::array();
        for (std::size_t l = 0; l < stack.size(); ++l) {
            Json step = Json::array({l, stack.layers[l].alpha});
            for (Eigen::Index k = 0; k < d; ++k) step.push_back(stack.layers[l].coords(i, k));
            path.push_back(step);
        }
        traj.push_back({{"point_id", stack.point_ids[static_cast<std::size_t>(i)]}, {"path", path}});
    }
    doc["trajectories"] = traj;
    return doc;
}

TreeDocument tree_from_json(const Json& doc) {
    try {
        if (doc.at("schema_version").get<int>() != kSchemaVersion)
            throw DataError("tree document: unsupported schema_version");
        TreeDocument out;
        auto& stack = out.stack;
        const auto& meta = doc.at("metadata");
        stack.meta.seed = meta.at("seed").get<std::uint64_t>();
        stack.meta.dataset_hash = meta.at("dataset_hash").get<std::string>();
        stack.meta.form = kernel_form_from_string(meta.at("kernel").get<std::string>());
        stack.meta.schedule = schedule_from_json(meta.at("schedule"));
        stack.meta.notes = meta.at("notes").get<std::vector<std::string>>();
        out.config = meta.at("config");
        const auto n = meta.at("n").get<Eigen::Index>();
        const auto d = meta.at("dim").get<Eigen::Index>();
        stack.point_ids = doc.at("point_ids").get<std::vector<std::int64_t>>();
        if (!doc.at("labels").is_null()) stack.labels = doc.at("labels").get<std::vector<std::string>>();
        if (static_cast<Eigen::Index>(stack.point_ids.size()) != n)
            throw DataError("tree document: point_ids length differs from n");

        for (const auto& jl : doc.at("layers")) {
            Layer<double> layer;
            layer.alpha = jl.at("alpha").get<double>();
            layer.perplexity = jl.at("perplexity").get<double>();
            layer.report = report_from_json(jl.at("report"));
            layer.coords.resize(n, d);
            if (jl.contains("clusters")) {
                ClusterLabels c;
                c.eps = jl["clusters"].at("eps").get<double>();
                c.min_pts = jl["clusters"].at("min_pts").get<int>();
                c.labels = jl["clusters"].at("labels").get<std::vector<int>>();
                layer.clusters = std::move(c);
            }
            stack.layers.push_back(std::move(layer));
        }
        const auto& traj = doc.at("trajectories");
        if (static_cast<Eigen::Index>(traj.size()) != n)
            throw DataError("tree document: one trajectory per point required");
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& path = traj[static_cast<std::size_t>(i)].at("path");
            if (path.size() != stack.size()) throw DataError("tree document: trajectory length differs from layer count");
            for (std::size_t l = 0; l < stack.size(); ++l) {
                const auto& step = path[l];
                if (static_cast<Eigen::Index>(step.size()) != d + 2)
                    throw DataError("tree document: trajectory step has wrong width");
                for (Eigen::Index k = 0; k < d; ++k)
                    stack.layers[l].coords(i, k) = step[static_cast<std::size_t>(k + 2)].get<double>();
            }
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("tree document: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("tree document: ") + e.what());
    }
}

std::string dump_json(const Json& doc) { return doc.dump(2) + "\n"; }

Json parse_json(const std::string& text) {
    try {
        return Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("invalid JSON: ") + e.what());
    }
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FileNotFound(path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + path);
    out << content;
    if (!out) throw DataError("write failed: " + path);
}

std::string csv_preamble(const Json& config) {
    return "# schema_version=" + std::to_string(kSchemaVersion) + " config=" + config.dump() + "\n";
}

std::string layer_csv(const Matrix<double>& coords, const std::vector<std::int64_t>& ids,
                      const std::optional<std::vector<std::string>>& labels, const Json& config) {
    std::ostringstream os;
    os << csv_preamble(config) << "point_id";
    if (labels) os << ",label";
    for (Eigen::Index k = 0; k < coords.cols(); ++k) os << ",y" << k + 1;
    os << "\n";
    for (Eigen::Index i = 0; i < coords.rows(); ++i) {
        os << ids[static_cast<std::size_t>(i)];
        if (labels) os << ',' << (*labels)[static_cast<std::size_t>(i)];
        for (Eigen::Index k = 0; k < coords.cols(); ++k) os << ',' << format_number(coords(i, k));
        os << "\n";
    }
    return os.str();
}

std::string layers_csv(const LayerStack<double>& stack, const Json& config) {
    std::ostringstream os;
    os << csv_preamble(config) << "layer,alpha,perplexity,point_id";
    if (stack.labels) os << ",label";
    for (Eigen::Index k = 0; k < stack.dim(); ++k) os << ",y" << k + 1;
    os << "\n";
    for (std::size_t l = 0; l < stack.size(); ++l) {
        const auto& layer = stack.layers[l];
        for (Eigen::Index i = 0; i < layer.coords.rows(); ++i) {
            os << l << ',' << format_number(layer.alpha) << ',' << format_number(layer.perplexity) << ','
               << stack.point_ids[static_cast<std::size_t>(i)];
            if (stack.labels) os << ',' << (*stack.labels)[static_cast<std::size_t>(i)];
            for (Eigen::Index k = 0; k < layer.coords.cols(); ++k) os << ',' << format_number(layer.coords(i, k));
            os << "\n";
        }
    }
    return os.str();
}

Json run_report_json(const LayerStack<double>& stack, const Json& config) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["config"] = config;
    j["seed"] = stack.meta.seed;
    j["dataset_hash"] = stack.meta.dataset_hash;
    j["notes"] = stack.meta.notes;
    Json layers = Json::array();
    bool all_converged = true;
    for (std::size_t l = 0; l < stack.size(); ++l) {
        const auto& layer = stack.layers[l];
        all_converged = all_converged && layer.report.converged;
        layers.push_back({{"layer", l},
                          {"alpha", layer.alpha},
                          {"perplexity", layer.perplexity},
                          {"report", optimizer_report_json(layer.report, true)}});
    }
    j["all_converged"] = all_converged;
    j["layers"] = layers;
    return j;
}

}  // namespace treesne
