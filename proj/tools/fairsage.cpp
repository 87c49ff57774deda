// Command line front end. Every artifact-producing subcommand claims a fresh
// run directory under --out (never overwriting an existing one), records its
// resolved configuration there as config.txt, and prints run_dir=<path> as
// the first stdout line so scripts can pick the artifacts up.
//
// Exit codes: 0 ok, 1 usage, 2 bad data, 3 numeric failure.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fairsage/checkpoint.hpp"
#include "fairsage/demography.hpp"
#include "fairsage/errors.hpp"
#include "fairsage/gradcheck.hpp"
#include "fairsage/graph.hpp"
#include "fairsage/kernels.hpp"
#include "fairsage/metrics.hpp"
#include "fairsage/model.hpp"
#include "fairsage/network_features.hpp"
#include "fairsage/node_table.hpp"
#include "fairsage/report.hpp"
#include "fairsage/rng.hpp"
#include "fairsage/sampling.hpp"
#include "fairsage/text.hpp"
#include "fairsage/train.hpp"

namespace fs = std::filesystem;
using namespace fairsage;

namespace {

std::string g17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string utc_stamp() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%dT%H%M%S", &tm);
    return buf;
}

// Claims <out_root>/run_<stamp><tag>/, falling back to _2, _3, ... when a
// directory from the same second already exists.
std::string make_run_dir(const std::string& out_root, const std::string& tag) {
    fs::create_directories(out_root);
    const std::string base = (fs::path(out_root) / ("run_" + utc_stamp() + tag)).string();
    for (int i = 1; i < 10000; ++i) {
        std::string candidate = i == 1 ? base : base + "_" + std::to_string(i);
        std::error_code ec;
        if (fs::create_directory(candidate, ec) && !ec) return candidate;
    }
    throw UsageError("could not claim a run directory under " + out_root);
}

struct ResolvedConfig {
    std::vector<std::pair<std::string, std::string>> items;

    void add(const std::string& key, const std::string& value) { items.emplace_back(key, value); }
    void add(const std::string& key, double value) { add(key, g17(value)); }
    void add(const std::string& key, std::uint64_t value) { add(key, std::to_string(value)); }
    void add(const std::string& key, int value) { add(key, std::to_string(value)); }

    void write(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw DataError("cannot write " + path);
        for (const auto& [k, v] : items) out << k << "=" << v << "\n";
    }
};

char parse_delimiter(const std::string& s) {
    if (s == "auto") return '\0';
    if (s == "tab") return '\t';
    if (s == "comma") return ',';
    throw UsageError("unknown delimiter '" + s + "' (auto, tab, comma)");
}

std::vector<std::size_t> parse_fanouts(const std::string& s) {
    std::vector<std::size_t> out;
    for (const std::string& part : text::split(s, ',')) {
        std::uint64_t v = 0;
        if (!text::parse_u64(text::trim(part), v) || v == 0)
            throw UsageError("bad fanout '" + part + "' in '" + s + "'");
        out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty()) throw UsageError("empty fanout list");
    return out;
}

std::string fanouts_str(const std::vector<std::size_t>& fanouts) {
    std::string s;
    for (std::size_t f : fanouts) {
        if (!s.empty()) s += ",";
        s += std::to_string(f);
    }
    return s;
}

// Accepts lr, mlp, sage, or sage-<aggregator>; the suffixed form also pins
// the aggregator.
void apply_model_name(const std::string& name, ModelConfig& cfg, bool aggregator_given) {
    if (name.rfind("sage-", 0) == 0) {
        cfg.kind = ModelKind::sage;
        cfg.aggregator = parse_aggregator(name.substr(5));
        if (aggregator_given) throw UsageError("pass either --model sage-<agg> or --aggregator, not both");
    } else {
        cfg.kind = parse_model_kind(name);
    }
}

void write_id_lines(const std::string& path, const DirectedGraph& g,
                    const std::vector<std::uint32_t>& nodes) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    for (std::uint32_t v : nodes) out << g.external_ids[v] << "\n";
}

// Two-column score file, external ids. Nodes missing from the file score 0.
std::vector<double> read_score_file(const std::string& path, const DirectedGraph& g) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + " is empty");
    char delim = text::sniff_delimiter(line);
    std::vector<std::string> header = text::split(line, delim);
    if (header.size() < 2 || text::trim(header[0]) != "node_id" || text::trim(header[1]) != "score")
        throw DataError(path + " needs a node_id<TAB>score header");
    std::vector<double> scores(g.node_count, 0.0);
    std::vector<bool> seen(g.node_count, false);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (text::trim(line).empty()) continue;
        std::vector<std::string> f = text::split(line, delim);
        std::uint64_t id = 0;
        double score = 0.0;
        if (f.size() < 2 || !text::parse_u64(text::trim(f[0]), id) || !text::parse_f64(text::trim(f[1]), score))
            throw DataError(path + ":" + std::to_string(lineno) + ": bad score row");
        if (!std::isfinite(score))
            throw DataError(path + ":" + std::to_string(lineno) + ": score is not finite");
        auto it = g.id_of.find(id);
        if (it == g.id_of.end())
            throw DataError(path + ":" + std::to_string(lineno) + ": node " + std::to_string(id) +
                            " not in graph");
        if (seen[it->second])
            throw DataError(path + ":" + std::to_string(lineno) + ": duplicate score for node " +
                            std::to_string(id));
        seen[it->second] = true;
        scores[it->second] = score;
    }
    return scores;
}

void write_score_file(const std::string& path, const DirectedGraph& g,
                      const std::vector<double>& scores) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "node_id\tscore\n";
    for (std::size_t v = 0; v < g.node_count; ++v)
        out << g.external_ids[v] << "\t" << g17(scores[v]) << "\n";
}

// Normalized node table: one row per graph node in internal order, so later
// stages reload it without any id reconciliation.
void write_node_table(const std::string& path, const DirectedGraph& g, const NodeTable& table) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "user_id\tlabel\tgroup";
    for (const std::string& name : table.feature_names) out << "\t" << name;
    out << "\n";
    for (std::size_t v = 0; v < g.node_count; ++v) {
        out << g.external_ids[v] << "\t";
        if (table.labels[v] == kLabelHateful)
            out << "1";
        else if (table.labels[v] == kLabelNormal)
            out << "0";
        out << "\t" << table.groups[v];
        for (std::size_t c = 0; c < table.features.cols(); ++c)
            out << "\t" << g17(table.features.at(v, c));
        out << "\n";
    }
}

NodeTable load_store_table(const std::string& store, const DirectedGraph& g) {
    const std::string path = (fs::path(store) / "nodes.tsv").string();
    if (!fs::exists(path))
        throw DataError(store + " has no node table; ingest the edge list with --nodes");
    NodeTableSchema schema;
    schema.label_column = "label";
    schema.group_column = "group";
    schema.delimiter = '\t';
    return load_node_table(path, schema, g);
}

// text_user passes the table features through; text_user_network appends
// in/out degree, eigenvector centrality, and the undirected one-hop mean of
// every table column.
Tensor assemble_features(const DirectedGraph& g, const NodeTable& table, FeatureSet set,
                         std::vector<std::string>* names_out) {
    std::vector<std::string> names = table.feature_names;
    Tensor features = table.features;
    if (set == FeatureSet::text_user_network) {
        NetworkFeatures nf = compute_network_features(g);
        Tensor net(g.node_count, 3);
        for (std::size_t v = 0; v < g.node_count; ++v) {
            net.at(v, 0) = nf.in_degree[v];
            net.at(v, 1) = nf.out_degree[v];
            net.at(v, 2) = nf.eigenvector[v];
        }
        features = hstack(features, net);
        names.insert(names.end(), {"in_degree", "out_degree", "eigenvector"});
        if (table.features.cols() > 0) {
            features = hstack(features, one_hop_means(g, table.features, Direction::both));
            for (const std::string& n : table.feature_names) names.push_back("nbr_mean_" + n);
        }
    }
    if (names_out) *names_out = names;
    return features;
}

void emit_report_files(const Report& r, const std::string& run_dir, const std::string& stem) {
    write_report((fs::path(run_dir) / (stem + ".kv")).string(), r, ReportFormat::keyvalue);
    write_report((fs::path(run_dir) / (stem + ".txt")).string(), r, ReportFormat::text);
}

void add_ratio(Report& r, const std::string& name, double value, bool defined) {
    if (defined)
        r.add(name, value);
    else
        r.add_undefined(name);
}

// ---------------------------------------------------------------- ingest --

struct IngestOpts {
    std::string edges, nodes, out;
    std::string id_column = "user_id", label_column, group_column;
    std::string feature_columns;  // comma separated, empty = every other column
    std::string delimiter = "auto";
};

int cmd_ingest(const IngestOpts& o) {
    EdgeLoadReport er;
    DirectedGraph g = load_edge_list(o.edges, parse_delimiter(o.delimiter), &er);
    DegreeStats ds = degree_stats(g);

    const std::string run_dir = make_run_dir(o.out, "");
    std::cout << "run_dir=" << run_dir << "\n";
    save_graph_store(run_dir, g);

    Report r;
    r.title = "ingest";
    r.add("raw_rows", static_cast<double>(er.raw_rows));
    r.add("self_loops", static_cast<double>(er.self_loops));
    r.add("duplicates", static_cast<double>(er.duplicates));
    r.add("nodes", static_cast<double>(er.node_count));
    r.add("edges", static_cast<double>(er.edge_count));
    r.add("isolated", static_cast<double>(ds.isolated));
    r.add("mean_in_degree", ds.mean_in);
    r.add("mean_out_degree", ds.mean_out);
    r.add("max_in_degree", static_cast<double>(ds.max_in));
    r.add("max_out_degree", static_cast<double>(ds.max_out));

    if (!o.nodes.empty()) {
        NodeTableSchema schema;
        schema.id_column = o.id_column;
        schema.label_column = o.label_column;
        schema.group_column = o.group_column;
        if (!o.feature_columns.empty())
            for (const std::string& c : text::split(o.feature_columns, ','))
                schema.feature_columns.push_back(std::string(text::trim(c)));
        schema.delimiter = parse_delimiter(o.delimiter);
        NodeTable table = load_node_table(o.nodes, schema, g);
        write_node_table((fs::path(run_dir) / "nodes.tsv").string(), g, table);
        r.add("covered_rows", static_cast<double>(table.covered_rows));
        r.add("feature_dim", static_cast<double>(table.features.cols()));
        r.add("labeled_hateful", static_cast<double>(table.count_label(kLabelHateful)));
        r.add("labeled_normal", static_cast<double>(table.count_label(kLabelNormal)));
        std::size_t tagged = 0;
        for (const std::string& grp : table.groups) tagged += !grp.empty();
        r.add("group_tagged", static_cast<double>(tagged));
    }

    ResolvedConfig cfg;
    cfg.add("edges", o.edges);
    cfg.add("nodes", o.nodes);
    cfg.add("id_column", o.id_column);
    cfg.add("label_column", o.label_column);
    cfg.add("group_column", o.group_column);
    cfg.add("feature_columns", o.feature_columns);
    cfg.add("delimiter", o.delimiter);
    cfg.add("out", o.out);
    cfg.write((fs::path(run_dir) / "config.txt").string());

    emit_report_files(r, run_dir, "report");
    std::cout << emit_report(r, ReportFormat::text);
    return 0;
}

// ---------------------------------------------------------------- sample --

struct DurwOpts {
    std::string store, out;
    std::uint64_t start = 0;
    double jump = 0.0;
    std::size_t budget = 0;
    std::uint64_t seed = 1;
};

int cmd_durw(const DurwOpts& o) {
    DirectedGraph g = load_graph_store(o.store);
    auto it = g.id_of.find(o.start);
    if (it == g.id_of.end())
        throw DataError("start node " + std::to_string(o.start) + " not in graph");

    RngStream rng(o.seed, 0);
    DurwResult result = durw_sample(g, it->second, o.jump, o.budget, rng);

    const std::string run_dir = make_run_dir(o.out, "_seed" + std::to_string(o.seed));
    std::cout << "run_dir=" << run_dir << "\n";
    write_id_lines((fs::path(run_dir) / "nodes.txt").string(), g, result.nodes);

    Report r;
    r.title = "durw";
    r.add("nodes", static_cast<double>(result.nodes.size()));
    r.add("steps", static_cast<double>(result.steps));
    r.add("complete", result.complete ? 1.0 : 0.0);
    r.add("budget", static_cast<double>(o.budget));
    r.add("jump_weight", o.jump);

    ResolvedConfig cfg;
    cfg.add("store", o.store);
    cfg.add("start", o.start);
    cfg.add("jump", o.jump);
    cfg.add("budget", o.budget);
    cfg.add("seed", o.seed);
    cfg.add("out", o.out);
    cfg.write((fs::path(run_dir) / "config.txt").string());

    emit_report_files(r, run_dir, "report");
    std::cout << emit_report(r, ReportFormat::text);
    return 0;
}

struct DiffusionOpts {
    std::string store, scores, out;
    double alpha = 0.85;
    std::size_t iters = 20;
    std::size_t strata = 4;
    std::size_t per_stratum = 0;
    std::uint64_t seed = 1;
};

int cmd_diffusion(const DiffusionOpts& o) {
    DirectedGraph g = load_graph_store(o.store);
    std::vector<double> seed_scores = read_score_file(o.scores, g);
    std::size_t seeded = 0;
    for (double s : seed_scores) seeded += s != 0.0;

    std::vector<double> scores = diffusion_scores(g, seed_scores, o.alpha, o.iters);

    const std::string run_dir = make_run_dir(o.out, "_seed" + std::to_string(o.seed));
    std::cout << "run_dir=" << run_dir << "\n";
    write_score_file((fs::path(run_dir) / "diffusion_scores.tsv").string(), g, scores);

    std::size_t picked = 0;
    if (o.per_stratum > 0) {
        RngStream rng(o.seed, 0);
        std::vector<std::uint32_t> candidates = select_candidates(scores, o.strata, o.per_stratum, rng);
        write_id_lines((fs::path(run_dir) / "candidates.txt").string(), g, candidates);
        picked = candidates.size();
    }

    Report r;
    r.title = "diffusion";
    r.add("nodes", static_cast<double>(g.node_count));
    r.add("seeded", static_cast<double>(seeded));
    r.add("alpha", o.alpha);
    r.add("iterations", static_cast<double>(o.iters));
    r.add("candidates", static_cast<double>(picked));

    ResolvedConfig cfg;
    cfg.add("store", o.store);
    cfg.add("scores", o.scores);
    cfg.add("alpha", o.alpha);
    cfg.add("iters", o.iters);
    cfg.add("strata", o.strata);
    cfg.add("per_stratum", o.per_stratum);
    cfg.add("seed", o.seed);
    cfg.add("out", o.out);
    cfg.write((fs::path(run_dir) / "config.txt").string());

    emit_report_files(r, run_dir, "report");
    std::cout << emit_report(r, ReportFormat::text);
    return 0;
}

// ----------------------------------------------------------------- train --

struct TrainOpts {
    std::string config;
    std::string store, out;
    std::string model = "sage";
    std::string aggregator = "mean";
    bool aggregator_given = false;
    std::string feature_set = "text_user";
    std::string direction = "both";
    std::string fanouts = "25,10";
    std::size_t hidden = 128;
    double dropout = 0.5;
    double lr = 1e-3;
    std::size_t epochs = 30;
    std::size_t batch = 512;
    std::size_t folds = 5;
    std::uint64_t seed = 1;
    double threshold = 0.5;
};

// Fills every option the command line left at its default from a key=value
// file; flags given on the command line always win. The config.txt a train
// run writes loads back unchanged.
void apply_train_config(TrainOpts& o, const CLI::App& cmd) {
    std::ifstream in(o.config);
    if (!in) throw DataError("cannot open " + o.config);
    auto fresh = [&](const char* flag) { return cmd.count(flag) == 0; };
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view sv = text::trim(line);
        if (sv.empty() || sv.front() == '#') continue;
        auto eq = sv.find('=');
        if (eq == std::string_view::npos)
            throw DataError(o.config + ":" + std::to_string(lineno) + ": expected key=value");
        const std::string key(text::trim(sv.substr(0, eq)));
        const std::string value(text::trim(sv.substr(eq + 1)));
        auto u64 = [&] {
            std::uint64_t v = 0;
            if (!text::parse_u64(value, v))
                throw DataError(o.config + ":" + std::to_string(lineno) + ": bad integer '" +
                                value + "'");
            return v;
        };
        auto f64 = [&] {
            double v = 0;
            if (!text::parse_f64(value, v))
                throw DataError(o.config + ":" + std::to_string(lineno) + ": bad number '" + value +
                                "'");
            return v;
        };
        if (key == "store") {
            if (fresh("--store")) o.store = value;
        } else if (key == "out") {
            if (fresh("--out")) o.out = value;
        } else if (key == "model") {
            if (fresh("--model")) o.model = value;
        } else if (key == "aggregator") {
            if (fresh("--aggregator")) {
                o.aggregator = value;
                o.aggregator_given = true;
            }
        } else if (key == "feature_set") {
            if (fresh("--feature_set")) o.feature_set = value;
        } else if (key == "direction") {
            if (fresh("--direction")) o.direction = value;
        } else if (key == "fanouts") {
            if (fresh("--fanouts")) o.fanouts = value;
        } else if (key == "hidden") {
            if (fresh("--hidden")) o.hidden = u64();
        } else if (key == "dropout") {
            if (fresh("--dropout")) o.dropout = f64();
        } else if (key == "lr") {
            if (fresh("--lr")) o.lr = f64();
        } else if (key == "epochs") {
            if (fresh("--epochs")) o.epochs = u64();
        } else if (key == "batch") {
            if (fresh("--batch")) o.batch = u64();
        } else if (key == "folds") {
            if (fresh("--folds")) o.folds = u64();
        } else if (key == "seed") {
            if (fresh("--seed")) o.seed = u64();
        } else if (key == "threshold") {
            if (fresh("--threshold")) o.threshold = f64();
        } else {
            throw DataError(o.config + ":" + std::to_string(lineno) + ": unknown config key '" +
                            key + "'");
        }
    }
}

int cmd_train(TrainOpts o, const CLI::App& cmd) {
    if (!o.config.empty()) {
        apply_train_config(o, cmd);
        // A command line --model sage-<agg> outranks an aggregator that only
        // the config file named.
        if (cmd.count("--model") > 0 && o.model.rfind("sage-", 0) == 0 &&
            cmd.count("--aggregator") == 0)
            o.aggregator_given = false;
    }
    if (o.store.empty()) throw UsageError("train needs --store (flag or config file)");
    if (o.out.empty()) throw UsageError("train needs --out (flag or config file)");

    DirectedGraph g = load_graph_store(o.store);
    NodeTable table = load_store_table(o.store, g);

    ModelConfig cfg;
    apply_model_name(o.model, cfg, o.aggregator_given);
    if (o.aggregator_given) cfg.aggregator = parse_aggregator(o.aggregator);
    cfg.feature_set = parse_feature_set(o.feature_set);
    cfg.direction = parse_direction(o.direction);
    cfg.hidden_dim = o.hidden;
    cfg.dropout_rate = o.dropout;
    if (cfg.kind == ModelKind::sage) {
        cfg.fanouts = parse_fanouts(o.fanouts);
        cfg.layers = cfg.fanouts.size();
    } else {
        cfg.fanouts.clear();
        cfg.layers = cfg.kind == ModelKind::lr ? 0 : 2;
    }

    std::vector<std::string> feature_names;
    Tensor features = assemble_features(g, table, cfg.feature_set, &feature_names);
    cfg.feature_dim = features.cols();
    validate(cfg);

    std::vector<std::uint32_t> labeled = table.labeled_nodes();
    std::vector<std::int8_t> fold_labels(labeled.size());
    for (std::size_t i = 0; i < labeled.size(); ++i) fold_labels[i] = table.labels[labeled[i]];

    FoldPlan plan = stratified_kfold(labeled, fold_labels, o.folds, o.seed);
    TrainHyper hyper;
    hyper.adam.lr = o.lr;
    hyper.epochs = o.epochs;
    hyper.batch = o.batch;

    RngStream rng(o.seed, 0);
    TrainResult result = train(cfg, hyper, g, features, table.labels, plan, rng);

    const std::string run_dir = make_run_dir(o.out, "_seed" + std::to_string(o.seed));
    std::cout << "run_dir=" << run_dir << "\n";

    std::vector<PredictionRow> pooled;
    Report r;
    r.title = "training";
    for (std::size_t k = 0; k < result.runs.size(); ++k) {
        const TrainRun& run = result.runs[k];
        const FoldPredictions& fp = result.predictions[k];
        const std::string fold_dir = (fs::path(run_dir) / ("fold" + std::to_string(k))).string();
        save_checkpoint(fold_dir, cfg, run.params);
        save_standardization((fs::path(fold_dir) / "standardization.tsv").string(),
                             run.standardization, feature_names);
        std::ofstream loss((fs::path(fold_dir) / "loss.tsv").string());
        loss << "epoch\tloss\n";
        for (std::size_t e = 0; e < run.epoch_loss.size(); ++e)
            loss << e << "\t" << g17(run.epoch_loss[e]) << "\n";

        double fold_auc = auc(fp.scores, fp.labels);
        std::cout << "fold=" << k << " auc=" << g17(fold_auc) << " pos_weight=" << g17(run.pos_weight)
                  << "\n";
        r.add("fold" + std::to_string(k) + "_auc", fold_auc);

        for (std::size_t i = 0; i < fp.nodes.size(); ++i) {
            PredictionRow row;
            row.node_id = g.external_ids[fp.nodes[i]];
            row.label = fp.labels[i];
            row.group = table.groups[fp.nodes[i]];
            row.score = fp.scores[i];
            pooled.push_back(std::move(row));
        }
    }
    std::sort(pooled.begin(), pooled.end(),
              [](const PredictionRow& a, const PredictionRow& b) { return a.node_id < b.node_id; });
    write_predictions((fs::path(run_dir) / "predictions.tsv").string(), pooled);

    std::vector<double> scores(pooled.size());
    std::vector<std::int8_t> labels(pooled.size());
    for (std::size_t i = 0; i < pooled.size(); ++i) {
        scores[i] = pooled[i].score;
        labels[i] = pooled[i].label;
    }
    ConfusionMatrix cm = confusion(scores, labels, o.threshold);
    Prf p = prf(cm);
    r.add("n", static_cast<double>(pooled.size()));
    r.add("positives", static_cast<double>(cm.tp + cm.fn));
    r.add("negatives", static_cast<double>(cm.fp + cm.tn));
    r.add("threshold", o.threshold);
    r.add("accuracy", p.accuracy);
    add_ratio(r, "precision", p.precision, p.precision_defined);
    add_ratio(r, "recall", p.recall, p.recall_defined);
    add_ratio(r, "f1", p.f1, p.f1_defined);
    r.add("auc", auc(scores, labels));

    ResolvedConfig rc;
    rc.add("store", o.store);
    rc.add("model", std::string(model_kind_name(cfg.kind)));
    rc.add("aggregator", std::string(aggregator_name(cfg.aggregator)));
    rc.add("feature_set", std::string(feature_set_name(cfg.feature_set)));
    rc.add("direction", std::string(direction_name(cfg.direction)));
    rc.add("fanouts", fanouts_str(cfg.fanouts));
    rc.add("hidden", cfg.hidden_dim);
    rc.add("dropout", cfg.dropout_rate);
    rc.add("lr", o.lr);
    rc.add("epochs", o.epochs);
    rc.add("batch", o.batch);
    rc.add("folds", o.folds);
    rc.add("seed", o.seed);
    rc.add("threshold", o.threshold);
    rc.add("out", o.out);
    rc.write((fs::path(run_dir) / "config.txt").string());

    emit_report_files(r, run_dir, "metrics");
    std::cout << emit_report(r, ReportFormat::text);
    return 0;
}

// -------------------------------------------------------------- evaluate --

struct EvaluateOpts {
    std::string pred, out;
    double threshold = 0.5;
};

Report evaluation_report(const std::vector<PredictionRow>& rows, double threshold) {
    std::vector<double> scores(rows.size());
    std::vector<std::int8_t> labels(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        scores[i] = rows[i].score;
        labels[i] = rows[i].label;
    }
    ConfusionMatrix cm = confusion(scores, labels, threshold);
    Prf p = prf(cm);
    Report r;
    r.title = "evaluation";
    r.add("n", static_cast<double>(rows.size()));
    r.add("positives", static_cast<double>(cm.tp + cm.fn));
    r.add("negatives", static_cast<double>(cm.fp + cm.tn));
    r.add("threshold", threshold);
    r.add("tp", static_cast<double>(cm.tp));
    r.add("fp", static_cast<double>(cm.fp));
    r.add("fn", static_cast<double>(cm.fn));
    r.add("tn", static_cast<double>(cm.tn));
    r.add("accuracy", p.accuracy);
    add_ratio(r, "precision", p.precision, p.precision_defined);
    add_ratio(r, "recall", p.recall, p.recall_defined);
    add_ratio(r, "f1", p.f1, p.f1_defined);
    if (cm.tp + cm.fn > 0 && cm.fp + cm.tn > 0)
        r.add("auc", auc(scores, labels));
    else
        r.add_undefined("auc");
    return r;
}

int cmd_evaluate(const EvaluateOpts& o) {
    std::vector<PredictionRow> rows = read_predictions(o.pred);
    if (rows.empty()) throw DataError("no prediction rows in " + o.pred);
    Report r = evaluation_report(rows, o.threshold);

    if (!o.out.empty()) {
        const std::string run_dir = make_run_dir(o.out, "");
        std::cout << "run_dir=" << run_dir << "\n";
        ResolvedConfig cfg;
        cfg.add("pred", o.pred);
        cfg.add("threshold", o.threshold);
        cfg.add("out", o.out);
        cfg.write((fs::path(run_dir) / "config.txt").string());
        emit_report_files(r, run_dir, "evaluation");
    }
    std::cout << emit_report(r, ReportFormat::text);
    return 0;
}

// -------------------------------------------------------------- fairness --

struct FairnessOpts {
    std::string pred, groups, protected_group, out;
    double threshold = 0.5;
};

int cmd_fairness(const FairnessOpts& o) {
    std::vector<PredictionRow> rows = read_predictions(o.pred);
    if (rows.empty()) throw DataError("no prediction rows in " + o.pred);

    std::vector<double> scores(rows.size());
    std::vector<std::int8_t> labels(rows.size());
    std::vector<std::string> groups(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        scores[i] = rows[i].score;
        labels[i] = rows[i].label;
        groups[i] = rows[i].group;
    }
    if (!o.groups.empty()) {
        std::map<std::uint64_t, std::string> by_id;
        for (const auto& [id, grp] : read_group_file(o.groups)) by_id[id] = grp;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            auto it = by_id.find(rows[i].node_id);
            groups[i] = it == by_id.end() ? "" : it->second;
        }
    }

    FairnessReport fr = fairness_report(scores, labels, groups, o.protected_group, o.threshold);

    Report r;
    r.title = "fairness";
    r.add("n", static_cast<double>(rows.size()));
    r.add("threshold", o.threshold);
    r.add("protected_count", static_cast<double>(fr.protected_group.cm.total()));
    r.add("protected_fp", static_cast<double>(fr.protected_group.cm.fp));
    r.add("protected_negatives",
          static_cast<double>(fr.protected_group.cm.fp + fr.protected_group.cm.tn));
    add_ratio(r, "fpr_protected_pct", fr.protected_group.fpr * 100.0, fr.protected_group.fpr_defined);
    r.add("rest_count", static_cast<double>(fr.rest.cm.total()));
    r.add("rest_fp", static_cast<double>(fr.rest.cm.fp));
    r.add("rest_negatives", static_cast<double>(fr.rest.cm.fp + fr.rest.cm.tn));
    add_ratio(r, "fpr_rest_pct", fr.rest.fpr * 100.0, fr.rest.fpr_defined);
    add_ratio(r, "fpr_gap_pp", fr.fpr_gap * 100.0, fr.gap_defined);
    r.add("overall_accuracy", fr.overall_prf.accuracy);
    add_ratio(r, "overall_f1", fr.overall_prf.f1, fr.overall_prf.f1_defined);

    if (!o.out.empty()) {
        const std::string run_dir = make_run_dir(o.out, "");
        std::cout << "run_dir=" << run_dir << "\n";
        ResolvedConfig cfg;
        cfg.add("pred", o.pred);
        cfg.add("groups", o.groups);
        cfg.add("protected", o.protected_group);
        cfg.add("threshold", o.threshold);
        cfg.add("out", o.out);
        cfg.write((fs::path(run_dir) / "config.txt").string());
        emit_report_files(r, run_dir, "fairness");
    }
    std::cout << emit_report(r, ReportFormat::text);
    return 0;
}

// ------------------------------------------------------------ demography --

struct DemographyOpts {
    std::string posteriors, overrides, out;
    std::string category = "black";
    std::string group_name;
    double threshold = 0.8;
};

int cmd_demography(const DemographyOpts& o) {
    std::size_t category = kDialectColumns.size();
    for (std::size_t i = 0; i < kDialectColumns.size(); ++i)
        if ("p_" + o.category == kDialectColumns[i]) category = i;
    if (category == kDialectColumns.size())
        throw UsageError("unknown category '" + o.category + "' (white, black, hispanic, asian)");

    std::vector<PosteriorRow> rows = load_posteriors(o.posteriors);
    std::vector<UserPosterior> users = average_posteriors(rows);
    Overrides overrides;
    if (!o.overrides.empty()) overrides = load_overrides(o.overrides);

    GroupAssignment ga = label_group(users, category, o.threshold, overrides);

    const std::string run_dir = make_run_dir(o.out, "");
    std::cout << "run_dir=" << run_dir << "\n";
    const std::string group_name = o.group_name.empty() ? o.category : o.group_name;
    write_group_file((fs::path(run_dir) / "groups.tsv").string(), ga, group_name);

    std::size_t from_model = 0, added = 0, removed = 0;
    for (const auto& e : ga.entries) {
        if (e.provenance == Provenance::override_added) ++added;
        if (e.provenance == Provenance::override_removed) ++removed;
        if (e.provenance == Provenance::model && e.is_protected) ++from_model;
    }

    Report r;
    r.title = "demography";
    r.add("messages", static_cast<double>(rows.size()));
    r.add("users", static_cast<double>(users.size()));
    r.add("threshold", o.threshold);
    r.add("protected", static_cast<double>(ga.protected_count()));
    r.add("from_model", static_cast<double>(from_model));
    r.add("override_added", static_cast<double>(added));
    r.add("override_removed", static_cast<double>(removed));

    ResolvedConfig cfg;
    cfg.add("posteriors", o.posteriors);
    cfg.add("overrides", o.overrides);
    cfg.add("category", o.category);
    cfg.add("threshold", o.threshold);
    cfg.add("group_name", group_name);
    cfg.add("out", o.out);
    cfg.write((fs::path(run_dir) / "config.txt").string());

    emit_report_files(r, run_dir, "report");
    std::cout << emit_report(r, ReportFormat::text);
    return 0;
}

// ------------------------------------------------------------- gradcheck --

struct GradcheckOpts {
    std::string model = "sage-mean";
    std::uint64_t seed = 7;
    std::size_t points = 10;
    std::size_t hidden = 8;
    std::size_t dim = 5;
    double tol = 1e-4;
};

int cmd_gradcheck(const GradcheckOpts& o) {
    ModelConfig cfg;
    apply_model_name(o.model, cfg, false);
    cfg.feature_dim = o.dim;
    cfg.hidden_dim = o.hidden;
    cfg.dropout_rate = 0.0;
    if (cfg.kind == ModelKind::sage) {
        cfg.fanouts = {4, 3};
        cfg.layers = 2;
    } else {
        cfg.fanouts.clear();
        cfg.layers = cfg.kind == ModelKind::lr ? 0 : 2;
    }
    validate(cfg);

    double err = model_grad_max_rel_error(cfg, o.seed, o.points);
    std::cout << "model=" << o.model << " points=" << o.points << " tol=" << g17(o.tol) << "\n";
    std::cout << "max_rel_error=" << g17(err) << "\n";
    if (!(err < o.tol)) {
        std::cerr << "gradient check failed: " << g17(err) << " >= " << g17(o.tol) << "\n";
        return 3;
    }
    std::cout << "gradients agree with central differences\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hateful user detection over a retweet graph"};
    app.require_subcommand(1);
    int threads = 1;
    app.add_option("--threads", threads, "worker threads for the dense kernels")
        ->capture_default_str();

    // Subcommand callbacks fire inside parse, so the thread count is applied
    // here rather than after parse returns.
    int rc = 0;
    auto run = [&](auto&& fn) {
        fairsage::kernels::set_thread_count(threads);
        rc = fn();
    };

    IngestOpts ingest;
    CLI::App* ingest_cmd = app.add_subcommand("ingest", "build a graph store from an edge list");
    ingest_cmd->add_option("--edges", ingest.edges, "edge list file (source, target per row)")
        ->required();
    ingest_cmd->add_option("--nodes", ingest.nodes, "node attribute table");
    ingest_cmd->add_option("--id-column", ingest.id_column, "node table id column")
        ->capture_default_str();
    ingest_cmd->add_option("--label-column", ingest.label_column, "node table label column");
    ingest_cmd->add_option("--group-column", ingest.group_column, "node table group column");
    ingest_cmd->add_option("--feature-columns", ingest.feature_columns,
                           "comma separated feature columns (default: every other column)");
    ingest_cmd->add_option("--delimiter", ingest.delimiter, "auto, tab, or comma")
        ->capture_default_str();
    ingest_cmd->add_option("--out", ingest.out, "output root for the run directory")->required();
    ingest_cmd->callback([&] { run([&] { return cmd_ingest(ingest); }); });

    CLI::App* sample_cmd = app.add_subcommand("sample", "graph sampling");
    sample_cmd->require_subcommand(1);

    DurwOpts durw;
    CLI::App* durw_cmd =
        sample_cmd->add_subcommand("durw", "directed unbiased random walk with jumps");
    durw_cmd->add_option("--store", durw.store, "graph store directory")->required();
    durw_cmd->add_option("--start", durw.start, "start node id (external)")->required();
    durw_cmd->add_option("--jump", durw.jump, "random jump weight w")->capture_default_str();
    durw_cmd->add_option("--budget", durw.budget, "distinct nodes to collect")->required();
    durw_cmd->add_option("--seed", durw.seed, "rng seed")->capture_default_str();
    durw_cmd->add_option("--out", durw.out, "output root for the run directory")->required();
    durw_cmd->callback([&] { run([&] { return cmd_durw(durw); }); });

    DiffusionOpts diffusion;
    CLI::App* diff_cmd =
        sample_cmd->add_subcommand("diffusion", "seed score diffusion and stratified selection");
    diff_cmd->add_option("--store", diffusion.store, "graph store directory")->required();
    diff_cmd->add_option("--scores", diffusion.scores, "seed score file (node_id, score)")
        ->required();
    diff_cmd->add_option("--alpha", diffusion.alpha, "neighbor mixing weight")->capture_default_str();
    diff_cmd->add_option("--iters", diffusion.iters, "diffusion iterations")->capture_default_str();
    diff_cmd->add_option("--strata", diffusion.strata, "quantile strata for selection")
        ->capture_default_str();
    diff_cmd->add_option("--per-stratum", diffusion.per_stratum,
                         "candidates per stratum (0 skips selection)")
        ->capture_default_str();
    diff_cmd->add_option("--seed", diffusion.seed, "rng seed")->capture_default_str();
    diff_cmd->add_option("--out", diffusion.out, "output root for the run directory")->required();
    diff_cmd->callback([&] { run([&] { return cmd_diffusion(diffusion); }); });

    TrainOpts train;
    CLI::App* train_cmd = app.add_subcommand("train", "cross-validated training");
    train_cmd->add_option("--config", train.config,
                          "key=value file supplying any flag not given here");
    train_cmd->add_option("--store", train.store, "graph store directory");
    train_cmd->add_option("--model", train.model, "lr, mlp, sage, or sage-<aggregator>")
        ->capture_default_str();
    CLI::Option* agg_opt =
        train_cmd->add_option("--aggregator", train.aggregator, "mean, maxpool, or attention")
            ->capture_default_str();
    train_cmd->add_option("--feature_set", train.feature_set, "text_user or text_user_network")
        ->capture_default_str();
    train_cmd->add_option("--direction", train.direction, "out, in, or both")->capture_default_str();
    train_cmd->add_option("--fanouts", train.fanouts, "neighbors per hop, comma separated")
        ->capture_default_str();
    train_cmd->add_option("--hidden", train.hidden, "hidden width")->capture_default_str();
    train_cmd->add_option("--dropout", train.dropout, "dropout rate")->capture_default_str();
    train_cmd->add_option("--lr", train.lr, "adam learning rate")->capture_default_str();
    train_cmd->add_option("--epochs", train.epochs, "training epochs")->capture_default_str();
    train_cmd->add_option("--batch", train.batch, "minibatch size")->capture_default_str();
    train_cmd->add_option("--folds", train.folds, "stratified folds")->capture_default_str();
    train_cmd->add_option("--seed", train.seed, "rng seed")->capture_default_str();
    train_cmd->add_option("--threshold", train.threshold, "decision threshold for the report")
        ->capture_default_str();
    train_cmd->add_option("--out", train.out, "output root for the run directory");
    train_cmd->callback([&] {
        train.aggregator_given = agg_opt->count() > 0;
        run([&] { return cmd_train(train, *train_cmd); });
    });

    EvaluateOpts evaluate;
    CLI::App* eval_cmd = app.add_subcommand("evaluate", "score a prediction file");
    eval_cmd->add_option("--pred", evaluate.pred, "prediction file")->required();
    eval_cmd->add_option("--threshold", evaluate.threshold, "decision threshold")
        ->capture_default_str();
    eval_cmd->add_option("--out", evaluate.out, "optional output root for the run directory");
    eval_cmd->callback([&] { run([&] { return cmd_evaluate(evaluate); }); });

    FairnessOpts fairness;
    CLI::App* fair_cmd =
        app.add_subcommand("fairness", "false positive rate parity for a protected group");
    fair_cmd->add_option("--pred", fairness.pred, "prediction file")->required();
    fair_cmd->add_option("--groups", fairness.groups,
                         "group assignment file overriding the prediction groups");
    fair_cmd->add_option("--protected", fairness.protected_group, "protected group name")
        ->required();
    fair_cmd->add_option("--threshold", fairness.threshold, "decision threshold")
        ->capture_default_str();
    fair_cmd->add_option("--out", fairness.out, "optional output root for the run directory");
    fair_cmd->callback([&] { run([&] { return cmd_fairness(fairness); }); });

    DemographyOpts demography;
    CLI::App* demo_cmd =
        app.add_subcommand("demography", "posterior averaging and protected group assignment");
    demo_cmd->add_option("--posteriors", demography.posteriors, "per message posterior file")
        ->required();
    demo_cmd->add_option("--overrides", demography.overrides, "manual removal/addition file");
    demo_cmd->add_option("--category", demography.category, "white, black, hispanic, or asian")
        ->capture_default_str();
    demo_cmd->add_option("--threshold", demography.threshold, "mean posterior cutoff (strict)")
        ->capture_default_str();
    demo_cmd->add_option("--group-name", demography.group_name,
                         "group tag to write (default: the category)");
    demo_cmd->add_option("--out", demography.out, "output root for the run directory")->required();
    demo_cmd->callback([&] { run([&] { return cmd_demography(demography); }); });

    GradcheckOpts gradcheck;
    CLI::App* grad_cmd =
        app.add_subcommand("gradcheck", "compare model gradients against central differences");
    grad_cmd->add_option("--model", gradcheck.model, "lr, mlp, or sage-<aggregator>")
        ->capture_default_str();
    grad_cmd->add_option("--seed", gradcheck.seed, "rng seed")->capture_default_str();
    grad_cmd->add_option("--points", gradcheck.points, "random evaluation points")
        ->capture_default_str();
    grad_cmd->add_option("--hidden", gradcheck.hidden, "hidden width")->capture_default_str();
    grad_cmd->add_option("--dim", gradcheck.dim, "feature dimension")->capture_default_str();
    grad_cmd->add_option("--tol", gradcheck.tol, "maximum relative error")->capture_default_str();
    grad_cmd->callback([&] { run([&] { return cmd_gradcheck(gradcheck); }); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return rc;
}
