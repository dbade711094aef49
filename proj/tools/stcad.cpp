// stcad: command-line front end for ingesting graphs, training, evaluating,
// ranking candidate edges and exporting edge embeddings.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stcad/checkpoint.hpp"
#include "stcad/config.hpp"
#include "stcad/features.hpp"
#include "stcad/graph.hpp"
#include "stcad/metrics.hpp"
#include "stcad/model.hpp"
#include "stcad/sampler.hpp"
#include "stcad/synthetic.hpp"
#include "stcad/training.hpp"

namespace fs = std::filesystem;
using namespace stcad;

namespace {

// Keys that describe where things live rather than how the model was built;
// never taken from a checkpoint.
const std::set<std::string> kPathKeys = {"graph",      "out",          "checkpoint",
                                         "candidates", "dump_samples", "dump_features"};

std::string flag_name(const std::string& key) {
    if (key.size() == 1) return "-" + key;
    std::string f = "--" + key;
    std::replace(f.begin(), f.end(), '_', '-');
    return f;
}

struct Options {
    std::string config_file;
    std::vector<std::string> sets;
    std::vector<std::string> ablations;
    std::string graph_positional;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> flags;
    CLI::Option* train_ratio = nullptr;
    std::string train_ratio_value;
};

void add_run_options(CLI::App* cmd, Options& o) {
    cmd->add_option("graph-file", o.graph_positional, "Graph file (STCG or text edge list)");
    cmd->add_option("--config", o.config_file, "Config file of 'key = value' lines");
    cmd->add_option("--set", o.sets, "Override one key: --set key=value");
    cmd->add_option("--ablate", o.ablations, "Ablation variant")
        ->check(CLI::IsMember(ablation_names()));
    o.train_ratio = cmd->add_option("--train-ratio", o.train_ratio_value,
                                    "Alias for --split-fraction");
    for (const auto& key : RunConfig::keys()) {
        o.flags[key] = cmd->add_option(flag_name(key), o.values[key], "config key '" + key + "'");
    }
}

struct Resolved {
    RunConfig config;
    std::set<std::string> explicit_keys;
};

void set_key(Resolved& r, const std::string& key, const std::string& value) {
    r.config.set(key, value);
    r.explicit_keys.insert(key);
}

Resolved resolve(const Options& o, const Checkpoint* ckpt = nullptr) {
    Resolved r;
    if (ckpt) {
        std::string text;
        for (const auto& c : ckpt->comments) text += c + '\n';
        std::istringstream in(text);
        for (const auto& e : read_config_entries(in)) {
            if (!kPathKeys.contains(e.key)) set_key(r, e.key, e.value);
        }
    }
    if (!o.config_file.empty()) {
        for (const auto& e : read_config_file(o.config_file)) set_key(r, e.key, e.value);
    }
    for (const auto& s : o.sets) {
        auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
        auto trim = [](std::string x) {
            x.erase(0, x.find_first_not_of(" \t"));
            x.erase(x.find_last_not_of(" \t") + 1);
            return x;
        };
        set_key(r, trim(s.substr(0, eq)), trim(s.substr(eq + 1)));
    }
    for (const auto& key : RunConfig::keys()) {
        if (o.flags.at(key)->count() > 0) set_key(r, key, o.values.at(key));
    }
    if (o.train_ratio->count() > 0) set_key(r, "split_fraction", o.train_ratio_value);
    if (!o.graph_positional.empty()) set_key(r, "graph", o.graph_positional);
    for (const auto& a : o.ablations) apply_ablation(r.config, a);
    return r;
}

struct LoadedGraph {
    DynamicGraph graph;
    SnapshotSeries series;
};

LoadedGraph load_series(Resolved& r) {
    if (r.config.graph.empty()) throw ConfigError("no graph given (positional argument or --graph)");
    StoredGraph stored = load_any_graph(r.config.graph);
    if (stored.snapshot_size != 0 && !r.explicit_keys.contains("snapshot_size")) {
        r.config.snapshot_size = stored.snapshot_size;
    }
    r.config.validate();
    LoadedGraph g{std::move(stored.graph), {}};
    g.series = SnapshotSeries(g.graph, r.config.snapshot_size);
    std::cerr << "graph: " << g.graph.node_count() << " nodes, " << g.graph.edge_count()
              << " edges, " << g.series.size() << " snapshots of " << r.config.snapshot_size
              << "\n";
    if (g.graph.self_loops_dropped() > 0) {
        std::cerr << "warning: dropped " << g.graph.self_loops_dropped() << " self-loop(s)\n";
    }
    return g;
}

std::vector<std::string> comment_lines(const RunConfig& c) {
    std::vector<std::string> out;
    for (const auto& line : c.echo()) out.push_back(" " + line);
    return out;
}

void write_echo(std::ostream& out, const RunConfig& c) {
    for (const auto& line : c.echo()) out << "# " << line << '\n';
}

std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    return out;
}

void write_json(const fs::path& path, const nlohmann::ordered_json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

nlohmann::ordered_json config_json(const RunConfig& c) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [k, v] : c.entries()) j[k] = v;
    return j;
}

ModelParams load_model(const Checkpoint& ckpt, const RunConfig& c) {
    ModelParams params(c.model, 0);
    restore_parameters(ckpt, params.list());
    return params;
}

const Checkpoint& require_checkpoint(const Options& o, Checkpoint& storage) {
    auto* flag = o.flags.at("checkpoint");
    if (flag->count() == 0 || o.values.at("checkpoint").empty()) {
        throw std::runtime_error("missing checkpoint (--checkpoint FILE)");
    }
    storage = load_checkpoint(o.values.at("checkpoint"));
    return storage;
}

// ---------------------------------------------------------------------------

int cmd_ingest(const std::string& input, const std::string& output, std::size_t snapshot_size) {
    if (snapshot_size == 0) throw GraphError("snapshot size must be positive");
    DynamicGraph g = load_edge_file(input);
    if (g.self_loops_dropped() > 0) {
        std::cerr << "warning: dropped " << g.self_loops_dropped() << " self-loop(s)\n";
    }
    auto snapshots = partition_snapshots(g, snapshot_size);
    save_graph(output, g, snapshot_size);
    std::cout << "nodes " << g.node_count() << "\n"
              << "edges " << g.edge_count() << "\n"
              << "snapshots " << snapshots.size() << "\n"
              << "snapshot_size " << snapshot_size << "\n"
              << "self_loops_dropped " << g.self_loops_dropped() << "\n";
    return 0;
}

int cmd_generate(const std::string& output, const SyntheticConfig& sc) {
    SyntheticGraph s = make_planted_graph(sc);
    auto out = open_out(output);
    out << "# planted-anomaly graph: " << sc.nodes << " nodes, " << sc.communities
        << " communities, " << sc.snapshots << " x " << sc.edges_per_snapshot << " edges, seed "
        << sc.seed << "\n";
    for (const auto& e : s.graph.edges()) {
        out << s.graph.label(e.source) << ' ' << s.graph.label(e.target) << ' ' << e.timestamp
            << '\n';
    }
    std::cout << "nodes " << s.graph.node_count() << "\nedges " << s.graph.edge_count()
              << "\nsnapshot_size " << s.snapshot_size << "\n";
    return 0;
}

int cmd_train(const Options& o) {
    Resolved r = resolve(o);
    LoadedGraph g = load_series(r);
    const RunConfig& c = r.config;
    const fs::path out_dir = c.out;
    fs::create_directories(out_dir);

    const auto started = std::chrono::steady_clock::now();
    FeatureExtractor fx(g.series, c.features);
    PreparedData data = prepare_data(fx, c.model, c.train);
    std::cerr << "samples: " << data.train.size() << " train, " << data.test.size() << " test\n";

    if (!c.dump_samples.empty()) {
        auto out = open_out(c.dump_samples);
        write_samples_jsonl(out, data.train, "train");
        write_samples_jsonl(out, data.test, "test");
    }
    if (!c.dump_features.empty()) {
        std::vector<FeatureDumpRow> rows;
        std::size_t id = 0;
        for (std::size_t k = 0; k < data.train.size(); ++k, ++id) {
            auto more = dump_rows(data.train[k], data.train_encoded[k], id);
            rows.insert(rows.end(), more.begin(), more.end());
        }
        for (std::size_t k = 0; k < data.test.size(); ++k, ++id) {
            auto more = dump_rows(data.test[k], data.test_encoded[k], id);
            rows.insert(rows.end(), more.begin(), more.end());
        }
        auto out = open_out(c.dump_features);
        write_echo(out, c);
        write_feature_csv(out, rows);
    }

    auto progress = [](const EpochStats& s, const EvalPoint* e) {
        if (!e) return;
        std::fprintf(stderr, "epoch %4zu  loss %.5f  dis %.5f  con %.5f  auc %.4f  ap %.4f\n",
                     s.epoch, s.loss, s.l_dis, s.l_con, e->result.auc, e->result.ap);
    };
    TrainResult result = c.train.resample_negatives_each_epoch
                             ? train(fx, c.model, c.train, {}, progress)
                             : train(std::move(data), c.model, c.train, progress);
    result.report.config = c.entries();

    write_json(out_dir / "report.json", to_json(result.report));
    save_checkpoint((out_dir / "best.ckpt").string(), result.best_params.list(), comment_lines(c));
    save_checkpoint((out_dir / "final.ckpt").string(), result.final_params.list(), comment_lines(c));
    {
        auto conf = open_out(out_dir / "run.conf");
        for (const auto& line : c.echo()) conf << line << '\n';
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    std::fprintf(stderr, "wall clock %.1f s\n", secs);
    std::printf("best auc %.4f (epoch %zu)  best ap %.4f (epoch %zu)\n", result.report.best_auc,
                result.report.best_auc_epoch, result.report.best_ap, result.report.best_ap_epoch);
    std::printf("wrote %s\n", (out_dir / "report.json").string().c_str());
    return 0;
}

int cmd_eval(const Options& o) {
    Checkpoint ckpt;
    Resolved r = resolve(o, &require_checkpoint(o, ckpt));
    LoadedGraph g = load_series(r);
    const RunConfig& c = r.config;
    ModelParams params = load_model(ckpt, c);
    FeatureExtractor fx(g.series, c.features);
    auto test = build_test_set(g.series, c.train.split_fraction, c.train.inject_rate, c.model.C,
                               c.model.T, c.train.seed);
    EvalResult res = evaluate(params, encode_all(fx, test), c.train.inject_rate);

    nlohmann::ordered_json j;
    j["config"] = config_json(c);
    j["result"] = to_json(res);
    write_json(fs::path(c.out) / "eval.json", j);
    std::cout << to_json(res).dump(2) << '\n';
    return 0;
}

std::vector<std::pair<NodeId, NodeId>> read_candidates(const std::string& path,
                                                       const DynamicGraph& g) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open candidate file '" + path + "'");
    std::vector<std::pair<NodeId, NodeId>> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        std::string a, b;
        if (!(ls >> a) || a[0] == '#' || a[0] == '%') continue;
        if (!(ls >> b)) throw ParseError(line_no, "expected 'source target'");
        auto u = g.find(a);
        auto v = g.find(b);
        if (!u || !v) {
            throw ParseError(line_no, "unknown node '" + (u ? b : a) + "'");
        }
        if (*u == *v) throw ParseError(line_no, "self-loop candidate");
        out.emplace_back(*u, *v);
    }
    return out;
}

int cmd_rank(const Options& o) {
    Checkpoint ckpt;
    Resolved r = resolve(o, &require_checkpoint(o, ckpt));
    LoadedGraph g = load_series(r);
    const RunConfig& c = r.config;
    ModelParams params = load_model(ckpt, c);
    const std::size_t window_end = g.series.size() - 1;

    std::vector<std::pair<NodeId, NodeId>> pairs;
    if (!c.candidates.empty()) {
        pairs = read_candidates(c.candidates, g.graph);
    } else {
        std::unordered_set<NodePair, NodePairHash> seen;
        for (const auto& e : g.series[window_end].instances()) {
            if (seen.insert(e.pair()).second) pairs.emplace_back(e.source, e.target);
        }
    }
    if (pairs.empty()) throw std::runtime_error("no candidate edges to rank");

    FeatureExtractor fx(g.series, c.features);
    auto samples = build_candidate_samples(g.series, window_end, pairs, c.model.C, c.model.T,
                                           c.train.seed);
    auto scores = score_samples(params, encode_all(fx, samples));

    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    std::size_t k = c.top_k;
    if (k > order.size()) {
        std::cerr << "warning: top_k " << k << " exceeds " << order.size()
                  << " candidates; emitting all\n";
        k = order.size();
    }

    std::ostringstream csv;
    csv << "rank,source,target,score\n";
    for (std::size_t n = 0; n < k; ++n) {
        const auto idx = order[n];
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", scores[idx]);
        csv << n + 1 << ',' << g.graph.label(pairs[idx].first) << ','
            << g.graph.label(pairs[idx].second) << ',' << buf << '\n';
    }
    auto out = open_out(fs::path(c.out) / "rank.csv");
    write_echo(out, c);
    out << csv.str();
    std::cout << csv.str();
    return 0;
}

int cmd_export_embeddings(const Options& o) {
    Checkpoint ckpt;
    Resolved r = resolve(o, &require_checkpoint(o, ckpt));
    LoadedGraph g = load_series(r);
    const RunConfig& c = r.config;
    ModelParams params = load_model(ckpt, c);
    FeatureExtractor fx(g.series, c.features);
    auto test = build_test_set(g.series, c.train.split_fraction, c.train.inject_rate, c.model.C,
                               c.model.T, c.train.seed);
    auto emb = embed_samples(params, encode_all(fx, test));

    const fs::path path = fs::path(c.out) / "embeddings.csv";
    auto out = open_out(path);
    write_echo(out, c);
    out << "id,label";
    for (std::size_t k = 0; k < c.model.d; ++k) out << ",e" << k;
    out << '\n';
    char buf[32];
    for (std::size_t n = 0; n < test.size(); ++n) {
        out << n << ',' << test[n].label;
        for (double x : emb[n]) {
            std::snprintf(buf, sizeof buf, ",%.17g", x);
            out << buf;
        }
        out << '\n';
    }
    std::cout << "wrote " << test.size() << " embeddings to " << path.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Structural-temporal edge anomaly detection on dynamic graphs"};
    app.require_subcommand(1);

    std::string ingest_in, ingest_out;
    std::size_t ingest_size = RunConfig{}.snapshot_size;
    auto* ingest = app.add_subcommand("ingest", "Parse an edge list and write an STCG graph file");
    ingest->add_option("edges", ingest_in, "Text edge list (source target timestamp)")->required();
    ingest->add_option("-o,--out", ingest_out, "Output graph file")->required();
    ingest->add_option("--snapshot-size", ingest_size, "Edges per snapshot");

    std::string gen_out;
    SyntheticConfig gen_cfg;
    auto* gen = app.add_subcommand("generate", "Write a synthetic planted-anomaly edge list");
    gen->add_option("-o,--out", gen_out, "Output edge list")->required();
    gen->add_option("--seed", gen_cfg.seed, "Generator seed");
    gen->add_option("--nodes", gen_cfg.nodes, "Node count");
    gen->add_option("--snapshots", gen_cfg.snapshots, "Snapshot count");
    gen->add_option("--edges-per-snapshot", gen_cfg.edges_per_snapshot, "Edges per snapshot");

    Options train_opts, eval_opts, rank_opts, export_opts;
    auto* train_cmd = app.add_subcommand("train", "Train a model; writes report.json and checkpoints");
    add_run_options(train_cmd, train_opts);
    auto* eval_cmd = app.add_subcommand("eval", "Score an injected test set; writes eval.json");
    add_run_options(eval_cmd, eval_opts);
    auto* rank_cmd = app.add_subcommand("rank", "Rank candidate edges by anomaly score");
    add_run_options(rank_cmd, rank_opts);
    auto* export_cmd = app.add_subcommand("export-embeddings", "Write test edge embeddings as CSV");
    add_run_options(export_cmd, export_opts);

    CLI11_PARSE(app, argc, argv);

    try {
        if (ingest->parsed()) return cmd_ingest(ingest_in, ingest_out, ingest_size);
        if (gen->parsed()) return cmd_generate(gen_out, gen_cfg);
        if (train_cmd->parsed()) return cmd_train(train_opts);
        if (eval_cmd->parsed()) return cmd_eval(eval_opts);
        if (rank_cmd->parsed()) return cmd_rank(rank_opts);
        if (export_cmd->parsed()) return cmd_export_embeddings(export_opts);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
