#include "stcad/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

namespace stcad {

ParseError::ParseError(std::size_t line, const std::string& what)
    : GraphError("line " + std::to_string(line) + ": " + what), line_(line) {}

DynamicGraph::DynamicGraph(std::vector<std::string> labels, std::vector<EdgeInstance> edges,
                           std::size_t prior_self_loops)
    : labels_(std::move(labels)), self_loops_dropped_(prior_self_loops) {
    for (NodeId v = 0; v < labels_.size(); ++v) {
        if (!index_.emplace(labels_[v], v).second) {
            throw GraphError("duplicate node label '" + labels_[v] + "'");
        }
    }
    edges_.reserve(edges.size());
    for (const auto& e : edges) {
        if (e.source >= labels_.size() || e.target >= labels_.size()) {
            throw GraphError("edge references unknown node id");
        }
        if (e.source == e.target) {
            ++self_loops_dropped_;
            continue;
        }
        edges_.push_back(e);
    }
    std::stable_sort(edges_.begin(), edges_.end(),
                     [](const EdgeInstance& a, const EdgeInstance& b) {
                         return a.timestamp < b.timestamp;
                     });
    for (std::size_t k = 0; k < edges_.size(); ++k) {
        first_seen_.try_emplace(edges_[k].pair(), k);
    }
}

std::optional<NodeId> DynamicGraph::find(std::string_view label) const {
    auto it = index_.find(std::string(label));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::optional<std::size_t> DynamicGraph::first_seen(NodePair pair) const {
    auto it = first_seen_.find(pair);
    if (it == first_seen_.end()) return std::nullopt;
    return it->second;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    auto is_sep = [](char c) { return c == ',' || c == ' ' || c == '\t' || c == '\r'; };
    while (i < line.size()) {
        while (i < line.size() && is_sep(line[i])) ++i;
        std::size_t start = i;
        while (i < line.size() && !is_sep(line[i])) ++i;
        if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
}

std::optional<double> parse_number(std::string_view s) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(value)) {
        return std::nullopt;
    }
    return value;
}

}  // namespace

DynamicGraph parse_edge_stream(std::istream& in) {
    std::vector<std::string> labels;
    std::unordered_map<std::string, NodeId> ids;
    std::vector<EdgeInstance> edges;

    auto intern = [&](std::string_view label) {
        auto [it, inserted] = ids.try_emplace(std::string(label), static_cast<NodeId>(labels.size()));
        if (inserted) labels.emplace_back(label);
        return it->second;
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto fields = split_fields(line);
        if (fields.empty()) continue;
        if (fields[0].front() == '#' || fields[0].front() == '%') continue;
        if (fields.size() != 3) {
            throw ParseError(line_no, "expected 'source target timestamp', got " +
                                          std::to_string(fields.size()) + " field(s)");
        }
        auto ts = parse_number(fields[2]);
        if (!ts) {
            throw ParseError(line_no, "timestamp '" + std::string(fields[2]) + "' is not numeric");
        }
        NodeId s = intern(fields[0]);
        NodeId t = intern(fields[1]);
        edges.push_back({s, t, *ts});
    }
    if (edges.empty()) throw GraphError("no edges");
    DynamicGraph g(std::move(labels), std::move(edges));
    if (g.edge_count() == 0) throw GraphError("no edges");
    return g;
}

DynamicGraph parse_edge_stream(std::string_view text) {
    std::istringstream in{std::string(text)};
    return parse_edge_stream(in);
}

DynamicGraph load_edge_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw GraphError("cannot open edge file '" + path + "'");
    return parse_edge_stream(in);
}

// ---------------------------------------------------------------------------

Snapshot::Snapshot(std::size_t index, std::vector<EdgeInstance> instances)
    : index_(index), instances_(std::move(instances)) {
    build({});
}

Snapshot::Snapshot(std::size_t index, std::vector<EdgeInstance> instances,
                   std::span<const NodeId> extra_nodes)
    : index_(index), instances_(std::move(instances)) {
    build(extra_nodes);
}

void Snapshot::build(std::span<const NodeId> extra_nodes) {
    for (const auto& e : instances_) {
        if (e.source == e.target) continue;
        if (!edge_set_.insert(e.pair()).second) continue;
        adjacency_[e.source].push_back(e.target);
        adjacency_[e.target].push_back(e.source);
    }
    for (NodeId v : extra_nodes) adjacency_.try_emplace(v);
    nodes_.reserve(adjacency_.size());
    for (auto& [v, nbrs] : adjacency_) {
        std::sort(nbrs.begin(), nbrs.end());
        nodes_.push_back(v);
    }
    std::sort(nodes_.begin(), nodes_.end());
}

std::span<const NodeId> Snapshot::neighbors(NodeId v) const {
    auto it = adjacency_.find(v);
    if (it == adjacency_.end()) return {};
    return it->second;
}

std::vector<Snapshot> partition_snapshots(const DynamicGraph& graph, std::size_t snapshot_size) {
    if (snapshot_size == 0) throw GraphError("snapshot size must be positive");
    std::vector<Snapshot> out;
    auto edges = graph.edges();
    for (std::size_t start = 0; start < edges.size(); start += snapshot_size) {
        std::size_t end = std::min(edges.size(), start + snapshot_size);
        out.emplace_back(out.size(),
                         std::vector<EdgeInstance>(edges.begin() + start, edges.begin() + end));
    }
    return out;
}

std::optional<std::size_t> first_occurrence_snapshot(NodePair pair,
                                                     std::span<const Snapshot> snapshots) {
    for (std::size_t t = 0; t < snapshots.size(); ++t) {
        if (snapshots[t].contains_pair(pair)) return t;
    }
    return std::nullopt;
}

SnapshotSeries::SnapshotSeries(const DynamicGraph& graph, std::size_t snapshot_size)
    : SnapshotSeries(graph.node_count(), partition_snapshots(graph, snapshot_size)) {}

SnapshotSeries::SnapshotSeries(std::size_t node_count, std::vector<Snapshot> snapshots)
    : node_count_(node_count), snapshots_(std::move(snapshots)) {
    for (std::size_t t = 0; t < snapshots_.size(); ++t) {
        for (const auto& e : snapshots_[t].instances()) {
            if (e.source == e.target) continue;
            if (e.source >= node_count_ || e.target >= node_count_) {
                throw GraphError("snapshot references node outside the graph");
            }
            first_.try_emplace(e.pair(), t);
        }
    }
}

std::optional<std::size_t> SnapshotSeries::first_occurrence(NodePair pair) const {
    auto it = first_.find(pair);
    if (it == first_.end()) return std::nullopt;
    return it->second;
}

}  // namespace stcad
