#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace stcad {

using NodeId = std::uint32_t;

/// Unordered node pair. Constructed in canonical (low, high) order so that
/// (i, j) and (j, i) compare and hash equal.
struct NodePair {
    NodeId lo = 0;
    NodeId hi = 0;

    NodePair() = default;
    NodePair(NodeId a, NodeId b) : lo(a < b ? a : b), hi(a < b ? b : a) {}

    std::uint64_t key() const { return (std::uint64_t{lo} << 32) | hi; }
    friend bool operator==(const NodePair&, const NodePair&) = default;
};

struct NodePairHash {
    std::size_t operator()(const NodePair& p) const noexcept {
        std::uint64_t x = p.key();
        x ^= x >> 33;
        x *= 0xff51afd7ed558ccdULL;
        x ^= x >> 33;
        return static_cast<std::size_t>(x);
    }
};

/// One timestamped edge occurrence. Source/target keep the input orientation,
/// but every structural query treats the edge as undirected.
struct EdgeInstance {
    NodeId source = 0;
    NodeId target = 0;
    double timestamp = 0.0;

    NodePair pair() const { return {source, target}; }
    friend bool operator==(const EdgeInstance&, const EdgeInstance&) = default;
};

class GraphError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public GraphError {
public:
    ParseError(std::size_t line, const std::string& what);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Timestamped edge multiset over densely numbered nodes. Immutable once built.
class DynamicGraph {
public:
    DynamicGraph() = default;

    /// Builds a graph from already-remapped edges. Edges are stably sorted by
    /// timestamp; self-loops are dropped and counted on top of
    /// `prior_self_loops` (used when reloading a serialized graph).
    DynamicGraph(std::vector<std::string> labels, std::vector<EdgeInstance> edges,
                 std::size_t prior_self_loops = 0);

    std::size_t node_count() const { return labels_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    std::span<const EdgeInstance> edges() const { return edges_; }

    const std::string& label(NodeId v) const { return labels_.at(v); }
    std::span<const std::string> labels() const { return labels_; }
    std::optional<NodeId> find(std::string_view label) const;

    /// Index of the earliest instance of the pair, if it ever occurs.
    std::optional<std::size_t> first_seen(NodePair pair) const;
    std::size_t distinct_pair_count() const { return first_seen_.size(); }

    std::size_t self_loops_dropped() const { return self_loops_dropped_; }

private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, NodeId> index_;
    std::vector<EdgeInstance> edges_;
    std::unordered_map<NodePair, std::size_t, NodePairHash> first_seen_;
    std::size_t self_loops_dropped_ = 0;
};

/// Parses `source target timestamp` lines separated by whitespace or commas.
/// Blank lines and lines starting with '#' or '%' are skipped. Node labels are
/// remapped to 0..|V|-1 in order of first appearance.
DynamicGraph parse_edge_stream(std::istream& in);
DynamicGraph parse_edge_stream(std::string_view text);
DynamicGraph load_edge_file(const std::string& path);

/// Undirected simple view of one contiguous block of edge instances.
class Snapshot {
public:
    Snapshot() = default;
    Snapshot(std::size_t index, std::vector<EdgeInstance> instances);
    /// Adds isolated nodes in addition to those incident to `instances`.
    Snapshot(std::size_t index, std::vector<EdgeInstance> instances,
             std::span<const NodeId> extra_nodes);

    std::size_t index() const { return index_; }
    std::span<const EdgeInstance> instances() const { return instances_; }
    /// Sorted ascending.
    std::span<const NodeId> nodes() const { return nodes_; }
    bool contains_node(NodeId v) const { return adjacency_.contains(v); }
    bool contains_pair(NodePair p) const { return edge_set_.contains(p); }
    std::size_t distinct_pair_count() const { return edge_set_.size(); }

    /// Sorted neighbor list; empty if v is absent.
    std::span<const NodeId> neighbors(NodeId v) const;
    std::size_t degree(NodeId v) const { return neighbors(v).size(); }

private:
    void build(std::span<const NodeId> extra_nodes);

    std::size_t index_ = 0;
    std::vector<EdgeInstance> instances_;
    std::vector<NodeId> nodes_;
    std::unordered_map<NodeId, std::vector<NodeId>> adjacency_;
    std::unordered_set<NodePair, NodePairHash> edge_set_;
};

std::vector<Snapshot> partition_snapshots(const DynamicGraph& graph, std::size_t snapshot_size);

inline std::span<const NodeId> neighbors(const Snapshot& s, NodeId v) { return s.neighbors(v); }
inline std::size_t degree(const Snapshot& s, NodeId v) { return s.degree(v); }

/// Smallest snapshot index whose edge set contains the pair (linear scan).
std::optional<std::size_t> first_occurrence_snapshot(NodePair pair,
                                                     std::span<const Snapshot> snapshots);

/// A graph partitioned into snapshots together with a first-occurrence index
/// over snapshot ordinals. This is the read-only context every downstream
/// stage works from.
class SnapshotSeries {
public:
    SnapshotSeries() = default;
    SnapshotSeries(const DynamicGraph& graph, std::size_t snapshot_size);
    SnapshotSeries(std::size_t node_count, std::vector<Snapshot> snapshots);

    std::size_t node_count() const { return node_count_; }
    std::size_t size() const { return snapshots_.size(); }
    const Snapshot& operator[](std::size_t t) const { return snapshots_.at(t); }
    std::span<const Snapshot> snapshots() const { return snapshots_; }

    std::optional<std::size_t> first_occurrence(NodePair pair) const;
    bool ever_occurs(NodePair pair) const { return first_.contains(pair); }
    std::size_t distinct_pair_count() const { return first_.size(); }

private:
    std::size_t node_count_ = 0;
    std::vector<Snapshot> snapshots_;
    std::unordered_map<NodePair, std::size_t, NodePairHash> first_;
};

/// Serialized graph container. See docs/formats.md for the byte layout.
struct StoredGraph {
    DynamicGraph graph;
    std::size_t snapshot_size = 0;  // 0 = not partitioned
};

inline constexpr std::uint32_t kGraphFormatVersion = 1;

void write_graph(std::ostream& out, const DynamicGraph& graph, std::size_t snapshot_size);
StoredGraph read_graph(std::istream& in);
void save_graph(const std::string& path, const DynamicGraph& graph, std::size_t snapshot_size);
StoredGraph load_graph(const std::string& path);

/// Loads either a serialized `STCG` file or a plain-text edge list, detected
/// by the leading magic bytes.
StoredGraph load_any_graph(const std::string& path);

}  // namespace stcad
