#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <unordered_map>
#include <vector>

#include "stcad/graph.hpp"

namespace stcad {

inline constexpr std::size_t kFeatureCount = 6;

/// Per-node input features. The first three are independent (global rank,
/// local distance, edge lifetime); the last three describe how the central
/// edge's neighbourhood changed since the previous snapshot.
struct FeatureVector {
    double glo = 0.0;  // PageRank in the current snapshot
    double loc = 0.0;  // min hop distance to either central endpoint
    double tmp = 0.0;  // snapshots since the central pair first appeared
    double dc = 0.0;   // previous endpoint distance minus one
    double ic = 0.0;   // change of endpoint degree sum
    double nc = 0.0;   // change of common-neighbour count

    std::array<double, kFeatureCount> as_array() const { return {glo, loc, tmp, dc, ic, nc}; }
};

struct FeatureConfig {
    std::size_t dist_cap = 5;
    std::size_t delta_t = 1;
    double damping = 0.85;
    double pagerank_tol = 1e-8;
    std::size_t pagerank_max_iter = 100;
};

/// Power-iteration PageRank on the undirected snapshot. Dangling nodes spread
/// their mass uniformly. Scores are renormalised to sum to one.
std::unordered_map<NodeId, double> pagerank(const Snapshot& s, double damping = 0.85,
                                            double tol = 1e-8, std::size_t max_iter = 100);

/// Breadth-first hop distance truncated at `dist_cap`. Returns 0 when a == b,
/// otherwise `dist_cap` if b is unreachable within the cap or either endpoint
/// is absent.
std::size_t shortest_distance(const Snapshot& s, NodeId a, NodeId b, std::size_t dist_cap);

/// Size of N(a) ∩ N(b) in the snapshot.
std::size_t common_neighbor_count(const Snapshot& s, NodeId a, NodeId b);

struct Level1Features {
    double glo = 0.0;
    double loc = 0.0;
    double tmp = 0.0;
};

struct CouplingFeatures {
    double dc = 0.0;
    double ic = 0.0;
    double nc = 0.0;
};

/// Computes features against an immutable snapshot series. PageRank is
/// computed for every snapshot at construction; afterwards all queries are
/// const and safe to call concurrently.
class FeatureExtractor {
public:
    FeatureExtractor(const SnapshotSeries& series, FeatureConfig config = {});

    const FeatureConfig& config() const { return config_; }
    const SnapshotSeries& series() const { return *series_; }

    /// PageRank of v in snapshot t, 0 if v does not appear there.
    double pagerank_score(std::size_t t, NodeId v) const;

    /// Level-1 features of node v at snapshot t for the central pair (i, j).
    Level1Features level1(std::size_t t, NodeId i, NodeId j, NodeId v) const;

    /// Coupling features of the central pair at snapshot t, shared by every
    /// node of the sample at that position. All zero when t < delta_t.
    CouplingFeatures coupling(std::size_t t, NodeId i, NodeId j) const;

    FeatureVector node_features(std::size_t t, NodeId i, NodeId j, NodeId v) const;

private:
    const SnapshotSeries* series_;
    FeatureConfig config_;
    std::vector<std::unordered_map<NodeId, double>> ranks_;
};

/// Debug dump row: sample_id, t, node followed by the six features.
struct FeatureDumpRow {
    std::size_t sample_id = 0;
    std::size_t t = 0;
    NodeId node = 0;
    FeatureVector features;
};

void write_feature_csv(std::ostream& out, const std::vector<FeatureDumpRow>& rows);

}  // namespace stcad
