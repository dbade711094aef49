#pragma once

// Planted-anomaly benchmark: a community-structured dynamic graph whose
// normal traffic repeats existing relationships, closes triangles and only
// rarely crosses communities. Injected anomalies are drawn from never-seen
// cross-community pairs.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "stcad/graph.hpp"
#include "stcad/sampler.hpp"

namespace stcad {

struct SyntheticConfig {
    std::size_t nodes = 200;
    std::size_t communities = 2;
    std::size_t snapshots = 8;
    std::size_t edges_per_snapshot = 300;
    std::size_t initial_degree = 4;   // seed relationships per node
    double repeat_fraction = 0.70;    // instances that repeat a known relationship
    double triadic_fraction = 0.27;   // instances that close a triangle
    std::uint64_t seed = 7;           // remainder crosses communities
};

struct SyntheticGraph {
    DynamicGraph graph;
    std::size_t snapshot_size = 0;
    std::vector<std::size_t> community;  // per dense node id

    /// Accepts only pairs whose endpoints lie in different communities.
    PairFilter cross_community() const;
};

SyntheticGraph make_planted_graph(const SyntheticConfig& config);

}  // namespace stcad
