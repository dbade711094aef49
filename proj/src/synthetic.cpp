#include "stcad/synthetic.hpp"

#include <stdexcept>
#include <string>
#include <unordered_set>

#include "stcad/rng.hpp"

namespace stcad {

PairFilter SyntheticGraph::cross_community() const {
    return [community = community](NodeId u, NodeId v) {
        return u < community.size() && v < community.size() && community[u] != community[v];
    };
}

SyntheticGraph make_planted_graph(const SyntheticConfig& cfg) {
    if (cfg.communities < 2 || cfg.nodes < 2 * cfg.communities) {
        throw std::invalid_argument("synthetic graph needs at least two communities of two nodes");
    }
    if (cfg.snapshots == 0 || cfg.edges_per_snapshot == 0) {
        throw std::invalid_argument("synthetic graph needs snapshots and edges");
    }
    Rng rng(derive_seed(cfg.seed, "synthetic"));
    const std::size_t n = cfg.nodes;

    SyntheticGraph out;
    out.snapshot_size = cfg.edges_per_snapshot;
    out.community.resize(n);
    std::vector<std::vector<NodeId>> members(cfg.communities);
    for (NodeId v = 0; v < n; ++v) {
        out.community[v] = v * cfg.communities / n;
        members[out.community[v]].push_back(v);
    }

    std::vector<NodePair> relations;
    std::unordered_set<NodePair, NodePairHash> known;
    std::vector<std::vector<NodeId>> adj(n);
    auto relate = [&](NodeId a, NodeId b) {
        NodePair p(a, b);
        if (a == b || !known.insert(p).second) return;
        relations.push_back(p);
        adj[a].push_back(b);
        adj[b].push_back(a);
    };

    for (const auto& group : members) {
        for (NodeId u : group) {
            for (std::size_t k = 0; k < cfg.initial_degree / 2; ++k) {
                relate(u, group[rng.below(group.size())]);
            }
        }
    }

    std::vector<EdgeInstance> edges;
    edges.reserve(cfg.snapshots * cfg.edges_per_snapshot);
    double clock = 0.0;
    auto emit = [&](NodePair p) {
        // alternate orientation so the input is not canonically sorted
        if (rng.below(2)) {
            edges.push_back({p.lo, p.hi, clock});
        } else {
            edges.push_back({p.hi, p.lo, clock});
        }
        clock += 1.0;
    };

    // Triangles close over the previous snapshot's edges, so a new normal
    // edge was two hops apart just before it appeared.
    std::vector<std::vector<NodeId>> recent = adj;
    for (std::size_t s = 0; s < cfg.snapshots; ++s) {
        std::vector<std::vector<NodeId>> current(n);
        auto emit_tracked = [&](NodePair p) {
            emit(p);
            current[p.lo].push_back(p.hi);
            current[p.hi].push_back(p.lo);
        };
        for (std::size_t e = 0; e < cfg.edges_per_snapshot; ++e) {
            const double r = rng.uniform();
            if (r < cfg.repeat_fraction) {
                emit_tracked(relations[rng.below(relations.size())]);
                continue;
            }
            if (r < cfg.repeat_fraction + cfg.triadic_fraction) {
                auto u = static_cast<NodeId>(rng.below(n));
                bool made = false;
                if (!recent[u].empty()) {
                    NodeId w = recent[u][rng.below(recent[u].size())];
                    NodeId x = recent[w][rng.below(recent[w].size())];
                    if (x != u && !known.contains(NodePair(u, x)) &&
                        out.community[x] == out.community[u]) {
                        relate(u, x);
                        emit_tracked(NodePair(u, x));
                        made = true;
                    }
                }
                if (!made) emit_tracked(relations[rng.below(relations.size())]);
                continue;
            }
            const auto& a = members[0];
            const auto& b = members[1 + rng.below(cfg.communities - 1)];
            NodeId u = a[rng.below(a.size())];
            NodeId v = b[rng.below(b.size())];
            relate(u, v);
            emit_tracked(NodePair(u, v));
        }
        recent = std::move(current);
    }

    std::vector<std::string> labels(n);
    for (NodeId v = 0; v < n; ++v) labels[v] = "n" + std::to_string(v);
    out.graph = DynamicGraph(std::move(labels), std::move(edges));
    return out;
}

}  // namespace stcad
