#include "stcad/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <unordered_set>

namespace stcad {

std::unordered_map<NodeId, double> pagerank(const Snapshot& s, double damping, double tol,
                                            std::size_t max_iter) {
    auto nodes = s.nodes();
    const std::size_t n = nodes.size();
    std::unordered_map<NodeId, double> out;
    if (n == 0) return out;

    std::unordered_map<NodeId, std::size_t> slot;
    slot.reserve(n);
    for (std::size_t k = 0; k < n; ++k) slot.emplace(nodes[k], k);

    std::vector<std::vector<std::size_t>> adj(n);
    for (std::size_t k = 0; k < n; ++k) {
        for (NodeId u : s.neighbors(nodes[k])) adj[k].push_back(slot.at(u));
    }

    const double inv_n = 1.0 / static_cast<double>(n);
    // Start from one step past the degree distribution, which is already close
    // to the fixed point; the slow bipartite mode then starts small.
    std::size_t degree_sum = 0;
    for (const auto& a : adj) degree_sum += a.size();
    std::vector<double> rank(n, inv_n), next(n);
    if (degree_sum > 0) {
        double total = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            rank[k] = (1.0 - damping) * inv_n +
                      damping * static_cast<double>(adj[k].size()) / static_cast<double>(degree_sum);
            total += rank[k];
        }
        for (double& r : rank) r /= total;
    }
    // |rank - fixed point|_1 <= diff * damping / (1 - damping)
    const double stop = damping < 1.0 ? tol * (1.0 - damping) / damping : tol;
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        double dangling = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (adj[k].empty()) dangling += rank[k];
        }
        const double base = (1.0 - damping) * inv_n + damping * dangling * inv_n;
        std::fill(next.begin(), next.end(), base);
        for (std::size_t k = 0; k < n; ++k) {
            if (adj[k].empty()) continue;
            const double share = damping * rank[k] / static_cast<double>(adj[k].size());
            for (std::size_t u : adj[k]) next[u] += share;
        }
        double diff = 0.0;
        for (std::size_t k = 0; k < n; ++k) diff += std::abs(next[k] - rank[k]);
        rank.swap(next);
        if (diff < stop) break;
    }

    double total = 0.0;
    for (double r : rank) total += r;
    for (std::size_t k = 0; k < n; ++k) out.emplace(nodes[k], rank[k] / total);
    return out;
}

std::size_t shortest_distance(const Snapshot& s, NodeId a, NodeId b, std::size_t dist_cap) {
    if (a == b) return 0;
    if (dist_cap == 0) return 0;
    if (!s.contains_node(a) || !s.contains_node(b)) return dist_cap;
    auto na = s.neighbors(a);
    if (std::binary_search(na.begin(), na.end(), b)) return std::min<std::size_t>(1, dist_cap);

    std::unordered_set<NodeId> seen{a};
    std::vector<NodeId> frontier{a}, next;
    for (std::size_t depth = 1; depth < dist_cap && !frontier.empty(); ++depth) {
        next.clear();
        for (NodeId u : frontier) {
            for (NodeId w : s.neighbors(u)) {
                if (w == b) return depth;
                if (seen.insert(w).second) next.push_back(w);
            }
        }
        frontier.swap(next);
    }
    return dist_cap;
}

std::size_t common_neighbor_count(const Snapshot& s, NodeId a, NodeId b) {
    auto na = s.neighbors(a);
    auto nb = s.neighbors(b);
    std::size_t count = 0;
    auto x = na.begin();
    auto y = nb.begin();
    while (x != na.end() && y != nb.end()) {
        if (*x < *y) {
            ++x;
        } else if (*y < *x) {
            ++y;
        } else {
            ++count;
            ++x;
            ++y;
        }
    }
    return count;
}

FeatureExtractor::FeatureExtractor(const SnapshotSeries& series, FeatureConfig config)
    : series_(&series), config_(config) {
    if (config_.delta_t == 0) throw std::invalid_argument("delta_t must be at least 1");
    ranks_.reserve(series.size());
    for (const auto& snap : series.snapshots()) {
        ranks_.push_back(
            pagerank(snap, config_.damping, config_.pagerank_tol, config_.pagerank_max_iter));
    }
}

double FeatureExtractor::pagerank_score(std::size_t t, NodeId v) const {
    const auto& r = ranks_.at(t);
    auto it = r.find(v);
    return it == r.end() ? 0.0 : it->second;
}

Level1Features FeatureExtractor::level1(std::size_t t, NodeId i, NodeId j, NodeId v) const {
    const Snapshot& s = (*series_)[t];
    Level1Features f;
    f.glo = pagerank_score(t, v);
    // the second search only needs to beat the first
    const auto to_i = shortest_distance(s, v, i, config_.dist_cap);
    f.loc = static_cast<double>(v == j ? 0 : shortest_distance(s, v, j, to_i));
    auto start = series_->first_occurrence(NodePair(i, j));
    if (start && *start <= t) f.tmp = static_cast<double>(t - *start);
    return f;
}

CouplingFeatures FeatureExtractor::coupling(std::size_t t, NodeId i, NodeId j) const {
    CouplingFeatures f;
    if (t < config_.delta_t) return f;
    const Snapshot& now = (*series_)[t];
    const Snapshot& prev = (*series_)[t - config_.delta_t];

    const auto dist = shortest_distance(prev, i, j, config_.dist_cap);
    f.dc = dist > 0 ? static_cast<double>(dist - 1) : 0.0;

    const auto deg_now = static_cast<double>(now.degree(i) + now.degree(j));
    const auto deg_prev = static_cast<double>(prev.degree(i) + prev.degree(j));
    f.ic = std::abs(deg_now - deg_prev);

    const auto cn_now = static_cast<double>(common_neighbor_count(now, i, j));
    const auto cn_prev = static_cast<double>(common_neighbor_count(prev, i, j));
    f.nc = std::abs(cn_now - cn_prev);
    return f;
}

FeatureVector FeatureExtractor::node_features(std::size_t t, NodeId i, NodeId j,
                                              NodeId v) const {
    auto l1 = level1(t, i, j, v);
    auto l2 = coupling(t, i, j);
    return {l1.glo, l1.loc, l1.tmp, l2.dc, l2.ic, l2.nc};
}

void write_feature_csv(std::ostream& out, const std::vector<FeatureDumpRow>& rows) {
    out << "sample_id,t,node,f_glo,f_loc,f_tmp,f_dc,f_ic,f_nc\n";
    char buf[64];
    for (const auto& r : rows) {
        out << r.sample_id << ',' << r.t << ',' << r.node;
        for (double x : r.features.as_array()) {
            std::snprintf(buf, sizeof buf, ",%.17g", x);
            out << buf;
        }
        out << '\n';
    }
}

}  // namespace stcad
