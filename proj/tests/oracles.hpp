#pragma once

// Independent reference implementations used only by the tests. They are
// deliberately naive: dense matrices, O(n^2) or O(n^3) loops.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <vector>

#include "stcad/graph.hpp"
#include "stcad/rng.hpp"
#include "stcad/tensor.hpp"

namespace oracle {

/// All-pairs hop distances over the snapshot's node list; unreachable = cap.
inline std::map<std::pair<stcad::NodeId, stcad::NodeId>, std::size_t> floyd_warshall(
    const stcad::Snapshot& s, std::size_t cap) {
    auto nodes = s.nodes();
    const std::size_t n = nodes.size();
    const std::size_t inf = std::numeric_limits<std::size_t>::max() / 4;
    std::vector<std::vector<std::size_t>> d(n, std::vector<std::size_t>(n, inf));
    for (std::size_t a = 0; a < n; ++a) {
        d[a][a] = 0;
        for (std::size_t b = 0; b < n; ++b) {
            if (a != b && s.contains_pair(stcad::NodePair(nodes[a], nodes[b]))) d[a][b] = 1;
        }
    }
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t a = 0; a < n; ++a)
            for (std::size_t b = 0; b < n; ++b) d[a][b] = std::min(d[a][b], d[a][k] + d[k][b]);
    std::map<std::pair<stcad::NodeId, stcad::NodeId>, std::size_t> out;
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b) out[{nodes[a], nodes[b]}] = std::min(d[a][b], cap);
    return out;
}

/// Dense power iteration on the column-stochastic transition matrix.
inline std::map<stcad::NodeId, double> dense_pagerank(const stcad::Snapshot& s, double damping,
                                                      std::size_t iters) {
    auto nodes = s.nodes();
    const std::size_t n = nodes.size();
    std::vector<std::vector<double>> m(n, std::vector<double>(n, 0.0));
    for (std::size_t b = 0; b < n; ++b) {
        std::size_t deg = 0;
        for (std::size_t a = 0; a < n; ++a) {
            if (s.contains_pair(stcad::NodePair(nodes[a], nodes[b]))) ++deg;
        }
        for (std::size_t a = 0; a < n; ++a) {
            if (deg == 0) {
                m[a][b] = 1.0 / static_cast<double>(n);
            } else if (s.contains_pair(stcad::NodePair(nodes[a], nodes[b]))) {
                m[a][b] = 1.0 / static_cast<double>(deg);
            }
        }
    }
    std::vector<double> r(n, 1.0 / static_cast<double>(n)), next(n);
    for (std::size_t it = 0; it < iters; ++it) {
        for (std::size_t a = 0; a < n; ++a) {
            double acc = 0.0;
            for (std::size_t b = 0; b < n; ++b) acc += m[a][b] * r[b];
            next[a] = (1.0 - damping) / static_cast<double>(n) + damping * acc;
        }
        r.swap(next);
    }
    std::map<stcad::NodeId, double> out;
    for (std::size_t a = 0; a < n; ++a) out[nodes[a]] = r[a];
    return out;
}

/// Pairwise comparison AUC.
inline double brute_auc(const std::vector<double>& s, const std::vector<int>& y) {
    double wins = 0.0, pairs = 0.0;
    for (std::size_t a = 0; a < s.size(); ++a) {
        if (y[a] != 1) continue;
        for (std::size_t b = 0; b < s.size(); ++b) {
            if (y[b] != 0) continue;
            pairs += 1.0;
            if (s[a] > s[b]) wins += 1.0;
            if (s[a] == s[b]) wins += 0.5;
        }
    }
    return wins / pairs;
}

/// AP as sum over ranks of (recall_n - recall_{n-1}) * precision_n, with
/// the ranking order given explicitly by (score desc, label asc, index asc).
inline double brute_ap(const std::vector<double>& s, const std::vector<int>& y) {
    std::vector<std::size_t> idx(s.size());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
    // insertion sort keeps this independent of std::sort comparators
    for (std::size_t a = 1; a < idx.size(); ++a) {
        for (std::size_t b = a; b > 0; --b) {
            auto p = idx[b - 1], q = idx[b];
            bool swap = s[q] > s[p] || (s[q] == s[p] && (y[q] < y[p] || (y[q] == y[p] && q < p)));
            if (!swap) break;
            std::swap(idx[b - 1], idx[b]);
        }
    }
    double total_pos = 0.0;
    for (int v : y) total_pos += v;
    double tp = 0.0, prev_recall = 0.0, ap = 0.0;
    for (std::size_t n = 0; n < idx.size(); ++n) {
        tp += y[idx[n]];
        double precision = tp / static_cast<double>(n + 1);
        double recall = tp / total_pos;
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
    }
    return ap;
}

/// Relative error used by every gradient check: |a - n| / max(|a|, |n|, floor).
inline double rel_error(double analytic, double numeric, double floor = 1e-6) {
    return std::abs(analytic - numeric) /
           std::max({std::abs(analytic), std::abs(numeric), floor});
}

struct GradCheck {
    double max_rel = 0.0;
    std::size_t checked = 0;
    std::size_t kinks = 0;     // failed at h, passed at h / 100
    std::size_t roundoff = 0;  // failed at h, passed at h * 100
};

/// Central differences at step h over `coords` randomly chosen coordinates of
/// every input (all coordinates when coords == 0). `f` must build a fresh
/// graph from the current values of `inputs` and return a scalar.
inline GradCheck check_gradients(std::vector<stcad::tensor::Tensor> inputs,
                                 const std::function<stcad::tensor::Tensor()>& f,
                                 std::size_t coords = 0, std::uint64_t seed = 1, double h = 1e-5) {
    for (auto& t : inputs) t.zero_grad();
    stcad::tensor::backward(f());
    std::vector<std::vector<double>> analytic;
    for (auto& t : inputs) analytic.emplace_back(t.grad().begin(), t.grad().end());

    stcad::Rng rng(seed);
    GradCheck out;
    for (std::size_t q = 0; q < inputs.size(); ++q) {
        auto values = inputs[q].mutable_values();
        std::vector<std::size_t> picks;
        if (coords == 0 || coords >= values.size()) {
            for (std::size_t k = 0; k < values.size(); ++k) picks.push_back(k);
        } else {
            for (std::size_t k = 0; k < coords; ++k) picks.push_back(rng.below(values.size()));
        }
        for (auto k : picks) {
            const double orig = values[k];
            auto central = [&](double step) {
                stcad::tensor::NoGradGuard g;
                values[k] = orig + step;
                const double up = f().item();
                values[k] = orig - step;
                const double down = f().item();
                values[k] = orig;
                return std::pair{up, down};
            };
            const auto [fp, fm] = central(h);
            const double numeric = (fp - fm) / (2.0 * h);
            const double err = rel_error(analytic[q][k], numeric);
            // A coordinate can fail at h for two floating-point reasons: a ReLU
            // or clamp boundary inside the stencil mixes slopes from both sides,
            // and for entries far below the loss scale the rounding noise in f
            // divided by h swamps the difference. The first clears at h / 100,
            // the second at h * 100. Both are counted separately; a wrong
            // gradient fails at every step.
            if (err >= 1e-4) {
                auto passes_at = [&](double step) {
                    const auto [up, down] = central(step);
                    return rel_error(analytic[q][k], (up - down) / (2.0 * step)) < 1e-4;
                };
                if (passes_at(h / 100.0)) {
                    ++out.kinks;
                    continue;
                }
                if (passes_at(h * 100.0)) {
                    ++out.roundoff;
                    continue;
                }
            }
            out.max_rel = std::max(out.max_rel, err);
            ++out.checked;
        }
    }
    for (auto& t : inputs) t.zero_grad();
    return out;
}

inline std::vector<double> random_values(std::size_t n, stcad::Rng& rng, double lo = -1.0,
                                         double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

/// Random undirected snapshot on `n` nodes with edge probability p.
inline stcad::Snapshot random_snapshot(std::size_t n, double p, stcad::Rng& rng,
                                       std::size_t index = 0) {
    std::vector<stcad::EdgeInstance> edges;
    for (stcad::NodeId a = 0; a < n; ++a)
        for (stcad::NodeId b = a + 1; b < n; ++b)
            if (rng.uniform() < p) edges.push_back({a, b, static_cast<double>(edges.size())});
    std::vector<stcad::NodeId> all(n);
    for (stcad::NodeId v = 0; v < n; ++v) all[v] = v;
    return stcad::Snapshot(index, std::move(edges), all);
}

}  // namespace oracle
