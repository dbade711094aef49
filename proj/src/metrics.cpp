#include "stcad/metrics.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace stcad {

namespace {

void check_inputs(std::span<const double> scores, std::span<const int> labels) {
    if (scores.size() != labels.size()) {
        throw MetricError("scores and labels differ in length (" + std::to_string(scores.size()) +
                          " vs " + std::to_string(labels.size()) + ")");
    }
    for (int y : labels) {
        if (y != 0 && y != 1) throw MetricError("labels must be 0 or 1");
    }
}

}  // namespace

double roc_auc(std::span<const double> scores, std::span<const int> labels) {
    check_inputs(scores, labels);
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += static_cast<std::size_t>(y);
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw MetricError("roc_auc needs both positives and negatives");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    // midranks, 1-based
    double pos_rank_sum = 0.0;
    for (std::size_t lo = 0; lo < n;) {
        std::size_t hi = lo;
        while (hi + 1 < n && scores[order[hi + 1]] == scores[order[lo]]) ++hi;
        const double midrank = 0.5 * static_cast<double>(lo + hi) + 1.0;
        for (std::size_t k = lo; k <= hi; ++k) {
            if (labels[order[k]] == 1) pos_rank_sum += midrank;
        }
        lo = hi + 1;
    }
    const double np = static_cast<double>(n_pos);
    const double nn = static_cast<double>(n_neg);
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double average_precision(std::span<const double> scores, std::span<const int> labels) {
    check_inputs(scores, labels);
    std::size_t n_pos = 0;
    for (int y : labels) n_pos += static_cast<std::size_t>(y);
    if (n_pos == 0) throw MetricError("average_precision needs at least one positive");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        if (labels[a] != labels[b]) return labels[a] < labels[b];
        return a < b;
    });

    double ap = 0.0;
    std::size_t hits = 0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        if (labels[order[k]] != 1) continue;
        ++hits;
        // recall steps by 1/n_pos at each positive
        ap += static_cast<double>(hits) / static_cast<double>(k + 1);
    }
    return ap / static_cast<double>(n_pos);
}

EvalResult evaluate_scores(std::span<const double> scores, std::span<const int> labels,
                           double inject_rate) {
    EvalResult r;
    r.auc = roc_auc(scores, labels);
    r.ap = average_precision(scores, labels);
    for (int y : labels) (y == 1 ? r.n_pos : r.n_neg)++;
    r.inject_rate = inject_rate;
    return r;
}

nlohmann::ordered_json to_json(const EvalResult& r) {
    nlohmann::ordered_json j;
    j["auc"] = r.auc;
    j["ap"] = r.ap;
    j["n_pos"] = r.n_pos;
    j["n_neg"] = r.n_neg;
    j["inject_rate"] = r.inject_rate;
    return j;
}

}  // namespace stcad
