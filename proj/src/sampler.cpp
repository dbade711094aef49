#include "stcad/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include <json.hpp>

namespace stcad {

namespace {

std::uint64_t sample_seed(std::uint64_t seed, std::size_t window_end, NodeId i, NodeId j) {
    return derive_seed(seed, "context", window_end, i, j);
}

void check_shape(std::size_t C, std::size_t T) {
    if (C == 0) throw SamplingError("context size C must be at least 1");
    if (T == 0) throw SamplingError("window length T must be at least 1");
}

void append_snapshot(std::vector<EdgeSample>& out, const SnapshotSeries& series, std::size_t t,
                     std::size_t n_anomalies, std::size_t C, std::size_t T, std::uint64_t seed,
                     const PairFilter& accept) {
    for (const auto& e : series[t].instances()) {
        Rng rng(sample_seed(seed, t, e.source, e.target));
        out.push_back(build_sample(series, t, e.source, e.target, 0, C, T, rng));
    }
    Rng neg(derive_seed(seed, "negative", t));
    for (std::size_t k = 0; k < n_anomalies; ++k) {
        auto [u, v] = sample_negative_edge(series, neg, 100000, accept);
        Rng rng(sample_seed(seed, t, u, v));
        out.push_back(build_sample(series, t, u, v, 1, C, T, rng));
    }
}

}  // namespace

std::vector<NodeId> sample_context(const Snapshot& s, NodeId i, NodeId j, std::size_t C,
                                   Rng& rng) {
    if (C == 0) throw SamplingError("context size C must be at least 1");
    std::vector<NodeId> pool;
    auto ni = s.neighbors(i);
    auto nj = s.neighbors(j);
    pool.reserve(ni.size() + nj.size());
    std::set_union(ni.begin(), ni.end(), nj.begin(), nj.end(), std::back_inserter(pool));
    std::erase_if(pool, [&](NodeId v) { return v == i || v == j; });

    std::vector<NodeId> out;
    out.reserve(C);
    if (pool.size() >= C) {
        // partial Fisher-Yates
        for (std::size_t k = 0; k < C; ++k) {
            auto pick = k + rng.below(pool.size() - k);
            std::swap(pool[k], pool[pick]);
            out.push_back(pool[k]);
        }
        return out;
    }
    out = pool;
    for (std::size_t k = 0; out.size() < C; ++k) out.push_back(k % 2 == 0 ? i : j);
    return out;
}

EdgeSample build_sample(const SnapshotSeries& series, std::size_t window_end, NodeId i, NodeId j,
                        int label, std::size_t C, std::size_t T, Rng& rng) {
    check_shape(C, T);
    if (window_end + 1 < T) throw SamplingError("insufficient history");
    if (window_end >= series.size()) throw SamplingError("window end beyond last snapshot");
    EdgeSample sample;
    sample.i = i;
    sample.j = j;
    sample.label = label;
    sample.window_end = window_end;
    sample.window.reserve(T);
    for (std::size_t t = 0; t < T; ++t) {
        const Snapshot& snap = series[window_end + 1 + t - T];
        std::vector<NodeId> seq{i, j};
        auto ctx = sample_context(snap, i, j, C, rng);
        seq.insert(seq.end(), ctx.begin(), ctx.end());
        sample.window.push_back(std::move(seq));
    }
    return sample;
}

std::pair<NodeId, NodeId> sample_negative_edge(const SnapshotSeries& series, Rng& rng,
                                               std::size_t max_tries, const PairFilter& accept) {
    const std::uint64_t n = series.node_count();
    if (n < 2) throw SamplingError("negative sampling needs at least two nodes");
    if (series.distinct_pair_count() >= n * (n - 1) / 2) {
        throw SamplingError("graph is complete; no never-seen pair exists");
    }
    for (std::size_t attempt = 0; attempt < max_tries; ++attempt) {
        auto u = static_cast<NodeId>(rng.below(n));
        auto v = static_cast<NodeId>(rng.below(n));
        if (u == v) continue;
        if (series.ever_occurs(NodePair(u, v))) continue;
        if (accept && !accept(u, v)) continue;
        return {u, v};
    }
    throw SamplingError("negative sampling exhausted " + std::to_string(max_tries) + " tries");
}

SampleSpan training_span(std::size_t n_snapshots, double split_fraction, std::size_t T) {
    if (!(split_fraction > 0.0 && split_fraction <= 1.0)) {
        throw SamplingError("split fraction must lie in (0, 1]");
    }
    auto end = static_cast<std::size_t>(std::floor(split_fraction * static_cast<double>(n_snapshots)));
    if (T == 0 || end < T) {
        throw SamplingError("no eligible training snapshot: need at least T snapshots in the "
                            "training span");
    }
    return {T - 1, end - 1};
}

SampleSpan test_span(std::size_t n_snapshots, double split_fraction, std::size_t T) {
    if (!(split_fraction > 0.0 && split_fraction <= 1.0)) {
        throw SamplingError("split fraction must lie in (0, 1]");
    }
    auto start = static_cast<std::size_t>(std::floor(split_fraction * static_cast<double>(n_snapshots)));
    start = std::max(start, T == 0 ? 0 : T - 1);
    if (start >= n_snapshots) throw SamplingError("no eligible test snapshot");
    return {start, n_snapshots - 1};
}

std::vector<EdgeSample> build_training_set(const SnapshotSeries& series, double split_fraction,
                                           std::size_t C, std::size_t T, std::uint64_t seed) {
    check_shape(C, T);
    auto span = training_span(series.size(), split_fraction, T);
    std::vector<EdgeSample> out;
    for (std::size_t t = span.first; t <= span.last; ++t) {
        append_snapshot(out, series, t, series[t].instances().size(), C, T,
                        derive_seed(seed, "train"), {});
    }
    return out;
}

std::vector<EdgeSample> build_test_set(const SnapshotSeries& series, double split_fraction,
                                       double inject_rate, std::size_t C, std::size_t T,
                                       std::uint64_t seed, const PairFilter& accept) {
    check_shape(C, T);
    if (!(inject_rate > 0.0)) throw SamplingError("no positives: injection rate must be > 0");
    if (inject_rate > 1.0) throw SamplingError("injection rate must be at most 1");
    auto span = test_span(series.size(), split_fraction, T);
    std::vector<EdgeSample> out;
    for (std::size_t t = span.first; t <= span.last; ++t) {
        const auto count = series[t].instances().size();
        // ceil without floating noise turning e.g. 0.1 * 1000 into 101
        auto n_anomalies = static_cast<std::size_t>(
            std::ceil(inject_rate * static_cast<double>(count) - 1e-9));
        append_snapshot(out, series, t, n_anomalies, C, T, derive_seed(seed, "test"), accept);
    }
    return out;
}

std::vector<EdgeSample> build_candidate_samples(const SnapshotSeries& series,
                                                std::size_t window_end,
                                                const std::vector<std::pair<NodeId, NodeId>>& pairs,
                                                std::size_t C, std::size_t T, std::uint64_t seed) {
    std::vector<EdgeSample> out;
    out.reserve(pairs.size());
    for (auto [u, v] : pairs) {
        Rng rng(sample_seed(derive_seed(seed, "rank"), window_end, u, v));
        out.push_back(build_sample(series, window_end, u, v, 0, C, T, rng));
    }
    return out;
}

void write_samples_jsonl(std::ostream& out, const std::vector<EdgeSample>& samples,
                         std::string_view split) {
    for (const auto& s : samples) {
        nlohmann::ordered_json j;
        if (!split.empty()) j["split"] = split;
        j["i"] = s.i;
        j["j"] = s.j;
        j["label"] = s.label;
        j["window_end"] = s.window_end;
        j["window"] = s.window;
        out << j.dump() << '\n';
    }
}

}  // namespace stcad
