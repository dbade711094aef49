#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string_view>
#include <utility>
#include <vector>

#include "stcad/graph.hpp"
#include "stcad/rng.hpp"

namespace stcad {

class SamplingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A labelled candidate edge with its context window. `window[t]` holds the
/// node sequence [i, j, c_1..c_C] drawn from snapshot window_end - T + 1 + t.
struct EdgeSample {
    NodeId i = 0;
    NodeId j = 0;
    int label = 0;  // 0 = normal, 1 = anomalous
    std::size_t window_end = 0;
    std::vector<std::vector<NodeId>> window;

    std::size_t timesteps() const { return window.size(); }
    std::size_t sequence_length() const {
        return window.empty() ? 0 : window.size() * window.front().size();
    }
    /// Absolute snapshot index of window position t.
    std::size_t snapshot_at(std::size_t t) const { return window_end + 1 + t - window.size(); }
};

/// Optional restriction on which never-seen pairs may be drawn as anomalies.
using PairFilter = std::function<bool(NodeId, NodeId)>;

/// C context nodes from (N(i) ∪ N(j)) \ {i, j}; drawn without replacement
/// when the pool is large enough, otherwise the whole pool padded with
/// i, j, i, j, ...
std::vector<NodeId> sample_context(const Snapshot& s, NodeId i, NodeId j, std::size_t C, Rng& rng);

EdgeSample build_sample(const SnapshotSeries& series, std::size_t window_end, NodeId i, NodeId j,
                        int label, std::size_t C, std::size_t T, Rng& rng);

/// Uniform pair (u != v) that never occurs in any snapshot.
std::pair<NodeId, NodeId> sample_negative_edge(const SnapshotSeries& series, Rng& rng,
                                               std::size_t max_tries = 100000,
                                               const PairFilter& accept = {});

struct SampleSpan {
    std::size_t first = 0;  // inclusive window_end
    std::size_t last = 0;   // inclusive window_end
};

/// Window ends used for training: T-1 .. floor(split * n) - 1.
SampleSpan training_span(std::size_t n_snapshots, double split_fraction, std::size_t T);
/// Window ends used for testing: max(floor(split * n), T-1) .. n-1.
SampleSpan test_span(std::size_t n_snapshots, double split_fraction, std::size_t T);

/// Every edge instance of each training snapshot as a normal sample plus the
/// same number of injected never-seen pairs.
std::vector<EdgeSample> build_training_set(const SnapshotSeries& series, double split_fraction,
                                           std::size_t C, std::size_t T, std::uint64_t seed);

/// Every edge instance of each test snapshot as a normal sample plus
/// ceil(inject_rate * count) injected anomalies.
std::vector<EdgeSample> build_test_set(const SnapshotSeries& series, double split_fraction,
                                       double inject_rate, std::size_t C, std::size_t T,
                                       std::uint64_t seed, const PairFilter& accept = {});

/// Samples scoring arbitrary candidate pairs against the window ending at
/// `window_end`. Labels are set to 0.
std::vector<EdgeSample> build_candidate_samples(const SnapshotSeries& series,
                                                std::size_t window_end,
                                                const std::vector<std::pair<NodeId, NodeId>>& pairs,
                                                std::size_t C, std::size_t T, std::uint64_t seed);

/// JSON-lines dump, one sample per line. A nonempty `split` is added as a
/// "split" field.
void write_samples_jsonl(std::ostream& out, const std::vector<EdgeSample>& samples,
                         std::string_view split = {});

}  // namespace stcad
