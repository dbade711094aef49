#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "stcad/sampler.hpp"
#include "stcad/synthetic.hpp"

using namespace stcad;

namespace {

// n_snap snapshots of `per` edges each over `nodes` nodes, random but sparse.
SnapshotSeries random_series(std::size_t nodes, std::size_t n_snap, std::size_t per,
                             std::uint64_t seed) {
    Rng rng(seed);
    std::vector<Snapshot> snaps;
    for (std::size_t t = 0; t < n_snap; ++t) {
        std::vector<EdgeInstance> e;
        while (e.size() < per) {
            auto a = static_cast<NodeId>(rng.below(nodes));
            auto b = static_cast<NodeId>(rng.below(nodes));
            if (a != b) e.push_back({a, b, static_cast<double>(e.size())});
        }
        snaps.emplace_back(t, e);
    }
    return SnapshotSeries(nodes, snaps);
}

}  // namespace

TEST(SampleContext, DrawsDistinctPoolMembers) {
    // pool of 7 around (0,1)
    Snapshot s(0, {{0, 1, 0}, {0, 2, 0}, {0, 3, 0}, {0, 4, 0}, {1, 5, 0}, {1, 6, 0}, {1, 7, 0},
                   {1, 8, 0}, {2, 9, 0}});
    Rng rng(3);
    auto ctx = sample_context(s, 0, 1, 5, rng);
    ASSERT_EQ(ctx.size(), 5u);
    std::set<NodeId> seen(ctx.begin(), ctx.end());
    EXPECT_EQ(seen.size(), 5u);
    for (NodeId v : ctx) {
        EXPECT_GE(v, 2u);
        EXPECT_LE(v, 8u);
    }
}

TEST(SampleContext, PadsWithEndpoints) {
    Snapshot s(0, {{0, 7, 0}, {1, 8, 0}});
    Rng rng(1);
    EXPECT_EQ(sample_context(s, 0, 1, 5, rng), (std::vector<NodeId>{7, 8, 0, 1, 0}));
}

TEST(SampleContext, AbsentEndpointsGivePurePadding) {
    Snapshot s(0, {{5, 6, 0}});
    Rng rng(1);
    EXPECT_EQ(sample_context(s, 0, 1, 5, rng), (std::vector<NodeId>{0, 1, 0, 1, 0}));
}

TEST(SampleContext, StaysInsideNeighborhood) {
    Rng rng(8);
    for (int trial = 0; trial < 100; ++trial) {
        auto s = oracle::random_snapshot(20, 0.15, rng);
        NodeId i = static_cast<NodeId>(rng.below(20));
        NodeId j = static_cast<NodeId>((i + 1 + rng.below(19)) % 20);
        auto ctx = sample_context(s, i, j, 5, rng);
        for (NodeId v : ctx) {
            const bool ok = v == i || v == j || s.contains_pair(NodePair(v, i)) ||
                            s.contains_pair(NodePair(v, j));
            EXPECT_TRUE(ok) << "node " << v;
        }
    }
}

TEST(BuildSample, ShapeAtDefaults) {
    auto series = random_series(30, 6, 40, 1);
    Rng rng(2);
    auto sample = build_sample(series, 4, 0, 1, 0, 5, 4, rng);
    EXPECT_EQ(sample.timesteps(), 4u);
    EXPECT_EQ(sample.sequence_length(), 28u);
    for (const auto& seq : sample.window) {
        ASSERT_EQ(seq.size(), 7u);
        EXPECT_EQ(seq[0], 0u);
        EXPECT_EQ(seq[1], 1u);
    }
    EXPECT_EQ(sample.snapshot_at(0), 1u);
    EXPECT_EQ(sample.snapshot_at(3), 4u);
}

TEST(BuildSample, SingleStepWindow) {
    auto series = random_series(30, 3, 40, 1);
    Rng rng(2);
    auto sample = build_sample(series, 0, 0, 1, 0, 5, 1, rng);
    EXPECT_EQ(sample.window.size(), 1u);
}

TEST(BuildSample, InsufficientHistory) {
    auto series = random_series(30, 6, 40, 1);
    Rng rng(2);
    try {
        build_sample(series, 1, 0, 1, 0, 5, 4, rng);
        FAIL() << "expected SamplingError";
    } catch (const SamplingError& e) {
        EXPECT_NE(std::string(e.what()).find("insufficient history"), std::string::npos);
    }
}

TEST(NegativeEdge, ComplementOfSingleEdge) {
    std::vector<Snapshot> snaps{Snapshot(0, {{0, 1, 0}})};
    SnapshotSeries series(4, snaps);
    Rng rng(5);
    std::set<std::pair<NodeId, NodeId>> allowed{{0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    for (int k = 0; k < 1000; ++k) {
        auto [u, v] = sample_negative_edge(series, rng);
        EXPECT_TRUE(allowed.contains({std::min(u, v), std::max(u, v)}));
    }
}

TEST(NegativeEdge, NeverOccursOverManyDraws) {
    auto series = random_series(60, 5, 80, 9);
    Rng rng(6);
    for (int k = 0; k < 10000; ++k) {
        auto [u, v] = sample_negative_edge(series, rng);
        ASSERT_NE(u, v);
        ASSERT_FALSE(first_occurrence_snapshot(NodePair(u, v), series.snapshots()));
    }
}

TEST(NegativeEdge, CompleteGraphIsAnError) {
    std::vector<Snapshot> snaps{Snapshot(0, {{0, 1, 0}, {1, 2, 1}}), Snapshot(1, {{0, 2, 2}})};
    SnapshotSeries series(3, snaps);
    Rng rng(1);
    EXPECT_THROW(sample_negative_edge(series, rng), SamplingError);
}

TEST(Spans, HalfOfFifteen) {
    auto span = training_span(15, 0.5, 4);
    EXPECT_EQ(span.first, 3u);
    EXPECT_EQ(span.last, 6u);
    auto test = test_span(15, 0.5, 4);
    EXPECT_EQ(test.first, 7u);
    EXPECT_EQ(test.last, 14u);
    EXPECT_THROW(training_span(15, 0.2, 4), SamplingError);  // floor(3) < T
    EXPECT_NO_THROW(training_span(20, 0.2, 4));
}

TEST(TrainingSet, BalancedPerSnapshot) {
    auto series = random_series(50, 8, 100, 4);
    auto set = build_training_set(series, 0.5, 5, 4, 11);
    std::map<std::size_t, std::pair<int, int>> counts;
    for (const auto& s : set) {
        auto& c = counts[s.window_end];
        (s.label == 0 ? c.first : c.second) += 1;
    }
    ASSERT_EQ(counts.size(), 1u);  // only window end 3
    EXPECT_EQ(counts[3].first, 100);
    EXPECT_EQ(counts[3].second, 100);
}

TEST(TestSet, CeilingCounts) {
    auto big = random_series(400, 2, 1000, 4);
    auto set = build_test_set(big, 0.5, 0.10, 5, 1, 3);
    EXPECT_EQ(std::count_if(set.begin(), set.end(), [](auto& s) { return s.label == 1; }), 100);

    auto small = random_series(60, 2, 50, 4);
    auto tiny = build_test_set(small, 0.5, 0.01, 5, 1, 3);
    EXPECT_EQ(std::count_if(tiny.begin(), tiny.end(), [](auto& s) { return s.label == 1; }), 1);
}

TEST(TestSet, InjectedPairsAbsentEverywhere) {
    auto series = random_series(80, 8, 120, 21);
    auto set = build_test_set(series, 0.5, 0.10, 5, 4, 5);
    std::size_t positives = 0;
    for (const auto& s : set) {
        if (s.label != 1) continue;
        ++positives;
        for (const auto& snap : series.snapshots()) {
            ASSERT_FALSE(snap.contains_pair(NodePair(s.i, s.j)));
        }
    }
    EXPECT_EQ(positives, 4u * 12u);
}

TEST(TestSet, FilterRestrictsInjectedPairs) {
    SyntheticConfig cfg;
    auto syn = make_planted_graph(cfg);
    SnapshotSeries series(syn.graph, syn.snapshot_size);
    auto set = build_test_set(series, 0.5, 0.10, 5, 4, 1, syn.cross_community());
    for (const auto& s : set) {
        if (s.label == 1) {
            EXPECT_NE(syn.community[s.i], syn.community[s.j]);
        }
    }
}

TEST(TestSet, ZeroRateHasNoPositives) {
    auto series = random_series(50, 8, 100, 4);
    try {
        build_test_set(series, 0.5, 0.0, 5, 4, 1);
        FAIL() << "expected SamplingError";
    } catch (const SamplingError& e) {
        EXPECT_NE(std::string(e.what()).find("no positives"), std::string::npos);
    }
}

TEST(Samples, DeterministicDump) {
    auto series = random_series(50, 8, 100, 4);
    std::ostringstream a, b;
    write_samples_jsonl(a, build_training_set(series, 0.5, 5, 4, 77), "train");
    write_samples_jsonl(b, build_training_set(series, 0.5, 5, 4, 77), "train");
    EXPECT_EQ(a.str(), b.str());
    std::ostringstream c;
    write_samples_jsonl(c, build_training_set(series, 0.5, 5, 4, 78), "train");
    EXPECT_NE(a.str(), c.str());
    EXPECT_EQ(a.str().rfind("{\"split\":\"train\",\"i\":", 0), 0u);
}
