#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "stcad/features.hpp"

using namespace stcad;

TEST(PageRank, TwoNodesSplitEvenly) {
    Snapshot s(0, {{0, 1, 0}});
    auto r = pagerank(s);
    EXPECT_NEAR(r.at(0), 0.5, 1e-12);
    EXPECT_NEAR(r.at(1), 0.5, 1e-12);
}

TEST(PageRank, SingleIsolatedNode) {
    std::vector<NodeId> only{4};
    Snapshot s(0, {}, only);
    auto r = pagerank(s);
    ASSERT_EQ(r.size(), 1u);
    EXPECT_DOUBLE_EQ(r.at(4), 1.0);
}

TEST(PageRank, StarMatchesDenseOracle) {
    Snapshot star(0, {{0, 1, 0}, {0, 2, 1}});
    auto r = pagerank(star, 0.85, 1e-8, 100);
    auto o = oracle::dense_pagerank(star, 0.85, 2000);
    for (auto [v, score] : o) EXPECT_NEAR(r.at(v), score, 1e-8) << "node " << v;
}

TEST(PageRank, RandomGraphsMatchOracleAndSumToOne) {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        auto s = oracle::random_snapshot(2 + rng.below(29), rng.uniform(0.05, 0.5), rng);
        auto r = pagerank(s, 0.85, 1e-8, 100);
        auto o = oracle::dense_pagerank(s, 0.85, 2000);
        double total = 0.0;
        for (auto [v, score] : o) {
            EXPECT_NEAR(r.at(v), score, 1e-8);
            EXPECT_GT(r.at(v), 0.0);
            EXPECT_LE(r.at(v), 1.0);
            total += r.at(v);
        }
        EXPECT_NEAR(total, 1.0, 1e-9);
    }
}

TEST(ShortestDistance, Basics) {
    Snapshot path(0, {{0, 1, 0}, {1, 2, 1}, {2, 3, 2}});
    EXPECT_EQ(shortest_distance(path, 2, 2, 5), 0u);
    EXPECT_EQ(shortest_distance(path, 0, 1, 5), 1u);
    EXPECT_EQ(shortest_distance(path, 0, 3, 5), 3u);
    EXPECT_EQ(shortest_distance(path, 0, 3, 2), 2u);
    EXPECT_EQ(shortest_distance(path, 0, 42, 5), 5u);
}

TEST(ShortestDistance, MatchesFloydWarshall) {
    Rng rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t cap = 1 + rng.below(6);
        auto s = oracle::random_snapshot(1 + rng.below(30), rng.uniform(0.02, 0.3), rng);
        auto d = oracle::floyd_warshall(s, cap);
        for (auto [ab, dist] : d) {
            ASSERT_EQ(shortest_distance(s, ab.first, ab.second, cap), dist)
                << "trial " << trial << " pair " << ab.first << "," << ab.second;
        }
    }
}

TEST(ShortestDistance, SymmetricAndTriangleBelowCap) {
    Rng rng(4);
    const std::size_t cap = 5;
    for (int trial = 0; trial < 30; ++trial) {
        auto s = oracle::random_snapshot(15, 0.15, rng);
        for (NodeId a = 0; a < 15; ++a)
            for (NodeId b = 0; b < 15; ++b) {
                const auto ab = shortest_distance(s, a, b, cap);
                EXPECT_EQ(ab, shortest_distance(s, b, a, cap));
                for (NodeId c = 0; c < 15; ++c) {
                    const auto bc = shortest_distance(s, b, c, cap);
                    const auto ac = shortest_distance(s, a, c, cap);
                    if (ab + bc < cap) {
                        EXPECT_LE(ac, ab + bc);
                    }
                }
            }
    }
}

TEST(CommonNeighbors, Count) {
    Snapshot s(0, {{0, 2, 0}, {1, 2, 0}, {0, 3, 0}, {1, 3, 0}, {0, 4, 0}});
    EXPECT_EQ(common_neighbor_count(s, 0, 1), 2u);
    EXPECT_EQ(common_neighbor_count(s, 0, 9), 0u);
}

namespace {

// Five snapshots; pair (0,1) first appears in snapshot 2.
SnapshotSeries lifetime_series() {
    std::vector<Snapshot> snaps;
    for (std::size_t t = 0; t < 5; ++t) {
        std::vector<EdgeInstance> e{{5, 6, 0}, {0, 7, 0}};
        if (t >= 2) e.push_back({0, 1, 0});
        snaps.emplace_back(t, e);
    }
    return SnapshotSeries(8, snaps);
}

}  // namespace

TEST(Level1, EdgeLifetime) {
    auto series = lifetime_series();
    FeatureExtractor fx(series);
    EXPECT_DOUBLE_EQ(fx.level1(4, 0, 1, 7).tmp, 2.0);
    EXPECT_DOUBLE_EQ(fx.level1(2, 0, 1, 7).tmp, 0.0);
    EXPECT_DOUBLE_EQ(fx.level1(1, 0, 1, 7).tmp, 0.0);  // before the first occurrence
    EXPECT_DOUBLE_EQ(fx.level1(4, 5, 0, 7).tmp, 0.0);  // never occurs
}

TEST(Level1, EndpointDistanceIsZeroAndContextIsOne) {
    auto series = lifetime_series();
    FeatureExtractor fx(series);
    EXPECT_DOUBLE_EQ(fx.level1(3, 0, 1, 0).loc, 0.0);
    EXPECT_DOUBLE_EQ(fx.level1(3, 0, 1, 1).loc, 0.0);
    EXPECT_DOUBLE_EQ(fx.level1(3, 0, 1, 7).loc, 1.0);
    EXPECT_DOUBLE_EQ(fx.level1(3, 0, 1, 5).loc, 5.0);  // other component
    EXPECT_DOUBLE_EQ(fx.level1(3, 0, 1, 0).glo, fx.pagerank_score(3, 0));
    EXPECT_DOUBLE_EQ(fx.pagerank_score(3, 3), 0.0);  // absent node
}

TEST(Level1, LocMatchesOracleMinimum) {
    Rng rng(12);
    std::vector<Snapshot> snaps;
    snaps.push_back(oracle::random_snapshot(25, 0.1, rng));
    SnapshotSeries series(25, snaps);
    FeatureExtractor fx(series);
    auto d = oracle::floyd_warshall(series[0], 5);
    for (NodeId i = 0; i < 25; ++i)
        for (NodeId j = i + 1; j < 25; j += 3)
            for (NodeId v = 0; v < 25; ++v) {
                const double want = static_cast<double>(std::min(d.at({v, i}), d.at({v, j})));
                ASSERT_DOUBLE_EQ(fx.level1(0, i, j, v).loc, want);
            }
}

TEST(Coupling, DistanceChange) {
    // endpoints 0 and 1 two hops apart in the previous snapshot
    std::vector<Snapshot> snaps{Snapshot(0, {{0, 2, 0}, {2, 1, 0}}), Snapshot(1, {{0, 1, 0}})};
    SnapshotSeries series(3, snaps);
    FeatureExtractor fx(series);
    auto d = oracle::floyd_warshall(snaps[0], 5);
    EXPECT_DOUBLE_EQ(fx.coupling(1, 0, 1).dc, static_cast<double>(d.at({0, 1}) - 1));
    EXPECT_DOUBLE_EQ(fx.coupling(1, 0, 1).dc, 1.0);
}

TEST(Coupling, InteractionAndNeighborChange) {
    // t-1: deg(0)=2, deg(1)=2, common {a}; t: deg(0)=3, deg(1)=2, common {a, b}
    const NodeId a = 2, b = 3, c = 4, e = 5;
    std::vector<Snapshot> snaps{
        Snapshot(0, {{0, a, 0}, {1, a, 0}, {0, c, 0}, {1, e, 0}}),
        Snapshot(1, {{0, a, 0}, {1, a, 0}, {0, b, 0}, {1, b, 0}, {0, c, 0}}),
    };
    SnapshotSeries series(6, snaps);
    FeatureExtractor fx(series);
    auto f = fx.coupling(1, 0, 1);
    EXPECT_DOUBLE_EQ(f.ic, 1.0);
    EXPECT_DOUBLE_EQ(f.nc, 1.0);
}

TEST(Coupling, ZeroWithoutPreviousSnapshot) {
    auto series = lifetime_series();
    FeatureExtractor fx(series);
    auto f = fx.coupling(0, 0, 1);
    EXPECT_EQ(f.dc, 0.0);
    EXPECT_EQ(f.ic, 0.0);
    EXPECT_EQ(f.nc, 0.0);
}

TEST(Coupling, SharedByEveryNodeAndWithinBounds) {
    Rng rng(31);
    std::vector<Snapshot> snaps;
    for (std::size_t t = 0; t < 4; ++t) {
        auto s = oracle::random_snapshot(20, 0.12, rng, t);
        snaps.emplace_back(t, std::vector<EdgeInstance>(s.instances().begin(), s.instances().end()));
    }
    SnapshotSeries series(20, snaps);
    FeatureConfig cfg;
    FeatureExtractor fx(series, cfg);
    for (std::size_t t = 0; t < 4; ++t)
        for (NodeId i = 0; i < 20; ++i)
            for (NodeId j = i + 1; j < 20; ++j) {
                auto first = fx.node_features(t, i, j, 0);
                for (NodeId v = 1; v < 20; ++v) {
                    auto f = fx.node_features(t, i, j, v);
                    EXPECT_EQ(f.dc, first.dc);
                    EXPECT_EQ(f.ic, first.ic);
                    EXPECT_EQ(f.nc, first.nc);
                    for (double x : f.as_array()) {
                        EXPECT_TRUE(std::isfinite(x));
                        EXPECT_GE(x, 0.0);
                    }
                    EXPECT_LE(f.loc, static_cast<double>(cfg.dist_cap));
                    EXPECT_LE(f.dc, static_cast<double>(cfg.dist_cap - 1));
                    EXPECT_LE(f.glo, 1.0);
                }
            }
}

TEST(Features, ZeroDeltaRejected) {
    auto series = lifetime_series();
    FeatureConfig cfg;
    cfg.delta_t = 0;
    EXPECT_THROW(FeatureExtractor(series, cfg), std::invalid_argument);
}

TEST(Features, CsvDump) {
    std::ostringstream os;
    write_feature_csv(os, {{3, 1, 7, {0.25, 1, 2, 0, 1, 0}}});
    EXPECT_EQ(os.str(),
              "sample_id,t,node,f_glo,f_loc,f_tmp,f_dc,f_ic,f_nc\n3,1,7,0.25,1,2,0,1,0\n");
}
