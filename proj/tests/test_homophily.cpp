#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace hgda;
using hgda::testing::random_graph;
using hgda::testing::random_histogram;
using hgda::testing::transport_oracle;

namespace {

Graph labeled_graph(Index n, std::vector<std::pair<Index, Index>> edges, std::vector<int> labels, int classes) {
    return Graph::from_edges(n, edges, Matrix::Zero(n, 1), std::move(labels), classes);
}

}  // namespace

TEST(NodeHomophily, TriangleAllSame) {
    const Graph g = labeled_graph(3, {{0, 1}, {1, 2}, {0, 2}}, {2, 2, 2}, 3);
    for (Index v = 0; v < 3; ++v) EXPECT_EQ(node_homophily(g, v), 1.0);
}

TEST(NodeHomophily, MixedNeighborhood) {
    // node 0 labeled 1 with neighbors labeled 1, 1, 0
    const Graph g = labeled_graph(4, {{0, 1}, {0, 2}, {0, 3}}, {1, 1, 1, 0}, 2);
    EXPECT_NEAR(*node_homophily(g, 0), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(*node_heterophily(g, 0), 1.0 / 3.0, 1e-15);
}

TEST(NodeHomophily, IsolatedIsUndefined) {
    const Graph g = labeled_graph(2, {}, {0, 1}, 2);
    EXPECT_FALSE(node_homophily(g, 0).has_value());
}

TEST(NodeHomophily, MissingLabelThrows) {
    const Graph g = labeled_graph(2, {{0, 1}}, {0, kUnknownLabel}, 2);
    EXPECT_THROW(node_homophily(g, 0), std::invalid_argument);
    EXPECT_THROW(node_homophily(g, 1), std::invalid_argument);
}

TEST(NodeHomophily, MatchesDirectCountOnRandomGraphs) {
    SplitMix64 rng(7);
    for (int trial = 0; trial < 40; ++trial) {
        const Index n = 1 + static_cast<Index>(rng.below(20));
        const Graph g = random_graph(n, rng.uniform(), 1, 1 + static_cast<int>(rng.below(4)), rng);
        const Matrix a = hgda::testing::dense_adjacency(g);
        for (Index v = 0; v < n; ++v) {
            int same = 0, deg = 0;
            for (Index u = 0; u < n; ++u) {
                if (a(v, u) == 0.0) continue;
                ++deg;
                same += (*g.labels)[u] == (*g.labels)[v];
            }
            const auto h = node_homophily(g, v);
            if (deg == 0) {
                EXPECT_FALSE(h.has_value());
                continue;
            }
            EXPECT_NEAR(*h, static_cast<double>(same) / deg, 1e-15);
            EXPECT_NEAR(*h + *node_heterophily(g, v), 1.0, 1e-15);
        }
    }
}

TEST(Binning, EdgesGoToHigherBin) {
    EXPECT_EQ(ratio_bin(0, 5), 0);
    EXPECT_EQ(ratio_bin(3, 10), 3);
    EXPECT_EQ(ratio_bin(1, 1), 9);
    EXPECT_EQ(ratio_bin(2, 3), 6);
    EXPECT_EQ(value_bin(0.3), 3);
    EXPECT_EQ(value_bin(0.7), 7);
    EXPECT_EQ(value_bin(1.0), 9);
    EXPECT_EQ(value_bin(0.0999), 0);
}

TEST(HeterophilyHistogram, AllHomophilousInFirstBin) {
    const Graph g = labeled_graph(4, {{0, 1}, {2, 3}}, {0, 0, 1, 1}, 2);
    const auto h = heterophily_histogram(g);
    EXPECT_DOUBLE_EQ(h.mass[0], 1.0);
    EXPECT_EQ(h.num_counted, 4);
}

TEST(HeterophilyHistogram, DifferingPairInLastBin) {
    const Graph g = labeled_graph(3, {{0, 1}}, {0, 1, 0}, 2);
    const auto h = heterophily_histogram(g);
    EXPECT_DOUBLE_EQ(h.mass[9], 1.0);
    EXPECT_EQ(h.num_excluded, 1);
    EXPECT_EQ(h.bin_edges[3], 0.3);
}

TEST(HeterophilyHistogram, OnlyIsolatedNodesThrows) {
    const Graph g = labeled_graph(2, {}, {0, 1}, 2);
    EXPECT_THROW(heterophily_histogram(g), std::invalid_argument);
}

TEST(HeterophilyHistogram, MassSumsToOne) {
    SplitMix64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const Graph g = random_graph(30, 0.1, 1, 3, rng);
        if (g.num_edges() == 0) continue;
        const auto h = heterophily_histogram(g);
        double total = 0.0;
        for (double m : h.mass) {
            EXPECT_GE(m, 0.0);
            total += m;
        }
        EXPECT_NEAR(total, 1.0, 1e-9);
        EXPECT_EQ(h.num_counted + h.num_excluded, g.num_nodes);
    }
}

TEST(KlHistogram, IdenticalIsZero) {
    const auto p = HomophilyHistogram::from_mass({0.2, 0.3, 0.5});
    EXPECT_EQ(kl_histogram(p, p), 0.0);
}

TEST(KlHistogram, TwoBinExample) {
    const auto p = HomophilyHistogram::from_mass({0.5, 0.5});
    const auto q = HomophilyHistogram::from_mass({0.25, 0.75});
    // direct summation on the smoothed masses
    const double z = 1.0 + kHistogramBins * kKlSmoothing;
    double oracle = 0.0;
    const double ps[] = {0.5, 0.5}, qs[] = {0.25, 0.75};
    for (int i = 0; i < 2; ++i) {
        const double a = (ps[i] + kKlSmoothing) / z, b = (qs[i] + kKlSmoothing) / z;
        oracle += a * std::log(a / b);
    }
    EXPECT_NEAR(kl_histogram(p, q), oracle, 1e-9);
    EXPECT_NEAR(kl_histogram(p, q), 0.5 * std::log(2.0) + 0.5 * std::log(2.0 / 3.0), 1e-5);
    EXPECT_NEAR(kl_histogram(p, q), 0.14384, 1e-5);
}

TEST(KlHistogram, EmptyTargetBinStaysFinite) {
    const auto p = HomophilyHistogram::from_mass({0.5, 0.5});
    const auto q = HomophilyHistogram::from_mass({1.0, 0.0});
    const double kl = kl_histogram(p, q);
    EXPECT_TRUE(std::isfinite(kl));
    const double z = 1.0 + kHistogramBins * kKlSmoothing;
    const double a0 = (0.5 + kKlSmoothing) / z, b0 = (1.0 + kKlSmoothing) / z, b1 = kKlSmoothing / z;
    EXPECT_NEAR(kl, a0 * std::log(a0 / b0) + a0 * std::log(a0 / b1), 1e-9);
}

TEST(KlHistogram, MismatchedEdgesThrow) {
    const auto p = HomophilyHistogram::from_mass({1.0});
    auto q = p;
    q.bin_edges[1] = 0.15;
    EXPECT_THROW(kl_histogram(p, q), std::invalid_argument);
    EXPECT_THROW(wasserstein1_histogram(p, q), std::invalid_argument);
}

TEST(KlHistogram, NonNegativeAndZeroOnlyWhenEqual) {
    SplitMix64 rng(13);
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = random_histogram(rng);
        const auto q = random_histogram(rng);
        EXPECT_GE(kl_histogram(p, q), 0.0);
        EXPECT_GT(kl_histogram(p, q), 0.0);
        EXPECT_EQ(kl_histogram(p, p), 0.0);
    }
}

TEST(Wasserstein, Examples) {
    const auto p = HomophilyHistogram::from_mass({1.0});
    EXPECT_EQ(wasserstein1_histogram(p, p), 0.0);
    std::array<double, kHistogramBins> last{};
    last[9] = 1.0;
    EXPECT_NEAR(wasserstein1_histogram(p, HomophilyHistogram::from_mass(last)), 0.9, 1e-12);
    EXPECT_NEAR(wasserstein1_histogram(p, HomophilyHistogram::from_mass({0.5, 0.5})), 0.05, 1e-12);
}

TEST(Wasserstein, MatchesTransportOracle) {
    SplitMix64 rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        const auto p = random_histogram(rng);
        const auto q = random_histogram(rng);
        EXPECT_NEAR(wasserstein1_histogram(p, q), transport_oracle(p, q), 1e-9);
    }
}

TEST(HistogramJson, RoundTrip) {
    SplitMix64 rng(19);
    const Graph g = random_graph(40, 0.1, 1, 3, rng);
    const auto h = heterophily_histogram(g);
    const auto j = to_json(h);
    EXPECT_TRUE(j.contains("bin_edges") && j.contains("mass") && j.contains("num_counted") && j.contains("num_excluded"));
    const auto back = histogram_from_json(nlohmann::json::parse(j.dump()));
    EXPECT_EQ(back.mass, h.mass);
    EXPECT_EQ(back.bin_edges, h.bin_edges);
    EXPECT_EQ(back.num_counted, h.num_counted);
}

TEST(SubgroupProfile, IdenticalDomainsHaveNoDifference) {
    SplitMix64 rng(23);
    const Graph g = random_graph(50, 0.15, 1, 3, rng);
    const auto prof = subgroup_profile(g, g);
    double ps = 0.0, pt = 0.0;
    for (int b = 0; b < kHistogramBins; ++b) {
        EXPECT_EQ(prof.abs_difference[b], 0.0);
        ps += prof.source_proportion[b];
        pt += prof.target_proportion[b];
    }
    EXPECT_NEAR(ps, 1.0, 1e-9);
    EXPECT_NEAR(pt, 1.0, 1e-9);
    EXPECT_TRUE(prof.target_accuracy.empty());
}

TEST(SubgroupProfile, PerfectPredictionsAndUndefinedBins) {
    SplitMix64 rng(29);
    const Graph g = random_graph(50, 0.15, 1, 3, rng);
    const auto prof = subgroup_profile(g, g, &*g.labels);
    ASSERT_EQ(prof.target_accuracy.size(), static_cast<std::size_t>(kHistogramBins));
    for (int b = 0; b < kHistogramBins; ++b) {
        if (prof.target_count[b] == 0)
            EXPECT_FALSE(prof.target_accuracy[b].has_value());
        else
            EXPECT_EQ(prof.target_accuracy[b], 1.0);
    }
}

TEST(SubgroupProfile, Errors) {
    SplitMix64 rng(31);
    Graph g = random_graph(20, 0.3, 1, 2, rng);
    const std::vector<int> short_preds(3, 0);
    EXPECT_THROW(subgroup_profile(g, g, &short_preds), std::invalid_argument);
    Graph unlabeled = g;
    (*unlabeled.labels)[0] = kUnknownLabel;
    EXPECT_THROW(subgroup_profile(g, unlabeled), std::invalid_argument);
}

TEST(Spearman, KnownValues) {
    const std::vector<double> x{1, 2, 3, 4}, y{10, 20, 30, 40}, z{4, 3, 2, 1};
    EXPECT_NEAR(*spearman(x, y), 1.0, 1e-12);
    EXPECT_NEAR(*spearman(x, z), -1.0, 1e-12);
    const std::vector<double> c{1, 1, 1, 1};
    EXPECT_FALSE(spearman(x, c).has_value());
    const std::vector<double> ties{1, 2, 2, 3};
    EXPECT_EQ(average_ranks(ties), (std::vector<double>{1, 2.5, 2.5, 4}));
}
