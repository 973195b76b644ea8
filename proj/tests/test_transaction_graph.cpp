#include <gtest/gtest.h>

#include "ammlens/transaction_graph.hpp"
#include "oracles.hpp"

using namespace ammlens;

namespace {

TransactionGraph graph_at(const std::vector<Timestamp>& ts, const std::vector<std::string>& labels = {}) {
    TransactionGraph g;
    g.lt_id = "lt";
    for (std::size_t i = 0; i < ts.size(); ++i)
        g.nodes.push_back({ts[i], labels.empty() ? "P" : labels[i]});
    return g;
}

}  // namespace

TEST(CutValue, WorkedExample) {
    CutParams p{60.0, 3600.0, 20};
    EXPECT_NEAR(cut_value(300.0, p), 0.4111, 5e-4);
    EXPECT_NEAR(cut_value(300.0, p), std::exp(-0.5 * (240.0 / 180.0) * (240.0 / 180.0)), 1e-15);
    EXPECT_EQ(cut_value(60.0, p), 1.0);
    double prev = 1.0;
    for (double w = 60; w <= 3600; w += 10) {
        EXPECT_LE(cut_value(w, p), prev);
        prev = cut_value(w, p);
    }
}

TEST(CutValue, ParamsFromGraph) {
    // 20 swaps: one 60 s gap, the rest wider, spanning exactly 3600 s
    std::vector<Timestamp> ts{0, 60};
    for (int i = 1; i <= 18; ++i) ts.push_back(60 + i * 3540 / 18);
    const auto p = cut_params(graph_at(ts));
    EXPECT_EQ(p.n_nodes, 20u);
    EXPECT_EQ(p.min_w, 60.0);
    EXPECT_EQ(p.max_w, 3600.0);
    EXPECT_EQ(cut_value(0.0, cut_params(graph_at({5, 5, 5}))), 1.0);
    EXPECT_THROW(cut_params(graph_at({1})), ValidationError);
}

TEST(Sampling, FrequenciesMatchCutValues) {
    const auto g = graph_at({0, 30, 100, 180, 400, 700, 1300, 1500, 2400, 3000});
    const auto p = cut_params(g);
    const int draws = 10000;
    std::vector<std::vector<int>> hits(g.size(), std::vector<int>(g.size(), 0));
    for (int d = 0; d < draws; ++d) {
        const auto nb = sample_neighbourhoods(g, static_cast<std::uint64_t>(d));
        for (std::size_t s = 0; s < g.size(); ++s)
            for (auto r : nb[s]) ++hits[s][r];
    }
    for (std::size_t s = 0; s < g.size(); ++s)
        for (std::size_t r = 0; r < g.size(); ++r) {
            if (r == s) {
                EXPECT_EQ(hits[s][r], 0);
                continue;
            }
            EXPECT_NEAR(hits[s][r] / static_cast<double>(draws), cut_value(g.weight(s, r), p), 0.02)
                << s << "->" << r;
        }
}

TEST(Sampling, DeterministicPerSeed) {
    const auto g = graph_at({0, 30, 100, 180, 400, 700, 1300});
    EXPECT_EQ(sample_neighbourhoods(g, 42), sample_neighbourhoods(g, 42));
    bool differs = false;
    for (std::uint64_t s = 0; s < 20 && !differs; ++s)
        differs = sample_neighbourhoods(g, s) != sample_neighbourhoods(g, s + 100);
    EXPECT_TRUE(differs);
}

TEST(WL, DepthOneTokens) {
    const auto g = graph_at({0, 10, 20}, {"B", "A", "C"});
    const Neighbourhoods nb{{1, 2}, {}, {0}};
    const auto bag = wl_relabel(g, nb);
    const FeatureBag expect{{"A", 1}, {"B", 1}, {"C", 1}, {"A|", 1}, {"B|A,C", 1}, {"C|B", 1}};
    EXPECT_EQ(bag, expect);
    EXPECT_THROW(wl_relabel(g, nb, 2), ValidationError);
    EXPECT_THROW(wl_relabel(g, Neighbourhoods(2)), ValidationError);
}

TEST(TransactionGraphs, BuildAndFilter) {
    EventLog log;
    log.pools = {{"P", {"P", "X", "Y", 500, 0, 0}}, {"Q", {"Q", "X", "Z", 500, 0, 0}}};
    for (int i = 0; i < 5; ++i) log.swaps.push_back({"a" + std::to_string(i), 0, 100 - i, "P", "alice", "s", "r", 1, 1, -1, 1});
    log.swaps.push_back({"b0", 0, 50, "Q", "bob", "s", "r", 1, 1, -1, 1});
    log.swaps.push_back({"b1", 0, 60, "P", "bob", "s", "r", 1, 1, -1, 1});
    log.swaps.push_back({"c0", 0, 60, "Q", "carol", "s", "r", 1, 1, -1, 1});
    log.normalize();
    const auto w = make_window("w", 0, 1000);
    EXPECT_EQ(filter_lts(log, {"P", "Q"}, w, 2, 4), std::set<AgentId>{"bob"});
    EXPECT_EQ(filter_lts(log, {"P", "Q"}, w, 2, 5), (std::set<AgentId>{"alice", "bob"}));
    EXPECT_THROW(filter_lts(log, {"P"}, w, 1, 5), ValidationError);
    const auto gs = build_transaction_graphs(log, {"alice", "bob"}, {"P", "Q"}, w);
    ASSERT_EQ(gs.size(), 2u);
    EXPECT_EQ(gs[0].lt_id, "alice");
    for (std::size_t i = 1; i < gs[0].size(); ++i) EXPECT_LT(gs[0].nodes[i - 1].ts, gs[0].nodes[i].ts);
    EXPECT_EQ(gs[1].nodes[0].label, "Q");
    EXPECT_THROW(build_transaction_graphs(log, {"carol"}, {"P", "Q"}, w), ValidationError);
    EXPECT_THROW(check_label("A|B"), ValidationError);
}
