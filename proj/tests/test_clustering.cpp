#include <gtest/gtest.h>

#include "ammlens/clustering.hpp"
#include "ammlens/lt_profile.hpp"
#include "oracles.hpp"

using namespace ammlens;

namespace {

std::vector<int> random_labels(Rng& rng, int n, int k) {
    std::vector<int> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    return v;
}

Points blobs(Rng& rng, int per, const std::vector<std::vector<double>>& centres, double sd) {
    Points x(static_cast<Eigen::Index>(per * centres.size()), static_cast<Eigen::Index>(centres[0].size()));
    for (std::size_t c = 0; c < centres.size(); ++c)
        for (int i = 0; i < per; ++i)
            for (std::size_t d = 0; d < centres[c].size(); ++d)
                x(static_cast<Eigen::Index>(c * per + i), static_cast<Eigen::Index>(d)) = centres[c][d] + sd * rng.normal();
    return x;
}

}  // namespace

TEST(ARI, HandCases) {
    EXPECT_NEAR(adjusted_rand_index({0, 0, 1, 1}, {0, 1, 0, 1}), -0.5, 1e-12);
    EXPECT_EQ(adjusted_rand_index({0, 0, 1, 1}, {5, 5, 9, 9}), 1.0);
    EXPECT_EQ(adjusted_rand_index({0, 0, 0}, {1, 1, 1}), 1.0);
    EXPECT_THROW(adjusted_rand_index({0}, {0}), ValidationError);
    EXPECT_THROW(adjusted_rand_index({0, 1}, {0}), ValidationError);
}

TEST(ARI, PropertiesAndPairCountOracle) {
    Rng rng(31);
    for (int t = 0; t < 200; ++t) {
        const int n = 2 + static_cast<int>(rng.below(60));
        const auto a = random_labels(rng, n, 1 + static_cast<int>(rng.below(6)));
        const auto b = random_labels(rng, n, 1 + static_cast<int>(rng.below(6)));
        EXPECT_EQ(adjusted_rand_index(a, a), 1.0);
        EXPECT_NEAR(adjusted_rand_index(a, b), adjusted_rand_index(b, a), 1e-12);
        EXPECT_NEAR(adjusted_rand_index(a, b), oracle::pair_count_ari(a, b), 1e-9);
        auto renamed = a;
        for (auto& x : renamed) x = 100 - 3 * x;
        EXPECT_NEAR(adjusted_rand_index(renamed, b), adjusted_rand_index(a, b), 1e-12);
    }
}

TEST(Entropy, Bounds) {
    EXPECT_NEAR(entropy({0.5, 0.25, 0.25}), 1.0397207708399179, 1e-12);
    EXPECT_EQ(entropy({1.0, 0.0, 0.0}), 0.0);
    EXPECT_NEAR(entropy({0.25, 0.25, 0.25, 0.25}), std::log(4.0), 1e-15);
    Rng rng(2);
    for (int t = 0; t < 500; ++t) {
        const int m = 2 + static_cast<int>(rng.below(8));
        std::vector<double> p(static_cast<std::size_t>(m));
        double s = 0;
        for (auto& x : p) s += (x = rng.uniform() < 0.2 ? 0.0 : rng.uniform());
        if (s == 0) continue;
        for (auto& x : p) x /= s;
        const double h = entropy(p);
        EXPECT_GE(h, 0.0);
        EXPECT_LE(h, std::log(static_cast<double>(m)) + 1e-12);
        const bool degenerate = std::count_if(p.begin(), p.end(), [](double x) { return x > 0; }) == 1;
        EXPECT_EQ(h == 0.0, degenerate);
    }
}

TEST(KMeans, InertiaNeverIncreasesWithinLloyd) {
    Rng rng(3);
    for (int t = 0; t < 50; ++t) {
        Points x(60, 4);
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal() * (1 + (i % 3));
        const auto c = kmeans_pp(x, 1 + static_cast<int>(rng.below(8)), static_cast<std::uint64_t>(t));
        for (std::size_t i = 1; i < c.inertia_trace.size(); ++i)
            EXPECT_LE(c.inertia_trace[i], c.inertia_trace[i - 1] * (1 + 1e-12));
        EXPECT_NEAR(c.inertia, c.inertia_trace.back(), 1e-9 * (1 + c.inertia));
    }
}

TEST(KMeans, RecoversSeparatedBlobs) {
    Rng rng(4);
    // in 8-d, splitting one blob gains ~5% at k=4
    std::vector<std::vector<double>> centres(3, std::vector<double>(8, 0.0));
    centres[1][0] = centres[2][1] = 10;
    const auto x = blobs(rng, 40, centres, 0.5);
    std::vector<int> truth;
    for (int c = 0; c < 3; ++c) truth.insert(truth.end(), 40, c);
    const auto c = kmeans_best_of(x, 3, 1);
    EXPECT_EQ(adjusted_rand_index(c.labels, truth), 1.0);
    const auto sweep = kmeans_sweep(x, 1, 8, 1);
    std::map<int, double> inertia;
    for (const auto& [k, r] : sweep) inertia[k] = r.inertia;
    for (int k = 2; k <= 8; ++k) EXPECT_LE(inertia[k], inertia[k - 1]);
    EXPECT_EQ(elbow_select(inertia), 3);
    EXPECT_THROW(kmeans_pp(x, 121, 1), ValidationError);
    EXPECT_THROW(kmeans_sweep(x, 0, 3, 1), ValidationError);
}

TEST(KMeans, DuplicatePointsDoNotLeaveEmptyClusters) {
    Points x(6, 1);
    x << 0, 0, 0, 0, 0, 1;
    const auto c = kmeans_pp(x, 3, 9);
    std::set<int> used(c.labels.begin(), c.labels.end());
    EXPECT_EQ(used.size(), 3u);
}

TEST(Elbow, ThresholdAndFallback) {
    EXPECT_EQ(elbow_select({{1, 100}, {2, 40}, {3, 20}, {4, 19}, {5, 18}}), 3);
    // a relative gain of exactly 0.10 counts as flat
    EXPECT_EQ(elbow_select({{1, 100}, {2, 90}, {3, 10}}), 1);
    // never flat: largest second difference
    EXPECT_EQ(elbow_select({{1, 100}, {2, 50}, {3, 10}, {4, 5}}), 3);
    EXPECT_EQ(elbow_select({{1, 10}, {2, 0}, {3, 0}}), 2);
    EXPECT_THROW(elbow_select({{1, 1}, {2, 1}}), ValidationError);
    EXPECT_THROW(elbow_select({{1, 3}, {3, 2}, {4, 1}}), ValidationError);
}

TEST(LTProfile, HandComputedFeatures) {
    EventLog log;
    log.pools = {{"S", {"S", "USDC", "DAI", 100, 0, 0}}, {"E", {"E", "USDC", "WETH", 3000, 0, 0}}};
    const Timestamp d0 = day_start(19000);
    log.swaps.push_back({"1", 0, d0 + 10, "S", "lt", "s", "r", 100, 1, -1, 1});
    log.swaps.push_back({"2", 0, d0 + 70, "E", "lt", "s", "r", 300, 1, -1, 1});
    log.swaps.push_back({"3", 0, d0 + 86400 + 10, "E", "lt", "s", "r", 200, 1, -1, 1});
    log.normalize();
    const std::map<PoolId, PoolClass> classes{{"S", PoolClass::SS}, {"E", PoolClass::ECOSYS}};
    const MarketCalendar cal{{19000, MarketState::up}, {19001, MarketState::closed}};
    const auto w = make_window("w", d0, d0 + 2 * 86400);
    const auto p = lt_features(log, {"lt"}, {"S", "E"}, w, classes, cal).at("lt");
    EXPECT_DOUBLE_EQ(p.avg_usd, 200);
    EXPECT_DOUBLE_EQ(p.median_usd, 200);
    EXPECT_DOUBLE_EQ(p.avg_dt, (60 + 86340) / 2.0);
    EXPECT_DOUBLE_EQ(p.prop_ss, 1.0 / 3);
    EXPECT_DOUBLE_EQ(p.prop_fee_3000, 2.0 / 3);
    EXPECT_NEAR(p.class_entropy, entropy({1.0 / 3, 2.0 / 3}), 1e-15);
    EXPECT_DOUBLE_EQ(p.prop_market_closed, 1.0 / 3);
    EXPECT_EQ(p.n_swaps, 3);
    EXPECT_THROW(lt_features(log, {"lt"}, {"S", "E"}, w, classes, {{19000, MarketState::up}}), ValidationError);

    Clustering c;
    c.k = 2;
    c.labels = {1, 1};
    const std::map<AgentId, LTProfile> profiles{{"a", p}, {"b", p}};
    const auto prof = profile_clusters({"a", "b"}, c, profiles);
    EXPECT_EQ(prof.sizes, (std::vector<std::size_t>{0, 2}));
    EXPECT_DOUBLE_EQ(prof.means[1][0], 200);
}
