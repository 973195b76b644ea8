#include <gtest/gtest.h>

#include "ammlens/cryptoness.hpp"
#include "oracles.hpp"

using namespace ammlens;

namespace {

std::vector<DailyLawRow> law_rows(Rng& rng, int n, double r_pool, double noise, DayIndex first = 19000) {
    std::vector<DailyLawRow> rows;
    for (int i = 0; i < n; ++i) {
        DailyLawRow r;
        r.date = first + i;
        r.t_liq = 1e7 * std::exp(0.3 * rng.normal());
        r.v_stab = 100 * std::exp(0.3 * rng.normal());
        r.n_fee = 1.0 / 3000;
        r.p_vol = r_pool * r.x() * std::exp(noise * rng.normal());
        rows.push_back(r);
    }
    return rows;
}

}  // namespace

TEST(LawFit, MatchesLongDoubleOracle) {
    Rng rng(1);
    for (int t = 0; t < 50; ++t) {
        auto rows = law_rows(rng, 10 + static_cast<int>(rng.below(100)), 500, rng.uniform(0, 1));
        std::vector<double> x, y;
        for (const auto& r : rows) x.push_back(r.x()), y.push_back(r.y());
        const auto o = oracle::law_fit(x, y);
        const auto f = fit_crypto_law(rows);
        EXPECT_NEAR(f.r_pool, o.slope, 1e-9 * o.slope);
        EXPECT_NEAR(f.xi, o.r2, 1e-9);
        EXPECT_EQ(f.n_obs, rows.size());
    }
}

TEST(LawFit, ExactLawAndDegenerateInputs) {
    Rng rng(2);
    const auto rows = law_rows(rng, 20, 250, 0.0);
    const auto f = fit_crypto_law(rows);
    EXPECT_NEAR(f.r_pool, 250, 1e-9);
    EXPECT_NEAR(f.xi, 1.0, 1e-12);
    EXPECT_THROW(fit_crypto_law(std::span(rows).first(2)), ValidationError);
    auto flat = rows;
    for (auto& r : flat) r.p_vol = 7;
    EXPECT_EQ(try_fit_crypto_law(flat).failure, FitFailure::constant_y);
    // volume unrelated to x: the zero-intercept fit is worse than the mean
    auto indep = rows;
    for (auto& r : indep) r.p_vol = 1e6 * (1 + 0.01 * rng.normal());
    EXPECT_LT(fit_crypto_law(indep).xi, 0.0);
}

TEST(ZScore, SinglePassOracle) {
    Rng rng(3);
    for (int t = 0; t < 30; ++t) {
        auto rows = law_rows(rng, 40, 100, 0.2);
        rows[5].p_vol *= 50;
        rows[9].t_liq *= 30;
        const auto kept = zscore_filter(rows, 3.0);
        std::vector<DailyLawRow> expect;
        auto z_ok = [&](auto get) {
            long double m = 0, s = 0;
            for (const auto& r : rows) m += get(r);
            m /= rows.size();
            for (const auto& r : rows) s += (get(r) - m) * (get(r) - m);
            s = std::sqrt(s / rows.size());
            return [=](const DailyLawRow& r) { return std::abs((get(r) - m) / s) <= 3.0; };
        };
        auto a = z_ok([](const DailyLawRow& r) { return r.p_vol; });
        auto b = z_ok([](const DailyLawRow& r) { return r.v_stab; });
        auto c = z_ok([](const DailyLawRow& r) { return r.t_liq; });
        for (const auto& r : rows)
            if (a(r) && b(r) && c(r)) expect.push_back(r);
        ASSERT_EQ(kept.size(), expect.size());
        for (std::size_t i = 0; i < kept.size(); ++i) EXPECT_EQ(kept[i].date, expect[i].date);
        EXPECT_LT(kept.size(), rows.size());
    }
    EXPECT_THROW(zscore_filter(std::vector<DailyLawRow>(2)), ValidationError);
}

TEST(DailyRows, FromEvents) {
    EventLog log;
    log.pools = {{"P", {"P", "USDC", "WETH", 3000, 0, 0}}};
    const Timestamp d0 = day_start(19000);
    log.liquidity.push_back({"m", 0, d0 - 10, "P", "lp", "r", LiquidityKind::mint, 5000});
    log.liquidity.push_back({"m2", 0, d0 + 100, "P", "lp", "r", LiquidityKind::mint, 1000});
    log.swaps.push_back({"a", 0, d0 + 1, "P", "o", "s", "r", 10, 1, -1, 1.0});
    log.swaps.push_back({"b", 0, d0 + 2, "P", "o", "s", "r", 30, 1, -1, 3.0});
    log.swaps.push_back({"c", 0, d0 + 86400, "P", "o", "s", "r", 30, 1, -1, 3.0});  // lone swap
    log.swaps.push_back({"d", 0, d0 + 2 * 86400, "P", "o", "s", "r", 5, 1, -1, 2.0});
    log.swaps.push_back({"e", 0, d0 + 2 * 86400 + 1, "P", "o", "s", "r", 5, 1, -1, 2.0});  // flat
    log.normalize();
    const auto out = daily_law_rows(log, "P", make_window("w", d0, d0 + 4 * 86400));
    ASSERT_EQ(out.rows.size(), 1u);
    const auto& r = out.rows[0];
    EXPECT_EQ(r.date, 19000);
    EXPECT_DOUBLE_EQ(r.p_vol, 40);
    EXPECT_DOUBLE_EQ(r.v_stab, 1.0);
    EXPECT_DOUBLE_EQ(r.t_liq, 6000);
    EXPECT_DOUBLE_EQ(r.n_fee, 1.0 / 3000);
    EXPECT_EQ(out.window_days, 4);
    EXPECT_EQ(out.dropped_days, 3);
    EXPECT_EQ(out.flat_rate_days, 1);
}

TEST(Sliding, WindowsAndRegimes) {
    Rng rng(4);
    auto rows = law_rows(rng, 60, 100, 0.05);
    for (int i = 30; i < 60; ++i) rows[static_cast<std::size_t>(i)].p_vol = 1e4 * rng.uniform(0.2, 1.8);
    rows.erase(rows.begin() + 10);
    const auto fits = sliding_cryptoness(rows, {30, 1, 3.0});
    ASSERT_EQ(fits.size(), 31u);
    EXPECT_EQ(fits.front().end_date, 19029);
    EXPECT_EQ(fits.back().end_date, 19059);
    EXPECT_GT(fits.front().fit.xi, 0.95);
    EXPECT_LT(fits.back().fit.xi, 0.2);
    // first window holds 29 rows (one was removed) before z filtering
    EXPECT_EQ(fits.front().fit.n_obs, zscore_filter(std::span(rows).first(29), 3.0).size());
    for (const auto& f : fits) EXPECT_EQ(f.xi_clamped, std::max(0.0, f.fit.xi));
    auto unsorted = rows;
    std::swap(unsorted[0], unsorted[1]);
    EXPECT_THROW(sliding_cryptoness(unsorted), ValidationError);
    EXPECT_TRUE(sliding_cryptoness({}).empty());
}

TEST(Isotherms, BinsAndMostPopulated) {
    std::vector<DailyLawRow> rows;
    for (double t : {0.0, 1.0, 1.5, 6.0, 6.5, 7.0, 10.0}) rows.push_back({0, 1, 1, t, 1});
    const auto b = isotherm_bins(rows, 5);
    EXPECT_DOUBLE_EQ(b.width, 2.0);
    EXPECT_EQ(b.points[0].size(), 3u);
    EXPECT_EQ(b.points[3].size(), 3u);
    EXPECT_EQ(b.points[4].size(), 1u);
    EXPECT_EQ(b.most_populated, (std::array<int, 2>{0, 3}));
    rows.assign(3, {0, 1, 1, 2.0, 1});
    EXPECT_THROW(isotherm_bins(rows, 5), ValidationError);
}

TEST(OpChange, RelativeDailyRates) {
    EventLog log;
    log.pools = {{"P", {"P", "X", "Y", 500, 0, 0}}};
    const Timestamp d = 86400;
    for (int i = 0; i < 4; ++i) log.swaps.push_back({"b" + std::to_string(i), 0, d * i, "P", "o", "s", "r", 1, 1, -1, 1});
    for (int i = 0; i < 6; ++i) log.swaps.push_back({"f" + std::to_string(i), 0, 10 * d + i, "P", "o", "s", "r", 1, 1, -1, 1});
    log.liquidity.push_back({"m", 0, 10 * d, "P", "lp", "r", LiquidityKind::mint, 1});
    log.normalize();
    const auto base = make_window("b", 0, 4 * d), focus = make_window("f", 10 * d, 12 * d);
    const auto o = op_change(log, "P", focus, base);
    EXPECT_DOUBLE_EQ(*o.swap, (3.0 - 1.0) / 1.0);
    EXPECT_FALSE(o.mint.has_value());
    EXPECT_FALSE(o.burn.has_value());
    EXPECT_DOUBLE_EQ(*o.average, 2.0);
    const std::vector<TimeWindow> two{make_window("b1", 0, 2 * d), make_window("b2", 2 * d, 4 * d)};
    EXPECT_DOUBLE_EQ(*op_change(log, "P", focus, two).swap, 2.0);
    EXPECT_THROW(op_change(log, "P", focus, make_window("x", 11 * d, 13 * d)), ValidationError);
    const std::vector<TimeWindow> overlapping{make_window("b1", 0, 3 * d), make_window("b2", 2 * d, 4 * d)};
    EXPECT_THROW(op_change(log, "P", focus, overlapping), ValidationError);
}

TEST(RPool, Distribution) {
    std::vector<SlidingFit> fits;
    for (double r : {120.0, 80.0, 100.0, 5.0}) fits.push_back({0, {r, r == 5.0 ? 0.1 : 0.9, 30}, 0});
    const auto d = rpool_distribution(fits, 0.3);
    EXPECT_EQ(d.values, (std::vector<double>{120, 80, 100}));
    EXPECT_DOUBLE_EQ(d.median, 100);
    EXPECT_DOUBLE_EQ(d.mean, 100);
    EXPECT_EQ(*d.magnitude, 2);
    EXPECT_TRUE(std::isnan(rpool_distribution({}, 0.3).median));
}
