#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "ammlens/event_model.hpp"
#include "oracles.hpp"

using namespace ammlens;

namespace {

std::map<PoolId, PoolMeta> two_pools() {
    return {{"P1", {"P1", "USDC", "WETH", 500, 0, 10}}, {"P2", {"P2", "DAI", "USDC", 100, 0, 10}}};
}

EventLog random_log(std::uint64_t seed, int n) {
    Rng rng(seed);
    EventLog log;
    log.pools = two_pools();
    for (int i = 0; i < n; ++i) {
        const PoolId pool = rng.below(2) ? "P1" : "P2";
        const std::string txn = "0x" + std::to_string(rng.below(1000));
        if (rng.below(4) == 0) {
            log.liquidity.push_back({txn, 100 + i, static_cast<Timestamp>(rng.below(100000)), pool,
                                     "lp" + std::to_string(rng.below(5)), "router",
                                     rng.below(2) ? LiquidityKind::mint : LiquidityKind::burn,
                                     rng.uniform(1.0, 1e6)});
        } else {
            const double a = rng.uniform(0.001, 1e5);
            SwapEvent s{txn, i, static_cast<Timestamp>(rng.below(100000)), pool,
                        "o" + std::to_string(rng.below(20)), "s", "r", rng.uniform(0.0, 1e6),
                        a, -a * rng.uniform(0.5, 2.0), rng.uniform(0.1, 3000.0)};
            log.swaps.push_back(s);
        }
    }
    log.normalize();
    return log;
}

std::filesystem::path write_lines(const std::filesystem::path& dir, const std::string& name,
                                  const std::vector<std::string>& lines) {
    auto p = dir / name;
    std::ofstream out(p);
    for (const auto& l : lines) out << l << '\n';
    return p;
}

const char* kSwap =
    R"({"type":"swap","txn_id":"0xa","log_index":0,"ts":100,"pool":"P1","origin":"o","sender":"s","recipient":"r","amount_usd":10,"amount0":1.5,"amount1":-2,"exec_rate":0.75})";

}  // namespace

TEST(Time, DateRoundTrip) {
    for (DayIndex d = -800; d < 30000; d += 37) EXPECT_EQ(parse_date(format_date(d)), d);
    EXPECT_EQ(format_date(day_of(1640995200)), "2022-01-01");
    EXPECT_EQ(day_of(-1), -1);
    EXPECT_THROW(parse_date("2022-13-01"), ValidationError);
    EXPECT_THROW(parse_date("2022-02-30"), ValidationError);
    EXPECT_THROW(parse_date("20220101"), ValidationError);
}

TEST(Time, WindowIsHalfOpen) {
    const auto w = parse_window("A:2022-01-01:2022-03-01");
    EXPECT_EQ(w.label, "A");
    EXPECT_TRUE(w.contains(w.start));
    EXPECT_FALSE(w.contains(w.end));
    EXPECT_EQ(w.day_count(), 59);
    EXPECT_EQ(format_window(w), "A:2022-01-01:2022-03-01");
    EXPECT_THROW(parse_window("A:2022-03-01:2022-03-01"), ValidationError);
    EXPECT_THROW(parse_window("2022-01-01:2022-03-01"), ValidationError);
}

TEST(Ingest, RoundTripIsExact) {
    const auto dir = oracle::scratch_dir("roundtrip");
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto log = random_log(seed, 400);
        {
            std::ofstream e(dir / "events.jsonl"), p(dir / "pools.jsonl");
            write_events(e, log);
            write_pool_metadata(p, log.pools);
        }
        auto r = ingest_events(dir / "events.jsonl", read_pool_metadata(dir / "pools.jsonl"));
        EXPECT_EQ(r.report.malformed(), 0u);
        EXPECT_EQ(r.report.accepted, log.swaps.size() + log.liquidity.size());
        EXPECT_EQ(r.log, log);
    }
}

TEST(Ingest, MalformedLinesAreSkippedWithLineNumbers) {
    const auto dir = oracle::scratch_dir("malformed");
    const auto p = write_lines(dir, "e.jsonl",
                               {kSwap, "not json", "", R"({"type":"swap","txn_id":"0xb"})",
                                R"({"type":"teleport","txn_id":"0xc"})",
                                R"({"type":"mint","txn_id":"0xd","log_index":1,"ts":5,"pool":"P2","origin":"lp","sender":"s","amount_usd":100})"});
    auto r = ingest_events(p, two_pools());
    EXPECT_EQ(r.report.lines, 5u);
    EXPECT_EQ(r.report.accepted, 2u);
    EXPECT_EQ(r.report.malformed_lines, (std::vector<std::size_t>{2, 4, 5}));
    EXPECT_EQ(r.log.swaps.size(), 1u);
    EXPECT_EQ(r.log.liquidity.size(), 1u);
}

TEST(Ingest, SchemaRestrictsEventTypes) {
    const auto dir = oracle::scratch_dir("schema");
    const auto p = write_lines(dir, "e.jsonl",
                               {kSwap, R"({"type":"burn","txn_id":"0xd","log_index":1,"ts":5,"pool":"P2","origin":"lp","sender":"s","amount_usd":100})"});
    EXPECT_EQ(ingest_events(p, two_pools(), EventSchema::swaps).report.malformed_lines,
              std::vector<std::size_t>{2});
    EXPECT_EQ(ingest_events(p, two_pools(), EventSchema::liquidity).report.malformed_lines,
              std::vector<std::size_t>{1});
}

TEST(Ingest, InvariantViolationsCarryTheLine) {
    const auto dir = oracle::scratch_dir("invariants");
    std::string same_sign = kSwap;
    same_sign.replace(same_sign.find("-2"), 2, "2");
    auto p = write_lines(dir, "a.jsonl", {kSwap, same_sign});
    try {
        ingest_events(p, two_pools());
        FAIL() << "expected IngestError";
    } catch (const IngestError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    std::string unknown = kSwap;
    unknown.replace(unknown.find("\"P1\""), 4, "\"P9\"");
    p = write_lines(dir, "b.jsonl", {unknown});
    EXPECT_THROW(ingest_events(p, two_pools()), IngestError);
    p = write_lines(dir, "c.jsonl", {kSwap, kSwap});
    EXPECT_THROW(ingest_events(p, two_pools()), ValidationError);
    EXPECT_THROW(ingest_events(dir / "missing.jsonl", two_pools()), ValidationError);
}

TEST(Ingest, PoolMetadataValidation) {
    const auto dir = oracle::scratch_dir("poolmeta");
    auto p = write_lines(dir, "p.jsonl",
                         {R"({"pool":"A","token0":"X","token1":"Y","fee_tier":500,"created_at":0,"txn_count":3})",
                          R"({"pool":"B","token0":"X","token1":"Y","fee_tier":250,"created_at":0,"txn_count":3})"});
    try {
        read_pool_metadata(p);
        FAIL() << "expected IngestError";
    } catch (const IngestError& e) {
        EXPECT_EQ(e.line(), 2u);
    }
    p = write_lines(dir, "q.jsonl",
                    {R"({"pool":"A","token0":"X","token1":"X","fee_tier":500,"created_at":0,"txn_count":3})"});
    EXPECT_THROW(read_pool_metadata(p), IngestError);
}

TEST(EventModel, ClassifyPools) {
    TokenClasses tc{{"USDC", "DAI"}, {"WETH"}};
    EXPECT_EQ(classify_pool({"a", "USDC", "DAI", 100, 0, 0}, tc), PoolClass::SS);
    EXPECT_EQ(classify_pool({"b", "USDC", "WETH", 100, 0, 0}, tc), PoolClass::ECOSYS);
    EXPECT_EQ(classify_pool({"c", "WETH", "WETH2", 100, 0, 0}, tc), PoolClass::EXOTIC);
    EXPECT_THROW((TokenClasses{{"X"}, {"X"}}.validate()), ValidationError);
}

TEST(EventModel, ProxyTvlMatchesPrefixSums) {
    const auto log = random_log(11, 600);
    for (const auto& pool : {std::string("P1"), std::string("P2")}) {
        const auto series = proxy_tvl_series(log, pool);
        Rng rng(3);
        for (int q = 0; q < 200; ++q) {
            const Timestamp t = static_cast<Timestamp>(rng.below(110000)) - 5000;
            long double expect = 0;
            for (const auto& l : log.liquidity)
                if (l.pool == pool && l.ts <= t) expect += l.signed_usd();
            EXPECT_NEAR(proxy_tvl_at(series, t), static_cast<double>(expect), 1e-6);
        }
    }
    EXPECT_THROW(proxy_tvl_series(log, "nope"), ValidationError);
}

TEST(EventModel, NormalizeSortsAndRejectsUndeclaredPools) {
    EventLog log;
    log.pools = two_pools();
    log.swaps.push_back({"b", 0, 20, "P1", "o", "s", "r", 1, 1, -1, 1});
    log.swaps.push_back({"a", 1, 20, "P1", "o", "s", "r", 1, 1, -1, 1});
    log.swaps.push_back({"c", 0, 10, "P2", "o", "s", "r", 1, 1, -1, 1});
    log.normalize();
    EXPECT_EQ(log.swaps[0].txn_id, "c");
    EXPECT_EQ(log.swaps[1].txn_id, "a");
    log.swaps.push_back({"d", 0, 5, "P7", "o", "s", "r", 1, 1, -1, 1});
    EXPECT_THROW(log.normalize(), ValidationError);
}
