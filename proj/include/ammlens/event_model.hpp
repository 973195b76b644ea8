#pragma once

// Pool metadata, swap/mint/burn event streams and the series derived from
// them (proxyTVL, exchange rate, pool class).
//
// File formats (UTF-8, one JSON object per line):
//   events : {"type":"swap"|"mint"|"burn","txn_id","log_index","ts","pool",
//             "origin","sender","recipient"*,"amount_usd","amount0"*,
//             "amount1"*,"exec_rate"*}          (* swaps only)
//   pools  : {"pool","token0","token1","fee_tier","created_at","txn_count"}
//   tokens : {"stable":[...],"pegged":[...]}   (a single JSON object)

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "ammlens/error.hpp"
#include "ammlens/time.hpp"

namespace ammlens {

using PoolId = std::string;
using AgentId = std::string;

inline constexpr std::array<int, 4> kFeeTiers{100, 500, 3000, 10000};

inline bool is_fee_tier(int v) noexcept {
    return std::find(kFeeTiers.begin(), kFeeTiers.end(), v) != kFeeTiers.end();
}

struct PoolMeta {
    PoolId pool_id;
    std::string token0;
    std::string token1;
    int fee_tier = 3000;
    Timestamp created_at = 0;
    std::int64_t txn_count = 0;

    void validate() const {
        if (pool_id.empty()) throw ValidationError("pool id must not be empty");
        if (!is_fee_tier(fee_tier))
            throw ValidationError("pool " + pool_id + ": fee_tier " + std::to_string(fee_tier) +
                                  " not in {100, 500, 3000, 10000}");
        if (token0 == token1)
            throw ValidationError("pool " + pool_id + ": token0 and token1 are both " + token0);
        if (txn_count < 0) throw ValidationError("pool " + pool_id + ": negative txn_count");
    }

    bool operator==(const PoolMeta&) const = default;
};

struct SwapEvent {
    std::string txn_id;
    std::int64_t log_index = 0;
    Timestamp ts = 0;
    PoolId pool;
    AgentId origin;
    AgentId sender;
    AgentId recipient;
    double amount_usd = 0.0;
    double amount0 = 0.0;  // pool perspective: > 0 received, < 0 paid out
    double amount1 = 0.0;
    double exec_rate = 1.0;  // token0 per token1

    bool operator==(const SwapEvent&) const = default;
};

enum class LiquidityKind { mint, burn };

struct LiquidityEvent {
    std::string txn_id;
    std::int64_t log_index = 0;
    Timestamp ts = 0;
    PoolId pool;
    AgentId origin;
    AgentId sender;
    LiquidityKind kind = LiquidityKind::mint;
    double amount_usd = 0.0;

    double signed_usd() const noexcept {
        return kind == LiquidityKind::mint ? amount_usd : -amount_usd;
    }

    bool operator==(const LiquidityEvent&) const = default;
};

template <typename Event>
inline bool event_before(const Event& a, const Event& b) {
    return std::tie(a.ts, a.txn_id, a.log_index) < std::tie(b.ts, b.txn_id, b.log_index);
}

struct EventLog {
    std::map<PoolId, PoolMeta> pools;
    std::vector<SwapEvent> swaps;           // sorted by (ts, txn_id, log_index)
    std::vector<LiquidityEvent> liquidity;  // sorted by (ts, txn_id, log_index)

    const PoolMeta& pool(const PoolId& id) const {
        auto it = pools.find(id);
        if (it == pools.end()) throw ValidationError("unknown pool '" + id + "'");
        return it->second;
    }

    bool has_pool(const PoolId& id) const { return pools.count(id) != 0; }

    // Sorts both streams and checks the cross-stream invariants.
    void normalize() {
        std::stable_sort(swaps.begin(), swaps.end(), event_before<SwapEvent>);
        std::stable_sort(liquidity.begin(), liquidity.end(), event_before<LiquidityEvent>);
        std::set<std::pair<std::string_view, std::int64_t>> keys;
        auto check = [&](const auto& e) {
            if (!has_pool(e.pool))
                throw ValidationError("event " + e.txn_id + " references undeclared pool '" +
                                      e.pool + "'");
            if (!keys.emplace(e.txn_id, e.log_index).second)
                throw ValidationError("duplicate event key (" + e.txn_id + ", " +
                                      std::to_string(e.log_index) + ")");
        };
        for (const auto& s : swaps) check(s);
        for (const auto& l : liquidity) check(l);
    }

    bool operator==(const EventLog&) const = default;
};

// Swaps of one pool inside a window, in log order.
inline std::vector<const SwapEvent*> pool_swaps(const EventLog& log, const PoolId& pool,
                                                const TimeWindow& w) {
    std::vector<const SwapEvent*> out;
    for (const auto& s : log.swaps)
        if (s.pool == pool && w.contains(s.ts)) out.push_back(&s);
    return out;
}

inline std::vector<const LiquidityEvent*> pool_liquidity(const EventLog& log, const PoolId& pool,
                                                         const TimeWindow& w) {
    std::vector<const LiquidityEvent*> out;
    for (const auto& l : log.liquidity)
        if (l.pool == pool && w.contains(l.ts)) out.push_back(&l);
    return out;
}

// ---------------------------------------------------------------------------
// Ingestion

enum class EventSchema { mixed, swaps, liquidity };

struct IngestReport {
    std::size_t lines = 0;
    std::size_t accepted = 0;
    std::vector<std::size_t> malformed_lines;  // 1-based

    std::size_t malformed() const noexcept { return malformed_lines.size(); }
};

namespace detail {

inline bool get_string(const nlohmann::json& j, const char* key, std::string& out) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) return false;
    out = it->get<std::string>();
    return true;
}

inline bool get_int(const nlohmann::json& j, const char* key, std::int64_t& out) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number_integer()) return false;
    out = it->get<std::int64_t>();
    return true;
}

inline bool get_number(const nlohmann::json& j, const char* key, double& out) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_number()) return false;
    out = it->get<double>();
    return std::isfinite(out);
}

inline bool is_blank(std::string_view s) {
    return s.find_first_not_of(" \t\r") == std::string_view::npos;
}

}  // namespace detail

inline std::map<PoolId, PoolMeta> read_pool_metadata(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read pool metadata file " + path.string());
    std::map<PoolId, PoolMeta> pools;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (detail::is_blank(line)) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        PoolMeta m;
        std::int64_t fee = 0;
        if (j.is_discarded() || !j.is_object() || !detail::get_string(j, "pool", m.pool_id) ||
            !detail::get_string(j, "token0", m.token0) ||
            !detail::get_string(j, "token1", m.token1) || !detail::get_int(j, "fee_tier", fee) ||
            !detail::get_int(j, "created_at", m.created_at) ||
            !detail::get_int(j, "txn_count", m.txn_count))
            throw IngestError(path.string(), n, "malformed pool record");
        m.fee_tier = static_cast<int>(fee);
        try {
            m.validate();
        } catch (const ValidationError& e) {
            throw IngestError(path.string(), n, e.what());
        }
        if (!pools.emplace(m.pool_id, m).second)
            throw IngestError(path.string(), n, "duplicate pool '" + m.pool_id + "'");
    }
    return pools;
}

// Appends the events of one file to `log` and re-normalizes it. Lines that are
// not valid records are skipped and listed in the report; records that are
// well-formed but violate an invariant abort the load.
inline IngestReport load_events(EventLog& log, const std::filesystem::path& path,
                                EventSchema schema = EventSchema::mixed) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read event file " + path.string());
    IngestReport report;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (detail::is_blank(line)) continue;
        ++report.lines;
        auto j = nlohmann::json::parse(line, nullptr, false);
        std::string type;
        if (j.is_discarded() || !j.is_object() || !detail::get_string(j, "type", type)) {
            report.malformed_lines.push_back(n);
            continue;
        }
        const bool is_swap = type == "swap";
        const bool is_liq = type == "mint" || type == "burn";
        if ((!is_swap && !is_liq) || (is_swap && schema == EventSchema::liquidity) ||
            (is_liq && schema == EventSchema::swaps)) {
            report.malformed_lines.push_back(n);
            continue;
        }
        std::string txn, pool, origin, sender;
        std::int64_t log_index = 0, ts = 0;
        double usd = 0.0;
        if (!detail::get_string(j, "txn_id", txn) || !detail::get_int(j, "log_index", log_index) ||
            !detail::get_int(j, "ts", ts) || !detail::get_string(j, "pool", pool) ||
            !detail::get_string(j, "origin", origin) || !detail::get_string(j, "sender", sender) ||
            !detail::get_number(j, "amount_usd", usd)) {
            report.malformed_lines.push_back(n);
            continue;
        }
        if (log_index < 0) throw IngestError(path.string(), n, "negative log_index");
        if (usd < 0.0) throw IngestError(path.string(), n, "negative amount_usd");
        if (!log.has_pool(pool))
            throw IngestError(path.string(), n, "undeclared pool '" + pool + "'");
        if (is_swap) {
            SwapEvent s{txn, log_index, ts, pool, origin, sender, {}, usd};
            if (!detail::get_string(j, "recipient", s.recipient) ||
                !detail::get_number(j, "amount0", s.amount0) ||
                !detail::get_number(j, "amount1", s.amount1) ||
                !detail::get_number(j, "exec_rate", s.exec_rate)) {
                report.malformed_lines.push_back(n);
                continue;
            }
            if (!(s.amount0 * s.amount1 < 0.0))
                throw IngestError(path.string(), n, "amount0 and amount1 must have opposite signs");
            if (!(s.exec_rate > 0.0)) throw IngestError(path.string(), n, "exec_rate must be positive");
            log.swaps.push_back(std::move(s));
        } else {
            log.liquidity.push_back(LiquidityEvent{
                txn, log_index, ts, pool, origin, sender,
                type == "mint" ? LiquidityKind::mint : LiquidityKind::burn, usd});
        }
        ++report.accepted;
    }
    try {
        log.normalize();
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
    return report;
}

struct IngestResult {
    EventLog log;
    IngestReport report;
};

inline IngestResult ingest_events(const std::filesystem::path& path,
                                  std::map<PoolId, PoolMeta> pools,
                                  EventSchema schema = EventSchema::mixed) {
    IngestResult r;
    r.log.pools = std::move(pools);
    r.report = load_events(r.log, path, schema);
    return r;
}

inline nlohmann::json to_json(const SwapEvent& s) {
    return {{"type", "swap"},        {"txn_id", s.txn_id},     {"log_index", s.log_index},
            {"ts", s.ts},            {"pool", s.pool},         {"origin", s.origin},
            {"sender", s.sender},    {"recipient", s.recipient}, {"amount_usd", s.amount_usd},
            {"amount0", s.amount0},  {"amount1", s.amount1},   {"exec_rate", s.exec_rate}};
}

inline nlohmann::json to_json(const LiquidityEvent& l) {
    return {{"type", l.kind == LiquidityKind::mint ? "mint" : "burn"},
            {"txn_id", l.txn_id},
            {"log_index", l.log_index},
            {"ts", l.ts},
            {"pool", l.pool},
            {"origin", l.origin},
            {"sender", l.sender},
            {"amount_usd", l.amount_usd}};
}

inline nlohmann::json to_json(const PoolMeta& m) {
    return {{"pool", m.pool_id},         {"token0", m.token0},
            {"token1", m.token1},        {"fee_tier", m.fee_tier},
            {"created_at", m.created_at}, {"txn_count", m.txn_count}};
}

// Writes swaps and liquidity events merged in log order.
inline void write_events(std::ostream& out, const EventLog& log) {
    std::size_t i = 0, k = 0;
    while (i < log.swaps.size() || k < log.liquidity.size()) {
        const bool take_swap =
            k == log.liquidity.size() ||
            (i < log.swaps.size() &&
             std::tie(log.swaps[i].ts, log.swaps[i].txn_id, log.swaps[i].log_index) <
                 std::tie(log.liquidity[k].ts, log.liquidity[k].txn_id,
                          log.liquidity[k].log_index));
        out << (take_swap ? to_json(log.swaps[i++]) : to_json(log.liquidity[k++])).dump() << '\n';
    }
}

inline void write_pool_metadata(std::ostream& out, const std::map<PoolId, PoolMeta>& pools) {
    for (const auto& [id, m] : pools) out << to_json(m).dump() << '\n';
}

// ---------------------------------------------------------------------------
// Token classes and pool classification

struct TokenClasses {
    std::set<std::string> stable;
    std::set<std::string> pegged;

    void validate() const {
        for (const auto& s : stable)
            if (pegged.count(s))
                throw ValidationError("token '" + s + "' is both stable and pegged");
    }
};

inline TokenClasses read_token_classes(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read token class file " + path.string());
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("stable") || !j.contains("pegged") ||
        !j["stable"].is_array() || !j["pegged"].is_array())
        throw ValidationError(path.string() + ": expected {\"stable\": [...], \"pegged\": [...]}");
    TokenClasses tc;
    try {
        for (const auto& s : j["stable"]) tc.stable.insert(s.get<std::string>());
        for (const auto& s : j["pegged"]) tc.pegged.insert(s.get<std::string>());
    } catch (const nlohmann::json::exception&) {
        throw ValidationError(path.string() + ": token symbols must be strings");
    }
    tc.validate();
    return tc;
}

enum class PoolClass { SS, ECOSYS, EXOTIC };

inline constexpr std::array<PoolClass, 3> kPoolClasses{PoolClass::SS, PoolClass::ECOSYS,
                                                       PoolClass::EXOTIC};

inline const char* to_string(PoolClass c) noexcept {
    switch (c) {
        case PoolClass::SS: return "SS";
        case PoolClass::ECOSYS: return "ECOSYS";
        case PoolClass::EXOTIC: return "EXOTIC";
    }
    return "?";
}

inline PoolClass classify_pool(const PoolMeta& meta, const TokenClasses& classes) {
    auto stable = [&](const std::string& t) { return classes.stable.count(t) != 0; };
    auto known = [&](const std::string& t) { return stable(t) || classes.pegged.count(t) != 0; };
    if (stable(meta.token0) && stable(meta.token1)) return PoolClass::SS;
    if (known(meta.token0) && known(meta.token1)) return PoolClass::ECOSYS;
    return PoolClass::EXOTIC;
}

// ---------------------------------------------------------------------------
// Derived series

struct TvlPoint {
    Timestamp ts = 0;
    double usd = 0.0;

    bool operator==(const TvlPoint&) const = default;
};

// Running sum of +mint / -burn USD, one point per liquidity event. Values
// are not clamped: a negative proxyTVL means the input is inconsistent.
inline std::vector<TvlPoint> proxy_tvl_series(const EventLog& log, const PoolId& pool) {
    log.pool(pool);
    std::vector<TvlPoint> out;
    double running = 0.0;
    for (const auto& l : log.liquidity) {
        if (l.pool != pool) continue;
        running += l.signed_usd();
        out.push_back({l.ts, running});
    }
    return out;
}

// Right-continuous step function: value of the last point at or before t.
inline double proxy_tvl_at(const std::vector<TvlPoint>& series, Timestamp t) {
    auto it = std::upper_bound(series.begin(), series.end(), t,
                               [](Timestamp v, const TvlPoint& p) { return v < p.ts; });
    return it == series.begin() ? 0.0 : std::prev(it)->usd;
}

inline std::vector<double> exchange_rate_series(const EventLog& log, const PoolId& pool,
                                                const TimeWindow& w) {
    log.pool(pool);
    std::vector<double> out;
    for (const auto& s : log.swaps)
        if (s.pool == pool && w.contains(s.ts)) out.push_back(s.exec_rate);
    return out;
}

}  // namespace ammlens
