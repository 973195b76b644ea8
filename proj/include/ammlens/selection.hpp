#pragma once

// Pool universe selection: a coarse filter on summary metadata followed by
// per-window activity and liquidity filters.

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ammlens/event_model.hpp"

namespace ammlens {

struct SelectionConfig {
    std::int64_t min_txn_count = 1000;
    std::int64_t min_pools_per_token = 3;
    double tvl_threshold = 1'000'000.0;
    std::vector<TimeWindow> windows;

    void validate() const {
        if (min_txn_count <= 0 || min_pools_per_token <= 0 || !(tvl_threshold > 0.0))
            throw ValidationError("selection thresholds must be positive");
        for (const auto& w : windows) w.validate();
    }
};

struct FilterFlags {
    bool prior_txns = false;
    bool tvl_at_start = false;
    bool tvl_at_end = false;
    bool sustained_tvl = false;  // two consecutive liquidity points above threshold
    std::int64_t prior_txn_count = 0;
    double start_tvl = 0.0;
    double end_tvl = 0.0;

    bool passed() const noexcept { return prior_txns && tvl_at_start && tvl_at_end && sustained_tvl; }
};

struct PoolUniverse {
    std::string window;
    std::set<PoolId> pools;
    std::map<PoolId, FilterFlags> candidates;  // passed or not
};

// Step 1 keeps pools with enough lifetime transactions; step 2 keeps those
// whose two tokens each appear in enough step-1 survivors. Single pass.
inline std::set<PoolId> coarse_filter(const std::vector<PoolMeta>& metas,
                                      const SelectionConfig& cfg) {
    std::vector<const PoolMeta*> active;
    for (const auto& m : metas)
        if (m.txn_count >= cfg.min_txn_count) active.push_back(&m);

    std::map<std::string, std::int64_t> token_pools;
    for (const auto* m : active) {
        ++token_pools[m->token0];
        ++token_pools[m->token1];
    }
    std::set<PoolId> out;
    for (const auto* m : active)
        if (token_pools[m->token0] >= cfg.min_pools_per_token &&
            token_pools[m->token1] >= cfg.min_pools_per_token)
            out.insert(m->pool_id);
    return out;
}

inline std::set<PoolId> coarse_filter(const std::map<PoolId, PoolMeta>& pools,
                                      const SelectionConfig& cfg) {
    std::vector<PoolMeta> metas;
    metas.reserve(pools.size());
    for (const auto& [id, m] : pools) metas.push_back(m);
    return coarse_filter(metas, cfg);
}

inline FilterFlags evaluate_window(const EventLog& log, const PoolId& pool, const TimeWindow& w,
                                   const SelectionConfig& cfg) {
    FilterFlags f;
    for (const auto& s : log.swaps)
        if (s.pool == pool && s.ts < w.start) ++f.prior_txn_count;
    for (const auto& l : log.liquidity)
        if (l.pool == pool && l.ts < w.start) ++f.prior_txn_count;
    f.prior_txns = f.prior_txn_count >= cfg.min_txn_count;

    const auto tvl = proxy_tvl_series(log, pool);
    f.start_tvl = proxy_tvl_at(tvl, w.start);
    f.end_tvl = proxy_tvl_at(tvl, w.end);
    f.tvl_at_start = f.start_tvl >= cfg.tvl_threshold;
    f.tvl_at_end = f.end_tvl >= cfg.tvl_threshold;
    for (std::size_t i = 1; i < tvl.size() && tvl[i].ts <= w.end; ++i)
        if (tvl[i - 1].usd >= cfg.tvl_threshold && tvl[i].usd >= cfg.tvl_threshold) {
            f.sustained_tvl = true;
            break;
        }
    return f;
}

inline PoolUniverse window_filter(const EventLog& log, const std::set<PoolId>& candidates,
                                  const TimeWindow& w, const SelectionConfig& cfg) {
    PoolUniverse u;
    u.window = w.label;
    for (const auto& p : candidates) {
        log.pool(p);
        auto flags = evaluate_window(log, p, w, cfg);
        if (flags.passed()) u.pools.insert(p);
        u.candidates.emplace(p, flags);
    }
    return u;
}

inline nlohmann::json to_json(const PoolUniverse& u) {
    nlohmann::json prov = nlohmann::json::object();
    for (const auto& [p, f] : u.candidates)
        prov[p] = {{"prior_txns", f.prior_txns},       {"tvl_at_start", f.tvl_at_start},
                   {"tvl_at_end", f.tvl_at_end},       {"sustained_tvl", f.sustained_tvl},
                   {"prior_txn_count", f.prior_txn_count}, {"start_tvl", f.start_tvl},
                   {"end_tvl", f.end_tvl},             {"selected", f.passed()}};
    return {{"window", u.window}, {"pools", u.pools}, {"candidates", prov}};
}

inline PoolUniverse universe_from_json(const nlohmann::json& j) {
    PoolUniverse u;
    try {
        u.window = j.at("window").get<std::string>();
        for (const auto& p : j.at("pools")) u.pools.insert(p.get<std::string>());
        for (const auto& [p, f] : j.at("candidates").items()) {
            FilterFlags flags;
            flags.prior_txns = f.at("prior_txns").get<bool>();
            flags.tvl_at_start = f.at("tvl_at_start").get<bool>();
            flags.tvl_at_end = f.at("tvl_at_end").get<bool>();
            flags.sustained_tvl = f.at("sustained_tvl").get<bool>();
            flags.prior_txn_count = f.at("prior_txn_count").get<std::int64_t>();
            flags.start_tvl = f.at("start_tvl").get<double>();
            flags.end_tvl = f.at("end_tvl").get<double>();
            u.candidates.emplace(p, flags);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed universe file: ") + e.what());
    }
    return u;
}

}  // namespace ammlens
