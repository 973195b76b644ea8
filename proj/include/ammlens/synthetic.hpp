#pragma once

// Synthetic Uniswap-style event logs with planted ground truth.
//
// Law pools: every day of the analysis window receives one liquidity event
// steering proxyTVL to a planted level T_d, and a set of swaps whose USD sum
// and exec-rate dispersion realise
//     P_vol = R_pool * n_fee * T_d / V_d * noise
// exactly (noise = 1 when the noise level is 0). LT swaps trade at the day's
// base rate; background swaps sit symmetrically around it so the population
// std of the whole day equals the planted 1 / V_d.
//
// LT archetypes: each archetype trades a dominant pool alphabet with its own
// burst structure, and occasionally routes through two pools in a single
// transaction (bridge flows).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ammlens/event_model.hpp"
#include "ammlens/lt_profile.hpp"
#include "ammlens/rng.hpp"

namespace ammlens {

enum class LawMode { law, noise, independent, switch_to_noise, flash, sparse };

NLOHMANN_JSON_SERIALIZE_ENUM(LawMode, {{LawMode::law, "law"},
                                       {LawMode::noise, "noise"},
                                       {LawMode::independent, "independent"},
                                       {LawMode::switch_to_noise, "switch_to_noise"},
                                       {LawMode::flash, "flash"},
                                       {LawMode::sparse, "sparse"}})

struct SynthPool {
    PoolId id;
    std::string token0, token1;
    int fee_tier = 3000;
    LawMode mode = LawMode::law;
    double r_pool = 0.0;      // 0: derived from volume_scale
    double noise = 0.05;      // multiplicative log-normal sigma on P_vol
    int switch_day = 40;      // switch_to_noise: first noise day (0-based)
    double base_rate = 1.0;   // token0 per token1
    double tvl_mean = 2e7;
    double volume_scale = 2e7;  // mean daily USD volume
};

struct Archetype {
    std::string name;
    std::vector<PoolId> alphabet;
    int burst_min = 1, burst_max = 1;
    double burst_period_s = 86400.0;  // mean pause between bursts
    double gap_s = 60.0;              // mean gap inside a burst
    double usd_scale = 1000.0;
};

struct SyntheticSpec {
    std::uint64_t seed = 7;
    Timestamp start = 1640995200;  // 2022-01-01
    int days = 90;
    int warmup_days = 5;
    int warmup_swaps_per_day = 220;
    int background_min = 4, background_max = 8;
    int casual_traders = 2000;
    int lts_per_archetype = 20;
    int lt_swaps_min = 300, lt_swaps_max = 300;
    double preference_sd = 0.0;  // log-sd of each LT's weights over its alphabet
    double cross_rate = 0.01;    // LT swap outside its alphabet
    double bridge_rate = 0.05;  // LT swap that becomes a two-pool route
    double tvl_walk = 0.35;     // log-sd of the planted TVL level
    double stab_walk = 0.3;     // log-sd of the planted rate dispersion
    double rate_dispersion = 0.004;  // mean daily std as a fraction of base rate
    TokenClasses classes;
    std::vector<SynthPool> pools;
    std::vector<Archetype> archetypes;

    TimeWindow window() const {
        return make_window("A", start, start + static_cast<Timestamp>(days) * kSecondsPerDay);
    }

    void validate() const {
        if (days < 1 || warmup_days < 0 || background_min < 2 || background_max < background_min ||
            lt_swaps_min < 2 || lt_swaps_max < lt_swaps_min || casual_traders < 1 ||
            lts_per_archetype < 0)
            throw ValidationError("invalid synthetic spec counts");
        if (start % kSecondsPerDay != 0) throw ValidationError("synthetic start must be UTC midnight");
        classes.validate();
        std::set<PoolId> ids;
        for (const auto& p : pools) {
            PoolMeta{p.id, p.token0, p.token1, p.fee_tier, 0, 0}.validate();
            if (p.noise < 0.0) throw ValidationError("pool " + p.id + ": noise must be >= 0");
            if (!ids.insert(p.id).second) throw ValidationError("duplicate synthetic pool " + p.id);
        }
        std::set<PoolId> claimed;
        for (const auto& a : archetypes) {
            if (a.alphabet.empty()) throw ValidationError("archetype " + a.name + " has no pools");
            if (a.burst_min < 1 || a.burst_max < a.burst_min)
                throw ValidationError("archetype " + a.name + ": invalid burst sizes");
            for (const auto& p : a.alphabet) {
                if (!ids.count(p)) throw ValidationError("archetype " + a.name + ": unknown pool " + p);
                if (!claimed.insert(p).second)
                    throw ValidationError("archetype alphabets must be disjoint (" + p + ")");
            }
        }
    }
};

inline SyntheticSpec default_synthetic_spec() {
    SyntheticSpec s;
    s.classes.stable = {"USDC", "USDT", "DAI"};
    s.classes.pegged = {"WETH", "WBTC"};
    auto pool = [](std::string t0, std::string t1, int fee, LawMode mode, double rate) {
        SynthPool p;
        p.id = t0 + "-" + t1 + "-" + std::to_string(fee);
        p.token0 = std::move(t0);
        p.token1 = std::move(t1);
        p.fee_tier = fee;
        p.mode = mode;
        p.base_rate = rate;
        return p;
    };
    s.pools = {
        pool("USDC", "USDT", 100, LawMode::independent, 1.0),
        pool("DAI", "USDC", 100, LawMode::independent, 1.0),
        pool("DAI", "USDT", 500, LawMode::noise, 1.0),
        pool("USDC", "USDT", 500, LawMode::independent, 1.0),
        pool("DAI", "USDT", 100, LawMode::independent, 1.0),
        pool("USDC", "WETH", 500, LawMode::law, 1500.0),
        pool("USDC", "WETH", 3000, LawMode::law, 1500.0),
        pool("DAI", "WETH", 3000, LawMode::law, 1500.0),
        pool("WETH", "USDT", 3000, LawMode::switch_to_noise, 0.00066),
        pool("WBTC", "WETH", 3000, LawMode::law, 0.075),
        pool("WBTC", "USDC", 3000, LawMode::law, 0.000025),
        pool("WBTC", "WETH", 500, LawMode::law, 0.075),
        pool("SHIB", "WETH", 10000, LawMode::law, 7e-6),
        pool("SHIB", "WETH", 3000, LawMode::law, 7e-6),
        pool("SHIB", "USDC", 10000, LawMode::noise, 0.00001),
        pool("UNI", "WETH", 3000, LawMode::law, 0.005),
        pool("UNI", "USDC", 3000, LawMode::law, 7.5),
        pool("UNI", "WETH", 10000, LawMode::flash, 0.005),
        pool("PEPE", "WETH", 10000, LawMode::sparse, 1e-9),
    };
    s.archetypes = {
        {"stable-arbitrageur", {"USDC-USDT-100", "DAI-USDC-100", "DAI-USDT-500"}, 2, 4, 0.75 * 86400, 30.0, 50000.0},
        {"eth-rebalancer", {"USDC-WETH-500", "USDC-WETH-3000", "DAI-WETH-3000"}, 1, 2, 8 * 3600.0, 600.0, 5000.0},
        {"meme-trader", {"SHIB-WETH-10000", "SHIB-WETH-3000", "SHIB-USDC-10000"}, 2, 4, 86400.0, 120.0, 1000.0},
    };
    return s;
}

// Slope that makes the mean planted day hit volume_scale.
inline double derived_r_pool(const SynthPool& p, double rate_dispersion) {
    const double mean_x = p.tvl_mean * p.base_rate * rate_dispersion / p.fee_tier;
    return p.volume_scale / mean_x;
}

inline nlohmann::json to_json(const SyntheticSpec& s) {
    nlohmann::json pools = nlohmann::json::array(), arch = nlohmann::json::array();
    for (const auto& p : s.pools)
        pools.push_back({{"id", p.id}, {"token0", p.token0}, {"token1", p.token1},
                         {"fee_tier", p.fee_tier}, {"mode", p.mode}, {"r_pool", p.r_pool},
                         {"noise", p.noise}, {"switch_day", p.switch_day},
                         {"base_rate", p.base_rate}, {"tvl_mean", p.tvl_mean},
                         {"volume_scale", p.volume_scale}});
    for (const auto& a : s.archetypes)
        arch.push_back({{"name", a.name}, {"alphabet", a.alphabet}, {"burst_min", a.burst_min},
                        {"burst_max", a.burst_max}, {"burst_period_s", a.burst_period_s},
                        {"gap_s", a.gap_s}, {"usd_scale", a.usd_scale}});
    return {{"seed", s.seed},
            {"start", format_date(day_of(s.start))},
            {"days", s.days},
            {"warmup_days", s.warmup_days},
            {"warmup_swaps_per_day", s.warmup_swaps_per_day},
            {"background_min", s.background_min},
            {"background_max", s.background_max},
            {"casual_traders", s.casual_traders},
            {"lts_per_archetype", s.lts_per_archetype},
            {"lt_swaps_min", s.lt_swaps_min},
            {"lt_swaps_max", s.lt_swaps_max},
            {"preference_sd", s.preference_sd},
            {"cross_rate", s.cross_rate},
            {"bridge_rate", s.bridge_rate},
            {"tvl_walk", s.tvl_walk},
            {"stab_walk", s.stab_walk},
            {"rate_dispersion", s.rate_dispersion},
            {"stable", s.classes.stable},
            {"pegged", s.classes.pegged},
            {"pools", pools},
            {"archetypes", arch}};
}

// Fields absent from `j` keep their default_synthetic_spec() values.
inline SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
    SyntheticSpec s = default_synthetic_spec();
    try {
        auto opt = [&](const char* key, auto& field) {
            if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
        };
        opt("seed", s.seed);
        if (j.contains("start")) s.start = day_start(parse_date(j.at("start").get<std::string>()));
        opt("days", s.days);
        opt("warmup_days", s.warmup_days);
        opt("warmup_swaps_per_day", s.warmup_swaps_per_day);
        opt("background_min", s.background_min);
        opt("background_max", s.background_max);
        opt("casual_traders", s.casual_traders);
        opt("lts_per_archetype", s.lts_per_archetype);
        opt("lt_swaps_min", s.lt_swaps_min);
        opt("lt_swaps_max", s.lt_swaps_max);
        opt("preference_sd", s.preference_sd);
        opt("cross_rate", s.cross_rate);
        opt("bridge_rate", s.bridge_rate);
        opt("tvl_walk", s.tvl_walk);
        opt("stab_walk", s.stab_walk);
        opt("rate_dispersion", s.rate_dispersion);
        opt("stable", s.classes.stable);
        opt("pegged", s.classes.pegged);
        if (j.contains("pools")) {
            s.pools.clear();
            for (const auto& p : j.at("pools")) {
                SynthPool sp;
                sp.id = p.at("id").get<std::string>();
                sp.token0 = p.at("token0").get<std::string>();
                sp.token1 = p.at("token1").get<std::string>();
                sp.fee_tier = p.at("fee_tier").get<int>();
                sp.mode = p.value("mode", LawMode::law);
                sp.r_pool = p.value("r_pool", 0.0);
                sp.noise = p.value("noise", 0.05);
                sp.switch_day = p.value("switch_day", 40);
                sp.base_rate = p.value("base_rate", 1.0);
                sp.tvl_mean = p.value("tvl_mean", 2e7);
                sp.volume_scale = p.value("volume_scale", 2e7);
                s.pools.push_back(sp);
            }
        }
        if (j.contains("archetypes")) {
            s.archetypes.clear();
            for (const auto& a : j.at("archetypes")) {
                Archetype ar;
                ar.name = a.at("name").get<std::string>();
                ar.alphabet = a.at("alphabet").get<std::vector<PoolId>>();
                ar.burst_min = a.value("burst_min", 1);
                ar.burst_max = a.value("burst_max", 1);
                ar.burst_period_s = a.value("burst_period_s", 86400.0);
                ar.gap_s = a.value("gap_s", 60.0);
                ar.usd_scale = a.value("usd_scale", 1000.0);
                s.archetypes.push_back(ar);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("malformed synthetic spec: ") + e.what());
    }
    s.validate();
    return s;
}

struct PlantedPool {
    LawMode mode = LawMode::law;
    double r_pool = 0.0;
    double noise = 0.0;
    int switch_day = 0;
};

struct SyntheticWorld {
    SyntheticSpec spec;
    EventLog log;
    MarketCalendar calendar;
    std::map<AgentId, int> lt_archetype;  // planted cluster per LT
    std::map<PoolId, PlantedPool> planted;

    nlohmann::json truth() const;
};

namespace detail {

inline std::string hex_id(std::uint64_t v, int width = 16) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "0x%0*llx", width, static_cast<unsigned long long>(v));
    return buf;
}

class SynthBuilder {
public:
    explicit SynthBuilder(const SyntheticSpec& spec) : s_(spec), rng_(spec.seed) {}

    SyntheticWorld build() {
        SyntheticWorld w;
        w.spec = s_;
        for (auto& p : w.spec.pools)
            if (p.r_pool <= 0.0) p.r_pool = derived_r_pool(p, s_.rate_dispersion);
        pools_ = w.spec.pools;
        for (const auto& p : pools_) {
            w.log.pools[p.id] = PoolMeta{p.id, p.token0, p.token1, p.fee_tier, created_at(), 0};
            w.planted[p.id] = PlantedPool{p.mode, p.r_pool, p.noise, p.switch_day};
        }
        casual_.reserve(static_cast<std::size_t>(s_.casual_traders));
        for (int i = 0; i < s_.casual_traders; ++i)
            casual_.push_back(hex_id(mix_seed(s_.seed ^ 0xca5ca1ULL, static_cast<std::uint64_t>(i))));
        for (int i = 0; i < 8; ++i)
            lps_.push_back(hex_id(mix_seed(s_.seed ^ 0x1b1b1bULL, static_cast<std::uint64_t>(i))));

        generate_lts(w);
        for (const auto& p : pools_) generate_pool(p);

        w.log.swaps = std::move(swaps_);
        w.log.liquidity = std::move(liquidity_);
        std::map<PoolId, std::int64_t> counts;
        for (const auto& e : w.log.swaps) ++counts[e.pool];
        for (const auto& e : w.log.liquidity) ++counts[e.pool];
        for (auto& [id, m] : w.log.pools) m.txn_count = counts[id];
        w.log.normalize();

        for (DayIndex d = day_of(created_at()); d < day_of(s_.start) + s_.days; ++d) {
            const auto weekday = (d + 4) % 7;  // 1970-01-01 was a Thursday
            w.calendar[d] = (weekday == 0 || weekday == 6)
                                ? MarketState::closed
                                : (rng_.uniform() < 0.5 ? MarketState::up : MarketState::down);
        }
        return w;
    }

private:
    struct LtSwap {
        Timestamp ts;
        PoolId pool;
        AgentId origin;
        AgentId sender;
        double usd;
        bool sell_token0;
        std::string txn;
        std::int64_t log_index;
    };

    const SyntheticSpec& s_;
    Rng rng_;
    std::vector<SynthPool> pools_;
    std::vector<AgentId> casual_, lps_;
    std::vector<SwapEvent> swaps_;
    std::vector<LiquidityEvent> liquidity_;
    std::map<std::pair<PoolId, DayIndex>, std::vector<LtSwap>> lt_swaps_;
    std::uint64_t txn_counter_ = 0;

    Timestamp created_at() const {
        return s_.start - static_cast<Timestamp>(s_.warmup_days + 1) * kSecondsPerDay;
    }
    Timestamp end() const { return s_.start + static_cast<Timestamp>(s_.days) * kSecondsPerDay; }

    std::string next_txn() { return hex_id(mix_seed(s_.seed ^ 0x7a7aULL, ++txn_counter_), 32); }

    const SynthPool& pool(const PoolId& id) const {
        for (const auto& p : pools_)
            if (p.id == id) return p;
        throw ValidationError("unknown synthetic pool " + id);
    }

    std::size_t pick(const std::vector<double>& weights, double total) {
        double u = rng_.uniform() * total;
        for (std::size_t i = 0; i + 1 < weights.size(); ++i)
            if ((u -= weights[i]) < 0.0) return i;
        return weights.size() - 1;
    }

    double exponential(double mean) { return -mean * std::log(1.0 - rng_.uniform()); }

    // Pools sharing `token` with `from`, excluding `from`.
    std::vector<PoolId> partners(const PoolId& from, const std::string& token) const {
        std::vector<PoolId> out;
        for (const auto& p : pools_)
            if (p.id != from && p.mode != LawMode::sparse && p.mode != LawMode::flash &&
                (p.token0 == token || p.token1 == token))
                out.push_back(p.id);
        return out;
    }

    void generate_lts(SyntheticWorld& w) {
        std::vector<PoolId> all;
        for (const auto& p : pools_)
            if (p.mode != LawMode::sparse && p.mode != LawMode::flash) all.push_back(p.id);
        const double span = static_cast<double>(end() - s_.start - kSecondsPerDay);
        for (std::size_t a = 0; a < s_.archetypes.size(); ++a) {
            const auto& arch = s_.archetypes[a];
            const AgentId router = hex_id(mix_seed(s_.seed ^ 0x5e4de7ULL, a), 8);
            for (int i = 0; i < s_.lts_per_archetype; ++i) {
                const AgentId lt =
                    hex_id(mix_seed(s_.seed, (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(i)));
                w.lt_archetype[lt] = static_cast<int>(a);
                const auto n = rng_.between(s_.lt_swaps_min, s_.lt_swaps_max);
                std::vector<double> pref(arch.alphabet.size());
                double pref_total = 0.0;
                for (auto& x : pref) pref_total += (x = std::exp(s_.preference_sd * rng_.normal()));
                // offsets first, then squeeze into the window if they overflow
                std::vector<double> offsets;
                double t = rng_.uniform() * arch.burst_period_s;
                while (static_cast<std::int64_t>(offsets.size()) < n) {
                    const auto burst = rng_.between(arch.burst_min, arch.burst_max);
                    for (std::int64_t b = 0; b < burst && static_cast<std::int64_t>(offsets.size()) < n; ++b) {
                        offsets.push_back(t);
                        t += std::max(1.0, exponential(arch.gap_s));
                    }
                    t += exponential(arch.burst_period_s);
                }
                const double scale = offsets.back() > span ? span / offsets.back() : 1.0;
                for (std::size_t i = 0; i < offsets.size(); ++i) {
                    const Timestamp ts = s_.start + static_cast<Timestamp>(offsets[i] * scale);
                    const PoolId& p = rng_.uniform() < s_.cross_rate
                                          ? all[rng_.below(all.size())]
                                          : arch.alphabet[pick(pref, pref_total)];
                    const double usd = arch.usd_scale * std::exp(0.5 * rng_.normal());
                    const bool sell0 = rng_.uniform() < 0.5;
                    const std::string txn = next_txn();
                    add_lt_swap({ts, p, lt, router, usd, sell0, txn, 0});
                    if (i + 1 < offsets.size() && rng_.uniform() < s_.bridge_rate) {
                        // route the bought token through a second pool; the
                        // second leg takes the next planned swap's slot
                        const auto& meta = pool(p);
                        const std::string& bought = sell0 ? meta.token1 : meta.token0;
                        auto next = partners(p, bought);
                        std::vector<PoolId> local;
                        for (const auto& q : next)
                            if (std::find(arch.alphabet.begin(), arch.alphabet.end(), q) != arch.alphabet.end())
                                local.push_back(q);
                        if (!local.empty()) next = std::move(local);
                        if (!next.empty()) {
                            const PoolId& q = next[rng_.below(next.size())];
                            add_lt_swap({ts, q, lt, router, usd, pool(q).token0 == bought, txn, 1});
                            ++i;
                        }
                    }
                }
            }
        }
    }

    void add_lt_swap(LtSwap s) { lt_swaps_[{s.pool, day_of(s.ts)}].push_back(std::move(s)); }

    void emit_swap(const SynthPool& p, Timestamp ts, const AgentId& origin, const AgentId& sender,
                   double usd, bool sell_token0, double rate, const std::string& txn,
                   std::int64_t log_index) {
        // token0 is priced at `usd` per unit of notional; only signs and the
        // ratio matter downstream
        const double a0 = usd;
        const double a1 = usd / rate;
        swaps_.push_back(SwapEvent{txn, log_index, ts, p.id, origin, sender, origin, usd,
                                   sell_token0 ? a0 : -a0, sell_token0 ? -a1 : a1, rate});
    }

    void emit_liquidity(const SynthPool& p, Timestamp ts, LiquidityKind kind, double usd,
                        const AgentId& origin) {
        liquidity_.push_back(LiquidityEvent{next_txn(), 0, ts, p.id, origin, "nft-position-manager",
                                            kind, usd});
    }

    const AgentId& casual() { return casual_[rng_.below(casual_.size())]; }
    const AgentId& lp() { return lps_[rng_.below(lps_.size())]; }
    std::string router() { return hex_id(0xdead0000ULL + rng_.below(4), 8); }

    void background_swap(const SynthPool& p, DayIndex day, double usd, double rate) {
        const Timestamp ts = day_start(day) + static_cast<Timestamp>(rng_.below(kSecondsPerDay));
        emit_swap(p, ts, casual(), router(), usd, rng_.uniform() < 0.5, rate, next_txn(), 0);
    }

    void generate_pool(const SynthPool& p) {
        const DayIndex first = day_of(s_.start);
        const Timestamp born = created_at();
        double tvl = p.mode == LawMode::flash ? 500'000.0 : p.tvl_mean;
        emit_liquidity(p, born + 60, LiquidityKind::mint, tvl, lp());

        if (p.mode != LawMode::sparse)
            for (DayIndex d = day_of(born) + 1; d < first; ++d)
                for (int i = 0; i < s_.warmup_swaps_per_day; ++i)
                    background_swap(p, d, 500.0 * std::exp(rng_.normal()),
                                    p.base_rate * (1.0 + 0.002 * rng_.normal()));
        if (p.mode == LawMode::flash)
            emit_liquidity(p, s_.start - 3600, LiquidityKind::mint, 4'500'000.0, lp());

        const double sigma_mean = p.base_rate * s_.rate_dispersion;
        double log_rate = 0.0;
        for (int k = 0; k < s_.days; ++k) {
            const DayIndex day = first + k;
            auto& lt = lt_swaps_[{p.id, day}];
            if (p.mode == LawMode::sparse) {
                for (int i = 0; i < 2; ++i) background_swap(p, day, 200.0, p.base_rate * (1.0 + 0.01 * i));
                continue;
            }
            const double base = p.base_rate * std::exp(log_rate);
            log_rate += 0.01 * rng_.normal();
            if (p.mode == LawMode::flash) {
                for (int i = 0; i < s_.background_min; ++i)
                    background_swap(p, day, 300.0, base * (1.0 + 0.003 * (i % 2 ? 1 : -1)));
                for (const auto& s : lt) emit_swap(p, s.ts, s.origin, s.sender, s.usd, s.sell_token0, base, s.txn, s.log_index);
                continue;
            }
            // planted state of the day
            const double target_tvl = p.tvl_mean * std::exp(s_.tvl_walk * rng_.normal());
            const double sigma = sigma_mean * std::exp(s_.stab_walk * rng_.normal());
            const double v_stab = 1.0 / sigma;
            const double x = (1.0 / p.fee_tier) * target_tvl / v_stab;
            const bool noise_regime =
                p.mode == LawMode::noise || (p.mode == LawMode::switch_to_noise && k >= p.switch_day);
            double p_vol;
            if (p.mode == LawMode::independent)
                p_vol = p.volume_scale * std::max(0.2, 1.0 + 0.1 * rng_.normal());
            else if (noise_regime)
                p_vol = p.volume_scale * rng_.uniform(0.2, 1.8);
            else
                p_vol = p.r_pool * x * std::exp(p.noise * rng_.normal());

            // liquidity: move proxyTVL to the target early in the day, and
            // sometimes add a mint/burn round trip that nets out
            const Timestamp morning = day_start(day) + 60 + static_cast<Timestamp>(rng_.below(3000));
            const double delta = target_tvl - tvl;
            if (delta != 0.0)
                emit_liquidity(p, morning, delta > 0 ? LiquidityKind::mint : LiquidityKind::burn,
                               std::abs(delta), lp());
            tvl += delta;
            tvl = target_tvl;
            if (rng_.uniform() < 0.3) {
                const double amt = 0.05 * target_tvl * rng_.uniform(0.5, 1.5);
                const AgentId& who = lp();
                emit_liquidity(p, morning + 600, LiquidityKind::mint, amt, who);
                emit_liquidity(p, morning + 1200 + static_cast<Timestamp>(rng_.below(40000)),
                               LiquidityKind::burn, amt, who);
            }

            // swaps: LT swaps at the base rate, background around it
            double lt_usd = 0.0;
            for (const auto& s : lt) lt_usd += s.usd;
            const int nb = static_cast<int>(rng_.between(s_.background_min, s_.background_max));
            const double total = static_cast<double>(nb) + static_cast<double>(lt.size());
            const int paired = nb - nb % 2;
            const double spread = sigma * std::sqrt(total / paired);
            const double remaining = p_vol - lt_usd;
            if (!(remaining > 0.0))
                throw RuntimeError("synthetic pool " + p.id + ": LT volume exceeds planted P_vol on " +
                                   format_date(day));
            std::vector<double> weights(static_cast<std::size_t>(nb));
            double wsum = 0.0;
            for (auto& wgt : weights) wsum += (wgt = rng_.uniform(0.5, 1.5));
            for (int i = 0; i < nb; ++i) {
                double rate = base;
                if (i < paired) rate += (i % 2 ? spread : -spread);
                background_swap(p, day, remaining * weights[static_cast<std::size_t>(i)] / wsum, rate);
            }
            for (const auto& s : lt)
                emit_swap(p, s.ts, s.origin, s.sender, s.usd, s.sell_token0, base, s.txn, s.log_index);
        }
    }
};

}  // namespace detail

inline nlohmann::json SyntheticWorld::truth() const {
    nlohmann::json pools = nlohmann::json::object(), lts = nlohmann::json::object();
    for (const auto& [id, p] : planted)
        pools[id] = {{"mode", p.mode}, {"r_pool", p.r_pool}, {"noise", p.noise},
                     {"switch_day", p.switch_day}};
    for (const auto& [lt, a] : lt_archetype) lts[lt] = a;
    nlohmann::json names = nlohmann::json::array();
    for (const auto& a : spec.archetypes) names.push_back(a.name);
    return {{"seed", spec.seed}, {"spec", to_json(spec)}, {"archetypes", names},
            {"lt_archetype", lts}, {"pools", pools}};
}

inline SyntheticWorld generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    return detail::SynthBuilder(spec).build();
}

struct SyntheticFiles {
    std::filesystem::path pools, events, tokens, calendar, truth;
};

inline SyntheticFiles write_synthetic(const SyntheticWorld& w, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    SyntheticFiles f{dir / "pools.jsonl", dir / "events.jsonl", dir / "tokens.json",
                     dir / "calendar.csv", dir / "truth.json"};
    auto open = [](const std::filesystem::path& p) {
        std::ofstream out(p, std::ios::binary);
        if (!out) throw RuntimeError("cannot write " + p.string());
        return out;
    };
    {
        auto out = open(f.pools);
        write_pool_metadata(out, w.log.pools);
    }
    {
        auto out = open(f.events);
        write_events(out, w.log);
    }
    {
        auto out = open(f.tokens);
        out << nlohmann::json{{"stable", w.spec.classes.stable}, {"pegged", w.spec.classes.pegged}}.dump(2)
            << '\n';
    }
    {
        auto out = open(f.calendar);
        out << "date,state\n";
        for (const auto& [d, s] : w.calendar)
            out << format_date(d) << ','
                << (s == MarketState::up ? "up" : s == MarketState::down ? "down" : "closed") << '\n';
    }
    {
        auto out = open(f.truth);
        out << w.truth().dump(2) << '\n';
    }
    return f;
}

}  // namespace ammlens
