#pragma once

// Behavioural summary statistics per liquidity taker and their per-cluster
// averages.

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ammlens/clustering.hpp"
#include "ammlens/event_model.hpp"

namespace ammlens {

enum class MarketState { up, down, closed };

using MarketCalendar = std::map<DayIndex, MarketState>;

// CSV with header "date,state"; state is up, down or closed.
inline MarketCalendar read_market_calendar(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read market calendar " + path.string());
    MarketCalendar cal;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || (n == 1 && line.rfind("date", 0) == 0)) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw IngestError(path.string(), n, "expected date,state");
        const auto state = line.substr(comma + 1);
        MarketState s;
        if (state == "up") s = MarketState::up;
        else if (state == "down") s = MarketState::down;
        else if (state == "closed") s = MarketState::closed;
        else throw IngestError(path.string(), n, "unknown market state '" + state + "'");
        try {
            cal[parse_date(line.substr(0, comma))] = s;
        } catch (const ValidationError& e) {
            throw IngestError(path.string(), n, e.what());
        }
    }
    return cal;
}

struct LTProfile {
    double avg_usd = 0, median_usd = 0;
    double avg_dt = 0, median_dt = 0;
    double prop_ss = 0, prop_ecosys = 0, prop_exotic = 0, class_entropy = 0;
    double prop_fee_100 = 0, prop_fee_500 = 0, prop_fee_3000 = 0, prop_fee_10000 = 0;
    double fee_entropy = 0;
    double prop_market_up = 0, prop_market_down = 0, prop_market_closed = 0;
    double n_swaps = 0;

    static constexpr std::size_t kColumns = 17;

    static const std::array<const char*, kColumns>& columns() {
        static const std::array<const char*, kColumns> names{
            "avg_usd",      "median_usd",    "avg_dt",         "median_dt",
            "prop_SS",      "prop_ECOSYS",   "prop_EXOTIC",    "class_entropy",
            "prop_fee_100", "prop_fee_500",  "prop_fee_3000",  "prop_fee_10000",
            "fee_entropy",  "prop_market_up", "prop_market_down", "prop_market_closed",
            "n_swaps"};
        return names;
    }

    std::array<double, kColumns> values() const {
        return {avg_usd,      median_usd,   avg_dt,        median_dt,     prop_ss,
                prop_ecosys,  prop_exotic,  class_entropy, prop_fee_100,  prop_fee_500,
                prop_fee_3000, prop_fee_10000, fee_entropy, prop_market_up, prop_market_down,
                prop_market_closed, n_swaps};
    }
};

inline double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

inline double mean_of(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline std::map<AgentId, LTProfile> lt_features(const EventLog& log,
                                                const std::set<AgentId>& lt_ids,
                                                const std::set<PoolId>& pools,
                                                const TimeWindow& w,
                                                const std::map<PoolId, PoolClass>& class_map,
                                                const MarketCalendar& calendar) {
    for (const auto& p : pools)
        if (!class_map.count(p)) throw ValidationError("no class for pool " + p);
    std::map<AgentId, std::vector<const SwapEvent*>> swaps;
    for (const auto& lt : lt_ids) swaps[lt];
    for (const auto& s : log.swaps)
        if (pools.count(s.pool) && w.contains(s.ts))
            if (auto it = swaps.find(s.origin); it != swaps.end()) it->second.push_back(&s);

    std::map<AgentId, LTProfile> out;
    for (const auto& [lt, list] : swaps) {
        if (list.empty()) throw ValidationError("LT " + lt + " has no swaps in the window");
        const double n = static_cast<double>(list.size());
        LTProfile p;
        p.n_swaps = n;
        std::vector<double> usd, dt;
        std::array<double, 3> cls{};
        std::array<double, 4> fee{};
        std::array<double, 3> market{};
        for (std::size_t i = 0; i < list.size(); ++i) {
            const auto& s = *list[i];
            usd.push_back(s.amount_usd);
            if (i) dt.push_back(static_cast<double>(s.ts - list[i - 1]->ts));
            cls[static_cast<std::size_t>(class_map.at(s.pool))] += 1.0;
            const int tier = log.pool(s.pool).fee_tier;
            for (std::size_t f = 0; f < kFeeTiers.size(); ++f)
                if (kFeeTiers[f] == tier) fee[f] += 1.0;
            auto day = calendar.find(day_of(s.ts));
            if (day == calendar.end())
                throw ValidationError("market calendar has no entry for " + format_date(day_of(s.ts)));
            market[static_cast<std::size_t>(day->second)] += 1.0;
        }
        for (auto& x : cls) x /= n;
        for (auto& x : fee) x /= n;
        for (auto& x : market) x /= n;
        p.avg_usd = mean_of(usd);
        p.median_usd = median_of(usd);
        p.avg_dt = mean_of(dt);
        p.median_dt = median_of(dt);
        p.prop_ss = cls[0];
        p.prop_ecosys = cls[1];
        p.prop_exotic = cls[2];
        p.class_entropy = entropy({cls.begin(), cls.end()});
        p.prop_fee_100 = fee[0];
        p.prop_fee_500 = fee[1];
        p.prop_fee_3000 = fee[2];
        p.prop_fee_10000 = fee[3];
        p.fee_entropy = entropy({fee.begin(), fee.end()});
        p.prop_market_up = market[0];
        p.prop_market_down = market[1];
        p.prop_market_closed = market[2];
        out.emplace(lt, p);
    }
    return out;
}

struct ClusterProfile {
    int k = 0;
    std::vector<std::size_t> sizes;
    std::vector<std::array<double, LTProfile::kColumns>> means;  // one row per cluster
};

// Column means per cluster. `ids[i]` is the item carrying `labels[i]`.
inline ClusterProfile profile_clusters(const std::vector<AgentId>& ids, const Clustering& c,
                                       const std::map<AgentId, LTProfile>& profiles) {
    if (ids.size() != c.labels.size()) throw ValidationError("ids and labels differ in length");
    ClusterProfile out;
    out.k = c.k;
    out.sizes.assign(static_cast<std::size_t>(c.k), 0);
    out.means.assign(static_cast<std::size_t>(c.k), {});
    for (std::size_t i = 0; i < ids.size(); ++i) {
        auto it = profiles.find(ids[i]);
        if (it == profiles.end()) throw ValidationError("no profile for " + ids[i]);
        const auto cl = static_cast<std::size_t>(c.labels[i]);
        const auto v = it->second.values();
        for (std::size_t f = 0; f < v.size(); ++f) out.means[cl][f] += v[f];
        ++out.sizes[cl];
    }
    for (std::size_t cl = 0; cl < out.means.size(); ++cl)
        if (out.sizes[cl])
            for (auto& x : out.means[cl]) x /= static_cast<double>(out.sizes[cl]);
    return out;
}

}  // namespace ammlens
