#pragma once

// Pool interconnectedness: shared-agent similarity graphs, bridge flows
// between pools, and LT/LP overlap.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ammlens/event_model.hpp"
#include "ammlens/graph.hpp"

namespace ammlens {

using PoolGraph = UndirectedGraph<std::int64_t>;
using BridgeGraph = DirectedGraph<std::int64_t>;

enum class AgentRole { LT, LP };
enum class AgentIdentity { origin, sender };

struct AgentMeasure {
    AgentRole role = AgentRole::LT;
    AgentIdentity identity = AgentIdentity::origin;

    std::string name() const {
        return std::string(role == AgentRole::LT ? "lt" : "lp") + "_" +
               (identity == AgentIdentity::origin ? "origin" : "sender");
    }
};

inline std::map<PoolId, std::set<AgentId>> pool_agents(const EventLog& log,
                                                       const std::set<PoolId>& pools,
                                                       const TimeWindow& w, AgentMeasure m) {
    std::map<PoolId, std::set<AgentId>> agents;
    for (const auto& p : pools) agents[p];
    auto add = [&](const auto& e) {
        if (!pools.count(e.pool) || !w.contains(e.ts)) return;
        agents[e.pool].insert(m.identity == AgentIdentity::origin ? e.origin : e.sender);
    };
    if (m.role == AgentRole::LT)
        for (const auto& s : log.swaps) add(s);
    else
        for (const auto& l : log.liquidity) add(l);
    return agents;
}

// Edge weight = number of distinct agents active on both pools. Every pair is
// present, including zero-weight pairs.
inline PoolGraph build_common_agent_graph(const EventLog& log, const std::set<PoolId>& pools,
                                          const TimeWindow& w, AgentMeasure m) {
    for (const auto& p : pools) log.pool(p);
    const auto agents = pool_agents(log, pools, w, m);
    PoolGraph g;
    for (const auto& p : pools) g.add_node(p);
    for (auto a = agents.begin(); a != agents.end(); ++a)
        for (auto b = std::next(a); b != agents.end(); ++b) {
            std::int64_t common = 0;
            auto i = a->second.begin();
            auto j = b->second.begin();
            while (i != a->second.end() && j != b->second.end()) {
                if (*i < *j) ++i;
                else if (*j < *i) ++j;
                else { ++common; ++i; ++j; }
            }
            g.set_edge(a->first, b->first, common);
        }
    return g;
}

// One entry of a per-token flow list: -1 the token was bought from the pool,
// +1 it was sold into the pool.
struct FlowEntry {
    int sign = 0;
    PoolId pool;
};

// Adjacent (-1, +1) entries become one bridge buy-pool -> sell-pool.
// Same-pool pairs are not bridges.
inline void count_bridges(const std::vector<FlowEntry>& flow,
                          std::map<NodePair, std::int64_t>& counts) {
    for (std::size_t i = 0; i + 1 < flow.size(); ++i)
        if (flow[i].sign < 0 && flow[i + 1].sign > 0 && flow[i].pool != flow[i + 1].pool)
            ++counts[{flow[i].pool, flow[i + 1].pool}];
}

inline int flow_sign(double amount) { return amount < 0.0 ? -1 : (amount > 0.0 ? 1 : 0); }

inline BridgeGraph extract_bridges(const EventLog& log, const std::set<PoolId>& pools,
                                   const TimeWindow& w) {
    for (const auto& p : pools) log.pool(p);
    std::map<std::string, std::vector<const SwapEvent*>> by_txn;
    for (const auto& s : log.swaps)
        if (pools.count(s.pool) && w.contains(s.ts)) by_txn[s.txn_id].push_back(&s);

    BridgeGraph bg;
    bg.nodes = pools;
    for (auto& [txn, actions] : by_txn) {
        if (actions.size() < 2) continue;
        std::sort(actions.begin(), actions.end(),
                  [](const SwapEvent* a, const SwapEvent* b) { return a->log_index < b->log_index; });
        std::map<std::string, std::vector<FlowEntry>> flows;
        for (const auto* s : actions) {
            const auto& meta = log.pool(s->pool);
            if (int sg = flow_sign(s->amount0)) flows[meta.token0].push_back({sg, s->pool});
            if (int sg = flow_sign(s->amount1)) flows[meta.token1].push_back({sg, s->pool});
        }
        for (const auto& [token, flow] : flows) count_bridges(flow, bg.edges);
    }
    return bg;
}

// Undirected view of edges with count >= min_count; largest component.
inline std::set<PoolId> bridge_giant_component(const BridgeGraph& bg, std::int64_t min_count) {
    if (min_count < 0) throw ValidationError("min_count must be non-negative");
    std::set<NodePair> undirected;
    for (const auto& [pair, c] : bg.edges)
        if (c >= min_count && c > 0) undirected.insert(make_pair_key(pair.first, pair.second));
    return largest_component(std::vector<NodePair>(undirected.begin(), undirected.end()));
}

// Undirected weighted graph on `members` summing both bridge directions.
inline UndirectedGraph<double> bridge_undirected(const BridgeGraph& bg,
                                                 const std::set<PoolId>& members,
                                                 std::int64_t min_count = 0) {
    UndirectedGraph<double> g;
    for (const auto& m : members) g.add_node(m);
    for (const auto& [pair, c] : bg.edges) {
        if (c < min_count || !members.count(pair.first) || !members.count(pair.second)) continue;
        const auto key = make_pair_key(pair.first, pair.second);
        g.edges[key] += static_cast<double>(c);
    }
    return g;
}

struct AgentOverlap {
    std::int64_t lts = 0;
    std::int64_t lps = 0;
    std::int64_t both = 0;
    double ratio_of_lts = 0.0;
    double ratio_of_lps = 0.0;
};

inline std::map<PoolId, AgentOverlap> agent_overlap(const EventLog& log,
                                                    const std::set<PoolId>& pools,
                                                    const TimeWindow& w) {
    for (const auto& p : pools) log.pool(p);
    const auto lts = pool_agents(log, pools, w, {AgentRole::LT, AgentIdentity::origin});
    const auto lps = pool_agents(log, pools, w, {AgentRole::LP, AgentIdentity::origin});
    std::map<PoolId, AgentOverlap> out;
    for (const auto& p : pools) {
        AgentOverlap o;
        const auto& t = lts.at(p);
        const auto& l = lps.at(p);
        o.lts = static_cast<std::int64_t>(t.size());
        o.lps = static_cast<std::int64_t>(l.size());
        for (const auto& a : t) o.both += l.count(a);
        o.ratio_of_lts = o.lts ? static_cast<double>(o.both) / o.lts : 0.0;
        o.ratio_of_lps = o.lps ? static_cast<double>(o.both) / o.lps : 0.0;
        out.emplace(p, o);
    }
    return out;
}

}  // namespace ammlens
