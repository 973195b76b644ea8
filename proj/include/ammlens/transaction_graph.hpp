#pragma once

// Per-LT transaction graphs, cut-value neighbourhood sampling and
// Weisfeiler-Lehman relabelling (depth 1).
//
// A transaction graph is complete: every pair of an LT's swaps is joined by
// an edge weighted by the elapsed seconds. Weights are computed from the
// timestamps on demand and never stored.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ammlens/event_model.hpp"
#include "ammlens/rng.hpp"

namespace ammlens {

// Characters reserved for feature tokens; pool labels may not contain them.
inline constexpr char kLabelSeparator = '|';
inline constexpr char kNeighbourSeparator = ',';

struct TxnNode {
    Timestamp ts = 0;
    std::string label;
};

struct TransactionGraph {
    AgentId lt_id;
    std::vector<TxnNode> nodes;  // time order

    std::size_t size() const noexcept { return nodes.size(); }

    double weight(std::size_t s, std::size_t r) const {
        return static_cast<double>(nodes[s].ts > nodes[r].ts ? nodes[s].ts - nodes[r].ts
                                                             : nodes[r].ts - nodes[s].ts);
    }
};

inline void check_label(const std::string& label) {
    if (label.empty() || label.find(kLabelSeparator) != std::string::npos ||
        label.find(kNeighbourSeparator) != std::string::npos)
        throw ValidationError("pool label '" + label + "' is empty or contains '|' or ','");
}

// Origins whose swap count over `pools` within `w` lies in [min_txns, max_txns].
inline std::set<AgentId> filter_lts(const EventLog& log, const std::set<PoolId>& pools,
                                    const TimeWindow& w, std::int64_t min_txns,
                                    std::int64_t max_txns) {
    if (min_txns < 2) throw ValidationError("min_txns must be at least 2");
    std::map<AgentId, std::int64_t> counts;
    for (const auto& s : log.swaps)
        if (pools.count(s.pool) && w.contains(s.ts)) ++counts[s.origin];
    std::set<AgentId> out;
    for (const auto& [lt, n] : counts)
        if (n >= min_txns && n <= max_txns) out.insert(lt);
    return out;
}

// One graph per LT, in LT-id order. Labels are pool ids.
inline std::vector<TransactionGraph> build_transaction_graphs(const EventLog& log,
                                                              const std::set<AgentId>& lts,
                                                              const std::set<PoolId>& pools,
                                                              const TimeWindow& w) {
    for (const auto& p : pools) check_label(p);
    std::map<AgentId, TransactionGraph> graphs;
    for (const auto& lt : lts) graphs[lt].lt_id = lt;
    for (const auto& s : log.swaps) {
        if (!pools.count(s.pool) || !w.contains(s.ts)) continue;
        auto it = graphs.find(s.origin);
        if (it != graphs.end()) it->second.nodes.push_back({s.ts, s.pool});
    }
    std::vector<TransactionGraph> out;
    out.reserve(graphs.size());
    for (auto& [lt, g] : graphs) {
        if (g.size() < 2)
            throw ValidationError("LT " + lt + " has fewer than 2 swaps in the window");
        out.push_back(std::move(g));
    }
    return out;
}

struct CutParams {
    double min_w = 0.0;
    double max_w = 0.0;
    std::size_t n_nodes = 2;
};

// Extremes of the pairwise weights: the smallest consecutive gap and the
// overall span (nodes are in time order).
inline CutParams cut_params(const TransactionGraph& g) {
    if (g.size() < 2) throw ValidationError("transaction graph needs at least 2 nodes");
    CutParams p;
    p.n_nodes = g.size();
    p.min_w = g.weight(0, 1);
    for (std::size_t i = 1; i + 1 < g.size(); ++i) p.min_w = std::min(p.min_w, g.weight(i, i + 1));
    p.max_w = g.weight(0, g.size() - 1);
    return p;
}

// Half-normal density, shifted to min_w and scaled by max_w / |S|, then
// normalised so that C(min_w) = 1. The sqrt(2/pi) factors cancel, leaving
// exp(-f^2 / 2).
inline double cut_value(double w, const CutParams& p) {
    if (!(p.max_w > 0.0)) return 1.0;
    const double f = (w - p.min_w) / (p.max_w / static_cast<double>(p.n_nodes));
    return std::exp(-0.5 * f * f);
}

using Neighbourhoods = std::vector<std::vector<std::size_t>>;

// Seed of the uniform stream used for node `s` of graph `lt_id`.
inline std::uint64_t node_stream_seed(std::uint64_t seed, const AgentId& lt_id, std::size_t s) {
    return mix_seed(mix_seed(seed, fnv1a64(lt_id)), s);
}

// For each node s and each r != s (ascending r), draw u ~ U[0,1) from the
// stream of (lt_id, s); r joins N(s) iff u < C(w(s, r)).
inline Neighbourhoods sample_neighbourhoods(const TransactionGraph& g, std::uint64_t seed) {
    const auto params = cut_params(g);
    Neighbourhoods out(g.size());
    for (std::size_t s = 0; s < g.size(); ++s) {
        Rng rng(node_stream_seed(seed, g.lt_id, s));
        for (std::size_t r = 0; r < g.size(); ++r) {
            if (r == s) continue;
            if (rng.uniform() < cut_value(g.weight(s, r), params)) out[s].push_back(r);
        }
    }
    return out;
}

// Feature multiset of one graph: token -> occurrence count.
using FeatureBag = std::map<std::string, std::int64_t>;

// Depth-0 feature: the node label. Depth-1 feature: label, '|', then the
// sorted neighbour labels joined by ','.
inline FeatureBag wl_relabel(const TransactionGraph& g, const Neighbourhoods& nb,
                             int depth = 1) {
    if (depth != 1) throw ValidationError("only WL depth 1 is supported");
    if (nb.size() != g.size()) throw ValidationError("neighbourhoods do not match graph");
    FeatureBag bag;
    std::vector<std::string> labels;
    for (std::size_t s = 0; s < g.size(); ++s) {
        ++bag[g.nodes[s].label];
        labels.clear();
        for (auto r : nb[s]) labels.push_back(g.nodes[r].label);
        std::sort(labels.begin(), labels.end());
        std::string token = g.nodes[s].label;
        token += kLabelSeparator;
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (i) token += kNeighbourSeparator;
            token += labels[i];
        }
        ++bag[token];
    }
    return bag;
}

}  // namespace ammlens
