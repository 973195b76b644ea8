#pragma once

// Small weighted-graph toolkit over string-labelled nodes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "ammlens/error.hpp"

namespace ammlens {

using NodeId = std::string;

// Unordered pair stored with first <= second.
using NodePair = std::pair<NodeId, NodeId>;

inline NodePair make_pair_key(const NodeId& a, const NodeId& b) {
    return a < b ? NodePair{a, b} : NodePair{b, a};
}

template <typename Weight>
struct UndirectedGraph {
    std::set<NodeId> nodes;
    std::map<NodePair, Weight> edges;

    void add_node(const NodeId& n) { nodes.insert(n); }

    void set_edge(const NodeId& a, const NodeId& b, Weight w) {
        if (a == b) throw ValidationError("self-loop on node " + a);
        nodes.insert(a);
        nodes.insert(b);
        edges[make_pair_key(a, b)] = w;
    }

    Weight weight(const NodeId& a, const NodeId& b) const {
        auto it = edges.find(make_pair_key(a, b));
        return it == edges.end() ? Weight{} : it->second;
    }
};

// Ordered pair (src, dst).
template <typename Weight>
struct DirectedGraph {
    std::set<NodeId> nodes;
    std::map<NodePair, Weight> edges;

    Weight weight(const NodeId& src, const NodeId& dst) const {
        auto it = edges.find({src, dst});
        return it == edges.end() ? Weight{} : it->second;
    }
};

class UnionFind {
public:
    explicit UnionFind(std::size_t n) : parent_(n), size_(n, 1) {
        std::iota(parent_.begin(), parent_.end(), std::size_t{0});
    }

    std::size_t find(std::size_t x) {
        while (parent_[x] != x) {
            parent_[x] = parent_[parent_[x]];
            x = parent_[x];
        }
        return x;
    }

    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a == b) return;
        if (size_[a] < size_[b]) std::swap(a, b);
        parent_[b] = a;
        size_[a] += size_[b];
    }

private:
    std::vector<std::size_t> parent_;
    std::vector<std::size_t> size_;
};

// Connected components of the graph formed by `pairs`. Nodes only appear
// through an edge, so isolated vertices are never reported.
inline std::vector<std::set<NodeId>> components_of(const std::vector<NodePair>& pairs) {
    std::map<NodeId, std::size_t> index;
    for (const auto& [a, b] : pairs) {
        index.emplace(a, index.size());
        index.emplace(b, index.size());
    }
    std::vector<NodeId> names(index.size());
    for (const auto& [n, i] : index) names[i] = n;
    UnionFind uf(index.size());
    for (const auto& [a, b] : pairs) uf.unite(index[a], index[b]);
    std::map<std::size_t, std::set<NodeId>> groups;
    for (std::size_t i = 0; i < names.size(); ++i) groups[uf.find(i)].insert(names[i]);
    std::vector<std::set<NodeId>> out;
    for (auto& [root, g] : groups) out.push_back(std::move(g));
    return out;
}

// Largest component; equal sizes are resolved in favour of the component
// holding the lexicographically smallest node.
inline std::set<NodeId> largest_component(const std::vector<NodePair>& pairs) {
    auto comps = components_of(pairs);
    const std::set<NodeId>* best = nullptr;
    for (const auto& c : comps)
        if (!best || c.size() > best->size() ||
            (c.size() == best->size() && *c.begin() < *best->begin()))
            best = &c;
    return best ? *best : std::set<NodeId>{};
}

// Keeps edges with weight >= threshold and returns the largest component.
template <typename Weight>
std::set<NodeId> giant_component(const UndirectedGraph<Weight>& g, Weight threshold) {
    if (threshold < Weight{}) throw ValidationError("threshold must be non-negative");
    std::vector<NodePair> kept;
    for (const auto& [pair, w] : g.edges)
        if (w >= threshold) kept.push_back(pair);
    return largest_component(kept);
}

template <typename Weight>
struct SweepPoint {
    Weight threshold{};
    std::size_t size = 0;
};

template <typename Weight>
std::vector<SweepPoint<Weight>> threshold_sweep(const UndirectedGraph<Weight>& g,
                                                const std::vector<Weight>& thresholds) {
    if (!std::is_sorted(thresholds.begin(), thresholds.end()))
        throw ValidationError("sweep thresholds must be ascending");
    std::vector<SweepPoint<Weight>> out;
    out.reserve(thresholds.size());
    for (Weight t : thresholds) out.push_back({t, giant_component(g, t).size()});
    return out;
}

struct CentralityResult {
    std::map<NodeId, double> score;
    double eigenvalue = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Principal eigenvector of the weighted adjacency matrix by power iteration
// on (A + I), started from the uniform vector.
template <typename Weight>
CentralityResult eigenvector_centrality(const UndirectedGraph<Weight>& g, double tol = 1e-10,
                                        int max_iter = 10'000) {
    if (g.nodes.empty()) throw ValidationError("eigenvector centrality needs a non-empty graph");
    std::vector<NodePair> positive;
    for (const auto& [pair, w] : g.edges)
        if (static_cast<double>(w) > 0.0) positive.push_back(pair);
    if (g.nodes.size() > 1 && largest_component(positive).size() != g.nodes.size())
        throw ValidationError("eigenvector centrality needs a connected graph");

    std::vector<NodeId> names(g.nodes.begin(), g.nodes.end());
    std::map<NodeId, std::size_t> index;
    for (std::size_t i = 0; i < names.size(); ++i) index[names[i]] = i;
    struct Arc {
        std::size_t a, b;
        double w;
    };
    std::vector<Arc> arcs;
    for (const auto& [pair, w] : g.edges)
        if (static_cast<double>(w) > 0.0)
            arcs.push_back({index[pair.first], index[pair.second], static_cast<double>(w)});

    const std::size_t n = names.size();
    auto normalize = [](std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x * x;
        s = std::sqrt(s);
        for (double& x : v) x /= s;
    };
    std::vector<double> v(n, 1.0), next(n);
    normalize(v);
    CentralityResult r;
    for (r.iterations = 1; r.iterations <= max_iter; ++r.iterations) {
        next = v;
        for (const auto& e : arcs) {
            next[e.a] += e.w * v[e.b];
            next[e.b] += e.w * v[e.a];
        }
        normalize(next);
        double diff = 0.0;
        for (std::size_t i = 0; i < n; ++i) diff = std::max(diff, std::abs(next[i] - v[i]));
        v.swap(next);
        if (diff < tol) {
            r.converged = true;
            break;
        }
    }
    r.iterations = std::min(r.iterations, max_iter);
    // Rayleigh quotient of A (without the shift).
    std::vector<double> av(n, 0.0);
    for (const auto& e : arcs) {
        av[e.a] += e.w * v[e.b];
        av[e.b] += e.w * v[e.a];
    }
    for (std::size_t i = 0; i < n; ++i) r.eigenvalue += v[i] * av[i];
    for (std::size_t i = 0; i < n; ++i) r.score[names[i]] = std::max(0.0, v[i]);
    return r;
}

template <typename Weight>
void write_edge_csv(std::ostream& out, const UndirectedGraph<Weight>& g) {
    out << "src,dst,weight\n";
    for (const auto& [pair, w] : g.edges) out << pair.first << ',' << pair.second << ',' << w << '\n';
}

template <typename Weight>
void write_edge_csv(std::ostream& out, const DirectedGraph<Weight>& g) {
    out << "src,dst,weight\n";
    for (const auto& [pair, w] : g.edges) out << pair.first << ',' << pair.second << ',' << w << '\n';
}

}  // namespace ammlens
