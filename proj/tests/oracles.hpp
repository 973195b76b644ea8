#pragma once

// Independent reference implementations used to check the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ammlens/event_model.hpp"
#include "ammlens/graph.hpp"
#include "ammlens/rng.hpp"

namespace oracle {

using namespace ammlens;

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("ammlens_test_" + name);
    std::filesystem::remove_all(p);
    std::filesystem::create_directories(p);
    return p;
}

// Random multi-action transactions over a small token set. Each swap pays
// out one token and receives the other; log indices are shuffled so the
// library has to sort them.
struct BridgeFixture {
    EventLog log;
    std::set<PoolId> pools;
};

inline BridgeFixture random_bridge_fixture(std::uint64_t seed, int n_txns) {
    Rng rng(seed);
    const std::vector<std::string> tokens{"AAA", "BBB", "CCC", "DDD", "EEE"};
    BridgeFixture f;
    std::vector<PoolId> ids;
    for (std::size_t i = 0; i < tokens.size(); ++i)
        for (std::size_t j = i + 1; j < tokens.size(); ++j)
            for (int fee : {500, 3000}) {
                PoolMeta m{tokens[i] + "-" + tokens[j] + "-" + std::to_string(fee), tokens[i], tokens[j], fee, 0, 0};
                f.log.pools.emplace(m.pool_id, m);
                ids.push_back(m.pool_id);
            }
    f.pools = {ids.begin(), ids.end()};
    for (int t = 0; t < n_txns; ++t) {
        const int actions = static_cast<int>(rng.between(2, 6));
        std::vector<std::int64_t> idx(static_cast<std::size_t>(actions));
        for (int a = 0; a < actions; ++a) idx[static_cast<std::size_t>(a)] = a * 3 + rng.between(0, 2);
        rng.shuffle(idx);
        for (int a = 0; a < actions; ++a) {
            SwapEvent s;
            s.txn_id = "t" + std::to_string(t);
            s.log_index = idx[static_cast<std::size_t>(a)];
            s.ts = 1000 + t;
            s.pool = ids[rng.below(ids.size())];
            s.origin = s.sender = s.recipient = "agent";
            s.amount_usd = 1.0;
            const double mag = rng.uniform(0.1, 10.0);
            const bool sell0 = rng.below(2) == 0;
            s.amount0 = sell0 ? mag : -mag;
            s.amount1 = sell0 ? -mag : mag;
            f.log.swaps.push_back(s);
        }
    }
    f.log.normalize();
    return f;
}

// For each ordered pair of swaps (a before b) in one transaction: a bridge
// a.pool -> b.pool exists iff a pays out token T, b receives T, the pools
// differ, and no swap between them touches T.
inline std::map<NodePair, std::int64_t> brute_force_bridges(const EventLog& log) {
    std::map<std::string, std::vector<SwapEvent>> txns;
    for (const auto& s : log.swaps) txns[s.txn_id].push_back(s);
    std::map<NodePair, std::int64_t> out;
    auto touches = [&](const SwapEvent& s, const std::string& tok) {
        const auto& m = log.pool(s.pool);
        return m.token0 == tok || m.token1 == tok;
    };
    auto flow = [&](const SwapEvent& s, const std::string& tok) {
        const auto& m = log.pool(s.pool);
        return m.token0 == tok ? s.amount0 : s.amount1;
    };
    for (auto& [id, v] : txns) {
        std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.log_index < b.log_index; });
        for (std::size_t i = 0; i < v.size(); ++i)
            for (std::size_t j = i + 1; j < v.size(); ++j) {
                const auto& mi = log.pool(v[i].pool);
                for (const auto& tok : {mi.token0, mi.token1}) {
                    if (!touches(v[j], tok)) continue;
                    if (!(flow(v[i], tok) < 0 && flow(v[j], tok) > 0)) continue;
                    if (v[i].pool == v[j].pool) continue;
                    bool blocked = false;
                    for (std::size_t m = i + 1; m < j; ++m)
                        if (touches(v[m], tok)) blocked = true;
                    if (!blocked) ++out[{v[i].pool, v[j].pool}];
                }
            }
    }
    return out;
}

// Component sizes by breadth-first search over an adjacency list.
inline std::size_t bfs_giant_size(const std::set<NodeId>& nodes,
                                  const std::vector<NodePair>& edges) {
    std::map<NodeId, std::vector<NodeId>> adj;
    for (const auto& [a, b] : edges) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    }
    std::set<NodeId> seen;
    std::size_t best = 0;
    for (const auto& n : nodes) {
        if (seen.count(n) || !adj.count(n)) continue;
        std::deque<NodeId> q{n};
        seen.insert(n);
        std::size_t size = 0;
        while (!q.empty()) {
            auto u = q.front();
            q.pop_front();
            ++size;
            for (const auto& v : adj[u])
                if (seen.insert(v).second) q.push_back(v);
        }
        best = std::max(best, size);
    }
    return best;
}

// Adjusted Rand index from pair counts: a = same/same, b = same/diff,
// c = diff/same, d = diff/diff.
inline double pair_count_ari(const std::vector<int>& x, const std::vector<int>& y) {
    long double a = 0, b = 0, c = 0, d = 0;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) {
            const bool sx = x[i] == x[j], sy = y[i] == y[j];
            if (sx && sy) ++a;
            else if (sx) ++b;
            else if (sy) ++c;
            else ++d;
        }
    const long double den = (a + b) * (b + d) + (a + c) * (c + d);
    if (den == 0) return 1.0;
    return static_cast<double>(2 * (a * d - b * c) / den);
}

// Cyclic Jacobi eigenvalues of a symmetric matrix, descending.
inline std::vector<double> jacobi_eigenvalues(Eigen::MatrixXd a, int sweeps = 100) {
    const auto n = a.rows();
    for (int s = 0; s < sweeps; ++s) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-26) break;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0), sn = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - sn * akq;
                    a(k, q) = sn * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - sn * aqk;
                    a(q, k) = sn * apk + c * aqk;
                }
            }
    }
    std::vector<double> ev(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) ev[static_cast<std::size_t>(i)] = a(i, i);
    std::sort(ev.rbegin(), ev.rend());
    return ev;
}

// Zero-intercept least squares and its R^2 about the mean, in long double.
struct LawFitOracle {
    double slope = 0.0, r2 = 0.0;
};

inline LawFitOracle law_fit(const std::vector<double>& x, const std::vector<double>& y) {
    long double sxy = 0, sxx = 0, sy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += static_cast<long double>(x[i]) * y[i];
        sxx += static_cast<long double>(x[i]) * x[i];
        sy += y[i];
    }
    const long double slope = sxy / sxx, ybar = sy / x.size();
    long double res = 0, tot = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        res += (y[i] - slope * x[i]) * (y[i] - slope * x[i]);
        tot += (y[i] - ybar) * (y[i] - ybar);
    }
    return {static_cast<double>(slope), static_cast<double>(1 - res / tot)};
}

}  // namespace oracle
