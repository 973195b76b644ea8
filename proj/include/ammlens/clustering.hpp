#pragma once

// k-means++ with Lloyd iterations, elbow selection of k, and the adjusted
// Rand index.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include <Eigen/Dense>

#include "ammlens/error.hpp"
#include "ammlens/rng.hpp"

namespace ammlens {

using Points = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Clustering {
    std::vector<int> labels;
    int k = 0;
    double inertia = 0.0;
    Points centroids;
    std::vector<double> inertia_trace;  // after each assignment step
    int iterations = 0;
};

struct KMeansOptions {
    int max_iter = 300;
};

namespace detail {

inline double sq_dist(const Points& a, Eigen::Index i, const Points& b, Eigen::Index j) {
    return (a.row(i) - b.row(j)).squaredNorm();
}

inline Points seed_plus_plus(const Points& x, int k, Rng& rng) {
    const Eigen::Index n = x.rows();
    Points c(k, x.cols());
    c.row(0) = x.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
    std::vector<double> d2(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) d2[static_cast<std::size_t>(i)] = sq_dist(x, i, c, 0);
    for (int j = 1; j < k; ++j) {
        double total = 0.0;
        for (double v : d2) total += v;
        Eigen::Index pick = 0;
        if (total > 0.0) {
            double u = rng.uniform() * total;
            for (pick = 0; pick < n - 1; ++pick) {
                u -= d2[static_cast<std::size_t>(pick)];
                if (u < 0.0) break;
            }
        } else {
            pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
        }
        c.row(j) = x.row(pick);
        for (Eigen::Index i = 0; i < n; ++i)
            d2[static_cast<std::size_t>(i)] =
                std::min(d2[static_cast<std::size_t>(i)], sq_dist(x, i, c, j));
    }
    return c;
}

inline void validate_points(const Points& x, int k) {
    if (x.cols() < 1) throw ValidationError("points need at least one dimension");
    if (k < 1 || k > x.rows())
        throw ValidationError("k must lie in [1, n]; got k=" + std::to_string(k) +
                              " for n=" + std::to_string(x.rows()));
    if (!x.allFinite()) throw ValidationError("points contain non-finite coordinates");
}

}  // namespace detail

// Lloyd iterations from the given centroids until the assignment no longer
// changes. Empty clusters take the point farthest from its centroid.
inline Clustering lloyd(const Points& x, Points centroids, const KMeansOptions& opt = {}) {
    const Eigen::Index n = x.rows();
    const int k = static_cast<int>(centroids.rows());
    Clustering r;
    r.k = k;
    std::vector<int> prev;
    std::vector<int> labels(static_cast<std::size_t>(n), 0);
    for (int it = 0;; ++it) {
        double inertia = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            int best = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (int j = 0; j < k; ++j) {
                const double d = detail::sq_dist(x, i, centroids, j);
                if (d < bd) {
                    bd = d;
                    best = j;
                }
            }
            labels[static_cast<std::size_t>(i)] = best;
            inertia += bd;
        }
        if (!r.inertia_trace.empty() &&
            inertia > r.inertia_trace.back() * (1.0 + 1e-12) + 1e-300)
            throw RuntimeError("k-means inertia increased between Lloyd iterations");
        r.inertia_trace.push_back(inertia);
        r.iterations = it + 1;
        const bool done = labels == prev || it + 1 >= opt.max_iter;
        prev = labels;

        // centroid update with empty-cluster repair
        std::vector<Eigen::Index> count(static_cast<std::size_t>(k), 0);
        Points next = Points::Zero(k, x.cols());
        for (Eigen::Index i = 0; i < n; ++i) {
            next.row(labels[static_cast<std::size_t>(i)]) += x.row(i);
            ++count[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
        }
        for (int j = 0; j < k; ++j)
            if (count[static_cast<std::size_t>(j)] > 0) next.row(j) /= static_cast<double>(count[static_cast<std::size_t>(j)]);
        for (int j = 0; j < k; ++j) {
            if (count[static_cast<std::size_t>(j)] > 0) continue;
            Eigen::Index far = -1;
            double fd = -1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const int l = labels[static_cast<std::size_t>(i)];
                if (count[static_cast<std::size_t>(l)] < 2) continue;
                const double d = detail::sq_dist(x, i, next, l);
                if (d > fd) {
                    fd = d;
                    far = i;
                }
            }
            if (far < 0) break;
            const int from = labels[static_cast<std::size_t>(far)];
            // move the point and refresh both means
            next.row(from) = (next.row(from) * static_cast<double>(count[static_cast<std::size_t>(from)]) - x.row(far)) /
                             static_cast<double>(count[static_cast<std::size_t>(from)] - 1);
            --count[static_cast<std::size_t>(from)];
            next.row(j) = x.row(far);
            count[static_cast<std::size_t>(j)] = 1;
            labels[static_cast<std::size_t>(far)] = j;
            prev.clear();  // the assignment changed; keep iterating
        }
        centroids = std::move(next);
        if (done && !prev.empty()) break;
        if (it + 1 >= opt.max_iter) break;
    }
    r.labels = labels;
    r.centroids = centroids;
    r.inertia = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        r.inertia += detail::sq_dist(x, i, centroids, labels[static_cast<std::size_t>(i)]);
    return r;
}

inline Clustering kmeans_pp(const Points& x, int k, std::uint64_t seed,
                            const KMeansOptions& opt = {}) {
    detail::validate_points(x, k);
    Rng rng(seed);
    return lloyd(x, detail::seed_plus_plus(x, k, rng), opt);
}

// Best of `restarts` seeded k-means++ runs (lowest inertia; earliest on ties).
inline Clustering kmeans_best_of(const Points& x, int k, std::uint64_t seed, int restarts = 5,
                                 const KMeansOptions& opt = {}) {
    Clustering best;
    for (int r = 0; r < restarts; ++r) {
        auto c = kmeans_pp(x, k, mix_seed(seed, static_cast<std::uint64_t>(r)), opt);
        if (r == 0 || c.inertia < best.inertia) best = std::move(c);
    }
    return best;
}

// Best-of-`restarts` clusterings for k in [k_min, k_max]. Each k also gets a
// warm start from the k-1 solution plus its farthest point.
inline std::map<int, Clustering> kmeans_sweep(const Points& x, int k_min, int k_max,
                                              std::uint64_t seed, int restarts = 5,
                                              const KMeansOptions& opt = {}) {
    if (k_min < 1 || k_max < k_min || k_max > x.rows())
        throw ValidationError("invalid k range for the k-means sweep");
    std::map<int, Clustering> out;
    for (int k = k_min; k <= k_max; ++k) {
        auto best = kmeans_best_of(x, k, mix_seed(seed, static_cast<std::uint64_t>(k) << 20), restarts, opt);
        if (auto prev = out.find(k - 1); prev != out.end()) {
            const auto& p = prev->second;
            Eigen::Index far = 0;
            double fd = -1.0;
            for (Eigen::Index i = 0; i < x.rows(); ++i) {
                const double d = detail::sq_dist(x, i, p.centroids, p.labels[static_cast<std::size_t>(i)]);
                if (d > fd) {
                    fd = d;
                    far = i;
                }
            }
            Points init(k, x.cols());
            init.topRows(k - 1) = p.centroids;
            init.row(k - 1) = x.row(far);
            auto warm = lloyd(x, init, opt);
            if (warm.inertia < best.inertia) best = std::move(warm);
        }
        out.emplace(k, std::move(best));
    }
    return out;
}

struct ElbowOptions {
    double min_relative_gain = 0.10;
};

// Smallest k whose step to k+1 improves inertia by at most the threshold
// (relative to I(k)). With no such k, the k with the largest second
// difference I(k-1) - 2 I(k) + I(k+1).
inline int elbow_select(const std::map<int, double>& inertias, const ElbowOptions& opt = {}) {
    if (inertias.size() < 3) throw ValidationError("elbow selection needs at least 3 values of k");
    int expected = inertias.begin()->first;
    for (const auto& [k, v] : inertias) {
        if (k != expected++) throw ValidationError("elbow selection needs consecutive k values");
        if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("inertia must be finite and >= 0");
    }
    for (auto it = inertias.begin(); std::next(it) != inertias.end(); ++it) {
        const double cur = it->second, nxt = std::next(it)->second;
        if (cur <= 0.0) return it->first;
        if ((cur - nxt) / cur <= opt.min_relative_gain) return it->first;
    }
    int best_k = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (auto it = std::next(inertias.begin()); std::next(it) != inertias.end(); ++it) {
        const double d2 = std::prev(it)->second - 2.0 * it->second + std::next(it)->second;
        if (d2 > best) {
            best = d2;
            best_k = it->first;
        }
    }
    return best_k;
}

inline double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw ValidationError("labelings cover different item sets");
    if (a.size() < 2) throw ValidationError("ARI needs at least 2 items");
    std::map<std::pair<int, int>, double> table;
    std::map<int, double> rows, cols;
    for (std::size_t i = 0; i < a.size(); ++i) {
        table[{a[i], b[i]}] += 1.0;
        rows[a[i]] += 1.0;
        cols[b[i]] += 1.0;
    }
    auto comb2 = [](double n) { return n * (n - 1.0) / 2.0; };
    double index = 0.0, sa = 0.0, sb = 0.0;
    for (const auto& [key, n] : table) index += comb2(n);
    for (const auto& [key, n] : rows) sa += comb2(n);
    for (const auto& [key, n] : cols) sb += comb2(n);
    const double expected = sa * sb / comb2(static_cast<double>(a.size()));
    const double max_index = 0.5 * (sa + sb);
    if (max_index == expected) return 1.0;  // both trivial partitions, identical
    return (index - expected) / (max_index - expected);
}

// Shannon entropy in nats; zero-probability terms contribute nothing.
inline double entropy(const std::vector<double>& p) {
    double h = 0.0;
    for (double x : p)
        if (x > 0.0) h -= x * std::log(x);
    return h;
}

}  // namespace ammlens
