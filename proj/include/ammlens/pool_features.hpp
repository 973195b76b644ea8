#pragma once

// Pool characterisation: thirteen activity features per pool, their Spearman
// correlations, and linear / kernel PCA projections.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ammlens/event_model.hpp"

namespace ammlens {

struct PoolFeatureRow {
    double SdailyLT = 0, LdailyLP = 0, SstdP = 0, SavgUSD = 0, LavgUSDmint = 0, LavgUSDburn = 0;
    double SdailyVol = 0, LdailyVolMint = 0, LdailyVolBurn = 0, SdailyTxn = 0, LdailyTxn = 0;
    double SdailyS = 0, Sdaily1txn = 0;
    bool sstdp_defined = false;  // false when the pool had no swaps
    double SfeeTier = 0;

    static constexpr std::size_t kFeatures = 13;

    static const std::array<const char*, kFeatures>& names() {
        static const std::array<const char*, kFeatures> n{
            "SdailyLT",  "LdailyLP",      "SstdP",         "SavgUSD",  "LavgUSDmint",
            "LavgUSDburn", "SdailyVol",   "LdailyVolMint", "LdailyVolBurn", "SdailyTxn",
            "LdailyTxn", "SdailyS",       "Sdaily1txn"};
        return n;
    }

    std::array<double, kFeatures> values() const {
        return {SdailyLT,  LdailyLP,  SstdP,         SavgUSD,       LavgUSDmint,
                LavgUSDburn, SdailyVol, LdailyVolMint, LdailyVolBurn, SdailyTxn,
                LdailyTxn, SdailyS,   Sdaily1txn};
    }
};

inline double population_std(const std::vector<double>& v) {
    if (v.empty()) return 0.0;
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size()));
}

// Daily averages are taken over every UTC day the window touches, including
// days without activity.
inline std::map<PoolId, PoolFeatureRow> compute_pool_features(const EventLog& log,
                                                              const std::set<PoolId>& pools,
                                                              const TimeWindow& w) {
    w.validate();
    const double days = static_cast<double>(w.day_count());
    std::map<PoolId, PoolFeatureRow> out;
    for (const auto& p : pools) {
        PoolFeatureRow r;
        r.SfeeTier = log.pool(p).fee_tier;
        std::map<DayIndex, std::set<AgentId>> lt_day, lp_day, sender_day;
        std::map<AgentId, int> origin_swaps;
        std::vector<double> rates;
        double swap_usd = 0, mint_usd = 0, burn_usd = 0;
        double n_swap = 0, n_mint = 0, n_burn = 0;
        for (const auto* s : pool_swaps(log, p, w)) {
            const auto d = day_of(s->ts);
            lt_day[d].insert(s->origin);
            sender_day[d].insert(s->sender);
            ++origin_swaps[s->origin];
            rates.push_back(s->exec_rate);
            swap_usd += s->amount_usd;
            ++n_swap;
        }
        for (const auto* l : pool_liquidity(log, p, w)) {
            lp_day[day_of(l->ts)].insert(l->origin);
            if (l->kind == LiquidityKind::mint) {
                mint_usd += l->amount_usd;
                ++n_mint;
            } else {
                burn_usd += l->amount_usd;
                ++n_burn;
            }
        }
        auto daily_distinct = [&](const std::map<DayIndex, std::set<AgentId>>& m) {
            double s = 0.0;
            for (const auto& [d, set] : m) s += static_cast<double>(set.size());
            return s / days;
        };
        r.SdailyLT = daily_distinct(lt_day);
        r.LdailyLP = daily_distinct(lp_day);
        r.SdailyS = daily_distinct(sender_day);
        r.sstdp_defined = !rates.empty();
        r.SstdP = population_std(rates);
        r.SavgUSD = n_swap ? swap_usd / n_swap : 0.0;
        r.LavgUSDmint = n_mint ? mint_usd / n_mint : 0.0;
        r.LavgUSDburn = n_burn ? burn_usd / n_burn : 0.0;
        r.SdailyVol = swap_usd / days;
        r.LdailyVolMint = mint_usd / days;
        r.LdailyVolBurn = burn_usd / days;
        r.SdailyTxn = n_swap / days;
        r.LdailyTxn = (n_mint + n_burn) / days;
        double single = 0.0;
        for (const auto& [o, c] : origin_swaps)
            if (c == 1) ++single;
        r.Sdaily1txn = single / days;
        out.emplace(p, r);
    }
    return out;
}

// Average ranks (1-based); ties share the mean of their positions.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> rank(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) rank[idx[t]] = r;
        i = j + 1;
    }
    return rank;
}

// Spearman correlation between the columns of `rows`. Entries involving a
// zero-variance column are NaN (undefined).
inline Eigen::MatrixXd spearman_matrix(const Eigen::MatrixXd& rows) {
    if (rows.rows() < 3) throw ValidationError("Spearman correlation needs at least 3 rows");
    const auto n = rows.rows(), m = rows.cols();
    Eigen::MatrixXd ranks(n, m);
    for (Eigen::Index c = 0; c < m; ++c) {
        std::vector<double> col(rows.col(c).data(), rows.col(c).data() + n);
        const auto r = average_ranks(col);
        for (Eigen::Index i = 0; i < n; ++i) ranks(i, c) = r[static_cast<std::size_t>(i)];
    }
    Eigen::MatrixXd centered = ranks.rowwise() - ranks.colwise().mean();
    Eigen::VectorXd norms = centered.colwise().norm();
    Eigen::MatrixXd out(m, m);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b) {
            if (norms(a) == 0.0 || norms(b) == 0.0) out(a, b) = nan;
            else if (a == b) out(a, b) = 1.0;
            else
                out(a, b) = std::clamp(centered.col(a).dot(centered.col(b)) / (norms(a) * norms(b)),
                                       -1.0, 1.0);
        }
    return out;
}

// Column-wise zero mean, unit population variance.
inline Eigen::MatrixXd standardize(const Eigen::MatrixXd& rows) {
    Eigen::MatrixXd out = rows.rowwise() - rows.colwise().mean();
    for (Eigen::Index c = 0; c < out.cols(); ++c) {
        const double sd = std::sqrt(out.col(c).squaredNorm() / static_cast<double>(out.rows()));
        if (!(sd > 0.0))
            throw ValidationError("column " + std::to_string(c) + " is constant; cannot standardize");
        out.col(c) /= sd;
    }
    return out;
}

enum class KernelType { linear, rbf, cosine };

inline const char* to_string(KernelType k) noexcept {
    switch (k) {
        case KernelType::linear: return "linear";
        case KernelType::rbf: return "rbf";
        case KernelType::cosine: return "cosine";
    }
    return "?";
}

struct PcaOptions {
    int dims = 3;
    std::optional<double> rbf_gamma;  // default 1 / feature count
    double rank_tol = 1e-10;          // relative to the largest eigenvalue
};

struct PcaResult {
    Eigen::MatrixXd projections;  // rows x dims
    Eigen::VectorXd spectrum;     // descending, non-negative
    Eigen::MatrixXd components;   // linear: feature loadings (d x dims); kernel: unit eigenvectors (n x dims)
};

inline Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& x, KernelType k, double gamma) {
    const auto n = x.rows();
    Eigen::MatrixXd K(n, n);
    if (k == KernelType::cosine) {
        Eigen::VectorXd norms = x.rowwise().norm();
        for (Eigen::Index i = 0; i < n; ++i)
            if (norms(i) == 0.0) throw ValidationError("cosine kernel: row of zeros");
        K = (x * x.transpose()).array() / (norms * norms.transpose()).array();
    } else if (k == KernelType::rbf) {
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j)
                K(i, j) = std::exp(-gamma * (x.row(i) - x.row(j)).squaredNorm());
    } else {
        K = x * x.transpose();
    }
    return K;
}

namespace detail {

// Flips each column so its first non-negligible entry is positive.
inline void fix_signs(Eigen::MatrixXd& vecs) {
    for (Eigen::Index c = 0; c < vecs.cols(); ++c)
        for (Eigen::Index r = 0; r < vecs.rows(); ++r)
            if (std::abs(vecs(r, c)) > 1e-12) {
                if (vecs(r, c) < 0) vecs.col(c) *= -1.0;
                break;
            }
}

// Eigenpairs of a symmetric matrix, descending.
inline std::pair<Eigen::VectorXd, Eigen::MatrixXd> sorted_eigen(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    if (es.info() != Eigen::Success) throw RuntimeError("eigendecomposition failed");
    const auto n = m.rows();
    Eigen::VectorXd vals = es.eigenvalues().reverse();
    Eigen::MatrixXd vecs = es.eigenvectors().rowwise().reverse();
    for (Eigen::Index i = 0; i < n; ++i) vals(i) = std::max(0.0, vals(i));
    return {vals, vecs};
}

inline void check_rank(const Eigen::VectorXd& vals, int dims, double tol) {
    const double top = vals.size() ? vals(0) : 0.0;
    int rank = 0;
    for (Eigen::Index i = 0; i < vals.size(); ++i)
        if (vals(i) > tol * std::max(top, 1e-300)) ++rank;
    if (top <= 0.0) rank = 0;
    if (dims > rank)
        throw ValidationError("requested " + std::to_string(dims) + " components but rank is " +
                              std::to_string(rank));
}

}  // namespace detail

// `rows` is raw data; it is standardized here. The linear kernel uses the
// covariance matrix; rbf / cosine use the double-centred kernel matrix. The
// kernel spectrum is scaled by 1/n.
inline PcaResult pca_project(const Eigen::MatrixXd& rows, KernelType kernel,
                             const PcaOptions& opt = {}) {
    if (opt.dims < 1) throw ValidationError("dims must be >= 1");
    if (rows.rows() < opt.dims + 1)
        throw ValidationError("PCA needs at least dims + 1 rows");
    const Eigen::MatrixXd x = standardize(rows);
    const auto n = x.rows();
    PcaResult r;
    if (kernel == KernelType::linear) {
        const Eigen::MatrixXd cov = x.transpose() * x / static_cast<double>(n);
        auto [vals, vecs] = detail::sorted_eigen(cov);
        detail::check_rank(vals, opt.dims, opt.rank_tol);
        detail::fix_signs(vecs);
        r.spectrum = vals;
        r.components = vecs.leftCols(opt.dims);
        r.projections = x * r.components;
        return r;
    }
    const double gamma = opt.rbf_gamma.value_or(1.0 / static_cast<double>(x.cols()));
    const Eigen::MatrixXd K = kernel_matrix(x, kernel, gamma);
    const Eigen::MatrixXd ones = Eigen::MatrixXd::Constant(n, n, 1.0 / static_cast<double>(n));
    Eigen::MatrixXd Kc = K - ones * K - K * ones + ones * K * ones;
    Kc = 0.5 * (Kc + Kc.transpose());
    auto [vals, vecs] = detail::sorted_eigen(Kc);
    detail::check_rank(vals, opt.dims, opt.rank_tol);
    detail::fix_signs(vecs);
    r.spectrum = vals / static_cast<double>(n);
    r.components = vecs.leftCols(opt.dims);
    r.projections.resize(n, opt.dims);
    for (int c = 0; c < opt.dims; ++c) r.projections.col(c) = vecs.col(c) * std::sqrt(vals(c));
    return r;
}

// Explained-variance ratios of a spectrum.
inline Eigen::VectorXd explained_ratio(const Eigen::VectorXd& spectrum) {
    const double total = spectrum.sum();
    return total > 0.0 ? Eigen::VectorXd(spectrum / total) : Eigen::VectorXd::Zero(spectrum.size());
}

}  // namespace ammlens
