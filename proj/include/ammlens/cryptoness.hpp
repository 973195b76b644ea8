#pragma once

// The ideal crypto law
//
//     P_vol * V_stab = n_fee * R_pool * T_liq
//
// fitted per pool as the zero-intercept regression y = R_pool * x with
// y = P_vol and x = n_fee * T_liq / V_stab. The coefficient of determination
// of that fit (about the mean of y, so it can be negative) is the pool's
// cryptoness xi.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ammlens/event_model.hpp"

namespace ammlens {

struct DailyLawRow {
    DayIndex date = 0;
    double p_vol = 0.0;   // USD swapped that day
    double v_stab = 0.0;  // 1 / population std of the day's exec rates
    double t_liq = 0.0;   // proxyTVL at day end
    double n_fee = 0.0;   // 1 / feeTier

    double x() const noexcept { return n_fee * t_liq / v_stab; }
    double y() const noexcept { return p_vol; }
    bool inconsistent_liquidity() const noexcept { return t_liq <= 0.0; }
};

struct DailyLawRows {
    std::vector<DailyLawRow> rows;
    std::int64_t window_days = 0;
    std::int64_t dropped_days = 0;       // window days without a row
    std::int64_t flat_rate_days = 0;     // >= 2 swaps but zero rate dispersion
    std::int64_t nonpositive_tvl_rows = 0;
};

inline DailyLawRows daily_law_rows(const EventLog& log, const PoolId& pool, const TimeWindow& w) {
    const auto& meta = log.pool(pool);
    w.validate();
    const auto tvl = proxy_tvl_series(log, pool);
    std::map<DayIndex, std::vector<const SwapEvent*>> by_day;
    for (const auto* s : pool_swaps(log, pool, w)) by_day[day_of(s->ts)].push_back(s);

    DailyLawRows out;
    out.window_days = w.day_count();
    for (const auto& [day, swaps] : by_day) {
        if (swaps.size() < 2) continue;
        double usd = 0.0, mean = 0.0;
        for (const auto* s : swaps) {
            usd += s->amount_usd;
            mean += s->exec_rate;
        }
        mean /= static_cast<double>(swaps.size());
        double ss = 0.0;
        for (const auto* s : swaps) ss += (s->exec_rate - mean) * (s->exec_rate - mean);
        const double sd = std::sqrt(ss / static_cast<double>(swaps.size()));
        if (!(sd > 0.0)) {
            ++out.flat_rate_days;
            continue;
        }
        DailyLawRow r{day, usd, 1.0 / sd, proxy_tvl_at(tvl, day_start(day + 1) - 1),
                      1.0 / meta.fee_tier};
        if (r.inconsistent_liquidity()) ++out.nonpositive_tvl_rows;
        out.rows.push_back(r);
    }
    out.dropped_days = out.window_days - static_cast<std::int64_t>(out.rows.size());
    return out;
}

// Drops rows whose |z| exceeds `threshold` in any of P_vol, V_stab, T_liq.
// One pass; a zero-variance variable is not used.
inline std::vector<DailyLawRow> zscore_filter(std::span<const DailyLawRow> rows,
                                              double threshold = 3.0) {
    if (rows.size() < 3) throw ValidationError("z-score filtering needs at least 3 rows");
    const auto n = static_cast<double>(rows.size());
    using Getter = double (*)(const DailyLawRow&);
    const std::array<Getter, 3> vars{[](const DailyLawRow& r) { return r.p_vol; },
                                     [](const DailyLawRow& r) { return r.v_stab; },
                                     [](const DailyLawRow& r) { return r.t_liq; }};
    std::array<double, 3> mean{}, sd{};
    for (std::size_t v = 0; v < vars.size(); ++v) {
        for (const auto& r : rows) mean[v] += vars[v](r);
        mean[v] /= n;
        for (const auto& r : rows) sd[v] += (vars[v](r) - mean[v]) * (vars[v](r) - mean[v]);
        sd[v] = std::sqrt(sd[v] / n);
    }
    std::vector<DailyLawRow> out;
    for (const auto& r : rows) {
        bool keep = true;
        for (std::size_t v = 0; v < vars.size() && keep; ++v)
            if (sd[v] > 0.0 && std::abs((vars[v](r) - mean[v]) / sd[v]) > threshold) keep = false;
        if (keep) out.push_back(r);
    }
    return out;
}

struct LawFit {
    double r_pool = 0.0;
    double xi = 0.0;
    std::size_t n_obs = 0;
};

enum class FitFailure { too_few_rows, zero_x, constant_y };

inline const char* to_string(FitFailure f) noexcept {
    switch (f) {
        case FitFailure::too_few_rows: return "fewer than 3 rows";
        case FitFailure::zero_x: return "sum of x^2 is zero";
        case FitFailure::constant_y: return "P_vol is constant; cryptoness undefined";
    }
    return "?";
}

struct FitOutcome {
    std::optional<LawFit> fit;
    FitFailure failure = FitFailure::too_few_rows;
};

inline FitOutcome try_fit_crypto_law(std::span<const DailyLawRow> rows) {
    FitOutcome out;
    if (rows.size() < 3) return out;
    double sxy = 0.0, sxx = 0.0, ybar = 0.0;
    for (const auto& r : rows) {
        sxy += r.x() * r.y();
        sxx += r.x() * r.x();
        ybar += r.y();
    }
    ybar /= static_cast<double>(rows.size());
    if (!(sxx > 0.0)) {
        out.failure = FitFailure::zero_x;
        return out;
    }
    const double slope = sxy / sxx;
    double ss_res = 0.0, ss_tot = 0.0;
    for (const auto& r : rows) {
        const double e = r.y() - slope * r.x();
        ss_res += e * e;
        ss_tot += (r.y() - ybar) * (r.y() - ybar);
    }
    if (!(ss_tot > 0.0)) {
        out.failure = FitFailure::constant_y;
        return out;
    }
    out.fit = LawFit{slope, 1.0 - ss_res / ss_tot, rows.size()};
    return out;
}

inline LawFit fit_crypto_law(std::span<const DailyLawRow> rows) {
    auto o = try_fit_crypto_law(rows);
    if (!o.fit) throw ValidationError(std::string("cannot fit crypto law: ") + to_string(o.failure));
    return *o.fit;
}

// z-score filter then fit; nullopt when fewer than 3 rows survive or the fit
// is undefined.
inline std::optional<LawFit> filtered_fit(std::span<const DailyLawRow> rows,
                                          double z_threshold = 3.0) {
    if (rows.size() < 3) return std::nullopt;
    const auto kept = zscore_filter(rows, z_threshold);
    return try_fit_crypto_law(kept).fit;
}

struct SlidingFit {
    DayIndex end_date = 0;  // last day inside the window
    LawFit fit;
    double xi_clamped = 0.0;  // max(xi, 0), for plotting
};

struct SlidingOptions {
    int window_days = 30;
    int step_days = 1;
    double z_threshold = 3.0;
};

// `rows` must be sorted by date. Windows cover whole days
// [end - window_days + 1, end] and start once a full window fits.
inline std::vector<SlidingFit> sliding_cryptoness(std::span<const DailyLawRow> rows,
                                                  const SlidingOptions& opt = {}) {
    if (opt.window_days < 1 || opt.step_days < 1)
        throw ValidationError("window and step must be positive");
    for (std::size_t i = 1; i < rows.size(); ++i)
        if (rows[i].date <= rows[i - 1].date) throw ValidationError("rows must be date-sorted");
    std::vector<SlidingFit> out;
    if (rows.empty()) return out;
    const DayIndex first = rows.front().date, last = rows.back().date;
    for (DayIndex end = first + opt.window_days - 1; end <= std::max(last, first + opt.window_days - 1);
         end += opt.step_days) {
        auto lo = std::lower_bound(rows.begin(), rows.end(), end - opt.window_days + 1,
                                   [](const DailyLawRow& r, DayIndex d) { return r.date < d; });
        auto hi = std::upper_bound(rows.begin(), rows.end(), end,
                                   [](DayIndex d, const DailyLawRow& r) { return d < r.date; });
        if (auto fit = filtered_fit(std::span<const DailyLawRow>(lo, hi), opt.z_threshold))
            out.push_back({end, *fit, std::max(fit->xi, 0.0)});
        if (end >= last) break;
    }
    return out;
}

struct IsothermBins {
    double t_min = 0.0, t_max = 0.0, width = 0.0;
    std::vector<std::vector<std::pair<double, double>>> points;  // (P_vol, V_stab) per bin
    std::array<int, 2> most_populated{-1, -1};                   // ascending bin index
};

// Equal-width bins over [min T_liq, max T_liq]; the maximum lands in the last bin.
inline IsothermBins isotherm_bins(std::span<const DailyLawRow> rows, int n_bins) {
    if (n_bins < 2) throw ValidationError("isotherms need at least 2 bins");
    if (rows.empty()) throw ValidationError("isotherms need rows");
    IsothermBins b;
    b.t_min = b.t_max = rows.front().t_liq;
    for (const auto& r : rows) {
        b.t_min = std::min(b.t_min, r.t_liq);
        b.t_max = std::max(b.t_max, r.t_liq);
    }
    if (!(b.t_max > b.t_min)) throw ValidationError("degenerate T_liq range for isotherm bins");
    b.width = (b.t_max - b.t_min) / n_bins;
    b.points.resize(static_cast<std::size_t>(n_bins));
    for (const auto& r : rows) {
        auto i = static_cast<int>(std::floor((r.t_liq - b.t_min) / b.width));
        i = std::clamp(i, 0, n_bins - 1);
        b.points[static_cast<std::size_t>(i)].emplace_back(r.p_vol, r.v_stab);
    }
    std::vector<int> order(static_cast<std::size_t>(n_bins));
    for (int i = 0; i < n_bins; ++i) order[static_cast<std::size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](int a, int c) {
        return b.points[static_cast<std::size_t>(a)].size() > b.points[static_cast<std::size_t>(c)].size();
    });
    b.most_populated = {std::min(order[0], order[1]), std::max(order[0], order[1])};
    return b;
}

struct OpChange {
    std::optional<double> swap, mint, burn;
    std::optional<double> average;  // mean of the defined kinds
    std::array<double, 3> focus_daily{}, baseline_daily{};
};

// Relative change of the average daily number of swaps / mints / burns in
// `focus` against the union of the `baseline` windows.
inline OpChange op_change(const EventLog& log, const PoolId& pool, const TimeWindow& focus,
                          std::span<const TimeWindow> baseline) {
    log.pool(pool);
    focus.validate();
    if (baseline.empty()) throw ValidationError("opChange needs a baseline window");
    for (std::size_t i = 0; i < baseline.size(); ++i) {
        baseline[i].validate();
        if (baseline[i].start < focus.end && focus.start < baseline[i].end)
            throw ValidationError("focus and baseline windows overlap");
        for (std::size_t j = i + 1; j < baseline.size(); ++j)
            if (baseline[i].start < baseline[j].end && baseline[j].start < baseline[i].end)
                throw ValidationError("baseline windows overlap");
    }
    auto in_baseline = [&](Timestamp t) {
        return std::any_of(baseline.begin(), baseline.end(),
                           [&](const TimeWindow& w) { return w.contains(t); });
    };
    std::array<double, 3> f{}, b{};
    for (const auto& s : log.swaps) {
        if (s.pool != pool) continue;
        if (focus.contains(s.ts)) ++f[0];
        else if (in_baseline(s.ts)) ++b[0];
    }
    for (const auto& l : log.liquidity) {
        if (l.pool != pool) continue;
        const std::size_t k = l.kind == LiquidityKind::mint ? 1 : 2;
        if (focus.contains(l.ts)) ++f[k];
        else if (in_baseline(l.ts)) ++b[k];
    }
    double base_days = 0.0;
    for (const auto& w : baseline) base_days += static_cast<double>(w.day_count());
    const double focus_days = static_cast<double>(focus.day_count());
    OpChange out;
    std::array<std::optional<double>*, 3> slots{&out.swap, &out.mint, &out.burn};
    double sum = 0.0;
    int defined = 0;
    for (std::size_t k = 0; k < 3; ++k) {
        out.focus_daily[k] = f[k] / focus_days;
        out.baseline_daily[k] = b[k] / base_days;
        if (out.baseline_daily[k] > 0.0) {
            *slots[k] = (out.focus_daily[k] - out.baseline_daily[k]) / out.baseline_daily[k];
            sum += **slots[k];
            ++defined;
        }
    }
    if (defined) out.average = sum / defined;
    return out;
}

inline OpChange op_change(const EventLog& log, const PoolId& pool, const TimeWindow& focus,
                          const TimeWindow& baseline) {
    return op_change(log, pool, focus, std::span<const TimeWindow>(&baseline, 1));
}

struct RPoolDistribution {
    std::vector<double> values;  // R_pool of fits with xi > floor, in input order
    double mean = std::numeric_limits<double>::quiet_NaN();
    double median = std::numeric_limits<double>::quiet_NaN();
    double min = std::numeric_limits<double>::quiet_NaN();
    double max = std::numeric_limits<double>::quiet_NaN();
    std::optional<int> magnitude;  // floor(log10(median)) when the median is positive
};

inline RPoolDistribution rpool_distribution(std::span<const SlidingFit> fits,
                                            double xi_floor = 0.3) {
    RPoolDistribution d;
    for (const auto& f : fits)
        if (f.fit.xi > xi_floor) d.values.push_back(f.fit.r_pool);
    if (d.values.empty()) return d;
    std::vector<double> sorted = d.values;
    std::sort(sorted.begin(), sorted.end());
    double s = 0.0;
    for (double v : sorted) s += v;
    d.mean = s / static_cast<double>(sorted.size());
    const std::size_t m = sorted.size() / 2;
    d.median = sorted.size() % 2 ? sorted[m] : 0.5 * (sorted[m - 1] + sorted[m]);
    d.min = sorted.front();
    d.max = sorted.back();
    if (d.median > 0.0) d.magnitude = static_cast<int>(std::floor(std::log10(d.median)));
    return d;
}

}  // namespace ammlens
