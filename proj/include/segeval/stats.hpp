#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"

namespace segeval::stats {

// ---------------------------------------------------------------------------
// Distributions

/// Regularized upper incomplete gamma Q(a, x): series below a+1, Lentz continued fraction above.
inline double regularized_gamma_q(double a, double x) {
    if (!(a > 0.0)) throw ValidationError("regularized_gamma_q: a must be positive");
    if (x <= 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    constexpr int kMaxIter = 10000;
    constexpr double kEps = 1e-16;
    const double log_prefix = -x + a * std::log(x) - std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int n = 0; n < kMaxIter; ++n) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::abs(del) < std::abs(sum) * kEps) break;
        }
        return std::clamp(1.0 - sum * std::exp(log_prefix), 0.0, 1.0);
    }
    constexpr double kTiny = std::numeric_limits<double>::min() / kEps;
    double b = x + 1.0 - a, c = 1.0 / kTiny, d = 1.0 / b, h = d;
    for (int i = 1; i < kMaxIter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < kTiny) d = kTiny;
        c = b + an / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kEps) break;
    }
    return std::clamp(std::exp(log_prefix) * h, 0.0, 1.0);
}

/// Upper tail of the chi-square distribution.
inline double chi2_sf(double x, double df) { return regularized_gamma_q(0.5 * df, 0.5 * x); }

/// Two-sided standard normal tail probability P(|Z| >= |z|).
inline double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

// ---------------------------------------------------------------------------
// Ranking

struct PooledRanks {
    /// Mid-rank of every observation, groups concatenated in order.
    std::vector<double> ranks;
    /// Sum over tie groups of t^3 - t.
    double tie_sum = 0.0;
    std::size_t n = 0;
};

inline PooledRanks pooled_midranks(std::span<const std::vector<double>> groups) {
    PooledRanks r;
    std::vector<double> values;
    for (const auto& g : groups) values.insert(values.end(), g.begin(), g.end());
    r.n = values.size();
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    r.ranks.assign(values.size(), 0.0);
    for (std::size_t i = 0; i < order.size();) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r.ranks[order[k]] = mid;
        const double t = static_cast<double>(j - i + 1);
        r.tie_sum += t * t * t - t;
        i = j + 1;
    }
    return r;
}

namespace detail {
inline void require_groups(std::span<const std::vector<double>> groups) {
    if (groups.size() < 2) throw ValidationError("rank tests need at least 2 groups");
    std::size_t total = 0;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        if (groups[i].empty()) throw ValidationError("group " + std::to_string(i) + " is empty");
        for (double v : groups[i])
            if (!std::isfinite(v)) throw ValidationError("group " + std::to_string(i) + " holds a non-finite value");
        total += groups[i].size();
    }
    if (total < 3) throw ValidationError("rank tests need at least 3 observations");
}

inline std::vector<double> mean_ranks(std::span<const std::vector<double>> groups, const PooledRanks& r) {
    std::vector<double> out;
    std::size_t at = 0;
    for (const auto& g : groups) {
        double s = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) s += r.ranks[at + i];
        out.push_back(s / static_cast<double>(g.size()));
        at += g.size();
    }
    return out;
}
} // namespace detail

// ---------------------------------------------------------------------------
// Kruskal-Wallis

struct KWResult {
    /// Tie-corrected statistic.
    double H = 0.0;
    std::size_t df = 0;
    double p = 1.0;
    std::vector<std::size_t> group_sizes;
    /// Every observation tied: the statistic is undefined and reported as H=0, p=1.
    bool degenerate = false;
};

inline KWResult kruskal_wallis(std::span<const std::vector<double>> groups) {
    detail::require_groups(groups);
    const auto r = pooled_midranks(groups);
    const double n = static_cast<double>(r.n);
    KWResult out;
    out.df = groups.size() - 1;
    for (const auto& g : groups) out.group_sizes.push_back(g.size());
    const double correction = 1.0 - r.tie_sum / (n * n * n - n);
    if (correction <= 0.0) {
        out.degenerate = true;
        return out;
    }
    const auto means = detail::mean_ranks(groups, r);
    double ss = 0.0;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const double rank_sum = means[i] * static_cast<double>(groups[i].size());
        ss += rank_sum * rank_sum / static_cast<double>(groups[i].size());
    }
    const double h = 12.0 / (n * (n + 1.0)) * ss - 3.0 * (n + 1.0);
    out.H = std::max(0.0, h / correction);
    out.p = chi2_sf(out.H, static_cast<double>(out.df));
    return out;
}

// ---------------------------------------------------------------------------
// Dunn post-hoc with Bonferroni correction

struct DunnPair {
    std::size_t i = 0, j = 0;
    /// (mean rank i - mean rank j) / se.
    double z = 0.0;
    double p_raw = 1.0;
    double p_adjusted = 1.0;
};

struct DunnResult {
    std::vector<DunnPair> pairs;
    std::size_t comparisons = 0;
    bool degenerate = false;

    const DunnPair& pair(std::size_t i, std::size_t j) const {
        for (const auto& p : pairs)
            if ((p.i == i && p.j == j) || (p.i == j && p.j == i)) return p;
        throw ValidationError("no Dunn pair (" + std::to_string(i) + ", " + std::to_string(j) + ")");
    }
};

inline DunnResult dunn_posthoc(std::span<const std::vector<double>> groups) {
    detail::require_groups(groups);
    const auto r = pooled_midranks(groups);
    const double n = static_cast<double>(r.n);
    const auto means = detail::mean_ranks(groups, r);
    const double base_var = n * (n + 1.0) / 12.0 - r.tie_sum / (12.0 * (n - 1.0));
    DunnResult out;
    const std::size_t k = groups.size();
    out.comparisons = k * (k - 1) / 2;
    out.degenerate = base_var <= 0.0;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = i + 1; j < k; ++j) {
            DunnPair p{i, j, 0.0, 1.0, 1.0};
            if (!out.degenerate) {
                const double se = std::sqrt(base_var * (1.0 / static_cast<double>(groups[i].size()) +
                                                        1.0 / static_cast<double>(groups[j].size())));
                p.z = (means[i] - means[j]) / se;
                p.p_raw = normal_two_sided_p(p.z);
                p.p_adjusted = std::min(1.0, p.p_raw * static_cast<double>(out.comparisons));
            }
            out.pairs.push_back(p);
        }
    return out;
}

// ---------------------------------------------------------------------------
// Pearson correlation

enum class Strength { very_weak, weak, moderate, strong, very_strong };

inline std::string_view to_string(Strength s) {
    switch (s) {
        case Strength::very_weak: return "very weak";
        case Strength::weak: return "weak";
        case Strength::moderate: return "moderate";
        case Strength::strong: return "strong";
        case Strength::very_strong: return "very strong";
    }
    return "?";
}

/// Bands 0-0.19, 0.2-0.39, 0.4-0.59, 0.6-0.79, 0.8-1 on |r|; gap values fall to the lower band.
inline Strength strength_of(double r) {
    const double a = std::abs(r);
    if (a >= 0.8) return Strength::very_strong;
    if (a >= 0.6) return Strength::strong;
    if (a >= 0.4) return Strength::moderate;
    if (a >= 0.2) return Strength::weak;
    return Strength::very_weak;
}

struct PearsonResult {
    double r = 0.0;
    std::size_t n = 0;
    Strength strength = Strength::very_weak;
};

inline PearsonResult pearson(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw ValidationError("pearson: sequences differ in length");
    if (x.size() < 2) throw ValidationError("pearson: needs at least 2 pairs");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx, dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) throw ValidationError("pearson: undefined for a constant sequence");
    const double r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    return {r, x.size(), strength_of(r)};
}

} // namespace segeval::stats
