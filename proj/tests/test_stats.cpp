#include <gtest/gtest.h>

#include <boost/math/distributions/chi_squared.hpp>
#include <random>

#include "oracles.hpp"
#include "segeval/stats.hpp"

using namespace segeval;
using namespace segeval::stats;

namespace {
using Groups = std::vector<std::vector<double>>;

const Groups kWorked{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}};

Groups random_groups(std::mt19937_64& rng, std::size_t k, std::size_t lo, std::size_t hi, bool ties) {
    Groups g(k);
    for (auto& x : g) {
        const auto n = oracle::pick(rng, lo, hi);
        for (std::size_t i = 0; i < n; ++i)
            x.push_back(ties ? static_cast<double>(oracle::pick(rng, 0, 5)) : oracle::uniform(rng));
    }
    return g;
}

// Monte Carlo permutation p of the KW statistic.
double kw_monte_carlo_p(const Groups& groups, std::mt19937_64& rng, int draws) {
    std::vector<double> all;
    for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
    const double observed = oracle::kw_statistic(groups);
    int hits = 0;
    for (int d = 0; d < draws; ++d) {
        std::shuffle(all.begin(), all.end(), rng);
        Groups perm;
        std::size_t at = 0;
        for (const auto& g : groups) {
            perm.emplace_back(all.begin() + static_cast<long>(at), all.begin() + static_cast<long>(at + g.size()));
            at += g.size();
        }
        hits += oracle::kw_statistic(perm) >= observed - 1e-9;
    }
    return static_cast<double>(hits) / draws;
}
} // namespace

TEST(ChiSquare, MatchesBoost) {
    for (double df : {1.0, 2.0, 3.0, 5.0, 14.0, 40.0})
        for (double x : {0.0, 0.01, 0.5, 1.0, 2.5, 7.2, 15.0, 60.0, 200.0}) {
            const double want = boost::math::cdf(boost::math::complement(boost::math::chi_squared(df), x));
            EXPECT_NEAR(chi2_sf(x, df), want, 1e-12 + 1e-10 * want) << "df=" << df << " x=" << x;
        }
}

TEST(ChiSquare, KnownTails) {
    EXPECT_NEAR(chi2_sf(7.2, 2), std::exp(-3.6), 1e-14);
    EXPECT_NEAR(chi2_sf(3.841458820694124, 1), 0.05, 1e-12);
    EXPECT_THROW(regularized_gamma_q(0.0, 1.0), ValidationError);
}

TEST(KruskalWallis, WorkedExample) {
    const auto r = kruskal_wallis(kWorked);
    EXPECT_NEAR(r.H, 7.2, 1e-9);
    EXPECT_EQ(r.df, 2u);
    EXPECT_NEAR(r.p, 0.0273, 1e-4);
    EXPECT_FALSE(r.degenerate);
}

TEST(KruskalWallis, MatchesFromScratchStatistic) {
    std::mt19937_64 rng(51);
    for (int t = 0; t < 100; ++t) {
        const auto g = random_groups(rng, oracle::pick(rng, 2, 6), 1, 8, t % 2 == 0);
        std::size_t n = 0;
        for (const auto& x : g) n += x.size();
        if (n < 3) continue;
        const auto r = kruskal_wallis(g);
        if (r.degenerate) continue;
        EXPECT_NEAR(r.H, std::max(0.0, oracle::kw_statistic(g)), 1e-9);
    }
}

TEST(KruskalWallis, AllTiedIsDegenerate) {
    const auto r = kruskal_wallis(Groups{{2, 2}, {2, 2, 2}});
    EXPECT_TRUE(r.degenerate);
    EXPECT_EQ(r.H, 0.0);
    EXPECT_EQ(r.p, 1.0);
}

TEST(KruskalWallis, Errors) {
    EXPECT_THROW(kruskal_wallis(Groups{{1, 2, 3}}), ValidationError);
    EXPECT_THROW(kruskal_wallis(Groups{{1}, {}}), ValidationError);
    EXPECT_THROW(kruskal_wallis(Groups{{1}, {2}}), ValidationError);
    EXPECT_THROW(kruskal_wallis(Groups{{1, NAN}, {2}}), ValidationError);
}

TEST(KruskalWallis, InvariantUnderMonotoneTransform) {
    std::mt19937_64 rng(52);
    for (int t = 0; t < 30; ++t) {
        auto g = random_groups(rng, 3, 2, 7, t % 2 == 1);
        const auto a = kruskal_wallis(g);
        for (auto& x : g)
            for (auto& v : x) v = std::exp(3 * v) - 7;
        const auto b = kruskal_wallis(g);
        EXPECT_NEAR(a.H, b.H, 1e-12);
        EXPECT_NEAR(a.p, b.p, 1e-12);
    }
}

TEST(KruskalWallis, TwoGroupsAgreeWithMannWhitney) {
    std::mt19937_64 rng(53);
    for (int t = 0; t < 200; ++t) {
        auto g = random_groups(rng, 2, 1, 10, t % 3 == 0);
        if (g[0].size() + g[1].size() < 3) continue;
        const auto r = kruskal_wallis(g);
        if (r.degenerate) continue;
        EXPECT_NEAR(r.p, oracle::mann_whitney_p(g[0], g[1]), 0.02);
    }
}

TEST(KruskalWallis, ChiSquareCloseToPermutationAtFourteenPerGroup) {
    std::mt19937_64 rng(54);
    for (int t = 0; t < 6; ++t) {
        Groups g(3);
        for (std::size_t i = 0; i < g.size(); ++i)
            for (int s = 0; s < 14; ++s) g[i].push_back(oracle::uniform(rng) + 0.15 * static_cast<double>(i * (t % 3)));
        EXPECT_NEAR(kruskal_wallis(g).p, kw_monte_carlo_p(g, rng, 20000), 0.02);
    }
}

TEST(Dunn, WorkedExample) {
    const auto d = dunn_posthoc(kWorked);
    EXPECT_EQ(d.comparisons, 3u);
    const auto& p = d.pair(0, 2);
    EXPECT_NEAR(std::abs(p.z), 6.0 / std::sqrt(5.0), 1e-9);
    EXPECT_NEAR(p.p_raw, 0.0073, 1e-4);
    EXPECT_NEAR(p.p_adjusted, 0.0219, 1e-4);
    EXPECT_NEAR(p.p_adjusted, 3 * p.p_raw, 1e-15);
    EXPECT_NEAR(std::abs(d.pair(0, 1).z), 3.0 / std::sqrt(5.0), 1e-9);
}

TEST(Dunn, AntisymmetricAndGroupOrderInvariant) {
    std::mt19937_64 rng(55);
    for (int t = 0; t < 20; ++t) {
        auto g = random_groups(rng, 4, 2, 6, t % 2 == 0);
        const auto a = dunn_posthoc(g);
        if (a.degenerate) continue;
        std::vector<std::size_t> order{0, 1, 2, 3};
        std::shuffle(order.begin(), order.end(), rng);
        Groups h;
        for (auto i : order) h.push_back(g[i]);
        const auto b = dunn_posthoc(h);
        std::vector<double> pa, pb;
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = i + 1; j < 4; ++j) {
                std::size_t bi = 0, bj = 0;
                for (std::size_t q = 0; q < 4; ++q) {
                    if (order[q] == i) bi = q;
                    if (order[q] == j) bj = q;
                }
                const auto& x = a.pair(i, j);
                const auto& y = b.pair(bi, bj);
                const double zy = y.i == bi ? y.z : -y.z;
                EXPECT_NEAR(x.z, zy, 1e-12);
                pa.push_back(x.p_adjusted);
                pb.push_back(y.p_adjusted);
            }
        std::sort(pa.begin(), pa.end());
        std::sort(pb.begin(), pb.end());
        for (std::size_t q = 0; q < pa.size(); ++q) EXPECT_NEAR(pa[q], pb[q], 1e-12);
    }
}

TEST(Dunn, AdjustedCappedAtOne) {
    const auto d = dunn_posthoc(Groups{{1, 2, 3}, {1.5, 2.5, 3.5}, {1.2, 2.2, 3.2}});
    for (const auto& p : d.pairs) {
        EXPECT_LE(p.p_adjusted, 1.0);
        EXPECT_GE(p.p_adjusted, p.p_raw);
    }
}

TEST(Pearson, WorkedExample) {
    const std::vector<double> x{1, 2, 3, 4}, y{2, 1, 4, 3};
    const auto r = pearson(x, y);
    EXPECT_EQ(r.r, 0.6);
    EXPECT_EQ(r.strength, Strength::strong);
    EXPECT_EQ(r.n, 4u);
}

TEST(Pearson, Bands) {
    EXPECT_EQ(strength_of(0.0), Strength::very_weak);
    EXPECT_EQ(strength_of(0.19), Strength::very_weak);
    EXPECT_EQ(strength_of(0.195), Strength::very_weak);
    EXPECT_EQ(strength_of(0.2), Strength::weak);
    EXPECT_EQ(strength_of(-0.45), Strength::moderate);
    EXPECT_EQ(strength_of(0.79), Strength::strong);
    EXPECT_EQ(strength_of(0.8), Strength::very_strong);
    EXPECT_EQ(strength_of(-1.0), Strength::very_strong);
    EXPECT_EQ(to_string(Strength::very_weak), "very weak");
}

TEST(Pearson, AffineInvarianceAndSign) {
    std::mt19937_64 rng(56);
    std::vector<double> x, y;
    for (int i = 0; i < 20; ++i) {
        x.push_back(oracle::uniform(rng));
        y.push_back(x.back() + oracle::uniform(rng));
    }
    const double r = pearson(x, y).r;
    std::vector<double> y2;
    for (double v : y) y2.push_back(-3 * v + 11);
    EXPECT_NEAR(pearson(x, y2).r, -r, 1e-12);
    EXPECT_NEAR(pearson(y, x).r, r, 1e-15);
    EXPECT_NEAR(pearson(x, x).r, 1.0, 1e-15);
}

TEST(Pearson, Errors) {
    const std::vector<double> a{1, 2, 3}, b{1, 2}, c{5, 5, 5};
    EXPECT_THROW(pearson(a, b), ValidationError);
    EXPECT_THROW(pearson(a, c), ValidationError);
    EXPECT_THROW(pearson(std::vector<double>{1}, std::vector<double>{1}), ValidationError);
}
