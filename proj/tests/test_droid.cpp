#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "segeval/droid.hpp"
#include "segeval/log.hpp"

using namespace segeval;

namespace {

const VoxelSpacing kUnit{1, 1, 1};

// Column of foreground in slices [z0, z1) along z.
BinaryMask column(Dims d, std::size_t z0, std::size_t z1) {
    std::vector<std::uint8_t> v(d.size(), 0);
    for (std::size_t z = z0; z < z1; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x) v[d.index(x, y, z)] = 1;
    return BinaryMask(d, kUnit, std::move(v));
}

BinaryMask flip_z(const BinaryMask& m) {
    const Dims& d = m.dims();
    std::vector<std::uint8_t> v(d.size());
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x) v[d.index(x, y, d.nz - 1 - z)] = m.at(x, y, z);
    return BinaryMask(d, m.spacing(), std::move(v));
}

DepthProfile one(const BinaryMask& p, const BinaryMask& g, std::size_t bins = kDefaultDepthBins) {
    return depth_profile(std::span<const BinaryMask>(&p, 1), std::span<const BinaryMask>(&g, 1), Axis::z, bins);
}

} // namespace

TEST(Droid, IdenticalIsOneEverywhere) {
    const auto g = column({3, 3, 41}, 0, 41);
    const auto p = one(g, g);
    ASSERT_EQ(p.bins.size(), 20u);
    for (const auto& b : p.bins) {
        ASSERT_TRUE(b.mean_dice.has_value());
        EXPECT_EQ(*b.mean_dice, 1.0);
    }
    EXPECT_EQ(p.bins.front().low, 0.0);
    EXPECT_EQ(p.bins.back().high, 100.0);
}

TEST(Droid, EmptyGroundTruthSkipped) {
    log::ScopedCapture cap;
    const auto e = BinaryMask::empty({3, 3, 5}, kUnit);
    const auto p = one(column({3, 3, 5}, 0, 5), e);
    EXPECT_EQ(p.scans_skipped, 1u);
    EXPECT_EQ(p.scans_used, 0u);
    for (const auto& b : p.bins) EXPECT_FALSE(b.mean_dice.has_value());
    EXPECT_EQ(cap.messages().size(), 1u);
}

TEST(Droid, HalfMatch) {
    const Dims d{2, 2, 41};
    const auto p = one(column(d, 0, 20), column(d, 0, 41));
    for (std::size_t b = 0; b < 9; ++b) EXPECT_EQ(*p.bins[b].mean_dice, 1.0) << b;
    for (std::size_t b = 11; b < 20; ++b) EXPECT_EQ(*p.bins[b].mean_dice, 0.0) << b;
}

TEST(Droid, BoundarySliceCountsInBothBins) {
    const Dims d{1, 1, 3};
    const auto g = column(d, 0, 3);
    const auto p = one(g, g, 2);
    EXPECT_EQ(p.bins[0].n, 2u);
    EXPECT_EQ(p.bins[1].n, 2u);
}

TEST(Droid, SingleSliceSitsAtMiddle) {
    const Dims d{2, 2, 5};
    const auto g = column(d, 2, 3);
    const auto s = slice_samples(g, g, Axis::z);
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s[0].position_percent(), 50.0);
}

TEST(Droid, PaddingGroundTruthExtentDoesNotMove) {
    std::mt19937_64 rng(31);
    const Dims d{5, 5, 12};
    const auto g = oracle::random_nonempty_mask(rng, d, kUnit, 0.5);
    const auto pr = oracle::random_mask(rng, d, kUnit, 0.5);
    const Dims big{5, 5, 20};
    std::vector<std::uint8_t> gv(big.size(), 0), pv(big.size(), 0);
    for (std::size_t i = 0; i < d.size(); ++i) {
        const auto c = d.coords(i);
        gv[big.index(c[0], c[1], c[2] + 3)] = g[i];
        pv[big.index(c[0], c[1], c[2] + 3)] = pr[i];
    }
    const auto a = one(pr, g), b = one(BinaryMask(big, kUnit, pv), BinaryMask(big, kUnit, gv));
    for (std::size_t k = 0; k < a.bins.size(); ++k) {
        EXPECT_EQ(a.bins[k].n, b.bins[k].n);
        EXPECT_EQ(a.bins[k].mean_dice, b.bins[k].mean_dice);
    }
}

TEST(Droid, MirrorReversesBins) {
    std::mt19937_64 rng(32);
    const Dims d{4, 4, 17};
    const auto g = oracle::random_nonempty_mask(rng, d, kUnit, 0.5);
    const auto pr = oracle::random_mask(rng, d, kUnit, 0.5);
    const auto a = one(pr, g), b = one(flip_z(pr), flip_z(g));
    const std::size_t n = a.bins.size();
    for (std::size_t k = 0; k < n; ++k) {
        EXPECT_EQ(a.bins[k].n, b.bins[n - 1 - k].n);
        ASSERT_EQ(a.bins[k].mean_dice.has_value(), b.bins[n - 1 - k].mean_dice.has_value());
        if (a.bins[k].mean_dice) {
            EXPECT_NEAR(*a.bins[k].mean_dice, *b.bins[n - 1 - k].mean_dice, 1e-15);
        }
    }
}

TEST(Droid, SlicesMatchOracle) {
    std::mt19937_64 rng(33);
    for (int t = 0; t < 20; ++t) {
        const auto d = oracle::random_dims(rng, 1, 9);
        const auto g = oracle::random_mask(rng, d, kUnit, oracle::uniform(rng));
        const auto pr = oracle::random_mask(rng, d, kUnit, oracle::uniform(rng));
        const auto got = slice_samples(pr, g, Axis::z);
        const auto want = oracle::slice_dice_z(pr, g);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < want.size(); ++i) {
            EXPECT_NEAR(got[i].position_percent(), want[i].position, 1e-12);
            EXPECT_NEAR(got[i].dice, want[i].dice, 1e-15);
        }
    }
}

TEST(Droid, BinMeansMatchPooledOracle) {
    std::mt19937_64 rng(34);
    const Dims d{4, 4, 13};
    std::vector<BinaryMask> ps, gs;
    std::vector<oracle::SliceValue> pooled;
    for (int s = 0; s < 4; ++s) {
        gs.push_back(oracle::random_nonempty_mask(rng, d, kUnit, 0.4));
        ps.push_back(oracle::random_mask(rng, d, kUnit, 0.4));
        const auto v = oracle::slice_dice_z(ps.back(), gs.back());
        pooled.insert(pooled.end(), v.begin(), v.end());
    }
    const auto p = depth_profile(ps, gs, Axis::z, 10);
    for (std::size_t b = 0; b < 10; ++b) {
        double sum = 0;
        std::size_t n = 0;
        for (const auto& v : pooled)
            if (v.position >= 10.0 * b - 1e-9 && v.position <= 10.0 * (b + 1) + 1e-9) {
                sum += v.dice;
                ++n;
            }
        EXPECT_EQ(p.bins[b].n, n);
        if (n) {
            EXPECT_NEAR(*p.bins[b].mean_dice, sum / n, 1e-12);
        }
    }
}

TEST(Droid, Errors) {
    const auto g = column({2, 2, 4}, 0, 4);
    EXPECT_THROW(one(g, g, 1), ValidationError);
    EXPECT_THROW(one(BinaryMask::empty({2, 2, 3}, kUnit), g), ShapeMismatch);
    std::vector<BinaryMask> two{g, g};
    EXPECT_THROW(depth_profile(two, std::span<const BinaryMask>(&g, 1), Axis::z), ValidationError);
}
