#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "segeval/log.hpp"
#include "segeval/thickness.hpp"

using namespace segeval;

namespace {

// Slab t voxels thick along x, spanning y and z with a one-voxel background margin.
BinaryMask slab(std::size_t t, VoxelSpacing s, std::size_t lateral = 24, std::size_t nx = 0) {
    const Dims d{std::max(nx, t + 4), lateral, lateral};
    std::vector<std::uint8_t> v(d.size(), 0);
    for (std::size_t z = 1; z + 1 < d.nz; ++z)
        for (std::size_t y = 1; y + 1 < d.ny; ++y)
            for (std::size_t x = 2; x < 2 + t; ++x) v[d.index(x, y, z)] = 1;
    return BinaryMask(d, s, std::move(v));
}

BinaryMask ball(std::size_t n, double radius, VoxelSpacing s, std::array<double, 3> c) {
    const Dims d{n, n, n};
    std::vector<std::uint8_t> v(d.size(), 0);
    for (std::size_t z = 0; z < n; ++z)
        for (std::size_t y = 0; y < n; ++y)
            for (std::size_t x = 0; x < n; ++x) {
                const double dx = static_cast<double>(x) - c[0], dy = static_cast<double>(y) - c[1],
                             dz = static_cast<double>(z) - c[2];
                v[d.index(x, y, z)] = dx * dx + dy * dy + dz * dz <= radius * radius;
            }
    return BinaryMask(d, s, std::move(v));
}

} // namespace

TEST(Thickness, SlabsWithinHalfVoxel) {
    for (double sx : {1.0, 0.31, 0.7}) {
        const VoxelSpacing s{sx, 0.46, 0.46};
        for (std::size_t t = 1; t <= 10; ++t) {
            const auto r = mean_thickness_mm(slab(t, s));
            EXPECT_LE(std::abs(r.mean_thickness_mm - static_cast<double>(t) * sx), 0.5 * sx + 1e-9)
                << "t=" << t << " sx=" << sx;
            EXPECT_GT(r.medial_voxel_count, 0u);
        }
    }
}

TEST(Thickness, OddAndEvenSlabValues) {
    const VoxelSpacing s{1, 1, 1};
    EXPECT_NEAR(mean_thickness_mm(slab(5, s, 40)).mean_thickness_mm, 5.5, 1e-9);
    EXPECT_NEAR(mean_thickness_mm(slab(6, s, 40)).mean_thickness_mm, 5.5, 1e-9);
}

TEST(Thickness, BallNearDiameterAndGrowing) {
    double previous = 0.0;
    for (double r : {3.0, 4.0, 5.0, 6.0, 7.0}) {
        const auto n = static_cast<std::size_t>(2 * r + 5);
        const double c = (static_cast<double>(n) - 1) / 2;
        const auto m = ball(n, r, {1, 1, 1}, {c, c, c});
        const double t = mean_thickness_mm(m).mean_thickness_mm;
        EXPECT_NEAR(t, 2 * r, 0.5) << "r=" << r;
        EXPECT_GT(t, previous);
        previous = t;
    }
}

TEST(Thickness, EmptyMaskIsZeroWithWarning) {
    log::ScopedCapture cap;
    const auto r = mean_thickness_mm(BinaryMask::empty({4, 4, 4}, {1, 1, 1}));
    EXPECT_TRUE(r.empty_mask);
    EXPECT_EQ(r.mean_thickness_mm, 0.0);
    EXPECT_EQ(cap.messages().size(), 1u);
}

TEST(Thickness, MeniscusRejected) {
    EXPECT_THROW(mean_thickness_mm(BinaryMask::empty({2, 2, 2}, {1, 1, 1}, Tissue::meniscus)), ValidationError);
}

TEST(Thickness, TranslationInvariant) {
    std::mt19937_64 rng(21);
    const VoxelSpacing s{0.31, 0.46, 0.70};
    const auto m = oracle::random_blobs(rng, {10, 10, 10}, s, 3);
    const Dims big{16, 13, 12};
    std::vector<std::uint8_t> v(big.size(), 0);
    for (std::size_t i = 0; i < m.size(); ++i) {
        const auto c = m.dims().coords(i);
        v[big.index(c[0] + 4, c[1] + 2, c[2] + 1)] = m[i];
    }
    EXPECT_NEAR(mean_thickness_mm(m).mean_thickness_mm, mean_thickness_mm(BinaryMask(big, s, v)).mean_thickness_mm,
                1e-12);
}

TEST(Thickness, ScalesWithIsotropicSpacing) {
    std::mt19937_64 rng(22);
    const VoxelSpacing s{0.31, 0.46, 0.70};
    const auto m = oracle::random_blobs(rng, {12, 12, 12}, s, 4);
    const double base = mean_thickness_mm(m).mean_thickness_mm;
    for (double c : {0.5, 2.0, 3.7})
        EXPECT_NEAR(mean_thickness_mm(m.with_spacing({c * 0.31, c * 0.46, c * 0.70})).mean_thickness_mm, c * base,
                    1e-9 * c * base);
}

TEST(ThicknessError, SlabDifference) {
    const VoxelSpacing s{0.31, 0.46, 0.46};
    const auto e = thickness_difference(slab(4, s, 24, 12), slab(6, s, 24, 12));
    EXPECT_NEAR(e.signed_mm, -2 * 0.31, 1e-9);
    EXPECT_NEAR(e.magnitude_mm, 2 * 0.31, 1e-9);
    EXPECT_EQ(thickness_error_mm(slab(4, s), slab(4, s)), 0.0);
}

TEST(ThicknessError, ShapeAndTissueChecks) {
    const VoxelSpacing s{1, 1, 1};
    EXPECT_THROW(thickness_difference(slab(2, s), slab(2, s, 20)), ShapeMismatch);
    EXPECT_THROW(thickness_difference(slab(2, s), slab(2, s).with_tissue(Tissue::tibial_cartilage)),
                 ValidationError);
}

TEST(ThicknessError, EmptySideFlagged) {
    log::ScopedCapture cap;
    const auto m = slab(3, {1, 1, 1});
    const auto e = thickness_difference(BinaryMask::empty(m.dims(), m.spacing()), m);
    EXPECT_TRUE(e.any_empty());
    EXPECT_TRUE(e.predicted.empty_mask);
}

TEST(Longitudinal, SignedChange) {
    ThicknessResult t0, t1;
    t0.subject_id = t1.subject_id = "S1";
    t0.model = t1.model = "m";
    t1.timepoint = Timepoint::year1;
    t0.mean_thickness_mm = 2.0;
    t1.mean_thickness_mm = 1.9;
    EXPECT_NEAR(longitudinal_change_mm(t0, t1), -0.1, 1e-12);
    EXPECT_THROW(longitudinal_change_mm(t1, t0), ValidationError);
    t1.subject_id = "S2";
    EXPECT_THROW(longitudinal_change_mm(t0, t1), ValidationError);
}

TEST(BlandAltman, TwoValues) {
    const std::vector<double> d{-0.1, 0.1};
    const auto r = bland_altman(d);
    EXPECT_EQ(r.bias, 0.0);
    EXPECT_NEAR(r.sd, 0.14142, 1e-5);
    EXPECT_NEAR(r.loa_low, -0.2772, 1e-4);
    EXPECT_NEAR(r.loa_high, 0.2772, 1e-4);
    EXPECT_EQ(r.n, 2u);
}

TEST(BlandAltman, ThreeValues) {
    const std::vector<double> d{0.02, 0.04, 0.06};
    const auto r = bland_altman(d);
    EXPECT_NEAR(r.bias, 0.04, 1e-12);
    EXPECT_NEAR(r.sd, 0.02, 1e-12);
    EXPECT_NEAR(r.loa_low, 0.0008, 1e-12);
    EXPECT_NEAR(r.loa_high, 0.0792, 1e-12);
}

TEST(BlandAltman, TooFewValues) {
    EXPECT_THROW(bland_altman(std::vector<double>{0.1}), ValidationError);
    EXPECT_THROW(bland_altman(std::vector<double>{}), ValidationError);
}

TEST(BlandAltman, AntisymmetricSetHasExactlyZeroBias) {
    std::mt19937_64 rng(23);
    for (int t = 0; t < 50; ++t) {
        std::vector<double> d;
        const auto n = oracle::pick(rng, 1, 40);
        for (std::size_t i = 0; i < n; ++i) {
            const double v = (oracle::uniform(rng) - 0.5) * std::pow(10.0, oracle::uniform(rng) * 6 - 3);
            d.push_back(v);
            d.push_back(-v);
        }
        std::shuffle(d.begin(), d.end(), rng);
        EXPECT_EQ(bland_altman(d).bias, 0.0);
    }
}

TEST(BlandAltman, OrderIndependentBiasAndShiftEquivariance) {
    std::mt19937_64 rng(24);
    std::vector<double> d;
    for (int i = 0; i < 30; ++i) d.push_back(oracle::uniform(rng) - 0.3);
    const auto a = bland_altman(d);
    auto shuffled = d;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    EXPECT_EQ(bland_altman(shuffled).bias, a.bias);
    for (auto& v : d) v += 0.25;
    const auto b = bland_altman(d);
    EXPECT_NEAR(b.bias, a.bias + 0.25, 1e-12);
    EXPECT_NEAR(b.sd, a.sd, 1e-12);
    EXPECT_NEAR(b.loa_high - b.loa_low, 2 * kLimitsOfAgreementZ * b.sd, 1e-12);
}
