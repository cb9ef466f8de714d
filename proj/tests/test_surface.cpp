#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "segeval/surface.hpp"

using namespace segeval;

namespace {
const VoxelSpacing kUnit{1, 1, 1};
const VoxelSpacing kDess{0.31, 0.46, 0.70};

SurfaceVoxelSet single(Dims d, VoxelSpacing s, std::uint32_t x, std::uint32_t y, std::uint32_t z) {
    return {d, s, {{x, y, z}}};
}
} // namespace

TEST(Surface, SingleVoxelCubeAndEmpty) {
    std::vector<std::uint8_t> v(27, 0);
    v[13] = 1;
    const auto s = extract_surface(BinaryMask({3, 3, 3}, kUnit, v));
    ASSERT_EQ(s.size(), 1u);
    EXPECT_EQ(s.voxels[0], (std::array<std::uint32_t, 3>{1, 1, 1}));

    const BinaryMask solid({4, 4, 4}, kUnit, std::vector<std::uint8_t>(64, 1));
    EXPECT_EQ(extract_surface(solid).size(), 56u);

    EXPECT_TRUE(extract_surface(BinaryMask::empty({4, 4, 4}, kUnit)).empty());
}

TEST(Surface, MatchesNeighborOracleOnRandomMasks) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 30; ++t) {
        const auto m = oracle::random_mask(rng, oracle::random_dims(rng, 1, 9), kUnit, oracle::uniform(rng));
        const auto got = extract_surface(m);
        const auto want = oracle::surface(m);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < want.size(); ++i)
            for (int a = 0; a < 3; ++a) EXPECT_EQ(got.voxels[i][a], want[i][a]);
    }
}

TEST(DistanceField, ThreeFourFive) {
    const auto f = distance_field(single({6, 6, 1}, kUnit, 0, 0, 0), {6, 6, 1}, kUnit);
    EXPECT_DOUBLE_EQ(f.at(3, 4, 0), 5.0);
    EXPECT_EQ(f.at(0, 0, 0), 0.0);
}

TEST(DistanceField, AnisotropicNeighbors) {
    const Dims d{3, 3, 3};
    const auto f = distance_field(single(d, kDess, 1, 1, 1), d, kDess);
    EXPECT_NEAR(f.at(1, 1, 2), 0.70, 1e-12);
    EXPECT_NEAR(f.at(2, 1, 1), 0.31, 1e-12);
    EXPECT_NEAR(f.at(1, 0, 1), 0.46, 1e-12);
    EXPECT_NEAR(f.at(0, 0, 0), std::sqrt(0.31 * 0.31 + 0.46 * 0.46 + 0.70 * 0.70), 1e-12);
}

TEST(DistanceField, EmptyReferenceThrows) {
    EXPECT_THROW(distance_field(SurfaceVoxelSet{{2, 2, 2}, kUnit, {}}, {2, 2, 2}, kUnit), ValidationError);
}

TEST(DistanceField, RandomReferenceMatchesBruteForce) {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 10; ++t) {
        const Dims d{8, 8, 8};
        const VoxelSpacing s{0.2 + oracle::uniform(rng), 0.2 + oracle::uniform(rng), 0.2 + oracle::uniform(rng)};
        const auto m = oracle::random_nonempty_mask(rng, d, s, 0.02 + 0.1 * oracle::uniform(rng));
        SurfaceVoxelSet ref{d, s, {}};
        std::vector<std::array<std::size_t, 3>> seeds;
        for (std::size_t i = 0; i < d.size(); ++i)
            if (m[i]) {
                const auto c = d.coords(i);
                ref.voxels.push_back({static_cast<std::uint32_t>(c[0]), static_cast<std::uint32_t>(c[1]),
                                      static_cast<std::uint32_t>(c[2])});
                seeds.push_back({c[0], c[1], c[2]});
            }
        const auto f = distance_field(ref, d, s);
        const auto want = oracle::nearest_distance(seeds, d, s);
        for (std::size_t i = 0; i < d.size(); ++i) ASSERT_NEAR(f[i], want[i], 1e-9);
    }
}

TEST(DistanceField, ZeroOnSurfaceAndLipschitz) {
    std::mt19937_64 rng(6);
    const Dims d{10, 9, 8};
    const auto m = oracle::random_blobs(rng, d, kDess, 3);
    const auto s = extract_surface(m);
    const auto f = distance_field(s, d, kDess);
    for (const auto& p : s.voxels) EXPECT_EQ(f.at(p[0], p[1], p[2]), 0.0);
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x + 1 < d.nx; ++x)
                EXPECT_LE(std::abs(f.at(x + 1, y, z) - f.at(x, y, z)), kDess.dx() + 1e-12);
}

TEST(FeatureTransform, NearestSeedIsANearestSeed) {
    std::mt19937_64 rng(8);
    const Dims d{7, 6, 5};
    std::vector<std::uint8_t> seeds(d.size(), 0);
    for (int k = 0; k < 6; ++k) seeds[oracle::pick(rng, 0, d.size() - 1)] = 1;
    const auto t = edt::squared_distance(seeds, d, kDess, true);
    for (std::size_t i = 0; i < d.size(); ++i) {
        ASSERT_GE(t.nearest[i], 0);
        const auto n = static_cast<std::size_t>(t.nearest[i]);
        EXPECT_EQ(seeds[n], 1);
        const auto a = d.coords(i), b = d.coords(n);
        EXPECT_NEAR(oracle::distance({a[0], a[1], a[2]}, {b[0], b[1], b[2]}, kDess), std::sqrt(t.sq[i]), 1e-9);
    }
}

TEST(Assd, IdenticalIsZeroAndSymmetric) {
    std::mt19937_64 rng(10);
    const Dims d{9, 9, 9};
    const auto a = oracle::random_blobs(rng, d, kDess, 2), b = oracle::random_blobs(rng, d, kDess, 2);
    EXPECT_EQ(*assd_mm(a, a).value, 0.0);
    EXPECT_NEAR(*assd_mm(a, b).value, *assd_mm(b, a).value, 1e-12);
}

TEST(Assd, SingleVoxelsAlongZ) {
    const Dims d{1, 1, 4};
    std::vector<std::uint8_t> a(4, 0), b(4, 0);
    a[0] = 1;
    b[3] = 1;
    EXPECT_NEAR(*assd_mm(BinaryMask(d, kDess, a), BinaryMask(d, kDess, b)).value, 2.1, 1e-12);
}

TEST(Assd, EmptyMasksAreUndefinedWithSide) {
    const Dims d{3, 3, 3};
    const auto e = BinaryMask::empty(d, kUnit);
    const BinaryMask full(d, kUnit, std::vector<std::uint8_t>(27, 1));
    EXPECT_EQ(assd_mm(e, full).empty, EmptySide::first);
    EXPECT_EQ(assd_mm(full, e).empty, EmptySide::second);
    EXPECT_EQ(assd_mm(e, e).empty, EmptySide::both);
    EXPECT_FALSE(assd_mm(e, full).defined());
}

TEST(Assd, MatchesBruteForceOracle) {
    std::mt19937_64 rng(11);
    for (int t = 0; t < 15; ++t) {
        const auto d = oracle::random_dims(rng, 2, 10);
        const auto a = oracle::random_nonempty_mask(rng, d, kDess, oracle::uniform(rng) * 0.5);
        const auto b = oracle::random_nonempty_mask(rng, d, kDess, oracle::uniform(rng) * 0.5);
        EXPECT_NEAR(*assd_mm(a, b).value, oracle::assd(a, b), 1e-9);
    }
}
