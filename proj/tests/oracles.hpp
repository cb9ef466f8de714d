#pragma once

// Brute-force reference implementations used by the unit and acceptance tests. They share
// no code with the library beyond the data types.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

#include "segeval/volume.hpp"

namespace oracle {

using segeval::BinaryMask;
using segeval::Dims;
using segeval::Tissue;
using segeval::VoxelSpacing;

inline double uniform(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::size_t pick(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(uniform(rng) * static_cast<double>(hi - lo + 1));
}

inline Dims random_dims(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
    return {pick(rng, lo, hi), pick(rng, lo, hi), pick(rng, lo, hi)};
}

inline BinaryMask random_mask(std::mt19937_64& rng, Dims d, VoxelSpacing s, double density,
                              Tissue t = Tissue::femoral_cartilage) {
    std::vector<std::uint8_t> v(d.size());
    for (auto& x : v) x = uniform(rng) < density;
    return BinaryMask(d, s, std::move(v), t);
}

/// Random mask with at least one true voxel.
inline BinaryMask random_nonempty_mask(std::mt19937_64& rng, Dims d, VoxelSpacing s, double density) {
    auto m = random_mask(rng, d, s, density);
    if (!m.is_empty()) return m;
    auto v = m.voxels();
    v[pick(rng, 0, d.size() - 1)] = 1;
    return BinaryMask(d, s, std::move(v), m.tissue());
}

/// Blob-like mask: union of random balls, so surfaces are not pure noise.
inline BinaryMask random_blobs(std::mt19937_64& rng, Dims d, VoxelSpacing s, std::size_t balls) {
    std::vector<std::uint8_t> v(d.size(), 0);
    for (std::size_t b = 0; b < balls; ++b) {
        const double cx = uniform(rng) * d.nx, cy = uniform(rng) * d.ny, cz = uniform(rng) * d.nz;
        const double r = 1.0 + uniform(rng) * 4.0;
        for (std::size_t z = 0; z < d.nz; ++z)
            for (std::size_t y = 0; y < d.ny; ++y)
                for (std::size_t x = 0; x < d.nx; ++x)
                    if (std::hypot(x - cx, y - cy, z - cz) <= r) v[d.index(x, y, z)] = 1;
    }
    if (std::find(v.begin(), v.end(), 1) == v.end()) v[0] = 1;
    return BinaryMask(d, s, std::move(v), Tissue::femoral_cartilage);
}

struct Counts {
    double a = 0, b = 0, both = 0, either = 0;
};

inline Counts count(const BinaryMask& a, const BinaryMask& b) {
    Counts c;
    for (std::size_t i = 0; i < a.dims().size(); ++i) {
        const bool x = a[i] != 0, y = b[i] != 0;
        c.a += x;
        c.b += y;
        c.both += x && y;
        c.either += x || y;
    }
    return c;
}

inline double dice(const BinaryMask& a, const BinaryMask& b) {
    const auto c = count(a, b);
    return c.a + c.b == 0 ? 1.0 : 2.0 * c.both / (c.a + c.b);
}

inline double voe(const BinaryMask& a, const BinaryMask& b) {
    const auto c = count(a, b);
    return c.either == 0 ? 0.0 : 1.0 - c.both / c.either;
}

inline double volume(const BinaryMask& a) {
    double n = 0;
    for (std::size_t i = 0; i < a.dims().size(); ++i) n += a[i] != 0;
    return n * a.spacing().dx() * a.spacing().dy() * a.spacing().dz();
}

/// True voxels with at least one 6-neighbor that is false or outside the grid.
inline std::vector<std::array<std::size_t, 3>> surface(const BinaryMask& a) {
    std::vector<std::array<std::size_t, 3>> out;
    const Dims& d = a.dims();
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x) {
                if (!a.at(x, y, z)) continue;
                const long X = static_cast<long>(x), Y = static_cast<long>(y), Z = static_cast<long>(z);
                const long nb[6][3] = {{X - 1, Y, Z}, {X + 1, Y, Z}, {X, Y - 1, Z}, {X, Y + 1, Z}, {X, Y, Z - 1}, {X, Y, Z + 1}};
                bool edge = false;
                for (const auto& n : nb) {
                    if (n[0] < 0 || n[1] < 0 || n[2] < 0 || n[0] >= static_cast<long>(d.nx) ||
                        n[1] >= static_cast<long>(d.ny) || n[2] >= static_cast<long>(d.nz) ||
                        !a.at(static_cast<std::size_t>(n[0]), static_cast<std::size_t>(n[1]), static_cast<std::size_t>(n[2])))
                        edge = true;
                }
                if (edge) out.push_back({x, y, z});
            }
    return out;
}

inline double distance(const std::array<std::size_t, 3>& p, const std::array<std::size_t, 3>& q, const VoxelSpacing& s) {
    const double dx = (static_cast<double>(p[0]) - static_cast<double>(q[0])) * s.dx();
    const double dy = (static_cast<double>(p[1]) - static_cast<double>(q[1])) * s.dy();
    const double dz = (static_cast<double>(p[2]) - static_cast<double>(q[2])) * s.dz();
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Distance from every voxel to the nearest of `seeds`, by exhaustive scan.
inline std::vector<double> nearest_distance(const std::vector<std::array<std::size_t, 3>>& seeds, const Dims& d,
                                            const VoxelSpacing& s) {
    std::vector<double> out(d.size(), std::numeric_limits<double>::infinity());
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x) {
                double best = std::numeric_limits<double>::infinity();
                for (const auto& q : seeds) best = std::min(best, distance({x, y, z}, q, s));
                out[d.index(x, y, z)] = best;
            }
    return out;
}

inline double assd(const BinaryMask& a, const BinaryMask& b) {
    const auto sa = surface(a), sb = surface(b);
    double sum = 0.0;
    for (const auto& p : sa) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : sb) best = std::min(best, distance(p, q, a.spacing()));
        sum += best;
    }
    for (const auto& p : sb) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& q : sa) best = std::min(best, distance(p, q, a.spacing()));
        sum += best;
    }
    return sum / static_cast<double>(sa.size() + sb.size());
}

inline BinaryMask vote(const std::vector<BinaryMask>& members, std::size_t k) {
    const auto& f = members.front();
    std::vector<std::uint8_t> v(f.dims().size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        std::size_t n = 0;
        for (const auto& m : members) n += m[i] != 0;
        v[i] = n >= k;
    }
    return BinaryMask(f.dims(), f.spacing(), std::move(v), f.tissue());
}

inline BinaryMask oracle_tp(const std::vector<BinaryMask>& members, const BinaryMask& gt) {
    std::vector<std::uint8_t> v(gt.dims().size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        bool any = false;
        for (const auto& m : members) any = any || m[i];
        v[i] = gt[i] && any;
    }
    return BinaryMask(gt.dims(), gt.spacing(), std::move(v), gt.tissue());
}

inline BinaryMask oracle_tn(const std::vector<BinaryMask>& members, const BinaryMask& gt) {
    std::vector<std::uint8_t> v(gt.dims().size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        bool all = true;
        for (const auto& m : members) all = all && (m[i] || gt[i]);
        v[i] = all;
    }
    return BinaryMask(gt.dims(), gt.spacing(), std::move(v), gt.tissue());
}

/// Tie-corrected Kruskal-Wallis statistic from scratch (average ranks by pairwise comparison).
inline double kw_statistic(const std::vector<std::vector<double>>& groups) {
    std::vector<double> all;
    for (const auto& g : groups) all.insert(all.end(), g.begin(), g.end());
    const double n = static_cast<double>(all.size());
    auto rank = [&](double v) {
        double below = 0, equal = 0;
        for (double w : all) {
            below += w < v;
            equal += w == v;
        }
        return below + (equal + 1.0) / 2.0;
    };
    double ss = 0.0;
    for (const auto& g : groups) {
        double r = 0;
        for (double v : g) r += rank(v);
        ss += r * r / static_cast<double>(g.size());
    }
    double ties = 0.0;
    std::vector<double> sorted = all;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size();) {
        std::size_t j = i;
        while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
        const double t = static_cast<double>(j - i);
        ties += t * t * t - t;
        i = j;
    }
    const double h = 12.0 / (n * (n + 1.0)) * ss - 3.0 * (n + 1.0);
    return h / (1.0 - ties / (n * n * n - n));
}

/// Exact permutation p-value of the KW statistic: the share of all distinct assignments of the
/// pooled values to groups of the observed sizes whose statistic is at least the observed one.
inline double kw_permutation_p(const std::vector<std::vector<double>>& groups) {
    std::vector<double> all;
    std::vector<int> labels;
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (double v : groups[g]) {
            all.push_back(v);
            labels.push_back(static_cast<int>(g));
        }
    const double observed = kw_statistic(groups);
    std::sort(labels.begin(), labels.end());
    std::size_t hits = 0, total = 0;
    do {
        std::vector<std::vector<double>> perm(groups.size());
        for (std::size_t i = 0; i < all.size(); ++i) perm[static_cast<std::size_t>(labels[i])].push_back(all[i]);
        hits += kw_statistic(perm) >= observed - 1e-9;
        ++total;
    } while (std::next_permutation(labels.begin(), labels.end()));
    return static_cast<double>(hits) / static_cast<double>(total);
}

/// Tie-corrected two-sided Mann-Whitney normal approximation, no continuity correction.
inline double mann_whitney_p(const std::vector<double>& a, const std::vector<double>& b) {
    const double n1 = static_cast<double>(a.size()), n2 = static_cast<double>(b.size()), n = n1 + n2;
    double u = 0.0;
    for (double x : a)
        for (double y : b) u += x > y ? 1.0 : x == y ? 0.5 : 0.0;
    std::vector<double> all = a;
    all.insert(all.end(), b.begin(), b.end());
    std::sort(all.begin(), all.end());
    double ties = 0.0;
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        while (j < all.size() && all[j] == all[i]) ++j;
        const double t = static_cast<double>(j - i);
        ties += t * t * t - t;
        i = j;
    }
    const double var = n1 * n2 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    const double z = (u - n1 * n2 / 2.0) / std::sqrt(var);
    return std::erfc(std::abs(z) / std::sqrt(2.0));
}

/// Slice-wise dice along z for slices where gt has foreground, with their normalized positions.
struct SliceValue {
    double position;
    double dice;
};

inline std::vector<SliceValue> slice_dice_z(const BinaryMask& pred, const BinaryMask& gt) {
    const Dims& d = gt.dims();
    std::vector<double> p(d.nz), g(d.nz), both(d.nz);
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x) {
                p[z] += pred.at(x, y, z);
                g[z] += gt.at(x, y, z);
                both[z] += pred.at(x, y, z) && gt.at(x, y, z);
            }
    long first = -1, last = -1;
    for (std::size_t z = 0; z < d.nz; ++z)
        if (g[z] > 0) {
            if (first < 0) first = static_cast<long>(z);
            last = static_cast<long>(z);
        }
    std::vector<SliceValue> out;
    for (long z = first; first >= 0 && z <= last; ++z) {
        if (g[static_cast<std::size_t>(z)] == 0) continue;
        const double pos = first == last ? 50.0 : 100.0 * static_cast<double>(z - first) / static_cast<double>(last - first);
        out.push_back({pos, 2.0 * both[static_cast<std::size_t>(z)] / (p[static_cast<std::size_t>(z)] + g[static_cast<std::size_t>(z)])});
    }
    return out;
}

} // namespace oracle
