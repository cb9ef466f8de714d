#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"
#include "volume.hpp"

namespace segeval {

/// True voxels with at least one false 6-neighbor; faces of the grid count as outside.
/// Coordinates are kept in increasing linear-index order.
struct SurfaceVoxelSet {
    Dims dims{};
    VoxelSpacing spacing{};
    std::vector<std::array<std::uint32_t, 3>> voxels;

    std::size_t size() const { return voxels.size(); }
    bool empty() const { return voxels.empty(); }
};

inline bool is_surface_voxel(const BinaryMask& a, std::size_t x, std::size_t y, std::size_t z) {
    if (!a.at(x, y, z)) return false;
    const long lx = static_cast<long>(x), ly = static_cast<long>(y), lz = static_cast<long>(z);
    return !a.at_or_false(lx - 1, ly, lz) || !a.at_or_false(lx + 1, ly, lz) || !a.at_or_false(lx, ly - 1, lz) ||
           !a.at_or_false(lx, ly + 1, lz) || !a.at_or_false(lx, ly, lz - 1) || !a.at_or_false(lx, ly, lz + 1);
}

inline SurfaceVoxelSet extract_surface(const BinaryMask& a) {
    SurfaceVoxelSet s{a.dims(), a.spacing(), {}};
    const auto& d = a.dims();
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x)
                if (is_surface_voxel(a, x, y, z))
                    s.voxels.push_back({static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y),
                                        static_cast<std::uint32_t>(z)});
    return s;
}

inline BinaryMask surface_mask(const SurfaceVoxelSet& s, Tissue tissue = Tissue::femoral_cartilage) {
    std::vector<std::uint8_t> v(s.dims.size(), 0);
    for (const auto& p : s.voxels) v[s.dims.index(p[0], p[1], p[2])] = 1;
    return BinaryMask(s.dims, s.spacing, std::move(v), tissue);
}

// ---------------------------------------------------------------------------
// Exact anisotropic Euclidean distance transform.
//
// Separable lower envelope of parabolas (Felzenszwalb & Huttenlocher), one pass per axis,
// each parabola scaled by that axis's spacing. Optionally tracks the nearest seed of every
// voxel (feature transform).

namespace edt {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct SquaredTransform {
    Dims dims{};
    /// Squared distance in mm^2 to the nearest seed; +inf when there is no seed.
    std::vector<double> sq;
    /// Linear index of the nearest seed, -1 when none. Empty unless requested.
    std::vector<std::int64_t> nearest;
};

namespace detail {

/// d[p] = min_q f[q] + (h (p - q))^2 over a strided line; arg receives the minimizing q.
struct LineScratch {
    std::vector<double> f, d, z;
    std::vector<std::size_t> v, arg;

    explicit LineScratch(std::size_t n) : f(n), d(n), z(n + 1), v(n), arg(n) {}
};

inline void envelope(LineScratch& s, std::size_t n, double h) {
    const double h2 = h * h;
    long k = -1;
    for (std::size_t q = 0; q < n; ++q) {
        if (s.f[q] == kInf) continue;
        if (k < 0) {
            k = 0;
            s.v[0] = q;
            s.z[0] = -kInf;
            s.z[1] = kInf;
            continue;
        }
        const double fq = s.f[q] + h2 * static_cast<double>(q) * static_cast<double>(q);
        double sx;
        for (;;) {
            const std::size_t vk = s.v[static_cast<std::size_t>(k)];
            const double fv = s.f[vk] + h2 * static_cast<double>(vk) * static_cast<double>(vk);
            sx = (fq - fv) / (2.0 * h2 * (static_cast<double>(q) - static_cast<double>(vk)));
            if (sx <= s.z[static_cast<std::size_t>(k)]) {
                --k;
            } else {
                break;
            }
        }
        ++k;
        s.v[static_cast<std::size_t>(k)] = q;
        s.z[static_cast<std::size_t>(k)] = sx;
        s.z[static_cast<std::size_t>(k) + 1] = kInf;
    }
    if (k < 0) {
        for (std::size_t p = 0; p < n; ++p) s.d[p] = kInf;
        return;
    }
    std::size_t j = 0;
    for (std::size_t p = 0; p < n; ++p) {
        while (s.z[j + 1] < static_cast<double>(p)) ++j;
        const std::size_t q = s.v[j];
        const double dp = static_cast<double>(p) - static_cast<double>(q);
        s.d[p] = h2 * dp * dp + s.f[q];
        s.arg[p] = q;
    }
}

} // namespace detail

/// `seeds` is a 0/1 grid; distances are measured between voxel centers in mm.
inline SquaredTransform squared_distance(const std::vector<std::uint8_t>& seeds, const Dims& dims,
                                         const VoxelSpacing& spacing, bool with_nearest = false) {
    if (seeds.size() != dims.size()) throw ShapeMismatch("distance transform: seed grid size mismatch");
    SquaredTransform t{dims, std::vector<double>(dims.size()), {}};
    for (std::size_t i = 0; i < seeds.size(); ++i) t.sq[i] = seeds[i] ? 0.0 : kInf;
    if (with_nearest) {
        t.nearest.assign(dims.size(), -1);
        for (std::size_t i = 0; i < seeds.size(); ++i)
            if (seeds[i]) t.nearest[i] = static_cast<std::int64_t>(i);
    }

    const std::array<std::size_t, 3> stride{1, dims.nx, dims.nx * dims.ny};
    const std::array<std::size_t, 3> extent{dims.nx, dims.ny, dims.nz};
    std::vector<std::int64_t> prev_nearest;
    for (int axis = 0; axis < 3; ++axis) {
        const std::size_t n = extent[static_cast<std::size_t>(axis)];
        const std::size_t st = stride[static_cast<std::size_t>(axis)];
        const double h = spacing[static_cast<Axis>(axis)];
        detail::LineScratch s(n);
        if (with_nearest) prev_nearest = t.nearest;
        // Enumerate the lines along `axis` by their start index.
        const std::size_t lines = dims.size() / n;
        for (std::size_t l = 0; l < lines; ++l) {
            std::size_t start;
            if (axis == 0) {
                start = l * dims.nx;
            } else if (axis == 1) {
                start = (l % dims.nx) + (l / dims.nx) * dims.nx * dims.ny;
            } else {
                start = l;
            }
            for (std::size_t p = 0; p < n; ++p) s.f[p] = t.sq[start + p * st];
            detail::envelope(s, n, h);
            for (std::size_t p = 0; p < n; ++p) {
                t.sq[start + p * st] = s.d[p];
                if (with_nearest)
                    t.nearest[start + p * st] = s.d[p] == kInf ? -1 : prev_nearest[start + s.arg[p] * st];
            }
        }
    }
    return t;
}

} // namespace edt

/// Distance (mm) from every voxel center to the nearest reference surface voxel center.
class DistanceField {
public:
    DistanceField(Dims dims, VoxelSpacing spacing, std::vector<double> values)
        : dims_(dims), spacing_(spacing), values_(std::move(values)) {}

    const Dims& dims() const { return dims_; }
    const VoxelSpacing& spacing() const { return spacing_; }
    const std::vector<double>& values() const { return values_; }
    double operator[](std::size_t i) const { return values_[i]; }
    double at(std::size_t x, std::size_t y, std::size_t z) const { return values_[dims_.index(x, y, z)]; }

private:
    Dims dims_;
    VoxelSpacing spacing_;
    std::vector<double> values_;
};

inline DistanceField distance_field(const SurfaceVoxelSet& reference, const Dims& dims, const VoxelSpacing& spacing) {
    if (reference.empty()) throw ValidationError("distance_field: empty reference surface");
    std::vector<std::uint8_t> seeds(dims.size(), 0);
    for (const auto& p : reference.voxels) {
        if (!dims.contains(p[0], p[1], p[2])) throw ShapeMismatch("distance_field: reference voxel outside grid");
        seeds[dims.index(p[0], p[1], p[2])] = 1;
    }
    auto t = edt::squared_distance(seeds, dims, spacing);
    for (auto& v : t.sq) v = std::sqrt(v);
    return DistanceField(dims, spacing, std::move(t.sq));
}

// ---------------------------------------------------------------------------
// Average symmetric surface distance.

enum class EmptySide { none, first, second, both };

inline const char* to_string(EmptySide s) {
    switch (s) {
        case EmptySide::none: return "none";
        case EmptySide::first: return "first";
        case EmptySide::second: return "second";
        case EmptySide::both: return "both";
    }
    return "?";
}

/// ASSD in mm, or the undefined outcome naming which operand was empty.
struct AssdResult {
    std::optional<double> value;
    EmptySide empty = EmptySide::none;

    bool defined() const { return value.has_value(); }
};

inline double surface_distance_sum(const SurfaceVoxelSet& from, const DistanceField& field) {
    double sum = 0.0;
    for (const auto& p : from.voxels) sum += field.at(p[0], p[1], p[2]);
    return sum;
}

inline AssdResult assd_mm(const BinaryMask& a, const BinaryMask& b) {
    require_same_geometry(a, b, "assd");
    const bool ea = a.is_empty(), eb = b.is_empty();
    if (ea || eb) return {std::nullopt, ea && eb ? EmptySide::both : ea ? EmptySide::first : EmptySide::second};
    const auto sa = extract_surface(a);
    const auto sb = extract_surface(b);
    const auto da = distance_field(sa, a.dims(), a.spacing());
    const auto db = distance_field(sb, b.dims(), b.spacing());
    const double sum = surface_distance_sum(sa, db) + surface_distance_sum(sb, da);
    return {sum / static_cast<double>(sa.size() + sb.size()), EmptySide::none};
}

} // namespace segeval
