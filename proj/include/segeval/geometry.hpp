#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "error.hpp"

namespace segeval {

enum class Axis : std::uint8_t { x = 0, y = 1, z = 2 };

inline std::string_view axis_name(Axis a) {
    switch (a) {
        case Axis::x: return "x";
        case Axis::y: return "y";
        case Axis::z: return "z";
    }
    return "?";
}

inline Axis parse_axis(std::string_view s) {
    if (s == "x" || s == "0") return Axis::x;
    if (s == "y" || s == "1") return Axis::y;
    if (s == "z" || s == "2") return Axis::z;
    throw ValidationError("unknown axis '" + std::string(s) + "' (expected x, y or z)");
}

/// Grid extent in voxels. Storage order is x-fastest, then y, then z.
struct Dims {
    std::size_t nx = 0, ny = 0, nz = 0;

    constexpr std::size_t size() const { return nx * ny * nz; }
    constexpr std::size_t operator[](Axis a) const {
        return a == Axis::x ? nx : a == Axis::y ? ny : nz;
    }
    constexpr std::size_t index(std::size_t x, std::size_t y, std::size_t z) const {
        return x + nx * (y + ny * z);
    }
    constexpr std::array<std::size_t, 3> coords(std::size_t i) const {
        return {i % nx, (i / nx) % ny, i / (nx * ny)};
    }
    constexpr bool contains(long x, long y, long z) const {
        return x >= 0 && y >= 0 && z >= 0 && static_cast<std::size_t>(x) < nx &&
               static_cast<std::size_t>(y) < ny && static_cast<std::size_t>(z) < nz;
    }
    friend constexpr bool operator==(const Dims&, const Dims&) = default;
};

inline std::string to_string(const Dims& d) {
    return std::to_string(d.nx) + "x" + std::to_string(d.ny) + "x" + std::to_string(d.nz);
}

/// Millimeters per voxel along each axis; all components strictly positive and finite.
class VoxelSpacing {
public:
    VoxelSpacing() = default;
    VoxelSpacing(double dx, double dy, double dz) : v_{dx, dy, dz} {
        for (double d : v_)
            if (!(std::isfinite(d) && d > 0.0))
                throw ValidationError("voxel spacing must be positive and finite, got (" +
                                      std::to_string(dx) + ", " + std::to_string(dy) + ", " +
                                      std::to_string(dz) + ")");
    }

    double dx() const { return v_[0]; }
    double dy() const { return v_[1]; }
    double dz() const { return v_[2]; }
    double operator[](Axis a) const { return v_[static_cast<int>(a)]; }
    double voxel_volume() const { return v_[0] * v_[1] * v_[2]; }

    VoxelSpacing scaled(double c) const { return {c * v_[0], c * v_[1], c * v_[2]}; }

    /// Equal within `tol` mm per component; files store spacing as f32.
    bool approx_equal(const VoxelSpacing& o, double tol = 1e-6) const {
        for (int i = 0; i < 3; ++i)
            if (std::abs(v_[i] - o.v_[i]) > tol) return false;
        return true;
    }

    friend bool operator==(const VoxelSpacing&, const VoxelSpacing&) = default;

private:
    std::array<double, 3> v_{1.0, 1.0, 1.0};
};

/// Physical length of the volume diagonal between the two extreme voxel centers.
inline double physical_diagonal(const Dims& d, const VoxelSpacing& s) {
    auto ext = [](std::size_t n, double h) { return n > 0 ? static_cast<double>(n - 1) * h : 0.0; };
    double ex = ext(d.nx, s.dx()), ey = ext(d.ny, s.dy()), ez = ext(d.nz, s.dz());
    return std::sqrt(ex * ex + ey * ey + ez * ez);
}

} // namespace segeval
