#pragma once

// Cartilage thickness from the interior distance transform.
//
// Every true voxel p gets d(p), the distance from its center to the nearest background
// voxel center (the grid is padded with one layer of background). Medial voxels are the
// true voxels whose d is >= d of all 26-neighbors, plateaus included. A medial voxel's
// local thickness is 2x its distance to the object's voxelized boundary, plus the
// half-voxel by which a voxel center sits off the true mid-surface on average:
//
//     local(p) = d(p) + r(p),   r(p) = d(p) * (1 - 1 / (2 max_a |delta_a|))
//
// where delta is the voxel offset to the nearest background voxel and r(p) is where the
// ray toward it leaves the last foreground voxel. For a slab of t voxels at spacing s this
// gives (t +/- 1/2) s. Scan thickness is the mean of local(p) over medial voxels.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"
#include "log.hpp"
#include "scan_types.hpp"
#include "surface.hpp"
#include "volume.hpp"

namespace segeval {

struct ThicknessResult {
    std::string model;
    std::string subject_id;
    Timepoint timepoint = Timepoint::baseline;
    Tissue tissue = Tissue::femoral_cartilage;
    double mean_thickness_mm = 0.0;
    std::size_t medial_voxel_count = 0;
    /// Set when the mask was empty and the thickness is a placeholder 0.
    bool empty_mask = false;
};

/// Interior distance map of a mask: distance (mm) to the nearest background voxel center and
/// the voxel offset to that background voxel, for every true voxel.
struct InteriorDistance {
    Dims dims{};
    std::vector<double> distance;
    std::vector<std::array<int, 3>> offset;
};

inline InteriorDistance interior_distance(const BinaryMask& a) {
    const Dims& d = a.dims();
    const Dims padded{d.nx + 2, d.ny + 2, d.nz + 2};
    std::vector<std::uint8_t> background(padded.size(), 1);
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x)
                if (a.at(x, y, z)) background[padded.index(x + 1, y + 1, z + 1)] = 0;
    const auto t = edt::squared_distance(background, padded, a.spacing(), true);

    InteriorDistance out{d, std::vector<double>(d.size(), 0.0), std::vector<std::array<int, 3>>(d.size(), {0, 0, 0})};
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x) {
                const std::size_t i = d.index(x, y, z);
                if (!a[i]) continue;
                const std::size_t pi = padded.index(x + 1, y + 1, z + 1);
                out.distance[i] = std::sqrt(t.sq[pi]);
                const auto q = padded.coords(static_cast<std::size_t>(t.nearest[pi]));
                out.offset[i] = {static_cast<int>(q[0]) - static_cast<int>(x + 1),
                                 static_cast<int>(q[1]) - static_cast<int>(y + 1),
                                 static_cast<int>(q[2]) - static_cast<int>(z + 1)};
            }
    return out;
}

/// Tolerance for plateau comparisons; distances reached along different separable paths
/// can differ in the last few bits.
inline constexpr double kPlateauTolerance = 1e-9;

/// True voxels whose interior distance is >= that of all 26-neighbors.
inline std::vector<std::size_t> medial_voxels(const BinaryMask& a, const InteriorDistance& dist) {
    const Dims& d = a.dims();
    std::vector<std::size_t> out;
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x) {
                const std::size_t i = d.index(x, y, z);
                if (!a[i]) continue;
                const double di = dist.distance[i];
                bool is_max = true;
                for (int dz = -1; dz <= 1 && is_max; ++dz)
                    for (int dy = -1; dy <= 1 && is_max; ++dy)
                        for (int dx = -1; dx <= 1 && is_max; ++dx) {
                            const long nx = static_cast<long>(x) + dx, ny = static_cast<long>(y) + dy,
                                       nz = static_cast<long>(z) + dz;
                            if (!a.at_or_false(nx, ny, nz)) continue;
                            const std::size_t j = d.index(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny),
                                                          static_cast<std::size_t>(nz));
                            if (dist.distance[j] > di + kPlateauTolerance) is_max = false;
                        }
                if (is_max) out.push_back(i);
            }
    return out;
}

inline double local_thickness(double distance, const std::array<int, 3>& offset) {
    const int m = std::max({std::abs(offset[0]), std::abs(offset[1]), std::abs(offset[2])});
    return distance * (2.0 - 0.5 / static_cast<double>(m));
}

inline ThicknessResult mean_thickness_mm(const BinaryMask& a) {
    if (!is_cartilage(a.tissue()))
        throw ValidationError("thickness is defined for cartilage tissues only, not " +
                              std::string(tissue_name(a.tissue())));
    ThicknessResult r;
    r.tissue = a.tissue();
    if (a.is_empty()) {
        log::warn("thickness of empty " + std::string(tissue_name(a.tissue())) + " mask reported as 0");
        r.empty_mask = true;
        return r;
    }
    const auto dist = interior_distance(a);
    const auto medial = medial_voxels(a, dist);
    double sum = 0.0;
    for (auto i : medial) sum += local_thickness(dist.distance[i], dist.offset[i]);
    r.medial_voxel_count = medial.size();
    r.mean_thickness_mm = sum / static_cast<double>(medial.size());
    return r;
}

struct ThicknessError {
    /// pred - gt, mm.
    double signed_mm = 0.0;
    double magnitude_mm = 0.0;
    ThicknessResult predicted;
    ThicknessResult reference;

    bool any_empty() const { return predicted.empty_mask || reference.empty_mask; }
};

inline ThicknessError thickness_difference(const BinaryMask& pred, const BinaryMask& gt) {
    require_same_geometry(pred, gt, "thickness error");
    if (pred.tissue() != gt.tissue()) throw ValidationError("thickness error: masks are different tissues");
    ThicknessError e;
    e.predicted = mean_thickness_mm(pred);
    e.reference = mean_thickness_mm(gt);
    e.signed_mm = e.predicted.mean_thickness_mm - e.reference.mean_thickness_mm;
    e.magnitude_mm = std::abs(e.signed_mm);
    return e;
}

inline double thickness_error_mm(const BinaryMask& pred, const BinaryMask& gt) {
    return thickness_difference(pred, gt).magnitude_mm;
}

/// Signed change from baseline to year 1.
inline double longitudinal_change_mm(const ThicknessResult& t0, const ThicknessResult& t1) {
    if (t0.timepoint != Timepoint::baseline || t1.timepoint != Timepoint::year1)
        throw ValidationError("longitudinal change needs a baseline and a year1 result");
    if (t0.subject_id != t1.subject_id || t0.tissue != t1.tissue || t0.model != t1.model)
        throw ValidationError("longitudinal change: subject, tissue or model differ");
    return t1.mean_thickness_mm - t0.mean_thickness_mm;
}

// ---------------------------------------------------------------------------

inline constexpr double kLimitsOfAgreementZ = 1.96;

struct BlandAltman {
    double bias = 0.0;
    double sd = 0.0;
    double loa_low = 0.0;
    double loa_high = 0.0;
    std::size_t n = 0;
};

/// Sums positive and negative terms separately, each in ascending magnitude, so a set that
/// is symmetric about zero sums to exactly 0 regardless of input order.
inline double signed_split_sum(std::span<const double> values) {
    std::vector<double> pos, neg;
    for (double v : values) (v >= 0.0 ? pos : neg).push_back(std::abs(v));
    std::sort(pos.begin(), pos.end());
    std::sort(neg.begin(), neg.end());
    double sp = 0.0, sn = 0.0;
    for (double v : pos) sp += v;
    for (double v : neg) sn += v;
    return sp - sn;
}

inline BlandAltman bland_altman(std::span<const double> differences) {
    if (differences.size() < 2) throw ValidationError("Bland-Altman needs at least 2 differences");
    const double n = static_cast<double>(differences.size());
    const double bias = signed_split_sum(differences) / n;
    double ss = 0.0;
    for (double d : differences) ss += (d - bias) * (d - bias);
    const double sd = std::sqrt(ss / (n - 1.0));
    return {bias, sd, bias - kLimitsOfAgreementZ * sd, bias + kLimitsOfAgreementZ * sd, differences.size()};
}

} // namespace segeval
