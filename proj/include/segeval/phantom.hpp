#pragma once

// Deterministic knee-like label phantoms and the bundled synthetic dataset.
//
// Geometry is defined by implicit functions in millimeters and rasterized at voxel centers.
// The femoral condyle is a cylinder along z whose cartilage is a shell on its lower half,
// the tibial cartilage a shallow bowl below it, the patellar cartilage an arc in front of
// the femur, and the menisci wedges between femur and tibia.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "io.hpp"
#include "scan_types.hpp"
#include "volume.hpp"

namespace segeval::phantom {

inline constexpr Dims kDims{84, 56, 20};
inline const VoxelSpacing kSpacing{0.31, 0.46, 0.70};

struct KneeParams {
    double bone_radius = 6.0; ///< femoral condyle radius at mid-depth, mm
    double femoral = 2.4;     ///< cartilage thicknesses, mm
    double tibial = 2.0;
    double patellar = 2.2;
    double meniscus_height = 2.2;
    double x_shift = 0.0;     ///< lateral offset of the whole knee, mm
    std::size_t z_first = 2;  ///< first and last slice with tissue
    std::size_t z_last = 17;
};

/// Uniform [0,1) from a standard engine with a fixed mapping, so streams match across platforms.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline KneeParams random_params(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    KneeParams p;
    p.bone_radius = 5.6 + 0.8 * uniform01(rng);
    p.femoral = 2.2 + 0.4 * uniform01(rng);
    p.tibial = 1.8 + 0.4 * uniform01(rng);
    p.patellar = 2.0 + 0.4 * uniform01(rng);
    p.meniscus_height = 2.0 + 0.4 * uniform01(rng);
    p.x_shift = -0.8 + 1.6 * uniform01(rng);
    p.z_first = 1 + static_cast<std::size_t>(3 * uniform01(rng));
    p.z_last = 15 + static_cast<std::size_t>(3 * uniform01(rng));
    return p;
}

/// Rasterizes the knee. `shrink` (mm) moves both surfaces of every cartilage plate inward,
/// thinning it by 2*shrink; it models a systematic sub-voxel under-segmentation.
inline LabelVolume make_knee(const KneeParams& p, double shrink = 0.0) {
    const Dims d = kDims;
    std::vector<std::uint8_t> labels(d.size(), 0);
    const double cx = 13.0 + p.x_shift, cy = 12.0;
    const double zc = 0.5 * (static_cast<double>(p.z_first + p.z_last) + 1.0) * kSpacing.dz();
    const double hz = 0.5 * static_cast<double>(p.z_last - p.z_first + 1) * kSpacing.dz();
    for (std::size_t z = p.z_first; z <= p.z_last && z < d.nz; ++z) {
        const double Z = (static_cast<double>(z) + 0.5) * kSpacing.dz();
        const double u = (Z - zc) / hz;
        const double rb = p.bone_radius - 1.2 * u * u;
        const double fem_outer = rb + p.femoral;
        const double tib_top = cy + fem_outer + 0.6;
        for (std::size_t y = 0; y < d.ny; ++y) {
            const double Y = (static_cast<double>(y) + 0.5) * kSpacing.dy();
            for (std::size_t x = 0; x < d.nx; ++x) {
                const double X = (static_cast<double>(x) + 0.5) * kSpacing.dx();
                const double ax = X - cx, ay = Y - cy;
                const double r = std::hypot(ax, ay);
                std::uint8_t label = 0;
                // femoral cartilage: lower shell of the condyle
                if (ay > -2.0 && r >= rb + shrink && r < fem_outer - shrink) label = 1;
                // tibial cartilage: bowl under the condyle
                const double bowl = tib_top + 0.2 * ax + 0.03 * ax * ax;
                const double tn = std::sqrt(1.0 + std::pow(0.2 + 0.06 * ax, 2.0));
                if (!label && std::abs(ax) < 8.0 && Y >= bowl + shrink * tn && Y < bowl + (p.tibial - shrink) * tn)
                    label = 2;
                // patellar cartilage: arc anterior-superior to the femur
                const double pr = fem_outer + 1.0;
                if (!label && ax < -3.0 && ay < -3.0 && r >= pr + shrink && r < pr + p.patellar - shrink)
                    label = 3;
                // menisci: wedges at the joint margins, tallest at the periphery
                const double m = std::abs(ax);
                if (!label && m >= 3.5 && m < 8.0) {
                    const double h = p.meniscus_height * (m - 3.5) / 4.5;
                    if (Y < bowl - shrink && Y >= bowl - h && r >= fem_outer + 0.3) label = 4;
                }
                labels[d.index(x, y, z)] = label;
            }
        }
    }
    return LabelVolume(d, kSpacing, std::move(labels));
}

/// Flips tissue voxels on the boundary off, and background voxels touching tissue on, at
/// fixed rates; deterministic in `seed`.
inline LabelVolume add_boundary_noise(const LabelVolume& v, std::uint64_t seed, double drop = 0.15, double grow = 0.10) {
    std::mt19937_64 rng(seed);
    const Dims& d = v.dims();
    auto labels = v.labels();
    const auto& src = v.labels();
    const int off[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x) {
                const std::size_t i = d.index(x, y, z);
                std::uint8_t neighbor_tissue = 0;
                bool touches_other = false;
                for (const auto& o : off) {
                    const long nx = static_cast<long>(x) + o[0], ny = static_cast<long>(y) + o[1],
                               nz = static_cast<long>(z) + o[2];
                    if (!d.contains(nx, ny, nz)) {
                        touches_other = true;
                        continue;
                    }
                    const auto c = src[d.index(static_cast<std::size_t>(nx), static_cast<std::size_t>(ny),
                                               static_cast<std::size_t>(nz))];
                    if (c != src[i]) touches_other = true;
                    if (c != 0 && neighbor_tissue == 0) neighbor_tissue = c;
                }
                const double u = uniform01(rng);
                if (src[i] != 0 && touches_other && u < drop)
                    labels[i] = 0;
                else if (src[i] == 0 && neighbor_tissue != 0 && u < grow)
                    labels[i] = neighbor_tissue;
            }
    return LabelVolume(d, v.spacing(), std::move(labels));
}

inline constexpr std::size_t kSubjects = 4;
/// Year-1 cartilage loss, mm.
inline constexpr double kYearOneLoss = 0.08;
/// Per-surface erosion of the "eroded" model, mm; well under the smallest voxel spacing.
inline constexpr double kErosion = 0.06;

inline const char* const kModels[] = {"gt_copy", "eroded", "noisy"};

struct SubjectMeta {
    std::string id;
    Split split;
    int kl_grade;
    double bmi;
    double age;
    Sex sex;
};

inline std::vector<SubjectMeta> subjects() {
    return {{"S01", Split::test, 2, 27.4, 61, Sex::female},
            {"S02", Split::test, 3, 31.2, 67, Sex::male},
            {"S03", Split::test, 4, 29.8, 58, Sex::female},
            {"S04", Split::validation, 2, 24.9, 55, Sex::male}};
}

inline KneeParams scan_params(std::size_t subject, Timepoint tp) {
    auto p = random_params(0x5E6E0000ULL + subject);
    if (tp == Timepoint::year1) {
        p.femoral -= kYearOneLoss;
        p.tibial -= kYearOneLoss;
        p.patellar -= kYearOneLoss;
    }
    return p;
}

/// Writes the bundled dataset (label maps, predictions, manifest.csv) under `dir`.
inline void write_dataset(const std::filesystem::path& dir) {
    std::string csv = "# through_plane_axis=z\n"
                      "subject_id,timepoint,split,ground_truth_path,model:gt_copy,model:eroded,model:noisy,"
                      "kl_grade,bmi,age,sex\n";
    const auto subs = subjects();
    for (std::size_t s = 0; s < subs.size(); ++s)
        for (Timepoint tp : {Timepoint::baseline, Timepoint::year1}) {
            const auto p = scan_params(s, tp);
            const std::string stem = subs[s].id + "_" + std::string(to_string(tp)) + ".segv";
            const auto gt = make_knee(p);
            save_volume(dir / "gt" / stem, gt);
            save_volume(dir / "pred" / "gt_copy" / stem, gt);
            save_volume(dir / "pred" / "eroded" / stem, make_knee(p, kErosion));
            save_volume(dir / "pred" / "noisy" / stem, add_boundary_noise(gt, 0xC0FFEEULL * (2 * s + 1) + (tp == Timepoint::year1)));
            char meta[96];
            std::snprintf(meta, sizeof(meta), "%d,%.1f,%.0f,%s", subs[s].kl_grade, subs[s].bmi, subs[s].age,
                          std::string(to_string(subs[s].sex)).c_str());
            csv += subs[s].id + "," + std::string(to_string(tp)) + "," + std::string(to_string(subs[s].split)) +
                   ",gt/" + stem + ",pred/gt_copy/" + stem + ",pred/eroded/" + stem + ",pred/noisy/" + stem + "," +
                   meta + "\n";
        }
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "manifest.csv", std::ios::binary) << csv;
}

} // namespace segeval::phantom
