#pragma once

// Depth-wise region-of-interest distribution: 2D slice Dice against normalized position
// along the through-plane axis. Positions are normalized over the ground-truth extent of
// each scan, 0% at the first slice with GT foreground and 100% at the last.
//
// Bins are closed intervals [100 b / B, 100 (b+1) / B]; a slice that falls exactly on an
// interior edge is a member of both neighbors, which keeps the profile exactly mirror
// symmetric when the axis is reversed. Membership is decided in integer arithmetic.

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"
#include "log.hpp"
#include "overlap.hpp"
#include "volume.hpp"

namespace segeval {

inline constexpr std::size_t kDefaultDepthBins = 20;

struct SliceSample {
    /// Normalized position as the exact fraction num/den of the GT extent.
    std::size_t num = 0;
    std::size_t den = 1;
    double dice = 0.0;

    double position_percent() const { return 100.0 * static_cast<double>(num) / static_cast<double>(den); }
};

struct DepthBin {
    double low = 0.0;
    double high = 0.0;
    /// Absent when no slice fell in the bin.
    std::optional<double> mean_dice;
    std::size_t n = 0;
};

struct DepthProfile {
    std::string model;
    Tissue tissue = Tissue::femoral_cartilage;
    Axis axis = Axis::z;
    std::vector<DepthBin> bins;
    std::size_t scans_used = 0;
    std::size_t scans_skipped = 0;
};

namespace detail {

struct SliceCounts {
    std::size_t pred = 0, gt = 0, both = 0;
};

inline std::vector<SliceCounts> slice_counts(const BinaryMask& pred, const BinaryMask& gt, Axis axis) {
    const Dims& d = gt.dims();
    std::vector<SliceCounts> out(d[axis]);
    for (std::size_t z = 0; z < d.nz; ++z)
        for (std::size_t y = 0; y < d.ny; ++y)
            for (std::size_t x = 0; x < d.nx; ++x) {
                const std::size_t i = d.index(x, y, z);
                const std::size_t s = axis == Axis::x ? x : axis == Axis::y ? y : z;
                const bool p = pred[i], g = gt[i];
                out[s].pred += p;
                out[s].gt += g;
                out[s].both += p && g;
            }
    return out;
}

} // namespace detail

/// Slice samples of one scan; empty when the GT has no foreground.
inline std::vector<SliceSample> slice_samples(const BinaryMask& pred, const BinaryMask& gt, Axis axis) {
    require_same_geometry(pred, gt, "depth profile");
    const auto counts = detail::slice_counts(pred, gt, axis);
    std::optional<std::size_t> first, last;
    for (std::size_t i = 0; i < counts.size(); ++i)
        if (counts[i].gt > 0) {
            if (!first) first = i;
            last = i;
        }
    std::vector<SliceSample> out;
    if (!first) return out;
    for (std::size_t i = *first; i <= *last; ++i) {
        const auto& c = counts[i];
        if (c.gt == 0) continue;
        SliceSample s;
        if (*first == *last) {
            s.num = 1;
            s.den = 2;
        } else {
            s.num = i - *first;
            s.den = *last - *first;
        }
        s.dice = 2.0 * static_cast<double>(c.both) / static_cast<double>(c.pred + c.gt);
        out.push_back(s);
    }
    return out;
}

/// Inclusive membership of a sample in bin b of B.
inline bool in_depth_bin(const SliceSample& s, std::size_t b, std::size_t bins) {
    const std::size_t scaled = bins * s.num;
    return b * s.den <= scaled && scaled <= (b + 1) * s.den;
}

/// Bins pooled samples. Bin means are order independent (values are summed in sorted order).
inline std::vector<DepthBin> bin_samples(std::span<const SliceSample> samples, std::size_t bins) {
    if (bins < 2) throw ValidationError("depth profile needs at least 2 bins");
    std::vector<std::vector<double>> members(bins);
    for (const auto& s : samples)
        for (std::size_t b = 0; b < bins; ++b)
            if (in_depth_bin(s, b, bins)) members[b].push_back(s.dice);
    std::vector<DepthBin> out(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        out[b].low = 100.0 * static_cast<double>(b) / static_cast<double>(bins);
        out[b].high = 100.0 * static_cast<double>(b + 1) / static_cast<double>(bins);
        auto& m = members[b];
        out[b].n = m.size();
        if (m.empty()) continue;
        std::sort(m.begin(), m.end());
        double sum = 0.0;
        for (double v : m) sum += v;
        out[b].mean_dice = std::clamp(sum / static_cast<double>(m.size()), m.front(), m.back());
    }
    return out;
}

inline DepthProfile depth_profile(std::span<const BinaryMask> pred, std::span<const BinaryMask> gt, Axis axis,
                                  std::size_t bins = kDefaultDepthBins) {
    if (pred.size() != gt.size())
        throw ValidationError("depth profile: " + std::to_string(pred.size()) + " predictions for " +
                              std::to_string(gt.size()) + " ground truths");
    if (bins < 2) throw ValidationError("depth profile needs at least 2 bins");
    DepthProfile profile;
    profile.axis = axis;
    if (!gt.empty()) profile.tissue = gt.front().tissue();
    std::vector<SliceSample> pooled;
    for (std::size_t s = 0; s < gt.size(); ++s) {
        auto samples = slice_samples(pred[s], gt[s], axis);
        if (samples.empty()) {
            log::warn("depth profile: scan " + std::to_string(s) + " has empty ground truth; skipped");
            ++profile.scans_skipped;
            continue;
        }
        ++profile.scans_used;
        pooled.insert(pooled.end(), samples.begin(), samples.end());
    }
    profile.bins = bin_samples(pooled, bins);
    return profile;
}

} // namespace segeval
