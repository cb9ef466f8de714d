#pragma once

#include <cmath>
#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "error.hpp"
#include "log.hpp"
#include "volume.hpp"

namespace segeval {

struct OverlapCounts {
    std::size_t a = 0, b = 0, both = 0;

    std::size_t either() const { return a + b - both; }
};

inline OverlapCounts overlap_counts(const BinaryMask& a, const BinaryMask& b) {
    require_same_geometry(a, b, "overlap");
    OverlapCounts c;
    const auto& va = a.voxels();
    const auto& vb = b.voxels();
    for (std::size_t i = 0; i < va.size(); ++i) {
        c.a += va[i];
        c.b += vb[i];
        c.both += va[i] & vb[i];
    }
    return c;
}

/// 2|a∩b| / (|a|+|b|) from counts; 1 when both are empty.
inline double dice_from_counts(const OverlapCounts& c) {
    if (c.a + c.b == 0) return 1.0;
    return 2.0 * static_cast<double>(c.both) / static_cast<double>(c.a + c.b);
}

inline double voe_from_counts(const OverlapCounts& c) {
    if (c.either() == 0) return 0.0;
    return 1.0 - static_cast<double>(c.both) / static_cast<double>(c.either());
}

inline double dice(const BinaryMask& a, const BinaryMask& b) {
    const auto c = overlap_counts(a, b);
    if (c.a + c.b == 0) log::warn("dice of two empty masks defined as 1");
    return dice_from_counts(c);
}

/// Volumetric overlap error, the Jaccard complement.
inline double voe(const BinaryMask& a, const BinaryMask& b) {
    const auto c = overlap_counts(a, b);
    if (c.either() == 0) log::warn("voe of two empty masks defined as 0");
    return voe_from_counts(c);
}

inline double volume_mm3(const BinaryMask& a) {
    return static_cast<double>(a.count()) * a.spacing().voxel_volume();
}

// ---------------------------------------------------------------------------
// Coefficient of variation between predicted and reference volumes.

enum class CvVariant {
    /// Two-sample standard deviation with n-1 denominator: |a-b|/sqrt(2).
    sample,
    /// Population standard deviation: |a-b|/2.
    population,
};

struct VolumePair {
    double predicted = 0.0;
    double reference = 0.0;
};

/// Per-pair CV: sd / mean. Throws when both volumes are zero.
inline double pair_cv(VolumePair p, CvVariant variant = CvVariant::sample) {
    if (p.predicted < 0.0 || p.reference < 0.0) throw ValidationError("volumes must be nonnegative");
    const double mean = 0.5 * (p.predicted + p.reference);
    if (mean == 0.0) throw ValidationError("coefficient of variation undefined for two zero volumes");
    const double diff = std::abs(p.predicted - p.reference);
    const double sd = variant == CvVariant::sample ? diff / std::sqrt(2.0) : 0.5 * diff;
    return sd / mean;
}

struct RmsCvOptions {
    CvVariant variant = CvVariant::sample;
    /// Drop pairs whose volumes are both zero instead of raising.
    bool skip_zero_pairs = false;
};

/// Root-mean-square of the per-pair coefficients of variation.
inline double rms_cv(std::span<const VolumePair> pairs, RmsCvOptions opts = {}) {
    if (pairs.empty()) throw ValidationError("rms_cv needs at least one volume pair");
    double sum_sq = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& p = pairs[i];
        if (p.predicted == 0.0 && p.reference == 0.0) {
            if (!opts.skip_zero_pairs)
                throw ValidationError("rms_cv: pair " + std::to_string(i) + " has both volumes zero");
            log::warn("rms_cv: pair " + std::to_string(i) + " has both volumes zero; excluded");
            continue;
        }
        const double cv = pair_cv(p, opts.variant);
        sum_sq += cv * cv;
        ++n;
    }
    if (n == 0) throw ValidationError("rms_cv: every pair was excluded");
    return std::sqrt(sum_sq / static_cast<double>(n));
}

// ---------------------------------------------------------------------------
// Pairwise inter-model Dice correlation.

/// Symmetric matrix of mean pairwise Dice between models, unit diagonal.
struct DiceCorrelationMatrix {
    Tissue tissue = Tissue::femoral_cartilage;
    std::vector<std::string> models;
    std::vector<std::vector<double>> values;
    std::size_t scans = 0;

    double operator()(std::size_t i, std::size_t j) const { return values[i][j]; }
};

/// Streams scans one at a time so callers need not hold every mask in memory.
class DiceCorrelationAccumulator {
public:
    DiceCorrelationAccumulator(std::vector<std::string> models, Tissue tissue)
        : models_(std::move(models)), tissue_(tissue),
          sums_(models_.size(), std::vector<double>(models_.size(), 0.0)) {}

    /// One mask per model, in model order, all for the same scan.
    void add_scan(std::span<const BinaryMask> masks) {
        if (masks.size() != models_.size())
            throw ValidationError("dice correlation: expected " + std::to_string(models_.size()) +
                                  " masks for a scan, got " + std::to_string(masks.size()));
        add_pairwise(pairwise(masks));
    }

    /// Upper-triangular pairwise dice of one scan; lets scans be computed apart and summed in order.
    static std::vector<std::vector<double>> pairwise(std::span<const BinaryMask> masks) {
        std::vector<std::vector<double>> d(masks.size(), std::vector<double>(masks.size(), 1.0));
        for (std::size_t i = 0; i < masks.size(); ++i)
            for (std::size_t j = i + 1; j < masks.size(); ++j)
                d[i][j] = d[j][i] = dice_from_counts(overlap_counts(masks[i], masks[j]));
        return d;
    }

    void add_pairwise(const std::vector<std::vector<double>>& d) {
        if (d.size() != models_.size()) throw ValidationError("dice correlation: pairwise matrix has wrong size");
        for (std::size_t i = 0; i < d.size(); ++i)
            for (std::size_t j = i + 1; j < d.size(); ++j) sums_[i][j] += d[i][j];
        ++scans_;
    }

    DiceCorrelationMatrix result() const {
        DiceCorrelationMatrix m{tissue_, models_, std::vector<std::vector<double>>(models_.size(),
                                                                                   std::vector<double>(models_.size(), 1.0)),
                                scans_};
        if (scans_ == 0) throw ValidationError("dice correlation: no scans");
        for (std::size_t i = 0; i < models_.size(); ++i)
            for (std::size_t j = i + 1; j < models_.size(); ++j)
                m.values[i][j] = m.values[j][i] = sums_[i][j] / static_cast<double>(scans_);
        return m;
    }

private:
    std::vector<std::string> models_;
    Tissue tissue_;
    std::vector<std::vector<double>> sums_;
    std::size_t scans_ = 0;
};

/// Every model must supply masks for the same ordered scan list.
inline DiceCorrelationMatrix dice_correlation_matrix(const std::map<std::string, std::vector<BinaryMask>>& masks) {
    if (masks.empty()) throw ValidationError("dice correlation: no models");
    std::vector<std::string> models;
    std::size_t nscans = masks.begin()->second.size();
    for (const auto& [name, list] : masks) {
        if (list.size() != nscans)
            throw ValidationError("dice correlation: model '" + name + "' has " + std::to_string(list.size()) +
                                  " scans, expected " + std::to_string(nscans));
        models.push_back(name);
    }
    const Tissue tissue = nscans > 0 ? masks.begin()->second.front().tissue() : Tissue::femoral_cartilage;
    DiceCorrelationAccumulator acc(models, tissue);
    std::vector<BinaryMask> scan;
    for (std::size_t s = 0; s < nscans; ++s) {
        scan.clear();
        for (const auto& [name, list] : masks) scan.push_back(list[s]);
        acc.add_scan(scan);
    }
    return acc.result();
}

} // namespace segeval
