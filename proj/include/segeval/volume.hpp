#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"

namespace segeval {

/// Tissue class codes of the label alphabet. 0 is background.
enum class Tissue : std::uint8_t {
    femoral_cartilage = 1,
    tibial_cartilage = 2,
    patellar_cartilage = 3,
    meniscus = 4,
};

inline constexpr std::uint8_t kMaxLabel = 4;
inline constexpr std::array<Tissue, 4> kAllTissues{Tissue::femoral_cartilage, Tissue::tibial_cartilage,
                                                   Tissue::patellar_cartilage, Tissue::meniscus};
inline constexpr std::array<Tissue, 3> kCartilageTissues{
    Tissue::femoral_cartilage, Tissue::tibial_cartilage, Tissue::patellar_cartilage};

constexpr std::uint8_t code(Tissue t) { return static_cast<std::uint8_t>(t); }
constexpr bool is_cartilage(Tissue t) { return t != Tissue::meniscus; }

inline std::string_view tissue_name(Tissue t) {
    switch (t) {
        case Tissue::femoral_cartilage: return "femoral_cartilage";
        case Tissue::tibial_cartilage: return "tibial_cartilage";
        case Tissue::patellar_cartilage: return "patellar_cartilage";
        case Tissue::meniscus: return "meniscus";
    }
    return "unknown";
}

inline Tissue tissue_from_code(int c) {
    if (c < 1 || c > kMaxLabel)
        throw ValidationError("tissue code " + std::to_string(c) + " is not a nonzero label in {1,2,3,4}");
    return static_cast<Tissue>(c);
}

/// Accepts canonical names, short names (femoral, tibial, patellar) or numeric codes.
inline Tissue parse_tissue(std::string_view s) {
    for (Tissue t : kAllTissues) {
        std::string_view name = tissue_name(t);
        if (s == name || s == name.substr(0, name.find('_'))) return t;
    }
    if (s.size() == 1 && s[0] >= '0' && s[0] <= '9') return tissue_from_code(s[0] - '0');
    throw ValidationError("unknown tissue '" + std::string(s) + "'");
}

/// Dense 3D grid of tissue codes with physical spacing. Immutable after construction.
class LabelVolume {
public:
    LabelVolume() = default;
    LabelVolume(Dims dims, VoxelSpacing spacing, std::vector<std::uint8_t> labels, Axis through_plane = Axis::z)
        : dims_(dims), spacing_(spacing), labels_(std::move(labels)), through_plane_(through_plane) {
        if (dims_.nx == 0 || dims_.ny == 0 || dims_.nz == 0)
            throw FormatError("volume dims must be positive, got " + to_string(dims_));
        if (labels_.size() != dims_.size())
            throw FormatError("payload has " + std::to_string(labels_.size()) + " voxels, dims " +
                              to_string(dims_) + " require " + std::to_string(dims_.size()));
        auto bad = std::find_if(labels_.begin(), labels_.end(), [](std::uint8_t v) { return v > kMaxLabel; });
        if (bad != labels_.end())
            throw FormatError("unknown label code " + std::to_string(*bad) + " at voxel " +
                              std::to_string(bad - labels_.begin()));
    }

    const Dims& dims() const { return dims_; }
    const VoxelSpacing& spacing() const { return spacing_; }
    Axis through_plane_axis() const { return through_plane_; }
    const std::vector<std::uint8_t>& labels() const { return labels_; }
    std::uint8_t operator[](std::size_t i) const { return labels_[i]; }
    std::uint8_t at(std::size_t x, std::size_t y, std::size_t z) const { return labels_[dims_.index(x, y, z)]; }

    LabelVolume with_through_plane(Axis a) const {
        LabelVolume v = *this;
        v.through_plane_ = a;
        return v;
    }

    friend bool operator==(const LabelVolume& a, const LabelVolume& b) {
        return a.dims_ == b.dims_ && a.spacing_ == b.spacing_ && a.labels_ == b.labels_;
    }

private:
    Dims dims_{};
    VoxelSpacing spacing_{};
    std::vector<std::uint8_t> labels_;
    Axis through_plane_ = Axis::z;
};

/// Single-tissue boolean grid; voxels are stored as 0/1 bytes.
class BinaryMask {
public:
    BinaryMask() = default;
    BinaryMask(Dims dims, VoxelSpacing spacing, std::vector<std::uint8_t> voxels,
               Tissue tissue = Tissue::femoral_cartilage)
        : dims_(dims), spacing_(spacing), voxels_(std::move(voxels)), tissue_(tissue) {
        if (voxels_.size() != dims_.size())
            throw ShapeMismatch("mask payload has " + std::to_string(voxels_.size()) + " voxels, dims " +
                                to_string(dims_) + " require " + std::to_string(dims_.size()));
        for (auto& v : voxels_) v = v ? 1 : 0;
    }

    /// All-false mask.
    static BinaryMask empty(Dims dims, VoxelSpacing spacing, Tissue tissue = Tissue::femoral_cartilage) {
        return BinaryMask(dims, spacing, std::vector<std::uint8_t>(dims.size(), 0), tissue);
    }

    const Dims& dims() const { return dims_; }
    const VoxelSpacing& spacing() const { return spacing_; }
    Tissue tissue() const { return tissue_; }
    const std::vector<std::uint8_t>& voxels() const { return voxels_; }
    std::size_t size() const { return voxels_.size(); }
    bool operator[](std::size_t i) const { return voxels_[i] != 0; }
    bool at(std::size_t x, std::size_t y, std::size_t z) const { return voxels_[dims_.index(x, y, z)] != 0; }
    /// Out-of-grid coordinates read as false.
    bool at_or_false(long x, long y, long z) const {
        return dims_.contains(x, y, z) &&
               voxels_[dims_.index(static_cast<std::size_t>(x), static_cast<std::size_t>(y),
                                   static_cast<std::size_t>(z))] != 0;
    }

    std::size_t count() const {
        return static_cast<std::size_t>(std::count(voxels_.begin(), voxels_.end(), std::uint8_t{1}));
    }
    bool is_empty() const { return std::none_of(voxels_.begin(), voxels_.end(), [](auto v) { return v != 0; }); }

    BinaryMask with_spacing(VoxelSpacing s) const { return BinaryMask(dims_, s, voxels_, tissue_); }
    BinaryMask with_tissue(Tissue t) const { return BinaryMask(dims_, spacing_, voxels_, t); }

    friend bool operator==(const BinaryMask& a, const BinaryMask& b) {
        return a.dims_ == b.dims_ && a.spacing_ == b.spacing_ && a.voxels_ == b.voxels_;
    }

private:
    Dims dims_{};
    VoxelSpacing spacing_{};
    std::vector<std::uint8_t> voxels_;
    Tissue tissue_ = Tissue::femoral_cartilage;
};

/// Throws ShapeMismatch unless both operands share dims and spacing.
template <typename A, typename B>
void require_same_geometry(const A& a, const B& b, std::string_view what = "operands") {
    if (!(a.dims() == b.dims()))
        throw ShapeMismatch(std::string(what) + ": dims differ (" + to_string(a.dims()) + " vs " +
                            to_string(b.dims()) + ")");
    if (!a.spacing().approx_equal(b.spacing()))
        throw ShapeMismatch(std::string(what) + ": spacing differs");
}

inline BinaryMask extract_mask(const LabelVolume& volume, Tissue tissue) {
    tissue_from_code(code(tissue));
    const auto& labels = volume.labels();
    std::vector<std::uint8_t> out(labels.size());
    const std::uint8_t c = code(tissue);
    std::transform(labels.begin(), labels.end(), out.begin(), [c](std::uint8_t v) { return v == c ? 1 : 0; });
    return BinaryMask(volume.dims(), volume.spacing(), std::move(out), tissue);
}

inline BinaryMask extract_mask(const LabelVolume& volume, int tissue_code) {
    return extract_mask(volume, tissue_from_code(tissue_code));
}

/// Writes each mask's tissue code into a label map. Masks must be disjoint; later masks
/// never overwrite earlier ones.
inline LabelVolume compose_labels(const std::vector<BinaryMask>& masks, Dims dims, VoxelSpacing spacing,
                                  Axis through_plane = Axis::z) {
    std::vector<std::uint8_t> labels(dims.size(), 0);
    for (const auto& m : masks) {
        if (!(m.dims() == dims)) throw ShapeMismatch("compose_labels: mask dims differ");
        const auto c = code(m.tissue());
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (m[i] && labels[i] == 0) labels[i] = c;
    }
    return LabelVolume(dims, spacing, std::move(labels), through_plane);
}

} // namespace segeval
