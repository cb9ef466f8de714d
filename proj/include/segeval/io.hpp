#pragma once

// Mask file formats.
//
// SEGV (native, little-endian):
//   offset  size  field
//   0       4     magic "SEGV"
//   4       2     u16 version = 1
//   6       1     u8 encoding (0 = label map, 1 = one-hot channel stack)
//   7       1     u8 reserved = 0
//   8       12    u32 nx, ny, nz
//   20      4     u32 nchannels (1 for a label map)
//   24      12    f32 dx, dy, dz (mm)
//   36      ...   nx*ny*nz*nchannels bytes, x fastest, then y, z, channel
//
// One-hot channel c (0-based) carries tissue code c+1.
//
// NIfTI-1 single-file (.nii), integer datatypes only. A fourth dimension > 1 is read as
// a one-hot channel stack with the same convention.

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "geometry.hpp"
#include "log.hpp"
#include "volume.hpp"

namespace segeval {

enum class VolumeFormat { segv, nifti };

inline constexpr std::size_t kSegvHeaderSize = 36;
inline constexpr std::uint16_t kSegvVersion = 1;

/// Overlapping one-hot voxels above this fraction of the foreground are rejected.
inline constexpr double kMaxOneHotOverlapFraction = 0.001;

namespace detail {

class ByteReader {
public:
    ByteReader(std::span<const std::uint8_t> bytes, bool big_endian = false)
        : bytes_(bytes), big_endian_(big_endian) {}

    template <typename T>
    T read_at(std::size_t offset) const {
        if (offset + sizeof(T) > bytes_.size()) throw FormatError("truncated header");
        std::array<std::uint8_t, sizeof(T)> buf{};
        std::memcpy(buf.data(), bytes_.data() + offset, sizeof(T));
        if (big_endian_ != (std::endian::native == std::endian::big)) std::reverse(buf.begin(), buf.end());
        T v;
        std::memcpy(&v, buf.data(), sizeof(T));
        return v;
    }
    std::size_t size() const { return bytes_.size(); }
    std::span<const std::uint8_t> bytes() const { return bytes_; }

private:
    std::span<const std::uint8_t> bytes_;
    bool big_endian_;
};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
    std::array<std::uint8_t, sizeof(T)> buf{};
    std::memcpy(buf.data(), &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
    out.insert(out.end(), buf.begin(), buf.end());
}

/// Collapses a channel stack (channel c -> code c+1) to a label map; lowest code wins on overlap.
inline std::vector<std::uint8_t> collapse_one_hot(std::span<const std::uint8_t> payload, std::size_t nvox,
                                                  std::size_t nchannels) {
    if (nchannels == 0 || nchannels > kMaxLabel)
        throw FormatError("one-hot stack must have 1.." + std::to_string(kMaxLabel) + " channels, got " +
                          std::to_string(nchannels));
    std::vector<std::uint8_t> labels(nvox, 0);
    std::size_t overlap = 0, foreground = 0;
    for (std::size_t i = 0; i < nvox; ++i) {
        int set = 0;
        for (std::size_t c = 0; c < nchannels; ++c) {
            const std::uint8_t v = payload[c * nvox + i];
            if (v > 1)
                throw FormatError("one-hot channel " + std::to_string(c) + " has non-binary value " +
                                  std::to_string(v) + " at voxel " + std::to_string(i));
            if (v) {
                if (set == 0) labels[i] = static_cast<std::uint8_t>(c + 1);
                ++set;
            }
        }
        if (set > 0) ++foreground;
        if (set > 1) ++overlap;
    }
    if (overlap > 0) {
        const double frac = static_cast<double>(overlap) / static_cast<double>(foreground);
        if (frac > kMaxOneHotOverlapFraction)
            throw FormatError("one-hot channels overlap on " + std::to_string(overlap) + " voxels (" +
                              std::to_string(100.0 * frac) + "% of foreground)");
        log::warn("one-hot channels overlap on " + std::to_string(overlap) +
                  " voxels; lowest tissue code kept");
    }
    return labels;
}

inline bool looks_like_segv(std::span<const std::uint8_t> b) {
    return b.size() >= 4 && b[0] == 'S' && b[1] == 'E' && b[2] == 'G' && b[3] == 'V';
}

inline std::optional<bool> nifti_big_endian(std::span<const std::uint8_t> b) {
    if (b.size() < 348) return std::nullopt;
    if (ByteReader(b, false).read_at<std::int32_t>(0) == 348) return false;
    if (ByteReader(b, true).read_at<std::int32_t>(0) == 348) return true;
    return std::nullopt;
}

} // namespace detail

inline LabelVolume parse_segv(std::span<const std::uint8_t> bytes) {
    if (!detail::looks_like_segv(bytes)) throw FormatError("missing SEGV magic");
    if (bytes.size() < kSegvHeaderSize) throw FormatError("SEGV header truncated");
    detail::ByteReader r(bytes);
    const auto version = r.read_at<std::uint16_t>(4);
    const auto encoding = r.read_at<std::uint8_t>(6);
    if (version != kSegvVersion) throw FormatError("unsupported SEGV version " + std::to_string(version));
    if (encoding > 1) throw FormatError("unknown SEGV encoding " + std::to_string(encoding));
    const Dims dims{r.read_at<std::uint32_t>(8), r.read_at<std::uint32_t>(12), r.read_at<std::uint32_t>(16)};
    const std::size_t nchannels = r.read_at<std::uint32_t>(20);
    if (dims.size() == 0) throw FormatError("SEGV dims must be positive, got " + to_string(dims));
    if (encoding == 0 && nchannels != 1)
        throw FormatError("label-map SEGV must declare 1 channel, got " + std::to_string(nchannels));
    const VoxelSpacing spacing = [&] {
        try {
            return VoxelSpacing(r.read_at<float>(24), r.read_at<float>(28), r.read_at<float>(32));
        } catch (const ValidationError& e) {
            throw FormatError(e.what());
        }
    }();
    const std::size_t payload = dims.size() * nchannels;
    if (bytes.size() - kSegvHeaderSize != payload)
        throw FormatError("SEGV payload is " + std::to_string(bytes.size() - kSegvHeaderSize) +
                          " bytes, header requires " + std::to_string(payload));
    auto body = bytes.subspan(kSegvHeaderSize);
    if (encoding == 0) return LabelVolume(dims, spacing, {body.begin(), body.end()});
    return LabelVolume(dims, spacing, detail::collapse_one_hot(body, dims.size(), nchannels));
}

inline std::vector<std::uint8_t> encode_segv(const LabelVolume& v) {
    std::vector<std::uint8_t> out;
    out.reserve(kSegvHeaderSize + v.labels().size());
    for (char c : {'S', 'E', 'G', 'V'}) out.push_back(static_cast<std::uint8_t>(c));
    detail::put_le<std::uint16_t>(out, kSegvVersion);
    detail::put_le<std::uint8_t>(out, 0);
    detail::put_le<std::uint8_t>(out, 0);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(v.dims().nx));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(v.dims().ny));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(v.dims().nz));
    detail::put_le<std::uint32_t>(out, 1);
    detail::put_le<float>(out, static_cast<float>(v.spacing().dx()));
    detail::put_le<float>(out, static_cast<float>(v.spacing().dy()));
    detail::put_le<float>(out, static_cast<float>(v.spacing().dz()));
    out.insert(out.end(), v.labels().begin(), v.labels().end());
    return out;
}

/// One-hot encoding with one channel per tissue code 1..nchannels.
inline std::vector<std::uint8_t> encode_segv_one_hot(const LabelVolume& v, std::size_t nchannels = kMaxLabel) {
    std::vector<std::uint8_t> out;
    for (char c : {'S', 'E', 'G', 'V'}) out.push_back(static_cast<std::uint8_t>(c));
    detail::put_le<std::uint16_t>(out, kSegvVersion);
    detail::put_le<std::uint8_t>(out, 1);
    detail::put_le<std::uint8_t>(out, 0);
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(v.dims().nx));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(v.dims().ny));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(v.dims().nz));
    detail::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(nchannels));
    detail::put_le<float>(out, static_cast<float>(v.spacing().dx()));
    detail::put_le<float>(out, static_cast<float>(v.spacing().dy()));
    detail::put_le<float>(out, static_cast<float>(v.spacing().dz()));
    for (std::size_t c = 1; c <= nchannels; ++c)
        for (auto l : v.labels()) out.push_back(l == c ? 1 : 0);
    return out;
}

// NIfTI-1 header field offsets.
namespace nifti {
inline constexpr std::size_t kHeaderSize = 348;
inline constexpr std::size_t kDim = 40;
inline constexpr std::size_t kDatatype = 70;
inline constexpr std::size_t kBitpix = 72;
inline constexpr std::size_t kPixdim = 76;
inline constexpr std::size_t kVoxOffset = 108;
inline constexpr std::size_t kMagic = 344;

enum Datatype : std::int16_t {
    uint8 = 2, int16 = 4, int32 = 8, int8 = 256, uint16 = 512, uint32 = 768, int64 = 1024, uint64 = 1280,
};
} // namespace nifti

inline LabelVolume parse_nifti(std::span<const std::uint8_t> bytes) {
    const auto big = detail::nifti_big_endian(bytes);
    if (!big) throw FormatError("not a NIfTI-1 file (sizeof_hdr != 348)");
    detail::ByteReader r(bytes, *big);
    if (!(bytes[nifti::kMagic] == 'n' && bytes[nifti::kMagic + 1] == '+' && bytes[nifti::kMagic + 2] == '1'))
        throw FormatError("only single-file NIfTI-1 (magic n+1) is supported");

    std::array<std::int16_t, 8> dim{};
    for (std::size_t i = 0; i < 8; ++i) dim[i] = r.read_at<std::int16_t>(nifti::kDim + 2 * i);
    const int ndim = dim[0];
    if (ndim < 3 || ndim > 7) throw FormatError("NIfTI dim[0]=" + std::to_string(ndim) + " unsupported");
    for (int i = 1; i <= ndim; ++i)
        if (dim[i] < 1) throw FormatError("NIfTI dim[" + std::to_string(i) + "] must be positive");
    for (int i = 5; i <= ndim; ++i)
        if (dim[i] != 1) throw FormatError("NIfTI dimensions beyond the 4th must be 1");
    const Dims dims{static_cast<std::size_t>(dim[1]), static_cast<std::size_t>(dim[2]),
                    static_cast<std::size_t>(dim[3])};
    const std::size_t nchannels = ndim >= 4 ? static_cast<std::size_t>(dim[4]) : 1;

    const VoxelSpacing spacing = [&] {
        try {
            return VoxelSpacing(r.read_at<float>(nifti::kPixdim + 4), r.read_at<float>(nifti::kPixdim + 8),
                                r.read_at<float>(nifti::kPixdim + 12));
        } catch (const ValidationError& e) {
            throw FormatError(e.what());
        }
    }();

    const auto datatype = r.read_at<std::int16_t>(nifti::kDatatype);
    std::size_t width = 0;
    switch (datatype) {
        case nifti::uint8: case nifti::int8: width = 1; break;
        case nifti::int16: case nifti::uint16: width = 2; break;
        case nifti::int32: case nifti::uint32: width = 4; break;
        case nifti::int64: case nifti::uint64: width = 8; break;
        default: throw FormatError("NIfTI datatype " + std::to_string(datatype) + " is not an integer type");
    }
    const auto offset = static_cast<std::size_t>(r.read_at<float>(nifti::kVoxOffset));
    if (offset < nifti::kHeaderSize) throw FormatError("NIfTI vox_offset inside header");
    const std::size_t n = dims.size() * nchannels;
    if (bytes.size() < offset + n * width) throw FormatError("NIfTI payload truncated");

    std::vector<std::uint8_t> raw(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t at = offset + i * width;
        long long v = 0;
        switch (datatype) {
            case nifti::uint8: v = r.read_at<std::uint8_t>(at); break;
            case nifti::int8: v = r.read_at<std::int8_t>(at); break;
            case nifti::int16: v = r.read_at<std::int16_t>(at); break;
            case nifti::uint16: v = r.read_at<std::uint16_t>(at); break;
            case nifti::int32: v = r.read_at<std::int32_t>(at); break;
            case nifti::uint32: v = r.read_at<std::uint32_t>(at); break;
            case nifti::int64: v = r.read_at<std::int64_t>(at); break;
            case nifti::uint64: v = static_cast<long long>(std::min<std::uint64_t>(r.read_at<std::uint64_t>(at), 255)); break;
            default: break;
        }
        if (v < 0 || v > 255) throw FormatError("unknown label code " + std::to_string(v) + " at voxel " + std::to_string(i));
        raw[i] = static_cast<std::uint8_t>(v);
    }
    if (nchannels == 1) return LabelVolume(dims, spacing, std::move(raw));
    return LabelVolume(dims, spacing, detail::collapse_one_hot(raw, dims.size(), nchannels));
}

/// Minimal uint8 NIfTI-1 single file, no orientation.
inline std::vector<std::uint8_t> encode_nifti(const LabelVolume& v) {
    std::vector<std::uint8_t> out(352, 0);
    auto put = [&out](std::size_t at, auto value) {
        std::vector<std::uint8_t> tmp;
        detail::put_le(tmp, value);
        std::copy(tmp.begin(), tmp.end(), out.begin() + static_cast<std::ptrdiff_t>(at));
    };
    put(0, std::int32_t{348});
    put(nifti::kDim, std::int16_t{3});
    put(nifti::kDim + 2, static_cast<std::int16_t>(v.dims().nx));
    put(nifti::kDim + 4, static_cast<std::int16_t>(v.dims().ny));
    put(nifti::kDim + 6, static_cast<std::int16_t>(v.dims().nz));
    for (std::size_t i = 4; i < 8; ++i) put(nifti::kDim + 2 * i, std::int16_t{1});
    put(nifti::kDatatype, std::int16_t{nifti::uint8});
    put(nifti::kBitpix, std::int16_t{8});
    put(nifti::kPixdim, 1.0f);
    put(nifti::kPixdim + 4, static_cast<float>(v.spacing().dx()));
    put(nifti::kPixdim + 8, static_cast<float>(v.spacing().dy()));
    put(nifti::kPixdim + 12, static_cast<float>(v.spacing().dz()));
    put(nifti::kVoxOffset, 352.0f);
    put(112, 1.0f); // scl_slope
    out[nifti::kMagic] = 'n';
    out[nifti::kMagic + 1] = '+';
    out[nifti::kMagic + 2] = '1';
    out.insert(out.end(), v.labels().begin(), v.labels().end());
    return out;
}

inline LabelVolume parse_volume(std::span<const std::uint8_t> bytes, std::optional<VolumeFormat> hint = {}) {
    VolumeFormat fmt;
    if (hint) {
        fmt = *hint;
    } else if (detail::looks_like_segv(bytes)) {
        fmt = VolumeFormat::segv;
    } else if (detail::nifti_big_endian(bytes)) {
        fmt = VolumeFormat::nifti;
    } else {
        throw FormatError("unrecognized volume format (neither SEGV nor NIfTI-1)");
    }
    return fmt == VolumeFormat::segv ? parse_segv(bytes) : parse_nifti(bytes);
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

inline LabelVolume load_volume(const std::filesystem::path& path, std::optional<VolumeFormat> hint = {}) {
    const auto bytes = read_file_bytes(path);
    try {
        return parse_volume(bytes, hint);
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

/// Writes NIfTI-1 for .nii paths, SEGV otherwise.
inline void save_volume(const std::filesystem::path& path, const LabelVolume& v) {
    if (path.extension() == ".nii")
        write_file_bytes(path, encode_nifti(v));
    else
        write_file_bytes(path, encode_segv(v));
}

} // namespace segeval
