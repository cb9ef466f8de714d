#pragma once

// Vote ensembles and the oracle bound ensembles.
//
// oracle_tp keeps every voxel some member got right inside the ground truth: gt AND (any
// member). It has no false positives. oracle_tn keeps every voxel no member called
// background correctly: AND over members of (member OR gt). It has no false negatives, and
// its false positives are exactly the voxels every member labeled falsely.
// Oracle ensembles need the ground truth and are diagnostic bounds, not models.

#include <algorithm>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "volume.hpp"

namespace segeval {

namespace detail {
inline void require_members(std::span<const BinaryMask> members, std::string_view what) {
    if (members.empty()) throw ValidationError(std::string(what) + ": no members");
    for (const auto& m : members) require_same_geometry(members.front(), m, what);
}
} // namespace detail

/// Number of members voting true at each voxel.
inline std::vector<std::uint16_t> vote_counts(std::span<const BinaryMask> members) {
    detail::require_members(members, "vote");
    std::vector<std::uint16_t> counts(members.front().size(), 0);
    for (const auto& m : members) {
        const auto& v = m.voxels();
        for (std::size_t i = 0; i < counts.size(); ++i) counts[i] = static_cast<std::uint16_t>(counts[i] + v[i]);
    }
    return counts;
}

/// True where at least k of the n members are true.
inline BinaryMask vote(std::span<const BinaryMask> members, std::size_t k) {
    detail::require_members(members, "vote");
    if (k < 1 || k > members.size())
        throw ValidationError("vote threshold k=" + std::to_string(k) + " outside 1.." + std::to_string(members.size()));
    const auto counts = vote_counts(members);
    std::vector<std::uint8_t> out(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) out[i] = counts[i] >= k ? 1 : 0;
    const auto& f = members.front();
    return BinaryMask(f.dims(), f.spacing(), std::move(out), f.tissue());
}

inline BinaryMask oracle_tp(std::span<const BinaryMask> members, const BinaryMask& gt) {
    detail::require_members(members, "oracle_tp");
    require_same_geometry(members.front(), gt, "oracle_tp");
    std::vector<std::uint8_t> out(gt.size(), 0);
    for (const auto& m : members) {
        const auto& v = m.voxels();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] |= v[i];
    }
    const auto& g = gt.voxels();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] &= g[i];
    return BinaryMask(gt.dims(), gt.spacing(), std::move(out), gt.tissue());
}

inline BinaryMask oracle_tn(std::span<const BinaryMask> members, const BinaryMask& gt) {
    detail::require_members(members, "oracle_tn");
    require_same_geometry(members.front(), gt, "oracle_tn");
    const auto& g = gt.voxels();
    std::vector<std::uint8_t> out(gt.size(), 1);
    for (const auto& m : members) {
        const auto& v = m.voxels();
        for (std::size_t i = 0; i < out.size(); ++i) out[i] &= static_cast<std::uint8_t>(v[i] | g[i]);
    }
    return BinaryMask(gt.dims(), gt.spacing(), std::move(out), gt.tissue());
}

// ---------------------------------------------------------------------------
// Label-map level: per-tissue ensembles recomposed into one label map.

struct LabelEnsembleResult {
    LabelVolume labels;
    /// Voxels that passed the vote for more than one tissue.
    std::size_t conflicts = 0;
};

/// Votes each tissue independently, then recomposes. A voxel passing for several tissues
/// takes the one with the most votes, ties going to the lowest code.
inline LabelEnsembleResult vote_labels(std::span<const LabelVolume> members, std::size_t k) {
    if (members.empty()) throw ValidationError("vote: no members");
    for (const auto& m : members) require_same_geometry(members.front(), m, "vote");
    if (k < 1 || k > members.size())
        throw ValidationError("vote threshold k=" + std::to_string(k) + " outside 1.." + std::to_string(members.size()));
    const auto& f = members.front();
    const std::size_t n = f.dims().size();
    std::vector<std::uint8_t> labels(n, 0);
    std::size_t conflicts = 0;
    std::array<std::uint16_t, kMaxLabel + 1> counts{};
    for (std::size_t i = 0; i < n; ++i) {
        counts.fill(0);
        for (const auto& m : members) ++counts[m[i]];
        std::uint8_t best = 0;
        int winners = 0;
        for (std::uint8_t c = 1; c <= kMaxLabel; ++c) {
            if (counts[c] < k) continue;
            ++winners;
            if (best == 0 || counts[c] > counts[best]) best = c;
        }
        if (winners > 1) ++conflicts;
        labels[i] = best;
    }
    return {LabelVolume(f.dims(), f.spacing(), std::move(labels), f.through_plane_axis()), conflicts};
}

enum class EnsembleKind { vote, oracle_tp, oracle_tn };

struct EnsembleSpec {
    EnsembleKind kind = EnsembleKind::vote;
    std::size_t k = 1;
    std::vector<std::string> members;

    bool needs_ground_truth() const { return kind != EnsembleKind::vote; }
    bool is_oracle() const { return kind != EnsembleKind::vote; }

    /// Name used as the model column in outputs.
    std::string name() const {
        switch (kind) {
            case EnsembleKind::vote: return "E_vote_k" + std::to_string(k);
            case EnsembleKind::oracle_tp: return "E_oracle_tp";
            case EnsembleKind::oracle_tn: return "E_oracle_tn";
        }
        return "E";
    }

    std::string to_string() const {
        switch (kind) {
            case EnsembleKind::vote: return "vote:k=" + std::to_string(k);
            case EnsembleKind::oracle_tp: return "oracle:tp";
            case EnsembleKind::oracle_tn: return "oracle:tn";
        }
        return "";
    }

    void validate() const {
        if (members.empty()) throw ValidationError("ensemble " + to_string() + " has no members");
        if (kind == EnsembleKind::vote && (k < 1 || k > members.size()))
            throw ValidationError("ensemble " + to_string() + ": k must be in 1.." + std::to_string(members.size()));
    }
};

/// Parses "vote:k=4", "oracle:tp" or "oracle:tn".
inline EnsembleSpec parse_ensemble_spec(std::string_view text, std::vector<std::string> members = {}) {
    EnsembleSpec spec;
    spec.members = std::move(members);
    if (text == "oracle:tp") {
        spec.kind = EnsembleKind::oracle_tp;
    } else if (text == "oracle:tn") {
        spec.kind = EnsembleKind::oracle_tn;
    } else if (text.rfind("vote:k=", 0) == 0) {
        spec.kind = EnsembleKind::vote;
        const std::string digits(text.substr(7));
        if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }))
            throw ValidationError("ensemble spec '" + std::string(text) + "': k must be a positive integer");
        spec.k = std::stoul(digits);
    } else {
        throw ValidationError("unknown ensemble spec '" + std::string(text) +
                              "' (expected vote:k=<n>, oracle:tp or oracle:tn)");
    }
    if (!spec.members.empty()) spec.validate();
    return spec;
}

/// Builds one tissue's ensemble mask.
inline BinaryMask build_ensemble(const EnsembleSpec& spec, std::span<const BinaryMask> members,
                                 const BinaryMask* gt = nullptr) {
    if (spec.needs_ground_truth() && gt == nullptr)
        throw ValidationError("ensemble " + spec.to_string() + " needs a ground truth mask");
    switch (spec.kind) {
        case EnsembleKind::vote: return vote(members, spec.k);
        case EnsembleKind::oracle_tp: return oracle_tp(members, *gt);
        case EnsembleKind::oracle_tn: return oracle_tn(members, *gt);
    }
    throw ValidationError("unknown ensemble kind");
}

/// Builds a full label map: vote ensembles via vote_labels, oracle ensembles per tissue
/// (oracle outputs are disjoint across tissues only for oracle_tp; oracle_tn overlaps are
/// resolved toward the lowest code).
inline LabelEnsembleResult build_label_ensemble(const EnsembleSpec& spec, std::span<const LabelVolume> members,
                                                const LabelVolume* gt = nullptr) {
    if (spec.kind == EnsembleKind::vote) return vote_labels(members, spec.k);
    if (gt == nullptr) throw ValidationError("ensemble " + spec.to_string() + " needs a ground truth volume");
    const auto& f = members.front();
    std::vector<std::uint8_t> labels(f.dims().size(), 0);
    std::size_t conflicts = 0;
    std::vector<BinaryMask> tissue_members;
    for (Tissue t : kAllTissues) {
        tissue_members.clear();
        for (const auto& m : members) tissue_members.push_back(extract_mask(m, t));
        const auto g = extract_mask(*gt, t);
        const auto mask = build_ensemble(spec, tissue_members, &g);
        for (std::size_t i = 0; i < labels.size(); ++i) {
            if (!mask[i]) continue;
            if (labels[i] == 0)
                labels[i] = code(t);
            else
                ++conflicts;
        }
    }
    return {LabelVolume(f.dims(), f.spacing(), std::move(labels), f.through_plane_axis()), conflicts};
}

} // namespace segeval
