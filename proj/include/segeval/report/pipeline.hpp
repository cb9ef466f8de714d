#pragma once

// Batch evaluation over a manifest. Work is split per scan across a bounded worker pool;
// every reduction runs afterwards in manifest order, so outputs do not depend on the
// number of workers.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "../droid.hpp"
#include "../ensemble.hpp"
#include "../io.hpp"
#include "../log.hpp"
#include "../manifest.hpp"
#include "../overlap.hpp"
#include "../surface.hpp"
#include "../thickness.hpp"
#include "config.hpp"
#include "parallel.hpp"
#include "table.hpp"

namespace segeval::report {

struct LoadedScan {
    const ScanRecord* record = nullptr;
    std::optional<LabelVolume> gt;
    std::string gt_error;
    std::map<std::string, LabelVolume> predictions;
    /// Model -> why its prediction is unusable for this scan.
    std::map<std::string, std::string> prediction_errors;
};

inline LoadedScan load_scan(const ScanRecord& rec, const std::vector<std::string>& models, Axis axis) {
    LoadedScan s;
    s.record = &rec;
    try {
        s.gt = load_volume(rec.ground_truth_path).with_through_plane(axis);
    } catch (const Error& e) {
        s.gt_error = std::string("ground truth unreadable: ") + e.what();
        return s;
    }
    for (const auto& model : models) {
        auto it = rec.prediction_paths.find(model);
        if (it == rec.prediction_paths.end()) {
            s.prediction_errors[model] = "no prediction listed";
            continue;
        }
        try {
            auto v = load_volume(it->second).with_through_plane(axis);
            require_same_geometry(v, *s.gt, "prediction vs ground truth");
            s.predictions.emplace(model, std::move(v));
        } catch (const ShapeMismatch& e) {
            s.prediction_errors[model] = std::string("geometry mismatch: ") + e.what();
        } catch (const Error& e) {
            s.prediction_errors[model] = std::string("prediction unreadable: ") + e.what();
        }
    }
    return s;
}

/// Masks of one model for one tissue, or the reason they are unavailable.
struct ModelMask {
    std::optional<BinaryMask> mask;
    std::string error;
};

/// Prediction mask of a plain model or an ensemble for a tissue.
inline ModelMask model_mask(const LoadedScan& s, const std::string& model, Tissue tissue,
                            const EnsembleSpec* ensemble = nullptr) {
    if (!s.gt) return {std::nullopt, s.gt_error};
    if (ensemble == nullptr) {
        if (auto e = s.prediction_errors.find(model); e != s.prediction_errors.end()) return {std::nullopt, e->second};
        return {extract_mask(s.predictions.at(model), tissue), {}};
    }
    std::vector<BinaryMask> members;
    for (const auto& m : ensemble->members) {
        if (auto e = s.prediction_errors.find(m); e != s.prediction_errors.end())
            return {std::nullopt, "ensemble member '" + m + "' unavailable: " + e->second};
        members.push_back(extract_mask(s.predictions.at(m), tissue));
    }
    const auto gt = extract_mask(*s.gt, tissue);
    return {build_ensemble(*ensemble, members, &gt), {}};
}

/// Members plus evaluated models, loaded once per scan.
inline std::vector<std::string> models_to_load(const RunConfig& cfg, const DatasetManifest& m) {
    auto models = cfg.resolve_models(m);
    for (const auto& e : cfg.ensembles)
        for (const auto& name : e.members)
            if (std::find(models.begin(), models.end(), name) == models.end()) models.push_back(name);
    return models;
}

namespace detail {

struct ScanOutput {
    std::vector<MetricRecord> records;
    std::vector<Exclusion> exclusions;
};

inline void evaluate_tissue(const RunConfig& cfg, const ScanRecord& rec, const std::string& model, const BinaryMask& pred,
                            const BinaryMask& gt, const std::optional<ThicknessResult>& gt_thickness, ScanOutput& out) {
    const Tissue tissue = gt.tissue();
    auto add = [&](std::string_view metric, double v) {
        out.records.push_back({model, rec.subject_id, rec.timepoint, tissue, std::string(metric), v});
    };
    auto exclude = [&](std::string_view metric, std::string reason) {
        out.exclusions.push_back({model, rec.subject_id, rec.timepoint, tissue, std::string(metric), std::move(reason)});
    };

    const auto counts = overlap_counts(pred, gt);
    add(metric::dice, dice_from_counts(counts));
    add(metric::voe, voe_from_counts(counts));
    const double vp = volume_mm3(pred), vg = volume_mm3(gt);
    add(metric::volume_mm3, vp);
    add(metric::gt_volume_mm3, vg);
    if (vp == 0.0 && vg == 0.0)
        exclude(metric::cv, "both volumes zero");
    else
        add(metric::cv, pair_cv({vp, vg}, cfg.cv_variant));

    const auto assd = assd_mm(pred, gt);
    if (assd.defined()) {
        add(metric::assd_mm, *assd.value);
    } else if (cfg.assd_policy == AssdPolicy::max_penalty) {
        add(metric::assd_mm, assd.empty == EmptySide::both ? 0.0 : physical_diagonal(gt.dims(), gt.spacing()));
    } else {
        exclude(metric::assd_mm, std::string("empty mask (") + (assd.empty == EmptySide::first    ? "prediction"
                                                                : assd.empty == EmptySide::second ? "ground truth"
                                                                                                  : "both") + ")");
    }

    if (!is_cartilage(tissue) || !gt_thickness) return;
    auto th = mean_thickness_mm(pred);
    add(metric::thickness_mm, th.mean_thickness_mm);
    add(metric::gt_thickness_mm, gt_thickness->mean_thickness_mm);
    if (th.empty_mask || gt_thickness->empty_mask) {
        const std::string why = th.empty_mask ? "empty predicted mask" : "empty ground truth mask";
        exclude(metric::thickness_diff_mm, why);
        exclude(metric::thickness_error_mm, why);
        return;
    }
    const double diff = th.mean_thickness_mm - gt_thickness->mean_thickness_mm;
    add(metric::thickness_diff_mm, diff);
    add(metric::thickness_error_mm, std::abs(diff));
}

inline ScanOutput evaluate_scan(const RunConfig& cfg, const DatasetManifest& manifest, const ScanRecord& rec,
                                const std::vector<std::string>& models) {
    ScanOutput out;
    const auto scan = load_scan(rec, models_to_load(cfg, manifest), manifest.through_plane_axis);
    std::vector<std::pair<std::string, const EnsembleSpec*>> evaluated;
    for (const auto& m : models) evaluated.emplace_back(m, nullptr);
    for (const auto& e : cfg.ensembles) evaluated.emplace_back(e.name(), &e);

    if (!scan.gt) {
        for (const auto& [name, spec] : evaluated)
            out.exclusions.push_back({name, rec.subject_id, rec.timepoint, std::nullopt, "", scan.gt_error});
        return out;
    }
    for (Tissue tissue : kAllTissues) {
        const auto gt = extract_mask(*scan.gt, tissue);
        std::optional<ThicknessResult> gt_thickness;
        if (is_cartilage(tissue)) gt_thickness = mean_thickness_mm(gt);
        for (const auto& [name, spec] : evaluated) {
            auto pm = model_mask(scan, name, tissue, spec);
            if (!pm.mask) {
                // Whole-scan failures are listed once, without a tissue.
                if (tissue == kAllTissues.front())
                    out.exclusions.push_back({name, rec.subject_id, rec.timepoint, std::nullopt, "", pm.error});
                continue;
            }
            evaluate_tissue(cfg, rec, name, *pm.mask, gt, gt_thickness, out);
        }
    }
    return out;
}

} // namespace detail

inline MetricTable run_evaluate(const RunConfig& cfg, const DatasetManifest& manifest) {
    RunConfig bound = cfg;
    bound.bind(manifest);
    const auto models = bound.resolve_models(manifest);
    const auto scans = manifest.select(bound.splits);
    auto outputs = ordered_parallel_map(scans.size(), bound.effective_jobs(), [&](std::size_t i) {
        return detail::evaluate_scan(bound, manifest, *scans[i], models);
    });
    MetricTable table;
    for (auto& o : outputs) {
        table.records.insert(table.records.end(), o.records.begin(), o.records.end());
        table.exclusions.insert(table.exclusions.end(), o.exclusions.begin(), o.exclusions.end());
    }
    for (const auto& e : bound.ensembles) {
        table.ensemble_models.insert(e.name());
        if (e.is_oracle()) table.oracle_models.insert(e.name());
    }
    table.sort();
    table.check_unique();
    return table;
}

// ---------------------------------------------------------------------------
// Dice correlation between models

struct CorrelationRun {
    std::vector<DiceCorrelationMatrix> matrices;
    std::vector<Exclusion> exclusions;
};

inline CorrelationRun run_correlate(const RunConfig& cfg, const DatasetManifest& manifest) {
    RunConfig bound = cfg;
    bound.bind(manifest);
    const auto models = bound.resolve_models(manifest);
    const auto scans = manifest.select(bound.splits);
    struct PerScan {
        std::optional<std::string> error;
        std::vector<std::vector<std::vector<double>>> pairwise; // tissue -> i -> j
    };
    auto results = ordered_parallel_map(scans.size(), bound.effective_jobs(), [&](std::size_t si) {
        PerScan r;
        const auto scan = load_scan(*scans[si], models, manifest.through_plane_axis);
        if (!scan.gt) {
            r.error = scan.gt_error;
            return r;
        }
        for (const auto& m : models)
            if (auto e = scan.prediction_errors.find(m); e != scan.prediction_errors.end()) {
                r.error = "model '" + m + "': " + e->second;
                return r;
            }
        for (Tissue t : kAllTissues) {
            std::vector<BinaryMask> masks;
            for (const auto& m : models) masks.push_back(extract_mask(scan.predictions.at(m), t));
            r.pairwise.push_back(DiceCorrelationAccumulator::pairwise(masks));
        }
        return r;
    });
    CorrelationRun out;
    std::vector<DiceCorrelationAccumulator> acc;
    for (Tissue t : kAllTissues) acc.emplace_back(models, t);
    for (std::size_t si = 0; si < scans.size(); ++si) {
        if (results[si].error) {
            out.exclusions.push_back({"*", scans[si]->subject_id, scans[si]->timepoint, std::nullopt, "dice_correlation",
                                      *results[si].error});
            continue;
        }
        for (std::size_t t = 0; t < acc.size(); ++t) acc[t].add_pairwise(results[si].pairwise[t]);
    }
    for (auto& a : acc) out.matrices.push_back(a.result());
    return out;
}

// ---------------------------------------------------------------------------
// Depth profiles

struct DroidRun {
    std::vector<DepthProfile> profiles; // model-major, tissue-minor
    std::vector<Exclusion> exclusions;
};

inline DroidRun run_droid(const RunConfig& cfg, const DatasetManifest& manifest) {
    RunConfig bound = cfg;
    bound.bind(manifest);
    const auto models = bound.resolve_models(manifest);
    std::vector<std::pair<std::string, const EnsembleSpec*>> evaluated;
    for (const auto& m : models) evaluated.emplace_back(m, nullptr);
    for (const auto& e : bound.ensembles) evaluated.emplace_back(e.name(), &e);
    const auto scans = manifest.select(bound.splits);
    const Axis axis = manifest.through_plane_axis;

    struct Cell {
        std::optional<std::string> error;
        std::vector<SliceSample> samples;
    };
    // scan -> model -> tissue
    auto results = ordered_parallel_map(scans.size(), bound.effective_jobs(), [&](std::size_t si) {
        std::vector<std::vector<Cell>> r(evaluated.size(), std::vector<Cell>(kAllTissues.size()));
        const auto scan = load_scan(*scans[si], models_to_load(bound, manifest), axis);
        for (std::size_t t = 0; t < kAllTissues.size(); ++t) {
            const Tissue tissue = kAllTissues[t];
            std::optional<BinaryMask> gt;
            if (scan.gt) gt = extract_mask(*scan.gt, tissue);
            for (std::size_t m = 0; m < evaluated.size(); ++m) {
                auto pm = model_mask(scan, evaluated[m].first, tissue, evaluated[m].second);
                if (!pm.mask) {
                    r[m][t].error = pm.error;
                    continue;
                }
                r[m][t].samples = slice_samples(*pm.mask, *gt, axis);
                if (r[m][t].samples.empty()) r[m][t].error = "empty ground truth";
            }
        }
        return r;
    });

    DroidRun out;
    for (std::size_t m = 0; m < evaluated.size(); ++m)
        for (std::size_t t = 0; t < kAllTissues.size(); ++t) {
            DepthProfile p;
            p.model = evaluated[m].first;
            p.tissue = kAllTissues[t];
            p.axis = axis;
            std::vector<SliceSample> pooled;
            for (std::size_t si = 0; si < scans.size(); ++si) {
                const auto& cell = results[si][m][t];
                if (cell.error) {
                    ++p.scans_skipped;
                    out.exclusions.push_back({p.model, scans[si]->subject_id, scans[si]->timepoint, p.tissue, "droid",
                                              *cell.error});
                    continue;
                }
                ++p.scans_used;
                pooled.insert(pooled.end(), cell.samples.begin(), cell.samples.end());
            }
            p.bins = bin_samples(pooled, bound.droid_bins);
            out.profiles.push_back(std::move(p));
        }
    return out;
}

// ---------------------------------------------------------------------------
// Ensemble label maps

struct EnsembleScanResult {
    std::string subject_id;
    Timepoint timepoint = Timepoint::baseline;
    std::optional<std::string> error;
    std::size_t conflicts = 0;
    std::filesystem::path written;
};

/// Builds the ensemble's label map for every selected scan and writes it under out_dir.
inline std::vector<EnsembleScanResult> run_ensemble_maps(const RunConfig& cfg, const DatasetManifest& manifest,
                                                         const EnsembleSpec& spec, const std::filesystem::path& out_dir) {
    RunConfig bound = cfg;
    bound.ensembles = {spec};
    bound.bind(manifest);
    const auto& e = bound.ensembles.front();
    const auto scans = manifest.select(bound.splits);
    return ordered_parallel_map(scans.size(), bound.effective_jobs(), [&](std::size_t si) {
        const auto& rec = *scans[si];
        EnsembleScanResult r{rec.subject_id, rec.timepoint, std::nullopt, 0, {}};
        const auto scan = load_scan(rec, e.members, manifest.through_plane_axis);
        if (!scan.gt && e.needs_ground_truth()) {
            r.error = scan.gt_error;
            return r;
        }
        std::vector<LabelVolume> members;
        for (const auto& m : e.members) {
            if (auto err = scan.prediction_errors.find(m); err != scan.prediction_errors.end()) {
                r.error = "member '" + m + "': " + err->second;
                return r;
            }
            members.push_back(scan.predictions.at(m));
        }
        const auto built = build_label_ensemble(e, members, scan.gt ? &*scan.gt : nullptr);
        r.conflicts = built.conflicts;
        r.written = out_dir / (rec.subject_id + "_" + std::string(to_string(rec.timepoint)) + ".segv");
        save_volume(r.written, built.labels);
        return r;
    });
}

} // namespace segeval::report
