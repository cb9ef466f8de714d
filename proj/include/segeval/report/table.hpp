#pragma once

// Long-format metric table: one record per (model, scan, tissue, metric).

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "../error.hpp"
#include "../manifest.hpp"
#include "../scan_types.hpp"
#include "../volume.hpp"
#include "format.hpp"

namespace segeval::report {

namespace metric {
inline constexpr std::string_view dice = "dice";
inline constexpr std::string_view voe = "voe";
inline constexpr std::string_view cv = "cv";
inline constexpr std::string_view assd_mm = "assd_mm";
inline constexpr std::string_view volume_mm3 = "volume_mm3";
inline constexpr std::string_view gt_volume_mm3 = "gt_volume_mm3";
inline constexpr std::string_view thickness_mm = "thickness_mm";
inline constexpr std::string_view gt_thickness_mm = "gt_thickness_mm";
inline constexpr std::string_view thickness_diff_mm = "thickness_diff_mm";
inline constexpr std::string_view thickness_error_mm = "thickness_error_mm";

/// Metrics of the headline performance table, with their direction.
inline constexpr std::string_view headline[] = {dice, voe, cv, assd_mm, thickness_error_mm};
inline constexpr std::string_view pixelwise[] = {dice, voe, cv, assd_mm};

inline bool higher_is_better(std::string_view m) { return m == dice; }
inline bool is_headline(std::string_view m) {
    return std::find(std::begin(headline), std::end(headline), m) != std::end(headline);
}
} // namespace metric

struct MetricRecord {
    std::string model;
    std::string subject_id;
    Timepoint timepoint = Timepoint::baseline;
    Tissue tissue = Tissue::femoral_cartilage;
    std::string metric;
    double value = 0.0;

    auto key() const { return std::tie(model, subject_id, timepoint, tissue, metric); }
};

/// A (model, scan[, tissue[, metric]]) cell that produced no record, and why.
struct Exclusion {
    std::string model;
    std::string subject_id;
    Timepoint timepoint = Timepoint::baseline;
    std::optional<Tissue> tissue;
    std::string metric;
    std::string reason;

    auto key() const { return std::tie(model, subject_id, timepoint, tissue, metric, reason); }
};

struct MetricTable {
    std::vector<MetricRecord> records;
    std::vector<Exclusion> exclusions;
    /// Models that are ensembles (vote or oracle); never ranked as submissions.
    std::set<std::string> ensemble_models;
    /// Oracle ensembles; additionally left out of statistical comparisons.
    std::set<std::string> oracle_models;

    void sort() {
        std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) { return a.key() < b.key(); });
        std::sort(exclusions.begin(), exclusions.end(), [](const auto& a, const auto& b) { return a.key() < b.key(); });
    }

    /// Throws if any (model, scan, tissue, metric) appears twice. Expects a sorted table.
    void check_unique() const {
        for (std::size_t i = 1; i < records.size(); ++i)
            if (records[i - 1].key() == records[i].key())
                throw Error("duplicate metric record for " + records[i].model + " " + records[i].subject_id + " " +
                            std::string(records[i].metric));
    }

    std::vector<std::string> models() const {
        std::set<std::string> s;
        for (const auto& r : records) s.insert(r.model);
        return {s.begin(), s.end()};
    }

    std::vector<const MetricRecord*> select(std::string_view metric, std::optional<Tissue> tissue = {},
                                            std::optional<std::string_view> model = {}) const {
        std::vector<const MetricRecord*> out;
        for (const auto& r : records)
            if (r.metric == metric && (!tissue || r.tissue == *tissue) && (!model || r.model == *model))
                out.push_back(&r);
        return out;
    }
};

inline constexpr std::string_view kMetricsCsvHeader = "model,subject_id,timepoint,tissue,metric,value";

inline std::string to_csv(const MetricTable& t) {
    std::string out(kMetricsCsvHeader);
    out += '\n';
    for (const auto& r : t.records) {
        out += csv_escape(r.model) + ',' + csv_escape(r.subject_id) + ',' + std::string(to_string(r.timepoint)) + ',' +
               std::string(tissue_name(r.tissue)) + ',' + r.metric + ',' + format_double(r.value) + '\n';
    }
    return out;
}

inline MetricTable parse_metrics_csv(std::string_view text) {
    MetricTable t;
    std::istringstream in{std::string(text)};
    std::string line;
    bool header = true;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (header) {
            if (line != kMetricsCsvHeader) throw ValidationError("metrics CSV has unexpected header '" + line + "'");
            header = false;
            continue;
        }
        ++row;
        const auto f = segeval::detail::split_csv_line(line);
        if (f.size() != 6) throw ValidationError("metrics CSV row " + std::to_string(row) + ": expected 6 fields");
        t.records.push_back({f[0], f[1], parse_timepoint(f[2]), parse_tissue(f[3]), f[4], parse_double(f[5])});
        if (f[0].rfind("E_", 0) == 0) {
            t.ensemble_models.insert(f[0]);
            if (f[0].rfind("E_oracle", 0) == 0) t.oracle_models.insert(f[0]);
        }
    }
    return t;
}

inline nlohmann::ordered_json to_json(const Exclusion& e) {
    nlohmann::ordered_json j;
    j["model"] = e.model;
    j["subject_id"] = e.subject_id;
    j["timepoint"] = to_string(e.timepoint);
    j["tissue"] = e.tissue ? nlohmann::ordered_json(tissue_name(*e.tissue)) : nlohmann::ordered_json(nullptr);
    j["metric"] = e.metric.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(e.metric);
    j["reason"] = e.reason;
    return j;
}

} // namespace segeval::report
