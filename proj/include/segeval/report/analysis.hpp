#pragma once

// Analyses over a finished MetricTable: summary statistics, model comparison, thickness agreement.

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "../manifest.hpp"
#include "../stats.hpp"
#include "../thickness.hpp"
#include "table.hpp"

namespace segeval::report {

// ---------------------------------------------------------------------------
// Aggregation

enum class GroupBy { model_tissue, tissue };

inline std::string_view to_string(GroupBy g) { return g == GroupBy::model_tissue ? "model,tissue" : "tissue"; }

inline GroupBy parse_group_by(std::string_view s) {
    if (s == "model,tissue" || s == "model" || s == "tissue,model") return GroupBy::model_tissue;
    if (s == "tissue") return GroupBy::tissue;
    throw ValidationError("unknown grouping '" + std::string(s) + "' (expected model,tissue or tissue)");
}

struct SummaryCell {
    /// Empty when grouped by tissue only.
    std::string model;
    Tissue tissue = Tissue::femoral_cartilage;
    std::optional<int> kl_grade;
    std::string metric;
    std::size_t n = 0;
    double mean = 0.0;
    /// n-1 denominator; 0 for a single value.
    double sd = 0.0;
    /// Root mean square of the values; the table value for cv.
    double rms = 0.0;
    bool best = false;

    double value() const { return metric == metric::cv ? rms : mean; }
};

struct Summary {
    GroupBy group_by = GroupBy::model_tissue;
    bool stratified = false;
    std::vector<SummaryCell> cells;
};

namespace detail {

inline SummaryCell summarize(std::vector<double> values) {
    SummaryCell c;
    c.n = values.size();
    double sum = 0.0, sq = 0.0;
    for (double v : values) {
        sum += v;
        sq += v * v;
    }
    const double n = static_cast<double>(c.n);
    c.mean = sum / n;
    c.rms = std::sqrt(sq / n);
    if (c.n > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - c.mean) * (v - c.mean);
        c.sd = std::sqrt(ss / (n - 1.0));
    }
    return c;
}

} // namespace detail

/// Cells in (model, tissue, kl_grade, metric) order. Values are taken in table order, which is sorted
/// by subject then timepoint, so the same CSV always gives the same numbers.
inline Summary run_aggregate(const MetricTable& table, GroupBy group_by = GroupBy::model_tissue,
                             const DatasetManifest* stratify_by_kl = nullptr) {
    if (table.records.empty()) throw ValidationError("aggregate: metric table is empty");
    using Key = std::tuple<std::string, Tissue, std::optional<int>, std::string>;
    std::map<Key, std::vector<double>> groups;
    for (const auto& r : table.records) {
        std::optional<int> kl;
        if (stratify_by_kl) {
            const auto* scan = stratify_by_kl->find(r.subject_id, r.timepoint);
            if (!scan || !scan->kl_grade)
                throw ValidationError("aggregate: KL-grade stratification needs kl_grade for " + r.subject_id + "/" +
                                      std::string(to_string(r.timepoint)));
            kl = scan->kl_grade;
        }
        if (group_by == GroupBy::tissue && table.oracle_models.count(r.model)) continue;
        groups[{group_by == GroupBy::model_tissue ? r.model : "", r.tissue, kl, r.metric}].push_back(r.value);
    }
    Summary s{group_by, stratify_by_kl != nullptr, {}};
    for (auto& [key, values] : groups) {
        auto c = detail::summarize(std::move(values));
        std::tie(c.model, c.tissue, c.kl_grade, c.metric) = key;
        s.cells.push_back(std::move(c));
    }
    if (group_by != GroupBy::model_tissue) return s;

    // Best submitted model per tissue x metric (x stratum); ensembles never compete.
    std::map<std::tuple<Tissue, std::optional<int>, std::string>, double> best;
    for (const auto& c : s.cells) {
        if (!metric::is_headline(c.metric) || table.ensemble_models.count(c.model)) continue;
        const auto k = std::make_tuple(c.tissue, c.kl_grade, c.metric);
        auto it = best.find(k);
        const double v = c.value();
        if (it == best.end())
            best.emplace(k, v);
        else if (metric::higher_is_better(c.metric) ? v > it->second : v < it->second)
            it->second = v;
    }
    for (auto& c : s.cells) {
        if (!metric::is_headline(c.metric) || table.ensemble_models.count(c.model)) continue;
        c.best = c.value() == best.at({c.tissue, c.kl_grade, c.metric});
    }
    return s;
}

inline nlohmann::ordered_json to_json(const Summary& s) {
    nlohmann::ordered_json j;
    j["group_by"] = to_string(s.group_by);
    j["stratified_by"] = s.stratified ? nlohmann::ordered_json("kl_grade") : nlohmann::ordered_json(nullptr);
    auto& cells = j["cells"] = nlohmann::ordered_json::array();
    for (const auto& c : s.cells) {
        nlohmann::ordered_json e;
        if (s.group_by == GroupBy::model_tissue) e["model"] = c.model;
        e["tissue"] = tissue_name(c.tissue);
        if (s.stratified) e["kl_grade"] = *c.kl_grade;
        e["metric"] = c.metric;
        e["n"] = c.n;
        e["mean"] = c.mean;
        e["sd"] = c.sd;
        if (c.metric == metric::cv) e["rms"] = c.rms;
        e["value"] = c.value();
        if (s.group_by == GroupBy::model_tissue && metric::is_headline(c.metric)) e["best"] = c.best;
        cells.push_back(std::move(e));
    }
    return j;
}

// ---------------------------------------------------------------------------
// Model comparison

inline constexpr double kSignificanceAlpha = 0.05;

struct Comparison {
    std::string metric;
    Tissue tissue = Tissue::femoral_cartilage;
    std::vector<std::string> models;
    /// Models that had no values for this metric and tissue.
    std::vector<std::string> dropped;
    stats::KWResult kw;
    stats::DunnResult dunn;
};

/// Per-model vectors of per-scan values. Oracle ensembles are diagnostic bounds and are left out.
inline Comparison run_compare(const MetricTable& table, std::string_view metric_name, Tissue tissue) {
    Comparison c;
    c.metric = std::string(metric_name);
    c.tissue = tissue;
    std::vector<std::vector<double>> groups;
    for (const auto& model : table.models()) {
        if (table.oracle_models.count(model)) continue;
        std::vector<double> g;
        for (const auto* r : table.select(metric_name, tissue, model)) g.push_back(r->value);
        if (g.empty()) {
            c.dropped.push_back(model);
            continue;
        }
        c.models.push_back(model);
        groups.push_back(std::move(g));
    }
    if (groups.size() < 2)
        throw ValidationError("compare: fewer than 2 models have " + c.metric + " values for " +
                              std::string(tissue_name(tissue)));
    c.kw = stats::kruskal_wallis(groups);
    c.dunn = stats::dunn_posthoc(groups);
    return c;
}

inline nlohmann::ordered_json to_json(const Comparison& c) {
    nlohmann::ordered_json j;
    j["metric"] = c.metric;
    j["tissue"] = tissue_name(c.tissue);
    j["models"] = c.models;
    j["dropped_models"] = c.dropped;
    j["kruskal_wallis"] = {{"H", c.kw.H},
                           {"df", c.kw.df},
                           {"p", c.kw.p},
                           {"group_sizes", c.kw.group_sizes},
                           {"degenerate", c.kw.degenerate},
                           {"significant", c.kw.p < kSignificanceAlpha}};
    auto& pairs = j["dunn"] = nlohmann::ordered_json::array();
    for (const auto& p : c.dunn.pairs)
        pairs.push_back({{"a", c.models[p.i]},
                         {"b", c.models[p.j]},
                         {"z", p.z},
                         {"p_raw", p.p_raw},
                         {"p_adjusted", p.p_adjusted},
                         {"significant", p.p_adjusted < kSignificanceAlpha}});
    j["bonferroni_factor"] = c.dunn.comparisons;
    return j;
}

// ---------------------------------------------------------------------------
// Thickness agreement

struct ModelAgreement {
    std::string model;
    std::optional<BlandAltman> per_scan;
    std::string per_scan_note;
    std::optional<BlandAltman> longitudinal;
    std::string longitudinal_note;
    /// (Δpred - Δgt) per subject, in subject order.
    std::vector<std::pair<std::string, double>> change_differences;
    std::vector<std::string> skipped_subjects;
};

struct MetricCorrelation {
    std::string metric;
    std::optional<stats::PearsonResult> result;
    std::string note;
};

struct ThicknessAgreement {
    Tissue tissue = Tissue::femoral_cartilage;
    std::vector<ModelAgreement> models;
    std::vector<MetricCorrelation> correlations;
};

namespace detail {

using ScanKey = std::pair<std::string, Timepoint>;

inline std::map<ScanKey, double> values_by_scan(const MetricTable& t, std::string_view metric, Tissue tissue,
                                                std::string_view model) {
    std::map<ScanKey, double> out;
    for (const auto* r : t.select(metric, tissue, model)) out[{r->subject_id, r->timepoint}] = r->value;
    return out;
}

inline std::optional<BlandAltman> try_bland_altman(const std::vector<double>& d, std::string& note) {
    if (d.size() < 2) {
        note = "fewer than 2 differences";
        return std::nullopt;
    }
    return bland_altman(d);
}

} // namespace detail

inline ThicknessAgreement run_thickness_agreement(const MetricTable& table, Tissue tissue) {
    if (!is_cartilage(tissue)) throw ValidationError("thickness agreement is defined for cartilage tissues only");
    ThicknessAgreement out;
    out.tissue = tissue;
    for (const auto& model : table.models()) {
        if (table.oracle_models.count(model)) continue;
        ModelAgreement a;
        a.model = model;
        std::vector<double> diffs;
        for (const auto* r : table.select(metric::thickness_diff_mm, tissue, model)) diffs.push_back(r->value);
        if (diffs.empty() && table.select(metric::thickness_mm, tissue, model).empty()) continue;
        a.per_scan = detail::try_bland_altman(diffs, a.per_scan_note);

        const auto pred = detail::values_by_scan(table, metric::thickness_mm, tissue, model);
        const auto gt = detail::values_by_scan(table, metric::gt_thickness_mm, tissue, model);
        const auto usable = detail::values_by_scan(table, metric::thickness_diff_mm, tissue, model);
        std::set<std::string> subjects;
        for (const auto& [k, v] : pred) subjects.insert(k.first);
        for (const auto& subject : subjects) {
            const detail::ScanKey k0{subject, Timepoint::baseline}, k1{subject, Timepoint::year1};
            if (!usable.count(k0) || !usable.count(k1)) {
                a.skipped_subjects.push_back(subject);
                continue;
            }
            auto result = [&](const std::map<detail::ScanKey, double>& m, const detail::ScanKey& k) {
                ThicknessResult r;
                r.model = model;
                r.subject_id = subject;
                r.timepoint = k.second;
                r.tissue = tissue;
                r.mean_thickness_mm = m.at(k);
                return r;
            };
            const double dp = longitudinal_change_mm(result(pred, k0), result(pred, k1));
            const double dg = longitudinal_change_mm(result(gt, k0), result(gt, k1));
            a.change_differences.emplace_back(subject, dp - dg);
        }
        std::vector<double> changes;
        for (const auto& [s, d] : a.change_differences) changes.push_back(d);
        a.longitudinal = detail::try_bland_altman(changes, a.longitudinal_note);
        out.models.push_back(std::move(a));
    }

    // Pixel-wise metrics against thickness error, pooled over (model, scan).
    for (auto m : metric::pixelwise) {
        MetricCorrelation c;
        c.metric = std::string(m);
        std::vector<double> x, y;
        for (const auto& model : table.models()) {
            if (table.oracle_models.count(model)) continue;
            const auto err = detail::values_by_scan(table, metric::thickness_error_mm, tissue, model);
            const auto pix = detail::values_by_scan(table, m, tissue, model);
            for (const auto& [k, e] : err)
                if (auto it = pix.find(k); it != pix.end()) {
                    x.push_back(it->second);
                    y.push_back(e);
                }
        }
        try {
            c.result = stats::pearson(x, y);
        } catch (const ValidationError& e) {
            c.note = e.what();
        }
        out.correlations.push_back(std::move(c));
    }
    return out;
}

inline nlohmann::ordered_json to_json(const BlandAltman& b) {
    return {{"bias", b.bias}, {"sd", b.sd}, {"loa_low", b.loa_low}, {"loa_high", b.loa_high}, {"n", b.n}};
}

inline nlohmann::ordered_json to_json(const ThicknessAgreement& a) {
    nlohmann::ordered_json j;
    j["tissue"] = tissue_name(a.tissue);
    auto& models = j["models"] = nlohmann::ordered_json::array();
    for (const auto& m : a.models) {
        nlohmann::ordered_json e;
        e["model"] = m.model;
        e["per_scan"] = m.per_scan ? to_json(*m.per_scan) : nlohmann::ordered_json(nullptr);
        if (!m.per_scan) e["per_scan_reason"] = m.per_scan_note;
        e["longitudinal"] = m.longitudinal ? to_json(*m.longitudinal) : nlohmann::ordered_json(nullptr);
        if (!m.longitudinal) e["longitudinal_reason"] = m.longitudinal_note;
        auto& ch = e["change_differences_mm"] = nlohmann::ordered_json::object();
        for (const auto& [s, d] : m.change_differences) ch[s] = d;
        e["skipped_subjects"] = m.skipped_subjects;
        models.push_back(std::move(e));
    }
    auto& corr = j["thickness_error_correlation"] = nlohmann::ordered_json::object();
    for (const auto& c : a.correlations) {
        if (c.result)
            corr[c.metric] = {{"r", c.result->r}, {"n", c.result->n}, {"strength", stats::to_string(c.result->strength)}};
        else
            corr[c.metric] = {{"r", nullptr}, {"reason", c.note}};
    }
    return j;
}

} // namespace segeval::report
