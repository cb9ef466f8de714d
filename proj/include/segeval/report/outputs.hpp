#pragma once

// File writers for every report artifact. Each returns the text it wrote so tests can compare
// against goldens without touching disk.

#include <chrono>
#include <ctime>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "analysis.hpp"
#include "config.hpp"
#include "format.hpp"
#include "pipeline.hpp"
#include "svg.hpp"
#include "table.hpp"

namespace segeval::report {

namespace fs = std::filesystem;

inline nlohmann::ordered_json run_metadata(const RunConfig& cfg, const std::string& manifest_hash) {
    nlohmann::ordered_json j;
    j["tool_version"] = kToolVersion;
    j["manifest_hash"] = manifest_hash.empty() ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(manifest_hash);
    j["config"] = to_json(cfg);
    if (cfg.timestamp) {
        const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&now, &tm);
        char buf[32];
        std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
        j["timestamp"] = buf;
    }
    return j;
}

inline std::string dump(const nlohmann::ordered_json& j) { return j.dump(2) + "\n"; }

inline std::string write_metrics(const fs::path& dir, const MetricTable& t) {
    auto text = to_csv(t);
    write_text(dir / "metrics.csv", text);
    return text;
}

inline std::string write_exclusions(const fs::path& dir, const std::vector<Exclusion>& ex,
                                    const nlohmann::ordered_json& run) {
    nlohmann::ordered_json j;
    j["run"] = run;
    auto& list = j["exclusions"] = nlohmann::ordered_json::array();
    for (const auto& e : ex) list.push_back(to_json(e));
    auto text = dump(j);
    write_text(dir / "exclusions.json", text);
    return text;
}

inline std::string write_summary(const fs::path& dir, const Summary& s, const nlohmann::ordered_json& run) {
    nlohmann::ordered_json j;
    j["run"] = run;
    j["summary"] = to_json(s);
    auto text = dump(j);
    write_text(dir / "summary.json", text);
    return text;
}

/// Every headline metric x tissue that has at least two comparable models.
inline std::vector<nlohmann::ordered_json> compare_all(const MetricTable& t) {
    std::vector<nlohmann::ordered_json> out;
    for (auto m : metric::headline)
        for (Tissue tissue : kAllTissues) {
            if (m == metric::thickness_error_mm && !is_cartilage(tissue)) continue;
            try {
                out.push_back(to_json(run_compare(t, m, tissue)));
            } catch (const ValidationError& e) {
                out.push_back({{"metric", m}, {"tissue", tissue_name(tissue)}, {"error", e.what()}});
            }
        }
    return out;
}

inline std::string write_stats(const fs::path& dir, const std::vector<nlohmann::ordered_json>& comparisons,
                               const nlohmann::ordered_json& run) {
    nlohmann::ordered_json j;
    j["run"] = run;
    j["alpha"] = kSignificanceAlpha;
    j["comparisons"] = comparisons;
    auto text = dump(j);
    write_text(dir / "stats.json", text);
    return text;
}

inline std::string write_bland_altman(const fs::path& dir, const std::vector<ThicknessAgreement>& a,
                                      const nlohmann::ordered_json& run) {
    nlohmann::ordered_json j;
    j["run"] = run;
    auto& list = j["tissues"] = nlohmann::ordered_json::array();
    for (const auto& x : a) list.push_back(to_json(x));
    auto text = dump(j);
    write_text(dir / "bland_altman.json", text);
    return text;
}

inline std::string correlation_csv(const DiceCorrelationMatrix& m) {
    std::string s = "model";
    for (const auto& name : m.models) s += "," + csv_escape(name);
    s += '\n';
    for (std::size_t i = 0; i < m.models.size(); ++i) {
        s += csv_escape(m.models[i]);
        for (std::size_t j = 0; j < m.models.size(); ++j) s += "," + format_double(m.values[i][j]);
        s += '\n';
    }
    return s;
}

inline void write_correlations(const fs::path& dir, const std::vector<DiceCorrelationMatrix>& ms) {
    for (const auto& m : ms)
        write_text(dir / ("dice_correlation_" + std::string(tissue_name(m.tissue)) + ".csv"), correlation_csv(m));
}

inline std::string droid_csv(const std::vector<DepthProfile>& profiles, Tissue tissue) {
    std::string s = "model,bin_low,bin_high,mean_dice,n\n";
    for (const auto& p : profiles) {
        if (p.tissue != tissue) continue;
        for (const auto& b : p.bins)
            s += csv_escape(p.model) + ',' + format_double(b.low) + ',' + format_double(b.high) + ',' +
                 (b.mean_dice ? format_double(*b.mean_dice) : "") + ',' + std::to_string(b.n) + '\n';
    }
    return s;
}

inline std::string droid_svg(const std::vector<DepthProfile>& profiles, Tissue tissue) {
    std::vector<Series> series;
    for (const auto& p : profiles) {
        if (p.tissue != tissue) continue;
        Series s{p.model, {}};
        for (const auto& b : p.bins) s.points.emplace_back((b.low + b.high) / 2.0, b.mean_dice);
        series.push_back(std::move(s));
    }
    ChartSpec spec{"Slice-wise Dice by depth: " + std::string(tissue_name(tissue)), "position in ground truth extent (%)",
                   "mean slice Dice"};
    return line_chart_svg(spec, series);
}

inline void write_droid(const fs::path& dir, const std::vector<DepthProfile>& profiles) {
    for (Tissue t : kAllTissues) {
        const std::string name(tissue_name(t));
        write_text(dir / ("droid_" + name + ".csv"), droid_csv(profiles, t));
        write_text(dir / ("droid_" + name + ".svg"), droid_svg(profiles, t));
    }
}

inline std::string write_ensemble_report(const fs::path& dir, const EnsembleSpec& spec,
                                         const std::vector<EnsembleScanResult>& results,
                                         const nlohmann::ordered_json& run) {
    nlohmann::ordered_json j;
    j["run"] = run;
    j["ensemble"] = {{"name", spec.name()}, {"spec", spec.to_string()}, {"members", spec.members},
                     {"diagnostic_bound", spec.is_oracle()}};
    auto& scans = j["scans"] = nlohmann::ordered_json::array();
    std::size_t total = 0;
    for (const auto& r : results) {
        nlohmann::ordered_json e{{"subject_id", r.subject_id}, {"timepoint", to_string(r.timepoint)}};
        if (r.error) {
            e["error"] = *r.error;
        } else {
            e["conflicts"] = r.conflicts;
            e["label_map"] = r.written.filename().string();
            total += r.conflicts;
        }
        scans.push_back(std::move(e));
    }
    j["total_conflicts"] = total;
    auto text = dump(j);
    write_text(dir / "ensemble.json", text);
    return text;
}

} // namespace segeval::report
