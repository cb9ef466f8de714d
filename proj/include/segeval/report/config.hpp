#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "../droid.hpp"
#include "../ensemble.hpp"
#include "../error.hpp"
#include "../manifest.hpp"
#include "../overlap.hpp"

namespace segeval::report {

inline constexpr std::string_view kToolVersion = "1.0.0";

enum class AssdPolicy {
    /// Undefined ASSD (an empty mask) is left out and listed in the exclusions.
    exclude,
    /// Undefined ASSD scores the volume's physical diagonal; two empty masks score 0.
    max_penalty,
};

struct RunConfig {
    std::filesystem::path manifest;
    /// Empty means every model in the manifest.
    std::vector<std::string> models;
    std::vector<EnsembleSpec> ensembles;
    /// Empty means every split.
    std::set<Split> splits;
    std::size_t droid_bins = kDefaultDepthBins;
    CvVariant cv_variant = CvVariant::sample;
    AssdPolicy assd_policy = AssdPolicy::exclude;
    std::filesystem::path out_dir = "out";
    std::size_t jobs = 0;
    /// Adds a wall-clock timestamp to run metadata; off so reruns are byte-identical.
    bool timestamp = false;

    std::size_t effective_jobs() const {
        if (jobs > 0) return jobs;
        return std::max<std::size_t>(1, std::thread::hardware_concurrency());
    }

    /// Models to evaluate, in manifest order, after checking they exist.
    std::vector<std::string> resolve_models(const DatasetManifest& m) const {
        if (models.empty()) return m.models;
        for (const auto& name : models)
            if (!m.has_model(name)) throw ValidationError("model '" + name + "' is not a prediction column of the manifest");
        return models;
    }

    /// Checks references against the manifest and fills empty ensemble member lists.
    void bind(const DatasetManifest& m) {
        const auto evaluated = resolve_models(m);
        for (auto& e : ensembles) {
            if (e.members.empty()) e.members = evaluated;
            for (const auto& name : e.members)
                if (!m.has_model(name))
                    throw ValidationError("ensemble " + e.to_string() + " member '" + name + "' is not in the manifest");
            e.validate();
        }
    }
};

inline std::string_view to_string(AssdPolicy p) { return p == AssdPolicy::exclude ? "exclude" : "max_penalty"; }
inline std::string_view to_string(CvVariant v) { return v == CvVariant::sample ? "sample" : "population"; }

inline AssdPolicy parse_assd_policy(std::string_view s) {
    if (s == "exclude") return AssdPolicy::exclude;
    if (s == "max_penalty" || s == "max-penalty") return AssdPolicy::max_penalty;
    throw ValidationError("unknown ASSD policy '" + std::string(s) + "' (expected exclude or max_penalty)");
}

inline CvVariant parse_cv_variant(std::string_view s) {
    if (s == "sample") return CvVariant::sample;
    if (s == "population") return CvVariant::population;
    throw ValidationError("unknown CV variant '" + std::string(s) + "' (expected sample or population)");
}

/// Configuration echo written into run metadata. Paths are excluded so outputs do not depend
/// on where the dataset lives.
inline nlohmann::ordered_json to_json(const RunConfig& c) {
    nlohmann::ordered_json j;
    j["models"] = c.models;
    auto& ens = j["ensembles"] = nlohmann::ordered_json::array();
    for (const auto& e : c.ensembles) ens.push_back({{"spec", e.to_string()}, {"members", e.members}});
    auto& splits = j["splits"] = nlohmann::ordered_json::array();
    for (auto s : c.splits) splits.push_back(to_string(s));
    j["droid_bins"] = c.droid_bins;
    j["cv_variant"] = to_string(c.cv_variant);
    j["assd_policy"] = to_string(c.assd_policy);
    return j;
}

/// Reads a JSON RunConfig. Keys mirror the echo plus manifest, out_dir, jobs, timestamp.
inline RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base = {}) {
    RunConfig c;
    try {
        if (j.contains("manifest")) {
            c.manifest = j["manifest"].get<std::string>();
            if (c.manifest.is_relative() && !base.empty()) c.manifest = base / c.manifest;
        }
        if (j.contains("models")) c.models = j["models"].get<std::vector<std::string>>();
        if (j.contains("ensembles"))
            for (const auto& e : j["ensembles"]) {
                if (e.is_string()) {
                    c.ensembles.push_back(parse_ensemble_spec(e.get<std::string>()));
                } else {
                    std::vector<std::string> members;
                    if (e.contains("members")) members = e["members"].get<std::vector<std::string>>();
                    c.ensembles.push_back(parse_ensemble_spec(e.at("spec").get<std::string>(), members));
                }
            }
        if (j.contains("splits"))
            for (const auto& s : j["splits"]) c.splits.insert(parse_split(s.get<std::string>()));
        if (j.contains("droid_bins")) c.droid_bins = j["droid_bins"].get<std::size_t>();
        if (j.contains("cv_variant")) c.cv_variant = parse_cv_variant(j["cv_variant"].get<std::string>());
        if (j.contains("assd_policy")) c.assd_policy = parse_assd_policy(j["assd_policy"].get<std::string>());
        if (j.contains("out_dir")) c.out_dir = j["out_dir"].get<std::string>();
        if (j.contains("jobs")) c.jobs = j["jobs"].get<std::size_t>();
        if (j.contains("timestamp")) c.timestamp = j["timestamp"].get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("run config: ") + e.what());
    }
    if (c.droid_bins < 2) throw ValidationError("run config: droid_bins must be at least 2");
    return c;
}

} // namespace segeval::report
