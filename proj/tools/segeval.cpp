// segeval command line: batch evaluation of segmentation masks against ground truth.
//
// Exit codes: 0 success, 1 validation failure, 2 finished with exclusions, 3 internal error.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "segeval/segeval.hpp"

namespace fs = std::filesystem;
using namespace segeval;
using namespace segeval::report;

namespace {

enum Exit { kOk = 0, kValidation = 1, kPartial = 2, kInternal = 3 };

struct Options {
    std::string manifest;
    std::string out;
    std::vector<std::string> splits;
    std::vector<std::string> models;
    std::string config;
    std::size_t jobs = 0;
    std::vector<std::string> ensembles;
    std::vector<std::string> members;
    std::string table;
    std::string metric;
    std::string tissue;
    std::size_t bins = 0;
    std::string group_by = "model,tissue";
    std::string stratify;
    std::string cv_variant;
    std::string assd_policy;
    bool timestamp = false;
};

void add_common(CLI::App* app, Options& o) {
    app->add_option("--manifest", o.manifest, "Dataset manifest (CSV or JSON)");
    app->add_option("--out", o.out, "Output directory");
    app->add_option("--split", o.splits, "Splits to include (train, validation, test); default all")->delimiter(',');
    app->add_option("--models", o.models, "Models to evaluate; default every manifest model")->delimiter(',');
    app->add_option("--config", o.config, "JSON run configuration; command-line flags override it");
    app->add_option("--jobs", o.jobs, "Worker threads; 0 uses all cores");
}

void add_run_flags(CLI::App* app, Options& o) {
    app->add_option("--ensemble", o.ensembles, "Ensemble spec: vote:k=N, oracle:tp or oracle:tn (repeatable)");
    app->add_option("--members", o.members, "Ensemble members; default the evaluated models")->delimiter(',');
    app->add_option("--bins", o.bins, "Depth bins for slice profiles");
    app->add_option("--cv-variant", o.cv_variant, "sample or population");
    app->add_option("--assd-policy", o.assd_policy, "exclude or max_penalty");
    app->add_flag("--timestamp", o.timestamp, "Record wall-clock time in run metadata");
}

RunConfig make_config(const Options& o) {
    RunConfig cfg;
    if (!o.config.empty()) {
        const fs::path p(o.config);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_text(p));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("config " + p.string() + ": " + e.what());
        }
        cfg = parse_run_config(j, p.parent_path());
    }
    if (!o.manifest.empty()) cfg.manifest = o.manifest;
    if (!o.out.empty()) cfg.out_dir = o.out;
    if (!o.splits.empty()) {
        cfg.splits.clear();
        for (const auto& s : o.splits) cfg.splits.insert(parse_split(s));
    }
    if (!o.models.empty()) cfg.models = o.models;
    if (o.jobs) cfg.jobs = o.jobs;
    for (const auto& e : o.ensembles) cfg.ensembles.push_back(parse_ensemble_spec(e, o.members));
    if (o.bins) cfg.droid_bins = o.bins;
    if (cfg.droid_bins < 2) throw ValidationError("--bins must be at least 2");
    if (!o.cv_variant.empty()) cfg.cv_variant = parse_cv_variant(o.cv_variant);
    if (!o.assd_policy.empty()) cfg.assd_policy = parse_assd_policy(o.assd_policy);
    if (o.timestamp) cfg.timestamp = true;
    return cfg;
}

DatasetManifest require_manifest(const RunConfig& cfg) {
    if (cfg.manifest.empty()) throw ValidationError("--manifest is required");
    return load_manifest(cfg.manifest);
}

MetricTable read_table(const Options& o, const RunConfig& cfg) {
    const fs::path p = o.table.empty() ? cfg.out_dir / "metrics.csv" : fs::path(o.table);
    return parse_metrics_csv(read_text(p));
}

std::string manifest_hash(const RunConfig& cfg) {
    if (cfg.manifest.empty()) return {};
    return load_manifest(cfg.manifest, false).content_hash;
}

std::vector<Tissue> tissues_or_all(const std::string& t, bool cartilage_only) {
    if (!t.empty()) return {parse_tissue(t)};
    if (cartilage_only) return {kCartilageTissues.begin(), kCartilageTissues.end()};
    return {kAllTissues.begin(), kAllTissues.end()};
}

int cmd_validate(const RunConfig& cfg) {
    const auto m = require_manifest(cfg);
    const auto models = cfg.resolve_models(m);
    RunConfig bound = cfg;
    bound.bind(m);
    const auto scans = m.select(cfg.splits);
    auto problems = ordered_parallel_map(scans.size(), cfg.effective_jobs(), [&](std::size_t i) {
        std::vector<std::string> out;
        const auto s = load_scan(*scans[i], models_to_load(bound, m), m.through_plane_axis);
        if (!s.gt) out.push_back(scans[i]->scan_id() + ": " + s.gt_error);
        for (const auto& [model, err] : s.prediction_errors) out.push_back(scans[i]->scan_id() + " " + model + ": " + err);
        return out;
    });
    std::size_t n = 0;
    for (const auto& list : problems)
        for (const auto& p : list) {
            std::cerr << p << "\n";
            ++n;
        }
    const auto unpaired = m.unpaired_year1_subjects();
    for (const auto& s : unpaired) std::cerr << "subject " << s << ": year1 scan without baseline\n";
    std::cout << scans.size() << " scans, " << models.size() << " models, " << n << " problems\n";
    return n ? kValidation : kOk;
}

int cmd_evaluate(const RunConfig& cfg, const DatasetManifest& m, MetricTable* keep = nullptr) {
    auto table = run_evaluate(cfg, m);
    const auto run = run_metadata(cfg, m.content_hash);
    write_metrics(cfg.out_dir, table);
    write_exclusions(cfg.out_dir, table.exclusions, run);
    std::cout << table.records.size() << " records, " << table.exclusions.size() << " exclusions -> "
              << (cfg.out_dir / "metrics.csv").string() << "\n";
    const int code = table.exclusions.empty() ? kOk : kPartial;
    if (keep) *keep = std::move(table);
    return code;
}

int cmd_aggregate(const Options& o, const RunConfig& cfg, const MetricTable& table) {
    std::optional<DatasetManifest> m;
    if (!o.stratify.empty()) {
        if (o.stratify != "kl_grade") throw ValidationError("--stratify supports kl_grade only");
        m = require_manifest(cfg);
    }
    const auto s = run_aggregate(table, parse_group_by(o.group_by), m ? &*m : nullptr);
    write_summary(cfg.out_dir, s, run_metadata(cfg, manifest_hash(cfg)));
    std::cout << s.cells.size() << " summary cells -> " << (cfg.out_dir / "summary.json").string() << "\n";
    return kOk;
}

int cmd_compare(const Options& o, const RunConfig& cfg, const MetricTable& table) {
    std::vector<nlohmann::ordered_json> out;
    if (o.metric.empty() && o.tissue.empty()) {
        out = compare_all(table);
    } else {
        const std::string metric_name = o.metric.empty() ? std::string(metric::dice) : o.metric;
        for (Tissue t : tissues_or_all(o.tissue, metric_name == metric::thickness_error_mm))
            out.push_back(to_json(run_compare(table, metric_name, t)));
    }
    write_stats(cfg.out_dir, out, run_metadata(cfg, manifest_hash(cfg)));
    std::cout << out.size() << " comparisons -> " << (cfg.out_dir / "stats.json").string() << "\n";
    return kOk;
}

int cmd_thickness(const Options& o, const RunConfig& cfg, const MetricTable& table) {
    std::vector<ThicknessAgreement> out;
    for (Tissue t : tissues_or_all(o.tissue, true)) out.push_back(run_thickness_agreement(table, t));
    write_bland_altman(cfg.out_dir, out, run_metadata(cfg, manifest_hash(cfg)));
    std::cout << "thickness agreement -> " << (cfg.out_dir / "bland_altman.json").string() << "\n";
    return kOk;
}

int cmd_droid(const RunConfig& cfg, const DatasetManifest& m) {
    const auto r = run_droid(cfg, m);
    write_droid(cfg.out_dir, r.profiles);
    std::cout << r.profiles.size() << " depth profiles -> " << cfg.out_dir.string() << "\n";
    return r.exclusions.empty() ? kOk : kPartial;
}

int cmd_correlate(const RunConfig& cfg, const DatasetManifest& m) {
    const auto r = run_correlate(cfg, m);
    write_correlations(cfg.out_dir, r.matrices);
    for (const auto& e : r.exclusions) std::cerr << e.subject_id << "/" << to_string(e.timepoint) << ": " << e.reason << "\n";
    std::cout << r.matrices.size() << " correlation matrices -> " << cfg.out_dir.string() << "\n";
    return r.exclusions.empty() ? kOk : kPartial;
}

int cmd_ensemble(const RunConfig& cfg, const DatasetManifest& m) {
    if (cfg.ensembles.empty()) throw ValidationError("--ensemble is required");
    int code = kOk;
    for (const auto& spec : cfg.ensembles) {
        const auto dir = cfg.out_dir / "ensembles" / spec.name();
        const auto results = run_ensemble_maps(cfg, m, spec, dir);
        write_ensemble_report(dir, spec, results, run_metadata(cfg, m.content_hash));
        for (const auto& r : results)
            if (r.error) {
                std::cerr << spec.name() << " " << r.subject_id << "/" << to_string(r.timepoint) << ": " << *r.error << "\n";
                code = kPartial;
            }
        std::cout << spec.name() << " -> " << dir.string() << "\n";
    }
    return code;
}

int cmd_report(const Options& o, RunConfig cfg) {
    const auto m = require_manifest(cfg);
    cfg.bind(m);
    MetricTable table;
    int code = cmd_evaluate(cfg, m, &table);
    const auto run = run_metadata(cfg, m.content_hash);
    std::optional<DatasetManifest> strat;
    if (!o.stratify.empty()) {
        if (o.stratify != "kl_grade") throw ValidationError("--stratify supports kl_grade only");
        strat = m;
    }
    write_summary(cfg.out_dir, run_aggregate(table, parse_group_by(o.group_by), strat ? &*strat : nullptr), run);
    write_stats(cfg.out_dir, compare_all(table), run);
    std::vector<ThicknessAgreement> agreement;
    for (Tissue t : kCartilageTissues) agreement.push_back(run_thickness_agreement(table, t));
    write_bland_altman(cfg.out_dir, agreement, run);
    code = std::max(code, cmd_correlate(cfg, m));
    code = std::max(code, cmd_droid(cfg, m));
    if (!cfg.ensembles.empty()) code = std::max(code, cmd_ensemble(cfg, m));
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"segeval: segmentation evaluation and ensemble analysis"};
    app.require_subcommand(1);
    Options o;

    auto* validate = app.add_subcommand("validate", "Check the manifest and audit every mask's geometry");
    auto* evaluate = app.add_subcommand("evaluate", "Per-scan metrics to metrics.csv");
    auto* aggregate = app.add_subcommand("aggregate", "Summary table from metrics.csv");
    auto* compare = app.add_subcommand("compare", "Kruskal-Wallis and Dunn tests between models");
    auto* thickness = app.add_subcommand("thickness", "Bland-Altman agreement and thickness-error correlations");
    auto* droid = app.add_subcommand("droid", "Slice-wise Dice depth profiles");
    auto* ensemble = app.add_subcommand("ensemble", "Build ensemble label maps");
    auto* correlate = app.add_subcommand("correlate", "Inter-model Dice correlation matrices");
    auto* report = app.add_subcommand("report", "Run every analysis");
    auto* synth = app.add_subcommand("synth", "Write the synthetic phantom dataset");

    for (auto* sc : {validate, evaluate, aggregate, compare, thickness, droid, ensemble, correlate, report})
        add_common(sc, o);
    for (auto* sc : {validate, evaluate, droid, ensemble, correlate, report}) add_run_flags(sc, o);
    for (auto* sc : {aggregate, compare, thickness}) sc->add_option("--table", o.table, "metrics.csv (default <out>/metrics.csv)");
    for (auto* sc : {aggregate, report}) {
        sc->add_option("--group-by", o.group_by, "model,tissue or tissue");
        sc->add_option("--stratify", o.stratify, "kl_grade");
    }
    compare->add_option("--metric", o.metric, "Metric to compare; default every headline metric");
    for (auto* sc : {compare, thickness}) sc->add_option("--tissue", o.tissue, "Single tissue; default all");
    synth->add_option("--out", o.out, "Dataset directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kValidation;
    }

    try {
        if (synth->parsed()) {
            phantom::write_dataset(o.out);
            std::cout << "synthetic dataset -> " << o.out << "\n";
            return kOk;
        }
        const auto cfg = make_config(o);
        if (validate->parsed()) return cmd_validate(cfg);
        if (report->parsed()) return cmd_report(o, cfg);
        if (aggregate->parsed()) return cmd_aggregate(o, cfg, read_table(o, cfg));
        if (compare->parsed()) return cmd_compare(o, cfg, read_table(o, cfg));
        if (thickness->parsed()) return cmd_thickness(o, cfg, read_table(o, cfg));
        const auto m = require_manifest(cfg);
        auto bound = cfg;
        bound.bind(m);
        if (evaluate->parsed()) return cmd_evaluate(bound, m);
        if (droid->parsed()) return cmd_droid(bound, m);
        if (correlate->parsed()) return cmd_correlate(bound, m);
        if (ensemble->parsed()) return cmd_ensemble(bound, m);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const ShapeMismatch& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kValidation;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    }
    return kInternal;
}
