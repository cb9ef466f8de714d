#pragma once

// Dataset manifests: one row per (subject, timepoint) scan.
//
// CSV columns: subject_id, timepoint, split, ground_truth_path, model:<name> (one per model),
// kl_grade, bmi, age, sex. Optional leading directive lines of the form
// "# through_plane_axis=z" or "# label_alphabet=0,1,2,3,4".
// JSON mirror: {"through_plane_axis": "z", "scans": [{"subject_id": ..., "model:<name>": ...}]};
// a "predictions" object {name: path} is accepted in place of model:<name> keys.
// Relative paths resolve against the manifest's directory.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "geometry.hpp"
#include "io.hpp"
#include "scan_types.hpp"
#include "volume.hpp"

namespace segeval {

struct ScanRecord {
    std::string subject_id;
    Timepoint timepoint = Timepoint::baseline;
    Split split = Split::test;
    std::filesystem::path ground_truth_path;
    std::map<std::string, std::filesystem::path> prediction_paths;
    std::optional<int> kl_grade;
    std::optional<double> bmi;
    std::optional<double> age;
    std::optional<Sex> sex;

    std::string scan_id() const { return subject_id + "/" + std::string(to_string(timepoint)); }
};

struct DatasetManifest {
    std::vector<ScanRecord> scans;
    std::vector<std::uint8_t> label_alphabet{0, 1, 2, 3, 4};
    Axis through_plane_axis = Axis::z;
    /// Model names in order of first appearance.
    std::vector<std::string> models;
    /// FNV-1a 64 of the manifest file bytes, hex.
    std::string content_hash;

    std::vector<const ScanRecord*> select(const std::set<Split>& splits) const {
        std::vector<const ScanRecord*> out;
        for (const auto& s : scans)
            if (splits.empty() || splits.count(s.split)) out.push_back(&s);
        return out;
    }

    const ScanRecord* find(std::string_view subject, Timepoint tp) const {
        for (const auto& s : scans)
            if (s.subject_id == subject && s.timepoint == tp) return &s;
        return nullptr;
    }

    bool has_model(std::string_view name) const {
        return std::find(models.begin(), models.end(), name) != models.end();
    }

    /// Subjects present at year1 but missing a baseline scan.
    std::vector<std::string> unpaired_year1_subjects() const {
        std::vector<std::string> out;
        for (const auto& s : scans)
            if (s.timepoint == Timepoint::year1 && !find(s.subject_id, Timepoint::baseline))
                out.push_back(s.subject_id);
        return out;
    }

    void require_longitudinal_pairs() const {
        auto missing = unpaired_year1_subjects();
        if (!missing.empty()) {
            std::string msg = "year1 scans without baseline for subjects:";
            for (const auto& m : missing) msg += " " + m;
            throw ValidationError(msg);
        }
    }
};

inline std::string fnv1a_hex(std::span<const std::uint8_t> bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (auto b : bytes) {
        h ^= b;
        h *= 0x100000001b3ULL;
    }
    static constexpr char digits[] = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xF];
    return out;
}

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

/// RFC 4180 style: quoted fields may contain commas and doubled quotes.
inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(trim(cur));
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(trim(cur));
    return fields;
}

inline double parse_real(const std::string& s, const std::string& what) {
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size()) throw ValidationError(what + ": not a number '" + s + "'");
    return v;
}

inline int parse_kl(const std::string& s, const std::string& where) {
    const double v = parse_real(s, where + " kl_grade");
    if (v != static_cast<int>(v) || v < 1 || v > 4)
        throw ValidationError(where + ": kl_grade must be an integer in 1..4, got '" + s + "'");
    return static_cast<int>(v);
}

inline void apply_directive(DatasetManifest& m, const std::string& key, const std::string& value) {
    if (key == "through_plane_axis") {
        m.through_plane_axis = parse_axis(value);
    } else if (key == "label_alphabet") {
        m.label_alphabet.clear();
        std::stringstream ss(value);
        std::string tok;
        while (std::getline(ss, tok, ','))
            m.label_alphabet.push_back(static_cast<std::uint8_t>(parse_real(trim(tok), "label_alphabet")));
    }
}

inline void note_model(DatasetManifest& m, const std::string& name) {
    if (!m.has_model(name)) m.models.push_back(name);
}

inline void finalize_manifest(DatasetManifest& m, const std::filesystem::path& base, bool check_files) {
    for (auto c : m.label_alphabet)
        if (c > kMaxLabel) throw ValidationError("label alphabet code " + std::to_string(c) + " outside {0..4}");
    std::set<std::pair<std::string, Timepoint>> seen;
    for (std::size_t i = 0; i < m.scans.size(); ++i) {
        auto& s = m.scans[i];
        const std::string where = "manifest row " + std::to_string(i + 1) + " (" + s.scan_id() + ")";
        if (s.subject_id.empty()) throw ValidationError("manifest row " + std::to_string(i + 1) + ": empty subject_id");
        if (!seen.emplace(s.subject_id, s.timepoint).second)
            throw ValidationError(where + ": duplicate scan identity");
        auto resolve = [&](std::filesystem::path& p) {
            if (p.is_relative()) p = base / p;
        };
        resolve(s.ground_truth_path);
        for (auto& [model, p] : s.prediction_paths) resolve(p);
        if (check_files) {
            if (!std::filesystem::exists(s.ground_truth_path))
                throw ValidationError(where + ": ground truth file not found: " + s.ground_truth_path.string());
            for (const auto& [model, p] : s.prediction_paths)
                if (!std::filesystem::exists(p))
                    throw ValidationError(where + ": prediction for model '" + model + "' not found: " + p.string());
        }
    }
}

} // namespace detail

inline DatasetManifest parse_manifest_csv(std::string_view text, const std::filesystem::path& base = {},
                                          bool check_files = true) {
    DatasetManifest m;
    std::istringstream in{std::string(text)};
    std::string line;
    std::vector<std::string> header;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        const std::string t = detail::trim(line);
        if (t.empty()) continue;
        if (t[0] == '#') {
            const auto eq = t.find('=');
            if (eq != std::string::npos)
                detail::apply_directive(m, detail::trim(t.substr(1, eq - 1)), detail::trim(t.substr(eq + 1)));
            continue;
        }
        auto fields = detail::split_csv_line(t);
        if (header.empty()) {
            header = std::move(fields);
            for (const char* req : {"subject_id", "timepoint", "split", "ground_truth_path"})
                if (std::find(header.begin(), header.end(), req) == header.end())
                    throw ValidationError(std::string("manifest CSV lacks required column '") + req + "'");
            for (const auto& h : header)
                if (h.rfind("model:", 0) == 0) detail::note_model(m, h.substr(6));
            continue;
        }
        ++row;
        const std::string where = "manifest row " + std::to_string(row);
        if (fields.size() != header.size())
            throw ValidationError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                                  std::to_string(fields.size()));
        ScanRecord s;
        try {
            for (std::size_t c = 0; c < header.size(); ++c) {
                const auto& h = header[c];
                const auto& v = fields[c];
                if (h == "subject_id") s.subject_id = v;
                else if (h == "timepoint") s.timepoint = parse_timepoint(v);
                else if (h == "split") s.split = parse_split(v);
                else if (h == "ground_truth_path") s.ground_truth_path = v;
                else if (h.rfind("model:", 0) == 0) {
                    if (!v.empty()) s.prediction_paths[h.substr(6)] = v;
                } else if (v.empty()) continue;
                else if (h == "kl_grade") s.kl_grade = detail::parse_kl(v, where);
                else if (h == "bmi") s.bmi = detail::parse_real(v, where + " bmi");
                else if (h == "age") s.age = detail::parse_real(v, where + " age");
                else if (h == "sex") s.sex = parse_sex(v);
            }
        } catch (const ValidationError& e) {
            const std::string msg = e.what();
            throw ValidationError(msg.rfind(where, 0) == 0 ? msg : where + ": " + msg);
        }
        m.scans.push_back(std::move(s));
    }
    if (header.empty()) throw ValidationError("manifest CSV is empty");
    detail::finalize_manifest(m, base, check_files);
    return m;
}

inline DatasetManifest parse_manifest_json(std::string_view text, const std::filesystem::path& base = {},
                                           bool check_files = true) {
    using nlohmann::json;
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("manifest JSON: ") + e.what());
    }
    DatasetManifest m;
    const json* scans = &doc;
    if (doc.is_object()) {
        if (doc.contains("through_plane_axis")) m.through_plane_axis = parse_axis(doc["through_plane_axis"].get<std::string>());
        if (doc.contains("label_alphabet")) m.label_alphabet = doc["label_alphabet"].get<std::vector<std::uint8_t>>();
        if (!doc.contains("scans")) throw ValidationError("manifest JSON lacks 'scans'");
        scans = &doc["scans"];
    }
    if (!scans->is_array()) throw ValidationError("manifest JSON 'scans' must be an array");
    std::size_t row = 0;
    for (const auto& item : *scans) {
        ++row;
        const std::string where = "manifest row " + std::to_string(row);
        ScanRecord s;
        try {
            auto str = [&](const char* key) {
                if (!item.contains(key)) throw ValidationError(std::string("missing field '") + key + "'");
                return item[key].get<std::string>();
            };
            s.subject_id = str("subject_id");
            s.timepoint = parse_timepoint(str("timepoint"));
            s.split = parse_split(str("split"));
            s.ground_truth_path = str("ground_truth_path");
            for (auto it = item.begin(); it != item.end(); ++it) {
                if (it.key().rfind("model:", 0) == 0 && it->is_string()) {
                    s.prediction_paths[it.key().substr(6)] = it->get<std::string>();
                    detail::note_model(m, it.key().substr(6));
                }
            }
            if (item.contains("predictions"))
                for (auto it = item["predictions"].begin(); it != item["predictions"].end(); ++it) {
                    s.prediction_paths[it.key()] = it->get<std::string>();
                    detail::note_model(m, it.key());
                }
            auto present = [&](const char* key) { return item.contains(key) && !item[key].is_null(); };
            if (present("kl_grade")) {
                const auto& k = item["kl_grade"];
                s.kl_grade = detail::parse_kl(k.is_string() ? k.get<std::string>() : k.dump(), where);
            }
            if (present("bmi")) s.bmi = item["bmi"].get<double>();
            if (present("age")) s.age = item["age"].get<double>();
            if (present("sex")) s.sex = parse_sex(item["sex"].get<std::string>());
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(where + ": " + e.what());
        } catch (const ValidationError& e) {
            const std::string msg = e.what();
            throw ValidationError(msg.rfind(where, 0) == 0 ? msg : where + ": " + msg);
        }
        m.scans.push_back(std::move(s));
    }
    detail::finalize_manifest(m, base, check_files);
    return m;
}

/// Loads a CSV or JSON manifest (chosen by extension, falling back to content sniffing).
inline DatasetManifest load_manifest(const std::filesystem::path& path, bool check_files = true) {
    const auto bytes = read_file_bytes(path);
    const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
    const auto base = path.parent_path();
    const auto first = text.find_first_not_of(" \t\r\n");
    const bool json = path.extension() == ".json" || (first != std::string_view::npos && (text[first] == '{' || text[first] == '['));
    auto m = json ? parse_manifest_json(text, base, check_files) : parse_manifest_csv(text, base, check_files);
    m.content_hash = fnv1a_hex(bytes);
    return m;
}

} // namespace segeval
