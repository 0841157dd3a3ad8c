#include "uqeval/manifest.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "uqeval/npy_io.hpp"

namespace uqeval {

using nlohmann::json;

DatasetManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open manifest " + path.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError("manifest " + path.string() + ": invalid JSON: " + e.what());
    }

    DatasetManifest manifest;
    try {
        manifest.version = j.at("version").get<int>();
        if (manifest.version != 1) {
            throw ValidationError("manifest " + path.string() + ": unsupported version " +
                                  std::to_string(manifest.version));
        }
        for (const json& s : j.at("samples")) {
            ManifestEntry entry;
            entry.patient_id = s.at("patient_id").get<std::string>();
            for (const json& p : s.at("member_prob_paths")) {
                entry.member_prob_paths.emplace_back(p.get<std::string>());
            }
            entry.ground_truth_path = s.at("ground_truth_path").get<std::string>();
            if (s.contains("brain_mask_path") && !s.at("brain_mask_path").is_null()) {
                entry.brain_mask_path = s.at("brain_mask_path").get<std::string>();
            }
            manifest.samples.push_back(std::move(entry));
        }
    } catch (const json::exception& e) {
        throw ValidationError("manifest " + path.string() + ": " + e.what());
    }

    if (manifest.samples.empty()) {
        throw ValidationError("manifest " + path.string() + ": no samples");
    }
    std::set<std::string> ids;
    const std::size_t k = manifest.samples.front().member_prob_paths.size();
    for (const ManifestEntry& entry : manifest.samples) {
        if (!ids.insert(entry.patient_id).second) {
            throw ValidationError("manifest " + path.string() + ": duplicate patient_id '" +
                                  entry.patient_id + "'");
        }
        if (entry.member_prob_paths.size() != k) {
            throw ValidationError("manifest " + path.string() + ": sample '" + entry.patient_id +
                                  "' lists " + std::to_string(entry.member_prob_paths.size()) +
                                  " members, expected " + std::to_string(k));
        }
    }
    if (k < 2) {
        throw ValidationError("manifest " + path.string() + ": ensemble needs K >= 2 members, got " +
                              std::to_string(k));
    }
    return manifest;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    json samples = json::array();
    for (const ManifestEntry& entry : manifest.samples) {
        json s;
        s["patient_id"] = entry.patient_id;
        json members = json::array();
        for (const auto& p : entry.member_prob_paths) members.push_back(p.generic_string());
        s["member_prob_paths"] = members;
        s["ground_truth_path"] = entry.ground_truth_path.generic_string();
        if (entry.brain_mask_path) {
            s["brain_mask_path"] = entry.brain_mask_path->generic_string();
        }
        samples.push_back(std::move(s));
    }
    json j;
    j["version"] = manifest.version;
    j["samples"] = samples;

    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open manifest " + path.string() + " for writing");
    }
    out << j.dump(2) << '\n';
    if (!out) {
        throw IoError("write failed for manifest " + path.string());
    }
}

EnsembleSample load_sample(const ManifestEntry& entry, const std::filesystem::path& base_dir) {
    std::vector<Volume3D> members;
    members.reserve(entry.member_prob_paths.size());
    for (const auto& p : entry.member_prob_paths) {
        members.push_back(load_array(base_dir / p, VolumeKind::probability));
    }
    Volume3D truth = load_array(base_dir / entry.ground_truth_path, VolumeKind::binary);
    std::optional<Volume3D> mask;
    if (entry.brain_mask_path) {
        mask = load_array(base_dir / *entry.brain_mask_path, VolumeKind::binary);
    }
    return make_sample(entry.patient_id, std::move(members), std::move(truth), std::move(mask));
}

std::vector<EnsembleSample> load_manifest(const std::filesystem::path& path) {
    const DatasetManifest manifest = read_manifest(path);
    const std::filesystem::path base = path.parent_path();
    std::vector<EnsembleSample> samples;
    samples.reserve(manifest.samples.size());
    for (const ManifestEntry& entry : manifest.samples) {
        samples.push_back(load_sample(entry, base));
    }
    return samples;
}

} // namespace uqeval
