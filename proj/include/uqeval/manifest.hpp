#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "uqeval/volume.hpp"

namespace uqeval {

struct ManifestEntry {
    std::string patient_id;
    std::vector<std::filesystem::path> member_prob_paths;
    std::filesystem::path ground_truth_path;
    std::optional<std::filesystem::path> brain_mask_path;
};

// Index of a dataset on disk. All paths are relative to the manifest file.
struct DatasetManifest {
    int version = 1;
    std::vector<ManifestEntry> samples;
};

// Parse + structural validation (unique patient ids, consistent K >= 2).
DatasetManifest read_manifest(const std::filesystem::path& path);

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// Load one entry's volumes; base_dir is the manifest's directory.
EnsembleSample load_sample(const ManifestEntry& entry, const std::filesystem::path& base_dir);

// Read + load + validate every sample, in manifest order.
std::vector<EnsembleSample> load_manifest(const std::filesystem::path& path);

} // namespace uqeval
