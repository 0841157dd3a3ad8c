#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "uqeval/manifest.hpp"
#include "uqeval/volume.hpp"

namespace uqeval {

// Synthetic dataset generator: ground truth is a union of non-overlapping
// ellipsoids; member probability maps are the (optionally smoothed) truth
// plus per-member noise, spurious blobs that become false-positive lesions,
// and per-member structure dropouts that create ensemble disagreement.
struct SynthSpec {
    std::size_t patients = 10;
    Shape shape{48, 48, 48};
    std::size_t member_count = 5;

    int lesion_count_min = 3;
    int lesion_count_max = 6;
    double lesion_radius_min = 3.0;
    double lesion_radius_max = 6.0;

    int spurious_count_min = 0;
    int spurious_count_max = 0;
    double spurious_radius_min = 2.5;
    double spurious_radius_max = 4.5;

    double member_noise = 0.05;          // uniform(-noise, +noise) per voxel
    double miss_probability = 0.0;       // per-member dropout of true lesions
    std::optional<double> spurious_miss_probability; // defaults to miss_probability
    std::optional<std::size_t> miss_member_only;     // restrict dropouts to one member

    int smoothing_passes = 1;            // 3-tap separable blur repetitions
    double foreground_prob = 0.9;
    double background_prob = 0.02;
    bool write_brain_mask = false;       // ellipsoidal mask; all-ones otherwise
};

// Writes {patient}_gt.npy, {patient}_m{k}.npy (+ optional {patient}_mask.npy)
// and manifest.json under out_dir; byte-identical for identical (spec, seed).
DatasetManifest synth_generate(const SynthSpec& spec, std::uint64_t seed,
                               const std::filesystem::path& out_dir);

} // namespace uqeval
