#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "uqeval/lesion.hpp"
#include "uqeval/retention.hpp"
#include "uqeval/stats.hpp"
#include "uqeval/volume.hpp"
#include "uqeval/voxel_uncertainty.hpp"

namespace uqeval {

inline constexpr std::string_view kToolVersion = "0.1.0";

// Lesion-scale measure identifier. Tokens: "mean-<voxel>", "logsum-<voxel>",
// "ddu", "ddu-true", "ideal", "random" ('_' accepted for '-').
struct LesionMeasure {
    enum class Kind { mean, logsum, ddu, ddu_true, ideal, random };

    Kind kind = Kind::mean;
    VoxelMeasure base = VoxelMeasure::eoe; // meaningful for mean/logsum only

    bool operator==(const LesionMeasure&) const = default;
    auto operator<=>(const LesionMeasure&) const = default;
};

std::string to_token(const LesionMeasure& measure);
LesionMeasure lesion_measure_from_token(std::string_view token);
std::vector<LesionMeasure> all_lesion_measures(); // excludes ideal/random

struct PipelineConfig {
    std::filesystem::path manifest;
    double ensemble_threshold = 0.3;
    std::optional<std::vector<double>> member_thresholds; // tuned per member when absent
    double tau = 2.5e-3;
    double gamma = 0.25;
    Connectivity connectivity = Connectivity::corners;
    std::size_t grid_size = 101;
    std::uint64_t seed = 0;
    FnMode fn_mode = FnMode::zero_overlap;
    std::vector<VoxelMeasure> voxel_measures;   // empty = all six
    std::vector<LesionMeasure> lesion_measures; // empty = all
    bool skip_empty = false;                    // drop patients without predicted lesions (F1 only)
    std::size_t bootstrap_sample_size = 50;     // clamped to the dataset size
    std::size_t bootstrap_repetitions = 10000;
    int threads = 1;
};

void validate_config(const PipelineConfig& config, std::size_t member_count);
nlohmann::json config_to_json(const PipelineConfig& config);
PipelineConfig config_from_json(const nlohmann::json& j);

// 1 iff probability > threshold; the comparison happens at the data's
// float32 precision so a stored 0.3 does not exceed threshold 0.3.
Volume3D binarize(const Volume3D& probabilities, double threshold);

Volume3D ensemble_mean(const std::vector<Volume3D>& members);

std::vector<double> default_threshold_grid(); // 0.05, 0.10, ..., 0.95

// Grid threshold maximizing mean per-patient Dice of the binarized target
// (ensemble mean, or member k) against ground truth; ties keep the earliest
// grid entry.
double tune_threshold(std::span<const EnsembleSample> samples,
                      std::optional<std::size_t> member,
                      std::span<const double> grid);

struct MeasureRow {
    std::string measure;
    double mean_auc = 0.0;
    double se = 0.0;
    std::map<std::string, double> per_patient_auc; // post-interpolation
    RetentionCurve mean_curve;
};

struct WilcoxonComparison {
    std::string first;
    std::string second;
    WilcoxonResult result;
};

struct ScaleReport {
    std::vector<MeasureRow> rows; // descending mean AUC, ties by token
    std::vector<WilcoxonComparison> tests;

    const MeasureRow* find(std::string_view measure) const;
};

struct MeasureReport {
    std::string tool_version;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string config_dump; // canonical JSON serialization of the config
    std::vector<std::string> patients;
    ScaleReport dsc_rc;
    ScaleReport f1_rc;
};

MeasureReport run_pipeline(const PipelineConfig& config);

// Per-patient evaluation used by run_pipeline and the rc/lesions subcommands.
struct PatientEval {
    std::string patient_id;
    std::size_t predicted_lesions = 0;
    LesionClassification classification;
    std::map<std::string, RetentionCurve> dsc_curves; // token -> curve
    std::map<std::string, RetentionCurve> f1_curves;
    std::map<std::string, std::vector<double>> lesion_scores;
    std::vector<LesionVerdict> lesion_verdicts;
};

PatientEval evaluate_patient(const EnsembleSample& sample, const PipelineConfig& config,
                             const std::vector<double>& member_thresholds);

// Resolved per-member thresholds: config-provided, or tuned on the samples
// when the requested measures need them.
std::vector<double> resolve_member_thresholds(const PipelineConfig& config,
                                              std::span<const EnsembleSample> samples);

} // namespace uqeval
