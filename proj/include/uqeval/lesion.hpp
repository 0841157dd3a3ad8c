#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "uqeval/volume.hpp"

namespace uqeval {

enum class Connectivity : int { faces = 6, edges = 18, corners = 26 };

Connectivity connectivity_from_int(int value);

struct LesionComponent {
    std::int32_t label = 0;
    std::vector<std::size_t> voxels; // flat indices, strictly increasing

    std::size_t size() const { return voxels.size(); }
};

// Connected components of a binary mask. Components are labeled 1..L in order
// of their smallest flat index; `labels` is the flat label volume (0 =
// background).
struct LesionSet {
    Shape shape;
    std::vector<LesionComponent> components;
    std::vector<std::int32_t> labels;

    std::size_t count() const { return components.size(); }
};

LesionSet connected_components(const Volume3D& mask,
                               Connectivity connectivity = Connectivity::corners);

// Intersection over union of two sorted voxel-index sets.
double iou(std::span<const std::size_t> a, std::span<const std::size_t> b);
double iou(const LesionComponent& a, const LesionComponent& b);

enum class LesionStatus { tp, fp };

// How ground-truth lesions are counted as missed:
//  zero_overlap — missed iff no predicted voxel touches them (literal rule);
//  unmatched    — missed iff no predicted lesion reaches IoU > gamma.
enum class FnMode { zero_overlap, unmatched };

std::string_view to_string(FnMode mode);
FnMode fn_mode_from_string(std::string_view name);

struct LesionVerdict {
    std::int32_t label = 0;
    std::size_t size = 0;
    LesionStatus status = LesionStatus::fp;
    double best_iou = 0.0; // max IoU against ground-truth lesions
};

struct LesionClassification {
    std::vector<LesionVerdict> predicted; // in predicted label order
    std::size_t fn_count = 0;
    double gamma = 0.25;
    FnMode fn_mode = FnMode::zero_overlap;

    std::size_t tp_count() const;
    std::size_t fp_count() const;
};

// TP iff max IoU against truth lesions is strictly greater than gamma.
LesionClassification classify_lesions(const LesionSet& predicted, const LesionSet& truth,
                                      double gamma, FnMode fn_mode = FnMode::zero_overlap);

// Lesion-scale aggregation of a voxel uncertainty map.
double aggregate_mean(const LesionComponent& lesion, std::span<const double> u_map);

// Sum of ln(max(u + shift, floor)) over the lesion; shift +1 is used for
// negated-confidence maps, whose values live in [-1, -0.5].
inline constexpr double kLogSumFloor = 1e-8;
double aggregate_logsum(const LesionComponent& lesion, std::span<const double> u_map,
                        double shift = 0.0);

// Detection disagreement: 1 - mean_k IoU(lesion, best-matching component of
// member k). A member with no intersecting component contributes 0.
double ddu(const LesionComponent& lesion, const std::vector<LesionSet>& member_lesions);
double ddu(const LesionComponent& lesion, const std::vector<Volume3D>& member_masks,
           Connectivity connectivity = Connectivity::corners);

// TP lesions get 0, FP lesions get 1.
std::vector<double> ideal_lesion_uncertainty(const LesionClassification& classification);

// I.i.d. uniform [0,1) per lesion, keyed by (seed, patient_id).
std::vector<double> random_lesion_uncertainty(std::size_t lesion_count, std::uint64_t seed,
                                              std::string_view patient_id);

} // namespace uqeval
