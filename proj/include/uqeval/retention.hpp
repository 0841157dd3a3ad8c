#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "uqeval/lesion.hpp"
#include "uqeval/volume.hpp"

namespace uqeval {

// Metric-versus-retained-fraction curve. Fractions run strictly decreasing
// from 1.0 to 0.0; auc is the trapezoidal integral over the fraction axis.
struct RetentionCurve {
    std::vector<double> fractions;
    std::vector<double> values;
    double auc = 0.0;
};

double trapezoid_auc(std::span<const double> fractions, std::span<const double> values);

// Validates the fraction/value contract and fills in the AUC.
RetentionCurve make_curve(std::vector<double> fractions, std::vector<double> values);

// Dice over the whole volume, or over mask voxels only. Two empty masks
// compare as 1.
double dsc(const Volume3D& prediction, const Volume3D& truth);
double dsc(const Volume3D& prediction, const Volume3D& truth, const Volume3D& mask);

double lesion_f1(std::size_t tp, std::size_t fp, std::size_t fn);
double lesion_f1(const LesionClassification& classification);

// Voxel-scale curve: repeatedly replace the ceil(tau*N) most uncertain
// in-mask predictions with ground truth (ties by ascending flat index) and
// re-evaluate Dice over the mask. Ends at fraction 0 with Dice 1.
RetentionCurve dsc_retention_curve(const Volume3D& prediction, const Volume3D& truth,
                                   const Volume3D& brain_mask,
                                   std::span<const double> uncertainty, double tau);
RetentionCurve dsc_retention_curve(const Volume3D& prediction, const Volume3D& truth,
                                   const Volume3D& brain_mask, const Volume3D& uncertainty,
                                   double tau);

// Lesion-scale curve: reject predicted lesions one at a time by descending
// score (ties by ascending label). Rejected TPs still count as TP, rejected
// FPs leave the FP count, the FN count never moves.
RetentionCurve f1_retention_curve(const LesionClassification& classification,
                                  std::span<const double> scores);

// n nodes, 1.0 down to 0.0, uniform spacing.
std::vector<double> uniform_grid(std::size_t nodes);

RetentionCurve interpolate_curve(const RetentionCurve& curve, std::span<const double> grid);

struct CurveBundle {
    std::vector<std::pair<std::string, RetentionCurve>> per_patient; // post-interpolation
    RetentionCurve mean_curve;
    double mean_auc = 0.0; // mean of per-patient AUCs after interpolation
};

CurveBundle average_curves(const std::vector<std::pair<std::string, RetentionCurve>>& curves,
                           std::span<const double> grid);

} // namespace uqeval
