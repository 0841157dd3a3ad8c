#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <set>
#include <string_view>
#include <vector>

#include "uqeval/volume.hpp"

namespace uqeval {

// Per-voxel ensemble uncertainty measures. Each voxel is treated as a binary
// classification with member foreground probabilities p_k; every probability
// is clamped to [kProbEpsilon, 1 - kProbEpsilon] before a logarithm and all
// logs are natural.
enum class VoxelMeasure { eoe, nc, exe, mi, epkl, rmi };

inline constexpr std::array<VoxelMeasure, 6> kAllVoxelMeasures = {
    VoxelMeasure::eoe, VoxelMeasure::nc,   VoxelMeasure::exe,
    VoxelMeasure::mi,  VoxelMeasure::epkl, VoxelMeasure::rmi,
};

inline constexpr double kProbEpsilon = 1e-8;

std::string_view to_token(VoxelMeasure measure);
VoxelMeasure voxel_measure_from_token(std::string_view token);

// One uncertainty map per requested measure, double precision, out-of-mask
// voxels zeroed. Downstream ranking must exclude them through the sample's
// brain mask, never by value.
struct UncertaintyMaps {
    Shape shape;
    std::size_t member_count = 0;
    double epsilon = kProbEpsilon;
    std::string log_base = "natural";
    std::map<VoxelMeasure, std::vector<double>> maps;

    const std::vector<double>& at(VoxelMeasure measure) const;
    Volume3D to_volume(VoxelMeasure measure) const;
};

UncertaintyMaps compute_voxel_uncertainties(const EnsembleSample& sample,
                                            const std::set<VoxelMeasure>& measures);

// 0 where prediction matches ground truth, 1 elsewhere.
Volume3D ideal_voxel_uncertainty(const Volume3D& prediction, const Volume3D& ground_truth);

// I.i.d. uniform [0,1) per voxel; identical output for identical (shape, seed).
Volume3D random_voxel_uncertainty(const Shape& shape, std::uint64_t seed);

} // namespace uqeval
