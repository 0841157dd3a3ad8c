#include "uqeval/voxel_uncertainty.hpp"

#include <algorithm>
#include <cmath>

#include "uqeval/rng.hpp"

namespace uqeval {

std::string_view to_token(VoxelMeasure measure) {
    switch (measure) {
    case VoxelMeasure::eoe: return "eoe";
    case VoxelMeasure::nc: return "nc";
    case VoxelMeasure::exe: return "exe";
    case VoxelMeasure::mi: return "mi";
    case VoxelMeasure::epkl: return "epkl";
    case VoxelMeasure::rmi: return "rmi";
    }
    return "?";
}

VoxelMeasure voxel_measure_from_token(std::string_view token) {
    for (VoxelMeasure m : kAllVoxelMeasures) {
        if (token == to_token(m)) return m;
    }
    throw ValidationError("unknown voxel measure '" + std::string(token) + "'");
}

const std::vector<double>& UncertaintyMaps::at(VoxelMeasure measure) const {
    auto it = maps.find(measure);
    if (it == maps.end()) {
        throw ValidationError("uncertainty map for '" + std::string(to_token(measure)) +
                              "' was not computed");
    }
    return it->second;
}

Volume3D UncertaintyMaps::to_volume(VoxelMeasure measure) const {
    const std::vector<double>& m = at(measure);
    std::vector<float> data(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) data[i] = static_cast<float>(m[i]);
    return Volume3D(shape, VolumeKind::uncertainty, std::move(data));
}

UncertaintyMaps compute_voxel_uncertainties(const EnsembleSample& sample,
                                            const std::set<VoxelMeasure>& measures) {
    const std::size_t k_count = sample.member_count();
    if (k_count < 2) {
        throw ValidationError("voxel uncertainty needs K >= 2 members");
    }
    const Shape shape = sample.shape();
    const std::size_t n = shape.total();
    const double k = static_cast<double>(k_count);

    UncertaintyMaps out;
    out.shape = shape;
    out.member_count = k_count;
    for (VoxelMeasure m : measures) {
        out.maps.emplace(m, std::vector<double>(n, 0.0));
    }
    auto target = [&](VoxelMeasure m) -> double* {
        auto it = out.maps.find(m);
        return it == out.maps.end() ? nullptr : it->second.data();
    };
    double* eoe_map = target(VoxelMeasure::eoe);
    double* nc_map = target(VoxelMeasure::nc);
    double* exe_map = target(VoxelMeasure::exe);
    double* mi_map = target(VoxelMeasure::mi);
    double* epkl_map = target(VoxelMeasure::epkl);
    double* rmi_map = target(VoxelMeasure::rmi);

    const std::vector<float>& mask = sample.brain_mask.data();
    for (std::size_t i = 0; i < n; ++i) {
        if (mask[i] == 0.0f) continue; // zeroed, excluded from ranking by mask

        double sum_p = 0.0, sum_entropy = 0.0, sum_log_p = 0.0, sum_log_q = 0.0;
        for (std::size_t kk = 0; kk < k_count; ++kk) {
            double p = static_cast<double>(sample.member_probs[kk][i]);
            p = std::clamp(p, kProbEpsilon, 1.0 - kProbEpsilon);
            const double q = 1.0 - p;
            sum_p += p;
            sum_entropy += -(p * std::log(p) + q * std::log(q));
            sum_log_p += std::log(p);
            sum_log_q += std::log(q);
        }
        const double pbar = sum_p / k;
        const double qbar = 1.0 - pbar;
        const double eoe = -(pbar * std::log(pbar) + qbar * std::log(qbar));
        const double exe = sum_entropy / k;
        const double epkl = -(sum_p * sum_log_p + (k - sum_p) * sum_log_q) / (k * k) - exe;
        const double mi = eoe - exe;

        if (eoe_map) eoe_map[i] = eoe;
        if (nc_map) nc_map[i] = -std::max(pbar, qbar);
        if (exe_map) exe_map[i] = exe;
        if (mi_map) mi_map[i] = mi;
        if (epkl_map) epkl_map[i] = epkl;
        if (rmi_map) rmi_map[i] = epkl - mi;
    }
    return out;
}

Volume3D ideal_voxel_uncertainty(const Volume3D& prediction, const Volume3D& ground_truth) {
    if (prediction.shape() != ground_truth.shape()) {
        throw ValidationError("ideal uncertainty: prediction shape " + prediction.shape().str() +
                              " does not match ground truth " + ground_truth.shape().str());
    }
    const std::size_t n = prediction.size();
    std::vector<float> data(n);
    for (std::size_t i = 0; i < n; ++i) {
        data[i] = prediction[i] == ground_truth[i] ? 0.0f : 1.0f;
    }
    return Volume3D(prediction.shape(), VolumeKind::uncertainty, std::move(data));
}

Volume3D random_voxel_uncertainty(const Shape& shape, std::uint64_t seed) {
    rng::Stream stream(seed);
    std::vector<float> data(shape.total());
    for (float& v : data) v = static_cast<float>(stream.uniform01());
    return Volume3D(shape, VolumeKind::uncertainty, std::move(data));
}

} // namespace uqeval
