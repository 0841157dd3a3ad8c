#include "uqeval/lesion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <map>

#include "uqeval/rng.hpp"

namespace uqeval {

Connectivity connectivity_from_int(int value) {
    switch (value) {
    case 6: return Connectivity::faces;
    case 18: return Connectivity::edges;
    case 26: return Connectivity::corners;
    default:
        throw ValidationError("connectivity must be one of 6, 18, 26; got " +
                              std::to_string(value));
    }
}

namespace {

struct Offset {
    int dz, dy, dx;
};

std::vector<Offset> neighbor_offsets(Connectivity connectivity) {
    const int max_l1 = connectivity == Connectivity::faces   ? 1
                       : connectivity == Connectivity::edges ? 2
                                                             : 3;
    std::vector<Offset> offsets;
    for (int dz = -1; dz <= 1; ++dz) {
        for (int dy = -1; dy <= 1; ++dy) {
            for (int dx = -1; dx <= 1; ++dx) {
                const int l1 = std::abs(dz) + std::abs(dy) + std::abs(dx);
                if (l1 == 0 || l1 > max_l1) continue;
                offsets.push_back({dz, dy, dx});
            }
        }
    }
    return offsets;
}

} // namespace

LesionSet connected_components(const Volume3D& mask, Connectivity connectivity) {
    if (mask.kind() != VolumeKind::binary) {
        throw ValidationError("connected_components requires a binary volume, got " +
                              std::string(to_string(mask.kind())));
    }
    const Shape shape = mask.shape();
    const std::size_t n = shape.total();
    const auto offsets = neighbor_offsets(connectivity);

    LesionSet set;
    set.shape = shape;
    set.labels.assign(n, 0);

    std::vector<std::size_t> stack;
    for (std::size_t start = 0; start < n; ++start) {
        if (mask[start] == 0.0f || set.labels[start] != 0) continue;
        const auto label = static_cast<std::int32_t>(set.components.size() + 1);
        LesionComponent comp;
        comp.label = label;

        set.labels[start] = label;
        stack.assign(1, start);
        while (!stack.empty()) {
            const std::size_t v = stack.back();
            stack.pop_back();
            comp.voxels.push_back(v);

            const std::size_t z = v / (shape.height * shape.width);
            const std::size_t rem = v % (shape.height * shape.width);
            const std::size_t y = rem / shape.width;
            const std::size_t x = rem % shape.width;
            for (const Offset& o : offsets) {
                const auto nz = static_cast<std::ptrdiff_t>(z) + o.dz;
                const auto ny = static_cast<std::ptrdiff_t>(y) + o.dy;
                const auto nx = static_cast<std::ptrdiff_t>(x) + o.dx;
                if (nz < 0 || ny < 0 || nx < 0 ||
                    nz >= static_cast<std::ptrdiff_t>(shape.depth) ||
                    ny >= static_cast<std::ptrdiff_t>(shape.height) ||
                    nx >= static_cast<std::ptrdiff_t>(shape.width)) {
                    continue;
                }
                const std::size_t nv = shape.flat(static_cast<std::size_t>(nz),
                                                  static_cast<std::size_t>(ny),
                                                  static_cast<std::size_t>(nx));
                if (mask[nv] != 0.0f && set.labels[nv] == 0) {
                    set.labels[nv] = label;
                    stack.push_back(nv);
                }
            }
        }
        std::sort(comp.voxels.begin(), comp.voxels.end());
        set.components.push_back(std::move(comp));
    }
    return set;
}

double iou(std::span<const std::size_t> a, std::span<const std::size_t> b) {
    std::size_t inter = 0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] == b[j]) {
            ++inter;
            ++i;
            ++j;
        } else if (a[i] < b[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    const std::size_t uni = a.size() + b.size() - inter;
    if (uni == 0) return 0.0;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double iou(const LesionComponent& a, const LesionComponent& b) {
    return iou(std::span<const std::size_t>(a.voxels), std::span<const std::size_t>(b.voxels));
}

std::string_view to_string(FnMode mode) {
    return mode == FnMode::zero_overlap ? "zero-overlap" : "unmatched";
}

FnMode fn_mode_from_string(std::string_view name) {
    if (name == "zero-overlap" || name == "zero_overlap") return FnMode::zero_overlap;
    if (name == "unmatched") return FnMode::unmatched;
    throw ValidationError("unknown fn_mode '" + std::string(name) +
                          "' (expected zero-overlap or unmatched)");
}

std::size_t LesionClassification::tp_count() const {
    std::size_t c = 0;
    for (const LesionVerdict& v : predicted) c += v.status == LesionStatus::tp;
    return c;
}

std::size_t LesionClassification::fp_count() const {
    return predicted.size() - tp_count();
}

LesionClassification classify_lesions(const LesionSet& predicted, const LesionSet& truth,
                                      double gamma, FnMode fn_mode) {
    if (!(gamma > 0.0 && gamma < 1.0)) {
        throw ValidationError("gamma must lie in (0,1); got " + std::to_string(gamma));
    }
    if (predicted.shape != truth.shape) {
        throw ValidationError("classify_lesions: predicted shape " + predicted.shape.str() +
                              " does not match truth " + truth.shape.str());
    }

    // Pairwise overlap counts in one pass over the label volumes.
    std::map<std::pair<std::int32_t, std::int32_t>, std::size_t> overlap;
    std::vector<bool> truth_touched(truth.count() + 1, false);
    const std::size_t n = predicted.labels.size();
    for (std::size_t i = 0; i < n; ++i) {
        const std::int32_t pl = predicted.labels[i];
        const std::int32_t tl = truth.labels[i];
        if (tl > 0 && pl > 0) {
            ++overlap[{pl, tl}];
            truth_touched[static_cast<std::size_t>(tl)] = true;
        }
    }

    std::vector<double> truth_best(truth.count() + 1, 0.0);
    LesionClassification cls;
    cls.gamma = gamma;
    cls.fn_mode = fn_mode;
    cls.predicted.reserve(predicted.count());
    std::vector<double> pred_best(predicted.count() + 1, 0.0);
    for (const auto& [key, count] : overlap) {
        const auto [pl, tl] = key;
        const std::size_t ps = predicted.components[static_cast<std::size_t>(pl) - 1].size();
        const std::size_t ts = truth.components[static_cast<std::size_t>(tl) - 1].size();
        const double value =
            static_cast<double>(count) / static_cast<double>(ps + ts - count);
        pred_best[static_cast<std::size_t>(pl)] =
            std::max(pred_best[static_cast<std::size_t>(pl)], value);
        truth_best[static_cast<std::size_t>(tl)] =
            std::max(truth_best[static_cast<std::size_t>(tl)], value);
    }

    for (const LesionComponent& comp : predicted.components) {
        const double best = pred_best[static_cast<std::size_t>(comp.label)];
        cls.predicted.push_back(LesionVerdict{
            comp.label, comp.size(),
            best > gamma ? LesionStatus::tp : LesionStatus::fp, best});
    }

    std::size_t fn = 0;
    for (std::size_t t = 1; t <= truth.count(); ++t) {
        if (fn_mode == FnMode::zero_overlap) {
            fn += truth_touched[t] ? 0 : 1;
        } else {
            fn += truth_best[t] > gamma ? 0 : 1;
        }
    }
    cls.fn_count = fn;
    return cls;
}

double aggregate_mean(const LesionComponent& lesion, std::span<const double> u_map) {
    if (lesion.voxels.empty()) {
        throw ValidationError("aggregate_mean: empty lesion");
    }
    double sum = 0.0;
    for (std::size_t v : lesion.voxels) {
        if (v >= u_map.size()) {
            throw ValidationError("aggregate_mean: lesion voxel outside map bounds");
        }
        sum += u_map[v];
    }
    return sum / static_cast<double>(lesion.size());
}

double aggregate_logsum(const LesionComponent& lesion, std::span<const double> u_map,
                        double shift) {
    if (lesion.voxels.empty()) {
        throw ValidationError("aggregate_logsum: empty lesion");
    }
    double sum = 0.0;
    for (std::size_t v : lesion.voxels) {
        if (v >= u_map.size()) {
            throw ValidationError("aggregate_logsum: lesion voxel outside map bounds");
        }
        sum += std::log(std::max(u_map[v] + shift, kLogSumFloor));
    }
    return sum;
}

double ddu(const LesionComponent& lesion, const std::vector<LesionSet>& member_lesions) {
    if (member_lesions.size() < 2) {
        throw ValidationError("ddu needs K >= 2 member segmentations");
    }
    double sum = 0.0;
    for (const LesionSet& member : member_lesions) {
        if (!lesion.voxels.empty() && lesion.voxels.back() >= member.labels.size()) {
            throw ValidationError("ddu: lesion voxel outside member mask bounds");
        }
        // overlap with each candidate component of this member
        std::vector<std::size_t> counts(member.count() + 1, 0);
        for (std::size_t v : lesion.voxels) {
            const std::int32_t l = member.labels[v];
            if (l > 0) ++counts[static_cast<std::size_t>(l)];
        }
        double best = 0.0; // strict max keeps the smallest label on ties
        for (std::size_t l = 1; l <= member.count(); ++l) {
            if (counts[l] == 0) continue;
            const std::size_t uni = lesion.size() + member.components[l - 1].size() - counts[l];
            const double value = static_cast<double>(counts[l]) / static_cast<double>(uni);
            if (value > best) best = value;
        }
        sum += best;
    }
    return 1.0 - sum / static_cast<double>(member_lesions.size());
}

double ddu(const LesionComponent& lesion, const std::vector<Volume3D>& member_masks,
           Connectivity connectivity) {
    if (member_masks.size() < 2) {
        throw ValidationError("ddu needs K >= 2 member segmentations");
    }
    const Shape shape = member_masks.front().shape();
    std::vector<LesionSet> sets;
    sets.reserve(member_masks.size());
    for (const Volume3D& mask : member_masks) {
        if (mask.shape() != shape) {
            throw ValidationError("ddu: member mask shapes disagree");
        }
        sets.push_back(connected_components(mask, connectivity));
    }
    return ddu(lesion, sets);
}

std::vector<double> ideal_lesion_uncertainty(const LesionClassification& classification) {
    std::vector<double> scores;
    scores.reserve(classification.predicted.size());
    for (const LesionVerdict& v : classification.predicted) {
        scores.push_back(v.status == LesionStatus::tp ? 0.0 : 1.0);
    }
    return scores;
}

std::vector<double> random_lesion_uncertainty(std::size_t lesion_count, std::uint64_t seed,
                                              std::string_view patient_id) {
    rng::Stream stream(rng::derive(rng::derive(seed, "lesion-random"), patient_id));
    std::vector<double> scores(lesion_count);
    for (double& s : scores) s = stream.uniform01();
    return scores;
}

} // namespace uqeval
