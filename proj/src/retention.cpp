#include "uqeval/retention.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace uqeval {

double trapezoid_auc(std::span<const double> fractions, std::span<const double> values) {
    double auc = 0.0;
    for (std::size_t i = 0; i + 1 < fractions.size(); ++i) {
        auc += (fractions[i] - fractions[i + 1]) * (values[i] + values[i + 1]) * 0.5;
    }
    return auc;
}

RetentionCurve make_curve(std::vector<double> fractions, std::vector<double> values) {
    if (fractions.size() != values.size() || fractions.size() < 2) {
        throw ValidationError("retention curve needs >= 2 matching fraction/value points");
    }
    if (fractions.front() != 1.0 || fractions.back() != 0.0) {
        throw ValidationError("retention fractions must run from 1.0 to 0.0");
    }
    for (std::size_t i = 0; i + 1 < fractions.size(); ++i) {
        if (!(fractions[i] > fractions[i + 1])) {
            throw ValidationError("retention fractions must be strictly decreasing");
        }
    }
    for (double v : values) {
        if (!(v >= 0.0 && v <= 1.0)) {
            throw ValidationError("retention curve value " + std::to_string(v) +
                                  " outside [0,1]");
        }
    }
    RetentionCurve curve{std::move(fractions), std::move(values), 0.0};
    curve.auc = std::clamp(trapezoid_auc(curve.fractions, curve.values), 0.0, 1.0);
    return curve;
}

namespace {

struct DiceCounts {
    std::size_t tp = 0, fp = 0, fn = 0;

    double value() const {
        if (tp + fp + fn == 0) return 1.0;
        return 2.0 * static_cast<double>(tp) /
               (2.0 * static_cast<double>(tp) + static_cast<double>(fp) +
                static_cast<double>(fn));
    }
};

DiceCounts dice_counts(const Volume3D& prediction, const Volume3D& truth,
                       const Volume3D* mask) {
    if (prediction.shape() != truth.shape()) {
        throw ValidationError("dsc: prediction shape " + prediction.shape().str() +
                              " does not match truth " + truth.shape().str());
    }
    if (mask && mask->shape() != prediction.shape()) {
        throw ValidationError("dsc: mask shape " + mask->shape().str() +
                              " does not match volumes " + prediction.shape().str());
    }
    DiceCounts c;
    const std::size_t n = prediction.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (mask && (*mask)[i] == 0.0f) continue;
        const bool p = prediction[i] != 0.0f;
        const bool t = truth[i] != 0.0f;
        c.tp += p && t;
        c.fp += p && !t;
        c.fn += !p && t;
    }
    return c;
}

} // namespace

double dsc(const Volume3D& prediction, const Volume3D& truth) {
    return dice_counts(prediction, truth, nullptr).value();
}

double dsc(const Volume3D& prediction, const Volume3D& truth, const Volume3D& mask) {
    return dice_counts(prediction, truth, &mask).value();
}

double lesion_f1(std::size_t tp, std::size_t fp, std::size_t fn) {
    if (tp + fp + fn == 0) return 1.0;
    return 2.0 * static_cast<double>(tp) /
           (2.0 * static_cast<double>(tp) + static_cast<double>(fn) + static_cast<double>(fp));
}

double lesion_f1(const LesionClassification& classification) {
    return lesion_f1(classification.tp_count(), classification.fp_count(),
                     classification.fn_count);
}

RetentionCurve dsc_retention_curve(const Volume3D& prediction, const Volume3D& truth,
                                   const Volume3D& brain_mask,
                                   std::span<const double> uncertainty, double tau) {
    if (!(tau > 0.0 && tau <= 1.0)) {
        throw ValidationError("tau must lie in (0,1]; got " + std::to_string(tau));
    }
    if (prediction.shape() != truth.shape() || prediction.shape() != brain_mask.shape()) {
        throw ValidationError("dsc_retention_curve: volume shapes disagree");
    }
    if (uncertainty.size() != prediction.size()) {
        throw ValidationError("dsc_retention_curve: uncertainty length does not match volume");
    }

    std::vector<std::size_t> in_mask;
    in_mask.reserve(prediction.size());
    for (std::size_t i = 0; i < prediction.size(); ++i) {
        if (brain_mask[i] != 0.0f) in_mask.push_back(i);
    }
    const std::size_t n = in_mask.size();

    // Most uncertain first; ties by ascending flat index.
    std::vector<std::size_t> order = in_mask;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (uncertainty[a] != uncertainty[b]) return uncertainty[a] > uncertainty[b];
        return a < b;
    });

    DiceCounts counts = dice_counts(prediction, truth, &brain_mask);
    const std::size_t step =
        static_cast<std::size_t>(std::ceil(tau * static_cast<double>(n)));

    std::vector<double> fractions{1.0};
    std::vector<double> values{counts.value()};
    std::size_t replaced = 0;
    for (std::size_t i = 1;; ++i) {
        const std::size_t goal = std::min(i * step, n);
        while (replaced < goal) {
            const std::size_t v = order[replaced];
            const bool p = prediction[v] != 0.0f;
            const bool t = truth[v] != 0.0f;
            if (p && !t) {
                --counts.fp;
            } else if (!p && t) {
                --counts.fn;
                ++counts.tp;
            }
            ++replaced;
        }
        const double fraction = 1.0 - static_cast<double>(i) * tau;
        if (fraction > 0.0) {
            fractions.push_back(fraction);
            values.push_back(counts.value());
        } else {
            fractions.push_back(0.0);
            values.push_back(counts.value());
            break;
        }
    }
    return make_curve(std::move(fractions), std::move(values));
}

RetentionCurve dsc_retention_curve(const Volume3D& prediction, const Volume3D& truth,
                                   const Volume3D& brain_mask, const Volume3D& uncertainty,
                                   double tau) {
    if (uncertainty.shape() != prediction.shape()) {
        throw ValidationError("dsc_retention_curve: uncertainty shape mismatch");
    }
    return dsc_retention_curve(prediction, truth, brain_mask, as_doubles(uncertainty), tau);
}

RetentionCurve f1_retention_curve(const LesionClassification& classification,
                                  std::span<const double> scores) {
    const std::size_t l = classification.predicted.size();
    if (scores.size() != l) {
        throw ValidationError("f1_retention_curve: " + std::to_string(scores.size()) +
                              " scores for " + std::to_string(l) + " predicted lesions");
    }
    const std::size_t tp = classification.tp_count();
    const std::size_t fn = classification.fn_count;

    if (l == 0) {
        const double v = lesion_f1(0, 0, fn);
        return make_curve({1.0, 0.0}, {v, v});
    }

    // Highest score rejected first; ties by ascending lesion label.
    std::vector<std::size_t> order(l);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return classification.predicted[a].label < classification.predicted[b].label;
    });

    std::size_t fp_remaining = classification.fp_count();
    std::vector<double> fractions, values;
    fractions.reserve(l + 1);
    values.reserve(l + 1);
    for (std::size_t i = 0; i <= l; ++i) {
        if (i > 0 && classification.predicted[order[i - 1]].status == LesionStatus::fp) {
            --fp_remaining;
        }
        fractions.push_back(static_cast<double>(l - i) / static_cast<double>(l));
        values.push_back(lesion_f1(tp, fp_remaining, fn));
    }
    return make_curve(std::move(fractions), std::move(values));
}

std::vector<double> uniform_grid(std::size_t nodes) {
    if (nodes < 2) {
        throw ValidationError("grid needs at least 2 nodes");
    }
    std::vector<double> grid(nodes);
    for (std::size_t j = 0; j < nodes; ++j) {
        grid[j] = static_cast<double>(nodes - 1 - j) / static_cast<double>(nodes - 1);
    }
    return grid;
}

RetentionCurve interpolate_curve(const RetentionCurve& curve, std::span<const double> grid) {
    if (grid.size() < 2 || grid.front() != 1.0 || grid.back() != 0.0) {
        throw ValidationError("interpolation grid must run from 1.0 to 0.0");
    }
    for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
        if (!(grid[i] > grid[i + 1])) {
            throw ValidationError("interpolation grid must be strictly decreasing");
        }
    }
    std::vector<double> values(grid.size());
    std::size_t seg = 0;
    for (std::size_t j = 0; j < grid.size(); ++j) {
        const double g = grid[j];
        while (seg + 2 < curve.fractions.size() && curve.fractions[seg + 1] >= g) ++seg;
        const double f0 = curve.fractions[seg];
        const double f1 = curve.fractions[seg + 1];
        if (g >= f0) {
            values[j] = curve.values[seg];
        } else if (g <= f1) {
            values[j] = curve.values[seg + 1];
        } else {
            const double t = (f0 - g) / (f0 - f1);
            values[j] = std::clamp(
                curve.values[seg] + (curve.values[seg + 1] - curve.values[seg]) * t, 0.0, 1.0);
        }
    }
    return make_curve(std::vector<double>(grid.begin(), grid.end()), std::move(values));
}

CurveBundle average_curves(const std::vector<std::pair<std::string, RetentionCurve>>& curves,
                           std::span<const double> grid) {
    if (curves.empty()) {
        throw ValidationError("average_curves: empty curve list");
    }
    CurveBundle bundle;
    bundle.per_patient.reserve(curves.size());
    std::vector<double> mean_values(grid.size(), 0.0);
    double auc_sum = 0.0;
    for (const auto& [id, curve] : curves) {
        RetentionCurve interp = interpolate_curve(curve, grid);
        for (std::size_t j = 0; j < grid.size(); ++j) mean_values[j] += interp.values[j];
        auc_sum += interp.auc;
        bundle.per_patient.emplace_back(id, std::move(interp));
    }
    const double count = static_cast<double>(curves.size());
    for (double& v : mean_values) v = std::clamp(v / count, 0.0, 1.0);
    bundle.mean_curve = make_curve(std::vector<double>(grid.begin(), grid.end()),
                                   std::move(mean_values));
    bundle.mean_auc = auc_sum / count;
    return bundle;
}

} // namespace uqeval
