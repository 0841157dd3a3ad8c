// Independent reference implementations used only by tests. They deliberately
// take different algorithmic routes than the library: KL-decomposition
// formulas for the ensemble measures, from-scratch recomputation for
// retention curves, label propagation for connected components and literal
// 2^n enumeration for the signed-rank test.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <vector>

#include "uqeval/lesion.hpp"
#include "uqeval/retention.hpp"
#include "uqeval/volume.hpp"

namespace oracles {

struct VoxelMeasures {
    double eoe, nc, exe, mi, epkl, rmi;
};

// Ensemble measures via the KL-divergence route: MI as the mean KL between
// members and their mean, EPKL as the mean pairwise KL over ordered pairs.
inline VoxelMeasures voxel_measures(std::vector<double> probs, double eps = 1e-8) {
    const auto k = static_cast<double>(probs.size());
    for (double& p : probs) p = std::clamp(p, eps, 1.0 - eps);
    double pbar = 0.0;
    for (double p : probs) pbar += p;
    pbar /= k;

    const auto entropy = [](double p) {
        return -(p * std::log(p) + (1.0 - p) * std::log(1.0 - p));
    };
    VoxelMeasures m{};
    m.eoe = entropy(pbar);
    m.nc = -std::max(pbar, 1.0 - pbar);
    m.exe = 0.0;
    for (double p : probs) m.exe += entropy(p);
    m.exe /= k;

    m.mi = 0.0;
    for (double p : probs) {
        m.mi += p * std::log(p / pbar) + (1.0 - p) * std::log((1.0 - p) / (1.0 - pbar));
    }
    m.mi /= k;

    m.epkl = 0.0;
    for (double pi : probs) {
        for (double pj : probs) {
            m.epkl += pi * std::log(pi / pj) + (1.0 - pi) * std::log((1.0 - pi) / (1.0 - pj));
        }
    }
    m.epkl /= k * k;
    m.rmi = m.epkl - m.mi;
    return m;
}

inline double trapezoid(const std::vector<double>& fr, const std::vector<double>& vals) {
    double auc = 0.0;
    for (std::size_t i = 0; i + 1 < fr.size(); ++i) {
        auc += (fr[i] - fr[i + 1]) * (vals[i] + vals[i + 1]) * 0.5;
    }
    return auc;
}

// From-scratch DSC retention curve: at every point rebuild the replaced
// prediction and recount.
inline uqeval::RetentionCurve brute_dsc_rc(const std::vector<int>& pred,
                                           const std::vector<int>& truth,
                                           const std::vector<int>& mask,
                                           const std::vector<double>& u, double tau) {
    std::vector<std::size_t> in_mask;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        if (mask[i]) in_mask.push_back(i);
    }
    const std::size_t n = in_mask.size();
    std::vector<std::size_t> order = in_mask;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (u[a] != u[b]) return u[a] > u[b];
        return a < b;
    });
    const auto step = static_cast<std::size_t>(std::ceil(tau * static_cast<double>(n)));

    std::vector<double> fractions, values;
    for (std::size_t i = 0;; ++i) {
        std::vector<int> replaced = pred;
        const std::size_t count = std::min(i * step, n);
        for (std::size_t j = 0; j < count; ++j) replaced[order[j]] = truth[order[j]];
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t v : in_mask) {
            tp += replaced[v] && truth[v];
            fp += replaced[v] && !truth[v];
            fn += !replaced[v] && truth[v];
        }
        const double value =
            (tp + fp + fn) == 0
                ? 1.0
                : 2.0 * static_cast<double>(tp) /
                      (2.0 * static_cast<double>(tp) + static_cast<double>(fp) +
                       static_cast<double>(fn));
        const double fraction = 1.0 - static_cast<double>(i) * tau;
        if (fraction > 0.0) {
            fractions.push_back(fraction);
            values.push_back(value);
        } else {
            fractions.push_back(0.0);
            values.push_back(value);
            break;
        }
    }
    uqeval::RetentionCurve curve{fractions, values, trapezoid(fractions, values)};
    return curve;
}

// From-scratch F1 retention curve over explicit statuses (+1 = TP, 0 = FP).
inline uqeval::RetentionCurve brute_f1_rc(const std::vector<int>& is_tp,
                                          const std::vector<double>& scores,
                                          std::size_t fn_count,
                                          const std::vector<int>& labels) {
    const std::size_t l = is_tp.size();
    std::vector<std::size_t> order(l);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return labels[a] < labels[b];
    });
    std::vector<double> fractions, values;
    for (std::size_t i = 0; i <= l; ++i) {
        std::size_t tp = 0, fp = 0;
        for (std::size_t j = 0; j < l; ++j) tp += is_tp[j]; // rejected TPs stay TP
        for (std::size_t j = i; j < l; ++j) fp += !is_tp[order[j]];
        const double denom = 2.0 * static_cast<double>(tp) + static_cast<double>(fn_count) +
                             static_cast<double>(fp);
        values.push_back(denom == 0.0 ? 1.0 : 2.0 * static_cast<double>(tp) / denom);
        fractions.push_back(l == 0 ? 1.0
                                   : static_cast<double>(l - i) / static_cast<double>(l));
    }
    if (l == 0) {
        fractions.push_back(0.0);
        values.push_back(values.front());
    }
    uqeval::RetentionCurve curve{fractions, values, trapezoid(fractions, values)};
    return curve;
}

// Connected components by iterated min-label propagation until fixpoint.
inline std::vector<int> propagate_components(const uqeval::Shape& shape,
                                             const std::vector<int>& mask, int connectivity) {
    const auto d = static_cast<std::ptrdiff_t>(shape.depth);
    const auto h = static_cast<std::ptrdiff_t>(shape.height);
    const auto w = static_cast<std::ptrdiff_t>(shape.width);
    std::vector<int> label(mask.size(), 0);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        label[i] = mask[i] ? static_cast<int>(i) + 1 : 0;
    }
    const int max_l1 = connectivity == 6 ? 1 : connectivity == 18 ? 2 : 3;
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::ptrdiff_t z = 0; z < d; ++z) {
            for (std::ptrdiff_t y = 0; y < h; ++y) {
                for (std::ptrdiff_t x = 0; x < w; ++x) {
                    const std::size_t i = shape.flat(static_cast<std::size_t>(z),
                                                     static_cast<std::size_t>(y),
                                                     static_cast<std::size_t>(x));
                    if (!mask[i]) continue;
                    for (int dz = -1; dz <= 1; ++dz) {
                        for (int dy = -1; dy <= 1; ++dy) {
                            for (int dx = -1; dx <= 1; ++dx) {
                                const int l1 = std::abs(dz) + std::abs(dy) + std::abs(dx);
                                if (l1 == 0 || l1 > max_l1) continue;
                                const std::ptrdiff_t nz = z + dz, ny = y + dy, nx = x + dx;
                                if (nz < 0 || ny < 0 || nx < 0 || nz >= d || ny >= h ||
                                    nx >= w) {
                                    continue;
                                }
                                const std::size_t j =
                                    shape.flat(static_cast<std::size_t>(nz),
                                               static_cast<std::size_t>(ny),
                                               static_cast<std::size_t>(nx));
                                if (mask[j] && label[j] < label[i]) {
                                    label[i] = label[j];
                                    changed = true;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    return label;
}

// Groups voxels of equal propagated label, ordered by smallest flat index.
inline std::vector<std::vector<std::size_t>> oracle_components(const uqeval::Shape& shape,
                                                               const std::vector<int>& mask,
                                                               int connectivity) {
    const std::vector<int> label = propagate_components(shape, mask, connectivity);
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < label.size(); ++i) {
        if (label[i]) groups[label[i]].push_back(i);
    }
    std::vector<std::vector<std::size_t>> out;
    for (auto& [l, voxels] : groups) out.push_back(std::move(voxels));
    std::sort(out.begin(), out.end(),
              [](const auto& a, const auto& b) { return a.front() < b.front(); });
    return out;
}

// One-sided signed-rank p-value by literal enumeration of all 2^n sign
// assignments over the observed average ranks.
inline double wilcoxon_enumeration(const std::vector<double>& diffs) {
    std::vector<double> nonzero;
    for (double d : diffs) {
        if (d != 0.0) nonzero.push_back(d);
    }
    const std::size_t n = nonzero.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(nonzero[a]) < std::abs(nonzero[b]);
    });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && std::abs(nonzero[order[j + 1]]) == std::abs(nonzero[order[i]])) ++j;
        const double avg = static_cast<double>(i + 1 + j + 1) / 2.0;
        for (std::size_t t = i; t <= j; ++t) ranks[order[t]] = avg;
        i = j + 1;
    }
    double observed = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        if (nonzero[t] > 0.0) observed += ranks[t];
    }
    std::size_t hits = 0;
    const std::uint64_t total = std::uint64_t{1} << n;
    for (std::uint64_t bits = 0; bits < total; ++bits) {
        double w = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            if (bits & (std::uint64_t{1} << t)) w += ranks[t];
        }
        if (w >= observed) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(total);
}

} // namespace oracles
