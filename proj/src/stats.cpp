#include "uqeval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "uqeval/errors.hpp"
#include "uqeval/rng.hpp"

namespace uqeval {

BootstrapResult bootstrap_se(std::span<const double> values, std::size_t sample_size,
                             std::size_t repetitions, std::uint64_t seed) {
    if (values.empty()) {
        throw ValidationError("bootstrap_se: empty input");
    }
    if (sample_size < 1 || repetitions < 1) {
        throw ValidationError("bootstrap_se: sample_size and repetitions must be >= 1");
    }
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();

    std::vector<double> rep_means(repetitions);
    for (std::size_t r = 0; r < repetitions; ++r) {
        rng::Stream stream(rng::derive(seed, "bootstrap", r));
        double sum = 0.0;
        for (std::size_t d = 0; d < sample_size; ++d) {
            sum += sorted[stream.bounded(n)];
        }
        rep_means[r] = sum / static_cast<double>(sample_size);
    }

    // Shifted two-pass variance: exact zero when every repetition agrees.
    const double shift = rep_means[0];
    double dbar = 0.0;
    for (double m : rep_means) dbar += m - shift;
    dbar /= static_cast<double>(repetitions);
    double var = 0.0;
    for (double m : rep_means) {
        const double d = (m - shift) - dbar;
        var += d * d;
    }
    var /= static_cast<double>(repetitions);

    BootstrapResult result;
    result.mean = std::accumulate(sorted.begin(), sorted.end(), 0.0) /
                  static_cast<double>(n);
    result.standard_error = std::sqrt(var);
    result.sample_size = sample_size;
    result.repetitions = repetitions;
    result.seed = seed;
    return result;
}

namespace {

// Average ranks of |d|, plus the tie-group sizes for the variance correction.
struct Ranked {
    std::vector<double> ranks; // aligned with diffs
    std::vector<std::size_t> tie_groups;
};

Ranked rank_abs(const std::vector<double>& diffs) {
    const std::size_t n = diffs.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(diffs[a]) < std::abs(diffs[b]);
    });

    Ranked out;
    out.ranks.assign(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n &&
               std::abs(diffs[order[j + 1]]) == std::abs(diffs[order[i]])) {
            ++j;
        }
        const double avg = static_cast<double>(i + 1 + j + 1) / 2.0;
        for (std::size_t t = i; t <= j; ++t) out.ranks[order[t]] = avg;
        out.tie_groups.push_back(j - i + 1);
        i = j + 1;
    }
    return out;
}

// P(W+ >= observed) over all 2^n equally likely sign assignments, counting
// subset sums of the doubled (hence integral) ranks.
double exact_p_greater(const std::vector<double>& ranks, double w_plus) {
    std::vector<std::size_t> scaled(ranks.size());
    std::size_t total = 0;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        scaled[i] = static_cast<std::size_t>(std::llround(2.0 * ranks[i]));
        total += scaled[i];
    }
    std::vector<double> count(total + 1, 0.0);
    count[0] = 1.0;
    for (std::size_t r : scaled) {
        for (std::size_t s = total; s >= r; --s) {
            count[s] += count[s - r];
        }
    }
    const auto threshold = static_cast<std::size_t>(std::llround(2.0 * w_plus));
    double hits = 0.0;
    for (std::size_t s = threshold; s <= total; ++s) hits += count[s];
    return hits / std::exp2(static_cast<double>(ranks.size()));
}

} // namespace

WilcoxonResult wilcoxon_one_sided(std::span<const double> a, std::span<const double> b,
                                  std::size_t exact_threshold) {
    if (a.size() != b.size()) {
        throw ValidationError("wilcoxon: length mismatch (" + std::to_string(a.size()) +
                              " vs " + std::to_string(b.size()) + ")");
    }
    if (a.empty()) {
        throw ValidationError("wilcoxon: empty input");
    }
    std::vector<double> diffs;
    diffs.reserve(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        if (d != 0.0) diffs.push_back(d);
    }
    if (diffs.empty()) {
        throw ValidationError("wilcoxon: all differences are zero, test undefined");
    }
    const std::size_t n = diffs.size();
    const Ranked ranked = rank_abs(diffs);

    double w_plus = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (diffs[i] > 0.0) w_plus += ranked.ranks[i];
    }

    WilcoxonResult result;
    result.statistic = w_plus;
    result.n_effective = n;
    if (n <= exact_threshold) {
        result.exact = true;
        result.p_value = exact_p_greater(ranked.ranks, w_plus);
    } else {
        result.exact = false;
        const double nn = static_cast<double>(n);
        const double mean = nn * (nn + 1.0) / 4.0;
        double tie_term = 0.0;
        for (std::size_t t : ranked.tie_groups) {
            const double td = static_cast<double>(t);
            tie_term += td * td * td - td;
        }
        const double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0 - tie_term / 48.0;
        const double z = (w_plus - mean - 0.5) / std::sqrt(var);
        result.p_value = std::clamp(0.5 * std::erfc(z / std::sqrt(2.0)), 0.0, 1.0);
    }
    return result;
}

} // namespace uqeval
