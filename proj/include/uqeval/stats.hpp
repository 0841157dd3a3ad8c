#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace uqeval {

struct BootstrapResult {
    double mean = 0.0;
    double standard_error = 0.0;
    std::size_t sample_size = 0;
    std::size_t repetitions = 0;
    std::uint64_t seed = 0;
};

// Resample `sample_size` values with replacement `repetitions` times; the
// standard error is the population standard deviation of the resample means.
// Draws index the sorted multiset, so the result is input-order invariant.
BootstrapResult bootstrap_se(std::span<const double> values, std::size_t sample_size,
                             std::size_t repetitions, std::uint64_t seed);

struct WilcoxonResult {
    double statistic = 0.0;       // W+, signed-rank sum of positive differences
    double p_value = 1.0;
    std::size_t n_effective = 0;  // pairs left after dropping zero differences
    bool exact = false;

    static constexpr std::string_view alternative = "greater";
};

// One-sided paired signed-rank test of median(a - b) > 0. Zero differences
// are dropped; |d| ties get average ranks. Up to `exact_threshold` effective
// pairs the p-value is exact over all 2^n sign assignments (tie-aware);
// beyond that a normal approximation with tie-corrected variance and
// continuity correction is used.
WilcoxonResult wilcoxon_one_sided(std::span<const double> a, std::span<const double> b,
                                  std::size_t exact_threshold = 20);

} // namespace uqeval
