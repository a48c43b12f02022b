#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "beliefspace/corpus.hpp"
#include "beliefspace/predict.hpp"

namespace beliefspace {

// Relative dissonance (d_max - d_min) / d_min. Requires 0 < d_min <= d_max;
// d_min == 0 is undefined and callers must exclude such records instead.
double d_star(double d_min, double d_max);

struct DstarCurve {
    double width = 0.0;
    double range_max = 0.0;
    std::vector<Bin> bins; // [0, range_max) in steps of width
    size_t overflow_n = 0; // d_star >= range_max
    std::optional<double> overflow_accuracy;
    size_t excluded_dmin_zero = 0;
    // Count-weighted least-squares slope of accuracy over bin centers within
    // range; the overflow bucket has no center and is excluded from the fit.
    std::optional<double> slope;
};

DstarCurve accuracy_vs_dstar(std::span<const PredictionOutcome> outcomes, double bin_width = 0.1,
                             double range_max = 1.2);

enum class GroupBy { Party, Religion };

struct GroupBinTest {
    double lo = 0.0;
    double hi = 0.0;
    size_t n_a = 0;
    size_t n_b = 0;
    bool tested = false; // both groups need >= 2 outcomes in the bin
    double t = 0.0;
    double p_value = 1.0; // Welch two-sample, two-sided
};

struct GroupCompareResult {
    std::string group_a;
    std::string group_b;
    DstarCurve curve_a;
    DstarCurve curve_b;
    std::vector<GroupBinTest> tests; // per bin within range
};

// Splits outcomes by the users' self-reported party or religion and compares
// binned accuracy-vs-d* curves. Groups default to the two most frequent
// values among the outcome users. P-values are reported, never thresholded.
GroupCompareResult group_compare(std::span<const PredictionOutcome> outcomes,
                                 const ProfileSet& profiles, GroupBy grouping,
                                 double bin_width = 0.1, double range_max = 1.2,
                                 std::optional<std::pair<std::string, std::string>> groups =
                                     std::nullopt);

struct CategoryDissonance {
    std::string category;
    double mean_dstar = 0.0;
    double macro_f1 = 0.0;
    size_t n = 0; // outcomes with defined d_star
};

struct CategoryCorrelation {
    std::vector<CategoryDissonance> rows; // sorted by category
    double pearson_r = 0.0;
};

// Per-category mean d* against per-category macro-F1 with the Pearson
// coefficient across categories. Needs >= 3 categories with defined d*.
CategoryCorrelation category_dstar_correlation(std::span<const PredictionOutcome> outcomes);

} // namespace beliefspace
