#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "beliefspace/errors.hpp"

namespace beliefspace {

// Fractional (average) ranks, 1-based; ties share the mean of their ranks.
std::vector<double> average_ranks(std::span<const double> values);

// Product-moment correlation; throws DataError on zero variance or length
// mismatch / length < 3.
double pearson(std::span<const double> x, std::span<const double> y);

// Pearson on average ranks.
double spearman(std::span<const double> x, std::span<const double> y);

struct WelchResult {
    double t = 0.0;
    double df = 0.0;
    double p_value = 1.0; // two-sided
};

// Welch's unequal-variance t-test on two samples (n >= 2 each).
WelchResult welch_t_test(std::span<const double> a, std::span<const double> b);

// Regularized incomplete beta I_x(a, b); used for the Student-t tail.
double incomplete_beta(double a, double b, double x);

// Two-sided Student-t tail probability P(|T| >= t) with df degrees of freedom.
double student_t_two_sided(double t, double df);

// Weighted least squares slope of y against x. Throws DataError when fewer
// than two points carry weight or the weighted x variance is zero.
double weighted_ls_slope(std::span<const double> x, std::span<const double> y,
                         std::span<const double> w);

double mean_of(std::span<const double> v);
// Sample standard deviation (n-1); 0 for n < 2.
double sample_stddev(std::span<const double> v);

} // namespace beliefspace
