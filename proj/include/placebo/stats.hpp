#pragma once
// Small numerical helpers: logistic link, normal quantile, sample quantiles.

#include <cstddef>
#include <vector>

namespace placebo::stats {

// expit(x) = 1 / (1 + exp(-x)), overflow-safe on both tails.
double expit(double x);

// log(1 + exp(x)) without overflow.
double log1pexp(double x);

// Inverse standard-normal CDF (Wichura's AS 241 rational approximation,
// double-precision branch). Requires p in (0, 1).
double inv_normal_cdf(double p);

// Upper z-value for a two-sided (1 - alpha) normal interval.
double z_two_sided(double alpha);

// Sample quantile over sorted values: the q-quantile of m values is the
// element at 1-based index ceil(q * m), clamped to [1, m]. This is the
// convention used by every percentile interval in this library.
double quantile_sorted(const std::vector<double>& sorted, double q);

// Convenience: copies, sorts, then applies quantile_sorted.
double quantile(std::vector<double> values, double q);

// Standard median (mean of the two middle order statistics for even n).
double median(std::vector<double> values);

double mean(const std::vector<double>& values);

// Unbiased (n-1 denominator) standard deviation.
double sample_sd(const std::vector<double>& values);

}  // namespace placebo::stats
