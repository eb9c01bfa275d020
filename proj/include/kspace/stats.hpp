#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace kspace::stats {

double mean(std::span<const double> x);
/// Unbiased sample variance; 0 for fewer than two values.
double variance(std::span<const double> x);
double median(std::vector<double> x);

/// Least-squares slope of x against its index 0..n-1. 0 when n < 2.
double least_squares_slope(std::span<const double> x);

double pearson(std::span<const double> x, std::span<const double> y);

struct TTestResult {
  double t = 0.0;
  double dof = 0.0;
  double p_value = 1.0;
};

/// Two-sided unpaired t-test with unequal variances (Welch).
TTestResult welch_t_test(std::span<const double> a, std::span<const double> b);

/// Adjusted Rand index between two labelings of the same items.
double adjusted_rand_index(std::span<const int> a, std::span<const int> b);

/// Area under the ROC curve (ties counted as one half).
double roc_auc(std::span<const double> scores, std::span<const int> labels);

inline double logistic(double z) {
  return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace kspace::stats
