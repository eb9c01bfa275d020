#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace kspace::lasso {

/// Weights on the original (unstandardised) feature scale.
struct LogisticFit {
  Eigen::VectorXd weights;
  double intercept = 0.0;
  double penalty = 0.0;
};

struct PathOptions {
  int n_penalties = 40;
  double min_ratio = 1e-3;  ///< smallest penalty as a fraction of the largest
  int max_outer = 100;      ///< IRLS iterations per penalty
  int max_inner = 1000;     ///< coordinate sweeps per IRLS step
  double tolerance = 1e-7;
};

/// Penalty at which every weight is exactly zero (standardised features).
double max_penalty(const Eigen::MatrixXd& x, std::span<const int> y);

/// Geometric grid from max_penalty down to max_penalty * min_ratio.
std::vector<double> penalty_grid(const Eigen::MatrixXd& x, std::span<const int> y, const PathOptions& options);

/// L1-penalised logistic regression by IRLS with cyclic coordinate descent,
/// minimising  -loglik / n + penalty * ||w||_1  on standardised features.
/// Returns one fit per penalty (warm-started along the path).
std::vector<LogisticFit> fit_path(const Eigen::MatrixXd& x, std::span<const int> y,
                                  std::span<const double> penalties, const PathOptions& options = {});

LogisticFit fit(const Eigen::MatrixXd& x, std::span<const int> y, double penalty, const PathOptions& options = {});

/// Mean binomial deviance of a fit on (x, y).
double deviance(const LogisticFit& f, const Eigen::MatrixXd& x, std::span<const int> y);

/// Fold index per row; rows sharing a group id always share a fold.
std::vector<int> group_folds(std::span<const std::string> groups, int folds, std::uint64_t seed);

struct CrossValidation {
  std::vector<double> penalties;
  std::vector<double> mean_deviance;
  std::vector<double> se_deviance;
  std::size_t best = 0;    ///< minimum mean deviance
  std::size_t chosen = 0;  ///< one-standard-error rule
  LogisticFit model;       ///< refit on all rows at penalties[chosen]
};

CrossValidation cross_validate(const Eigen::MatrixXd& x, std::span<const int> y, std::span<const int> folds,
                               const PathOptions& options = {});

}  // namespace kspace::lasso
