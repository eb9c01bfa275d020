#include "kspace/lasso_logistic.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "kspace/error.hpp"
#include "kspace/rng.hpp"
#include "kspace/stats.hpp"

namespace kspace::lasso {
namespace {

struct Standardised {
  Eigen::MatrixXd z;
  Eigen::VectorXd mean;
  Eigen::VectorXd scale;  // 0 marks a constant column
};

Standardised standardise(const Eigen::MatrixXd& x) {
  Standardised s;
  const auto n = static_cast<double>(x.rows());
  s.mean = x.colwise().mean().transpose();
  s.scale.resize(x.cols());
  s.z.resize(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    const double sd = std::sqrt((x.col(j).array() - s.mean(j)).square().sum() / n);
    s.scale(j) = sd > 1e-12 ? sd : 0.0;
    if (s.scale(j) > 0.0) {
      s.z.col(j) = (x.col(j).array() - s.mean(j)) / sd;
    } else {
      s.z.col(j).setZero();
    }
  }
  return s;
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

void check_inputs(const Eigen::MatrixXd& x, std::span<const int> y) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error("lasso: row count mismatch");
  bool has0 = false, has1 = false;
  for (int v : y) {
    if (v != 0 && v != 1) throw Error("lasso: labels must be 0/1");
    (v ? has1 : has0) = true;
  }
  if (!has0 || !has1) throw ValidationError("lasso: both classes must be present");
}

double logit_base_rate(std::span<const int> y) {
  double pos = 0.0;
  for (int v : y) pos += v;
  const double p = pos / static_cast<double>(y.size());
  return std::log(p / (1.0 - p));
}

// Coordinate descent on standardised columns; beta/intercept warm-started.
void solve(const Eigen::MatrixXd& z, std::span<const int> y, double penalty, const PathOptions& opt,
           Eigen::VectorXd& beta, double& intercept) {
  const Eigen::Index n = z.rows(), p = z.cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::VectorXd eta(n), w(n), work(n), r(n);
  Eigen::VectorXd col_w2(p);
  for (int outer = 0; outer < opt.max_outer; ++outer) {
    eta = (z * beta).array() + intercept;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double pr = stats::logistic(eta(i));
      w(i) = std::max(pr * (1.0 - pr), 1e-5);
      work(i) = eta(i) + (y[static_cast<std::size_t>(i)] - pr) / w(i);
    }
    r = work - eta;  // weighted-least-squares residual
    for (Eigen::Index j = 0; j < p; ++j) col_w2(j) = (w.array() * z.col(j).array().square()).sum() * inv_n;
    const Eigen::VectorXd beta_outer = beta;
    const double intercept_outer = intercept;
    for (int inner = 0; inner < opt.max_inner; ++inner) {
      double max_change = 0.0;
      const double wsum = w.sum();
      const double d0 = (w.array() * r.array()).sum() / wsum;
      intercept += d0;
      r.array() -= d0;
      max_change = std::max(max_change, std::fabs(d0));
      for (Eigen::Index j = 0; j < p; ++j) {
        if (col_w2(j) <= 0.0) continue;
        const double old = beta(j);
        const double grad = (w.array() * z.col(j).array() * r.array()).sum() * inv_n + col_w2(j) * old;
        const double updated = soft_threshold(grad, penalty) / col_w2(j);
        if (updated != old) {
          r -= (updated - old) * z.col(j);
          beta(j) = updated;
          max_change = std::max(max_change, std::fabs(updated - old) * std::sqrt(col_w2(j)));
        }
      }
      if (max_change < opt.tolerance) break;
    }
    const double change = (beta - beta_outer).cwiseAbs().maxCoeff() + std::fabs(intercept - intercept_outer);
    if (p == 0 || change < opt.tolerance) break;
  }
}

LogisticFit unstandardise(const Standardised& s, const Eigen::VectorXd& beta, double intercept, double penalty) {
  LogisticFit f;
  f.penalty = penalty;
  f.weights = Eigen::VectorXd::Zero(beta.size());
  f.intercept = intercept;
  for (Eigen::Index j = 0; j < beta.size(); ++j) {
    if (s.scale(j) > 0.0 && beta(j) != 0.0) {
      f.weights(j) = beta(j) / s.scale(j);
      f.intercept -= f.weights(j) * s.mean(j);
    }
  }
  return f;
}

}  // namespace

double max_penalty(const Eigen::MatrixXd& x, std::span<const int> y) {
  check_inputs(x, y);
  const auto s = standardise(x);
  double ybar = 0.0;
  for (int v : y) ybar += v;
  ybar /= static_cast<double>(y.size());
  double best = 0.0;
  for (Eigen::Index j = 0; j < s.z.cols(); ++j) {
    double g = 0.0;
    for (Eigen::Index i = 0; i < s.z.rows(); ++i) g += s.z(i, j) * (y[static_cast<std::size_t>(i)] - ybar);
    best = std::max(best, std::fabs(g) / static_cast<double>(s.z.rows()));
  }
  // Nudged up so rounding in the solver cannot leave a weight just above zero.
  return best * (1.0 + 1e-9);
}

std::vector<double> penalty_grid(const Eigen::MatrixXd& x, std::span<const int> y, const PathOptions& options) {
  const double top = max_penalty(x, y);
  std::vector<double> grid;
  const int k = std::max(options.n_penalties, 1);
  for (int i = 0; i < k; ++i) {
    const double frac = k == 1 ? 0.0 : static_cast<double>(i) / (k - 1);
    grid.push_back(top * std::pow(options.min_ratio, frac));
  }
  return grid;
}

std::vector<LogisticFit> fit_path(const Eigen::MatrixXd& x, std::span<const int> y, std::span<const double> penalties,
                                  const PathOptions& options) {
  check_inputs(x, y);
  const auto s = standardise(x);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
  double intercept = logit_base_rate(y);
  std::vector<LogisticFit> out;
  out.reserve(penalties.size());
  for (double lam : penalties) {
    solve(s.z, y, lam, options, beta, intercept);
    out.push_back(unstandardise(s, beta, intercept, lam));
  }
  return out;
}

LogisticFit fit(const Eigen::MatrixXd& x, std::span<const int> y, double penalty, const PathOptions& options) {
  const double pen[] = {penalty};
  return fit_path(x, y, pen, options).front();
}

double deviance(const LogisticFit& f, const Eigen::MatrixXd& x, std::span<const int> y) {
  double dev = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double p = std::clamp(stats::logistic(f.intercept + x.row(i).dot(f.weights)), 1e-12, 1.0 - 1e-12);
    dev += y[static_cast<std::size_t>(i)] ? -std::log(p) : -std::log(1.0 - p);
  }
  return 2.0 * dev / static_cast<double>(std::max<Eigen::Index>(x.rows(), 1));
}

std::vector<int> group_folds(std::span<const std::string> groups, int folds, std::uint64_t seed) {
  if (folds < 2) throw Error("cross-validation needs at least two folds");
  std::map<std::string, int> ids;
  for (const auto& g : groups) ids.emplace(g, 0);
  std::vector<std::string> unique;
  for (const auto& [g, _] : ids) unique.push_back(g);
  Rng rng(seed);
  rng.shuffle(unique);
  for (std::size_t k = 0; k < unique.size(); ++k) ids[unique[k]] = static_cast<int>(k % static_cast<std::size_t>(folds));
  std::vector<int> out;
  out.reserve(groups.size());
  for (const auto& g : groups) out.push_back(ids[g]);
  return out;
}

CrossValidation cross_validate(const Eigen::MatrixXd& x, std::span<const int> y, std::span<const int> folds,
                               const PathOptions& options) {
  check_inputs(x, y);
  if (folds.size() != y.size()) throw Error("cross_validate: one fold id per row required");
  CrossValidation cv;
  cv.penalties = penalty_grid(x, y, options);
  const int k = *std::max_element(folds.begin(), folds.end()) + 1;
  const std::size_t m = cv.penalties.size();
  std::vector<std::vector<double>> fold_dev(static_cast<std::size_t>(k), std::vector<double>(m, NAN));

#pragma omp parallel for schedule(dynamic)
  for (int f = 0; f < k; ++f) {
    std::vector<Eigen::Index> train, test;
    for (std::size_t i = 0; i < folds.size(); ++i) (folds[i] == f ? test : train).push_back(static_cast<Eigen::Index>(i));
    if (test.empty()) continue;
    Eigen::MatrixXd xtr = x(train, Eigen::all), xte = x(test, Eigen::all);
    std::vector<int> ytr, yte;
    for (auto i : train) ytr.push_back(y[static_cast<std::size_t>(i)]);
    for (auto i : test) yte.push_back(y[static_cast<std::size_t>(i)]);
    const bool both = std::count(ytr.begin(), ytr.end(), 1) > 0 && std::count(ytr.begin(), ytr.end(), 0) > 0;
    if (!both) continue;
    const auto path = fit_path(xtr, ytr, cv.penalties, options);
    for (std::size_t j = 0; j < m; ++j) fold_dev[static_cast<std::size_t>(f)][j] = deviance(path[j], xte, yte);
  }

  cv.mean_deviance.assign(m, 0.0);
  cv.se_deviance.assign(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    std::vector<double> vals;
    for (const auto& fd : fold_dev) {
      if (!std::isnan(fd[j])) vals.push_back(fd[j]);
    }
    if (vals.empty()) throw Error("cross-validation produced no usable fold");
    cv.mean_deviance[j] = stats::mean(vals);
    cv.se_deviance[j] = std::sqrt(stats::variance(vals) / static_cast<double>(vals.size()));
  }
  cv.best = static_cast<std::size_t>(
      std::min_element(cv.mean_deviance.begin(), cv.mean_deviance.end()) - cv.mean_deviance.begin());
  const double limit = cv.mean_deviance[cv.best] + cv.se_deviance[cv.best];
  cv.chosen = cv.best;
  for (std::size_t j = 0; j <= cv.best; ++j) {  // grid is decreasing: first hit is the largest penalty
    if (cv.mean_deviance[j] <= limit) {
      cv.chosen = j;
      break;
    }
  }
  const std::span<const double> head(cv.penalties.data(), cv.chosen + 1);
  cv.model = fit_path(x, y, head, options).back();
  return cv;
}

}  // namespace kspace::lasso
