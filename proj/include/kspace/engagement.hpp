#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kspace/event_log.hpp"
#include "kspace/lasso_logistic.hpp"

namespace kspace {

/// Per answer step. NaN marks a value that cannot be computed.
struct EngagementStep {
  std::int64_t t = 0;
  std::string task;
  bool correct = false;
  double input_rate = NAN;           ///< inputs per minute
  double input_rate_variance = NAN;  ///< variance of instantaneous inputs/min
  double answer_ms = NAN;
  double help_rate = NAN;            ///< help calls per minute
  /// Resolved when a task is presented again after an error: 1 if the
  /// error did not recur, 0 if it did, NaN otherwise.
  double minor_error = NAN;
  double decay_s = NAN;       ///< seconds since the previous presentation of the task
  double interference = NAN;  ///< other answers since the previous presentation
};

std::vector<EngagementStep> extract_engagement_features(const Session& session);

inline constexpr double kDefaultSlowAlpha = 0.05;

struct SplitSeries {
  std::vector<double> trend;
  std::vector<double> local;
};

/// EMA trend and its residual. NaN inputs keep the previous trend and give a
/// NaN local value.
SplitSeries timescale_split(std::span<const double> series, double slow_alpha = kDefaultSlowAlpha);

/// Two-state HMM with diagonal Gaussian emissions; NaN dimensions are skipped.
class GaussianHmm2 {
public:
  using Sequence = std::vector<std::vector<double>>;  ///< [t][dim]

  GaussianHmm2() = default;
  explicit GaussianHmm2(std::size_t dims);

  std::size_t dims() const { return mean_[0].size(); }
  std::array<double, 2> initial{0.5, 0.5};
  std::array<std::array<double, 2>, 2> transition{{{0.9, 0.1}, {0.1, 0.9}}};
  std::vector<double>& mean(int s) { return mean_[s]; }
  std::vector<double>& var(int s) { return var_[s]; }
  const std::vector<double>& mean(int s) const { return mean_[s]; }
  const std::vector<double>& var(int s) const { return var_[s]; }

  /// Baum-Welch from a median split of the first dimension. Returns the
  /// final total log likelihood.
  double fit(const std::vector<Sequence>& sequences, int max_iter = 200, double tol = 1e-6);

  /// Per-step state posteriors. `smoothed` = forward-backward, otherwise
  /// forward filtering only.
  std::vector<std::array<double, 2>> posteriors(const Sequence& seq, bool smoothed = true) const;

  double log_likelihood(const Sequence& seq) const;

private:
  double log_emission(int s, const std::vector<double>& x) const;
  std::array<std::vector<double>, 2> mean_;
  std::array<std::vector<double>, 2> var_;
};

struct EngagementEstimate {
  double p_focused = 0.5;
  double p_receptive = 0.5;
  /// joint[f][r], index 1 = focused / receptive.
  std::array<std::array<double, 2>, 2> joint{{{0.25, 0.25}, {0.25, 0.25}}};
};

struct EngagementObservations {
  GaussianHmm2::Sequence focused;    ///< {input-rate variance local, minor-error local}
  GaussianHmm2::Sequence receptive;  ///< {help rate, correctness local}
};

EngagementObservations engagement_observations(const std::vector<EngagementStep>& steps,
                                               double slow_alpha = kDefaultSlowAlpha);

struct EngagementModel {
  GaussianHmm2 focused{2};
  GaussianHmm2 receptive{2};
  int focused_state = 0;    ///< HMM state meaning Focused
  int receptive_state = 0;  ///< HMM state meaning Receptive
  /// J / (M_f * M_r) from the fitted co-occurrence table, indexed [f][r].
  std::array<std::array<double, 2>, 2> cooccurrence{{{1.0, 1.0}, {1.0, 1.0}}};
  double slow_alpha = kDefaultSlowAlpha;

  Json to_json() const;
  static EngagementModel from_json(const Json& j);
};

EngagementModel fit_engagement(const std::vector<EngagementObservations>& sessions);
EngagementModel fit_engagement(const std::vector<std::vector<EngagementStep>>& sessions,
                               double slow_alpha = kDefaultSlowAlpha);

std::vector<EngagementEstimate> estimate_engagement(const EngagementModel& model,
                                                    const EngagementObservations& obs,
                                                    bool smoothed = true);
std::vector<EngagementEstimate> estimate_engagement(const EngagementModel& model,
                                                    const std::vector<EngagementStep>& steps,
                                                    bool smoothed = true);

/// Raw features whose trend/local parts enter the ERP model.
const std::vector<std::string>& erp_split_features();
/// Full ERP layout: "<feature>.trend", "<feature>.local" for each split
/// feature, then non_focused, non_receptive, decay_s, interference.
std::vector<std::string> erp_feature_names();

struct ErpModel {
  std::vector<std::string> feature_names;
  std::vector<double> weights;
  double intercept = 0.0;
  double penalty = 0.0;

  Json to_json() const;
  static ErpModel from_json(const Json& j);
};

struct ErpDataset {
  std::vector<std::string> feature_names;
  Eigen::MatrixXd x;
  std::vector<int> y;               ///< 1 = error repeated at next presentation
  std::vector<std::string> groups;  ///< student id per row
};

/// One row per error whose task is presented again later in the session.
/// Engagement indicators use filtered posteriors so no row sees its label.
/// NaN cells are replaced by the column mean.
ErpDataset build_erp_dataset(const std::vector<Session>& sessions, const EngagementModel& model);

struct ErpFitOptions {
  int folds = 10;
  std::uint64_t seed = 1;
  lasso::PathOptions path{.n_penalties = 30};
};

ErpModel fit_erp(const ErpDataset& data, const ErpFitOptions& options = {},
                 lasso::CrossValidation* cv_out = nullptr);

/// Logistic of the linear score. Throws when the dimension is wrong.
double predict_erp(const ErpModel& model, std::span<const double> features);

/// Builds a feature vector in the model layout from named parts.
std::vector<double> erp_features(std::span<const double> split_trend_local, double non_focused,
                                 double non_receptive, double decay_s, double interference);

}  // namespace kspace
