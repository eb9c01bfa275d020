#pragma once

#include <filesystem>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "kspace/event_log.hpp"

namespace kspace {

enum class FeatureKind { Performance, AnswerTime, TypicalMistake, Strategy };

std::string_view to_string(FeatureKind k);
FeatureKind feature_kind_from(std::string_view prefix);  ///< "P", "AT", "TM", "SN"

/// Bank entry. The id "<kind>/<source>" also says how to compute the value
/// from a log: P = share correct on skill, AT = mean answer ms on skill,
/// TM = share of answers with that typical error, SN = share using strategy.
struct ScreenFeature {
  std::string id;
  FeatureKind kind = FeatureKind::Performance;
  std::string source;
  std::string group_hint;
  double time_min = 1.0;  ///< gameplay minutes needed to observe it
};

struct FeatureBank {
  std::vector<ScreenFeature> features;

  const ScreenFeature* find(std::string_view id) const;
  Json to_json() const;
  static FeatureBank from_json(const Json& j);
  static FeatureBank load(const std::filesystem::path& path);
};

ScreenFeature parse_feature_id(std::string_view id);

/// Students x features, y = 1 for DD.
struct ScreenData {
  std::vector<std::string> feature_ids;
  std::vector<std::string> student_ids;
  Eigen::MatrixXd x;
  std::vector<int> y;
};

/// Feature values per student from answer events. Missing values are NaN.
ScreenData extract_screen_features(const std::vector<Event>& events, const std::vector<std::string>& feature_ids);

struct SelectedFeature {
  std::string id;
  double t = 0.0;
  double p_value = 1.0;
  std::vector<std::string> group;  ///< ids merged into this representative's group
};

struct SelectOptions {
  double correlation_threshold = 0.8;
  /// Keep only representatives with p below alpha (Bonferroni-adjusted over
  /// the groups when requested). 1 keeps everything.
  double alpha = 1.0;
  bool bonferroni = false;
};

/// Average-linkage grouping on |r|, smallest Welch p per group, sorted by p
/// then id. Zero-variance features are dropped.
std::vector<SelectedFeature> select_features(const ScreenData& data, const SelectOptions& options = {});

struct ScreenerModel {
  std::vector<std::string> features;
  std::vector<double> mean_dd, var_dd, mean_typ, var_typ;
  std::vector<double> time_min;
  double prior_dd = 0.5;
  double epsilon = 0.01;
  int patience = 3;

  std::size_t size() const { return features.size(); }
  double full_minutes() const;
  Json to_json() const;
  static ScreenerModel from_json(const Json& j);
};

inline constexpr double kScreenerVarianceFloor = 1e-6;

/// Gaussian class conditionals per feature in `ordering`; priors from class
/// frequencies; times from `bank` (1 minute when absent).
ScreenerModel fit_screener(const ScreenData& data, const std::vector<std::string>& ordering,
                           const FeatureBank* bank = nullptr);

struct ScreenResult {
  bool at_risk = false;
  double posterior = 0.0;
  std::vector<double> trace;  ///< posterior after each consumed feature
  std::size_t features_used = 0;
  double minutes = 0.0;
};

/// Sequential update in model order. Stops once |p_t - p_{t-1}| < epsilon
/// for `patience` consecutive features (p_0 is the prior). NaN values are
/// consumed without changing the posterior.
ScreenResult screen(const ScreenerModel& model, std::span<const double> values);
/// Same, with ids; throws ValidationError if the ids deviate from model order.
ScreenResult screen(const ScreenerModel& model, const std::vector<std::pair<std::string, double>>& stream);

/// Values of `data` rearranged into model order (NaN for absent columns).
std::vector<std::vector<double>> model_rows(const ScreenerModel& model, const ScreenData& data);

struct ScreenEvaluation {
  double sensitivity = 0.0;
  double specificity = 0.0;
  double accuracy = 0.0;
  double mean_minutes = 0.0;
  double mean_features = 0.0;
  double full_minutes = 0.0;
  double fraction_by_minute = 0.0;  ///< share of students classified within `by_minute`
  std::vector<ScreenResult> results;
};

ScreenEvaluation evaluate(const ScreenerModel& model, const ScreenData& heldout,
                          double by_minute = std::numeric_limits<double>::infinity());

}  // namespace kspace
