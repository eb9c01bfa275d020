#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kspace/embedding.hpp"
#include "kspace/event_log.hpp"
#include "kspace/skill_net.hpp"

namespace kspace {

/// Feature vector per student; NaN marks a feature not yet observed.
struct StudentProfile {
  std::string student_id;
  std::vector<double> features;
  std::vector<double> skill_passed;  ///< 0/1 per skill, used for subgroup templates
};

struct ProfileSet {
  std::vector<std::string> feature_names;
  std::vector<std::string> skill_ids;
  std::vector<StudentProfile> students;
};

/// A skill counts as passed once its last three answers are correct.
/// `max_sessions` > 0 keeps only each student's first sessions.
ProfileSet build_profiles(const std::vector<Event>& events, const SkillNet& net, int max_sessions = 0);

struct SelectKResult {
  int k = 0;
  std::vector<int> ks;
  std::vector<double> bic;
};

/// Spherical Gaussian mixture per k from K-Means hard assignments:
/// BIC = -2 logL + ((k-1) + k*d + k) ln n, argmin over [k_min, k_max].
SelectKResult select_k(const Eigen::MatrixXd& points, int k_min, int k_max, std::uint64_t seed = 1);

struct ClusterOptions {
  int dims = 3;
  int k_min = 2;
  int k_max = 10;
  int fixed_k = 0;  ///< >0 skips select_k
  int restarts = 20;
  std::uint64_t seed = 1;
};

struct ClusterModel {
  std::vector<std::string> feature_names;  ///< kept features
  Eigen::VectorXd mean;                    ///< training means (imputation and centring)
  Eigen::VectorXd scale;                   ///< training standard deviations
  Eigen::MatrixXd train;                   ///< standardised training rows
  Embedding basis;
  Eigen::MatrixXd centroids;               ///< k x d
  std::vector<std::string> skill_ids;
  Eigen::MatrixXd templates;               ///< k x skills, mean pass rate per subgroup
  SelectKResult selection;

  int k() const { return static_cast<int>(centroids.rows()); }
  Json to_json() const;
  static ClusterModel from_json(const Json& j);
};

struct ClusterResult {
  ClusterModel model;
  std::vector<int> labels;            ///< per input profile
  std::vector<std::string> warnings;  ///< dropped features, reduced dimension
};

ClusterResult cluster_offline(const ProfileSet& profiles, const ClusterOptions& options = {});

struct Classification {
  int subgroup = 0;
  double confidence = 0.0;
  std::vector<double> probabilities;
};

/// Values are matched to the model by feature name; absent or NaN ones take
/// the training mean.
Classification classify_online(const ClusterModel& model, const std::vector<std::string>& names,
                               const std::vector<double>& features);

/// Stored pass-rate template of a subgroup.
std::vector<double> predict_from_subgroup(const ClusterModel& model, int subgroup);

/// Skills whose template pass rate is below 0.5.
std::vector<std::string> knowledge_gaps(const ClusterModel& model, int subgroup);

}  // namespace kspace
