#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kspace/event_log.hpp"

namespace kspace {

struct StateMapping {
  std::vector<std::string> states;
  std::map<EventKind, int> index;

  static StateMapping navigation();  ///< Game, Shop, Performance
  static StateMapping input();       ///< Input, InvalidInput, Backspace, Enter
};

struct BehaviorChain {
  std::vector<std::string> states;
  Eigen::MatrixXd transition;  ///< row-stochastic
  Eigen::VectorXd occupancy;   ///< sums to 1
};

inline constexpr double kChainSmoothing = 0.5;

/// Transition counts between consecutive mapped events plus `smoothing`
/// per cell. Unmapped events are skipped.
BehaviorChain estimate_chain(const std::vector<Event>& events, const StateMapping& mapping,
                             double smoothing = kChainSmoothing);

/// Occupancy-weighted squared difference of transition rows.
double chain_distance_sq(const BehaviorChain& a, const BehaviorChain& b);
double chain_similarity(const BehaviorChain& a, const BehaviorChain& b, double sigma);

/// Pairwise similarities. sigma <= 0 picks the median pairwise distance
/// (1 if that is zero); the value used is written to `sigma_used`.
Eigen::MatrixXd similarity_matrix(const std::vector<BehaviorChain>& chains, double sigma = 0.0,
                                  double* sigma_used = nullptr);

struct SmoothedSeries {
  std::vector<Eigen::MatrixXd> smoothed;
  std::vector<double> gamma;  ///< weight on the previous S; gamma[0] = 0
};

/// S_t = (1 - g_t) W_t + g_t S_{t-1}, g_t = nu_t / (nu_t + eta_t) with nu_t the
/// running median of ||W_k - W_{k-1}||_F and eta_t = ||W_t - S_{t-1}||_F.
SmoothedSeries adaptive_smooth(const std::vector<Eigen::MatrixXd>& w);
SmoothedSeries fixed_smooth(const std::vector<Eigen::MatrixXd>& w, double gamma);

struct SessionClustering {
  std::vector<int> labels;
  Eigen::MatrixXd points;     ///< embedding of 1 - S
  Eigen::MatrixXd centroids;  ///< k x d
  int empty_clusters = 0;
};

/// MDS (d = 3) of 1 - S then K-Means. When `reference` has the same row
/// count the embedding is first rotated onto it.
SessionClustering cluster_sessions(const Eigen::MatrixXd& s, int k, std::uint64_t seed = 1,
                                   const Eigen::MatrixXd* reference = nullptr);

/// Renames labels so matched clusters keep the previous step's name. Matching
/// minimises total centroid distance; unmatched clusters get fresh ids.
std::vector<std::vector<int>> align_labels(const std::vector<std::vector<int>>& labels,
                                           const std::vector<Eigen::MatrixXd>& centroids);

enum class SmoothingMode { Adaptive, Fixed, None };

struct TemporalOptions {
  int k = 3;
  SmoothingMode mode = SmoothingMode::Adaptive;
  double fixed_gamma = 0.9;
  double sigma = 0.0;
  std::uint64_t seed = 1;
};

struct TemporalResult {
  std::vector<std::vector<int>> labels;  ///< [t][student], aligned
  std::vector<std::vector<int>> raw_labels;
  std::vector<double> gamma;
  std::vector<int> empty_clusters;
};

/// chains[t][i] is student i's chain for session index t.
TemporalResult temporal_cluster(const std::vector<std::vector<BehaviorChain>>& chains,
                                const TemporalOptions& options = {});

/// Chains per session index for every student (students sorted by id);
/// students lacking session t get an empty-session chain.
std::vector<std::vector<BehaviorChain>> chains_by_session(const std::vector<Event>& events,
                                                          const StateMapping& mapping,
                                                          std::vector<std::string>* student_ids = nullptr,
                                                          int max_sessions = 0);

}  // namespace kspace
