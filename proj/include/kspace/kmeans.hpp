#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace kspace {

struct KMeansResult {
  Eigen::MatrixXd centroids;  ///< k x d
  std::vector<int> labels;    ///< clusters numbered by first member row
  double inertia = 0.0;
  int empty_clusters = 0;     ///< clusters left without members (identical rows)
  int reseeded = 0;           ///< empty clusters moved to the farthest point during Lloyd
};

struct KMeansOptions {
  int restarts = 20;
  int max_iter = 300;
  std::uint64_t seed = 1;
};

/// Lloyd iterations from k-means++ seeds; best inertia over restarts.
/// Restart r uses Rng::derive(seed, r), so results do not depend on threads.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, const KMeansOptions& options = {});

}  // namespace kspace
