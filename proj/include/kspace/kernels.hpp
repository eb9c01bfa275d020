#pragma once

#include <vector>

#include <Eigen/Dense>

// Hot loops shared by the clustering modules. `serial` is the reference used
// in tests; `omp` is what the library calls.
namespace kspace::kernels {

#define KSPACE_KERNEL_DECLS                                                                         \
  /** Euclidean distances between rows of `points`. */                                             \
  Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& points);                               \
  /** Nearest centroid per row (ties to the lower index); returns the inertia. */                  \
  double assign_nearest(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids,            \
                        std::vector<int>& labels);                                                 \
  /** d2(a,b) = sum_i mean_occ_i * sum_j (A_ij - B_ij)^2 for every pair of chains. */              \
  Eigen::MatrixXd chain_distance_sq(const std::vector<Eigen::MatrixXd>& transitions,                \
                                    const std::vector<Eigen::VectorXd>& occupancy);

namespace serial {
KSPACE_KERNEL_DECLS
}
namespace omp {
KSPACE_KERNEL_DECLS
}

#undef KSPACE_KERNEL_DECLS

using omp::assign_nearest;
using omp::chain_distance_sq;
using omp::pairwise_distances;

}  // namespace kspace::kernels
