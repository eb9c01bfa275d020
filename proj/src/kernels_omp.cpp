#include "kspace/kernels.hpp"

#include <limits>

#include "kspace/error.hpp"

namespace kspace::kernels::omp {

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  const Eigen::MatrixXd pt = points.transpose();  // columns are points
#pragma omp parallel for schedule(dynamic, 16)
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = (pt.col(i) - pt.col(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

double assign_nearest(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids, std::vector<int>& labels) {
  labels.assign(static_cast<std::size_t>(points.rows()), 0);
  const Eigen::MatrixXd pt = points.transpose();
  const Eigen::MatrixXd ct = centroids.transpose();
  double inertia = 0.0;
#pragma omp parallel for reduction(+ : inertia) schedule(static)
  for (Eigen::Index i = 0; i < pt.cols(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (Eigen::Index c = 0; c < ct.cols(); ++c) {
      const double s = (pt.col(i) - ct.col(c)).squaredNorm();
      if (s < best) {
        best = s;
        arg = static_cast<int>(c);
      }
    }
    labels[static_cast<std::size_t>(i)] = arg;
    inertia += best;
  }
  return inertia;
}

Eigen::MatrixXd chain_distance_sq(const std::vector<Eigen::MatrixXd>& transitions,
                                  const std::vector<Eigen::VectorXd>& occupancy) {
  if (transitions.size() != occupancy.size()) throw Error("chain_distance_sq: size mismatch");
  const auto n = static_cast<Eigen::Index>(transitions.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
#pragma omp parallel for schedule(dynamic, 8)
  for (Eigen::Index a = 0; a < n; ++a) {
    const auto& A = transitions[static_cast<std::size_t>(a)];
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const auto& B = transitions[static_cast<std::size_t>(b)];
      const Eigen::VectorXd w =
          0.5 * (occupancy[static_cast<std::size_t>(a)] + occupancy[static_cast<std::size_t>(b)]);
      const double v = w.dot((A - B).rowwise().squaredNorm());
      d(a, b) = v;
      d(b, a) = v;
    }
  }
  return d;
}

}  // namespace kspace::kernels::omp
