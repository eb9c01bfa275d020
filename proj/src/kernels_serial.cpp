#include "kspace/kernels.hpp"

#include <cmath>
#include <limits>

#include "kspace/error.hpp"

namespace kspace::kernels::serial {

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.rows();
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < points.cols(); ++k) {
        const double diff = points(i, k) - points(j, k);
        s += diff * diff;
      }
      d(i, j) = d(j, i) = std::sqrt(s);
    }
  }
  return d;
}

double assign_nearest(const Eigen::MatrixXd& points, const Eigen::MatrixXd& centroids, std::vector<int>& labels) {
  labels.assign(static_cast<std::size_t>(points.rows()), 0);
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
      double s = 0.0;
      for (Eigen::Index k = 0; k < points.cols(); ++k) {
        const double diff = points(i, k) - centroids(c, k);
        s += diff * diff;
      }
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
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const auto& A = transitions[static_cast<std::size_t>(a)];
      const auto& B = transitions[static_cast<std::size_t>(b)];
      double s = 0.0;
      for (Eigen::Index i = 0; i < A.rows(); ++i) {
        const double w = 0.5 * (occupancy[static_cast<std::size_t>(a)](i) + occupancy[static_cast<std::size_t>(b)](i));
        double row = 0.0;
        for (Eigen::Index j = 0; j < A.cols(); ++j) {
          const double diff = A(i, j) - B(i, j);
          row += diff * diff;
        }
        s += w * row;
      }
      d(a, b) = d(b, a) = s;
    }
  }
  return d;
}

}  // namespace kspace::kernels::serial
