#pragma once

#include <vector>

#include <Eigen/Dense>

namespace kspace {

/// Classical MDS of a dissimilarity matrix, with what is needed to project
/// new points into the same coordinates.
struct Embedding {
  Eigen::MatrixXd points;        ///< n x d
  Eigen::VectorXd eigenvalues;   ///< d, positive, descending
  Eigen::MatrixXd eigenvectors;  ///< n x d, unit columns
  Eigen::VectorXd mean_sq;       ///< row means of D^2
  int requested_dims = 0;
  bool reduced() const { return points.cols() < requested_dims; }
};

/// Double-centres -D^2/2 and keeps the top d positive eigenpairs. Keeps fewer
/// dimensions when fewer eigenvalues are positive. Each eigenvector is
/// signed so its largest-magnitude entry is positive.
Embedding classical_mds(const Eigen::MatrixXd& dissimilarity, int dims = 3);

/// Coordinates of a new point given its distances to the training points.
Eigen::VectorXd project(const Embedding& e, const Eigen::VectorXd& distances);

/// Rotation/reflection of `x` that best matches `reference` in least squares.
/// Both are n x d and assumed centred; missing columns are zero-padded.
Eigen::MatrixXd procrustes_align(const Eigen::MatrixXd& x, const Eigen::MatrixXd& reference);

/// Minimum-cost assignment. result[i] = column for row i, or -1 when there
/// are more rows than columns.
std::vector<int> hungarian(const Eigen::MatrixXd& cost);

}  // namespace kspace
