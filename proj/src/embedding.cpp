#include "kspace/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "kspace/error.hpp"

namespace kspace {

Embedding classical_mds(const Eigen::MatrixXd& dissimilarity, int dims) {
  const Eigen::Index n = dissimilarity.rows();
  if (n != dissimilarity.cols()) throw ValidationError("embedding: dissimilarity matrix must be square");
  if (dims < 1) throw Error("embedding: dims must be positive");
  const double scale = std::max(1.0, dissimilarity.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::fabs(dissimilarity(i, i)) > 1e-9 * scale) throw ValidationError("embedding: nonzero diagonal");
    for (Eigen::Index j = 0; j < n; ++j) {
      if (dissimilarity(i, j) < 0.0) throw ValidationError("embedding: negative dissimilarity");
      if (std::fabs(dissimilarity(i, j) - dissimilarity(j, i)) > 1e-9 * scale) {
        throw ValidationError("embedding: dissimilarity matrix must be symmetric");
      }
    }
  }
  Embedding e;
  e.requested_dims = dims;
  const Eigen::MatrixXd d2 = dissimilarity.array().square();
  e.mean_sq = d2.rowwise().mean();
  const double grand = e.mean_sq.mean();
  Eigen::MatrixXd b(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) b(i, j) = -0.5 * (d2(i, j) - e.mean_sq(i) - e.mean_sq(j) + grand);
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(b);
  if (solver.info() != Eigen::Success) throw Error("embedding: eigendecomposition failed");
  const Eigen::VectorXd& vals = solver.eigenvalues();  // ascending
  const double tol = 1e-10 * std::max(1.0, vals.cwiseAbs().maxCoeff());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = n - 1; i >= 0 && static_cast<int>(keep.size()) < dims; --i) {
    if (vals(i) > tol) keep.push_back(i);
  }
  const auto k = static_cast<Eigen::Index>(keep.size());
  e.eigenvalues.resize(k);
  e.eigenvectors.resize(n, k);
  e.points.resize(n, k);
  for (Eigen::Index c = 0; c < k; ++c) {
    Eigen::VectorXd v = solver.eigenvectors().col(keep[static_cast<std::size_t>(c)]);
    Eigen::Index arg = 0;
    for (Eigen::Index i = 1; i < n; ++i) {
      if (std::fabs(v(i)) > std::fabs(v(arg)) + 1e-12) arg = i;
    }
    if (v(arg) < 0.0) v = -v;
    e.eigenvalues(c) = vals(keep[static_cast<std::size_t>(c)]);
    e.eigenvectors.col(c) = v;
    e.points.col(c) = v * std::sqrt(e.eigenvalues(c));
  }
  return e;
}

Eigen::VectorXd project(const Embedding& e, const Eigen::VectorXd& distances) {
  if (distances.size() != e.eigenvectors.rows()) throw ValidationError("project: distance vector length mismatch");
  const Eigen::VectorXd diff = e.mean_sq - distances.array().square().matrix();
  Eigen::VectorXd y(e.eigenvalues.size());
  for (Eigen::Index c = 0; c < y.size(); ++c) {
    y(c) = e.eigenvectors.col(c).dot(diff) / (2.0 * std::sqrt(e.eigenvalues(c)));
  }
  return y;
}

Eigen::MatrixXd procrustes_align(const Eigen::MatrixXd& x, const Eigen::MatrixXd& reference) {
  if (x.rows() != reference.rows()) throw Error("procrustes: row count mismatch");
  const Eigen::Index d = std::max(x.cols(), reference.cols());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(x.rows(), d), r = Eigen::MatrixXd::Zero(x.rows(), d);
  a.leftCols(x.cols()) = x;
  r.leftCols(reference.cols()) = reference;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a.transpose() * r, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::MatrixXd rot = svd.matrixU() * svd.matrixV().transpose();
  return (a * rot).leftCols(x.cols());
}

std::vector<int> hungarian(const Eigen::MatrixXd& cost) {
  const auto rows = static_cast<int>(cost.rows()), cols = static_cast<int>(cost.cols());
  if (rows == 0 || cols == 0) return std::vector<int>(static_cast<std::size_t>(rows), -1);
  if (rows > cols) {
    const auto t = hungarian(cost.transpose());
    std::vector<int> out(static_cast<std::size_t>(rows), -1);
    for (int c = 0; c < cols; ++c) out[static_cast<std::size_t>(t[static_cast<std::size_t>(c)])] = c;
    return out;
  }
  // Shortest augmenting path with potentials, 1-based (rows <= cols).
  const double inf = std::numeric_limits<double>::infinity();
  const int n = rows, m = cols;
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0);
  }
  std::vector<int> out(static_cast<std::size_t>(n), -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j]) out[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  }
  return out;
}

}  // namespace kspace
