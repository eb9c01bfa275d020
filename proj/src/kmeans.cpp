#include "kspace/kmeans.hpp"

#include <algorithm>
#include <limits>

#include "kspace/error.hpp"
#include "kspace/kernels.hpp"
#include "kspace/rng.hpp"

namespace kspace {
namespace {

Eigen::MatrixXd plus_plus(const Eigen::MatrixXd& x, int k, Rng& rng) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd c(k, x.cols());
  c.row(0) = x.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n))));
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) d2[static_cast<std::size_t>(i)] = (x.row(i) - c.row(0)).squaredNorm();
  for (int m = 1; m < k; ++m) {
    double total = 0.0;
    for (double v : d2) total += v;
    Eigen::Index pick = 0;
    if (total > 0.0) {
      pick = static_cast<Eigen::Index>(rng.categorical(d2));
    } else {
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(n)));
    }
    c.row(m) = x.row(pick);
    for (Eigen::Index i = 0; i < n; ++i) {
      d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], (x.row(i) - c.row(m)).squaredNorm());
    }
  }
  return c;
}

KMeansResult lloyd(const Eigen::MatrixXd& x, Eigen::MatrixXd c, int max_iter) {
  KMeansResult r;
  const int k = static_cast<int>(c.rows());
  std::vector<int> prev;
  for (int iter = 0; iter < max_iter; ++iter) {
    r.inertia = kernels::assign_nearest(x, c, r.labels);
    std::vector<int> count(static_cast<std::size_t>(k), 0);
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(k, x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      const int l = r.labels[static_cast<std::size_t>(i)];
      ++count[static_cast<std::size_t>(l)];
      sum.row(l) += x.row(i);
    }
    bool moved_empty = false;
    for (int m = 0; m < k; ++m) {
      if (count[static_cast<std::size_t>(m)] > 0) {
        c.row(m) = sum.row(m) / count[static_cast<std::size_t>(m)];
        continue;
      }
      // Re-seed at the point farthest from its centroid, if any is off-centre.
      double far = 0.0;
      Eigen::Index arg = -1;
      for (Eigen::Index i = 0; i < x.rows(); ++i) {
        const double d = (x.row(i) - c.row(r.labels[static_cast<std::size_t>(i)])).squaredNorm();
        if (d > far) {
          far = d;
          arg = i;
        }
      }
      if (arg >= 0) {
        c.row(m) = x.row(arg);
        r.labels[static_cast<std::size_t>(arg)] = m;
        ++r.reseeded;
        moved_empty = true;
      }
    }
    if (!moved_empty && r.labels == prev) break;
    prev = r.labels;
  }
  r.inertia = kernels::assign_nearest(x, c, r.labels);
  r.centroids = c;
  return r;
}

// Rename clusters in order of their first member; empty ones go last.
void canonicalise(KMeansResult& r) {
  const int k = static_cast<int>(r.centroids.rows());
  std::vector<int> map(static_cast<std::size_t>(k), -1);
  int next = 0;
  for (int l : r.labels) {
    if (map[static_cast<std::size_t>(l)] < 0) map[static_cast<std::size_t>(l)] = next++;
  }
  r.empty_clusters = k - next;
  for (auto& m : map) {
    if (m < 0) m = next++;
  }
  Eigen::MatrixXd c(r.centroids.rows(), r.centroids.cols());
  for (int m = 0; m < k; ++m) c.row(map[static_cast<std::size_t>(m)]) = r.centroids.row(m);
  r.centroids = c;
  for (int& l : r.labels) l = map[static_cast<std::size_t>(l)];
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, const KMeansOptions& options) {
  if (k < 1) throw Error("kmeans: k must be positive");
  if (k > points.rows()) throw ValidationError("kmeans: k exceeds the number of points");
  const int restarts = std::max(options.restarts, 1);
  std::vector<KMeansResult> runs(static_cast<std::size_t>(restarts));
#pragma omp parallel for schedule(dynamic)
  for (int r = 0; r < restarts; ++r) {
    Rng rng = Rng::derive(options.seed, static_cast<std::uint64_t>(r));
    runs[static_cast<std::size_t>(r)] = lloyd(points, plus_plus(points, k, rng), options.max_iter);
  }
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].inertia < runs[best].inertia - 1e-12 * std::max(1.0, runs[best].inertia)) best = r;
  }
  KMeansResult out = std::move(runs[best]);
  canonicalise(out);
  return out;
}

}  // namespace kspace
