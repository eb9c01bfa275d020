#include "kspace/temporal_clustering.hpp"

#include <algorithm>
#include <cmath>

#include "kspace/embedding.hpp"
#include "kspace/error.hpp"
#include "kspace/kernels.hpp"
#include "kspace/kmeans.hpp"
#include "kspace/stats.hpp"

namespace kspace {

StateMapping StateMapping::navigation() {
  return {{"Game", "Shop", "Performance"},
          {{EventKind::NavGame, 0}, {EventKind::NavShop, 1}, {EventKind::NavPerformance, 2}}};
}

StateMapping StateMapping::input() {
  return {{"Input", "InvalidInput", "Backspace", "Enter"},
          {{EventKind::KeyInput, 0}, {EventKind::InvalidInput, 1}, {EventKind::Backspace, 2}, {EventKind::Enter, 3}}};
}

BehaviorChain estimate_chain(const std::vector<Event>& events, const StateMapping& mapping, double smoothing) {
  const auto n = static_cast<Eigen::Index>(mapping.states.size());
  if (n == 0) throw Error("estimate_chain: empty state set");
  BehaviorChain c;
  c.states = mapping.states;
  Eigen::MatrixXd counts = Eigen::MatrixXd::Constant(n, n, smoothing);
  Eigen::VectorXd occ = Eigen::VectorXd::Zero(n);
  int prev = -1;
  for (const auto& e : events) {
    auto it = mapping.index.find(e.kind);
    if (it == mapping.index.end()) continue;
    occ(it->second) += 1.0;
    if (prev >= 0) counts(prev, it->second) += 1.0;
    prev = it->second;
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    const double row = counts.row(i).sum();
    counts.row(i) = row > 0.0 ? Eigen::RowVectorXd(counts.row(i) / row)
                              : Eigen::RowVectorXd::Constant(n, 1.0 / static_cast<double>(n));
  }
  c.transition = counts;
  const double total = occ.sum();
  c.occupancy = total > 0.0 ? Eigen::VectorXd(occ / total) : Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  return c;
}

double chain_distance_sq(const BehaviorChain& a, const BehaviorChain& b) {
  if (a.states != b.states) throw ValidationError("chain_similarity: state sets differ");
  const Eigen::VectorXd w = 0.5 * (a.occupancy + b.occupancy);
  return w.dot((a.transition - b.transition).rowwise().squaredNorm());
}

double chain_similarity(const BehaviorChain& a, const BehaviorChain& b, double sigma) {
  if (!(sigma > 0.0)) throw Error("chain_similarity: sigma must be positive");
  return std::exp(-chain_distance_sq(a, b) / (sigma * sigma));
}

Eigen::MatrixXd similarity_matrix(const std::vector<BehaviorChain>& chains, double sigma, double* sigma_used) {
  std::vector<Eigen::MatrixXd> trans;
  std::vector<Eigen::VectorXd> occ;
  for (const auto& c : chains) {
    if (c.states != chains.front().states) throw ValidationError("similarity_matrix: state sets differ");
    trans.push_back(c.transition);
    occ.push_back(c.occupancy);
  }
  const Eigen::MatrixXd d2 = kernels::chain_distance_sq(trans, occ);
  if (!(sigma > 0.0)) {
    std::vector<double> d;
    for (Eigen::Index i = 0; i < d2.rows(); ++i) {
      for (Eigen::Index j = i + 1; j < d2.cols(); ++j) d.push_back(std::sqrt(d2(i, j)));
    }
    sigma = d.empty() ? 1.0 : stats::median(d);
    if (!(sigma > 0.0)) sigma = 1.0;
  }
  if (sigma_used) *sigma_used = sigma;
  return (-d2.array() / (sigma * sigma)).exp().matrix();
}

SmoothedSeries adaptive_smooth(const std::vector<Eigen::MatrixXd>& w) {
  SmoothedSeries out;
  if (w.empty()) return out;
  out.smoothed.push_back(w.front());
  out.gamma.push_back(0.0);
  std::vector<double> noise;
  for (std::size_t t = 1; t < w.size(); ++t) {
    noise.push_back((w[t] - w[t - 1]).norm());
    const double nu = stats::median(noise);
    const double eta = (w[t] - out.smoothed.back()).norm();
    const double g = nu + eta > 0.0 ? nu / (nu + eta) : 1.0;
    out.gamma.push_back(g);
    out.smoothed.push_back((1.0 - g) * w[t] + g * out.smoothed.back());
  }
  return out;
}

SmoothedSeries fixed_smooth(const std::vector<Eigen::MatrixXd>& w, double gamma) {
  SmoothedSeries out;
  for (std::size_t t = 0; t < w.size(); ++t) {
    const double g = t == 0 ? 0.0 : gamma;
    out.gamma.push_back(g);
    out.smoothed.push_back(t == 0 ? w[0] : Eigen::MatrixXd((1.0 - g) * w[t] + g * out.smoothed.back()));
  }
  return out;
}

SessionClustering cluster_sessions(const Eigen::MatrixXd& s, int k, std::uint64_t seed,
                                   const Eigen::MatrixXd* reference) {
  if (s.rows() != s.cols()) throw ValidationError("cluster_sessions: similarity matrix must be square");
  if (k < 1 || k > s.rows()) throw ValidationError("cluster_sessions: k must be in [1, n]");
  Eigen::MatrixXd dis = (1.0 - s.array()).max(0.0).matrix();
  dis = 0.5 * (dis + dis.transpose());
  dis.diagonal().setZero();
  SessionClustering out;
  out.points = classical_mds(dis, 3).points;
  if (out.points.cols() == 0) out.points = Eigen::MatrixXd::Zero(s.rows(), 1);
  if (reference && reference->rows() == out.points.rows()) {
    out.points = procrustes_align(out.points, *reference);
  }
  const auto km = kmeans(out.points, k, {.restarts = 20, .max_iter = 300, .seed = seed});
  out.labels = km.labels;
  out.centroids = km.centroids;
  out.empty_clusters = km.empty_clusters;
  return out;
}

std::vector<std::vector<int>> align_labels(const std::vector<std::vector<int>>& labels,
                                           const std::vector<Eigen::MatrixXd>& centroids) {
  if (labels.size() != centroids.size()) throw Error("align_labels: series lengths differ");
  std::vector<std::vector<int>> out;
  if (labels.empty()) return out;
  std::vector<int> names(static_cast<std::size_t>(centroids[0].rows()));
  for (std::size_t c = 0; c < names.size(); ++c) names[c] = static_cast<int>(c);
  int next = static_cast<int>(names.size());
  auto rename = [](const std::vector<int>& l, const std::vector<int>& map) {
    std::vector<int> r;
    for (int v : l) r.push_back(map[static_cast<std::size_t>(v)]);
    return r;
  };
  out.push_back(rename(labels[0], names));
  for (std::size_t t = 1; t < labels.size(); ++t) {
    const auto& cur = centroids[t];
    const auto& prev = centroids[t - 1];
    const Eigen::Index d = std::min(cur.cols(), prev.cols());
    Eigen::MatrixXd cost(cur.rows(), prev.rows());
    for (Eigen::Index i = 0; i < cur.rows(); ++i) {
      for (Eigen::Index j = 0; j < prev.rows(); ++j) cost(i, j) = (cur.row(i).head(d) - prev.row(j).head(d)).norm();
    }
    const auto match = hungarian(cost);
    std::vector<int> now(static_cast<std::size_t>(cur.rows()));
    for (std::size_t i = 0; i < now.size(); ++i) {
      now[i] = match[i] >= 0 ? names[static_cast<std::size_t>(match[i])] : next++;
    }
    names = now;
    out.push_back(rename(labels[t], names));
  }
  return out;
}

TemporalResult temporal_cluster(const std::vector<std::vector<BehaviorChain>>& chains, const TemporalOptions& options) {
  TemporalResult res;
  std::vector<Eigen::MatrixXd> w;
  for (const auto& step : chains) w.push_back(similarity_matrix(step, options.sigma));
  SmoothedSeries sm;
  switch (options.mode) {
    case SmoothingMode::Adaptive: sm = adaptive_smooth(w); break;
    case SmoothingMode::Fixed: sm = fixed_smooth(w, options.fixed_gamma); break;
    case SmoothingMode::None: sm = fixed_smooth(w, 0.0); break;
  }
  res.gamma = sm.gamma;
  std::vector<Eigen::MatrixXd> centroids;
  Eigen::MatrixXd prev_points;
  for (std::size_t t = 0; t < sm.smoothed.size(); ++t) {
    const auto sc = cluster_sessions(sm.smoothed[t], options.k, options.seed, t == 0 ? nullptr : &prev_points);
    prev_points = sc.points;
    res.raw_labels.push_back(sc.labels);
    centroids.push_back(sc.centroids);
    res.empty_clusters.push_back(sc.empty_clusters);
  }
  res.labels = align_labels(res.raw_labels, centroids);
  return res;
}

std::vector<std::vector<BehaviorChain>> chains_by_session(const std::vector<Event>& events, const StateMapping& mapping,
                                                          std::vector<std::string>* student_ids, int max_sessions) {
  auto grouped = by_student(events);
  std::sort(grouped.begin(), grouped.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::vector<Session>> per;
  std::size_t t_max = 0;
  for (const auto& [sid, evs] : grouped) {
    per.push_back(sessionize(evs));
    t_max = std::max(t_max, per.back().size());
    if (student_ids) student_ids->push_back(sid);
  }
  if (max_sessions > 0) t_max = std::min(t_max, static_cast<std::size_t>(max_sessions));
  std::vector<std::vector<BehaviorChain>> out(t_max);
  for (std::size_t t = 0; t < t_max; ++t) {
    for (const auto& sessions : per) {
      out[t].push_back(t < sessions.size() ? estimate_chain(sessions[t].events, mapping)
                                           : estimate_chain({}, mapping));
    }
  }
  return out;
}

}  // namespace kspace
