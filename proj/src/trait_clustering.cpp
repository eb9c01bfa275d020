#include "kspace/trait_clustering.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "kspace/error.hpp"
#include "kspace/kernels.hpp"
#include "kspace/kmeans.hpp"
#include "kspace/stats.hpp"

namespace kspace {

ProfileSet build_profiles(const std::vector<Event>& events, const SkillNet& net, int max_sessions) {
  ProfileSet out;
  out.feature_names = {"highest_skill", "passed_skills", "sessions", "error_rate", "mean_log_ms"};
  for (const auto& s : net.skills()) {
    out.skill_ids.push_back(s.id);
    out.feature_names.push_back("ms:" + s.id);
  }
  for (const auto& s : net.skills()) out.feature_names.push_back("err:" + s.id);
  const std::size_t n_skills = net.size();

  for (const auto& [sid, evs] : by_student(events)) {
    auto sessions = sessionize(evs);
    if (max_sessions > 0 && sessions.size() > static_cast<std::size_t>(max_sessions)) {
      sessions.resize(static_cast<std::size_t>(max_sessions));
    }
    std::vector<std::vector<bool>> hist(n_skills);
    std::vector<double> ms_sum(n_skills, 0.0);
    double errors = 0.0, total = 0.0, log_ms = 0.0;
    for (const auto& s : sessions) {
      for (const auto& a : answers(s)) {
        if (!net.contains(a.skill)) continue;
        const auto i = net.index_of(a.skill);
        hist[i].push_back(a.correct);
        ms_sum[i] += a.answer_ms;
        total += 1.0;
        errors += a.correct ? 0.0 : 1.0;
        log_ms += std::log(std::max(a.answer_ms, 1.0));
      }
    }
    StudentProfile p;
    p.student_id = sid;
    p.skill_passed.assign(n_skills, 0.0);
    double highest = NAN, passed = 0.0;
    std::vector<double> ms(n_skills, NAN), err(n_skills, NAN);
    for (std::size_t i = 0; i < n_skills; ++i) {
      const auto& h = hist[i];
      if (h.empty()) continue;
      ms[i] = ms_sum[i] / static_cast<double>(h.size());
      err[i] = static_cast<double>(std::count(h.begin(), h.end(), false)) / static_cast<double>(h.size());
      if (std::count(h.begin(), h.end(), true) > 0) highest = static_cast<double>(i);
      if (h.size() >= 3 && h[h.size() - 1] && h[h.size() - 2] && h[h.size() - 3]) {
        p.skill_passed[i] = 1.0;
        passed += 1.0;
      }
    }
    p.features = {highest, passed, static_cast<double>(sessions.size()), total > 0 ? errors / total : NAN,
                  total > 0 ? log_ms / total : NAN};
    p.features.insert(p.features.end(), ms.begin(), ms.end());
    p.features.insert(p.features.end(), err.begin(), err.end());
    out.students.push_back(std::move(p));
  }
  return out;
}

namespace {

double spherical_bic(const Eigen::MatrixXd& x, const KMeansResult& r) {
  const auto n = static_cast<double>(x.rows());
  const auto d = static_cast<double>(x.cols());
  const int k = static_cast<int>(r.centroids.rows());
  // Floor keeps singleton clusters from producing unbounded likelihoods.
  const double total_var = (x.rowwise() - x.colwise().mean()).squaredNorm() / (n * d);
  const double floor = std::max(1e-3 * total_var, 1e-12);
  std::vector<double> cnt(static_cast<std::size_t>(k), 0.0), ss(static_cast<std::size_t>(k), 0.0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const int l = r.labels[static_cast<std::size_t>(i)];
    cnt[static_cast<std::size_t>(l)] += 1.0;
    ss[static_cast<std::size_t>(l)] += (x.row(i) - r.centroids.row(l)).squaredNorm();
  }
  double loglik = 0.0;
  int used = 0;
  for (int c = 0; c < k; ++c) {
    const double nc = cnt[static_cast<std::size_t>(c)];
    if (nc == 0.0) continue;
    ++used;
    const double var = std::max(ss[static_cast<std::size_t>(c)] / (nc * d), floor);
    loglik += nc * std::log(nc / n) - 0.5 * nc * d * std::log(2.0 * std::numbers::pi * var) -
              ss[static_cast<std::size_t>(c)] / (2.0 * var);
  }
  const double params = (used - 1) + used * d + used;
  return -2.0 * loglik + params * std::log(n);
}

std::vector<std::size_t> lexicographic_order(const Eigen::MatrixXd& x) {
  std::vector<std::size_t> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double va = x(static_cast<Eigen::Index>(a), j), vb = x(static_cast<Eigen::Index>(b), j);
      if (va != vb) return va < vb;
    }
    return false;
  });
  return order;
}

}  // namespace

SelectKResult select_k(const Eigen::MatrixXd& points, int k_min, int k_max, std::uint64_t seed) {
  const auto n = static_cast<int>(points.rows());
  if (n < 3) throw ValidationError("select_k: need at least 3 points");
  k_min = std::max(k_min, 2);
  k_max = std::min(k_max, n - 1);
  if (k_min > k_max) throw ValidationError("select_k: empty k range for " + std::to_string(n) + " points");
  SelectKResult r;
  for (int k = k_min; k <= k_max; ++k) {
    const auto km = kmeans(points, k, {.restarts = 20, .max_iter = 300, .seed = seed});
    r.ks.push_back(k);
    r.bic.push_back(spherical_bic(points, km));
  }
  const auto best = std::min_element(r.bic.begin(), r.bic.end()) - r.bic.begin();
  r.k = r.ks[static_cast<std::size_t>(best)];
  return r;
}

ClusterResult cluster_offline(const ProfileSet& profiles, const ClusterOptions& options) {
  const std::size_t n = profiles.students.size();
  const std::size_t p = profiles.feature_names.size();
  const int min_k = options.fixed_k > 0 ? options.fixed_k : options.k_min;
  if (n < static_cast<std::size_t>(min_k) + 1) throw ValidationError("cluster: too few profiles");
  ClusterResult res;
  auto& m = res.model;

  std::vector<std::size_t> kept;
  std::vector<double> means, sds;
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<double> v;
    for (const auto& s : profiles.students) {
      if (s.features.size() != p) throw ValidationError("cluster: profile width mismatch for " + s.student_id);
      if (!std::isnan(s.features[j])) v.push_back(s.features[j]);
    }
    const double mu = v.empty() ? 0.0 : stats::mean(v);
    double sd = 0.0;
    for (double x : v) sd += (x - mu) * (x - mu);
    sd = v.empty() ? 0.0 : std::sqrt(sd / static_cast<double>(v.size()));
    // Imputed cells count as the mean, so a feature seen once is also constant.
    if (v.size() < 2 || sd <= 1e-12 * std::max(1.0, std::fabs(mu))) {
      res.warnings.push_back("dropped constant feature " + profiles.feature_names[j]);
      continue;
    }
    kept.push_back(j);
    means.push_back(mu);
    sds.push_back(sd);
  }
  if (kept.empty()) throw ValidationError("cluster: every feature is constant");
  const auto q = static_cast<Eigen::Index>(kept.size());
  m.mean = Eigen::Map<Eigen::VectorXd>(means.data(), q);
  m.scale = Eigen::Map<Eigen::VectorXd>(sds.data(), q);
  for (auto j : kept) m.feature_names.push_back(profiles.feature_names[j]);

  Eigen::MatrixXd z(static_cast<Eigen::Index>(n), q);
  for (std::size_t i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < q; ++c) {
      const double v = profiles.students[i].features[kept[static_cast<std::size_t>(c)]];
      z(static_cast<Eigen::Index>(i), c) = std::isnan(v) ? 0.0 : (v - m.mean(c)) / m.scale(c);
    }
  }
  // Work in a canonical row order so the partition ignores input order.
  const auto order = lexicographic_order(z);
  Eigen::MatrixXd zs(z.rows(), z.cols());
  for (std::size_t i = 0; i < n; ++i) zs.row(static_cast<Eigen::Index>(i)) = z.row(static_cast<Eigen::Index>(order[i]));
  m.train = zs;

  m.basis = classical_mds(kernels::pairwise_distances(zs), options.dims);
  if (m.basis.points.cols() == 0) throw ValidationError("cluster: all profiles coincide");
  if (m.basis.reduced()) {
    res.warnings.push_back("embedding reduced to " + std::to_string(m.basis.points.cols()) + " dimensions");
  }
  const Eigen::MatrixXd& y = m.basis.points;
  int k = options.fixed_k;
  if (k <= 0) {
    m.selection = select_k(y, options.k_min, options.k_max, options.seed);
    k = m.selection.k;
  }
  const auto km = kmeans(y, k, {.restarts = options.restarts, .max_iter = 300, .seed = options.seed});
  m.centroids = km.centroids;

  std::vector<int> sorted_labels = km.labels;
  res.labels.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) res.labels[order[i]] = sorted_labels[i];

  m.skill_ids = profiles.skill_ids;
  const auto ns = static_cast<Eigen::Index>(m.skill_ids.size());
  m.templates = Eigen::MatrixXd::Zero(k, ns);
  std::vector<double> cnt(static_cast<std::size_t>(k), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& sp = profiles.students[i].skill_passed;
    if (static_cast<Eigen::Index>(sp.size()) != ns) continue;
    const int l = res.labels[i];
    cnt[static_cast<std::size_t>(l)] += 1.0;
    for (Eigen::Index s = 0; s < ns; ++s) m.templates(l, s) += sp[static_cast<std::size_t>(s)];
  }
  for (int c = 0; c < k; ++c) {
    if (cnt[static_cast<std::size_t>(c)] > 0) m.templates.row(c) /= cnt[static_cast<std::size_t>(c)];
  }
  return res;
}

Classification classify_online(const ClusterModel& model, const std::vector<std::string>& names,
                               const std::vector<double>& features) {
  if (names.size() != features.size()) throw ValidationError("classify: names and values differ in length");
  std::map<std::string, double> given;
  for (std::size_t i = 0; i < names.size(); ++i) given[names[i]] = features[i];
  const auto q = static_cast<Eigen::Index>(model.feature_names.size());
  Eigen::VectorXd z(q);
  for (Eigen::Index c = 0; c < q; ++c) {
    auto it = given.find(model.feature_names[static_cast<std::size_t>(c)]);
    const double v = it == given.end() ? NAN : it->second;
    z(c) = std::isnan(v) ? 0.0 : (v - model.mean(c)) / model.scale(c);
  }
  const Eigen::VectorXd dist = (model.train.rowwise() - z.transpose()).rowwise().norm();
  const Eigen::VectorXd y = project(model.basis, dist);

  Classification out;
  const int k = model.k();
  std::vector<double> d(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) d[static_cast<std::size_t>(c)] = (model.centroids.row(c).transpose() - y).norm();
  out.subgroup = static_cast<int>(std::min_element(d.begin(), d.end()) - d.begin());
  const double dmin = d[static_cast<std::size_t>(out.subgroup)];
  double zsum = 0.0;
  for (double v : d) zsum += std::exp(-(v - dmin));
  for (double v : d) out.probabilities.push_back(std::exp(-(v - dmin)) / zsum);
  out.confidence = out.probabilities[static_cast<std::size_t>(out.subgroup)];
  return out;
}

std::vector<double> predict_from_subgroup(const ClusterModel& model, int subgroup) {
  if (subgroup < 0 || subgroup >= model.k()) {
    throw UnknownIdError("unknown subgroup " + std::to_string(subgroup));
  }
  const Eigen::VectorXd row = model.templates.row(subgroup).transpose();
  return {row.data(), row.data() + row.size()};
}

std::vector<std::string> knowledge_gaps(const ClusterModel& model, int subgroup) {
  const auto rates = predict_from_subgroup(model, subgroup);
  std::vector<std::string> gaps;
  for (std::size_t s = 0; s < rates.size(); ++s) {
    if (rates[s] < 0.5) gaps.push_back(model.skill_ids[s]);
  }
  return gaps;
}

namespace {

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json r = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(std::move(r));
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const Json& j, Eigen::Index cols_if_empty = 0) {
  const auto rows = j.get<std::vector<std::vector<double>>>();
  const auto cols = rows.empty() ? cols_if_empty : static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != cols) throw ValidationError("cluster model: ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(i), c) = rows[i][static_cast<std::size_t>(c)];
  }
  return m;
}

Json vector_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Eigen::VectorXd vector_from(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

Json ClusterModel::to_json() const {
  return Json{{"feature_names", feature_names},
              {"mean", vector_json(mean)},
              {"scale", vector_json(scale)},
              {"train", matrix_json(train)},
              {"eigenvalues", vector_json(basis.eigenvalues)},
              {"eigenvectors", matrix_json(basis.eigenvectors)},
              {"centering", vector_json(basis.mean_sq)},
              {"centroids", matrix_json(centroids)},
              {"skill_ids", skill_ids},
              {"templates", matrix_json(templates)},
              {"selection", {{"k", selection.ks}, {"bic", selection.bic}}}};
}

ClusterModel ClusterModel::from_json(const Json& j) {
  ClusterModel m;
  m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  m.mean = vector_from(j.at("mean"));
  m.scale = vector_from(j.at("scale"));
  m.train = matrix_from(j.at("train"));
  m.basis.eigenvalues = vector_from(j.at("eigenvalues"));
  m.basis.eigenvectors = matrix_from(j.at("eigenvectors"));
  m.basis.mean_sq = vector_from(j.at("centering"));
  m.basis.requested_dims = static_cast<int>(m.basis.eigenvalues.size());
  m.centroids = matrix_from(j.at("centroids"));
  m.skill_ids = j.at("skill_ids").get<std::vector<std::string>>();
  m.templates = matrix_from(j.at("templates"), static_cast<Eigen::Index>(m.skill_ids.size()));
  if (j.contains("selection")) {
    m.selection.ks = j["selection"].at("k").get<std::vector<int>>();
    m.selection.bic = j["selection"].at("bic").get<std::vector<double>>();
  }
  m.selection.k = static_cast<int>(m.centroids.rows());
  const auto q = static_cast<Eigen::Index>(m.feature_names.size());
  if (m.mean.size() != q || m.scale.size() != q || m.train.cols() != q ||
      m.basis.eigenvectors.rows() != m.train.rows() || m.centroids.cols() != m.basis.eigenvalues.size()) {
    throw ValidationError("cluster model: inconsistent dimensions");
  }
  return m;
}

}  // namespace kspace
