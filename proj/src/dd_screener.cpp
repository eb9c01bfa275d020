#include "kspace/dd_screener.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>

#include "kspace/error.hpp"
#include "kspace/io.hpp"
#include "kspace/stats.hpp"

namespace kspace {

std::string_view to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::Performance: return "P";
    case FeatureKind::AnswerTime: return "AT";
    case FeatureKind::TypicalMistake: return "TM";
    case FeatureKind::Strategy: return "SN";
  }
  return "P";
}

FeatureKind feature_kind_from(std::string_view prefix) {
  if (prefix == "P") return FeatureKind::Performance;
  if (prefix == "AT") return FeatureKind::AnswerTime;
  if (prefix == "TM") return FeatureKind::TypicalMistake;
  if (prefix == "SN") return FeatureKind::Strategy;
  throw ValidationError("unknown feature kind '" + std::string(prefix) + "'");
}

ScreenFeature parse_feature_id(std::string_view id) {
  const auto slash = id.find('/');
  if (slash == std::string_view::npos || slash + 1 >= id.size()) {
    throw ValidationError("feature id '" + std::string(id) + "' is not <kind>/<source>");
  }
  ScreenFeature f;
  f.id = std::string(id);
  f.kind = feature_kind_from(id.substr(0, slash));
  f.source = std::string(id.substr(slash + 1));
  return f;
}

const ScreenFeature* FeatureBank::find(std::string_view id) const {
  for (const auto& f : features) {
    if (f.id == id) return &f;
  }
  return nullptr;
}

Json FeatureBank::to_json() const {
  Json arr = Json::array();
  for (const auto& f : features) {
    arr.push_back({{"id", f.id}, {"kind", to_string(f.kind)}, {"time_min", f.time_min}, {"group_hint", f.group_hint}});
  }
  return arr;
}

FeatureBank FeatureBank::from_json(const Json& j) {
  if (!j.is_array()) throw ValidationError("feature bank must be a JSON array");
  FeatureBank b;
  for (const auto& e : j) {
    auto f = parse_feature_id(e.at("id").get<std::string>());
    if (e.contains("kind") && feature_kind_from(e["kind"].get<std::string>()) != f.kind) {
      throw ValidationError("feature " + f.id + ": kind disagrees with id prefix");
    }
    f.time_min = e.value("time_min", 1.0);
    if (!(f.time_min >= 0.0)) throw ValidationError("feature " + f.id + ": time_min must be >= 0");
    f.group_hint = e.value("group_hint", std::string{});
    if (b.find(f.id)) throw ValidationError("duplicate feature id " + f.id);
    b.features.push_back(std::move(f));
  }
  return b;
}

FeatureBank FeatureBank::load(const std::filesystem::path& path) {
  try {
    return from_json(Json::parse(io::read_text_file(path)));
  } catch (const Json::exception& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

ScreenData extract_screen_features(const std::vector<Event>& events, const std::vector<std::string>& feature_ids) {
  std::vector<ScreenFeature> defs;
  for (const auto& id : feature_ids) defs.push_back(parse_feature_id(id));
  ScreenData d;
  d.feature_ids = feature_ids;
  auto grouped = by_student(events);
  std::sort(grouped.begin(), grouped.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  d.x.resize(static_cast<Eigen::Index>(grouped.size()), static_cast<Eigen::Index>(defs.size()));
  for (std::size_t s = 0; s < grouped.size(); ++s) {
    d.student_ids.push_back(grouped[s].first);
    const auto ans = answers(grouped[s].second);
    for (std::size_t f = 0; f < defs.size(); ++f) {
      const auto& def = defs[f];
      double num = 0.0, den = 0.0;
      for (const auto& a : ans) {
        switch (def.kind) {
          case FeatureKind::Performance:
            if (a.skill == def.source) num += a.correct, den += 1.0;
            break;
          case FeatureKind::AnswerTime:
            if (a.skill == def.source) num += a.answer_ms, den += 1.0;
            break;
          case FeatureKind::TypicalMistake:
            num += a.typical_error == def.source, den += 1.0;
            break;
          case FeatureKind::Strategy:
            num += a.strategy == def.source, den += 1.0;
            break;
        }
      }
      d.x(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(f)) = den > 0.0 ? num / den : NAN;
    }
  }
  return d;
}

namespace {

std::vector<double> column(const Eigen::MatrixXd& x, Eigen::Index j, const std::vector<int>& y, int cls) {
  std::vector<double> v;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (cls >= 0 && y[static_cast<std::size_t>(i)] != cls) continue;
    if (!std::isnan(x(i, j))) v.push_back(x(i, j));
  }
  return v;
}

// |r| over rows where both values are present.
double abs_correlation(const Eigen::MatrixXd& x, Eigen::Index a, Eigen::Index b) {
  std::vector<double> va, vb;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (std::isnan(x(i, a)) || std::isnan(x(i, b))) continue;
    va.push_back(x(i, a));
    vb.push_back(x(i, b));
  }
  if (va.size() < 3) return 0.0;
  const double r = stats::pearson(va, vb);
  return std::isnan(r) ? 0.0 : std::fabs(r);
}

}  // namespace

std::vector<SelectedFeature> select_features(const ScreenData& data, const SelectOptions& options) {
  if (static_cast<std::size_t>(data.x.rows()) != data.y.size()) throw ValidationError("select_features: label count");
  const auto n_pos = std::count(data.y.begin(), data.y.end(), 1);
  const auto n_neg = std::count(data.y.begin(), data.y.end(), 0);
  if (n_pos < 2 || n_neg < 2) throw ValidationError("select_features: need at least two students per class");

  // Candidate columns sorted by id so grouping ignores column order.
  std::vector<Eigen::Index> cols;
  for (Eigen::Index j = 0; j < data.x.cols(); ++j) {
    const auto v = column(data.x, j, data.y, -1);
    if (v.size() >= 2 && stats::variance(v) > 0.0) cols.push_back(j);
  }
  std::sort(cols.begin(), cols.end(), [&](auto a, auto b) {
    return data.feature_ids[static_cast<std::size_t>(a)] < data.feature_ids[static_cast<std::size_t>(b)];
  });
  const std::size_t p = cols.size();
  std::vector<std::vector<double>> sim(p, std::vector<double>(p, 1.0));
#pragma omp parallel for schedule(dynamic)
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = a + 1; b < p; ++b) {
      sim[a][b] = abs_correlation(data.x, cols[a], cols[b]);
    }
  }
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = a + 1; b < p; ++b) sim[b][a] = sim[a][b];
  }

  // Average linkage: merge the most similar pair while it clears the threshold.
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t a = 0; a < p; ++a) groups.push_back({a});
  std::vector<std::vector<double>> link = sim;
  std::vector<bool> alive(p, true);
  while (true) {
    double best = -1.0;
    std::size_t ba = 0, bb = 0;
    for (std::size_t a = 0; a < p; ++a) {
      if (!alive[a]) continue;
      for (std::size_t b = a + 1; b < p; ++b) {
        if (alive[b] && link[a][b] > best) {
          best = link[a][b];
          ba = a;
          bb = b;
        }
      }
    }
    if (best < options.correlation_threshold) break;
    const double na = static_cast<double>(groups[ba].size()), nb = static_cast<double>(groups[bb].size());
    for (std::size_t c = 0; c < p; ++c) {
      if (!alive[c] || c == ba || c == bb) continue;
      link[ba][c] = link[c][ba] = (na * link[ba][c] + nb * link[bb][c]) / (na + nb);
    }
    groups[ba].insert(groups[ba].end(), groups[bb].begin(), groups[bb].end());
    alive[bb] = false;
  }

  std::vector<SelectedFeature> out;
  for (std::size_t g = 0; g < p; ++g) {
    if (!alive[g]) continue;
    SelectedFeature best;
    bool have = false;
    std::vector<std::string> members;
    for (auto m : groups[g]) {
      const auto j = cols[m];
      const auto& id = data.feature_ids[static_cast<std::size_t>(j)];
      members.push_back(id);
      const auto a = column(data.x, j, data.y, 1), b = column(data.x, j, data.y, 0);
      if (a.size() < 2 || b.size() < 2) continue;
      const auto tt = stats::welch_t_test(a, b);
      const double pv = std::isnan(tt.p_value) ? 1.0 : tt.p_value;
      if (!have || pv < best.p_value || (pv == best.p_value && id < best.id)) {
        best.id = id;
        best.t = tt.t;
        best.p_value = pv;
        have = true;
      }
    }
    if (!have) continue;
    std::sort(members.begin(), members.end());
    best.group = std::move(members);
    out.push_back(std::move(best));
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.p_value != b.p_value ? a.p_value < b.p_value : a.id < b.id;
  });
  if (options.alpha < 1.0) {
    const double cut = options.bonferroni ? options.alpha / static_cast<double>(std::max<std::size_t>(out.size(), 1))
                                          : options.alpha;
    std::erase_if(out, [&](const SelectedFeature& f) { return !(f.p_value < cut); });
  }
  return out;
}

double ScreenerModel::full_minutes() const { return std::accumulate(time_min.begin(), time_min.end(), 0.0); }

ScreenerModel fit_screener(const ScreenData& data, const std::vector<std::string>& ordering, const FeatureBank* bank) {
  const auto n_pos = std::count(data.y.begin(), data.y.end(), 1);
  const auto n_neg = std::count(data.y.begin(), data.y.end(), 0);
  if (n_pos == 0 || n_neg == 0) throw ValidationError("fit_screener: both classes must be present");
  ScreenerModel m;
  m.prior_dd = static_cast<double>(n_pos) / static_cast<double>(n_pos + n_neg);
  std::map<std::string, Eigen::Index> col;
  for (std::size_t j = 0; j < data.feature_ids.size(); ++j) col[data.feature_ids[j]] = static_cast<Eigen::Index>(j);
  auto moments = [](const std::vector<double>& v, double& mu, double& var) {
    mu = v.empty() ? 0.0 : stats::mean(v);
    var = 0.0;
    for (double x : v) var += (x - mu) * (x - mu);
    var = v.empty() ? 0.0 : var / static_cast<double>(v.size());
    var = std::max(var, kScreenerVarianceFloor);
  };
  for (const auto& id : ordering) {
    auto it = col.find(id);
    if (it == col.end()) throw UnknownIdError("fit_screener: no column for feature " + id);
    double mu1, v1, mu0, v0;
    const auto c1 = column(data.x, it->second, data.y, 1), c0 = column(data.x, it->second, data.y, 0);
    if (c1.size() < 2 || c0.size() < 2) {
      // Too little data in one class: keep the feature but make it uninformative.
      moments(column(data.x, it->second, data.y, -1), mu1, v1);
      mu0 = mu1;
      v0 = v1;
    } else {
      moments(c1, mu1, v1);
      moments(c0, mu0, v0);
    }
    m.features.push_back(id);
    m.mean_dd.push_back(mu1);
    m.var_dd.push_back(v1);
    m.mean_typ.push_back(mu0);
    m.var_typ.push_back(v0);
    const ScreenFeature* f = bank ? bank->find(id) : nullptr;
    m.time_min.push_back(f ? f->time_min : 1.0);
  }
  return m;
}

namespace {

double log_normal_pdf(double x, double mu, double var) {
  return -0.5 * (std::log(2.0 * std::numbers::pi * var) + (x - mu) * (x - mu) / var);
}

}  // namespace

ScreenResult screen(const ScreenerModel& model, std::span<const double> values) {
  if (values.size() > model.size()) throw ValidationError("screen: more values than model features");
  ScreenResult r;
  const double prior_logit = std::log(model.prior_dd / (1.0 - model.prior_dd));
  std::vector<double> llr;
  double prev = model.prior_dd;
  int quiet = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double x = values[i];
    if (!std::isnan(x)) {
      llr.push_back(log_normal_pdf(x, model.mean_dd[i], model.var_dd[i]) -
                    log_normal_pdf(x, model.mean_typ[i], model.var_typ[i]));
    }
    // Summing sorted terms makes the posterior depend only on the set seen.
    std::vector<double> terms = llr;
    std::sort(terms.begin(), terms.end());
    double z = prior_logit;
    for (double t : terms) z += t;
    const double post = stats::logistic(z);
    r.trace.push_back(post);
    r.features_used = i + 1;
    r.minutes += model.time_min[i];
    quiet = std::fabs(post - prev) < model.epsilon ? quiet + 1 : 0;
    prev = post;
    if (quiet >= model.patience) break;
  }
  r.posterior = prev;
  r.at_risk = r.posterior >= 0.5;
  return r;
}

ScreenResult screen(const ScreenerModel& model, const std::vector<std::pair<std::string, double>>& stream) {
  std::vector<double> values;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    if (i >= model.size() || stream[i].first != model.features[i]) {
      throw ValidationError("screen: feature '" + stream[i].first + "' out of order at position " +
                            std::to_string(i));
    }
    values.push_back(stream[i].second);
  }
  return screen(model, values);
}

std::vector<std::vector<double>> model_rows(const ScreenerModel& model, const ScreenData& data) {
  std::map<std::string, Eigen::Index> col;
  for (std::size_t j = 0; j < data.feature_ids.size(); ++j) col[data.feature_ids[j]] = static_cast<Eigen::Index>(j);
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(data.x.rows()));
  for (Eigen::Index i = 0; i < data.x.rows(); ++i) {
    for (const auto& id : model.features) {
      auto it = col.find(id);
      rows[static_cast<std::size_t>(i)].push_back(it == col.end() ? NAN : data.x(i, it->second));
    }
  }
  return rows;
}

ScreenEvaluation evaluate(const ScreenerModel& model, const ScreenData& heldout, double by_minute) {
  if (heldout.x.rows() == 0) throw ValidationError("evaluate: empty held-out set");
  if (static_cast<std::size_t>(heldout.x.rows()) != heldout.y.size()) throw ValidationError("evaluate: label count");
  const auto rows = model_rows(model, heldout);
  ScreenEvaluation ev;
  ev.results.resize(rows.size());
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < rows.size(); ++i) ev.results[i] = screen(model, rows[i]);
  double tp = 0, fn = 0, tn = 0, fp = 0, within = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = ev.results[i];
    if (heldout.y[i] == 1) (r.at_risk ? tp : fn) += 1.0;
    else (r.at_risk ? fp : tn) += 1.0;
    ev.mean_minutes += r.minutes;
    ev.mean_features += static_cast<double>(r.features_used);
    if (r.minutes <= by_minute + 1e-12) within += 1.0;
  }
  const auto n = static_cast<double>(rows.size());
  ev.sensitivity = tp + fn > 0 ? tp / (tp + fn) : NAN;
  ev.specificity = tn + fp > 0 ? tn / (tn + fp) : NAN;
  ev.accuracy = (tp + tn) / n;
  ev.mean_minutes /= n;
  ev.mean_features /= n;
  ev.full_minutes = model.full_minutes();
  ev.fraction_by_minute = within / n;
  return ev;
}

Json ScreenerModel::to_json() const {
  Json feats = Json::array();
  for (std::size_t i = 0; i < features.size(); ++i) {
    feats.push_back({{"id", features[i]},
                     {"mean_dd", mean_dd[i]},
                     {"var_dd", var_dd[i]},
                     {"mean_typical", mean_typ[i]},
                     {"var_typical", var_typ[i]},
                     {"time_min", time_min[i]}});
  }
  return Json{{"features", feats}, {"prior_dd", prior_dd}, {"epsilon", epsilon}, {"patience", patience}};
}

ScreenerModel ScreenerModel::from_json(const Json& j) {
  ScreenerModel m;
  m.prior_dd = j.at("prior_dd").get<double>();
  if (!(m.prior_dd > 0.0 && m.prior_dd < 1.0)) throw ValidationError("screener model: prior_dd must be in (0,1)");
  m.epsilon = j.value("epsilon", 0.01);
  m.patience = j.value("patience", 3);
  if (m.epsilon < 0.0 || m.patience < 1) throw ValidationError("screener model: bad stopping parameters");
  for (const auto& f : j.at("features")) {
    m.features.push_back(f.at("id").get<std::string>());
    m.mean_dd.push_back(f.at("mean_dd").get<double>());
    m.var_dd.push_back(std::max(f.at("var_dd").get<double>(), kScreenerVarianceFloor));
    m.mean_typ.push_back(f.at("mean_typical").get<double>());
    m.var_typ.push_back(std::max(f.at("var_typical").get<double>(), kScreenerVarianceFloor));
    m.time_min.push_back(f.value("time_min", 1.0));
  }
  return m;
}

}  // namespace kspace
