#include "kspace/engagement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "kspace/error.hpp"
#include "kspace/stats.hpp"

namespace kspace {
namespace {

bool is_input(EventKind k) {
  return k == EventKind::KeyInput || k == EventKind::InvalidInput || k == EventKind::Backspace ||
         k == EventKind::Enter;
}

std::string task_key(const Answer& a) {
  if (!a.task.empty()) return a.task;
  if (!a.target.empty()) return a.target;
  return a.skill;
}

}  // namespace

std::vector<EngagementStep> extract_engagement_features(const Session& session) {
  std::vector<EngagementStep> out;
  if (session.events.empty()) return out;
  std::int64_t step_start = session.events.front().t;
  std::vector<std::int64_t> inputs;
  int helps = 0;
  struct Seen {
    std::size_t step;
    std::int64_t t;
    bool correct;
  };
  std::map<std::string, Seen> last;

  for (const auto& e : session.events) {
    if (is_input(e.kind)) {
      inputs.push_back(e.t);
    } else if (e.kind == EventKind::HelpCall) {
      ++helps;
    } else if (e.kind == EventKind::TaskShown) {
      step_start = e.t;
      inputs.clear();
      helps = 0;
    } else if (auto a = as_answer(e)) {
      EngagementStep s;
      s.t = a->t;
      s.task = task_key(*a);
      s.correct = a->correct;
      s.answer_ms = a->answer_ms;
      const double minutes = static_cast<double>(a->t - step_start) / 60000.0;
      if (minutes > 0.0) {
        s.input_rate = static_cast<double>(inputs.size()) / minutes;
        s.help_rate = helps / minutes;
      } else if (helps == 0) {
        s.help_rate = 0.0;
      }
      std::vector<double> rates;
      for (std::size_t i = 1; i < inputs.size(); ++i) {
        const auto dt = inputs[i] - inputs[i - 1];
        if (dt > 0) rates.push_back(60000.0 / static_cast<double>(dt));
      }
      if (rates.size() >= 2) s.input_rate_variance = stats::variance(rates);

      if (auto it = last.find(s.task); it != last.end()) {
        s.decay_s = static_cast<double>(a->t - it->second.t) / 1000.0;
        s.interference = static_cast<double>(out.size() - it->second.step - 1);
        if (!it->second.correct) s.minor_error = a->correct ? 1.0 : 0.0;
      }
      last[s.task] = Seen{out.size(), a->t, a->correct};
      out.push_back(std::move(s));
      step_start = a->t;
      inputs.clear();
      helps = 0;
    }
  }
  return out;
}

SplitSeries timescale_split(std::span<const double> series, double slow_alpha) {
  if (!(slow_alpha > 0.0 && slow_alpha <= 1.0)) throw Error("slow_alpha must be in (0, 1]");
  SplitSeries s;
  s.trend.reserve(series.size());
  s.local.reserve(series.size());
  double trend = NAN;
  for (double x : series) {
    if (std::isnan(x)) {
      s.trend.push_back(trend);
      s.local.push_back(NAN);
      continue;
    }
    trend = std::isnan(trend) ? x : trend + slow_alpha * (x - trend);
    s.trend.push_back(trend);
    s.local.push_back(x - trend);
  }
  return s;
}

// ---------------------------------------------------------------------------

GaussianHmm2::GaussianHmm2(std::size_t dims) {
  for (int s = 0; s < 2; ++s) {
    mean_[s].assign(dims, 0.0);
    var_[s].assign(dims, 1.0);
  }
}

double GaussianHmm2::log_emission(int s, const std::vector<double>& x) const {
  double lp = 0.0;
  for (std::size_t d = 0; d < x.size(); ++d) {
    if (std::isnan(x[d])) continue;
    const double v = var_[s][d];
    const double z = x[d] - mean_[s][d];
    lp += -0.5 * (std::log(2.0 * std::numbers::pi * v) + z * z / v);
  }
  return lp;
}

namespace {

struct ForwardBackward {
  std::vector<std::array<double, 2>> gamma;
  std::array<std::array<double, 2>, 2> xi{};
  double loglik = 0.0;
};

// Scaled recursions in probability space on emission ratios.
ForwardBackward forward_backward(const GaussianHmm2& h, const std::vector<std::array<double, 2>>& logb,
                                 bool smoothed) {
  const std::size_t n = logb.size();
  ForwardBackward r;
  r.gamma.resize(n);
  std::vector<std::array<double, 2>> alpha(n), b(n);
  std::vector<double> scale(n);
  for (std::size_t t = 0; t < n; ++t) {
    const double m = std::max(logb[t][0], logb[t][1]);
    b[t] = {std::exp(logb[t][0] - m), std::exp(logb[t][1] - m)};
    double a0, a1;
    if (t == 0) {
      a0 = h.initial[0] * b[t][0];
      a1 = h.initial[1] * b[t][1];
    } else {
      a0 = (alpha[t - 1][0] * h.transition[0][0] + alpha[t - 1][1] * h.transition[1][0]) * b[t][0];
      a1 = (alpha[t - 1][0] * h.transition[0][1] + alpha[t - 1][1] * h.transition[1][1]) * b[t][1];
    }
    scale[t] = a0 + a1;
    alpha[t] = {a0 / scale[t], a1 / scale[t]};
    r.loglik += std::log(scale[t]) + m;
  }
  if (!smoothed) {
    r.gamma = alpha;
    return r;
  }
  std::array<double, 2> beta{1.0, 1.0};
  r.gamma[n - 1] = alpha[n - 1];
  for (std::size_t t = n - 1; t-- > 0;) {
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        r.xi[i][j] += alpha[t][i] * h.transition[i][j] * b[t + 1][j] * beta[j] / scale[t + 1];
      }
    }
    std::array<double, 2> nb{};
    for (int i = 0; i < 2; ++i) {
      nb[i] = (h.transition[i][0] * b[t + 1][0] * beta[0] + h.transition[i][1] * b[t + 1][1] * beta[1]) /
              scale[t + 1];
    }
    beta = nb;
    const double g0 = alpha[t][0] * beta[0], g1 = alpha[t][1] * beta[1];
    r.gamma[t] = {g0 / (g0 + g1), g1 / (g0 + g1)};
  }
  return r;
}


}  // namespace

std::vector<std::array<double, 2>> GaussianHmm2::posteriors(const Sequence& seq, bool smoothed) const {
  if (seq.empty()) return {};
  std::vector<std::array<double, 2>> logb(seq.size());
  for (std::size_t t = 0; t < seq.size(); ++t) logb[t] = {log_emission(0, seq[t]), log_emission(1, seq[t])};
  return forward_backward(*this, logb, smoothed).gamma;
}

double GaussianHmm2::log_likelihood(const Sequence& seq) const {
  if (seq.empty()) return 0.0;
  std::vector<std::array<double, 2>> logb(seq.size());
  for (std::size_t t = 0; t < seq.size(); ++t) logb[t] = {log_emission(0, seq[t]), log_emission(1, seq[t])};
  return forward_backward(*this, logb, false).loglik;
}

double GaussianHmm2::fit(const std::vector<Sequence>& sequences, int max_iter, double tol) {
  const std::size_t dims = this->dims();
  std::vector<const std::vector<double>*> all;
  for (const auto& s : sequences) {
    for (const auto& x : s) {
      if (x.size() != dims) throw Error("hmm: observation dimension mismatch");
      all.push_back(&x);
    }
  }
  if (all.empty()) return 0.0;

  // Pooled moments give the variance floor and fallback values.
  std::vector<double> pooled_mean(dims, 0.0), pooled_var(dims, 1.0);
  for (std::size_t d = 0; d < dims; ++d) {
    std::vector<double> v;
    for (auto* x : all) {
      if (!std::isnan((*x)[d])) v.push_back((*x)[d]);
    }
    if (!v.empty()) pooled_mean[d] = stats::mean(v);
    if (v.size() > 1) pooled_var[d] = std::max(stats::variance(v), 1e-8);
  }

  // Median split on the first dimension.
  std::vector<double> first;
  for (auto* x : all) {
    if (!std::isnan((*x)[0])) first.push_back((*x)[0]);
  }
  const double cut = first.empty() ? 0.0 : stats::median(first);
  for (std::size_t d = 0; d < dims; ++d) {
    std::array<double, 2> sum{}, sq{}, cnt{};
    for (auto* x : all) {
      if (std::isnan((*x)[d]) || std::isnan((*x)[0])) continue;
      const int s = (*x)[0] <= cut ? 0 : 1;
      sum[s] += (*x)[d];
      sq[s] += (*x)[d] * (*x)[d];
      cnt[s] += 1.0;
    }
    for (int s = 0; s < 2; ++s) {
      if (cnt[s] > 1.0) {
        mean_[s][d] = sum[s] / cnt[s];
        var_[s][d] = std::max(sq[s] / cnt[s] - mean_[s][d] * mean_[s][d], 1e-3 * pooled_var[d]);
      } else {
        mean_[s][d] = pooled_mean[d];
        var_[s][d] = pooled_var[d];
      }
    }
  }
  initial = {0.5, 0.5};
  transition = {{{0.9, 0.1}, {0.1, 0.9}}};

  double prev = -std::numeric_limits<double>::infinity();
  double ll = prev;
  for (int iter = 0; iter < max_iter; ++iter) {
    ll = 0.0;
    std::array<double, 2> init_acc{};
    std::array<std::array<double, 2>, 2> xi_acc{};
    std::array<std::vector<double>, 2> w(
        {std::vector<double>(dims, 0.0), std::vector<double>(dims, 0.0)});
    auto wx = w, wxx = w;
    for (const auto& seq : sequences) {
      if (seq.empty()) continue;
      std::vector<std::array<double, 2>> logb(seq.size());
      for (std::size_t t = 0; t < seq.size(); ++t) logb[t] = {log_emission(0, seq[t]), log_emission(1, seq[t])};
      const auto fb = forward_backward(*this, logb, true);
      ll += fb.loglik;
      for (int s = 0; s < 2; ++s) init_acc[s] += fb.gamma[0][s];
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) xi_acc[i][j] += fb.xi[i][j];
      }
      for (std::size_t t = 0; t < seq.size(); ++t) {
        for (std::size_t d = 0; d < dims; ++d) {
          const double x = seq[t][d];
          if (std::isnan(x)) continue;
          for (int s = 0; s < 2; ++s) {
            w[s][d] += fb.gamma[t][s];
            wx[s][d] += fb.gamma[t][s] * x;
            wxx[s][d] += fb.gamma[t][s] * x * x;
          }
        }
      }
    }
    const double init_total = init_acc[0] + init_acc[1];
    for (int s = 0; s < 2; ++s) initial[s] = std::clamp(init_acc[s] / init_total, 1e-6, 1.0 - 1e-6);
    for (int i = 0; i < 2; ++i) {
      const double row = xi_acc[i][0] + xi_acc[i][1];
      if (row > 0.0) {
        for (int j = 0; j < 2; ++j) transition[i][j] = std::clamp(xi_acc[i][j] / row, 1e-6, 1.0 - 1e-6);
      }
    }
    for (int s = 0; s < 2; ++s) {
      for (std::size_t d = 0; d < dims; ++d) {
        if (w[s][d] < 1e-9) continue;
        mean_[s][d] = wx[s][d] / w[s][d];
        var_[s][d] = std::max(wxx[s][d] / w[s][d] - mean_[s][d] * mean_[s][d], 1e-3 * pooled_var[d]);
      }
    }
    if (ll - prev < tol * std::max(1.0, std::fabs(ll))) break;
    prev = ll;
  }
  return ll;
}

// ---------------------------------------------------------------------------

EngagementObservations engagement_observations(const std::vector<EngagementStep>& steps, double slow_alpha) {
  std::vector<double> var, minor, correct;
  for (const auto& s : steps) {
    var.push_back(s.input_rate_variance);
    minor.push_back(s.minor_error);
    correct.push_back(s.correct ? 1.0 : 0.0);
  }
  const auto var_split = timescale_split(var, slow_alpha);
  const auto minor_split = timescale_split(minor, slow_alpha);
  const auto corr_split = timescale_split(correct, slow_alpha);
  EngagementObservations o;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    o.focused.push_back({var_split.local[t], minor_split.local[t]});
    o.receptive.push_back({steps[t].help_rate, corr_split.local[t]});
  }
  return o;
}

EngagementModel fit_engagement(const std::vector<EngagementObservations>& sessions) {
  EngagementModel m;
  std::vector<GaussianHmm2::Sequence> f, r;
  for (const auto& s : sessions) {
    if (s.focused.size() < 2) continue;
    f.push_back(s.focused);
    r.push_back(s.receptive);
  }
  if (f.empty()) return m;
  m.focused.fit(f);
  m.receptive.fit(r);
  // Focused: steadier input. Receptive: fewer help calls.
  m.focused_state = m.focused.var(0)[0] + m.focused.mean(0)[0] <= m.focused.var(1)[0] + m.focused.mean(1)[0] ? 0 : 1;
  m.receptive_state = m.receptive.mean(0)[0] <= m.receptive.mean(1)[0] ? 0 : 1;

  std::array<std::array<double, 2>, 2> joint{{{1.0, 1.0}, {1.0, 1.0}}};  // add-one smoothing
  double total = 4.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    const auto pf = m.focused.posteriors(f[k]);
    const auto pr = m.receptive.posteriors(r[k]);
    for (std::size_t t = 0; t < pf.size(); ++t) {
      const int fi = pf[t][m.focused_state] >= 0.5 ? 1 : 0;
      const int ri = pr[t][m.receptive_state] >= 0.5 ? 1 : 0;
      joint[fi][ri] += 1.0;
      total += 1.0;
    }
  }
  std::array<double, 2> mf{}, mr{};
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      joint[i][j] /= total;
      mf[i] += joint[i][j];
      mr[j] += joint[i][j];
    }
  }
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) m.cooccurrence[i][j] = joint[i][j] / (mf[i] * mr[j]);
  }
  return m;
}

EngagementModel fit_engagement(const std::vector<std::vector<EngagementStep>>& sessions, double slow_alpha) {
  std::vector<EngagementObservations> obs;
  for (const auto& s : sessions) obs.push_back(engagement_observations(s, slow_alpha));
  auto m = fit_engagement(obs);
  m.slow_alpha = slow_alpha;
  return m;
}

std::vector<EngagementEstimate> estimate_engagement(const EngagementModel& model, const EngagementObservations& obs,
                                                    bool smoothed) {
  const std::size_t n = obs.focused.size();
  if (obs.receptive.size() != n) throw Error("engagement: observation streams differ in length");
  std::vector<EngagementEstimate> out(n);
  if (n < 2) return out;
  const auto pf = model.focused.posteriors(obs.focused, smoothed);
  const auto pr = model.receptive.posteriors(obs.receptive, smoothed);
  for (std::size_t t = 0; t < n; ++t) {
    const std::array<double, 2> f{pf[t][1 - model.focused_state], pf[t][model.focused_state]};
    const std::array<double, 2> r{pr[t][1 - model.receptive_state], pr[t][model.receptive_state]};
    auto& e = out[t];
    double z = 0.0;
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        e.joint[i][j] = f[i] * r[j] * model.cooccurrence[i][j];
        z += e.joint[i][j];
      }
    }
    for (auto& row : e.joint) {
      for (double& v : row) v /= z;
    }
    e.p_focused = e.joint[1][0] + e.joint[1][1];
    e.p_receptive = e.joint[0][1] + e.joint[1][1];
  }
  return out;
}

std::vector<EngagementEstimate> estimate_engagement(const EngagementModel& model,
                                                    const std::vector<EngagementStep>& steps, bool smoothed) {
  return estimate_engagement(model, engagement_observations(steps, model.slow_alpha), smoothed);
}

namespace {

Json hmm_to_json(const GaussianHmm2& h) {
  return Json{{"initial", h.initial},
              {"transition", h.transition},
              {"mean", {h.mean(0), h.mean(1)}},
              {"var", {h.var(0), h.var(1)}}};
}

GaussianHmm2 hmm_from_json(const Json& j) {
  const auto means = j.at("mean").get<std::vector<std::vector<double>>>();
  const auto vars = j.at("var").get<std::vector<std::vector<double>>>();
  if (means.size() != 2 || vars.size() != 2 || means[0].size() != means[1].size()) {
    throw ValidationError("engagement model: malformed HMM");
  }
  GaussianHmm2 h(means[0].size());
  h.initial = j.at("initial").get<std::array<double, 2>>();
  h.transition = j.at("transition").get<std::array<std::array<double, 2>, 2>>();
  for (int s = 0; s < 2; ++s) {
    h.mean(s) = means[static_cast<std::size_t>(s)];
    h.var(s) = vars[static_cast<std::size_t>(s)];
  }
  return h;
}

}  // namespace

Json EngagementModel::to_json() const {
  return Json{{"focused", hmm_to_json(focused)},       {"receptive", hmm_to_json(receptive)},
              {"focused_state", focused_state},        {"receptive_state", receptive_state},
              {"cooccurrence", cooccurrence},          {"slow_alpha", slow_alpha}};
}

EngagementModel EngagementModel::from_json(const Json& j) {
  EngagementModel m;
  m.focused = hmm_from_json(j.at("focused"));
  m.receptive = hmm_from_json(j.at("receptive"));
  m.focused_state = j.at("focused_state").get<int>();
  m.receptive_state = j.at("receptive_state").get<int>();
  m.cooccurrence = j.at("cooccurrence").get<std::array<std::array<double, 2>, 2>>();
  m.slow_alpha = j.value("slow_alpha", kDefaultSlowAlpha);
  return m;
}

// ---------------------------------------------------------------------------

const std::vector<std::string>& erp_split_features() {
  static const std::vector<std::string> names{"input_rate", "input_rate_variance", "answer_ms", "help_rate"};
  return names;
}

std::vector<std::string> erp_feature_names() {
  std::vector<std::string> names;
  for (const auto& f : erp_split_features()) {
    names.push_back(f + ".trend");
    names.push_back(f + ".local");
  }
  for (const char* extra : {"non_focused", "non_receptive", "decay_s", "interference"}) names.emplace_back(extra);
  return names;
}

std::vector<double> erp_features(std::span<const double> split_trend_local, double non_focused, double non_receptive,
                                 double decay_s, double interference) {
  if (split_trend_local.size() != 2 * erp_split_features().size()) throw Error("erp: wrong split feature count");
  std::vector<double> x(split_trend_local.begin(), split_trend_local.end());
  x.insert(x.end(), {non_focused, non_receptive, decay_s, interference});
  return x;
}

ErpDataset build_erp_dataset(const std::vector<Session>& sessions, const EngagementModel& model) {
  ErpDataset d;
  d.feature_names = erp_feature_names();
  std::vector<std::vector<double>> rows;
  for (const auto& session : sessions) {
    const auto steps = extract_engagement_features(session);
    if (steps.empty()) continue;
    const auto eng = estimate_engagement(model, steps, /*smoothed=*/false);
    std::array<SplitSeries, 4> split;
    for (std::size_t f = 0; f < 4; ++f) {
      std::vector<double> raw;
      for (const auto& s : steps) {
        raw.push_back(f == 0 ? s.input_rate : f == 1 ? s.input_rate_variance : f == 2 ? s.answer_ms : s.help_rate);
      }
      split[f] = timescale_split(raw, model.slow_alpha);
    }
    for (std::size_t t = 0; t < steps.size(); ++t) {
      if (steps[t].correct) continue;
      std::size_t next = t + 1;
      while (next < steps.size() && steps[next].task != steps[t].task) ++next;
      if (next == steps.size()) continue;
      std::vector<double> tl;
      for (const auto& sp : split) {
        tl.push_back(sp.trend[t]);
        tl.push_back(sp.local[t]);
      }
      rows.push_back(erp_features(tl, 1.0 - eng[t].p_focused, 1.0 - eng[t].p_receptive, steps[next].decay_s,
                                  steps[next].interference));
      d.y.push_back(steps[next].correct ? 0 : 1);
      d.groups.push_back(session.student_id);
    }
  }
  const std::size_t p = d.feature_names.size();
  d.x.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(p));
  for (std::size_t j = 0; j < p; ++j) {
    std::vector<double> finite;
    for (const auto& r : rows) {
      if (std::isfinite(r[j])) finite.push_back(r[j]);
    }
    const double fill = finite.empty() ? 0.0 : stats::mean(finite);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      d.x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::isfinite(rows[i][j]) ? rows[i][j] : fill;
    }
  }
  return d;
}

ErpModel fit_erp(const ErpDataset& data, const ErpFitOptions& options, lasso::CrossValidation* cv_out) {
  if (data.y.empty()) throw ValidationError("erp: empty dataset");
  std::vector<std::string> groups = data.groups;
  if (groups.size() != data.y.size()) {
    groups.clear();
    for (std::size_t i = 0; i < data.y.size(); ++i) groups.push_back(std::to_string(i));
  }
  const auto folds = lasso::group_folds(groups, options.folds, options.seed);
  auto cv = lasso::cross_validate(data.x, data.y, folds, options.path);
  ErpModel m;
  m.feature_names = data.feature_names;
  m.weights.assign(cv.model.weights.data(), cv.model.weights.data() + cv.model.weights.size());
  m.intercept = cv.model.intercept;
  m.penalty = cv.model.penalty;
  if (cv_out) *cv_out = std::move(cv);
  return m;
}

double predict_erp(const ErpModel& model, std::span<const double> features) {
  if (features.size() != model.weights.size()) {
    throw ValidationError("erp: expected " + std::to_string(model.weights.size()) + " features, got " +
                          std::to_string(features.size()));
  }
  double z = model.intercept;
  for (std::size_t i = 0; i < features.size(); ++i) z += model.weights[i] * features[i];
  return stats::logistic(z);
}

Json ErpModel::to_json() const {
  return Json{{"weights", weights}, {"intercept", intercept}, {"penalty", penalty}, {"feature_names", feature_names}};
}

ErpModel ErpModel::from_json(const Json& j) {
  ErpModel m;
  m.weights = j.at("weights").get<std::vector<double>>();
  m.intercept = j.at("intercept").get<double>();
  m.penalty = j.at("penalty").get<double>();
  m.feature_names = j.value("feature_names", std::vector<std::string>{});
  if (!m.feature_names.empty() && m.feature_names.size() != m.weights.size()) {
    throw ValidationError("erp model: feature_names and weights differ in length");
  }
  return m;
}

}  // namespace kspace
