#include "kspace/knowledge_model.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "kspace/error.hpp"

namespace kspace {
namespace {

double bayes(double prior, double like1, double like0) {
  const double z = prior * like1 + (1.0 - prior) * like0;
  return z > 0.0 ? prior * like1 / z : prior;
}

double product_except(const std::vector<double>& m, const std::vector<SkillNet::Index>& idx,
                      SkillNet::Index skip) {
  double g = 1.0;
  for (auto q : idx) {
    if (q != skip) g *= m[q];
  }
  return g;
}

}  // namespace

ParamSet default_params(const SkillNet& net, SkillParams p) { return ParamSet(net.size(), p); }

double predict_correct(double p_learned, const SkillParams& params) {
  return p_learned * (1.0 - params.slip) + (1.0 - p_learned) * params.guess;
}

SkillBelief::SkillBelief(const SkillNet& net, double initial)
    : p_open_(net.size(), initial), p_closed_(net.size(), initial), marginal_(net.size(), initial) {
  refresh(net);
}

SkillBelief SkillBelief::from_marginals(const SkillNet& net, const std::vector<double>& p) {
  if (p.size() != net.size()) throw Error("from_marginals: one value per skill required");
  SkillBelief b(net);
  b.p_open_ = p;
  b.p_closed_ = p;
  b.refresh(net);
  return b;
}

SkillBelief init_beliefs(const SkillNet& net) { return SkillBelief(net, 0.5); }

double SkillBelief::gate(const SkillNet& net, SkillNet::Index skill) const {
  double g = 1.0;
  for (auto q : net.parents(skill)) g *= marginal_[q];
  return g;
}

void SkillBelief::refresh(const SkillNet& net) {
  // Indices are topological, so parents are final before their children.
  for (SkillNet::Index i = 0; i < marginal_.size(); ++i) {
    const double g = gate(net, i);
    marginal_[i] = g * p_open_[i] + (1.0 - g) * p_closed_[i];
  }
}

void SkillBelief::observe(const SkillNet& net, const ParamSet& params, SkillNet::Index s, bool correct) {
  const SkillParams& sp = params.at(s);
  const double like1 = correct ? 1.0 - sp.slip : sp.slip;
  const double like0 = correct ? sp.guess : 1.0 - sp.guess;
  const double obs_open = p_open_[s] * like1 + (1.0 - p_open_[s]) * like0;
  const double obs_closed = p_closed_[s] * like1 + (1.0 - p_closed_[s]) * like0;

  // Soft evidence on each precursor q: the answer's likelihood given x_q,
  // marginalising the other precursors through the gate.
  const auto& parents = net.parents(s);
  std::vector<std::array<double, 2>> lambda;
  lambda.reserve(parents.size());
  for (auto q : parents) {
    const double others = product_except(marginal_, parents, q);
    lambda.push_back({others * obs_open + (1.0 - others) * obs_closed, obs_closed});
  }
  for (std::size_t k = 0; k < parents.size(); ++k) {
    const auto q = parents[k];
    p_open_[q] = bayes(p_open_[q], lambda[k][0], lambda[k][1]);
    p_closed_[q] = bayes(p_closed_[q], lambda[k][0], lambda[k][1]);
  }
  p_open_[s] = bayes(p_open_[s], like1, like0);
  p_closed_[s] = bayes(p_closed_[s], like1, like0);
  refresh(net);

  transition(net, params, s);
  refresh(net);
}

void SkillBelief::transition(const SkillNet& net, const ParamSet& params, SkillNet::Index s) {
  const SkillParams& sp = params.at(s);
  const double ms = marginal_[s];
  const double gs = gate(net, s);
  // P(gate open | x_s = 0) drives the marginal 0 -> 1 rate of s.
  const double open_given_unlearned = ms < 1.0 ? gs * (1.0 - p_open_[s]) / (1.0 - ms) : 0.0;
  const std::array<double, 2> to_learned{sp.learn * open_given_unlearned, 1.0 - sp.forget};

  // Re-condition each successor on its new gate: the successor's own state
  // does not move when s moves, only which gate branch it is filed under.
  for (auto c : net.children(s)) {
    const double others = product_except(marginal_, net.parents(c), s);
    double open_mass[2] = {0.0, 0.0};    // [x_c]
    double closed_mass[2] = {0.0, 0.0};  // [x_c]
    for (int xs = 0; xs < 2; ++xs) {
      const double pxs = xs ? ms : 1.0 - ms;
      for (int go = 0; go < 2; ++go) {
        const double pgo = go ? others : 1.0 - others;
        const double pc = (xs && go) ? p_open_[c] : p_closed_[c];
        for (int xs_next = 0; xs_next < 2; ++xs_next) {
          const double t = xs_next ? to_learned[xs] : 1.0 - to_learned[xs];
          const double w = pxs * pgo * t;
          double* bucket = (xs_next && go) ? open_mass : closed_mass;
          bucket[1] += w * pc;
          bucket[0] += w * (1.0 - pc);
        }
      }
    }
    if (open_mass[0] + open_mass[1] > 0.0) p_open_[c] = open_mass[1] / (open_mass[0] + open_mass[1]);
    if (closed_mass[0] + closed_mass[1] > 0.0) {
      p_closed_[c] = closed_mass[1] / (closed_mass[0] + closed_mass[1]);
    }
  }

  p_open_[s] = p_open_[s] * (1.0 - sp.forget) + (1.0 - p_open_[s]) * sp.learn;
  p_closed_[s] = p_closed_[s] * (1.0 - sp.forget);
  if (net.parents(s).empty()) p_closed_[s] = p_open_[s];
}

void SkillBelief::advance(const SkillNet& net, const ParamSet& params) {
  // Successors first, so each transition sees its precursors' old states.
  for (auto i = marginal_.size(); i-- > 0;) {
    transition(net, params, i);
    refresh(net);
  }
}

std::map<std::string, double> SkillBelief::to_map(const SkillNet& net) const {
  std::map<std::string, double> out;
  for (SkillNet::Index i = 0; i < marginal_.size(); ++i) out[net.skill(i).id] = marginal_[i];
  return out;
}

SkillBelief update_on_answer(SkillBelief beliefs, const SkillNet& net, const ParamSet& params,
                             const std::string& skill, bool correct) {
  beliefs.observe(net, params, net.index_of(skill), correct);
  return beliefs;
}

// ---------------------------------------------------------------------------
// Exact enumeration

std::vector<std::vector<double>> exact_filter(const SkillNet& net, const ParamSet& params,
                                              const AnswerSequence& history) {
  const std::size_t n = net.size();
  if (n > kMaxExactSkills) {
    throw Error("exact inference supports at most " + std::to_string(kMaxExactSkills) +
                " skills; use SkillBelief (factored update) for larger nets");
  }
  const std::size_t states = std::size_t{1} << n;
  std::vector<std::uint32_t> parent_mask(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto q : net.parents(i)) parent_mask[i] |= 1u << q;
  }
  std::vector<double> w(states, 1.0 / static_cast<double>(states));
  std::vector<double> next(states);
  std::vector<std::vector<double>> out;
  out.reserve(history.size());

  for (const auto& obs : history) {
    const std::size_t s = obs.skill;
    if (s >= n) throw UnknownIdError("observation on skill index " + std::to_string(s));
    const SkillParams& sp = params.at(s);
    const std::uint32_t bit = 1u << s;
    const double like1 = obs.correct ? 1.0 - sp.slip : sp.slip;
    const double like0 = obs.correct ? sp.guess : 1.0 - sp.guess;
    double z = 0.0;
    for (std::size_t x = 0; x < states; ++x) {
      w[x] *= (x & bit) ? like1 : like0;
      z += w[x];
    }
    if (z <= 0.0) throw Error("observation has zero probability under the model");
    for (double& v : w) v /= z;

    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t x = 0; x < states; ++x) {
      const std::uint32_t xs = static_cast<std::uint32_t>(x);
      double p_on;
      if (xs & bit) {
        p_on = 1.0 - sp.forget;
      } else {
        p_on = (xs & parent_mask[s]) == parent_mask[s] ? sp.learn : 0.0;
      }
      next[xs | bit] += w[x] * p_on;
      next[xs & ~bit] += w[x] * (1.0 - p_on);
    }
    w.swap(next);

    std::vector<double> m(n, 0.0);
    for (std::size_t x = 0; x < states; ++x) {
      for (std::size_t i = 0; i < n; ++i) {
        if (x & (std::size_t{1} << i)) m[i] += w[x];
      }
    }
    out.push_back(std::move(m));
  }
  return out;
}

std::vector<double> exact_infer(const SkillNet& net, const ParamSet& params, const AnswerSequence& history) {
  auto rows = exact_filter(net, params, history);
  if (rows.empty()) return std::vector<double>(net.size(), 0.5);
  return rows.back();
}

// ---------------------------------------------------------------------------
// Parameter fitting

namespace {

struct Step {
  bool correct;
  double gate;
};

struct Accumulator {
  double slip_num = 0, slip_den = 0;
  double guess_num = 0, guess_den = 0;
  double forget_num = 0, forget_den = 0;
  double learn_events = 0;
  std::vector<std::pair<double, double>> stay_unlearned;  // (expected 0->0 mass, gate)
  double log_likelihood = 0;
  std::size_t observations = 0;
};

void forward_backward(const std::vector<Step>& chain, const SkillParams& p, Accumulator& acc) {
  const std::size_t T = chain.size();
  if (T == 0) return;
  auto emit = [&](int x, bool c) {
    return x ? (c ? 1.0 - p.slip : p.slip) : (c ? p.guess : 1.0 - p.guess);
  };
  auto trans = [&](std::size_t k, int from, int to) {
    const double on = from ? 1.0 - p.forget : p.learn * chain[k].gate;
    return to ? on : 1.0 - on;
  };
  std::vector<std::array<double, 2>> alpha(T), beta(T);
  std::vector<double> scale(T);
  alpha[0] = {0.5 * emit(0, chain[0].correct), 0.5 * emit(1, chain[0].correct)};
  for (std::size_t k = 0;; ++k) {
    scale[k] = alpha[k][0] + alpha[k][1];
    alpha[k][0] /= scale[k];
    alpha[k][1] /= scale[k];
    if (k + 1 == T) break;
    for (int j = 0; j < 2; ++j) {
      alpha[k + 1][j] = (alpha[k][0] * trans(k, 0, j) + alpha[k][1] * trans(k, 1, j)) *
                        emit(j, chain[k + 1].correct);
    }
  }
  beta[T - 1] = {1.0, 1.0};
  for (std::size_t k = T - 1; k-- > 0;) {
    for (int i = 0; i < 2; ++i) {
      beta[k][i] = (trans(k, i, 0) * emit(0, chain[k + 1].correct) * beta[k + 1][0] +
                    trans(k, i, 1) * emit(1, chain[k + 1].correct) * beta[k + 1][1]) /
                   scale[k + 1];
    }
  }
  for (std::size_t k = 0; k < T; ++k) {
    const double g1 = alpha[k][1] * beta[k][1];
    const double g0 = alpha[k][0] * beta[k][0];
    const double z = g0 + g1;
    const double p1 = g1 / z, p0 = g0 / z;
    acc.slip_den += p1;
    acc.guess_den += p0;
    if (chain[k].correct) {
      acc.guess_num += p0;
    } else {
      acc.slip_num += p1;
    }
    acc.log_likelihood += std::log(scale[k]);
    if (k + 1 < T) {
      double xi[2][2];
      double zx = 0.0;
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          xi[i][j] = alpha[k][i] * trans(k, i, j) * emit(j, chain[k + 1].correct) * beta[k + 1][j];
          zx += xi[i][j];
        }
      }
      for (auto& row : xi) {
        for (double& v : row) v /= zx;
      }
      acc.forget_num += xi[1][0];
      acc.forget_den += xi[1][0] + xi[1][1];
      acc.learn_events += xi[0][1];
      if (xi[0][0] > 0.0) acc.stay_unlearned.emplace_back(xi[0][0], chain[k].gate);
    }
  }
  acc.observations += T;
}

// Maximises sum(events) * log(l) + sum_k stay_k * log(1 - l * g_k) over l.
double solve_learn(const Accumulator& acc, double lo) {
  if (acc.learn_events <= 0.0) return lo;
  auto slope = [&](double l) {
    double d = acc.learn_events / l;
    for (const auto& [stay, g] : acc.stay_unlearned) d -= stay * g / (1.0 - l * g);
    return d;
  };
  double a = lo, b = 1.0 - 1e-9;
  if (slope(b) >= 0.0) return b;
  if (slope(a) <= 0.0) return a;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (a + b);
    (slope(mid) > 0.0 ? a : b) = mid;
  }
  return 0.5 * (a + b);
}

}  // namespace

double sequence_log_likelihood(const std::vector<AnswerSequence>& students, const SkillNet& net,
                               const ParamSet& params) {
  double ll = 0.0;
  for (const auto& seq : students) {
    SkillBelief b(net);
    for (const auto& o : seq) {
      const double p = predict_correct(b[o.skill], params[o.skill]);
      ll += std::log(o.correct ? p : 1.0 - p);
      b.observe(net, params, o.skill, o.correct);
    }
  }
  return ll;
}

ParamSet fit_params(const std::vector<AnswerSequence>& students, const SkillNet& net,
                    const FitOptions& options, FitSummary* summary) {
  const std::size_t n = net.size();
  ParamSet params(n, options.initial);
  std::vector<std::size_t> counts(n, 0);
  for (const auto& seq : students) {
    for (const auto& o : seq) {
      if (o.skill >= n) throw UnknownIdError("observation on skill index " + std::to_string(o.skill));
      ++counts[o.skill];
    }
  }
  const FitBounds& bd = options.bounds;
  std::vector<Accumulator> acc;
  double previous_ll = -INFINITY;
  int iteration = 0;
  bool converged = false;
  const bool any_data = std::any_of(counts.begin(), counts.end(), [](auto c) { return c > 0; });

  for (; any_data && iteration < options.max_iterations; ++iteration) {
    // E-step part 1: gate covariates from the factored filter.
    std::vector<std::vector<std::vector<Step>>> chains(students.size(), std::vector<std::vector<Step>>(n));
#pragma omp parallel for schedule(dynamic)
    for (std::size_t u = 0; u < students.size(); ++u) {
      SkillBelief b(net);
      for (const auto& o : students[u]) {
        chains[u][o.skill].push_back({o.correct, b.gate(net, o.skill)});
        b.observe(net, params, o.skill, o.correct);
      }
    }
    // E-step part 2: per-skill forward-backward.
    acc.assign(n, Accumulator{});
#pragma omp parallel for schedule(dynamic)
    for (std::size_t s = 0; s < n; ++s) {
      if (counts[s] == 0) continue;
      for (std::size_t u = 0; u < students.size(); ++u) forward_backward(chains[u][s], params[s], acc[s]);
    }
    double ll = 0.0;
    for (const auto& a : acc) ll += a.log_likelihood;

    // M-step with projection into the constraint box.
    for (std::size_t s = 0; s < n; ++s) {
      if (counts[s] == 0) continue;
      const Accumulator& a = acc[s];
      SkillParams& p = params[s];
      p.slip = a.slip_den > 0 ? a.slip_num / a.slip_den : p.slip;
      p.guess = a.guess_den > 0 ? a.guess_num / a.guess_den : p.guess;
      p.slip = std::clamp(p.slip, bd.min_prob, bd.slip_max - 1e-6);
      p.guess = std::clamp(p.guess, bd.min_prob, bd.guess_max - 1e-6);
      p.learn = std::clamp(solve_learn(a, 1e-4), 1e-4, 1.0);
      p.forget = a.forget_den > 0 ? a.forget_num / a.forget_den : p.forget;
      p.forget = std::clamp(p.forget, 0.0, bd.forget_le_learn ? p.learn : 1.0);
    }
    if (std::fabs(ll - previous_ll) <= options.tolerance * std::max(1.0, std::fabs(ll))) {
      converged = true;
      previous_ll = ll;
      ++iteration;
      break;
    }
    previous_ll = ll;
  }

  if (summary) {
    summary->skills.clear();
    summary->iterations = iteration;
    summary->converged = converged || !any_data;
    summary->log_likelihood = any_data ? previous_ll : 0.0;
    for (std::size_t s = 0; s < n; ++s) {
      if (counts[s] == 0) continue;
      SkillFitReport r;
      r.skill = net.skill(s).id;
      r.observations = counts[s];
      r.fitted = true;
      const SkillParams& p = params[s];
      auto near = [](double a, double b) { return std::fabs(a - b) < 1e-5; };
      r.degenerate = near(p.slip, bd.min_prob) || near(p.slip, bd.slip_max - 1e-6) ||
                     near(p.guess, bd.min_prob) || near(p.guess, bd.guess_max - 1e-6) ||
                     near(p.learn, 1.0);
      summary->skills.push_back(r);
    }
  }
  return params;
}

nlohmann::json FitSummary::to_json() const {
  nlohmann::json j;
  j["iterations"] = iterations;
  j["converged"] = converged;
  j["log_likelihood"] = log_likelihood;
  j["skills"] = nlohmann::json::array();
  for (const auto& s : skills) {
    j["skills"].push_back({{"skill", s.skill},
                           {"observations", s.observations},
                           {"fitted", s.fitted},
                           {"degenerate", s.degenerate}});
  }
  return j;
}

nlohmann::json params_to_json(const SkillNet& net, const ParamSet& params) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto& p = params.at(i);
    j[net.skill(i).id] = {{"slip", p.slip}, {"guess", p.guess}, {"learn", p.learn}, {"forget", p.forget}};
  }
  return j;
}

ParamSet params_from_json(const SkillNet& net, const nlohmann::json& doc) {
  ParamSet params = default_params(net);
  for (const auto& [id, v] : doc.items()) {
    auto& p = params[net.index_of(id)];
    p.slip = v.value("slip", p.slip);
    p.guess = v.value("guess", p.guess);
    p.learn = v.value("learn", p.learn);
    p.forget = v.value("forget", p.forget);
    if (p.slip + p.guess >= 1.0) throw ValidationError("skill " + id + ": slip + guess must be < 1");
  }
  return params;
}

}  // namespace kspace
