// Acceptance suite: one PASS/FAIL line per criterion.
//   kspace_acceptance            run all
//   kspace_acceptance 3 7        run the listed criteria
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "kspace/controller.hpp"
#include "kspace/dd_screener.hpp"
#include "kspace/embedding.hpp"
#include "kspace/engagement.hpp"
#include "kspace/event_log.hpp"
#include "kspace/io.hpp"
#include "kspace/knowledge_model.hpp"
#include "kspace/rng.hpp"
#include "kspace/simulator.hpp"
#include "kspace/spelling_model.hpp"
#include "kspace/stats.hpp"
#include "kspace/temporal_clustering.hpp"
#include "kspace/trait_clustering.hpp"

using namespace kspace;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

SkillNet random_dag(int n, double p_edge, Rng& rng) {
  std::vector<Skill> skills(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) skills[static_cast<std::size_t>(i)].id = "k" + std::to_string(i);
  std::vector<std::pair<std::string, std::string>> edges;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.bernoulli(p_edge)) edges.emplace_back(skills[i].id, skills[j].id);
  return SkillNet(skills, edges);
}

// Draws answers from the generative model the exact filter assumes.
AnswerSequence sample_answers(const SkillNet& net, const ParamSet& params, int length, Rng& rng,
                              const std::function<SkillNet::Index(int, const std::vector<bool>&)>& pick) {
  std::vector<bool> x(net.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.bernoulli(0.5);
  AnswerSequence out;
  for (int t = 0; t < length; ++t) {
    const auto s = pick(t, x);
    const auto& p = params[s];
    const bool correct = rng.bernoulli(x[s] ? 1.0 - p.slip : p.guess);
    out.push_back({s, correct});
    bool gate = true;
    for (auto q : net.parents(s)) gate = gate && x[q];
    if (x[s]) {
      if (rng.bernoulli(p.forget)) x[s] = false;
    } else if (gate && rng.bernoulli(p.learn)) {
      x[s] = true;
    }
  }
  return out;
}

// 1 ------------------------------------------------------------------------
Outcome inference_oracle() {
  Rng rng(101);
  double worst = 0.0, worst_step = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    auto net = random_dag(8, 0.3, rng);
    ParamSet params(net.size());
    for (auto& p : params) p = {rng.uniform(0.05, 0.25), rng.uniform(0.1, 0.3), rng.uniform(0.05, 0.3), rng.uniform(0.0, 0.02)};
    auto h = sample_answers(net, params, 50, rng, [&](int, const std::vector<bool>&) { return rng.below(net.size()); });
    auto exact = exact_filter(net, params, h);
    SkillBelief b = init_beliefs(net);
    for (std::size_t t = 0; t < h.size(); ++t) {
      b.observe(net, params, h[t].skill, h[t].correct);
      double l1 = 0.0;
      for (std::size_t s = 0; s < net.size(); ++s) l1 += std::fabs(b[s] - exact[t][s]);
      worst_step = std::max(worst_step, l1 / static_cast<double>(net.size()));
      if (t + 1 == h.size()) worst = std::max(worst, l1 / static_cast<double>(net.size()));
    }
  }
  double empty_err = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    auto net = random_dag(8, 0.0, rng);
    ParamSet params(net.size());
    for (auto& p : params) p = {rng.uniform(0.05, 0.25), rng.uniform(0.1, 0.3), rng.uniform(0.05, 0.3), rng.uniform(0.0, 0.02)};
    auto h = sample_answers(net, params, 50, rng, [&](int, const std::vector<bool>&) { return rng.below(net.size()); });
    auto exact = exact_infer(net, params, h);
    SkillBelief b = init_beliefs(net);
    for (const auto& o : h) b.observe(net, params, o.skill, o.correct);
    for (std::size_t s = 0; s < net.size(); ++s) empty_err = std::max(empty_err, std::fabs(b[s] - exact[s]));
  }
  return {worst <= 0.05 && empty_err <= 1e-12,
          fmt("max L1/skill after 50 answers %.4f (any step %.4f), no-edge max error %.2e", worst, worst_step,
              empty_err)};
}

// 2, 3 ---------------------------------------------------------------------
struct KnowledgeData {
  SkillNet net;
  ParamSet truth;
  std::vector<AnswerSequence> train, test;
};

KnowledgeData knowledge_data() {
  KnowledgeData d;
  std::vector<Skill> skills(4);
  for (int i = 0; i < 4; ++i) skills[static_cast<std::size_t>(i)].id = "c" + std::to_string(i);
  d.net = SkillNet(skills, {{"c0", "c1"}, {"c1", "c2"}, {"c2", "c3"}});
  d.truth.assign(4, SkillParams{0.1, 0.2, 0.15, 0.0});
  Rng rng(202);
  // Curriculum order with a little interleaving: 25 answers per skill.
  auto pick = [&](int t, const std::vector<bool>&) -> SkillNet::Index {
    const auto base = static_cast<SkillNet::Index>(t / 25);
    return rng.bernoulli(0.15) ? rng.below(base + 1) : base;
  };
  for (int u = 0; u < 500; ++u) d.train.push_back(sample_answers(d.net, d.truth, 100, rng, pick));
  for (int u = 0; u < 200; ++u) d.test.push_back(sample_answers(d.net, d.truth, 100, rng, pick));
  return d;
}

Outcome parameter_recovery() {
  auto d = knowledge_data();
  FitSummary summary;
  auto fitted = fit_params(d.train, d.net, {}, &summary);
  double err = 0.0;
  int terms = 0;
  std::string each;
  for (std::size_t s = 0; s < fitted.size(); ++s) {
    err += std::fabs(fitted[s].slip - d.truth[s].slip) + std::fabs(fitted[s].guess - d.truth[s].guess) +
           std::fabs(fitted[s].learn - d.truth[s].learn);
    terms += 3;
    each += fmt(" [%.3f %.3f %.3f]", fitted[s].slip, fitted[s].guess, fitted[s].learn);
  }
  err /= terms;
  return {err <= 0.05, fmt("MAE %.4f over slip/guess/learn (planted 0.10 0.20 0.15);", err) + each};
}

// Held-out students from the math scenario, each sequence in skill-net indices.
std::vector<AnswerSequence> math_sequences(const SkillNet& net, std::size_t population, std::uint64_t seed) {
  auto cfg = sim::SimConfig::from_json(Json::parse(io::read_text_file(fs::path(KSPACE_DATA_DIR) / "sim_math.json")));
  cfg.population = population;
  cfg.seed = seed;
  const auto run = sim::simulate(cfg);
  std::vector<AnswerSequence> out;
  for (const auto& [sid, evs] : by_student(run.events)) {
    AnswerSequence seq;
    for (const auto& a : answers(evs))
      if (net.contains(a.skill)) seq.push_back(Observation{net.index_of(a.skill), a.correct});
    out.push_back(std::move(seq));
  }
  return out;
}

Outcome prediction_quality() {
  const auto net = SkillNet::load(sample_skill_net_path());
  const auto train = math_sequences(net, 300, 301);
  const auto test = math_sequences(net, 150, 302);
  const auto fitted = fit_params(train, net);
  const auto cfg = sim::SimConfig::from_json(Json::parse(io::read_text_file(fs::path(KSPACE_DATA_DIR) / "sim_math.json")));
  auto one_step_auc = [&](const ParamSet& params, std::size_t* n = nullptr) {
    std::vector<double> scores;
    std::vector<int> labels;
    for (const auto& seq : test) {
      SkillBelief b = init_beliefs(net);
      for (const auto& o : seq) {
        scores.push_back(predict_correct(b[o.skill], params[o.skill]));
        labels.push_back(o.correct ? 1 : 0);
        b.observe(net, params, o.skill, o.correct);
      }
    }
    if (n) *n = scores.size();
    return stats::roc_auc(scores, labels);
  };
  std::size_t n = 0;
  const double auc = one_step_auc(fitted, &n);
  const double planted = one_step_auc(default_params(net, cfg.params));
  return {auc >= 0.75, fmt("held-out next-answer AUC %.4f on %zu predictions from %zu students (planted parameters "
                           "give %.4f)",
                           auc, n, test.size(), planted)};
}

// 4 ------------------------------------------------------------------------
Outcome malrule_recovery() {
  const auto tables = SpellingTables::defaults();
  const auto words = load_word_database(fs::path(KSPACE_DATA_DIR) / "words_sample.json");
  Rng rng(404);
  double rel = 0.0;
  int n_rel = 0;
  const int students = 20;
  for (int st = 0; st < students; ++st) {
    std::array<double, kMalRuleCount> lambda{};
    for (auto& l : lambda) l = rng.uniform(0.01, 0.05);
    MalRuleProfile profile;
    for (int k = 0; k < 300; ++k) {
      const auto& w = words[rng.below(words.size())];
      RuleCounts req{};
      for (std::size_t r = 0; r < kMalRuleCount; ++r) req[r] = static_cast<int>(rng.poisson(lambda[r] * w.opportunities[r]));
      const auto typed = render_errors(w, req, tables, rng).first;
      profile = update_profile(profile, w, analyze_input(w, typed, tables));
    }
    for (std::size_t r = 0; r < kMalRuleCount; ++r) {
      rel += std::fabs(profile.rules[r].mean() - lambda[r]) / lambda[r];
      ++n_rel;
    }
  }
  rel /= n_rel;

  int agree = 0;
  for (int inst = 0; inst < 1000; ++inst) {
    MalRuleProfile p;
    for (auto& g : p.rules) g = {rng.uniform(0.1, 5.0), rng.uniform(1.0, 50.0)};
    std::vector<WordEntry> db;
    std::vector<CycleState> states;
    const std::size_t m = 2 + rng.below(30);
    for (std::size_t i = 0; i < m; ++i) {
      db.push_back(words[rng.below(words.size())]);
      CycleState c;
      const auto ph = rng.below(3);
      c.phase = ph == 0 ? CyclePhase::Training : ph == 1 ? CyclePhase::Recap : CyclePhase::Done;
      c.last_presented = static_cast<std::int64_t>(rng.below(5)) - 1;
      states.push_back(c);
    }
    // brute force: lowest open group, then max ratio, least recent, word order
    std::optional<std::size_t> want;
    int group = std::numeric_limits<int>::max();
    for (std::size_t i = 0; i < m; ++i)
      if (states[i].phase != CyclePhase::Done) group = std::min(group, db[i].group);
    for (std::size_t i = 0; i < m; ++i) {
      if (states[i].phase == CyclePhase::Done || db[i].group != group) continue;
      if (!want) {
        want = i;
        continue;
      }
      const double a = word_error_expectation(p, db[i]).per_letter;
      const double b = word_error_expectation(p, db[*want]).per_letter;
      const auto key_a = std::make_tuple(-a, states[i].last_presented, db[i].word);
      const auto key_b = std::make_tuple(-b, states[*want].last_presented, db[*want].word);
      if (key_a < key_b) want = i;
    }
    const auto got = select_next_word(p, db, states);
    // duplicate words with identical keys are interchangeable
    const bool same = got == want || (got && want && db[*got].word == db[*want].word &&
                                      states[*got].last_presented == states[*want].last_presented);
    agree += same;
  }
  return {rel <= 0.20 && agree == 1000,
          fmt("mean relative error %.3f over %d rates; select_next_word agrees on %d/1000", rel, n_rel, agree)};
}

// 5 ------------------------------------------------------------------------
Outcome training_cycle() {
  Rng rng(505);
  int ok = 0;
  for (int c = 0; c < 10000; ++c) {
    const double p_err = rng.uniform(0.0, 0.9);
    CycleState s;
    int run = 0;
    bool good = true;
    for (int step = 0; step < 1000 && s.phase != CyclePhase::Done; ++step) {
      const bool correct = !rng.bernoulli(p_err);
      s = cycle_step(s, correct, s.presentations == 0);
      run = correct ? run + 1 : 0;
      if (s.phase == CyclePhase::Done && run != 2) good = false;
      if (s.phase != CyclePhase::Done && run >= 2) good = false;
    }
    ok += good && s.phase == CyclePhase::Done;
  }
  return {ok == 10000, fmt("%d/10000 interleavings reach Done exactly after two consecutive correct entries", ok)};
}

// 6 ------------------------------------------------------------------------
Outcome wheel_spinning() {
  std::vector<Skill> one(1);
  one[0].id = "skill";
  SkillNet net(one, {});
  const ParamSet model{{0.05, 0.2, 0.2, 0.0}};
  const StopPolicyConfig cfg;
  Rng rng(606);
  const int n = 1000;
  struct Rates {
    int tp = 0, fn = 0, fp = 0, tn = 0;
  } dbn, freq;
  for (int i = 0; i < n; ++i) {
    const bool spinner = i % 10 == 0;
    const double learn = spinner ? 0.0 : rng.uniform(0.2, 0.45);
    const double slip = rng.uniform(0.02, 0.08), guess = rng.uniform(0.15, 0.25);
    bool learned = false;
    std::array<bool, 60> answers{};
    for (auto& a : answers) {
      a = rng.bernoulli(learned ? 1.0 - slip : guess);
      if (!learned && rng.bernoulli(learn)) learned = true;
    }
    SkillModelAdapter a(net, model, 0);
    FrequencyModel f;
    const bool flag_a = run_stop_policy(a, answers, cfg).decision == StopDecision::WheelSpinning;
    const bool flag_f = run_stop_policy(f, answers, cfg).decision == StopDecision::WheelSpinning;
    auto tally = [&](Rates& r, bool flag) {
      if (spinner) (flag ? r.tp : r.fn)++;
      else (flag ? r.fp : r.tn)++;
    };
    tally(dbn, flag_a);
    tally(freq, flag_f);
  }
  auto tpr = [](const Rates& r) { return static_cast<double>(r.tp) / (r.tp + r.fn); };
  auto fpr = [](const Rates& r) { return static_cast<double>(r.fp) / (r.fp + r.tn); };
  const bool pass = tpr(dbn) >= 0.8 && fpr(dbn) <= 0.1 && tpr(freq) >= 0.8 && fpr(freq) <= 0.1;
  return {pass, fmt("DBN: TPR %.3f FPR %.3f; frequency: TPR %.3f FPR %.3f (10%% spinners, n=%d)", tpr(dbn), fpr(dbn),
                    tpr(freq), fpr(freq), n)};
}

// 7 ------------------------------------------------------------------------
Outcome cluster_count() {
  int hits = 0;
  double ari = 0.0, worst = 1.0;
  for (int seed = 1; seed <= 20; ++seed) {
    auto sim = sim::generate_trait_profiles(30, static_cast<std::uint64_t>(seed));
    auto r = cluster_offline(sim.complete, {.seed = static_cast<std::uint64_t>(seed)});
    hits += r.model.k() == 6;
    const double a = stats::adjusted_rand_index(r.labels, sim.truth);
    ari += a / 20.0;
    worst = std::min(worst, a);
  }
  return {hits >= 18 && ari >= 0.9, fmt("K=6 chosen in %d/20 seeds; adjusted-Rand mean %.3f, min %.3f", hits, ari, worst)};
}

// 8 ------------------------------------------------------------------------
Outcome online_classification() {
  const int max_sessions = 10;
  std::vector<double> acc(max_sessions + 1, 0.0);
  for (int seed = 1; seed <= 20; ++seed) {
    auto sim = sim::generate_trait_profiles(60, static_cast<std::uint64_t>(1000 + seed));
    // even rows train, odd rows are new students
    ProfileSet train = sim.complete;
    train.students.clear();
    std::vector<int> train_truth;
    for (std::size_t i = 0; i < sim.complete.students.size(); i += 2) {
      train.students.push_back(sim.complete.students[i]);
      train_truth.push_back(sim.truth[i]);
    }
    auto r = cluster_offline(train, {.fixed_k = 6, .seed = static_cast<std::uint64_t>(seed)});
    // cluster -> subgroup by maximum overlap
    Eigen::MatrixXd cost = Eigen::MatrixXd::Zero(6, 6);
    for (std::size_t i = 0; i < r.labels.size(); ++i) cost(r.labels[i], train_truth[i]) -= 1.0;
    const auto match = hungarian(cost);
    for (int s = 1; s <= max_sessions; ++s) {
      const auto seen = observe_profiles(sim, s);
      int ok = 0, total = 0;
      for (std::size_t i = 1; i < seen.students.size(); i += 2) {
        const auto c = classify_online(r.model, seen.feature_names, seen.students[i].features);
        ok += match[static_cast<std::size_t>(c.subgroup)] == sim.truth[i];
        ++total;
      }
      acc[static_cast<std::size_t>(s)] += static_cast<double>(ok) / total / 20.0;
    }
  }
  bool monotone = true;
  std::string series;
  for (int s = 1; s <= max_sessions; ++s) {
    series += fmt(" %.3f", acc[static_cast<std::size_t>(s)]);
    if (s > 1 && acc[static_cast<std::size_t>(s)] < acc[static_cast<std::size_t>(s - 1)]) monotone = false;
  }
  return {acc[5] >= 0.5 && monotone, fmt("accuracy after 5 sessions %.3f (chance 0.167); by session:", acc[5]) + series};
}

// 9 ------------------------------------------------------------------------
Outcome temporal_stability() {
  int wins = 0;
  double recovery = 0.0;
  for (int seed = 1; seed <= 20; ++seed) {
    auto sim = sim::generate_behavior(15, 8, static_cast<std::uint64_t>(seed));
    double cons[2] = {0.0, 0.0};
    int m = 0;
    for (auto mode : {SmoothingMode::None, SmoothingMode::Adaptive}) {
      auto r = temporal_cluster(sim.chains, {.mode = mode, .seed = static_cast<std::uint64_t>(seed)});
      for (std::size_t t = 1; t < r.labels.size(); ++t) cons[m] += stats::adjusted_rand_index(r.labels[t], r.labels[t - 1]);
      if (mode == SmoothingMode::Adaptive) recovery += stats::adjusted_rand_index(r.labels.back(), sim.truth) / 20.0;
      ++m;
    }
    wins += cons[1] > cons[0];
  }
  return {wins >= 18 && recovery >= 0.8,
          fmt("adaptive beats no smoothing in %d/20 seeds; final-session adjusted-Rand vs archetypes %.3f", wins,
              recovery)};
}

// 10 -----------------------------------------------------------------------
Outcome screener() {
  auto train = sim::generate_screening(400, 0.5, 1001);
  auto test = sim::generate_screening(400, 0.5, 1002);
  auto selected = select_features(train.data, {.alpha = 0.05, .bonferroni = true});
  std::vector<std::string> order;
  for (const auto& f : selected) order.push_back(f.id);
  auto model = fit_screener(train.data, order, &train.bank);
  // Measured against the administered test (the selected features), not the
  // whole bank, which would make both duration checks trivial.
  const double third = model.full_minutes() / 3.0;
  auto ev = evaluate(model, test.data, third);

  ScreenerModel batch = model;
  batch.epsilon = 0.0;
  auto full = evaluate(batch, test.data);

  // exact invariance under permutations with epsilon = 0
  Rng rng(1003);
  const auto rows = model_rows(batch, test.data);
  int invariant = 0;
  for (int k = 0; k < 200; ++k) {
    const auto& x = rows[rng.below(rows.size())];
    std::vector<std::size_t> perm(batch.size());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(perm);
    ScreenerModel p = batch;
    std::vector<double> px;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      const auto j = perm[i];
      p.features[i] = batch.features[j];
      p.mean_dd[i] = batch.mean_dd[j];
      p.var_dd[i] = batch.var_dd[j];
      p.mean_typ[i] = batch.mean_typ[j];
      p.var_typ[i] = batch.var_typ[j];
      p.time_min[i] = batch.time_min[j];
      px.push_back(x[j]);
    }
    const auto a = screen(batch, x), b = screen(p, px);
    invariant += a.posterior == b.posterior && a.at_risk == b.at_risk;
  }
  const double used = ev.mean_features / static_cast<double>(model.size());
  const bool pass = ev.sensitivity >= 0.85 && ev.specificity >= 0.85 && used < 0.6 &&
                    ev.accuracy >= full.accuracy - 0.03 && invariant == 200 && ev.fraction_by_minute >= 0.4;
  return {pass, fmt("%zu of %zu bank features selected; sens %.3f spec %.3f; mean %.1f features used (%.1f%% of the "
                    "test, %.1f%% of the bank); accuracy %.3f vs batch %.3f; %d/200 permutations identical; %.1f%% "
                    "classified within %.1f of %.1f test minutes (mean %.1f)",
                    model.size(), train.bank.features.size(), ev.sensitivity, ev.specificity, ev.mean_features,
                    100.0 * used, 100.0 * ev.mean_features / static_cast<double>(train.bank.features.size()),
                    ev.accuracy, full.accuracy, invariant, 100.0 * ev.fraction_by_minute, third, model.full_minutes(),
                    ev.mean_minutes)};
}

// 11 -----------------------------------------------------------------------
Outcome erp_model() {
  auto train = sim::generate_erp(300, 12, 1101);
  auto test = sim::generate_erp(300, 12, 1102);
  auto model = fit_erp(train.data);
  int zeros = 0, decoys = 0;
  bool support = true;
  for (std::size_t j = 0; j < model.feature_names.size(); ++j) {
    const bool planted =
        std::find(train.planted.begin(), train.planted.end(), model.feature_names[j]) != train.planted.end();
    if (planted) support = support && model.weights[j] > 0.0;
    else {
      ++decoys;
      zeros += model.weights[j] == 0.0;
    }
  }
  // held-out orderings: mean predicted ERP above vs below the median of a column
  auto col = [&](const std::string& name) {
    return static_cast<Eigen::Index>(std::find(test.data.feature_names.begin(), test.data.feature_names.end(), name) -
                                     test.data.feature_names.begin());
  };
  auto contrast = [&](Eigen::Index c) {
    std::vector<double> v(test.data.x.col(c).data(), test.data.x.col(c).data() + test.data.x.rows());
    const double med = stats::median(v);
    double hi = 0, lo = 0;
    int nh = 0, nl = 0;
    for (Eigen::Index i = 0; i < test.data.x.rows(); ++i) {
      std::vector<double> row(test.data.x.row(i).data(), test.data.x.row(i).data() + 0);
      Eigen::RowVectorXd r = test.data.x.row(i);
      const double p = predict_erp(model, std::span<const double>(r.data(), static_cast<std::size_t>(r.size())));
      if (test.data.x(i, c) > med) hi += p, ++nh;
      else lo += p, ++nl;
    }
    return std::make_pair(hi / std::max(nh, 1), lo / std::max(nl, 1));
  };
  const auto forget = contrast(col("decay_s"));
  const auto recept = contrast(col("non_receptive"));
  const double frac = static_cast<double>(zeros) / decoys;
  const bool pass = support && frac >= 0.8 && forget.first > forget.second && recept.first > recept.second;
  return {pass, fmt("planted support kept: %s; %d/%d decoys exactly zero; held-out ERP forgetting %.3f > %.3f, "
                    "non-receptive %.3f > %.3f",
                    support ? "yes" : "no", zeros, decoys, forget.first, forget.second, recept.first, recept.second)};
}

// 12 -----------------------------------------------------------------------
std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

const std::vector<std::string> kPipelineOutputs{"logs.jsonl", "truth.jsonl", "students.csv", "params.json",
                                                 "error-prob.csv", "skill-status.csv", "path.csv", "ribbons.csv",
                                                 "assignments.csv", "screener.json", "screen.csv", "stop.csv",
                                                 "spelling.jsonl"};

bool run_pipeline(const std::string& cli, const fs::path& configs, const fs::path& dir, std::string& err) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string data = configs.string();
  const std::string d = dir.string() + "/";
  const std::vector<std::string> cmds{
      "simulate --config " + data + "/golden_math.json --seed 7 --out " + d + "logs.jsonl --truth " + d +
          "truth.jsonl --students " + d + "students.csv",
      "fit-knowledge --logs " + d + "logs.jsonl --out " + d + "params.json",
      "report --logs " + d + "logs.jsonl --kind error-prob --out " + d + "error-prob.csv",
      "report --logs " + d + "logs.jsonl --kind skill-status --params " + d + "params.json --out " + d +
          "skill-status.csv",
      "report --logs " + d + "logs.jsonl --kind path --out " + d + "path.csv",
      "report --logs " + d + "logs.jsonl --kind ribbons --seed 3 --out " + d + "ribbons.csv",
      "cluster --logs " + d + "logs.jsonl --seed 3 --out " + d + "assignments.csv",
      "fit-screener --logs " + d + "logs.jsonl --labels " + d + "students.csv --out " + d + "screener.json",
      "screen --model " + d + "screener.json --logs " + d + "logs.jsonl --out " + d + "screen.csv",
      "stop-policy-eval --logs " + d + "logs.jsonl --params " + d + "params.json --out " + d + "stop.csv",
      "simulate --config " + data + "/golden_spelling.json --seed 7 --out " + d + "spelling.jsonl",
  };
  for (const auto& c : cmds) {
    const std::string line = "\"" + cli + "\" " + c + " > " + d + "cli.log 2>&1";
    if (std::system(line.c_str()) != 0) {
      err = "command failed: kspace " + c + " (" + slurp(d + "cli.log") + ")";
      return false;
    }
  }
  return true;
}

Outcome determinism() {
  const char* cli = std::getenv("KSPACE_CLI");
  const char* golden = std::getenv("KSPACE_GOLDEN");
  if (!cli || !golden) return {false, "KSPACE_CLI and KSPACE_GOLDEN must be set"};
  const fs::path configs = fs::path(golden).parent_path() / "data";
  const fs::path base = fs::temp_directory_path() / "kspace_acceptance";
  std::string err;
  if (!run_pipeline(cli, configs, base / "a", err) || !run_pipeline(cli, configs, base / "b", err)) return {false, err};
  int identical = 0, golden_ok = 0, golden_n = 0;
  std::string diff;
  for (const auto& f : kPipelineOutputs) {
    const auto a = slurp(base / "a" / f);
    if (!a.empty() && a == slurp(base / "b" / f)) ++identical;
    else diff += " " + f;
    {
      const fs::path g = fs::path(golden) / f;
      if (std::getenv("KSPACE_UPDATE_GOLDEN")) io::write_atomic(g, a);
      ++golden_n;
      if (fs::exists(g) && slurp(g) == a) ++golden_ok;
      else diff += " golden:" + f;
    }
  }
  const int n = static_cast<int>(kPipelineOutputs.size());
  return {identical == n && golden_ok == golden_n,
          fmt("%d/%d outputs byte-identical across reruns; %d/%d match goldens", identical, n, golden_ok, golden_n) +
              (diff.empty() ? "" : ";" + diff)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"inference oracle equivalence", inference_oracle},
      {"parameter recovery", parameter_recovery},
      {"prediction quality", prediction_quality},
      {"mal-rule recovery", malrule_recovery},
      {"training cycle", training_cycle},
      {"wheel-spinning detection", wheel_spinning},
      {"cluster-count recovery", cluster_count},
      {"online classification", online_classification},
      {"temporal stability", temporal_stability},
      {"screener", screener},
      {"ERP model", erp_model},
      {"determinism and formats", determinism},
  };
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) which.push_back(std::atoi(argv[i]));
  if (which.empty())
    for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) which.push_back(i);

  int failed = 0;
  for (int id : which) {
    if (id < 1 || id > static_cast<int>(criteria.size())) {
      std::fprintf(stderr, "unknown criterion %d\n", id);
      return 2;
    }
    const auto& [name, fn] = criteria[static_cast<std::size_t>(id - 1)];
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %2d %s (%.1fs): %s\n", o.pass ? "PASS" : "FAIL", id, name.c_str(), secs, o.detail.c_str());
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
