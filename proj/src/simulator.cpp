#include "kspace/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "kspace/error.hpp"
#include "kspace/rng.hpp"

namespace kspace::sim {
namespace {

constexpr std::int64_t kDayMs = 24LL * 3600 * 1000;

double clamp01(double v, double lo = 0.0, double hi = 1.0) { return std::clamp(v, lo, hi); }

std::string typical_error_for(const std::string& skill) {
  if (skill.find("_tc") != std::string::npos) return "ten-crossing";
  if (skill.find("place_value") != std::string::npos || skill.find("decompose") != std::string::npos) {
    return "place-value";
  }
  if (skill.find("count") != std::string::npos) return "counting-off-by-one";
  return "";
}

std::string student_name(std::size_t i, int width = 4) {
  std::string digits = std::to_string(i);
  if (digits.size() < static_cast<std::size_t>(width)) digits.insert(0, static_cast<std::size_t>(width) - digits.size(), '0');
  return "s" + digits;
}

bool is_comparison(const std::string& skill) { return skill.find("cmp_") != std::string::npos; }

void step_engagement(SyntheticStudent& s, Rng& rng) {
  const auto& e = s.engagement;
  s.focused = rng.bernoulli(s.focused ? e.focus_stay : e.focus_return);
  s.receptive = rng.bernoulli(s.receptive ? e.receptive_stay : e.receptive_return);
}

bool parents_learned(const SkillNet& net, const std::vector<bool>& learned, SkillNet::Index i) {
  for (auto p : net.parents(i)) {
    if (!learned[p]) return false;
  }
  return true;
}

void transition_truth(SyntheticStudent& s, const SkillNet& net, SkillNet::Index i, Rng& rng) {
  const auto& p = s.params[i];
  if (s.learned[i]) {
    if (rng.bernoulli(p.forget)) s.learned[i] = false;
  } else if (s.receptive && !s.wheel_spin[i] && parents_learned(net, s.learned, i)) {
    if (rng.bernoulli(p.learn)) s.learned[i] = true;
  }
}

void push(std::vector<Event>& out, const std::string& sid, const std::string& sess, std::int64_t t, EventKind k,
          Json data = Json::object()) {
  out.push_back(Event::make(sid, sess, t, k, std::move(data)));
}

SkillNet load_net(const SimConfig& c) {
  return SkillNet::load(c.skill_net.empty() ? sample_skill_net_path() : std::filesystem::path(c.skill_net));
}

}  // namespace

void SimConfig::validate() const {
  if (sessions < 0 || session_length < 0) throw ValidationError("sim config: sessions and session_length must be >= 0");
  if (subgroups.empty()) throw ValidationError("sim config: subgroups must be non-empty");
  double total = 0.0;
  for (double w : subgroups) {
    if (!(w >= 0.0)) throw ValidationError("sim config: subgroup weights must be >= 0");
    total += w;
  }
  if (std::fabs(total - 1.0) > 1e-9) throw ValidationError("sim config: subgroup weights must sum to 1");
  for (double f : {dd_fraction, wheel_spin_fraction}) {
    if (!(f >= 0.0 && f <= 1.0)) throw ValidationError("sim config: fractions must be in [0,1]");
  }
  for (double p : {params.slip, params.guess, params.learn, params.forget}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("sim config: params must be probabilities");
  }
  if (!(jitter >= 0.0)) throw ValidationError("sim config: jitter must be >= 0");
  if (!(lambda_min >= 0.0 && lambda_max >= lambda_min)) throw ValidationError("sim config: bad lambda range");
  for (double p : {engagement.focus_stay, engagement.focus_return, engagement.receptive_stay,
                   engagement.receptive_return}) {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("sim config: engagement probabilities must be in [0,1]");
  }
  controller.validate();
}

SimConfig SimConfig::from_json(const Json& j) {
  static const std::set<std::string> known{"scenario",    "population",   "sessions", "session_length", "seed",
                                           "skill_net",   "words",        "subgroups", "dd_fraction",
                                           "wheel_spin_fraction", "params", "jitter",  "lambda_min",
                                           "lambda_max",  "engagement",   "controller"};
  if (!j.is_object()) throw ValidationError("sim config must be a JSON object");
  for (const auto& [k, _] : j.items()) {
    if (!known.contains(k)) throw ValidationError("sim config: unknown key '" + k + "'");
  }
  SimConfig c;
  try {
    const auto scen = j.value("scenario", std::string("math"));
    if (scen == "math") c.scenario = Scenario::Math;
    else if (scen == "spelling") c.scenario = Scenario::Spelling;
    else throw ValidationError("sim config: scenario must be 'math' or 'spelling'");
    c.population = j.value("population", c.population);
    c.sessions = j.value("sessions", c.sessions);
    c.session_length = j.value("session_length", c.session_length);
    c.seed = j.value("seed", c.seed);
    c.skill_net = j.value("skill_net", std::string{});
    c.words = j.value("words", std::string{});
    if (j.contains("subgroups")) c.subgroups = j["subgroups"].get<std::vector<double>>();
    c.dd_fraction = j.value("dd_fraction", c.dd_fraction);
    c.wheel_spin_fraction = j.value("wheel_spin_fraction", c.wheel_spin_fraction);
    if (j.contains("params")) {
      const auto& p = j["params"];
      c.params.slip = p.value("slip", c.params.slip);
      c.params.guess = p.value("guess", c.params.guess);
      c.params.learn = p.value("learn", c.params.learn);
      c.params.forget = p.value("forget", c.params.forget);
    }
    c.jitter = j.value("jitter", c.jitter);
    c.lambda_min = j.value("lambda_min", c.lambda_min);
    c.lambda_max = j.value("lambda_max", c.lambda_max);
    if (j.contains("engagement")) {
      const auto& e = j["engagement"];
      c.engagement.focus_stay = e.value("focus_stay", c.engagement.focus_stay);
      c.engagement.focus_return = e.value("focus_return", c.engagement.focus_return);
      c.engagement.receptive_stay = e.value("receptive_stay", c.engagement.receptive_stay);
      c.engagement.receptive_return = e.value("receptive_return", c.engagement.receptive_return);
    }
    if (j.contains("controller")) c.controller = ControllerConfig::from_json(j["controller"]);
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("sim config: ") + e.what());
  }
  c.validate();
  return c;
}

Json SimConfig::to_json() const {
  return Json{{"scenario", scenario == Scenario::Math ? "math" : "spelling"},
              {"population", population},
              {"sessions", sessions},
              {"session_length", session_length},
              {"seed", seed},
              {"skill_net", skill_net},
              {"words", words},
              {"subgroups", subgroups},
              {"dd_fraction", dd_fraction},
              {"wheel_spin_fraction", wheel_spin_fraction},
              {"params", {{"slip", params.slip}, {"guess", params.guess}, {"learn", params.learn},
                          {"forget", params.forget}}},
              {"jitter", jitter},
              {"lambda_min", lambda_min},
              {"lambda_max", lambda_max},
              {"engagement", {{"focus_stay", engagement.focus_stay}, {"focus_return", engagement.focus_return},
                              {"receptive_stay", engagement.receptive_stay},
                              {"receptive_return", engagement.receptive_return}}},
              {"controller", controller.to_json()}};
}

std::vector<SyntheticStudent> generate_population(const SimConfig& config, const SkillNet& net, std::uint64_t seed) {
  config.validate();
  const auto groups = static_cast<int>(config.subgroups.size());
  std::vector<SyntheticStudent> out(config.population);
  for (std::size_t i = 0; i < config.population; ++i) {
    Rng rng = Rng::derive(seed, i);
    auto& s = out[i];
    s.id = student_name(i);
    s.stream = i;
    s.subgroup = static_cast<int>(rng.categorical(config.subgroups));
    const double ability = groups == 1 ? 0.5 : static_cast<double>(s.subgroup) / (groups - 1);
    s.dd = rng.bernoulli(config.dd_fraction);
    const bool spinner = rng.bernoulli(config.wheel_spin_fraction);
    s.engagement = config.engagement;
    const std::size_t n = net.size();
    s.learned.assign(n, false);
    s.wheel_spin.assign(n, spinner);
    s.params.resize(n);
    const auto cutoff = static_cast<std::size_t>(std::llround(ability * 0.2 * static_cast<double>(n)));
    const double learn_scale = groups == 1 ? 1.0 : 0.5 + ability;
    for (std::size_t k = 0; k < n; ++k) {
      auto& p = s.params[k];
      p.slip = clamp01(config.params.slip + rng.normal(0.0, config.jitter), 0.0, 0.45);
      p.guess = clamp01(config.params.guess + rng.normal(0.0, config.jitter), 0.0, 0.45);
      p.learn = clamp01(config.params.learn * learn_scale + rng.normal(0.0, config.jitter));
      p.forget = clamp01(config.params.forget + (config.params.forget > 0 ? rng.normal(0.0, config.jitter / 4) : 0.0));
      if (spinner) p.learn = 0.0;
      s.learned[k] = k < cutoff && parents_learned(net, s.learned, k);
    }
    for (auto& l : s.lambda) l = rng.uniform(config.lambda_min, config.lambda_max);
    s.ms_mu = std::log(2500.0) + rng.normal(0.0, 0.1) + (s.dd ? 0.3 : 0.0);
    s.ms_sigma = 0.35;
  }
  return out;
}

std::string format_truth(const TruthRecord& r, const SkillNet& net) {
  Json states = Json::object();
  for (std::size_t i = 0; i < r.skill_states.size() && i < net.size(); ++i) states[net.skill(i).id] = bool(r.skill_states[i]);
  // Built by hand to keep the documented key order.
  return "{\"sid\":" + Json(r.student_id).dump() + ",\"t\":" + std::to_string(r.t) +
         ",\"skill_states\":" + states.dump() + ",\"focused\":" + (r.focused ? "true" : "false") +
         ",\"receptive\":" + (r.receptive ? "true" : "false") + "}";
}

std::int64_t simulate_math_session(SyntheticStudent& s, MathTutorState& tutor, const SkillNet& net,
                                   const ParamSet& model_params, const ControllerConfig& controller, int length,
                                   std::int64_t t0, const std::string& session_id, Rng& rng, SimRun& run) {
  static const EventKind nav[] = {EventKind::NavGame, EventKind::NavShop, EventKind::NavPerformance};
  std::int64_t t = t0;
  for (int step = 0; step < length; ++step) {
    step_engagement(s, rng);
    t += static_cast<std::int64_t>(rng.lognormal(std::log(1500.0), 0.3));
    std::vector<Event> evs;
    if (rng.bernoulli(0.15)) {
      push(evs, s.id, session_id, t, nav[rng.below(3)]);
      t += 500;
    }
    const SkillNet::Index skill = tutor.current;
    const std::string& sid = net.skill(skill).id;
    const std::string task = sid + "#" + std::to_string(rng.below(5));
    push(evs, s.id, session_id, t, EventKind::TaskShown, {{"task", task}, {"skill", sid}});

    const auto& p = s.params[skill];
    double slip = std::min(p.slip * (s.focused ? 1.0 : 2.0), 0.5);
    double guess = p.guess;
    double mu = s.ms_mu + (s.focused ? 0.0 : 0.3);
    if (s.dd && is_comparison(sid)) {
      slip = std::min(slip + 0.15, 0.6);
      guess *= 0.5;
      mu += 0.4;
    }
    const bool correct = rng.bernoulli(s.learned[skill] ? 1.0 - slip : guess);
    const auto ms = std::max<std::int64_t>(200, static_cast<std::int64_t>(rng.lognormal(mu, s.ms_sigma)));
    const int keys = 1 + static_cast<int>(rng.below(3));
    for (int k = 0; k < keys; ++k) push(evs, s.id, session_id, t + ms * (k + 1) / (keys + 2), EventKind::KeyInput);
    if (!s.focused) {
      push(evs, s.id, session_id, t + ms / 3, EventKind::InvalidInput);
      push(evs, s.id, session_id, t + ms / 3 + 100, EventKind::Backspace);
    }
    if (!s.receptive && rng.bernoulli(0.4)) push(evs, s.id, session_id, t + ms / 2, EventKind::HelpCall);
    std::string err;
    if (!correct && rng.bernoulli(0.6)) err = typical_error_for(sid);
    Json data{{"task", task}, {"skill", sid}, {"correct", correct}, {"ms", ms},
              {"strategy", rng.bernoulli(s.dd ? 0.6 : 0.2) ? "counting" : "retrieval"}};
    if (!err.empty()) data["error"] = err;
    t += ms;
    push(evs, s.id, session_id, t, EventKind::AnswerSubmitted, std::move(data));
    std::stable_sort(evs.begin(), evs.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
    run.events.insert(run.events.end(), evs.begin(), evs.end());

    transition_truth(s, net, skill, rng);
    run.truth.push_back({s.id, t, s.learned, s.focused, s.receptive});

    tutor.beliefs.observe(net, model_params, skill, correct);
    tutor.current = next_action(tutor.beliefs, net, skill, correct, err, controller).skill;
    tutor.last_correct = correct;
    tutor.last_error = err;
    ++tutor.task_counter;
  }
  return t;
}

std::int64_t simulate_spelling_session(SyntheticStudent& s, SpellingTutorState& tutor,
                                       const std::vector<WordEntry>& words, const SpellingTables& tables, int length,
                                       std::int64_t t0, const std::string& session_id, Rng& rng, SimRun& run) {
  std::int64_t t = t0;
  for (int step = 0; step < length; ++step) {
    const auto idx = select_next_word(tutor.profile, words, tutor.cycle);
    if (!idx) break;
    step_engagement(s, rng);
    const auto& w = words[*idx];
    t += static_cast<std::int64_t>(rng.lognormal(std::log(1500.0), 0.3));
    std::vector<Event> evs;
    push(evs, s.id, session_id, t, EventKind::TaskShown, {{"task", w.word}, {"target", w.word}});
    RuleCounts req{};
    for (auto r : kMalRules) {
      const auto ri = static_cast<std::size_t>(r);
      const bool minor = r == MalRule::Typing || r == MalRule::Capitalization;
      const double mult = minor && !s.focused ? 2.0 : 1.0;
      req[ri] = static_cast<int>(rng.poisson(s.lambda[ri] * mult * w.opportunities[ri]));
    }
    const auto [typed, rendered] = render_errors(w, req, tables, rng);
    (void)rendered;
    std::int64_t kt = t;
    for (std::size_t i = 0; i < typed.size(); ++i) {
      kt += static_cast<std::int64_t>(rng.lognormal(std::log(s.focused ? 350.0 : 600.0), 0.3));
      const bool ok = i < w.word.size() && typed[i] == w.word[i];
      push(evs, s.id, session_id, kt, ok ? EventKind::KeyInput : EventKind::InvalidInput);
    }
    if (!s.receptive && rng.bernoulli(0.4)) push(evs, s.id, session_id, t + (kt - t) / 2, EventKind::HelpCall);
    kt += 300;
    push(evs, s.id, session_id, kt, EventKind::Enter);
    const bool correct = typed == w.word;
    push(evs, s.id, session_id, kt,
         EventKind::AnswerSubmitted,
         {{"task", w.word}, {"target", w.word}, {"text", typed}, {"correct", correct}, {"ms", kt - t}});
    std::stable_sort(evs.begin(), evs.end(), [](const Event& a, const Event& b) { return a.t < b.t; });
    run.events.insert(run.events.end(), evs.begin(), evs.end());
    t = kt;
    run.truth.push_back({s.id, t, {}, s.focused, s.receptive});

    tutor.profile = update_profile(tutor.profile, w, analyze_input(w, typed, tables));
    auto& st = tutor.cycle[*idx];
    st = cycle_step(st, correct, st.presentations == 0);
    st.last_presented = tutor.clock++;
  }
  return t;
}

SimRun simulate(const SimConfig& config, const SkillNet& net, const std::vector<WordEntry>& words,
                std::vector<SyntheticStudent>* population) {
  config.validate();
  auto students = generate_population(config, net, config.seed);
  const ParamSet model_params = default_params(net, config.params);
  const auto tables = SpellingTables::defaults();
  std::vector<SimRun> runs(students.size());
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < students.size(); ++i) {
    auto& s = students[i];
    Rng rng = Rng::derive(config.seed ^ 0x5eed5eedULL, s.stream);
    MathTutorState math{SkillBelief(net), 0, std::nullopt, "", 0};
    SpellingTutorState spell{MalRuleProfile{}, std::vector<CycleState>(words.size()), 0};
    for (int k = 0; k < config.sessions; ++k) {
      const std::int64_t t0 = static_cast<std::int64_t>(k + 1) * kDayMs + static_cast<std::int64_t>(i) * 1000;
      const std::string sess = s.id + "-" + std::to_string(k + 1);
      if (config.scenario == Scenario::Math) {
        simulate_math_session(s, math, net, model_params, config.controller, config.session_length, t0, sess, rng,
                              runs[i]);
      } else {
        simulate_spelling_session(s, spell, words, tables, config.session_length, t0, sess, rng, runs[i]);
      }
    }
  }
  SimRun out;
  for (auto& r : runs) {
    out.events.insert(out.events.end(), r.events.begin(), r.events.end());
    out.truth.insert(out.truth.end(), r.truth.begin(), r.truth.end());
  }
  if (population) *population = std::move(students);
  return out;
}

SimRun simulate(const SimConfig& config, std::vector<SyntheticStudent>* population) {
  const SkillNet net = load_net(config);
  std::vector<WordEntry> words;
  if (config.scenario == Scenario::Spelling) {
    words = load_word_database(config.words.empty() ? std::filesystem::path(KSPACE_DATA_DIR) / "words_sample.json"
                                                    : std::filesystem::path(config.words));
  }
  return simulate(config, net, words, population);
}

std::vector<bool> practice_answers(SyntheticStudent& s, const SkillNet& net, SkillNet::Index skill, int n, Rng& rng) {
  std::vector<bool> out;
  for (int k = 0; k < n; ++k) {
    const auto& p = s.params[skill];
    out.push_back(rng.bernoulli(s.learned[skill] ? 1.0 - p.slip : p.guess));
    transition_truth(s, net, skill, rng);
  }
  return out;
}

// ---------------------------------------------------------------------------

TraitSimulation generate_trait_profiles(std::size_t per_group, std::uint64_t seed, double separation, int groups) {
  if (groups < 2 || groups > 6) throw Error("trait generator supports 2..6 groups");
  constexpr int kFeatures = 12;
  Rng rng(seed);
  // Orthonormal 12x3 map so latent distances carry over unchanged.
  Eigen::MatrixXd a(kFeatures, 3);
  for (int i = 0; i < kFeatures; ++i) {
    for (int j = 0; j < 3; ++j) a(i, j) = rng.normal();
  }
  const Eigen::MatrixXd basis = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() *
                                Eigen::MatrixXd::Identity(kFeatures, 3);
  const double r = separation / std::sqrt(2.0);
  const double verts[6][3] = {{r, 0, 0}, {-r, 0, 0}, {0, r, 0}, {0, -r, 0}, {0, 0, r}, {0, 0, -r}};
  // Ability order places the best template last.
  const int cut[6] = {1, 20, 40, 60, 80, 100};

  TraitSimulation sim;
  const SkillNet net = SkillNet::load(sample_skill_net_path());
  for (int f = 0; f < kFeatures; ++f) {
    sim.complete.feature_names.push_back("trait_" + std::string(f < 10 ? "0" : "") + std::to_string(f));
    sim.available_from.push_back(1 + f % 3);
  }
  for (const auto& s : net.skills()) sim.complete.skill_ids.push_back(s.id);
  for (int g = 0; g < groups; ++g) {
    const Eigen::Vector3d c(verts[g][0], verts[g][1], verts[g][2]);
    const Eigen::VectorXd centre = basis * c;
    const int passed = cut[g + (6 - groups)];
    for (std::size_t k = 0; k < per_group; ++k) {
      StudentProfile p;
      const std::size_t idx = sim.complete.students.size();
      p.student_id = student_name(idx);
      for (int f = 0; f < kFeatures; ++f) p.features.push_back(centre(f) + rng.normal());
      for (std::size_t j = 0; j < net.size(); ++j) {
        bool pass = static_cast<int>(j) < passed;
        if (rng.bernoulli(0.05)) pass = !pass;
        if (passed == 100) pass = true;
        p.skill_passed.push_back(pass ? 1.0 : 0.0);
      }
      Eigen::RowVectorXd noise(kFeatures);
      for (int f = 0; f < kFeatures; ++f) noise(f) = rng.normal();
      sim.noise.push_back(noise);
      sim.truth.push_back(g);
      sim.complete.students.push_back(std::move(p));
    }
  }
  return sim;
}

ProfileSet observe_profiles(const TraitSimulation& sim, int sessions) {
  if (sessions < 1) throw Error("observe_profiles: sessions must be >= 1");
  ProfileSet out = sim.complete;
  const double scale =
      sessions >= sim.full_sessions ? 0.0
                                    : sim.partial_noise * std::sqrt(static_cast<double>(sim.full_sessions) / sessions - 1.0);
  for (std::size_t i = 0; i < out.students.size(); ++i) {
    auto& f = out.students[i].features;
    for (std::size_t j = 0; j < f.size(); ++j) {
      if (sessions < sim.available_from[j]) {
        f[j] = NAN;
      } else {
        f[j] += scale * sim.noise[i](static_cast<Eigen::Index>(j));
      }
    }
  }
  return out;
}

BehaviorSimulation generate_behavior(std::size_t per_archetype, int sessions, std::uint64_t seed,
                                     int events_per_session, double outlier) {
  static const double arche[3][3][3] = {
      {{0.90, 0.05, 0.05}, {0.70, 0.20, 0.10}, {0.70, 0.10, 0.20}},   // focused: mostly Game
      {{0.35, 0.60, 0.05}, {0.25, 0.70, 0.05}, {0.30, 0.60, 0.10}},   // shop-heavy
      {{0.10, 0.30, 0.60}, {0.30, 0.10, 0.60}, {0.45, 0.45, 0.10}}};  // navigator: frequent Performance visits
  static const EventKind kinds[3] = {EventKind::NavGame, EventKind::NavShop, EventKind::NavPerformance};
  Rng rng(seed);
  BehaviorSimulation sim;
  const std::size_t n = 3 * per_archetype;
  for (std::size_t i = 0; i < n; ++i) sim.truth.push_back(static_cast<int>(i % 3));
  sim.events.resize(n);
  const auto mapping = StateMapping::navigation();
  for (int t = 0; t < sessions; ++t) {
    std::vector<BehaviorChain> step;
    for (std::size_t i = 0; i < n; ++i) {
      const std::string sid = student_name(i);
      const std::string sess = sid + "-" + std::to_string(t + 1);
      int a = sim.truth[i];
      if (rng.bernoulli(outlier)) a = static_cast<int>(rng.below(3));
      std::vector<Event> evs;
      std::int64_t ts = static_cast<std::int64_t>(t + 1) * kDayMs;
      int state = static_cast<int>(rng.below(3));
      for (int e = 0; e < events_per_session; ++e) {
        evs.push_back(Event::make(sid, sess, ts, kinds[state]));
        ts += 1000 + static_cast<std::int64_t>(rng.below(5000));
        state = static_cast<int>(rng.categorical(std::span<const double>(arche[a][state], 3)));
      }
      step.push_back(estimate_chain(evs, mapping));
      sim.events[i].insert(sim.events[i].end(), evs.begin(), evs.end());
    }
    sim.chains.push_back(std::move(step));
  }
  return sim;
}

ScreeningSimulation generate_screening(std::size_t students, double dd_fraction, std::uint64_t seed,
                                       int signal_groups, int noise_groups) {
  static const char* prefixes[] = {"P", "AT", "TM", "SN"};
  Rng rng(seed);
  ScreeningSimulation sim;
  const int groups = signal_groups + noise_groups;
  std::vector<double> effect(static_cast<std::size_t>(groups), 0.0);
  for (int g = 0; g < groups; ++g) {
    // A few strong tasks, then a long tail of modest ones.
    if (g < signal_groups) effect[static_cast<std::size_t>(g)] = 0.5 + 2.0 * std::exp(-g / 3.0);
    const std::string gname = (g < 10 ? "g0" : "g") + std::to_string(g);
    if (g < signal_groups) sim.signal_groups.push_back(gname);
    for (int k = 0; k < 3; ++k) {
      ScreenFeature f;
      f.kind = feature_kind_from(prefixes[(g + k) % 4]);
      f.source = gname + ".v" + std::to_string(k);
      f.id = std::string(prefixes[(g + k) % 4]) + "/" + f.source;
      f.group_hint = gname;
      f.time_min = 1.5;
      sim.bank.features.push_back(f);
      sim.data.feature_ids.push_back(f.id);
    }
  }
  sim.data.x.resize(static_cast<Eigen::Index>(students), static_cast<Eigen::Index>(3 * groups));
  for (std::size_t i = 0; i < students; ++i) {
    const bool dd = rng.bernoulli(dd_fraction);
    sim.data.y.push_back(dd ? 1 : 0);
    sim.data.student_ids.push_back(student_name(i));
    for (int g = 0; g < groups; ++g) {
      const double latent = rng.normal() + (dd ? effect[static_cast<std::size_t>(g)] : 0.0);
      for (int k = 0; k < 3; ++k) {
        sim.data.x(static_cast<Eigen::Index>(i), 3 * g + k) = latent + 0.3 * rng.normal();
      }
    }
  }
  return sim;
}

ErpSimulation generate_erp(std::size_t students, int rows_per_student, std::uint64_t seed, int extra_decoys) {
  Rng rng(seed);
  ErpSimulation sim;
  sim.data.feature_names = erp_feature_names();
  for (int k = 0; k < extra_decoys; ++k) {
    sim.data.feature_names.push_back("decoy_" + std::string(k < 10 ? "0" : "") + std::to_string(k));
  }
  sim.planted = {"non_receptive", "decay_s", "non_focused"};
  sim.planted_weights = {1.5, 0.004, 1.0};  // decay in seconds
  sim.planted_intercept = -1.5;
  const auto p = static_cast<Eigen::Index>(sim.data.feature_names.size());
  const auto col = [&](const std::string& name) {
    return static_cast<Eigen::Index>(std::find(sim.data.feature_names.begin(), sim.data.feature_names.end(), name) -
                                     sim.data.feature_names.begin());
  };
  const Eigen::Index c_nr = col("non_receptive"), c_decay = col("decay_s"), c_nf = col("non_focused"),
                     c_int = col("interference");
  const std::size_t n = students * static_cast<std::size_t>(rows_per_student);
  sim.data.x.resize(static_cast<Eigen::Index>(n), p);
  for (std::size_t s = 0; s < students; ++s) {
    const std::string sid = student_name(s);
    for (int r = 0; r < rows_per_student; ++r) {
      const auto i = static_cast<Eigen::Index>(s * static_cast<std::size_t>(rows_per_student) + static_cast<std::size_t>(r));
      for (Eigen::Index j = 0; j < p; ++j) sim.data.x(i, j) = rng.normal();
      // Engagement indicators are posterior-like values in [0,1].
      sim.data.x(i, c_nr) = rng.bernoulli(0.3) ? rng.uniform(0.6, 1.0) : rng.uniform(0.0, 0.4);
      sim.data.x(i, c_nf) = rng.bernoulli(0.3) ? rng.uniform(0.6, 1.0) : rng.uniform(0.0, 0.4);
      sim.data.x(i, c_int) = static_cast<double>(rng.below(8));
      sim.data.x(i, c_decay) = 60.0 * rng.lognormal(0.0, 0.8);
      const double z = sim.planted_intercept + sim.planted_weights[0] * sim.data.x(i, c_nr) +
                       sim.planted_weights[1] * sim.data.x(i, c_decay) + sim.planted_weights[2] * sim.data.x(i, c_nf);
      sim.data.y.push_back(rng.bernoulli(1.0 / (1.0 + std::exp(-z))) ? 1 : 0);
      sim.data.groups.push_back(sid);
    }
  }
  return sim;
}

}  // namespace kspace::sim
