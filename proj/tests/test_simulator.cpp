#include <array>
#include <cmath>
#include <map>

#include "doctest.h"
#include "kspace/controller.hpp"
#include "kspace/error.hpp"
#include "kspace/rng.hpp"
#include "kspace/simulator.hpp"
#include "kspace/stats.hpp"

using namespace kspace;

TEST_CASE("rng moments") {
  Rng rng(42);
  const int n = 10000;
  std::vector<double> u, z, p;
  for (int i = 0; i < n; ++i) {
    u.push_back(rng.uniform());
    z.push_back(rng.normal());
    p.push_back(rng.poisson(3.0));
  }
  // 5 standard errors
  CHECK(std::abs(stats::mean(u) - 0.5) < 5 * std::sqrt(1.0 / 12 / n));
  CHECK(std::abs(stats::mean(z)) < 5 / std::sqrt(n));
  CHECK(std::abs(stats::variance(z) - 1.0) < 5 * std::sqrt(2.0 / n));
  CHECK(std::abs(stats::mean(p) - 3.0) < 5 * std::sqrt(3.0 / n));
  CHECK(std::abs(stats::variance(p) - 3.0) < 0.3);

  Rng a = Rng::derive(1, 2), b = Rng::derive(1, 2), c = Rng::derive(1, 3);
  CHECK(a.next_u64() == b.next_u64());
  CHECK(a.next_u64() != c.next_u64());
}

TEST_CASE("population") {
  auto net = SkillNet::load(sample_skill_net_path());
  sim::SimConfig cfg;
  cfg.population = 0;
  CHECK(sim::generate_population(cfg, net, 1).empty());

  cfg.population = 200;
  cfg.dd_fraction = 0.5;
  auto a = sim::generate_population(cfg, net, 9);
  auto b = sim::generate_population(cfg, net, 9);
  int dd = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(a[i].dd == b[i].dd);
    CHECK(a[i].learned == b[i].learned);
    dd += a[i].dd;
  }
  CHECK(std::abs(dd - 100) <= 3 * std::sqrt(50.0));
}

TEST_CASE("config validation") {
  sim::SimConfig cfg;
  cfg.dd_fraction = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  auto j = sim::SimConfig{}.to_json();
  j["bogus"] = 1;
  CHECK_THROWS(sim::SimConfig::from_json(j));
  CHECK(sim::SimConfig::from_json(sim::SimConfig{}.to_json()).to_json() == sim::SimConfig{}.to_json());
}

TEST_CASE("simulation is deterministic") {
  sim::SimConfig cfg;
  cfg.population = 12;
  cfg.sessions = 2;
  auto a = sim::simulate(cfg);
  auto b = sim::simulate(cfg);
  CHECK(format_log(a.events) == format_log(b.events));
  CHECK_NOTHROW(validate_ordering(a.events));
  cfg.seed = 2;
  CHECK(format_log(sim::simulate(cfg).events) != format_log(a.events));

  cfg.scenario = sim::Scenario::Spelling;
  CHECK(format_log(sim::simulate(cfg).events) == format_log(sim::simulate(cfg).events));
}

TEST_CASE("noiseless student answers correctly") {
  auto net = SkillNet::load(sample_skill_net_path());
  sim::SimConfig cfg;
  cfg.population = 1;
  auto pop = sim::generate_population(cfg, net, 3);
  auto& s = pop[0];
  s.learned.assign(net.size(), true);
  s.dd = false;
  for (auto& p : s.params) p = {0.0, 0.0, 0.0, 0.0};
  sim::MathTutorState tutor{SkillBelief(net), 0, std::nullopt, "", 0};
  sim::SimRun run;
  Rng rng(4);
  sim::simulate_math_session(s, tutor, net, default_params(net, cfg.params), cfg.controller, 60, 0, "x", rng, run);
  auto ans = answers(run.events);
  CHECK(ans.size() == 60);
  for (const auto& a : ans) CHECK(a.correct);
  // the tutor only moves along edges
  for (std::size_t i = 1; i < ans.size(); ++i) {
    const auto from = net.index_of(ans[i - 1].skill), to = net.index_of(ans[i].skill);
    if (from == to) continue;
    const bool adjacent = net.has_edge(from, to) || net.has_edge(to, from) || !net.skill(to).remediates.empty();
    CHECK(adjacent);
  }
}

TEST_CASE("wheel-spinning student is flagged") {
  auto net = SkillNet::load(sample_skill_net_path());
  sim::SimConfig cfg;
  cfg.population = 1;
  auto pop = sim::generate_population(cfg, net, 5);
  auto& s = pop[0];
  const auto skill = net.index_of("r10.add_nc");
  s.learned.assign(net.size(), true);
  s.learned[skill] = false;
  s.params[skill].learn = 0.0;
  s.wheel_spin.assign(net.size(), false);
  s.wheel_spin[skill] = true;
  Rng rng(6);
  auto ans = sim::practice_answers(s, net, skill, 40, rng);
  std::array<bool, 40> a{};
  std::copy(ans.begin(), ans.end(), a.begin());
  SkillModelAdapter model(net, default_params(net, {0.05, 0.2, 0.2, 0.0}), skill);
  auto run = run_stop_policy(model, a, StopPolicyConfig{});
  CHECK(run.decision == StopDecision::WheelSpinning);
}

TEST_CASE("error-free speller finishes every word in two presentations") {
  sim::SimConfig cfg;
  cfg.scenario = sim::Scenario::Spelling;
  cfg.population = 1;
  cfg.lambda_min = cfg.lambda_max = 0.0;
  auto net = SkillNet::load(sample_skill_net_path());
  auto words = load_word_database(std::filesystem::path(KSPACE_DATA_DIR) / "words_sample.json");
  auto pop = sim::generate_population(cfg, net, 1);
  sim::SpellingTutorState tutor{MalRuleProfile{}, std::vector<CycleState>(words.size()), 0};
  sim::SimRun run;
  Rng rng(1);
  sim::simulate_spelling_session(pop[0], tutor, words, SpellingTables::defaults(), 10000, 0, "x", rng, run);
  for (const auto& a : answers(run.events)) CHECK(a.correct);
  for (const auto& c : tutor.cycle) {
    CHECK(c.phase == CyclePhase::Done);
    CHECK(c.presentations == 2);
  }
  for (const auto& e : run.events) CHECK(e.kind != EventKind::InvalidInput);
}

TEST_CASE("truth sidecar") {
  sim::SimConfig cfg;
  cfg.population = 3;
  cfg.sessions = 1;
  auto net = SkillNet::load(sample_skill_net_path());
  auto run = sim::simulate(cfg);
  CHECK(run.truth.size() == answers(run.events).size());
  auto line = sim::format_truth(run.truth[0], net);
  CHECK(Json::parse(line).contains("sid"));
}
