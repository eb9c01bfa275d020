#include <array>
#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "kspace/controller.hpp"
#include "kspace/error.hpp"

using namespace kspace;
using testing::make_net;

TEST_CASE("next_action") {
  auto net = make_net({"A", "B", "C", "P"}, {{"P", "A"}, {"A", "B"}, {"A", "C"}});
  ControllerConfig cfg;
  const auto A = net.index_of("A"), B = net.index_of("B"), C = net.index_of("C"), P = net.index_of("P");
  std::vector<double> m(4, 0.5);
  auto stay = next_action(SkillBelief::from_marginals(net, m), net, A, true, "", cfg);
  CHECK(stay.kind == ActionKind::Stay);
  CHECK(stay.skill == A);

  m[A] = 0.9;
  m[B] = 0.4;
  m[C] = 0.6;
  auto fwd = next_action(SkillBelief::from_marginals(net, m), net, A, true, "", cfg);
  CHECK(fwd.kind == ActionKind::Forward);
  CHECK(fwd.skill == B);

  m[A] = 0.1;
  auto bwd = next_action(SkillBelief::from_marginals(net, m), net, A, false, "", cfg);
  CHECK(bwd.kind == ActionKind::Backward);
  CHECK(bwd.skill == P);

  m[B] = 0.95;
  auto done = next_action(SkillBelief::from_marginals(net, m), net, B, true, "", cfg);
  CHECK(done.kind == ActionKind::Stay);
  CHECK(done.module_complete);
}

TEST_CASE("remediation picks the weakest tagged skill") {
  std::vector<Skill> skills(3);
  skills[0].id = "T";
  skills[1].id = "R1";
  skills[1].remediates = {"ten-crossing"};
  skills[2].id = "R2";
  skills[2].remediates = {"ten-crossing"};
  SkillNet net(skills, {});
  std::vector<double> m(3);
  m[net.index_of("T")] = 0.5;
  m[net.index_of("R1")] = 0.3;
  m[net.index_of("R2")] = 0.7;
  auto a = next_action(SkillBelief::from_marginals(net, m), net, net.index_of("T"), false, "ten-crossing", {});
  CHECK(a.kind == ActionKind::Remediate);
  CHECK(a.skill == net.index_of("R1"));
  auto none = next_action(SkillBelief::from_marginals(net, m), net, net.index_of("T"), false, "unknown-tag", {});
  CHECK(none.kind == ActionKind::Stay);
}

TEST_CASE("when_to_stop") {
  StopPolicyConfig cfg;
  cfg.consecutive = 3;
  std::vector<double> m{0.96, 0.97, 0.98};
  CHECK(when_to_stop(m, cfg) == StopDecision::Mastered);

  std::vector<double> flat(12, 0.5);
  cfg.min_attempts = 10;
  CHECK(when_to_stop(flat, cfg) == StopDecision::WheelSpinning);
  CHECK(when_to_stop(std::span(flat).first(9), cfg) == StopDecision::Continue);

  std::vector<double> rising;
  for (int i = 0; i <= 12; ++i) rising.push_back(0.5 + 0.025 * i);
  // least-squares slope by hand on the last window
  const int w = cfg.slope_window;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < w; ++i) {
    double y = rising[rising.size() - w + i];
    sx += i, sy += y, sxx += i * i, sxy += i * y;
  }
  const double slope = (w * sxy - sx * sy) / (w * sxx - sx * sx);
  CHECK(slope == doctest::Approx(0.025));
  CHECK(when_to_stop(rising, cfg) == StopDecision::Continue);

  // forgetting can revoke mastery
  std::vector<double> dip{0.96, 0.97, 0.98, 0.9};
  CHECK(when_to_stop(dip, cfg) == StopDecision::Continue);
  CHECK(when_to_stop(flat, StopPolicyConfig::mastery_only()) == StopDecision::Continue);
}

TEST_CASE("stop policy over two models") {
  auto net = make_net({"A"}, {});
  std::array<bool, 30> correct;
  correct.fill(true);
  SkillModelAdapter dbn(net, {{0.05, 0.2, 0.2, 0.0}}, 0);
  FrequencyModel freq;
  StopPolicyConfig cfg;
  CHECK(run_stop_policy(dbn, correct, cfg).decision == StopDecision::Mastered);
  SkillModelAdapter dbn2(net, {{0.05, 0.2, 0.2, 0.0}}, 0);
  auto r = run_stop_policy(freq, correct, cfg);
  CHECK(r.decision == StopDecision::Mastered);
  CHECK(r.predictions.size() == r.attempts);

  std::array<bool, 40> alternating;
  for (int i = 0; i < 40; ++i) alternating[i] = i % 3 == 0;
  FrequencyModel f2;
  CHECK(run_stop_policy(f2, alternating, cfg).decision == StopDecision::WheelSpinning);
  (void)dbn2;
}

TEST_CASE("config validation") {
  ControllerConfig c;
  c.forward_threshold = 0.2;
  c.backward_threshold = 0.3;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  ControllerConfig ok;
  CHECK(ControllerConfig::from_json(ok.to_json()).to_json() == ok.to_json());
}

TEST_CASE("learning_path") {
  std::vector<std::string> one(5, "A");
  CHECK(learning_path(one) == std::vector<PathSegment>{{"A", 5}});
  std::vector<std::string> two{"A", "A", "A", "B", "B"};
  CHECK(learning_path(two) == std::vector<PathSegment>{{"A", 3}, {"B", 2}});
  CHECK(learning_path(std::vector<std::string>{}).empty());
}
