#include <cmath>
#include <random>

#include "doctest.h"
#include "helpers.hpp"
#include "kspace/error.hpp"
#include "kspace/knowledge_model.hpp"

using namespace kspace;
using testing::make_net;

namespace {

// Brute-force forward filter over all joint states.
std::vector<double> enumerate(const SkillNet& net, const ParamSet& params, const AnswerSequence& history) {
  const std::size_t n = net.size();
  const std::size_t m = std::size_t{1} << n;
  std::vector<double> w(m, 1.0 / static_cast<double>(m));
  for (const auto& o : history) {
    const auto& p = params[o.skill];
    for (std::size_t x = 0; x < m; ++x) {
      const bool learned = (x >> o.skill) & 1;
      const double pc = learned ? 1 - p.slip : p.guess;
      w[x] *= o.correct ? pc : 1 - pc;
    }
    double z = 0;
    for (double v : w) z += v;
    for (double& v : w) v /= z;
    std::vector<double> next(m, 0.0);
    for (std::size_t x = 0; x < m; ++x) {
      const std::size_t bit = std::size_t{1} << o.skill;
      bool gate = true;
      for (auto par : net.parents(o.skill)) gate = gate && ((x >> par) & 1);
      if (x & bit) {
        next[x] += w[x] * (1 - p.forget);
        next[x & ~bit] += w[x] * p.forget;
      } else {
        const double l = gate ? p.learn : 0.0;
        next[x] += w[x] * (1 - l);
        next[x | bit] += w[x] * l;
      }
    }
    w = next;
  }
  std::vector<double> marg(n, 0.0);
  for (std::size_t x = 0; x < m; ++x)
    for (std::size_t s = 0; s < n; ++s)
      if ((x >> s) & 1) marg[s] += w[x];
  return marg;
}

}  // namespace

TEST_CASE("predict_correct") {
  CHECK(predict_correct(1.0, {0.1, 0.3, 0, 0}) == doctest::Approx(0.9));
  CHECK(predict_correct(0.0, {0.1, 0.2, 0, 0}) == doctest::Approx(0.2));
  CHECK(predict_correct(0.5, {0.1, 0.2, 0, 0}) == doctest::Approx(0.55));
}

TEST_CASE("single skill update by hand") {
  auto net = make_net({"A"}, {});
  ParamSet params{{0.1, 0.2, 0.1, 0.0}};
  auto b = init_beliefs(net);
  b = update_on_answer(b, net, params, "A", true);
  const double post = 0.5 * 0.9 / (0.5 * 0.9 + 0.5 * 0.2);
  CHECK(post == doctest::Approx(0.8182).epsilon(1e-4));
  CHECK(b[0] == doctest::Approx(post + (1 - post) * 0.1).epsilon(1e-12));
  CHECK(b[0] == doctest::Approx(0.8364).epsilon(1e-4));

  ParamSet exact{{0.0, 0.0, 0.0, 0.0}};
  auto c = update_on_answer(init_beliefs(net), net, exact, "A", true);
  CHECK(c[0] == doctest::Approx(1.0));
  CHECK_THROWS_AS(update_on_answer(init_beliefs(net), net, params, "Z", true), UnknownIdError);
}

TEST_CASE("exact inference against brute force") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<std::string> ids{"a", "b", "c", "d", "e"};
    std::vector<std::pair<std::string, std::string>> edges;
    for (int i = 0; i < 5; ++i)
      for (int j = i + 1; j < 5; ++j)
        if (u(gen) < 0.35) edges.emplace_back(ids[i], ids[j]);
    auto net = make_net(ids, edges);
    ParamSet params(net.size());
    for (auto& p : params) p = {0.3 * u(gen), 0.4 * u(gen), 0.3 * u(gen), 0.05 * u(gen)};
    AnswerSequence h;
    for (int k = 0; k < 30; ++k) h.push_back({static_cast<std::size_t>(gen() % 5), u(gen) < 0.6});
    auto want = enumerate(net, params, h);
    auto got = exact_infer(net, params, h);
    for (std::size_t s = 0; s < want.size(); ++s) CHECK(got[s] == doctest::Approx(want[s]).epsilon(1e-12));
  }
}

TEST_CASE("factored filter is exact without edges") {
  auto net = make_net({"A"}, {});
  ParamSet params{{0.1, 0.2, 0.15, 0.02}};
  AnswerSequence h;
  auto b = init_beliefs(net);
  for (int k = 0; k < 25; ++k) {
    bool c = (k * 37) % 5 != 0;
    h.push_back({0, c});
    b.observe(net, params, 0, c);
  }
  CHECK(std::abs(b[0] - exact_infer(net, params, h)[0]) < 1e-12);

  // two independent skills factorise
  auto two = make_net({"A", "B"}, {});
  ParamSet p2{{0.1, 0.2, 0.15, 0.0}, {0.2, 0.1, 0.05, 0.01}};
  AnswerSequence ha{{0, true}, {0, false}, {0, true}};
  AnswerSequence hb{{0, false}, {0, true}};
  AnswerSequence both{{0, true}, {1, false}, {0, false}, {1, true}, {0, true}};
  auto joint = exact_infer(two, p2, both);
  CHECK(joint[0] == doctest::Approx(exact_infer(net, {p2[0]}, ha)[0]).epsilon(1e-12));
  CHECK(joint[1] == doctest::Approx(exact_infer(net, {p2[1]}, hb)[0]).epsilon(1e-12));
}

TEST_CASE("exact inference refuses large nets") {
  std::vector<std::string> ids;
  for (int i = 0; i < 13; ++i) ids.push_back("s" + std::to_string(i));
  auto net = make_net(ids, {});
  CHECK_THROWS_AS(exact_infer(net, default_params(net), {{0, true}}), Error);
}

TEST_CASE("fit_params edge cases") {
  auto net = make_net({"A", "B"}, {{"A", "B"}});
  FitSummary summary;
  auto p = fit_params({}, net, {}, &summary);
  CHECK(p == default_params(net));
  CHECK(summary.iterations == 0);

  std::vector<AnswerSequence> all_correct(50, AnswerSequence(20, Observation{0, true}));
  p = fit_params(all_correct, net, {}, &summary);
  FitBounds bd;
  CHECK(p[0].slip <= bd.min_prob + 1e-9);
  bool flagged = false;
  for (const auto& r : summary.skills)
    if (r.skill == "A") flagged = r.degenerate;
  CHECK(flagged);
  for (const auto& q : p) {
    CHECK(q.slip <= bd.slip_max + 1e-12);
    CHECK(q.guess <= bd.guess_max + 1e-12);
    CHECK(q.forget <= q.learn + 1e-12);
  }
}

TEST_CASE("params json round trip") {
  auto net = make_net({"A", "B"}, {{"A", "B"}});
  ParamSet p{{0.1, 0.2, 0.3, 0.01}, {0.05, 0.25, 0.15, 0.0}};
  CHECK(params_from_json(net, params_to_json(net, p)) == p);
}
