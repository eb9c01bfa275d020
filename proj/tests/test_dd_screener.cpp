#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "kspace/dd_screener.hpp"
#include "kspace/error.hpp"
#include "kspace/rng.hpp"
#include "kspace/simulator.hpp"
#include "kspace/stats.hpp"

using namespace kspace;

namespace {

ScreenerModel symmetric(std::size_t m, double prior) {
  ScreenerModel s;
  for (std::size_t i = 0; i < m; ++i) {
    s.features.push_back("P/f" + std::to_string(i));
    s.mean_dd.push_back(0.0);
    s.mean_typ.push_back(0.0);
    s.var_dd.push_back(1.0);
    s.var_typ.push_back(1.0);
    s.time_min.push_back(1.0);
  }
  s.prior_dd = prior;
  return s;
}

}  // namespace

TEST_CASE("feature ids") {
  auto f = parse_feature_id("AT/r10.add_nc");
  CHECK(f.kind == FeatureKind::AnswerTime);
  CHECK(f.source == "r10.add_nc");
  CHECK_THROWS_AS(parse_feature_id("XX/foo"), Error);
  auto bank = FeatureBank::load(std::string(KSPACE_DATA_DIR) + "/screener_bank.json");
  CHECK(!bank.features.empty());
  CHECK(FeatureBank::from_json(bank.to_json()).to_json() == bank.to_json());
}

TEST_CASE("select_features grouping") {
  Rng rng(1);
  ScreenData d;
  d.feature_ids = {"P/a", "P/b", "P/null", "P/flat"};
  const int n = 200;
  d.x.resize(n, 4);
  for (int i = 0; i < n; ++i) {
    const int y = i % 2;
    d.y.push_back(y);
    d.student_ids.push_back("s" + std::to_string(i));
    d.x(i, 0) = rng.normal(y * 1.0, 1.0);
    d.x(i, 1) = 2.0 * d.x(i, 0) + 3.0;
    d.x(i, 2) = rng.normal();
    d.x(i, 3) = 4.0;
  }
  auto sel = select_features(d);
  REQUIRE(sel.size() == 2);
  CHECK(sel[0].group.size() == 2);
  CHECK(sel[0].id == "P/a");  // equal p, tie to id
  CHECK(sel[1].id == "P/null");
  CHECK(sel[0].p_value < 1e-6);

  // Welch p against the library oracle
  std::vector<double> a, b;
  for (int i = 0; i < n; ++i) (d.y[i] ? a : b).push_back(d.x(i, 2));
  CHECK(sel[1].p_value == doctest::Approx(stats::welch_t_test(a, b).p_value));

  SelectOptions strict;
  strict.alpha = 0.05;
  strict.bonferroni = true;
  CHECK(select_features(d, strict).size() == 1);
}

TEST_CASE("welch t test by hand") {
  std::vector<double> a{1, 2, 3, 4}, b{2, 4, 6, 8, 10};
  auto r = stats::welch_t_test(a, b);
  const double va = 5.0 / 3.0, vb = 10.0;
  const double se2 = va / 4 + vb / 5;
  CHECK(r.t == doctest::Approx((2.5 - 6.0) / std::sqrt(se2)));
  const double dof = se2 * se2 / ((va / 4) * (va / 4) / 3 + (vb / 5) * (vb / 5) / 4);
  CHECK(r.dof == doctest::Approx(dof));
  CHECK(r.p_value > 0.0);
  CHECK(r.p_value < 0.1);
}

TEST_CASE("closed-form posteriors") {
  auto s = symmetric(1, 0.5);
  s.mean_dd[0] = 1.0;
  s.mean_typ[0] = -1.0;
  s.epsilon = 0.0;
  for (double x : {-2.0, -0.3, 0.0, 0.7, 1.9}) {
    auto r = screen(s, std::vector<double>{x});
    CHECK(r.posterior == doctest::Approx(1.0 / (1.0 + std::exp(-2.0 * x))));
  }
  auto none = symmetric(0, 0.1);
  CHECK(screen(none, std::vector<double>{}).posterior == doctest::Approx(0.1));

  // equal conditionals: stays at the prior, stops after patience features
  auto flat = symmetric(10, 0.3);
  auto r = screen(flat, std::vector<double>(10, 1.5));
  CHECK(r.features_used == static_cast<std::size_t>(flat.patience));
  CHECK(r.posterior == doctest::Approx(0.3));
  CHECK(!r.at_risk);
  // NaN is consumed without an update
  auto m = symmetric(1, 0.5);
  m.mean_dd[0] = 3.0;
  CHECK(screen(m, std::vector<double>{NAN}).posterior == 0.5);
}

TEST_CASE("epsilon zero is order invariant") {
  Rng rng(2);
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 50; ++trial) {
    auto s = symmetric(12, rng.uniform(0.1, 0.9));
    s.epsilon = 0.0;
    std::vector<double> x;
    for (std::size_t i = 0; i < s.size(); ++i) {
      s.mean_dd[i] = rng.normal();
      s.mean_typ[i] = rng.normal();
      s.var_dd[i] = rng.uniform(0.2, 2.0);
      s.var_typ[i] = rng.uniform(0.2, 2.0);
      x.push_back(rng.normal());
    }
    auto base = screen(s, x);
    CHECK(base.features_used == s.size());
    std::vector<std::size_t> perm(s.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), gen);
    ScreenerModel p = s;
    std::vector<double> px;
    for (std::size_t i = 0; i < perm.size(); ++i) {
      const auto k = perm[i];
      p.features[i] = s.features[k];
      p.mean_dd[i] = s.mean_dd[k];
      p.mean_typ[i] = s.mean_typ[k];
      p.var_dd[i] = s.var_dd[k];
      p.var_typ[i] = s.var_typ[k];
      px.push_back(x[k]);
    }
    CHECK(screen(p, px).posterior == base.posterior);
  }
}

TEST_CASE("id stream must follow model order") {
  auto s = symmetric(3, 0.5);
  CHECK_NOTHROW(screen(s, std::vector<std::pair<std::string, double>>{{"P/f0", 1.0}, {"P/f1", 0.0}}));
  CHECK_THROWS_AS(screen(s, std::vector<std::pair<std::string, double>>{{"P/f1", 1.0}}), ValidationError);
}

TEST_CASE("evaluate boundaries") {
  ScreenData d;
  d.feature_ids = {"P/f0"};
  d.x.resize(40, 1);
  for (int i = 0; i < 40; ++i) {
    d.y.push_back(i % 2);
    d.x(i, 0) = (i % 2) ? 5.0 + 0.01 * i : -5.0 - 0.01 * i;
    d.student_ids.push_back("s" + std::to_string(i));
  }
  auto model = fit_screener(d, {"P/f0"});
  auto ev = evaluate(model, d);
  CHECK(ev.sensitivity == 1.0);
  CHECK(ev.specificity == 1.0);

  auto prior_only = symmetric(1, 0.5);
  prior_only.features = {"P/f0"};
  auto pe = evaluate(prior_only, d);
  CHECK(pe.sensitivity + pe.specificity == doctest::Approx(1.0));

  auto j = ScreenerModel::from_json(model.to_json());
  CHECK(j.to_json() == model.to_json());
}

TEST_CASE("synthetic bank") {
  auto train = sim::generate_screening(400, 0.5, 1);
  auto sel = select_features(train.data);
  SelectOptions sig;
  sig.alpha = 0.05;
  sig.bonferroni = true;
  auto kept = select_features(train.data, sig);
  CHECK(kept.size() == 17);
  std::vector<std::string> order;
  for (const auto& f : kept) order.push_back(f.id);
  auto model = fit_screener(train.data, order, &train.bank);
  auto test = sim::generate_screening(200, 0.5, 2);
  auto ev = evaluate(model, test.data);
  CHECK(ev.sensitivity >= 0.85);
  CHECK(ev.specificity >= 0.85);
  CHECK(ev.mean_minutes < ev.full_minutes);

  // a strongly affected student is flagged early
  std::vector<double> x;
  for (std::size_t i = 0; i < model.size(); ++i) x.push_back(model.mean_dd[i] + 2.0 * (model.mean_dd[i] - model.mean_typ[i]));
  auto r = screen(model, x);
  CHECK(r.at_risk);
  CHECK(r.posterior > 0.95);
  CHECK(r.features_used < model.size() / 2);
  (void)sel;
}

TEST_CASE("features from logs") {
  std::vector<Event> ev{
      Event::make("b", "", 1, EventKind::AnswerSubmitted,
                  {{"skill", "x"}, {"correct", true}, {"ms", 1000}, {"strategy", "counting"}}),
      Event::make("b", "", 2, EventKind::AnswerSubmitted,
                  {{"skill", "x"}, {"correct", false}, {"ms", 3000}, {"error", "counting-off-by-one"}}),
      Event::make("a", "", 1, EventKind::AnswerSubmitted, {{"skill", "y"}, {"correct", true}, {"ms", 500}}),
  };
  auto d = extract_screen_features(ev, {"P/x", "AT/x", "TM/counting-off-by-one", "SN/counting"});
  REQUIRE(d.student_ids == std::vector<std::string>{"a", "b"});
  CHECK(std::isnan(d.x(0, 0)));
  CHECK(d.x(1, 0) == 0.5);
  CHECK(d.x(1, 1) == 2000.0);
  CHECK(d.x(1, 2) == 0.5);
  CHECK(d.x(1, 3) == 0.5);
}
