#include "doctest.h"
#include "helpers.hpp"
#include "kspace/error.hpp"
#include "kspace/knowledge_model.hpp"
#include "kspace/skill_net.hpp"

using namespace kspace;
using testing::make_net;

TEST_CASE("precursors and successors") {
  auto chain = make_net({"A", "B", "C"}, {{"A", "B"}, {"B", "C"}});
  CHECK(chain.precursors("A").empty());
  CHECK(chain.successors("B") == std::vector<std::string>{"C"});
  CHECK(chain.index_of("A") < chain.index_of("B"));
  CHECK(chain.index_of("B") < chain.index_of("C"));

  auto diamond = make_net({"D", "C", "B", "A"}, {{"A", "B"}, {"A", "C"}, {"B", "D"}, {"C", "D"}});
  CHECK(diamond.precursors("D") == std::vector<std::string>{"B", "C"});
  CHECK(diamond.successors("A") == std::vector<std::string>{"B", "C"});
}

TEST_CASE("topological order follows every edge") {
  auto net = SkillNet::load(sample_skill_net_path());
  CHECK(net.size() == 100);
  for (auto [a, b] : net.edges()) CHECK(a < b);
}

TEST_CASE("invalid nets are rejected") {
  CHECK_THROWS_AS(make_net({"A", "B"}, {{"A", "B"}, {"B", "A"}}), ValidationError);
  CHECK_THROWS_AS(make_net({"A"}, {{"A", "A"}}), ValidationError);
  CHECK_THROWS_AS(make_net({"A"}, {{"A", "Z"}}), ValidationError);
  CHECK_THROWS_AS(make_net({"A", "A"}, {}), ValidationError);
  auto net = make_net({"A"}, {});
  CHECK_THROWS_AS(net.index_of("nope"), UnknownIdError);
}

TEST_CASE("json round trip") {
  auto net = SkillNet::load(sample_skill_net_path());
  auto again = SkillNet::from_json(net.to_json());
  CHECK(again.to_json() == net.to_json());
}

TEST_CASE("init_beliefs") {
  auto net = make_net({"A", "B", "C"}, {{"A", "B"}});
  auto b = init_beliefs(net);
  CHECK(b.to_map(net) == std::map<std::string, double>{{"A", 0.5}, {"B", 0.5}, {"C", 0.5}});
  CHECK(init_beliefs(SkillNet{}).size() == 0);
  auto sample = SkillNet::load(sample_skill_net_path());
  auto bs = init_beliefs(sample);
  CHECK(bs.size() == 100);
  for (double p : bs.marginals()) CHECK(p == 0.5);
}
