#include <filesystem>
#include <sstream>

#include "doctest.h"
#include "kspace/error.hpp"
#include "kspace/event_log.hpp"

using namespace kspace;

namespace {

std::vector<Event> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_log(in);
}

Event ev(const std::string& sid, std::int64_t t, const std::string& sess = "") {
  return Event::make(sid, sess, t, EventKind::KeyInput);
}

}  // namespace

TEST_CASE("read_log basics") {
  CHECK(parse("").empty());
  auto evs = parse(
      "{\"sid\":\"a\",\"t\":1,\"kind\":\"key\",\"data\":{}}\n"
      "{\"sid\":\"a\",\"t\":5,\"kind\":\"answer\",\"data\":{\"correct\":true,\"ms\":1200}}\n"
      "{\"sid\":\"b\",\"t\":2,\"kind\":\"help\"}\n");
  REQUIRE(evs.size() == 3);
  CHECK(evs[0].kind == EventKind::KeyInput);
  CHECK(evs[1].kind == EventKind::AnswerSubmitted);
  CHECK(evs[2].student_id == "b");

  auto a = as_answer(evs[1]);
  REQUIRE(a);
  CHECK(a->correct);
  CHECK(a->answer_ms == 1200.0);
}

TEST_CASE("read_log reports the bad line") {
  try {
    parse("{\"sid\":\"a\",\"t\":1,\"kind\":\"key\"}\n{\"sid\":\"a\",\"kind\":\"key\"}\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 2);
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse("not json\n"), ParseError);
  CHECK_THROWS_AS(parse("{\"sid\":\"a\",\"t\":1,\"kind\":\"answer\",\"data\":{}}\n"), ParseError);
}

TEST_CASE("time regression within a session is rejected") {
  CHECK_THROWS_AS(parse("{\"sid\":\"a\",\"t\":5,\"kind\":\"key\"}\n{\"sid\":\"a\",\"t\":4,\"kind\":\"key\"}\n"),
                  ValidationError);
  // different sessions may restart the clock
  CHECK_NOTHROW(parse("{\"sid\":\"a\",\"sess\":\"1\",\"t\":5,\"kind\":\"key\"}\n"
                      "{\"sid\":\"a\",\"sess\":\"2\",\"t\":4,\"kind\":\"key\"}\n"));
}

TEST_CASE("unknown kinds survive a round trip") {
  const std::string text =
      "{\"sid\":\"a\",\"sess\":\"s1\",\"t\":1,\"kind\":\"minigame_x\",\"data\":{\"b\":1,\"a\":2}}\n"
      "{\"sid\":\"a\",\"sess\":\"s1\",\"t\":3,\"kind\":\"nav_shop\",\"data\":{}}\n";
  auto evs = parse(text);
  CHECK(evs[0].kind == EventKind::Unknown);
  CHECK(evs[0].tag == "minigame_x");
  // canonical form sorts payload keys
  const std::string canon = format_log(evs);
  CHECK(canon.find("{\"a\":2,\"b\":1}") != std::string::npos);
  CHECK(format_log(parse(canon)) == canon);

  auto path = std::filesystem::temp_directory_path() / "kspace_roundtrip.jsonl";
  write_log(path, evs);
  CHECK(format_log(read_log(path)) == canon);
  std::filesystem::remove(path);
}

TEST_CASE("sessionize by gap") {
  CHECK(sessionize({}, 1000).empty());

  std::vector<Event> evs{ev("a", 0), ev("a", 500), ev("a", 1000)};
  CHECK(sessionize(evs, 1000).size() == 1);

  evs = {ev("a", 0), ev("a", 1001)};
  auto s = sessionize(evs, 1000);
  REQUIRE(s.size() == 2);
  CHECK(s[0].session_id != s[1].session_id);
  CHECK(s[1].duration_ms() == 0);

  // exactly the gap is not a split
  evs = {ev("a", 0), ev("a", 1000)};
  CHECK(sessionize(evs, 1000).size() == 1);

  // students never share a session
  evs = {ev("a", 0), ev("b", 1)};
  CHECK(sessionize(evs, 1000).size() == 2);
}

TEST_CASE("explicit session ids win over the gap rule") {
  std::vector<Event> evs{ev("a", 0, "x"), ev("a", 100000000, "x"), ev("a", 100000001, "y")};
  auto s = sessionize(evs, 1000);
  REQUIRE(s.size() == 2);
  CHECK(s[0].events.size() == 2);
  CHECK(s[0].duration_ms() == 100000000);
}

TEST_CASE("sessionize partitions the input") {
  std::vector<Event> evs;
  std::int64_t t = 0;
  for (int i = 0; i < 200; ++i) {
    t += (i * 7919) % 13 == 0 ? 5000 : 10 + i % 17;
    evs.push_back(ev(i < 120 ? "a" : "b", t));
  }
  sort_events(evs);
  auto sessions = sessionize(evs, 1000);
  std::size_t total = 0;
  for (const auto& s : sessions) {
    total += s.events.size();
    for (std::size_t i = 1; i < s.events.size(); ++i) CHECK(s.events[i].t - s.events[i - 1].t <= 1000);
  }
  CHECK(total == evs.size());
}
