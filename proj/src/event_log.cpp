#include "kspace/event_log.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <sstream>

#include "kspace/error.hpp"
#include "kspace/io.hpp"

namespace kspace {
namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 10> kTags{{
    {EventKind::KeyInput, "key"},
    {EventKind::InvalidInput, "invalid"},
    {EventKind::Backspace, "bksp"},
    {EventKind::Enter, "enter"},
    {EventKind::TaskShown, "task"},
    {EventKind::AnswerSubmitted, "answer"},
    {EventKind::NavGame, "nav_game"},
    {EventKind::NavShop, "nav_shop"},
    {EventKind::NavPerformance, "nav_perf"},
    {EventKind::HelpCall, "help"},
}};

template <typename T>
T get_or(const Json& obj, const char* key, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  return it->get<T>();
}

}  // namespace

std::string_view kind_tag(EventKind kind) {
  for (const auto& [k, tag] : kTags) {
    if (k == kind) return tag;
  }
  return {};
}

EventKind kind_from_tag(std::string_view tag) {
  for (const auto& [k, t] : kTags) {
    if (t == tag) return k;
  }
  return EventKind::Unknown;
}

Event Event::make(std::string sid, std::string sess, std::int64_t t, EventKind kind, Json data) {
  Event e;
  e.student_id = std::move(sid);
  e.session_id = std::move(sess);
  e.t = t;
  e.kind = kind;
  e.tag = std::string(kind_tag(kind));
  e.data = std::move(data);
  return e;
}

Event parse_event(std::string_view line, std::size_t line_no) {
  Json obj;
  try {
    obj = Json::parse(line);
  } catch (const Json::parse_error& ex) {
    throw ParseError(line_no, std::string("invalid JSON: ") + ex.what());
  }
  if (!obj.is_object()) throw ParseError(line_no, "expected a JSON object");

  auto require = [&](const char* key) -> const Json& {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(line_no, std::string("missing field \"") + key + "\"");
    return *it;
  };
  Event e;
  const Json& sid = require("sid");
  const Json& t = require("t");
  const Json& kind = require("kind");
  if (!sid.is_string()) throw ParseError(line_no, "\"sid\" must be a string");
  if (!t.is_number_integer()) throw ParseError(line_no, "\"t\" must be an integer");
  if (!kind.is_string()) throw ParseError(line_no, "\"kind\" must be a string");
  e.student_id = sid.get<std::string>();
  e.t = t.get<std::int64_t>();
  if (e.t < 0) throw ParseError(line_no, "\"t\" must be non-negative");
  e.tag = kind.get<std::string>();
  e.kind = kind_from_tag(e.tag);
  if (auto it = obj.find("sess"); it != obj.end()) {
    if (!it->is_string()) throw ParseError(line_no, "\"sess\" must be a string");
    e.session_id = it->get<std::string>();
  }
  if (auto it = obj.find("data"); it != obj.end()) {
    if (!it->is_object()) throw ParseError(line_no, "\"data\" must be an object");
    e.data = *it;
  }
  if (e.kind == EventKind::AnswerSubmitted) {
    if (!e.data.contains("correct") || !e.data["correct"].is_boolean()) {
      throw ParseError(line_no, "answer event requires boolean data.correct");
    }
    if (!e.data.contains("ms") || !e.data["ms"].is_number()) {
      throw ParseError(line_no, "answer event requires numeric data.ms");
    }
  }
  return e;
}

std::string format_event(const Event& e) {
  std::string out = "{\"sid\":";
  out += Json(e.student_id).dump();
  if (!e.session_id.empty()) {
    out += ",\"sess\":";
    out += Json(e.session_id).dump();
  }
  out += ",\"t\":";
  out += std::to_string(e.t);
  out += ",\"kind\":";
  out += Json(e.tag.empty() ? std::string(kind_tag(e.kind)) : e.tag).dump();
  out += ",\"data\":";
  out += e.data.dump();
  out += '}';
  return out;
}

std::vector<Event> parse_log(std::istream& in) {
  std::vector<Event> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    events.push_back(parse_event(line, line_no));
  }
  validate_ordering(events);
  return events;
}

std::vector<Event> read_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return parse_log(in);
}

std::string format_log(const std::vector<Event>& events) {
  std::string out;
  for (const auto& e : events) {
    out += format_event(e);
    out += '\n';
  }
  return out;
}

void write_log(const std::filesystem::path& path, const std::vector<Event>& events) {
  io::write_atomic(path, format_log(events));
}

void validate_ordering(const std::vector<Event>& events) {
  std::map<std::pair<std::string, std::string>, std::int64_t> last;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    if (e.t < 0) throw ValidationError("event " + std::to_string(i + 1) + ": negative timestamp");
    auto key = std::make_pair(e.student_id, e.session_id);
    auto [it, inserted] = last.try_emplace(key, e.t);
    if (!inserted) {
      if (e.t < it->second) {
        throw ValidationError("line " + std::to_string(i + 1) + ": time regression in student \"" +
                              e.student_id + "\" session \"" + e.session_id + "\"");
      }
      it->second = e.t;
    }
  }
}

void sort_events(std::vector<Event>& events) {
  std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.student_id != b.student_id) return a.student_id < b.student_id;
    return a.t < b.t;
  });
}

std::vector<Session> sessionize(const std::vector<Event>& events, std::int64_t gap_ms) {
  std::vector<Session> sessions;
  std::map<std::string, int> synthesized;
  // Explicit session ids may interleave with other students' events only if
  // the input violates the sort precondition; grouping by index keeps
  // explicit sessions contiguous per student.
  std::map<std::pair<std::string, std::string>, std::size_t> explicit_index;
  const Event* prev = nullptr;
  std::size_t open_implicit = SIZE_MAX;

  for (const auto& e : events) {
    if (!e.session_id.empty()) {
      auto key = std::make_pair(e.student_id, e.session_id);
      auto it = explicit_index.find(key);
      if (it == explicit_index.end()) {
        it = explicit_index.emplace(key, sessions.size()).first;
        sessions.push_back(Session{e.student_id, e.session_id, {}});
      }
      sessions[it->second].events.push_back(e);
      open_implicit = SIZE_MAX;
    } else {
      const bool split = open_implicit == SIZE_MAX || prev == nullptr ||
                         prev->student_id != e.student_id || !prev->session_id.empty() ||
                         e.t - prev->t > gap_ms;
      if (split) {
        const int n = synthesized[e.student_id]++;
        open_implicit = sessions.size();
        sessions.push_back(Session{e.student_id, e.student_id + "#" + std::to_string(n), {}});
      }
      sessions[open_implicit].events.push_back(e);
    }
    prev = &e;
  }
  return sessions;
}

std::optional<Answer> as_answer(const Event& e) {
  if (e.kind != EventKind::AnswerSubmitted) return std::nullopt;
  Answer a;
  a.t = e.t;
  a.task = get_or<std::string>(e.data, "task", "");
  a.skill = get_or<std::string>(e.data, "skill", "");
  a.correct = get_or<bool>(e.data, "correct", false);
  a.answer_ms = get_or<double>(e.data, "ms", 0.0);
  a.typed = get_or<std::string>(e.data, "text", "");
  a.target = get_or<std::string>(e.data, "target", "");
  a.typical_error = get_or<std::string>(e.data, "error", "");
  a.strategy = get_or<std::string>(e.data, "strategy", "");
  return a;
}

std::vector<Answer> answers(const std::vector<Event>& events) {
  std::vector<Answer> out;
  for (const auto& e : events) {
    if (auto a = as_answer(e)) out.push_back(std::move(*a));
  }
  return out;
}

std::vector<Answer> answers(const Session& s) { return answers(s.events); }

std::vector<std::pair<std::string, std::vector<Event>>> by_student(const std::vector<Event>& events) {
  std::vector<std::pair<std::string, std::vector<Event>>> out;
  std::map<std::string, std::size_t> index;
  for (const auto& e : events) {
    auto [it, inserted] = index.try_emplace(e.student_id, out.size());
    if (inserted) out.emplace_back(e.student_id, std::vector<Event>{});
    out[it->second].second.push_back(e);
  }
  return out;
}

}  // namespace kspace
