#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace kspace {

using Json = nlohmann::json;

enum class EventKind {
  KeyInput,
  InvalidInput,
  Backspace,
  Enter,
  TaskShown,
  AnswerSubmitted,
  NavGame,
  NavShop,
  NavPerformance,
  HelpCall,
  Unknown,  ///< preserved opaquely via Event::kind_tag
};

/// Wire tag ("key", "invalid", ...). Unknown maps to "".
std::string_view kind_tag(EventKind kind);
EventKind kind_from_tag(std::string_view tag);

/// One timestamped interaction record.
struct Event {
  std::string student_id;
  std::string session_id;  ///< empty when the log carries no explicit session
  std::int64_t t = 0;      ///< ms since epoch
  EventKind kind = EventKind::Unknown;
  std::string tag;         ///< wire kind string, kept verbatim for unknown kinds
  Json data = Json::object();

  static Event make(std::string sid, std::string sess, std::int64_t t, EventKind kind,
                    Json data = Json::object());

  bool operator==(const Event&) const = default;
};

struct Session {
  std::string student_id;
  std::string session_id;
  std::vector<Event> events;

  std::int64_t duration_ms() const {
    return events.empty() ? 0 : events.back().t - events.front().t;
  }
};

/// Parses one JSONL line. `line_no` is 1-based and only used in error text.
Event parse_event(std::string_view line, std::size_t line_no);
/// Canonical single-line rendering (fixed key order, sorted payload keys).
std::string format_event(const Event& e);

std::vector<Event> parse_log(std::istream& in);
std::vector<Event> read_log(const std::filesystem::path& path);
std::string format_log(const std::vector<Event>& events);
void write_log(const std::filesystem::path& path, const std::vector<Event>& events);

/// Throws ValidationError when t is negative or regresses within a
/// (student, session) stream.
void validate_ordering(const std::vector<Event>& events);

inline constexpr std::int64_t kDefaultSessionGapMs = 30LL * 60 * 1000;

/// Splits events (sorted by student, then t) into sessions. Events carrying
/// an explicit session id are grouped by that id; the rest are split
/// whenever the inter-event gap exceeds `gap_ms`.
std::vector<Session> sessionize(const std::vector<Event>& events,
                                std::int64_t gap_ms = kDefaultSessionGapMs);

/// Stable sort by (student, t) preserving input order for ties.
void sort_events(std::vector<Event>& events);

/// Fields of an AnswerSubmitted payload, shared by every feature extractor.
struct Answer {
  std::int64_t t = 0;
  std::string task;
  std::string skill;
  bool correct = false;
  double answer_ms = 0.0;
  std::string typed;
  std::string target;
  std::string typical_error;
  std::string strategy;
};

std::optional<Answer> as_answer(const Event& e);
std::vector<Answer> answers(const Session& s);
std::vector<Answer> answers(const std::vector<Event>& events);

/// Groups events by student, preserving order; students in first-seen order.
std::vector<std::pair<std::string, std::vector<Event>>> by_student(const std::vector<Event>& events);

}  // namespace kspace
