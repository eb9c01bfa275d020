#include "kspace/reports.hpp"

#include <algorithm>

#include "kspace/controller.hpp"
#include "kspace/error.hpp"
#include "kspace/io.hpp"

namespace kspace::report {

namespace {

constexpr std::string_view kKindNames[] = {"error-prob", "range-progress", "skill-status", "path", "ribbons"};

std::vector<std::pair<std::string, std::vector<Event>>> students_sorted(const std::vector<Event>& events) {
  auto g = by_student(events);
  std::stable_sort(g.begin(), g.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  return g;
}

}  // namespace

Kind parse_kind(std::string_view name) {
  for (std::size_t i = 0; i < std::size(kKindNames); ++i) {
    if (kKindNames[i] == name) return static_cast<Kind>(i);
  }
  std::string all;
  for (auto k : kKindNames) all += (all.empty() ? "" : ", ") + std::string(k);
  throw ValidationError("unknown report kind '" + std::string(name) + "' (expected one of: " + all + ")");
}

std::string_view to_string(Kind k) { return kKindNames[static_cast<std::size_t>(k)]; }

std::string error_prob(const std::vector<Event>& events) {
  io::CsvWriter csv({"student_id", "session_id", "t", "error_probability"});
  for (const auto& [sid, evs] : students_sorted(events)) {
    for (const auto& s : sessionize(evs)) {
      const auto ans = answers(s);
      if (ans.empty()) continue;
      const auto errors = std::count_if(ans.begin(), ans.end(), [](const Answer& a) { return !a.correct; });
      csv.cell(sid).cell(s.session_id).cell(static_cast<long long>(s.events.front().t));
      csv.cell(static_cast<double>(errors) / static_cast<double>(ans.size()));
      csv.end_row();
    }
  }
  return csv.str();
}

std::string range_progress(const std::vector<Event>& events, const SkillNet& net) {
  io::CsvWriter csv({"student_id", "session_id", "t", "highest_range"});
  for (const auto& [sid, evs] : students_sorted(events)) {
    int best = -1;  // carried across sessions: progress never goes back
    for (const auto& s : sessionize(evs)) {
      for (const auto& a : answers(s)) {
        if (a.correct && net.contains(a.skill)) {
          best = std::max(best, static_cast<int>(net.skill(net.index_of(a.skill)).range));
        }
      }
      csv.cell(sid).cell(s.session_id).cell(static_cast<long long>(s.events.front().t));
      csv.cell(best < 0 ? std::string_view{} : to_string(static_cast<NumberRange>(best)));
      csv.end_row();
    }
  }
  return csv.str();
}

std::string skill_status(const std::vector<Event>& events, const SkillNet& net, const ParamSet& params,
                         double threshold) {
  io::CsvWriter csv({"student_id", "skill_id", "p_learned", "learned"});
  for (const auto& [sid, evs] : students_sorted(events)) {
    SkillBelief b(net);
    for (const auto& a : answers(evs)) {
      if (net.contains(a.skill)) b.observe(net, params, net.index_of(a.skill), a.correct);
    }
    for (std::size_t i = 0; i < net.size(); ++i) {
      csv.cell(sid).cell(net.skill(i).id).cell(b[i]).cell(b[i] >= threshold ? 1 : 0);
      csv.end_row();
    }
  }
  return csv.str();
}

std::string path(const std::vector<Event>& events) {
  io::CsvWriter csv({"student_id", "segment", "skill_id", "trials"});
  for (const auto& [sid, evs] : students_sorted(events)) {
    std::vector<std::string> trace;
    for (const auto& a : answers(evs)) {
      if (!a.skill.empty()) trace.push_back(a.skill);
    }
    const auto segs = learning_path(trace);
    for (std::size_t i = 0; i < segs.size(); ++i) {
      csv.cell(sid).cell(i).cell(segs[i].skill).cell(segs[i].trials);
      csv.end_row();
    }
  }
  return csv.str();
}

std::string ribbons(const std::vector<Event>& events, const TemporalOptions& options) {
  io::CsvWriter csv({"t", "student_id", "cluster_label"});
  std::vector<std::string> ids;
  const auto chains = chains_by_session(events, StateMapping::navigation(), &ids);
  if (chains.empty()) return csv.str();
  if (static_cast<std::size_t>(options.k) > ids.size()) {
    throw ValidationError("ribbons: k = " + std::to_string(options.k) + " exceeds " + std::to_string(ids.size()) +
                          " students");
  }
  const auto res = temporal_cluster(chains, options);
  for (std::size_t t = 0; t < res.labels.size(); ++t) {
    for (std::size_t i = 0; i < ids.size(); ++i) {
      csv.cell(t + 1).cell(ids[i]).cell(res.labels[t][i]);
      csv.end_row();
    }
  }
  return csv.str();
}

std::string assignments(const std::vector<std::string>& ids, const std::vector<int>& labels) {
  if (ids.size() != labels.size()) throw Error("assignments: size mismatch");
  io::CsvWriter csv({"student_id", "cluster"});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    csv.cell(ids[i]).cell(labels[i]);
    csv.end_row();
  }
  return csv.str();
}

std::string screen_results(const std::vector<std::string>& ids, const std::vector<ScreenResult>& results) {
  if (ids.size() != results.size()) throw Error("screen_results: size mismatch");
  io::CsvWriter csv({"student_id", "label", "posterior", "n_features", "minutes"});
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto& r = results[i];
    csv.cell(ids[i]).cell(r.at_risk ? "AtRisk" : "NotAtRisk").cell(r.posterior).cell(r.features_used).cell(r.minutes);
    csv.end_row();
  }
  return csv.str();
}

}  // namespace kspace::report
