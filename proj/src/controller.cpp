#include "kspace/controller.hpp"

#include <algorithm>

#include "kspace/error.hpp"
#include "kspace/stats.hpp"

namespace kspace {
namespace {

std::optional<SkillNet::Index> weakest(const SkillBelief& beliefs, const std::vector<SkillNet::Index>& candidates) {
  std::optional<SkillNet::Index> best;
  for (auto c : candidates) {  // candidates are in index order
    if (!best || beliefs[c] < beliefs[*best]) best = c;
  }
  return best;
}

}  // namespace

std::string_view to_string(ActionKind k) {
  switch (k) {
    case ActionKind::Stay: return "stay";
    case ActionKind::Forward: return "forward";
    case ActionKind::Backward: return "backward";
    case ActionKind::Remediate: return "remediate";
  }
  return "?";
}

std::string_view to_string(StopDecision d) {
  switch (d) {
    case StopDecision::Continue: return "continue";
    case StopDecision::Mastered: return "mastered";
    case StopDecision::WheelSpinning: return "wheel_spinning";
  }
  return "?";
}

void StopPolicyConfig::validate() const {
  if (!(0.0 < low_ceiling && low_ceiling < mastery_threshold && mastery_threshold <= 1.0)) {
    throw ValidationError("stop policy requires 0 < low_ceiling < mastery_threshold <= 1");
  }
  if (consecutive < 1) throw ValidationError("stop policy requires consecutive >= 1");
  if (slope_window < 2) throw ValidationError("stop policy requires slope_window >= 2");
}

void ControllerConfig::validate() const {
  if (!(0.0 <= backward_threshold && backward_threshold < forward_threshold && forward_threshold <= 1.0)) {
    throw ValidationError("controller requires 0 <= backward_threshold < forward_threshold <= 1");
  }
  stop.validate();
}

ControllerConfig ControllerConfig::from_json(const nlohmann::json& doc) {
  ControllerConfig c;
  c.forward_threshold = doc.value("theta_up", c.forward_threshold);
  c.backward_threshold = doc.value("theta_down", c.backward_threshold);
  c.stop.mastery_threshold = doc.value("theta_m", c.stop.mastery_threshold);
  c.stop.consecutive = doc.value("k", c.stop.consecutive);
  c.stop.min_attempts = doc.value("t_min", c.stop.min_attempts);
  c.stop.slope_window = doc.value("window", c.stop.slope_window);
  c.stop.slope_floor = doc.value("epsilon", c.stop.slope_floor);
  c.stop.low_ceiling = doc.value("theta_w", c.stop.low_ceiling);
  c.validate();
  return c;
}

nlohmann::json ControllerConfig::to_json() const {
  return {{"theta_up", forward_threshold}, {"theta_down", backward_threshold}, {"theta_m", stop.mastery_threshold},
          {"k", stop.consecutive},         {"t_min", stop.min_attempts},       {"window", stop.slope_window},
          {"epsilon", stop.slope_floor},   {"theta_w", stop.low_ceiling}};
}

Action next_action(const SkillBelief& beliefs, const SkillNet& net, SkillNet::Index current,
                   std::optional<bool> last_correct, const std::string& typical_error,
                   const ControllerConfig& config) {
  if (current >= net.size()) throw UnknownIdError("current skill index out of range");
  Action a;
  a.skill = current;
  if (!typical_error.empty() && last_correct != true) {
    if (auto r = weakest(beliefs, net.remediation_skills(typical_error))) {
      a.kind = ActionKind::Remediate;
      a.skill = *r;
      return a;
    }
  }
  const double p = beliefs[current];
  if (p >= config.forward_threshold) {
    if (auto s = weakest(beliefs, net.children(current))) {
      a.kind = ActionKind::Forward;
      a.skill = *s;
    } else {
      a.module_complete = true;
    }
  } else if (p < config.backward_threshold) {
    if (auto s = weakest(beliefs, net.parents(current))) {
      a.kind = ActionKind::Backward;
      a.skill = *s;
    }
  }
  return a;
}

StopDecision when_to_stop(std::span<const double> p, const StopPolicyConfig& config) {
  const std::size_t n = p.size();
  const auto k = static_cast<std::size_t>(config.consecutive);
  if (n >= k && std::all_of(p.end() - static_cast<std::ptrdiff_t>(k), p.end(),
                            [&](double v) { return v >= config.mastery_threshold; })) {
    return StopDecision::Mastered;
  }
  if (n >= static_cast<std::size_t>(config.min_attempts) && n > 0) {
    const std::size_t w = std::min(n, static_cast<std::size_t>(config.slope_window));
    const double slope = stats::least_squares_slope(p.subspan(n - w));
    if (slope < config.slope_floor && p.back() < config.low_ceiling) return StopDecision::WheelSpinning;
  }
  return StopDecision::Continue;
}

SkillModelAdapter::SkillModelAdapter(const SkillNet& net, ParamSet params, SkillNet::Index skill)
    : net_(&net), params_(std::move(params)), skill_(skill), beliefs_(net) {}

double SkillModelAdapter::predict() const { return predict_correct(beliefs_[skill_], params_[skill_]); }

void SkillModelAdapter::observe(bool correct) { beliefs_.observe(*net_, params_, skill_, correct); }

double FrequencyModel::predict() const {
  const std::size_t n = std::min(window_, history_.size());
  const auto correct = std::count(history_.end() - static_cast<std::ptrdiff_t>(n), history_.end(), true);
  return (static_cast<double>(correct) + 0.5) / (static_cast<double>(n) + 1.0);
}

void FrequencyModel::observe(bool correct) { history_.push_back(correct); }

StopRun run_stop_policy(NextCorrectModel& model, std::span<const bool> answers, const StopPolicyConfig& config) {
  StopRun run;
  for (bool correct : answers) {
    model.observe(correct);
    ++run.attempts;
    run.predictions.push_back(model.predict());
    run.decision = when_to_stop(run.predictions, config);
    if (run.decision != StopDecision::Continue) break;
  }
  return run;
}

std::vector<PathSegment> learning_path(std::span<const std::string> trace) {
  std::vector<PathSegment> path;
  for (const auto& s : trace) {
    if (path.empty() || path.back().skill != s) {
      path.push_back({s, 1});
    } else {
      ++path.back().trials;
    }
  }
  return path;
}

}  // namespace kspace
