#pragma once

#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "kspace/knowledge_model.hpp"
#include "kspace/skill_net.hpp"

namespace kspace {

enum class ActionKind { Stay, Forward, Backward, Remediate };

struct Action {
  ActionKind kind = ActionKind::Stay;
  SkillNet::Index skill = 0;     ///< target skill; the current skill for Stay
  bool module_complete = false;  ///< Forward condition met with no successor left
};

std::string_view to_string(ActionKind k);

enum class StopDecision { Continue, Mastered, WheelSpinning };

std::string_view to_string(StopDecision d);

struct StopPolicyConfig {
  double mastery_threshold = 0.95;  ///< on predicted P(next correct)
  int consecutive = 3;
  int min_attempts = 10;
  int slope_window = 8;
  double slope_floor = 0.005;
  double low_ceiling = 0.6;

  /// Mastery-threshold-only baseline: the slope test can never fire.
  static StopPolicyConfig mastery_only() {
    StopPolicyConfig c;
    c.slope_floor = -std::numeric_limits<double>::infinity();
    return c;
  }
  void validate() const;
};

struct ControllerConfig {
  double forward_threshold = 0.85;
  double backward_threshold = 0.30;
  StopPolicyConfig stop{};

  void validate() const;
  static ControllerConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

/// Skill navigation from the current posterior beliefs. A typical error
/// with a known remediation skill wins; otherwise forward to the weakest
/// successor above the forward threshold, backward to the weakest
/// precursor below the backward threshold, else stay. Ties on belief go to
/// the lower topological index.
Action next_action(const SkillBelief& beliefs, const SkillNet& net, SkillNet::Index current,
                   std::optional<bool> last_correct, const std::string& typical_error,
                   const ControllerConfig& config);

/// Pure when-to-stop decision over the sequence of predicted next-answer
/// correctness probabilities. Works with any model that can produce them.
StopDecision when_to_stop(std::span<const double> p_next_correct, const StopPolicyConfig& config);

/// Anything that can predict the next answer on one skill and learn from it.
class NextCorrectModel {
public:
  virtual ~NextCorrectModel() = default;
  virtual double predict() const = 0;
  virtual void observe(bool correct) = 0;
};

/// The knowledge model restricted to one skill of a net.
class SkillModelAdapter final : public NextCorrectModel {
public:
  SkillModelAdapter(const SkillNet& net, ParamSet params, SkillNet::Index skill);
  double predict() const override;
  void observe(bool correct) override;
  const SkillBelief& beliefs() const { return beliefs_; }

private:
  const SkillNet* net_;
  ParamSet params_;
  SkillNet::Index skill_;
  SkillBelief beliefs_;
};

/// Accuracy over a sliding window of recent answers, with half a pseudo-count
/// on each outcome.
class FrequencyModel final : public NextCorrectModel {
public:
  explicit FrequencyModel(std::size_t window = 10) : window_(window) {}
  double predict() const override;
  void observe(bool correct) override;

private:
  std::size_t window_;
  std::vector<bool> history_;
};

struct StopRun {
  StopDecision decision = StopDecision::Continue;
  std::size_t attempts = 0;
  std::vector<double> predictions;
};

/// Feeds answers to `model` one at a time, consulting when_to_stop after
/// each; stops at the first non-Continue decision.
StopRun run_stop_policy(NextCorrectModel& model, std::span<const bool> answers, const StopPolicyConfig& config);

struct PathSegment {
  std::string skill;
  std::size_t trials = 0;
  bool operator==(const PathSegment&) const = default;
};

/// Collapses a per-trial skill trace into (skill, consecutive trials) runs.
std::vector<PathSegment> learning_path(std::span<const std::string> trace);

}  // namespace kspace
