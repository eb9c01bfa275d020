#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "kspace/skill_net.hpp"

namespace kspace {

/// Emission and transition probabilities of one two-state skill.
struct SkillParams {
  double slip = 0.1;
  double guess = 0.25;
  double learn = 0.1;
  double forget = 0.01;

  bool operator==(const SkillParams&) const = default;
};

/// Per-skill parameters aligned with SkillNet indices.
using ParamSet = std::vector<SkillParams>;

ParamSet default_params(const SkillNet& net, SkillParams p = {});

/// P(correct) = p * (1 - slip) + (1 - p) * guess.
double predict_correct(double p_learned, const SkillParams& params);

/// Factored filtering state over a skill net.
///
/// Each skill keeps its learned probability conditioned on its prerequisite
/// gate (all direct precursors learned) being open or closed. The marginal
/// is recovered as P(gate) * p_open + (1 - P(gate)) * p_closed with
/// P(gate) the product of the precursors' marginals. Keeping the two
/// conditionals lets evidence on a skill flow one step up to its
/// precursors and lets a precursor's change flow down to its successors.
class SkillBelief {
public:
  SkillBelief() = default;
  /// Every skill at `initial` (0.5 unless overridden).
  explicit SkillBelief(const SkillNet& net, double initial = 0.5);
  /// Independent skills with the given marginals (gate-independent).
  static SkillBelief from_marginals(const SkillNet& net, const std::vector<double>& p);

  std::size_t size() const { return marginal_.size(); }
  double operator[](SkillNet::Index i) const { return marginal_.at(i); }
  const std::vector<double>& marginals() const { return marginal_; }

  /// Bayes update on the answered skill, one-step propagation to its
  /// precursors, then the learn/forget transition of the answered skill.
  void observe(const SkillNet& net, const ParamSet& params, SkillNet::Index skill, bool correct);

  /// One learn/forget transition of every skill with no observation.
  void advance(const SkillNet& net, const ParamSet& params);

  /// Gate-open probability P(all precursors learned) under the factored state.
  double gate(const SkillNet& net, SkillNet::Index skill) const;

  std::map<std::string, double> to_map(const SkillNet& net) const;

private:
  void transition(const SkillNet& net, const ParamSet& params, SkillNet::Index s);
  void refresh(const SkillNet& net);

  std::vector<double> p_open_;
  std::vector<double> p_closed_;
  std::vector<double> marginal_;
};

SkillBelief init_beliefs(const SkillNet& net);

/// Functional form of SkillBelief::observe.
SkillBelief update_on_answer(SkillBelief beliefs, const SkillNet& net, const ParamSet& params,
                             const std::string& skill, bool correct);

struct Observation {
  SkillNet::Index skill = 0;
  bool correct = false;
};

using AnswerSequence = std::vector<Observation>;

inline constexpr std::size_t kMaxExactSkills = 12;

/// Filtered marginals after each observation, by enumeration over all 2^n
/// joint states. Generative model: independent 0.5 priors; an answer on
/// skill s is emitted from x_s with slip/guess; then x_s alone transitions,
/// 1 -> 0 with forget and 0 -> 1 with learn iff every precursor is learned.
/// Throws Error when the net has more than kMaxExactSkills skills.
std::vector<std::vector<double>> exact_filter(const SkillNet& net, const ParamSet& params,
                                              const AnswerSequence& history);

/// Marginals after the whole history (exact_filter's last row, or the prior).
std::vector<double> exact_infer(const SkillNet& net, const ParamSet& params,
                                const AnswerSequence& history);

struct FitBounds {
  double slip_max = 0.3;
  double guess_max = 0.5;
  double min_prob = 1e-3;
  bool forget_le_learn = true;
};

struct FitOptions {
  int max_iterations = 200;
  double tolerance = 1e-7;
  FitBounds bounds;
  SkillParams initial{};
};

struct SkillFitReport {
  std::string skill;
  std::size_t observations = 0;
  bool fitted = false;     ///< false: kept defaults (no data)
  bool degenerate = false; ///< some parameter sits on a constraint bound
};

struct FitSummary {
  std::vector<SkillFitReport> skills;  ///< only skills that were observed or requested
  int iterations = 0;
  double log_likelihood = 0.0;
  bool converged = false;

  nlohmann::json to_json() const;
};

/// Constrained EM over the factored model. Precursor gates are treated as
/// known covariates computed from the current parameters at each E-step.
ParamSet fit_params(const std::vector<AnswerSequence>& students, const SkillNet& net,
                    const FitOptions& options = {}, FitSummary* summary = nullptr);

/// Log-likelihood of the data under the factored one-step-ahead predictions.
double sequence_log_likelihood(const std::vector<AnswerSequence>& students, const SkillNet& net,
                               const ParamSet& params);

nlohmann::json params_to_json(const SkillNet& net, const ParamSet& params);
ParamSet params_from_json(const SkillNet& net, const nlohmann::json& doc);

}  // namespace kspace
