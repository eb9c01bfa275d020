#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kspace/controller.hpp"
#include "kspace/dd_screener.hpp"
#include "kspace/engagement.hpp"
#include "kspace/event_log.hpp"
#include "kspace/knowledge_model.hpp"
#include "kspace/skill_net.hpp"
#include "kspace/spelling_model.hpp"
#include "kspace/temporal_clustering.hpp"
#include "kspace/trait_clustering.hpp"

namespace kspace::sim {

enum class Scenario { Math, Spelling };

/// Two independent 2-state Markov chains.
struct EngagementProcess {
  double focus_stay = 0.9;       ///< P(focused -> focused)
  double focus_return = 0.5;     ///< P(unfocused -> focused)
  double receptive_stay = 0.9;
  double receptive_return = 0.5;
};

struct SimConfig {
  Scenario scenario = Scenario::Math;
  std::size_t population = 20;
  int sessions = 3;
  int session_length = 40;  ///< answers per session
  std::uint64_t seed = 1;
  std::string skill_net;    ///< path; empty = shipped sample
  std::string words;        ///< path; empty = shipped sample
  std::vector<double> subgroups{1.0};  ///< mixture weights over ability templates
  double dd_fraction = 0.0;
  double wheel_spin_fraction = 0.0;
  SkillParams params{0.05, 0.2, 0.2, 0.0};
  double jitter = 0.02;
  double lambda_min = 0.0;
  double lambda_max = 0.08;
  EngagementProcess engagement{};
  ControllerConfig controller{};

  void validate() const;
  static SimConfig from_json(const Json& j);
  Json to_json() const;
};

struct SyntheticStudent {
  std::string id;
  int subgroup = 0;
  bool dd = false;
  std::vector<bool> learned;     ///< true latent skill states
  ParamSet params;               ///< true per-skill parameters
  std::vector<bool> wheel_spin;  ///< skills with learn = 0
  std::array<double, kMalRuleCount> lambda{};
  double ms_mu = 8.0;            ///< log-normal answer time (log ms)
  double ms_sigma = 0.35;
  EngagementProcess engagement{};
  bool focused = true;
  bool receptive = true;
  std::uint64_t stream = 0;      ///< per-student random stream id
};

std::vector<SyntheticStudent> generate_population(const SimConfig& config, const SkillNet& net,
                                                  std::uint64_t seed);

struct TruthRecord {
  std::string student_id;
  std::int64_t t = 0;
  std::vector<bool> skill_states;
  bool focused = true;
  bool receptive = true;
};

struct SimRun {
  std::vector<Event> events;
  std::vector<TruthRecord> truth;
};

std::string format_truth(const TruthRecord& r, const SkillNet& net);

/// Per-student model state carried across sessions.
struct MathTutorState {
  SkillBelief beliefs;
  SkillNet::Index current = 0;
  std::optional<bool> last_correct;
  std::string last_error;
  int task_counter = 0;
};

struct SpellingTutorState {
  MalRuleProfile profile;
  std::vector<CycleState> cycle;
  std::int64_t clock = 0;
};

/// One closed-loop math session. Appends to `run`; returns the end time.
std::int64_t simulate_math_session(SyntheticStudent& student, MathTutorState& tutor, const SkillNet& net,
                                   const ParamSet& model_params, const ControllerConfig& controller, int length,
                                   std::int64_t t0, const std::string& session_id, Rng& rng, SimRun& run);

std::int64_t simulate_spelling_session(SyntheticStudent& student, SpellingTutorState& tutor,
                                       const std::vector<WordEntry>& words, const SpellingTables& tables, int length,
                                       std::int64_t t0, const std::string& session_id, Rng& rng, SimRun& run);

/// Full scenario: population, then every student's sessions (students in
/// parallel, each on its own random stream). Events sorted by (student, t).
SimRun simulate(const SimConfig& config, const SkillNet& net, const std::vector<WordEntry>& words,
                std::vector<SyntheticStudent>* population = nullptr);
SimRun simulate(const SimConfig& config, std::vector<SyntheticStudent>* population = nullptr);

/// Answers of `student` practising one skill `n` times without the tutor
/// (learning gated by precursors as in the model).
std::vector<bool> practice_answers(SyntheticStudent& student, const SkillNet& net, SkillNet::Index skill, int n,
                                   Rng& rng);

// ---------------------------------------------------------------------------
// Lighter generators for the analysis modules.

struct TraitSimulation {
  ProfileSet complete;
  std::vector<int> truth;
  std::vector<Eigen::RowVectorXd> noise;  ///< per student, unit-variance draws for partial profiles
  std::vector<int> available_from;        ///< session at which each feature becomes observable
  double partial_noise = 2.0;
  int full_sessions = 10;
};

/// Six ability templates placed at the vertices of an octahedron of radius
/// `separation / sqrt(2)` in a 3-d latent space, mapped into 12 profile
/// features; student jitter has unit variance.
TraitSimulation generate_trait_profiles(std::size_t per_group, std::uint64_t seed, double separation = 5.5,
                                        int groups = 6);

/// Profiles after `sessions` sessions: extra noise shrinking with sessions,
/// features not yet observable set to NaN.
ProfileSet observe_profiles(const TraitSimulation& sim, int sessions);

struct BehaviorSimulation {
  std::vector<std::vector<BehaviorChain>> chains;  ///< [session][student]
  std::vector<std::vector<Event>> events;          ///< [student], all sessions
  std::vector<int> truth;                          ///< archetype per student
};

/// Three navigation archetypes (focused, shop-heavy, navigator). Each
/// session has `events_per_session` navigation events; with probability
/// `outlier` a session follows a random archetype instead.
BehaviorSimulation generate_behavior(std::size_t per_archetype, int sessions, std::uint64_t seed,
                                     int events_per_session = 12, double outlier = 0.1);

struct ScreeningSimulation {
  ScreenData data;
  FeatureBank bank;
  std::vector<std::string> signal_groups;
};

/// Feature bank of `signal_groups` informative groups plus `noise_groups`
/// uninformative ones, three strongly correlated features per group.
ScreeningSimulation generate_screening(std::size_t students, double dd_fraction, std::uint64_t seed,
                                       int signal_groups = 17, int noise_groups = 23);

struct ErpSimulation {
  ErpDataset data;
  std::vector<std::string> planted;  ///< features with nonzero true weight
  std::vector<double> planted_weights;
  double planted_intercept = 0.0;
};

/// ERP layout columns plus decoys; labels from a logistic model on three
/// planted features (non_receptive, decay_s, non_focused).
ErpSimulation generate_erp(std::size_t students, int rows_per_student, std::uint64_t seed, int extra_decoys = 41);

}  // namespace kspace::sim
