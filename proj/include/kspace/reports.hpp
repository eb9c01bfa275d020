#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "kspace/dd_screener.hpp"
#include "kspace/event_log.hpp"
#include "kspace/knowledge_model.hpp"
#include "kspace/skill_net.hpp"
#include "kspace/temporal_clustering.hpp"

namespace kspace::report {

enum class Kind { ErrorProb, RangeProgress, SkillStatus, Path, Ribbons };

/// Throws ValidationError listing the valid kinds.
Kind parse_kind(std::string_view name);
std::string_view to_string(Kind k);

/// student_id,session_id,t,error_probability (one row per session).
std::string error_prob(const std::vector<Event>& events);

/// student_id,session_id,t,highest_range (range of the hardest skill answered correctly; empty if none).
std::string range_progress(const std::vector<Event>& events, const SkillNet& net);

/// student_id,skill_id,p_learned,learned after filtering each student's answers.
std::string skill_status(const std::vector<Event>& events, const SkillNet& net, const ParamSet& params,
                         double threshold = 0.85);

/// student_id,segment,skill_id,trials.
std::string path(const std::vector<Event>& events);

/// t,student_id,cluster_label from navigation chains.
std::string ribbons(const std::vector<Event>& events, const TemporalOptions& options);

/// student_id,cluster.
std::string assignments(const std::vector<std::string>& ids, const std::vector<int>& labels);

/// student_id,label,posterior,n_features,minutes.
std::string screen_results(const std::vector<std::string>& ids, const std::vector<ScreenResult>& results);

}  // namespace kspace::report
