#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace kspace {

enum class NumberRange { R10, R100, R1000 };
enum class RepresentationStep { CardinalMagnitude, SpokenNumber, ArabicNumber, NumberLine };

std::string_view to_string(NumberRange r);
std::string_view to_string(RepresentationStep s);

struct Skill {
  std::string id;
  std::string name;
  NumberRange range = NumberRange::R10;
  RepresentationStep step = RepresentationStep::CardinalMagnitude;
  std::vector<std::string> remediates;  ///< typical-error tags this skill remediates
};

/// Immutable prerequisite DAG of skills plus game bindings.
///
/// Skills are addressed by a dense index in topological order; index i
/// precedes index j whenever there is a path i -> j. Ties in the
/// topological sort are broken by skill id so the order is reproducible.
class SkillNet {
public:
  using Index = std::size_t;

  SkillNet() = default;
  /// Validates and builds. Throws ValidationError on cycles, dangling
  /// edges, duplicate ids, or games without skills.
  SkillNet(std::vector<Skill> skills, std::vector<std::pair<std::string, std::string>> edges,
           std::map<std::string, std::vector<std::string>> games = {});

  static SkillNet from_json(const nlohmann::json& doc);
  static SkillNet load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  std::size_t size() const { return skills_.size(); }
  bool empty() const { return skills_.empty(); }
  const Skill& skill(Index i) const { return skills_.at(i); }
  const std::vector<Skill>& skills() const { return skills_; }

  bool contains(std::string_view id) const;
  /// Throws UnknownIdError.
  Index index_of(std::string_view id) const;

  /// Direct precursors, in topological-index order.
  const std::vector<Index>& parents(Index i) const { return parents_.at(i); }
  const std::vector<Index>& children(Index i) const { return children_.at(i); }
  std::vector<std::string> precursors(std::string_view id) const;
  std::vector<std::string> successors(std::string_view id) const;
  bool has_edge(Index from, Index to) const;

  const std::vector<std::pair<Index, Index>>& edges() const { return edges_; }
  const std::map<std::string, std::vector<std::string>>& games() const { return games_; }

  /// Skills tagged as remediating `error_tag`, in index order.
  std::vector<Index> remediation_skills(std::string_view error_tag) const;

private:
  std::vector<Skill> skills_;
  std::map<std::string, Index, std::less<>> index_;
  std::vector<std::vector<Index>> parents_;
  std::vector<std::vector<Index>> children_;
  std::vector<std::pair<Index, Index>> edges_;
  std::map<std::string, std::vector<std::string>> games_;
};

/// Path of the shipped 100-skill sample configuration.
std::filesystem::path sample_skill_net_path();

}  // namespace kspace
