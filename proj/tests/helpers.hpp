#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kspace/skill_net.hpp"

namespace testing {

inline kspace::SkillNet make_net(const std::vector<std::string>& ids,
                                 const std::vector<std::pair<std::string, std::string>>& edges) {
  std::vector<kspace::Skill> skills;
  for (const auto& id : ids) {
    kspace::Skill s;
    s.id = id;
    s.name = id;
    skills.push_back(s);
  }
  return kspace::SkillNet(skills, edges);
}

}  // namespace testing
