#include "kspace/skill_net.hpp"

#include <algorithm>
#include <queue>
#include <set>

#include "kspace/error.hpp"
#include "kspace/io.hpp"

namespace kspace {
namespace {

constexpr std::pair<NumberRange, std::string_view> kRanges[] = {
    {NumberRange::R10, "R10"}, {NumberRange::R100, "R100"}, {NumberRange::R1000, "R1000"}};
constexpr std::pair<RepresentationStep, std::string_view> kSteps[] = {
    {RepresentationStep::CardinalMagnitude, "cardinal"},
    {RepresentationStep::SpokenNumber, "spoken"},
    {RepresentationStep::ArabicNumber, "arabic"},
    {RepresentationStep::NumberLine, "numberline"}};

NumberRange parse_range(const std::string& s) {
  for (const auto& [r, name] : kRanges) {
    if (name == s) return r;
  }
  throw ParseError("unknown number range \"" + s + "\"");
}

RepresentationStep parse_step(const std::string& s) {
  for (const auto& [st, name] : kSteps) {
    if (name == s) return st;
  }
  throw ParseError("unknown representation step \"" + s + "\"");
}

// Returns one cycle among the nodes left over by Kahn's algorithm.
std::vector<std::size_t> find_cycle(const std::vector<std::vector<std::size_t>>& out,
                                    const std::vector<int>& indegree) {
  const std::size_t n = out.size();
  std::size_t start = n;
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] > 0) {
      start = i;
      break;
    }
  }
  // Every remaining node has a remaining predecessor, so walking forward
  // along remaining edges must revisit a node.
  std::vector<int> seen_at(n, -1);
  std::vector<std::size_t> walk;
  std::size_t v = start;
  while (seen_at[v] < 0) {
    seen_at[v] = static_cast<int>(walk.size());
    walk.push_back(v);
    std::size_t next = n;
    for (std::size_t w : out[v]) {
      if (indegree[w] > 0) {
        next = w;
        break;
      }
    }
    v = next;
  }
  return {walk.begin() + seen_at[v], walk.end()};
}

}  // namespace

std::string_view to_string(NumberRange r) {
  for (const auto& [k, name] : kRanges) {
    if (k == r) return name;
  }
  return "?";
}

std::string_view to_string(RepresentationStep s) {
  for (const auto& [k, name] : kSteps) {
    if (k == s) return name;
  }
  return "?";
}

SkillNet::SkillNet(std::vector<Skill> skills, std::vector<std::pair<std::string, std::string>> edges,
                   std::map<std::string, std::vector<std::string>> games)
    : games_(std::move(games)) {
  const std::size_t n = skills.size();
  std::map<std::string, std::size_t, std::less<>> raw_index;
  for (std::size_t i = 0; i < n; ++i) {
    if (!raw_index.emplace(skills[i].id, i).second) {
      throw ValidationError("duplicate skill id \"" + skills[i].id + "\"");
    }
  }
  std::vector<std::vector<std::size_t>> out(n);
  std::vector<int> indegree(n, 0);
  std::set<std::pair<std::size_t, std::size_t>> seen_edges;
  for (const auto& [from, to] : edges) {
    auto a = raw_index.find(from);
    auto b = raw_index.find(to);
    if (a == raw_index.end() || b == raw_index.end()) {
      throw ValidationError("dangling edge " + from + " -> " + to);
    }
    if (!seen_edges.insert({a->second, b->second}).second) continue;
    out[a->second].push_back(b->second);
    ++indegree[b->second];
  }

  // Kahn with a min-heap on id for a deterministic order.
  auto by_id = [&](std::size_t a, std::size_t b) { return skills[a].id > skills[b].id; };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(by_id)> ready(by_id);
  for (std::size_t i = 0; i < n; ++i) {
    if (indegree[i] == 0) ready.push(i);
  }
  std::vector<std::size_t> order;
  while (!ready.empty()) {
    std::size_t v = ready.top();
    ready.pop();
    order.push_back(v);
    for (std::size_t w : out[v]) {
      if (--indegree[w] == 0) ready.push(w);
    }
  }
  if (order.size() != n) {
    auto cycle = find_cycle(out, indegree);
    std::string msg = "skill net has a cycle: ";
    for (std::size_t v : cycle) msg += skills[v].id + " -> ";
    msg += skills[cycle.front()].id;
    throw ValidationError(msg);
  }

  std::vector<std::size_t> position(n);
  for (std::size_t k = 0; k < n; ++k) position[order[k]] = k;
  skills_.reserve(n);
  for (std::size_t v : order) skills_.push_back(std::move(skills[v]));
  for (std::size_t k = 0; k < n; ++k) index_.emplace(skills_[k].id, k);

  parents_.assign(n, {});
  children_.assign(n, {});
  for (const auto& [a, b] : seen_edges) {
    edges_.emplace_back(position[a], position[b]);
  }
  std::sort(edges_.begin(), edges_.end());
  for (const auto& [a, b] : edges_) {
    parents_[b].push_back(a);
    children_[a].push_back(b);
  }
  for (auto& p : parents_) std::sort(p.begin(), p.end());
  for (auto& c : children_) std::sort(c.begin(), c.end());

  for (const auto& [game, bound] : games_) {
    if (bound.empty()) throw ValidationError("game \"" + game + "\" binds no skill");
    for (const auto& id : bound) {
      if (!index_.contains(id)) {
        throw ValidationError("game \"" + game + "\" binds unknown skill \"" + id + "\"");
      }
    }
  }
}

SkillNet SkillNet::from_json(const nlohmann::json& doc) {
  try {
    std::vector<Skill> skills;
    for (const auto& s : doc.at("skills")) {
      Skill sk;
      sk.id = s.at("id").get<std::string>();
      sk.name = s.value("name", sk.id);
      sk.range = parse_range(s.value("range", std::string("R10")));
      sk.step = parse_step(s.value("step", std::string("cardinal")));
      if (s.contains("remediates")) sk.remediates = s["remediates"].get<std::vector<std::string>>();
      skills.push_back(std::move(sk));
    }
    std::vector<std::pair<std::string, std::string>> edges;
    if (doc.contains("edges")) {
      for (const auto& e : doc["edges"]) {
        if (!e.is_array() || e.size() != 2) throw ParseError("edge must be a [from, to] pair");
        edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
      }
    }
    std::map<std::string, std::vector<std::string>> games;
    if (doc.contains("games")) games = doc["games"].get<std::map<std::string, std::vector<std::string>>>();
    return SkillNet(std::move(skills), std::move(edges), std::move(games));
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("skill net config: ") + ex.what());
  }
}

SkillNet SkillNet::load(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(io::read_text_file(path));
  } catch (const nlohmann::json::parse_error& ex) {
    throw ParseError(path.string() + ": " + ex.what());
  }
  return from_json(doc);
}

nlohmann::json SkillNet::to_json() const {
  nlohmann::json doc;
  doc["skills"] = nlohmann::json::array();
  for (const auto& s : skills_) {
    doc["skills"].push_back({{"id", s.id},
                             {"name", s.name},
                             {"range", to_string(s.range)},
                             {"step", to_string(s.step)},
                             {"remediates", s.remediates}});
  }
  doc["edges"] = nlohmann::json::array();
  for (const auto& [a, b] : edges_) doc["edges"].push_back({skills_[a].id, skills_[b].id});
  doc["games"] = games_;
  return doc;
}

bool SkillNet::contains(std::string_view id) const { return index_.find(id) != index_.end(); }

SkillNet::Index SkillNet::index_of(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw UnknownIdError("unknown skill \"" + std::string(id) + "\"");
  return it->second;
}

std::vector<std::string> SkillNet::precursors(std::string_view id) const {
  std::vector<std::string> out;
  for (Index p : parents_[index_of(id)]) out.push_back(skills_[p].id);
  return out;
}

std::vector<std::string> SkillNet::successors(std::string_view id) const {
  std::vector<std::string> out;
  for (Index c : children_[index_of(id)]) out.push_back(skills_[c].id);
  return out;
}

bool SkillNet::has_edge(Index from, Index to) const {
  const auto& c = children_.at(from);
  return std::binary_search(c.begin(), c.end(), to);
}

std::vector<SkillNet::Index> SkillNet::remediation_skills(std::string_view error_tag) const {
  std::vector<Index> out;
  for (Index i = 0; i < skills_.size(); ++i) {
    const auto& r = skills_[i].remediates;
    if (std::find(r.begin(), r.end(), error_tag) != r.end()) out.push_back(i);
  }
  return out;
}

std::filesystem::path sample_skill_net_path() {
  return std::filesystem::path(KSPACE_DATA_DIR) / "skillnet_sample.json";
}

}  // namespace kspace
