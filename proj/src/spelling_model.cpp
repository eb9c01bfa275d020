#include "kspace/spelling_model.hpp"

#include <algorithm>
#include <cctype>
#include <limits>
#include <numeric>

#include "kspace/error.hpp"
#include "kspace/io.hpp"
#include "kspace/rng.hpp"

namespace kspace {
namespace {

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }
bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
char flip_case(char c) {
  const auto u = static_cast<unsigned char>(c);
  return static_cast<char>(std::isupper(u) ? std::tolower(u) : std::toupper(u));
}
char with_case_of(char letter, char model) {
  const auto m = static_cast<unsigned char>(model);
  const auto l = static_cast<unsigned char>(letter);
  return static_cast<char>(std::isupper(m) ? std::toupper(l) : std::tolower(l));
}

std::size_t idx(MalRule r) { return static_cast<std::size_t>(r); }

constexpr const char* kRuleNames[] = {"capitalization", "typing",    "letter_confusion", "phoneme_grapheme",
                                      "phoneme_omission", "insertion", "transposition"};

constexpr std::pair<char, char> kDefaultConfusion[] = {
    {'b', 'd'}, {'p', 'q'}, {'m', 'w'}, {'n', 'u'}, {'i', 'l'}, {'a', 'e'}, {'o', 'c'},
    {'f', 't'}, {'v', 'y'}, {'g', 'j'}, {'h', 'k'}, {'r', 'x'}, {'s', 'z'}};

constexpr const char* kDefaultGraphemeGroups[] = {"fvw", "dt", "bp", "gkcq", "cz", "sx", "ei",
                                                  "he", "oua", "mn", "lr", "jy"};

constexpr const char* kQwertzRows[] = {"qwertzuiop", "asdfghjkl", "yxcvbnm"};

}  // namespace

std::string_view to_string(MalRule r) { return kRuleNames[idx(r)]; }

WordEntry WordEntry::make(std::string word, std::vector<std::string> graphemes, int group) {
  if (word.empty()) throw ValidationError("word entry must be non-empty");
  WordEntry w;
  w.word = std::move(word);
  if (graphemes.empty()) {
    for (char c : w.word) graphemes.emplace_back(1, c);
  }
  w.graphemes = std::move(graphemes);
  w.group = group;
  const int len = static_cast<int>(w.word.size());
  w.opportunities.fill(len);
  w.opportunities[idx(MalRule::Capitalization)] =
      static_cast<int>(std::count_if(w.word.begin(), w.word.end(), is_alpha));
  w.opportunities[idx(MalRule::Transposition)] = len - 1;
  return w;
}

std::vector<WordEntry> load_word_database(const nlohmann::json& doc) {
  if (!doc.is_array()) throw ParseError("word database must be a JSON array");
  std::vector<WordEntry> out;
  for (const auto& item : doc) {
    try {
      std::vector<std::string> graphemes;
      if (item.contains("graphemes")) graphemes = item["graphemes"].get<std::vector<std::string>>();
      out.push_back(WordEntry::make(item.at("word").get<std::string>(), std::move(graphemes), item.value("group", 0)));
    } catch (const nlohmann::json::exception& ex) {
      throw ParseError(std::string("word database: ") + ex.what());
    }
  }
  return out;
}

std::vector<WordEntry> load_word_database(const std::filesystem::path& path) {
  try {
    return load_word_database(nlohmann::json::parse(io::read_text_file(path)));
  } catch (const nlohmann::json::parse_error& ex) {
    throw ParseError(path.string() + ": " + ex.what());
  }
}

// ---------------------------------------------------------------------------
// SpellingTables

std::pair<char, char> SpellingTables::key(char a, char b) {
  a = lower(a);
  b = lower(b);
  return a < b ? std::make_pair(a, b) : std::make_pair(b, a);
}

void SpellingTables::add_confusion(char a, char b) { confusion_.insert(key(a, b)); }

void SpellingTables::add_grapheme_group(std::string_view letters) {
  groups_.emplace_back(letters);
  for (std::size_t i = 0; i < letters.size(); ++i) {
    for (std::size_t j = i + 1; j < letters.size(); ++j) grapheme_.insert(key(letters[i], letters[j]));
  }
}

void SpellingTables::add_adjacent(char a, char b) { adjacent_.insert(key(a, b)); }

bool SpellingTables::confusable(char a, char b) const { return confusion_.contains(key(a, b)); }
bool SpellingTables::same_grapheme_group(char a, char b) const { return grapheme_.contains(key(a, b)); }
bool SpellingTables::keyboard_adjacent(char a, char b) const { return adjacent_.contains(key(a, b)); }

namespace {
std::vector<char> partners(const std::set<std::pair<char, char>>& rel, char c) {
  c = lower(c);
  std::vector<char> out;
  for (const auto& [a, b] : rel) {
    if (a == c) out.push_back(b);
    if (b == c) out.push_back(a);
  }
  std::sort(out.begin(), out.end());
  return out;
}
}  // namespace

std::vector<char> SpellingTables::confusion_partners(char c) const { return partners(confusion_, c); }
std::vector<char> SpellingTables::grapheme_partners(char c) const { return partners(grapheme_, c); }
std::vector<char> SpellingTables::keyboard_neighbours(char c) const { return partners(adjacent_, c); }

MalRule SpellingTables::classify_substitution(char target, char typed) const {
  if (lower(target) == lower(typed)) return MalRule::Capitalization;
  if (confusable(target, typed)) return MalRule::LetterConfusion;
  if (same_grapheme_group(target, typed)) return MalRule::PhonemeGraphemeMatch;
  return MalRule::Typing;  // keyboard-adjacent or residual
}

SpellingTables SpellingTables::defaults() {
  SpellingTables t;
  for (const auto& [a, b] : kDefaultConfusion) t.add_confusion(a, b);
  for (const char* g : kDefaultGraphemeGroups) t.add_grapheme_group(g);
  // Horizontal neighbours plus the two keys below-left/below-right.
  for (int r = 0; r < 3; ++r) {
    const std::string_view row = kQwertzRows[r];
    for (std::size_t i = 0; i + 1 < row.size(); ++i) t.add_adjacent(row[i], row[i + 1]);
    if (r < 2) {
      const std::string_view below = kQwertzRows[r + 1];
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i < below.size()) t.add_adjacent(row[i], below[i]);
        if (i > 0 && i - 1 < below.size()) t.add_adjacent(row[i], below[i - 1]);
      }
    }
  }
  return t;
}

SpellingTables SpellingTables::from_json(const nlohmann::json& doc) {
  SpellingTables t;
  try {
    for (const auto& p : doc.at("confusion")) {
      const auto s = p.get<std::vector<std::string>>();
      if (s.size() != 2 || s[0].size() != 1 || s[1].size() != 1) throw ParseError("confusion entry must be two letters");
      t.add_confusion(s[0][0], s[1][0]);
    }
    for (const auto& g : doc.at("grapheme_groups")) t.add_grapheme_group(g.get<std::string>());
    for (const auto& [k, v] : doc.at("adjacency").items()) {
      if (k.size() != 1) throw ParseError("adjacency keys must be single letters");
      for (char c : v.get<std::string>()) t.add_adjacent(k[0], c);
    }
  } catch (const nlohmann::json::exception& ex) {
    throw ParseError(std::string("spelling tables: ") + ex.what());
  }
  return t;
}

nlohmann::json SpellingTables::to_json() const {
  nlohmann::json j;
  j["confusion"] = nlohmann::json::array();
  for (const auto& [a, b] : confusion_) j["confusion"].push_back({std::string(1, a), std::string(1, b)});
  j["grapheme_groups"] = groups_;
  std::map<std::string, std::string> adj;
  for (const auto& [a, b] : adjacent_) {
    adj[std::string(1, a)] += b;
    adj[std::string(1, b)] += a;
  }
  j["adjacency"] = adj;
  return j;
}

// ---------------------------------------------------------------------------
// Edit script

std::vector<Edit> edit_script(std::string_view target, std::string_view typed, const SpellingTables& tables) {
  const std::size_t m = target.size(), n = typed.size();
  std::vector<std::vector<int>> d(m + 1, std::vector<int>(n + 1, 0));
  for (std::size_t i = 0; i <= m; ++i) d[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= n; ++j) d[0][j] = static_cast<int>(j);
  auto swapped = [&](std::size_t i, std::size_t j) {
    return i > 1 && j > 1 && target[i - 1] == typed[j - 2] && target[i - 2] == typed[j - 1] &&
           target[i - 1] != target[i - 2];
  };
  for (std::size_t i = 1; i <= m; ++i) {
    for (std::size_t j = 1; j <= n; ++j) {
      const int sub = target[i - 1] == typed[j - 1] ? 0 : 1;
      int best = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + sub});
      if (swapped(i, j)) best = std::min(best, d[i - 2][j - 2] + 1);
      d[i][j] = best;
    }
  }

  std::vector<Edit> script;
  std::size_t i = m, j = n;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && target[i - 1] == typed[j - 1] && d[i][j] == d[i - 1][j - 1]) {
      script.push_back({EditOp::Match, i - 1, target[i - 1], typed[j - 1], MalRule::Typing});
      --i, --j;
    } else if (swapped(i, j) && d[i][j] == d[i - 2][j - 2] + 1) {
      script.push_back({EditOp::Transpose, i - 2, target[i - 2], target[i - 1], MalRule::Transposition});
      i -= 2, j -= 2;
    } else if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + 1) {
      script.push_back({EditOp::Substitute, i - 1, target[i - 1], typed[j - 1],
                        tables.classify_substitution(target[i - 1], typed[j - 1])});
      --i, --j;
    } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      script.push_back({EditOp::Delete, i - 1, target[i - 1], 0, MalRule::PhonemeOmission});
      --i;
    } else {
      script.push_back({EditOp::Insert, i, 0, typed[j - 1], MalRule::Insertion});
      --j;
    }
  }
  std::reverse(script.begin(), script.end());
  return script;
}

RuleCounts analyze_input(const WordEntry& target, std::string_view typed, const SpellingTables& tables) {
  RuleCounts counts{};
  for (const auto& e : edit_script(target.word, typed, tables)) {
    if (e.op != EditOp::Match) ++counts[idx(e.rule)];
  }
  return counts;
}

// ---------------------------------------------------------------------------
// Profile

nlohmann::json MalRuleProfile::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (MalRule r : kMalRules) {
    const auto& g = (*this)[r];
    j[std::string(to_string(r))] = {{"alpha", g.alpha}, {"beta", g.beta}, {"mean", g.mean()}};
  }
  return j;
}

MalRuleProfile update_profile(MalRuleProfile profile, const WordEntry& word, const RuleCounts& activations) {
  for (std::size_t r = 0; r < kMalRuleCount; ++r) {
    profile.rules[r].alpha += activations[r];
    profile.rules[r].beta += word.opportunities[r];
  }
  return profile;
}

ErrorExpectation word_error_expectation(const MalRuleProfile& profile, const WordEntry& word) {
  ErrorExpectation e;
  for (std::size_t r = 0; r < kMalRuleCount; ++r) {
    e.expected_errors += profile.rules[r].mean() * word.opportunities[r];
  }
  e.per_letter = word.length() ? e.expected_errors / static_cast<double>(word.length()) : 0.0;
  return e;
}

std::array<double, kMalRuleCount> rule_responsibilities(const MalRuleProfile& profile, const WordEntry& word) {
  std::array<double, kMalRuleCount> out{};
  double total = 0.0;
  for (std::size_t r = 0; r < kMalRuleCount; ++r) {
    out[r] = profile.rules[r].mean() * word.opportunities[r];
    total += out[r];
  }
  if (total > 0.0) {
    for (double& v : out) v /= total;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Training / recap cycle and word selection

CycleState cycle_step(CycleState state, bool correct, bool first_attempt) {
  if (state.phase == CyclePhase::Done) throw Error("cycle_step on a word that is already Done");
  ++state.presentations;
  if (!correct) {
    state.phase = CyclePhase::Training;
    state.correct_count = 0;
    return state;
  }
  if (first_attempt && state.presentations == 1) state.first_attempt_correct = true;
  ++state.correct_count;
  state.phase = state.phase == CyclePhase::Training ? CyclePhase::Recap : CyclePhase::Done;
  return state;
}

std::optional<int> active_group(const std::vector<WordEntry>& database, const std::vector<CycleState>& states) {
  std::optional<int> g;
  for (std::size_t i = 0; i < database.size(); ++i) {
    if (states.at(i).phase == CyclePhase::Done) continue;
    if (!g || database[i].group < *g) g = database[i].group;
  }
  return g;
}

std::optional<std::size_t> select_next_word(const MalRuleProfile& profile, const std::vector<WordEntry>& database,
                                            const std::vector<CycleState>& states) {
  if (states.size() != database.size()) throw Error("select_next_word: one cycle state per word required");
  const auto group = active_group(database, states);
  if (!group) return std::nullopt;
  std::optional<std::size_t> best;
  double best_ratio = -1.0;
  for (std::size_t i = 0; i < database.size(); ++i) {
    if (states[i].phase == CyclePhase::Done || database[i].group != *group) continue;
    const double ratio = word_error_expectation(profile, database[i]).per_letter;
    bool take = !best || ratio > best_ratio;
    if (best && ratio == best_ratio) {
      const auto& a = states[i];
      const auto& b = states[*best];
      take = a.last_presented != b.last_presented ? a.last_presented < b.last_presented
                                                  : database[i].word < database[*best].word;
    }
    if (take) {
      best = i;
      best_ratio = ratio;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Error rendering

std::pair<std::string, RuleCounts> render_errors(const WordEntry& word, const RuleCounts& requested,
                                                 const SpellingTables& tables, Rng& rng) {
  const std::string& w = word.word;
  const std::size_t n = w.size();
  std::vector<bool> blocked(n + 1, false);
  RuleCounts rendered{};

  struct Planned {
    MalRule rule;
    std::size_t pos;
    char c;
  };
  std::vector<Planned> plan;

  auto free_at = [&](std::size_t p) { return p < n && !blocked[p]; };
  auto block = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t p = lo == 0 ? 0 : lo - 1; p <= std::min(hi + 1, n); ++p) blocked[p] = true;
  };
  auto shuffled_positions = [&]() {
    std::vector<std::size_t> pos(n);
    std::iota(pos.begin(), pos.end(), 0);
    rng.shuffle(pos);
    return pos;
  };
  auto pick_from = [&](const std::vector<char>& options) -> char {
    return options[rng.below(options.size())];
  };
  auto typing_options = [&](char c) {
    std::vector<char> out;
    for (char k : tables.keyboard_neighbours(c)) {
      if (!tables.confusable(c, k) && !tables.same_grapheme_group(c, k) && lower(c) != k) out.push_back(k);
    }
    return out;
  };

  auto place = [&](MalRule rule) {
    for (std::size_t p : shuffled_positions()) {
      switch (rule) {
        case MalRule::Transposition:
          if (!free_at(p) || !free_at(p + 1) || w[p] == w[p + 1] || (p + 2 < n && w[p + 2] == w[p]) ||
              (p > 0 && w[p - 1] == w[p + 1]))
            continue;
          plan.push_back({rule, p, 0});
          block(p, p + 1);
          return true;
        case MalRule::PhonemeOmission:
          // Deleting one of a doubled letter would be re-aligned elsewhere, so
          // only delete letters that differ from both neighbours.
          if (!free_at(p) || (p > 0 && w[p - 1] == w[p]) || (p + 1 < n && w[p + 1] == w[p])) continue;
          plan.push_back({rule, p, 0});
          block(p, p);
          return true;
        case MalRule::Insertion: {
          // Insert after position p.
          if (!free_at(p) || (p + 1 < n && blocked[p + 1])) continue;
          std::vector<char> options;
          for (char c = 'a'; c <= 'z'; ++c) {
            if (c != lower(w[p]) && (p + 1 >= n || c != lower(w[p + 1]))) options.push_back(c);
          }
          plan.push_back({rule, p, pick_from(options)});
          block(p, p + 1);
          return true;
        }
        default: {
          if (!free_at(p) || !is_alpha(w[p])) continue;
          std::vector<char> options;
          switch (rule) {
            case MalRule::Capitalization: options = {flip_case(w[p])}; break;
            case MalRule::LetterConfusion: options = tables.confusion_partners(w[p]); break;
            case MalRule::PhonemeGraphemeMatch: options = tables.grapheme_partners(w[p]); break;
            default: options = typing_options(w[p]); break;
          }
          if (options.empty()) continue;
          char c = pick_from(options);
          if (rule != MalRule::Capitalization) c = with_case_of(c, w[p]);
          plan.push_back({rule, p, c});
          block(p, p);
          return true;
        }
      }
    }
    return false;
  };

  // Requests are placed in random order so that, when a short word cannot
  // hold them all, no rule is systematically the one dropped.
  std::vector<MalRule> pending;
  for (std::size_t r = 0; r < kMalRuleCount; ++r)
    for (int k = 0; k < requested[r]; ++k) pending.push_back(static_cast<MalRule>(r));
  rng.shuffle(pending);
  for (MalRule rule : pending)
    if (place(rule)) ++rendered[idx(rule)];

  // Apply right to left so earlier positions stay valid.
  std::sort(plan.begin(), plan.end(), [](const Planned& a, const Planned& b) { return a.pos > b.pos; });
  std::string typed = w;
  for (const auto& e : plan) {
    switch (e.rule) {
      case MalRule::Transposition: std::swap(typed[e.pos], typed[e.pos + 1]); break;
      case MalRule::PhonemeOmission: typed.erase(e.pos, 1); break;
      case MalRule::Insertion: typed.insert(e.pos + 1, 1, e.c); break;
      default: typed[e.pos] = e.c; break;
    }
  }
  return {typed, rendered};
}

}  // namespace kspace
