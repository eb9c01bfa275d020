#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace kspace {

class Rng;

enum class MalRule {
  Capitalization,
  Typing,
  LetterConfusion,
  PhonemeGraphemeMatch,
  PhonemeOmission,
  Insertion,
  Transposition,
};

inline constexpr std::size_t kMalRuleCount = 7;
inline constexpr std::array<MalRule, kMalRuleCount> kMalRules{
    MalRule::Capitalization, MalRule::Typing,          MalRule::LetterConfusion,
    MalRule::PhonemeGraphemeMatch, MalRule::PhonemeOmission, MalRule::Insertion,
    MalRule::Transposition};

std::string_view to_string(MalRule r);

/// Per-rule integer counts indexed by static_cast<size_t>(MalRule).
using RuleCounts = std::array<int, kMalRuleCount>;

struct WordEntry {
  std::string word;
  std::vector<std::string> graphemes;
  int group = 0;
  RuleCounts opportunities{};

  /// Computes opportunity counts: capitalizable letters for
  /// Capitalization, length - 1 for Transposition, length otherwise.
  static WordEntry make(std::string word, std::vector<std::string> graphemes = {}, int group = 0);
  std::size_t length() const { return word.size(); }
};

std::vector<WordEntry> load_word_database(const nlohmann::json& doc);
std::vector<WordEntry> load_word_database(const std::filesystem::path& path);

/// Letter relations used to classify substitutions. Letters are compared
/// lower-cased; all relations are symmetric.
class SpellingTables {
public:
  /// QWERTZ adjacency plus the shipped confusion and grapheme tables.
  static SpellingTables defaults();
  static SpellingTables from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;

  void add_confusion(char a, char b);
  void add_grapheme_group(std::string_view letters);
  void add_adjacent(char a, char b);

  bool confusable(char a, char b) const;
  bool same_grapheme_group(char a, char b) const;
  bool keyboard_adjacent(char a, char b) const;

  /// Letters related to `c` under each relation (lower case, sorted).
  std::vector<char> confusion_partners(char c) const;
  std::vector<char> grapheme_partners(char c) const;
  std::vector<char> keyboard_neighbours(char c) const;

  /// Classification of a single-character substitution target -> typed.
  MalRule classify_substitution(char target, char typed) const;

private:
  static std::pair<char, char> key(char a, char b);
  std::set<std::pair<char, char>> confusion_;
  std::set<std::pair<char, char>> grapheme_;
  std::set<std::pair<char, char>> adjacent_;
  std::vector<std::string> groups_;
};

enum class EditOp { Match, Substitute, Delete, Insert, Transpose };

struct Edit {
  EditOp op = EditOp::Match;
  std::size_t target_pos = 0;  ///< position in the target word
  char target_char = 0;
  char typed_char = 0;
  MalRule rule = MalRule::Typing;  ///< meaningless for Match
};

/// Minimal unit-cost edit script (optimal string alignment distance, with
/// adjacent transpositions) from target to typed, each non-match edit
/// classified to exactly one mal-rule.
std::vector<Edit> edit_script(std::string_view target, std::string_view typed, const SpellingTables& tables);

RuleCounts analyze_input(const WordEntry& target, std::string_view typed, const SpellingTables& tables);

struct GammaPosterior {
  double alpha = 1.0;
  double beta = 1.0;
  double mean() const { return alpha / beta; }
};

struct MalRuleProfile {
  std::array<GammaPosterior, kMalRuleCount> rules{};

  const GammaPosterior& operator[](MalRule r) const { return rules[static_cast<std::size_t>(r)]; }
  GammaPosterior& operator[](MalRule r) { return rules[static_cast<std::size_t>(r)]; }
  nlohmann::json to_json() const;
};

/// Conjugate Poisson-Gamma update: alpha += errors, beta += opportunities.
MalRuleProfile update_profile(MalRuleProfile profile, const WordEntry& word, const RuleCounts& activations);

struct ErrorExpectation {
  double expected_errors = 0.0;
  double per_letter = 0.0;
};

ErrorExpectation word_error_expectation(const MalRuleProfile& profile, const WordEntry& word);

/// Posterior probability that each rule produced an error on this word,
/// proportional to the rule's expected error count.
std::array<double, kMalRuleCount> rule_responsibilities(const MalRuleProfile& profile, const WordEntry& word);

enum class CyclePhase { Training, Recap, Done };

struct CycleState {
  CyclePhase phase = CyclePhase::Training;
  int correct_count = 0;
  int presentations = 0;
  std::int64_t last_presented = -1;  ///< presentation clock, -1 = never
  bool first_attempt_correct = false;
};

/// Training -> Recap -> Done on consecutive correct entries; any error
/// sends the word back to Training with the count reset. Throws Error on
/// a Done word.
CycleState cycle_step(CycleState state, bool correct, bool first_attempt);

/// Lowest word group with any word not yet Done, or nullopt.
std::optional<int> active_group(const std::vector<WordEntry>& database, const std::vector<CycleState>& states);

/// Index of the eligible word with the highest per-letter error
/// expectation; ties go to the least recently presented word, then to the
/// lexicographically smallest. nullopt when every word is Done.
std::optional<std::size_t> select_next_word(const MalRuleProfile& profile, const std::vector<WordEntry>& database,
                                            const std::vector<CycleState>& states);

/// Renders a typed string carrying the requested number of errors per rule.
/// Errors are placed at distinct, non-adjacent positions; requests that do
/// not fit are dropped. Returns the typed string and the errors actually
/// rendered.
std::pair<std::string, RuleCounts> render_errors(const WordEntry& word, const RuleCounts& requested,
                                                 const SpellingTables& tables, Rng& rng);

}  // namespace kspace
