#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "normsim/norm.hpp"
#include "normsim/provider.hpp"

namespace normsim {

// One entry of the scripted backend's standard table: everything the
// backend knows about a community standard, keyed by tag patterns.
struct StandardRule {
  std::string label;
  std::string content;       // canonical norm sentence
  NormKind kind = NormKind::injunctive;
  int utility = 50;          // utility assigned when identified
  std::vector<std::string> matcher_terms;    // stems matched in norm text
  std::vector<std::string> violation_tags;   // action tags that violate it
  std::vector<std::string> compliance_tags;  // action tags that satisfy it
  std::vector<std::string> practice_tags;    // observed tags that teach it
  std::string opposite_label;  // label of a standard it contradicts
  std::string theme;           // synthesis grouping key ("" = none)
  bool indoor_default = false;  // unviolated venue actions comply
  std::string thought_template;  // "{actor}" placeholder
};

struct ThemeRule {
  std::string theme;
  std::string content;
  NormKind kind = NormKind::injunctive;
  std::vector<double> weights;  // used when the size matches; else equal
};

struct ActionSpec {
  std::string description;
  std::vector<std::string> tags;
  int duration = 1;  // minutes
};

struct PreferenceRule {
  std::string tag;
  std::string governed_by;  // label of the standard that governs it
  ActionSpec violating;
  ActionSpec compliant;
};

// Deterministic stand-in for a language model. Replies are computed from
// the structured request slots and a rule table; the seed only varies
// incidental phrasing (idle thoughts), never a normative decision, so runs
// with different seeds agree on every lifecycle event.
class ScriptedBackend : public Backend {
 public:
  ScriptedBackend(const std::string& rule_table_path, std::uint64_t seed);
  ScriptedBackend(const nlohmann::json& rule_table, std::uint64_t seed);

  std::string name() const override { return "scripted"; }

  std::string complete(OperationKind kind, const OperationInput& input,
                       const std::string& rendered_prompt) override;

  const StandardRule* match_standard(const std::string& norm_text) const;
  const StandardRule* standard_by_label(const std::string& label) const;

 private:
  void load(const nlohmann::json& table);

  nlohmann::json reply_create_norm(const OperationInput& input) const;
  nlohmann::json reply_detect_conflict(const OperationInput& input) const;
  nlohmann::json reply_turn(const OperationInput& input) const;
  nlohmann::json reply_identify(const OperationInput& input) const;
  nlohmann::json reply_thought(const OperationInput& input) const;
  nlohmann::json reply_check(OperationKind kind,
                             const OperationInput& input) const;
  nlohmann::json reply_classify(const OperationInput& input) const;
  nlohmann::json reply_abstract(const OperationInput& input) const;
  nlohmann::json reply_plans(const OperationInput& input) const;
  nlohmann::json reply_actions(const OperationInput& input) const;

  const PreferenceRule* preference_by_tag(const std::string& tag) const;
  const ActionSpec& meal_piece(const std::string& key) const;
  const ActionSpec& activity_piece(const std::string& key) const;

  std::vector<StandardRule> standards_;
  std::vector<ThemeRule> themes_;
  std::vector<PreferenceRule> preferences_;
  std::vector<std::string> idle_thoughts_;
  std::map<std::string, ActionSpec> meal_;        // order/eat/tip/no_tip/settle/linger
  std::map<std::string, ActionSpec> activities_;  // sleep/morning/evening/terrace
  std::string public_venue_;
  std::string terrace_location_;
  std::string sender_opening_;
  std::string receiver_reply_;
  std::uint64_t seed_;
};

}  // namespace normsim
