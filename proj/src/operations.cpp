#include "normsim/operations.hpp"

#include <array>

#include "normsim/errors.hpp"

namespace normsim {

namespace {

struct KindInfo {
  OperationKind kind;
  const char* name;
  std::vector<std::string> slots;
};

const std::array<KindInfo, kOperationKindCount>& kind_table() {
  static const std::array<KindInfo, kOperationKindCount> kTable = {{
      {OperationKind::create_norm,
       "CreateNorm",
       {"agent_description", "initial_count"}},
      {OperationKind::detect_conflict_and_decide_to_talk,
       "DetectConflictAndDecideToTalk",
       {"agent_description", "observations", "qualified_norms"}},
      {OperationKind::generate_conversation_turn,
       "GenerateConversationTurn",
       {"agent_description", "topic", "transcript", "role",
        "counterpart_name"}},
      {OperationKind::identify_normative_information,
       "IdentifyNormativeInformation",
       {"source_text", "source_kind"}},
      {OperationKind::generate_thought,
       "GenerateThought",
       {"agent_description", "observations"}},
      {OperationKind::check_consistency,
       "CheckConsistency",
       {"candidate", "origin_text"}},
      {OperationKind::check_duplication,
       "CheckDuplication",
       {"candidate", "qualified_norms"}},
      {OperationKind::check_type, "CheckType", {"candidate"}},
      {OperationKind::check_conflict,
       "CheckConflict",
       {"candidate", "qualified_norms"}},
      {OperationKind::classify_specific_norms,
       "ClassifySpecificNorms",
       {"qualified_norms"}},
      {OperationKind::generate_abstract_norm,
       "GenerateAbstractNorm",
       {"group", "theme"}},
      {OperationKind::generate_normative_plans,
       "GenerateNormativePlans",
       {"agent_description", "goals", "qualified_norms", "day"}},
      {OperationKind::generate_normative_actions,
       "GenerateNormativeActions",
       {"agent_description", "plan", "qualified_norms", "tracked_standards",
        "day"}},
  }};
  return kTable;
}

const KindInfo& info_for(OperationKind kind) {
  for (const KindInfo& info : kind_table()) {
    if (info.kind == kind) return info;
  }
  throw ParseError("unknown operation kind");
}

}  // namespace

const char* to_string(OperationKind kind) { return info_for(kind).name; }

OperationKind operation_kind_from_string(std::string_view token) {
  for (const KindInfo& info : kind_table()) {
    if (token == info.name) return info.kind;
  }
  throw ParseError("unknown operation kind: '" + std::string(token) + "'");
}

const std::vector<std::string>& slot_names(OperationKind kind) {
  return info_for(kind).slots;
}

OperationInput OperationInput::make(OperationKind kind,
                                    std::map<std::string, nlohmann::json> slots) {
  const std::vector<std::string>& expected = slot_names(kind);
  for (const std::string& name : expected) {
    if (slots.find(name) == slots.end()) {
      throw ParseError(std::string("operation ") + to_string(kind) +
                       " is missing slot '" + name + "'");
    }
  }
  if (slots.size() != expected.size()) {
    for (const auto& [name, value] : slots) {
      bool known = false;
      for (const std::string& expected_name : expected) {
        if (name == expected_name) {
          known = true;
          break;
        }
      }
      if (!known) {
        throw ParseError(std::string("operation ") + to_string(kind) +
                         " does not accept slot '" + name + "'");
      }
    }
  }
  return OperationInput{kind, std::move(slots)};
}

const char* to_string(ComplianceStatus status) {
  switch (status) {
    case ComplianceStatus::complies: return "complies";
    case ComplianceStatus::violates: return "violates";
    default: return "not_applicable";
  }
}

ComplianceStatus compliance_status_from_string(std::string_view token) {
  if (token == "complies") return ComplianceStatus::complies;
  if (token == "violates") return ComplianceStatus::violates;
  if (token == "not_applicable") return ComplianceStatus::not_applicable;
  throw ParseError("unknown compliance status token: '" + std::string(token) +
                   "'");
}

}  // namespace normsim
