#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <json.hpp>

#include "normsim/norm.hpp"

namespace normsim {

// Every request an agent can make of the language-model layer. The engine
// never talks to a backend except through one of these.
enum class OperationKind {
  create_norm,
  detect_conflict_and_decide_to_talk,
  generate_conversation_turn,
  identify_normative_information,
  generate_thought,
  check_consistency,
  check_duplication,
  check_type,
  check_conflict,
  classify_specific_norms,
  generate_abstract_norm,
  generate_normative_plans,
  generate_normative_actions,
};

constexpr std::size_t kOperationKindCount = 13;

const char* to_string(OperationKind kind);
OperationKind operation_kind_from_string(std::string_view token);

// Slot names the template of each kind expects, in template order.
const std::vector<std::string>& slot_names(OperationKind kind);

// A filled request: one value per template slot. String slots are rendered
// verbatim; structured slots (JSON arrays/objects) are rendered as numbered
// or bulleted lists by render_prompt and are also what the scripted backend
// reads directly.
struct OperationInput {
  OperationKind kind;
  std::map<std::string, nlohmann::json> slots;

  // Validates that `slots` exactly covers the template placeholders of
  // `kind`; missing or extra slots are construction errors.
  static OperationInput make(OperationKind kind,
                             std::map<std::string, nlohmann::json> slots);
};

enum class ComplianceStatus { complies, violates, not_applicable };

const char* to_string(ComplianceStatus status);
ComplianceStatus compliance_status_from_string(std::string_view token);

// ---- Structured outputs, one alternative per operation kind ----

struct NormDraft {
  std::string content;
  NormKind kind = NormKind::descriptive;
  int utility = kUtilityMin;
};

struct CreateNormOutput {
  std::vector<NormDraft> norms;
};

struct ConflictDecision {
  bool conflict = false;
  bool talk = false;
  std::string description;            // set when conflict is true
  std::optional<std::string> target;  // violator's name, set with conflict
};

struct ConversationTurnOutput {
  std::string utterance;
  bool end_conversation = false;
};

struct IdentifyOutput {
  std::optional<NormDraft> info;  // empty when nothing normative was found
};

struct ThoughtOutput {
  std::string thought;
};

struct CheckOutput {
  bool outcome = false;
  std::string rationale;
};

struct NormGroupRef {
  std::vector<std::size_t> member_positions;  // 1-based into the rendered list
  std::string theme;
};

struct ClassifyOutput {
  std::vector<NormGroupRef> groups;
};

struct AbstractNormOutput {
  std::string content;
  NormKind kind = NormKind::descriptive;
  std::vector<double> weights;  // re-normalized to sum to 1
};

struct PlanDraft {
  int start_minute = 0;  // minutes from midnight, [0, 1440]
  int end_minute = 0;
  std::string description;
};

struct PlansOutput {
  std::vector<PlanDraft> plans;
};

struct ActionDraft {
  std::string description;
  std::vector<std::string> tags;
  std::optional<std::string> location;  // move here for the action's duration
  std::optional<int> duration_minutes;
  std::map<std::string, ComplianceStatus> annotations;  // per standard label
};

struct ActionsOutput {
  std::vector<ActionDraft> actions;
};

using OperationOutput =
    std::variant<CreateNormOutput, ConflictDecision, ConversationTurnOutput,
                 IdentifyOutput, ThoughtOutput, CheckOutput, ClassifyOutput,
                 AbstractNormOutput, PlansOutput, ActionsOutput>;

struct ParsedResponse {
  OperationOutput output;
  std::vector<std::string> warnings;  // e.g. utility clamping notices
};

// Parses the raw backend text for `kind` into its structured output.
// Throws ParseError on any deviation from the kind's schema: the text must
// be a single JSON object, booleans must be literal true/false, enum tokens
// must match exactly. Utilities outside [1, 100] are clamped with a
// warning; synthesis weights are re-normalized to sum to 1.
ParsedResponse parse_response(OperationKind kind, const std::string& raw);

}  // namespace normsim
