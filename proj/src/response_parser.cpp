#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <json.hpp>

#include "normsim/errors.hpp"
#include "normsim/operations.hpp"

namespace normsim {

namespace {

using json = nlohmann::json;

// Weight lists are accepted when they sum to anything positive and are
// re-normalized; after re-normalization the sum is within this tolerance
// of 1.
constexpr double kWeightTolerance = 1e-9;

[[noreturn]] void fail(OperationKind kind, const std::string& message) {
  throw ParseError(std::string(to_string(kind)) + ": " + message);
}

std::string strip_fences(const std::string& raw) {
  std::size_t begin = raw.find_first_not_of(" \t\r\n");
  std::size_t end = raw.find_last_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  std::string text = raw.substr(begin, end - begin + 1);
  if (text.rfind("```", 0) == 0) {
    std::size_t first_newline = text.find('\n');
    std::size_t closing = text.rfind("```");
    if (first_newline != std::string::npos && closing > first_newline) {
      text = text.substr(first_newline + 1, closing - first_newline - 1);
      std::size_t b = text.find_first_not_of(" \t\r\n");
      std::size_t e = text.find_last_not_of(" \t\r\n");
      text = b == std::string::npos ? "" : text.substr(b, e - b + 1);
    }
  }
  return text;
}

json parse_object(OperationKind kind, const std::string& raw) {
  const std::string text = strip_fences(raw);
  json parsed = json::parse(text, nullptr, false);
  if (parsed.is_discarded()) fail(kind, "reply is not valid JSON");
  if (!parsed.is_object()) fail(kind, "reply must be a single JSON object");
  return parsed;
}

bool require_bool(OperationKind kind, const json& obj, const char* field) {
  if (!obj.contains(field) || !obj[field].is_boolean()) {
    fail(kind, std::string("field '") + field +
                   "' must be a literal true or false");
  }
  return obj[field].get<bool>();
}

std::string require_string(OperationKind kind, const json& obj,
                           const char* field) {
  if (!obj.contains(field) || !obj[field].is_string()) {
    fail(kind, std::string("field '") + field + "' must be a string");
  }
  return obj[field].get<std::string>();
}

long long require_int(OperationKind kind, const json& obj, const char* field) {
  if (!obj.contains(field) || !obj[field].is_number_integer()) {
    fail(kind, std::string("field '") + field + "' must be an integer");
  }
  return obj[field].get<long long>();
}

const json& require_array(OperationKind kind, const json& obj,
                          const char* field) {
  if (!obj.contains(field) || !obj[field].is_array()) {
    fail(kind, std::string("field '") + field + "' must be an array");
  }
  return obj[field];
}

NormKind require_kind(OperationKind kind, const json& obj) {
  const std::string token = require_string(kind, obj, "kind");
  if (token == "descriptive") return NormKind::descriptive;
  if (token == "injunctive") return NormKind::injunctive;
  fail(kind, "unknown kind token '" + token +
                 "' (expected descriptive or injunctive)");
}

int clamp_utility(OperationKind kind, long long value,
                  std::vector<std::string>* warnings) {
  if (value >= kUtilityMin && value <= kUtilityMax) {
    return static_cast<int>(value);
  }
  const int clamped =
      static_cast<int>(std::clamp<long long>(value, kUtilityMin, kUtilityMax));
  warnings->push_back(std::string(to_string(kind)) + ": utility " +
                      std::to_string(value) + " clamped to " +
                      std::to_string(clamped));
  return clamped;
}

NormDraft parse_norm_draft(OperationKind kind, const json& obj,
                           std::vector<std::string>* warnings) {
  NormDraft draft;
  draft.content = require_string(kind, obj, "content");
  if (draft.content.empty()) fail(kind, "norm content must be non-empty");
  draft.kind = require_kind(kind, obj);
  draft.utility = clamp_utility(kind, require_int(kind, obj, "utility"),
                                warnings);
  return draft;
}

int parse_clock(OperationKind kind, const std::string& text) {
  int hh = 0, mm = 0;
  char extra = 0;
  if (std::sscanf(text.c_str(), "%d:%d%c", &hh, &mm, &extra) != 2 || hh < 0 ||
      hh > 24 || mm < 0 || mm > 59 || (hh == 24 && mm != 0)) {
    fail(kind, "bad time '" + text + "' (expected HH:MM, 24-hour)");
  }
  return hh * 60 + mm;
}

ParsedResponse parse_create_norm(const json& obj) {
  constexpr OperationKind kind = OperationKind::create_norm;
  ParsedResponse result{CreateNormOutput{}, {}};
  auto& out = std::get<CreateNormOutput>(result.output);
  for (const json& item : require_array(kind, obj, "norms")) {
    if (!item.is_object()) fail(kind, "norm entries must be objects");
    out.norms.push_back(parse_norm_draft(kind, item, &result.warnings));
  }
  return result;
}

ParsedResponse parse_conflict_decision(const json& obj) {
  constexpr OperationKind kind =
      OperationKind::detect_conflict_and_decide_to_talk;
  ConflictDecision out;
  out.conflict = require_bool(kind, obj, "conflict");
  out.talk = require_bool(kind, obj, "talk");
  if (obj.contains("conflict_description") &&
      obj["conflict_description"].is_string()) {
    out.description = obj["conflict_description"].get<std::string>();
  }
  if (obj.contains("target") && obj["target"].is_string()) {
    out.target = obj["target"].get<std::string>();
  }
  if (out.conflict) {
    if (out.description.empty()) {
      fail(kind, "conflict_description required when conflict is true");
    }
    if (!out.target.has_value() || out.target->empty()) {
      fail(kind, "target required when conflict is true");
    }
  }
  if (out.talk && !out.conflict) {
    fail(kind, "talk cannot be true without a conflict");
  }
  return ParsedResponse{out, {}};
}

ParsedResponse parse_turn(const json& obj) {
  constexpr OperationKind kind = OperationKind::generate_conversation_turn;
  ConversationTurnOutput out;
  out.utterance = require_string(kind, obj, "utterance");
  out.end_conversation = require_bool(kind, obj, "end_conversation");
  if (out.utterance.empty() && !out.end_conversation) {
    fail(kind, "empty utterance allowed only when ending the conversation");
  }
  return ParsedResponse{out, {}};
}

ParsedResponse parse_identify(const json& obj) {
  constexpr OperationKind kind = OperationKind::identify_normative_information;
  ParsedResponse result{IdentifyOutput{}, {}};
  auto& out = std::get<IdentifyOutput>(result.output);
  if (!require_bool(kind, obj, "found")) {
    return result;
  }
  out.info = parse_norm_draft(kind, obj, &result.warnings);
  return result;
}

ParsedResponse parse_thought(const json& obj) {
  constexpr OperationKind kind = OperationKind::generate_thought;
  ThoughtOutput out;
  out.thought = require_string(kind, obj, "thought");
  if (out.thought.empty()) fail(kind, "thought must be non-empty");
  return ParsedResponse{out, {}};
}

ParsedResponse parse_check(OperationKind kind, const json& obj) {
  CheckOutput out;
  out.outcome = require_bool(kind, obj, "outcome");
  if (obj.contains("rationale") && obj["rationale"].is_string()) {
    out.rationale = obj["rationale"].get<std::string>();
  }
  return ParsedResponse{out, {}};
}

ParsedResponse parse_classify(const json& obj) {
  constexpr OperationKind kind = OperationKind::classify_specific_norms;
  ClassifyOutput out;
  for (const json& item : require_array(kind, obj, "groups")) {
    if (!item.is_object()) fail(kind, "group entries must be objects");
    NormGroupRef group;
    group.theme = require_string(kind, item, "theme");
    if (group.theme.empty()) fail(kind, "group theme must be non-empty");
    for (const json& member : require_array(kind, item, "members")) {
      if (!member.is_number_integer() || member.get<long long>() < 1) {
        fail(kind, "group members must be positive 1-based positions");
      }
      group.member_positions.push_back(member.get<std::size_t>());
    }
    if (group.member_positions.empty()) {
      fail(kind, "groups must name at least one member");
    }
    auto sorted = group.member_positions;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      fail(kind, "group members must be distinct");
    }
    out.groups.push_back(std::move(group));
  }
  return ParsedResponse{out, {}};
}

ParsedResponse parse_abstract(const json& obj) {
  constexpr OperationKind kind = OperationKind::generate_abstract_norm;
  AbstractNormOutput out;
  out.content = require_string(kind, obj, "content");
  if (out.content.empty()) fail(kind, "content must be non-empty");
  out.kind = require_kind(kind, obj);
  double sum = 0.0;
  for (const json& w : require_array(kind, obj, "weights")) {
    if (!w.is_number()) fail(kind, "weights must be numbers");
    const double value = w.get<double>();
    if (value <= 0.0) fail(kind, "weights must be positive");
    out.weights.push_back(value);
    sum += value;
  }
  if (out.weights.empty()) fail(kind, "weights must be non-empty");
  if (sum <= 0.0) fail(kind, "weights must sum to a positive value");
  for (double& w : out.weights) w /= sum;
  double check = 0.0;
  for (double w : out.weights) check += w;
  if (std::abs(check - 1.0) > kWeightTolerance) {
    fail(kind, "weights could not be normalized");
  }
  return ParsedResponse{out, {}};
}

ParsedResponse parse_plans(const json& obj) {
  constexpr OperationKind kind = OperationKind::generate_normative_plans;
  PlansOutput out;
  int previous_end = -1;
  for (const json& item : require_array(kind, obj, "plans")) {
    if (!item.is_object()) fail(kind, "plan entries must be objects");
    PlanDraft plan;
    plan.start_minute = parse_clock(kind, require_string(kind, item, "start"));
    plan.end_minute = parse_clock(kind, require_string(kind, item, "end"));
    plan.description = require_string(kind, item, "description");
    if (plan.description.empty()) fail(kind, "plan description empty");
    if (plan.start_minute >= plan.end_minute) {
      fail(kind, "plan window '" + plan.description +
                     "' must start before it ends");
    }
    if (plan.start_minute < previous_end) {
      fail(kind, "plan windows must be time-ordered and non-overlapping");
    }
    previous_end = plan.end_minute;
    out.plans.push_back(std::move(plan));
  }
  if (out.plans.empty()) fail(kind, "plans must be non-empty");
  return ParsedResponse{out, {}};
}

ParsedResponse parse_actions(const json& obj) {
  constexpr OperationKind kind = OperationKind::generate_normative_actions;
  ActionsOutput out;
  for (const json& item : require_array(kind, obj, "actions")) {
    if (!item.is_object()) fail(kind, "action entries must be objects");
    ActionDraft action;
    action.description = require_string(kind, item, "description");
    if (action.description.empty()) fail(kind, "action description empty");
    if (item.contains("tags")) {
      for (const json& tag : require_array(kind, item, "tags")) {
        if (!tag.is_string()) fail(kind, "tags must be strings");
        action.tags.push_back(tag.get<std::string>());
      }
    }
    if (item.contains("location") && !item["location"].is_null()) {
      if (!item["location"].is_string()) {
        fail(kind, "location must be a string or null");
      }
      action.location = item["location"].get<std::string>();
    }
    if (item.contains("duration_minutes") &&
        !item["duration_minutes"].is_null()) {
      if (!item["duration_minutes"].is_number_integer() ||
          item["duration_minutes"].get<long long>() < 1) {
        fail(kind, "duration_minutes must be a positive integer");
      }
      action.duration_minutes =
          static_cast<int>(item["duration_minutes"].get<long long>());
    }
    if (item.contains("annotations")) {
      if (!item["annotations"].is_object()) {
        fail(kind, "annotations must be an object keyed by standard label");
      }
      for (const auto& [label, status] : item["annotations"].items()) {
        if (!status.is_string()) {
          fail(kind, "annotation values must be status strings");
        }
        action.annotations[label] =
            compliance_status_from_string(status.get<std::string>());
      }
    }
    out.actions.push_back(std::move(action));
  }
  if (out.actions.empty()) fail(kind, "actions must be non-empty");
  return ParsedResponse{out, {}};
}

}  // namespace

ParsedResponse parse_response(OperationKind kind, const std::string& raw) {
  const json obj = parse_object(kind, raw);
  switch (kind) {
    case OperationKind::create_norm:
      return parse_create_norm(obj);
    case OperationKind::detect_conflict_and_decide_to_talk:
      return parse_conflict_decision(obj);
    case OperationKind::generate_conversation_turn:
      return parse_turn(obj);
    case OperationKind::identify_normative_information:
      return parse_identify(obj);
    case OperationKind::generate_thought:
      return parse_thought(obj);
    case OperationKind::check_consistency:
    case OperationKind::check_duplication:
    case OperationKind::check_type:
    case OperationKind::check_conflict:
      return parse_check(kind, obj);
    case OperationKind::classify_specific_norms:
      return parse_classify(obj);
    case OperationKind::generate_abstract_norm:
      return parse_abstract(obj);
    case OperationKind::generate_normative_plans:
      return parse_plans(obj);
    case OperationKind::generate_normative_actions:
      return parse_actions(obj);
  }
  throw ParseError("unhandled operation kind");
}

}  // namespace normsim
