#include "normsim/prompts.hpp"

#include <cctype>
#include <cstdio>
#include <map>
#include <sstream>

#include "normsim/errors.hpp"

namespace normsim {

const std::string kSystemMessage =
    "You play one resident of a small town in a social simulation. Stay in "
    "character, follow the requested output schema exactly, and reply with a "
    "single JSON object and nothing else.";

const std::string kRetryCorrective =
    "\n\n[format reminder v1] Your previous reply could not be parsed. "
    "Respond again with exactly one JSON object matching the schema above. "
    "Do not add prose, markdown, or code fences.";

namespace {

const std::map<OperationKind, std::string>& template_table() {
  static const std::map<OperationKind, std::string> kTemplates = {
      {OperationKind::create_norm,
       "You are the following person:\n{agent_description}\n\n"
       "Write the {initial_count} personal norms this person most wants "
       "their community to follow. Each norm is a short imperative or "
       "descriptive sentence, marked as descriptive (what people commonly "
       "do) or injunctive (what people ought to do), with a utility score "
       "from 1 to 100 for how much the person values it.\n\n"
       "Reply with one JSON object:\n"
       "{\"norms\": [{\"content\": string, \"kind\": \"descriptive\"|"
       "\"injunctive\", \"utility\": integer}]}"},
      {OperationKind::detect_conflict_and_decide_to_talk,
       "You are the following person:\n{agent_description}\n\n"
       "You currently observe:\n{observations}\n\n"
       "The norms you hold:\n{qualified_norms}\n\n"
       "Decide whether anything you observe conflicts with a norm you hold, "
       "and if so whether you would walk over and talk to the person "
       "responsible.\n\n"
       "Reply with one JSON object:\n"
       "{\"conflict\": true|false, \"talk\": true|false, "
       "\"conflict_description\": string, \"target\": string|null}\n"
       "When conflict is true, conflict_description must say who is doing "
       "what and which norm it goes against, and target must name that "
       "person."},
      {OperationKind::generate_conversation_turn,
       "You are the following person:\n{agent_description}\n\n"
       "You are in a conversation with {counterpart_name} about:\n{topic}\n\n"
       "The conversation so far:\n{transcript}\n\n"
       "Your role in this conversation: {role}.\n"
       "Produce your next utterance, or end the conversation if there is "
       "nothing left to say.\n\n"
       "Reply with one JSON object:\n"
       "{\"utterance\": string, \"end_conversation\": true|false}"},
      {OperationKind::identify_normative_information,
       "Here is a {source_kind} you just took part in or had:\n"
       "{source_text}\n\n"
       "Does it reveal a social norm of this community? If so, state the "
       "norm as one short sentence, classify it as descriptive (what people "
       "commonly do) or injunctive (what people ought to do), and rate its "
       "utility from 1 to 100.\n\n"
       "Reply with one JSON object:\n"
       "{\"found\": true|false, \"content\": string, \"kind\": "
       "\"descriptive\"|\"injunctive\", \"utility\": integer}\n"
       "When found is false, omit the other fields or leave them empty."},
      {OperationKind::generate_thought,
       "You are the following person:\n{agent_description}\n\n"
       "You currently observe:\n{observations}\n\n"
       "Write the single thought going through your head right now, one or "
       "two sentences.\n\n"
       "Reply with one JSON object:\n{\"thought\": string}"},
      {OperationKind::check_consistency,
       "A candidate norm was extracted from some source material.\n\n"
       "Candidate norm:\n{candidate}\n\n"
       "Source material:\n{origin_text}\n\n"
       "Is the candidate norm actually supported by the source material, "
       "rather than a misreading of it?\n\n"
       "Reply with one JSON object:\n"
       "{\"outcome\": true|false, \"rationale\": string}"},
      {OperationKind::check_duplication,
       "Candidate norm:\n{candidate}\n\n"
       "Norms already held:\n{qualified_norms}\n\n"
       "Is the candidate norm genuinely new, i.e. not a duplicate of any "
       "norm already held?\n\n"
       "Reply with one JSON object:\n"
       "{\"outcome\": true|false, \"rationale\": string}"},
      {OperationKind::check_type,
       "Candidate norm:\n{candidate}\n\n"
       "A descriptive norm states what people in a community commonly do; "
       "an injunctive norm states what people ought to do. Is the candidate "
       "norm's declared kind correct for its content?\n\n"
       "Reply with one JSON object:\n"
       "{\"outcome\": true|false, \"rationale\": string}"},
      {OperationKind::check_conflict,
       "Candidate norm:\n{candidate}\n\n"
       "Norms already held:\n{qualified_norms}\n\n"
       "Can the candidate norm be held together with the norms above, i.e. "
       "does it avoid contradicting any of them?\n\n"
       "Reply with one JSON object:\n"
       "{\"outcome\": true|false, \"rationale\": string}"},
      {OperationKind::classify_specific_norms,
       "Here are the norms a person currently holds:\n{qualified_norms}\n\n"
       "Group the specific norms that share a common theme. Refer to norms "
       "by their position in the list above (1-based). Leave out norms that "
       "share a theme with no other norm.\n\n"
       "Reply with one JSON object:\n"
       "{\"groups\": [{\"members\": [integer], \"theme\": string}]}"},
      {OperationKind::generate_abstract_norm,
       "These norms share the theme \"{theme}\":\n{group}\n\n"
       "Write one more abstract norm that covers all of them, classify it "
       "as descriptive or injunctive, and assign each member a weight for "
       "how strongly it shapes the abstract norm. Weights must be positive "
       "and sum to 1.\n\n"
       "Reply with one JSON object:\n"
       "{\"content\": string, \"kind\": \"descriptive\"|\"injunctive\", "
       "\"weights\": [number]}"},
      {OperationKind::generate_normative_plans,
       "You are the following person:\n{agent_description}\n\n"
       "Your goals:\n{goals}\n\n"
       "The norms you hold:\n{qualified_norms}\n\n"
       "It is the start of day {day}. Write your plan for the day as "
       "consecutive time windows. Keep the plan consistent with the norms "
       "you hold.\n\n"
       "Reply with one JSON object:\n"
       "{\"plans\": [{\"start\": \"HH:MM\", \"end\": \"HH:MM\", "
       "\"description\": string}]}\n"
       "Times are 24-hour; windows must be in order and must not overlap."},
      {OperationKind::generate_normative_actions,
       "You are the following person:\n{agent_description}\n\n"
       "The norms you hold:\n{qualified_norms}\n\n"
       "It is day {day}. Your current plan window:\n{plan}\n\n"
       "Break this plan into the concrete actions you will take, in order. "
       "Tag each action with short machine-readable tags, name a location "
       "only if the action moves you somewhere else, and give a duration in "
       "minutes. Then annotate each action against every standard listed "
       "below as complies, violates or not_applicable:\n"
       "{tracked_standards}\n\n"
       "Reply with one JSON object:\n"
       "{\"actions\": [{\"description\": string, \"tags\": [string], "
       "\"location\": string|null, \"duration_minutes\": integer, "
       "\"annotations\": {standard label: \"complies\"|\"violates\"|"
       "\"not_applicable\"}}]}"},
  };
  return kTemplates;
}

bool looks_like_norm_list(const nlohmann::json& value) {
  return value.is_array() && !value.empty() && value.front().is_object() &&
         value.front().contains("content");
}

bool looks_like_observation_list(const nlohmann::json& value) {
  return value.is_array() && !value.empty() && value.front().is_object() &&
         value.front().contains("actor");
}

bool looks_like_transcript(const nlohmann::json& value) {
  return value.is_array() && !value.empty() && value.front().is_object() &&
         value.front().contains("speaker");
}

}  // namespace

namespace {

std::string format_minutes(int minutes) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%02d:%02d", minutes / 60, minutes % 60);
  return buf;
}

}  // namespace

std::string render_slot_value(const nlohmann::json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_number_integer()) return std::to_string(value.get<long long>());
  if (value.is_array() && value.empty()) return "(none)";
  std::ostringstream out;
  if (value.is_object() && value.contains("content")) {
    out << value.value("content", "") << " [" << value.value("kind", "")
        << ", utility " << value.value("utility", 0) << "]";
    return out.str();
  }
  if (value.is_object() && value.contains("start_minute")) {
    out << format_minutes(value.value("start_minute", 0)) << "-"
        << format_minutes(value.value("end_minute", 0)) << ": "
        << value.value("description", "");
    return out.str();
  }
  if (value.is_array() && value.front().is_object() &&
      value.front().contains("label")) {
    bool first = true;
    for (const auto& item : value) {
      if (!first) out << "\n";
      first = false;
      out << "- " << item.value("label", "") << " ["
          << item.value("kind", "") << "]";
    }
    return out.str();
  }
  if (looks_like_norm_list(value)) {
    int position = 1;
    for (const auto& item : value) {
      if (position > 1) out << "\n";
      out << position << ". " << item.value("content", "");
      out << " [" << item.value("kind", "") << ", utility "
          << item.value("utility", 0) << "]";
      ++position;
    }
    return out.str();
  }
  if (looks_like_observation_list(value)) {
    bool first = true;
    for (const auto& item : value) {
      if (!first) out << "\n";
      first = false;
      out << "- " << item.value("actor", "") << ": "
          << item.value("description", "");
    }
    return out.str();
  }
  if (looks_like_transcript(value)) {
    bool first = true;
    for (const auto& item : value) {
      if (!first) out << "\n";
      first = false;
      out << item.value("speaker", "") << ": " << item.value("text", "");
    }
    return out.str();
  }
  return value.dump();
}

const std::string& prompt_template(OperationKind kind) {
  const auto& table = template_table();
  auto it = table.find(kind);
  if (it == table.end()) {
    throw ParseError("no prompt template for operation kind");
  }
  return it->second;
}

std::string render_prompt(OperationKind kind, const OperationInput& input) {
  const std::string& tmpl = prompt_template(kind);
  std::string out;
  out.reserve(tmpl.size() + 256);
  for (std::size_t i = 0; i < tmpl.size();) {
    if (tmpl[i] != '{') {
      out.push_back(tmpl[i]);
      ++i;
      continue;
    }
    std::size_t close = tmpl.find('}', i + 1);
    if (close == std::string::npos) {
      out.append(tmpl, i, std::string::npos);
      break;
    }
    std::string name = tmpl.substr(i + 1, close - i - 1);
    // Placeholders are lowercase slot identifiers; everything else (JSON
    // braces in the schema instructions) is literal text.
    bool is_placeholder = !name.empty();
    for (char c : name) {
      if (!(std::islower(static_cast<unsigned char>(c)) || c == '_')) {
        is_placeholder = false;
        break;
      }
    }
    if (!is_placeholder) {
      out.push_back('{');
      ++i;
      continue;
    }
    auto slot = input.slots.find(name);
    if (slot == input.slots.end()) {
      throw ParseError(std::string("render_prompt: operation ") +
                       to_string(kind) + " has no slot '" + name + "'");
    }
    out += render_slot_value(slot->second);
    i = close + 1;
  }
  return out;
}

}  // namespace normsim
