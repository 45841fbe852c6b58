#include "normsim/scripted_backend.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "normsim/errors.hpp"
#include "normsim/operations.hpp"

namespace normsim {

namespace {

using nlohmann::json;

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t hash = 1469598103934665603ull;
  for (unsigned char c : text) {
    hash ^= static_cast<std::uint64_t>(c);
    hash *= 1099511628211ull;
  }
  return hash;
}

bool contains_term(const std::string& haystack_normalized,
                   const std::string& term) {
  return haystack_normalized.find(normalize_content(term)) !=
         std::string::npos;
}

bool contains_all_terms(const std::string& text,
                        const std::vector<std::string>& terms) {
  const std::string normalized = normalize_content(text);
  for (const auto& term : terms) {
    if (!contains_term(normalized, term)) return false;
  }
  return true;
}

bool tags_intersect(const std::vector<std::string>& a,
                    const std::vector<std::string>& b) {
  for (const auto& tag : a) {
    if (std::find(b.begin(), b.end(), tag) != b.end()) return true;
  }
  return false;
}

std::vector<std::string> tag_list(const json& value) {
  std::vector<std::string> tags;
  if (!value.is_array()) return tags;
  for (const auto& item : value) {
    if (item.is_string()) tags.push_back(item.get<std::string>());
  }
  return tags;
}

std::string replace_all(std::string text, const std::string& placeholder,
                        const std::string& value) {
  std::size_t pos = 0;
  while ((pos = text.find(placeholder, pos)) != std::string::npos) {
    text.replace(pos, placeholder.size(), value);
    pos += value.size();
  }
  return text;
}

std::string format_clock(int minute_of_day) {
  char buffer[16];
  std::snprintf(buffer, sizeof(buffer), "%02d:%02d", minute_of_day / 60,
                minute_of_day % 60);
  return buffer;
}

// Pulls a string slot, tolerating absence with a default.
std::string string_field(const json& object, const std::string& key,
                         const std::string& fallback = "") {
  if (object.is_object() && object.contains(key) && object[key].is_string()) {
    return object[key].get<std::string>();
  }
  return fallback;
}

int int_field(const json& object, const std::string& key, int fallback) {
  if (object.is_object() && object.contains(key) &&
      object[key].is_number_integer()) {
    return object[key].get<int>();
  }
  return fallback;
}

bool bool_field(const json& object, const std::string& key, bool fallback) {
  if (object.is_object() && object.contains(key) &&
      object[key].is_boolean()) {
    return object[key].get<bool>();
  }
  return fallback;
}

ActionSpec parse_action_spec(const json& value, const std::string& where) {
  if (!value.is_object() || !value.contains("description")) {
    throw ProviderFailure("scripted rule table: " + where +
                          " must be an object with a description");
  }
  ActionSpec spec;
  spec.description = value["description"].get<std::string>();
  spec.tags = tag_list(value.value("tags", json::array()));
  spec.duration = value.value("duration", 1);
  if (spec.duration < 1) {
    throw ProviderFailure("scripted rule table: " + where +
                          " duration must be at least one minute");
  }
  return spec;
}

struct TimedAction {
  int offset = 0;  // minutes since plan start
  ActionSpec spec;
  std::optional<std::string> location;
};

}  // namespace

ScriptedBackend::ScriptedBackend(const std::string& rule_table_path,
                                 std::uint64_t seed)
    : seed_(seed) {
  std::ifstream in(rule_table_path);
  if (!in.good()) {
    throw ProviderFailure("scripted rule table not readable: " +
                          rule_table_path);
  }
  json table;
  try {
    table = json::parse(in);
  } catch (const json::exception& e) {
    throw ProviderFailure("scripted rule table is not valid JSON: " +
                          std::string(e.what()));
  }
  load(table);
}

ScriptedBackend::ScriptedBackend(const nlohmann::json& rule_table,
                                 std::uint64_t seed)
    : seed_(seed) {
  load(rule_table);
}

void ScriptedBackend::load(const json& table) {
  try {
    if (!table.is_object() || !table.contains("standards") ||
        !table["standards"].is_array() || table["standards"].empty()) {
      throw ProviderFailure(
          "scripted rule table must define a non-empty standards array");
    }
    std::set<std::string> labels;
    for (const auto& entry : table["standards"]) {
      StandardRule rule;
      rule.label = entry.at("label").get<std::string>();
      rule.content = entry.at("content").get<std::string>();
      rule.kind = norm_kind_from_string(entry.at("kind").get<std::string>());
      rule.utility = entry.value("utility", 50);
      rule.matcher_terms = tag_list(entry.at("matcher_terms"));
      rule.violation_tags = tag_list(entry.value("violation_tags", json::array()));
      rule.compliance_tags =
          tag_list(entry.value("compliance_tags", json::array()));
      rule.practice_tags = tag_list(entry.value("practice_tags", json::array()));
      rule.opposite_label = entry.value("opposite_label", "");
      rule.theme = entry.value("theme", "");
      rule.indoor_default =
          entry.value("applicability", "none") == std::string("indoor_public");
      rule.thought_template = entry.value("thought_template", "");
      if (rule.matcher_terms.empty()) {
        throw ProviderFailure("scripted rule table: standard '" + rule.label +
                              "' needs at least one matcher term");
      }
      if (rule.utility < kUtilityMin || rule.utility > kUtilityMax) {
        throw ProviderFailure("scripted rule table: standard '" + rule.label +
                              "' utility out of range");
      }
      if (!rule.practice_tags.empty() && rule.thought_template.empty()) {
        throw ProviderFailure("scripted rule table: standard '" + rule.label +
                              "' has practice tags but no thought template");
      }
      if (!labels.insert(rule.label).second) {
        throw ProviderFailure("scripted rule table: duplicate label '" +
                              rule.label + "'");
      }
      standards_.push_back(std::move(rule));
    }
    for (const auto& rule : standards_) {
      if (!rule.opposite_label.empty() &&
          standard_by_label(rule.opposite_label) == nullptr) {
        throw ProviderFailure("scripted rule table: standard '" + rule.label +
                              "' references unknown opposite '" +
                              rule.opposite_label + "'");
      }
    }
    for (const auto& entry : table.value("themes", json::array())) {
      ThemeRule rule;
      rule.theme = entry.at("theme").get<std::string>();
      rule.content = entry.at("content").get<std::string>();
      rule.kind = norm_kind_from_string(entry.at("kind").get<std::string>());
      if (entry.contains("weights")) {
        for (const auto& w : entry["weights"]) {
          rule.weights.push_back(w.get<double>());
        }
      }
      themes_.push_back(std::move(rule));
    }
    for (const auto& entry : table.value("preferences", json::array())) {
      PreferenceRule rule;
      rule.tag = entry.at("tag").get<std::string>();
      rule.governed_by = entry.at("governed_by").get<std::string>();
      rule.violating = parse_action_spec(entry.at("violating"),
                                         "preference '" + rule.tag + "'");
      rule.compliant = parse_action_spec(entry.at("compliant"),
                                         "preference '" + rule.tag + "'");
      if (standard_by_label(rule.governed_by) == nullptr) {
        throw ProviderFailure("scripted rule table: preference '" + rule.tag +
                              "' references unknown standard '" +
                              rule.governed_by + "'");
      }
      preferences_.push_back(std::move(rule));
    }
    for (const auto& entry : table.value("idle_thoughts", json::array())) {
      idle_thoughts_.push_back(entry.get<std::string>());
    }
    if (idle_thoughts_.empty()) {
      throw ProviderFailure(
          "scripted rule table must list at least one idle thought");
    }
    const json meal = table.value("meal", json::object());
    for (const char* key : {"order", "eat", "eat_before_tip", "tip", "no_tip",
                            "settle", "linger", "linger_after_skip"}) {
      if (!meal.contains(key)) {
        throw ProviderFailure(std::string("scripted rule table: meal.") + key +
                              " is missing");
      }
      meal_[key] = parse_action_spec(meal[key], std::string("meal.") + key);
    }
    const json activities = table.value("activities", json::object());
    for (const char* key : {"sleep", "morning", "evening", "terrace"}) {
      if (!activities.contains(key)) {
        throw ProviderFailure(std::string("scripted rule table: activities.") +
                              key + " is missing");
      }
      activities_[key] =
          parse_action_spec(activities[key], std::string("activities.") + key);
    }
    public_venue_ = table.value("public_venue", "");
    terrace_location_ = table.value("terrace_location", "");
    sender_opening_ = table.value(
        "sender_opening",
        "Excuse me, I have to bring something up. {topic} Could we keep to "
        "that here?");
    receiver_reply_ = table.value(
        "receiver_reply",
        "Oh, you are right. I am sorry, I will stop and keep to it from now "
        "on.");
    if (public_venue_.empty()) {
      throw ProviderFailure("scripted rule table must name a public_venue");
    }
    if (terrace_location_.empty()) {
      terrace_location_ = public_venue_ + "_terrace";
    }
  } catch (const json::exception& e) {
    throw ProviderFailure("scripted rule table is malformed: " +
                          std::string(e.what()));
  }
}

const StandardRule* ScriptedBackend::match_standard(
    const std::string& norm_text) const {
  for (const auto& rule : standards_) {
    if (contains_all_terms(norm_text, rule.matcher_terms)) return &rule;
  }
  return nullptr;
}

const StandardRule* ScriptedBackend::standard_by_label(
    const std::string& label) const {
  for (const auto& rule : standards_) {
    if (rule.label == label) return &rule;
  }
  return nullptr;
}

const PreferenceRule* ScriptedBackend::preference_by_tag(
    const std::string& tag) const {
  for (const auto& rule : preferences_) {
    if (rule.tag == tag) return &rule;
  }
  return nullptr;
}

const ActionSpec& ScriptedBackend::meal_piece(const std::string& key) const {
  return meal_.at(key);
}

const ActionSpec& ScriptedBackend::activity_piece(
    const std::string& key) const {
  return activities_.at(key);
}

std::string ScriptedBackend::complete(OperationKind kind,
                                      const OperationInput& input,
                                      const std::string& rendered_prompt) {
  (void)rendered_prompt;  // the reply is computed from structured slots
  json reply;
  switch (kind) {
    case OperationKind::create_norm:
      reply = reply_create_norm(input);
      break;
    case OperationKind::detect_conflict_and_decide_to_talk:
      reply = reply_detect_conflict(input);
      break;
    case OperationKind::generate_conversation_turn:
      reply = reply_turn(input);
      break;
    case OperationKind::identify_normative_information:
      reply = reply_identify(input);
      break;
    case OperationKind::generate_thought:
      reply = reply_thought(input);
      break;
    case OperationKind::check_consistency:
    case OperationKind::check_duplication:
    case OperationKind::check_type:
    case OperationKind::check_conflict:
      reply = reply_check(kind, input);
      break;
    case OperationKind::classify_specific_norms:
      reply = reply_classify(input);
      break;
    case OperationKind::generate_abstract_norm:
      reply = reply_abstract(input);
      break;
    case OperationKind::generate_normative_plans:
      reply = reply_plans(input);
      break;
    case OperationKind::generate_normative_actions:
      reply = reply_actions(input);
      break;
    default:
      throw ProviderFailure("scripted backend: unsupported operation kind");
  }
  return reply.dump();
}

json ScriptedBackend::reply_create_norm(const OperationInput& input) const {
  const json& description = input.slots.at("agent_description");
  json norms = json::array();
  if (description.is_object() && description.contains("initial_norms")) {
    for (const auto& entry : description["initial_norms"]) {
      norms.push_back({{"content", entry.at("content")},
                       {"kind", entry.at("kind")},
                       {"utility", entry.at("utility")}});
    }
  }
  return json{{"norms", norms}};
}

json ScriptedBackend::reply_detect_conflict(
    const OperationInput& input) const {
  const json& description = input.slots.at("agent_description");
  const json& observations = input.slots.at("observations");
  const json& qualified = input.slots.at("qualified_norms");

  std::vector<const StandardRule*> held;
  for (const auto& rule : standards_) {
    bool matched = false;
    for (const auto& norm : qualified) {
      if (contains_all_terms(string_field(norm, "content"),
                             rule.matcher_terms)) {
        matched = true;
        break;
      }
    }
    if (matched) held.push_back(&rule);
  }

  for (const auto& obs : observations) {
    const auto tags = tag_list(obs.value("tags", json::array()));
    for (const StandardRule* rule : held) {
      if (!tags_intersect(tags, rule->violation_tags)) continue;
      const std::string actor = string_field(obs, "actor", "someone");
      const std::string what = string_field(obs, "description", "something");
      const bool talk = bool_field(description, "entrepreneur", false) ||
                        bool_field(description, "extraverted", false);
      return json{{"conflict", true},
                  {"talk", talk},
                  {"conflict_description",
                   actor + " is doing this: " + what +
                       ". That goes against '" + rule->content + "'."},
                  {"target", actor}};
    }
  }
  return json{{"conflict", false},
              {"talk", false},
              {"conflict_description", ""},
              {"target", nullptr}};
}

json ScriptedBackend::reply_turn(const OperationInput& input) const {
  const std::string role = input.slots.at("role").get<std::string>();
  const std::string topic = input.slots.at("topic").get<std::string>();
  const json& transcript = input.slots.at("transcript");
  if (role == "receiver") {
    return json{{"utterance", receiver_reply_}, {"end_conversation", true}};
  }
  if (transcript.is_array() && transcript.size() >= 6) {
    // A scripted exchange never runs this long; close it out defensively.
    return json{{"utterance", ""}, {"end_conversation", true}};
  }
  return json{{"utterance", replace_all(sender_opening_, "{topic}", topic)},
              {"end_conversation", false}};
}

json ScriptedBackend::reply_identify(const OperationInput& input) const {
  const std::string text = input.slots.at("source_text").get<std::string>();
  const StandardRule* rule = match_standard(text);
  if (rule == nullptr) {
    return json{{"found", false}};
  }
  return json{{"found", true},
              {"content", rule->content},
              {"kind", to_string(rule->kind)},
              {"utility", rule->utility}};
}

json ScriptedBackend::reply_thought(const OperationInput& input) const {
  const json& observations = input.slots.at("observations");
  for (const auto& obs : observations) {
    const auto tags = tag_list(obs.value("tags", json::array()));
    for (const auto& rule : standards_) {
      if (rule.practice_tags.empty()) continue;
      if (!tags_intersect(tags, rule.practice_tags)) continue;
      const std::string actor = string_field(obs, "actor", "someone");
      return json{
          {"thought", replace_all(rule.thought_template, "{actor}", actor)}};
    }
  }
  std::string digest_input;
  for (const auto& obs : observations) {
    digest_input += string_field(obs, "actor");
    digest_input += '|';
    digest_input += string_field(obs, "description");
    digest_input += ';';
  }
  const std::uint64_t index = fnv1a(digest_input) ^ seed_;
  return json{{"thought", idle_thoughts_[index % idle_thoughts_.size()]}};
}

json ScriptedBackend::reply_check(OperationKind kind,
                                  const OperationInput& input) const {
  const json& candidate = input.slots.at("candidate");
  const std::string content = string_field(candidate, "content");
  const StandardRule* rule = match_standard(content);

  bool outcome = true;
  std::string rationale;
  switch (kind) {
    case OperationKind::check_consistency: {
      const std::string origin =
          input.slots.at("origin_text").get<std::string>();
      if (rule == nullptr) {
        rationale = "no registered practice contradicts this statement";
      } else if (contains_all_terms(origin, rule->matcher_terms)) {
        rationale = "the source text speaks about the same practice";
      } else {
        outcome = false;
        rationale = "the source text never mentions this practice";
      }
      break;
    }
    case OperationKind::check_duplication: {
      const json& qualified = input.slots.at("qualified_norms");
      const std::string normalized = normalize_content(content);
      for (const auto& norm : qualified) {
        if (normalize_content(string_field(norm, "content")) == normalized) {
          outcome = false;
          break;
        }
      }
      rationale = outcome ? "no existing norm says the same thing"
                          : "an equivalent norm is already established";
      break;
    }
    case OperationKind::check_type: {
      if (rule == nullptr) {
        rationale = "statement is normative on its face";
      } else {
        const std::string kind_token = string_field(candidate, "kind");
        outcome = kind_token == to_string(rule->kind);
        rationale = outcome ? "the stated kind fits how the practice works"
                            : "the stated kind mislabels this practice";
      }
      break;
    }
    case OperationKind::check_conflict: {
      const json& qualified = input.slots.at("qualified_norms");
      if (rule != nullptr) {
        for (const auto& norm : qualified) {
          const StandardRule* other =
              match_standard(string_field(norm, "content"));
          if (other == nullptr) continue;
          const bool opposed =
              (!rule->opposite_label.empty() &&
               rule->opposite_label == other->label) ||
              (!other->opposite_label.empty() &&
               other->opposite_label == rule->label);
          if (opposed) {
            outcome = false;
            break;
          }
        }
      }
      rationale = outcome ? "does not contradict any established norm"
                          : "contradicts an established norm";
      break;
    }
    default:
      throw ProviderFailure("scripted backend: not a sanity check kind");
  }
  return json{{"outcome", outcome}, {"rationale", rationale}};
}

json ScriptedBackend::reply_classify(const OperationInput& input) const {
  const json& qualified = input.slots.at("qualified_norms");
  std::vector<std::string> theme_order;
  std::map<std::string, std::vector<int>> members_by_theme;
  int position = 0;
  for (const auto& norm : qualified) {
    ++position;
    const StandardRule* rule = match_standard(string_field(norm, "content"));
    if (rule == nullptr || rule->theme.empty()) continue;
    if (members_by_theme.find(rule->theme) == members_by_theme.end()) {
      theme_order.push_back(rule->theme);
    }
    members_by_theme[rule->theme].push_back(position);
  }
  json groups = json::array();
  for (const auto& theme : theme_order) {
    const auto& members = members_by_theme[theme];
    if (members.size() < 2) continue;
    groups.push_back({{"members", members}, {"theme", theme}});
  }
  return json{{"groups", groups}};
}

json ScriptedBackend::reply_abstract(const OperationInput& input) const {
  const std::string theme = input.slots.at("theme").get<std::string>();
  const json& group = input.slots.at("group");
  const std::size_t size = group.size();

  const ThemeRule* theme_rule = nullptr;
  for (const auto& rule : themes_) {
    if (rule.theme == theme) {
      theme_rule = &rule;
      break;
    }
  }

  std::string content;
  std::string kind_token;
  std::vector<double> weights;
  if (theme_rule != nullptr) {
    content = theme_rule->content;
    kind_token = to_string(theme_rule->kind);
    if (theme_rule->weights.size() == size) weights = theme_rule->weights;
  } else {
    content = "carry forward the community's shared sense of " + theme;
    kind_token = size > 0 ? string_field(group[0], "kind", "injunctive")
                          : std::string("injunctive");
  }
  if (weights.empty()) {
    weights.assign(size == 0 ? 1 : size, 1.0 / static_cast<double>(
                                                  size == 0 ? 1 : size));
  }
  return json{{"content", content}, {"kind", kind_token}, {"weights", weights}};
}

json ScriptedBackend::reply_plans(const OperationInput& input) const {
  const json& description = input.slots.at("agent_description");
  const json& qualified = input.slots.at("qualified_norms");
  const json routine = description.value("routine", json::array());

  auto holds = [&](const std::string& label) {
    const StandardRule* rule = standard_by_label(label);
    if (rule == nullptr) return false;
    for (const auto& norm : qualified) {
      if (contains_all_terms(string_field(norm, "content"),
                             rule->matcher_terms)) {
        return true;
      }
    }
    return false;
  };

  const bool pro_tip = [&] {
    for (const auto& pref : description.value("preferences", json::array())) {
      if (string_field(pref, "tag") == "tips_after_meals") return true;
    }
    return false;
  }();
  const bool anti_tip = [&] {
    for (const auto& pref : description.value("preferences", json::array())) {
      if (string_field(pref, "tag") == "against_tipping") return true;
    }
    return false;
  }();

  json plans = json::array();
  for (const auto& block : routine) {
    const int start = int_field(block, "start", 0);
    const int end = int_field(block, "end", 0);
    const std::string activity = string_field(block, "activity");
    std::string text;
    if (activity == "sleep") {
      text = "Sleep at home.";
    } else if (activity == "morning") {
      text = "Morning routine at home before heading out.";
    } else if (activity == "evening") {
      text = "Wind down at home for the evening.";
    } else if (activity == "terrace") {
      text = "Take a short break on the terrace.";
    } else if (activity == "lunch") {
      text = "Lunch at the counter";
      if (pro_tip || holds("tipping after meals")) {
        text += ", leaving a tip for the server after the meal.";
      } else if (anti_tip) {
        text += ", settling the bill and skipping the tip as usual.";
      } else {
        text += ".";
      }
    } else {
      text = string_field(description, "daily_action",
                          "Spend the hours at the cafe");
      for (const auto& pref : description.value("preferences", json::array())) {
        const PreferenceRule* rule =
            preference_by_tag(string_field(pref, "tag"));
        if (rule == nullptr) continue;
        const ActionSpec& spec =
            holds(rule->governed_by) ? rule->compliant : rule->violating;
        text += "; now and then, " + spec.description;
      }
      text += ".";
    }
    plans.push_back({{"start", format_clock(start)},
                     {"end", format_clock(end)},
                     {"description", text}});
  }
  return json{{"plans", plans}};
}

json ScriptedBackend::reply_actions(const OperationInput& input) const {
  const json& description = input.slots.at("agent_description");
  const json& plan = input.slots.at("plan");
  const json& qualified = input.slots.at("qualified_norms");
  const json& tracked = input.slots.at("tracked_standards");
  const int day = input.slots.at("day").get<int>();

  const int start = int_field(plan, "start_minute", 0);
  const int end = int_field(plan, "end_minute", start + 1);
  const int window = std::max(1, end - start);
  const std::string plan_text =
      normalize_content(string_field(plan, "description"));
  const std::string home = string_field(description, "home", "home");
  const std::string venue =
      string_field(description, "location", public_venue_);
  const int agent_index = int_field(description, "index", 0);

  auto holds = [&](const std::string& label) {
    const StandardRule* rule = standard_by_label(label);
    if (rule == nullptr) return false;
    for (const auto& norm : qualified) {
      if (contains_all_terms(string_field(norm, "content"),
                             rule->matcher_terms)) {
        return true;
      }
    }
    return false;
  };

  std::vector<TimedAction> timeline;
  auto fill_with = [&](const ActionSpec& spec, int chunk,
                       const std::optional<std::string>& location) {
    int cursor = 0;
    while (cursor < window) {
      TimedAction item;
      item.offset = cursor;
      item.spec = spec;
      item.spec.duration = std::min(chunk, window - cursor);
      item.location = location;
      timeline.push_back(item);
      cursor += item.spec.duration;
    }
  };

  if (plan_text.find("sleep") != std::string::npos) {
    fill_with(activity_piece("sleep"), 60, home);
  } else if (plan_text.find("morning") != std::string::npos) {
    fill_with(activity_piece("morning"), 60, home);
  } else if (plan_text.find("wind down") != std::string::npos ||
             plan_text.find("evening") != std::string::npos) {
    fill_with(activity_piece("evening"), 60, home);
  } else if (plan_text.find("terrace") != std::string::npos) {
    fill_with(activity_piece("terrace"), 10, terrace_location_);
  } else if (plan_text.find("lunch") != std::string::npos) {
    const bool pro = [&] {
      for (const auto& pref :
           description.value("preferences", json::array())) {
        if (string_field(pref, "tag") == "tips_after_meals") return true;
      }
      return false;
    }();
    const bool anti = [&] {
      for (const auto& pref :
           description.value("preferences", json::array())) {
        if (string_field(pref, "tag") == "against_tipping") return true;
      }
      return false;
    }();
    std::vector<const ActionSpec*> sequence;
    if (pro || holds("tipping after meals")) {
      sequence = {&meal_piece("order"), &meal_piece("eat_before_tip"),
                  &meal_piece("tip"), &meal_piece("linger")};
    } else if (anti) {
      sequence = {&meal_piece("order"), &meal_piece("eat"),
                  &meal_piece("no_tip"), &meal_piece("linger_after_skip")};
    } else {
      sequence = {&meal_piece("order"), &meal_piece("eat"),
                  &meal_piece("settle"), &meal_piece("linger")};
    }
    int cursor = 0;
    for (const ActionSpec* spec : sequence) {
      if (cursor >= window) break;
      TimedAction item;
      item.offset = cursor;
      item.spec = *spec;
      item.spec.duration = std::min(spec->duration, window - cursor);
      timeline.push_back(item);
      cursor += item.spec.duration;
    }
    if (cursor < window && !timeline.empty()) {
      timeline.back().spec.duration += window - cursor;
    }
  } else {
    // A regular stretch at the venue: base activity with each personal
    // habit surfacing at a fixed minute past every covered hour.
    std::vector<TimedAction> practices;
    for (const auto& pref : description.value("preferences", json::array())) {
      const PreferenceRule* rule = preference_by_tag(string_field(pref, "tag"));
      if (rule == nullptr) continue;
      const int minute = int_field(pref, "minute", 0);
      const ActionSpec& spec =
          holds(rule->governed_by) ? rule->compliant : rule->violating;
      for (int hour = (start / 60) * 60; hour < end; hour += 60) {
        const int at = hour + minute;
        if (at < start || at + 1 > end) continue;
        // Later days keep the habit on a sparser schedule.
        if (day > 0 && (hour / 60 + agent_index) % 2 != 0) continue;
        TimedAction item;
        item.offset = at - start;
        item.spec = spec;
        practices.push_back(item);
        break;  // a habit surfaces once per scheduled stretch
      }
    }
    std::stable_sort(practices.begin(), practices.end(),
                     [](const TimedAction& a, const TimedAction& b) {
                       return a.offset < b.offset;
                     });
    ActionSpec base;
    base.description = string_field(description, "daily_action",
                                    "keep busy around the cafe");
    base.duration = 10;
    int cursor = 0;
    for (const auto& practice : practices) {
      if (practice.offset < cursor) continue;  // overlapping habits collapse
      while (cursor < practice.offset) {
        TimedAction filler;
        filler.offset = cursor;
        filler.spec = base;
        filler.spec.duration = std::min(10, practice.offset - cursor);
        timeline.push_back(filler);
        cursor += filler.spec.duration;
      }
      TimedAction item = practice;
      item.spec.duration = std::min(item.spec.duration, window - cursor);
      if (item.spec.duration < 1) break;
      timeline.push_back(item);
      cursor += item.spec.duration;
    }
    while (cursor < window) {
      TimedAction filler;
      filler.offset = cursor;
      filler.spec = base;
      filler.spec.duration = std::min(10, window - cursor);
      timeline.push_back(filler);
      cursor += filler.spec.duration;
    }
  }

  json actions = json::array();
  for (const auto& item : timeline) {
    const std::string effective_location =
        item.location.has_value() ? *item.location : venue;
    json annotations = json::object();
    for (const auto& tracked_entry : tracked) {
      const std::string label = string_field(tracked_entry, "label");
      const StandardRule* rule = standard_by_label(label);
      std::string verdict = "not_applicable";
      if (rule != nullptr) {
        if (tags_intersect(item.spec.tags, rule->violation_tags)) {
          verdict = "violates";
        } else if (tags_intersect(item.spec.tags, rule->compliance_tags)) {
          verdict = "complies";
        } else if (rule->indoor_default && effective_location == public_venue_) {
          verdict = "complies";
        }
      }
      annotations[label] = verdict;
    }
    json action = {{"description", item.spec.description},
                   {"tags", item.spec.tags},
                   {"duration_minutes", item.spec.duration},
                   {"annotations", annotations}};
    if (item.location.has_value()) {
      action["location"] = *item.location;
    } else {
      action["location"] = nullptr;
    }
    actions.push_back(action);
  }
  return json{{"actions", actions}};
}

}  // namespace normsim
