#include "normsim/world_config.hpp"

#include <fstream>
#include <set>

#include "normsim/digest.hpp"
#include "normsim/errors.hpp"

namespace normsim {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& message) {
  throw ConfigError("world config: " + message);
}

std::string need_string(const json& object, const std::string& key,
                        const std::string& where) {
  if (!object.contains(key) || !object[key].is_string() ||
      object[key].get<std::string>().empty()) {
    bad(where + " needs a non-empty string '" + key + "'");
  }
  return object[key].get<std::string>();
}

int optional_int(const json& object, const std::string& key, int fallback) {
  if (!object.contains(key)) return fallback;
  if (!object[key].is_number_integer()) {
    bad("'" + key + "' must be an integer");
  }
  return object[key].get<int>();
}

void check_norm_list(const json& list, const std::string& where) {
  if (!list.is_array()) bad(where + " must be an array");
  for (const auto& entry : list) {
    need_string(entry, "content", where);
    norm_kind_from_string(need_string(entry, "kind", where));
    if (!entry.contains("utility") || !entry["utility"].is_number_integer()) {
      bad(where + " entries need an integer utility");
    }
    const int utility = entry["utility"].get<int>();
    if (utility < kUtilityMin || utility > kUtilityMax) {
      bad(where + " utility must lie in [" + std::to_string(kUtilityMin) +
          ", " + std::to_string(kUtilityMax) + "]");
    }
  }
}

void check_routine(const json& routine, const std::string& who) {
  if (!routine.is_array() || routine.empty()) {
    bad(who + " needs a non-empty routine");
  }
  int cursor = 0;
  for (const auto& block : routine) {
    if (!block.contains("start") || !block.contains("end") ||
        !block["start"].is_number_integer() ||
        !block["end"].is_number_integer()) {
      bad(who + " routine blocks need integer start and end minutes");
    }
    const int start = block["start"].get<int>();
    const int end = block["end"].get<int>();
    need_string(block, "activity", who + " routine");
    if (start != cursor) {
      bad(who + " routine must cover the day without gaps (block starting at " +
          std::to_string(start) + " does not continue from " +
          std::to_string(cursor) + ")");
    }
    if (end <= start) bad(who + " routine blocks need positive length");
    cursor = end;
  }
  if (cursor != 1440) {
    bad(who + " routine must end at minute 1440");
  }
}

}  // namespace

json AgentConfig::description(int index) const {
  return json{{"name", name},
              {"index", index},
              {"persona", persona},
              {"entrepreneur", entrepreneur},
              {"extraverted", extraverted},
              {"home", home},
              {"location", location},
              {"daily_action", daily_action},
              {"goals", goals},
              {"preferences", preferences},
              {"initial_norms", initial_norms},
              {"routine", routine}};
}

WorldConfig WorldConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) {
    throw ConfigError("cannot open world config: " + path);
  }
  json parsed;
  try {
    parsed = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("world config is not valid JSON: " +
                      std::string(e.what()));
  }
  return from_json(parsed);
}

WorldConfig WorldConfig::from_json(const json& value) {
  if (!value.is_object()) bad("top level must be a JSON object");
  WorldConfig config;
  config.raw = value;
  config.name = need_string(value, "name", "config");
  config.days = optional_int(value, "days", 1);
  if (config.days < 1) bad("days must be at least 1");
  config.observation_interval = optional_int(value, "observation_interval", 10);
  if (config.observation_interval < 1) {
    bad("observation_interval must be at least 1");
  }
  config.synthesis_threshold = optional_int(value, "synthesis_threshold", 350);
  if (config.synthesis_threshold < 1) {
    bad("synthesis_threshold must be positive");
  }
  config.max_conversation_turns =
      optional_int(value, "max_conversation_turns", 8);
  if (config.max_conversation_turns < 2) {
    bad("max_conversation_turns must allow both sides to speak");
  }
  config.observation_buffer_cap =
      optional_int(value, "observation_buffer_cap", 128);
  if (config.observation_buffer_cap < 1) {
    bad("observation_buffer_cap must be at least 1");
  }

  if (!value.contains("locations") || !value["locations"].is_array() ||
      value["locations"].empty()) {
    bad("at least one location is required");
  }
  std::set<std::string> location_ids;
  for (const auto& entry : value["locations"]) {
    LocationConfig location;
    location.id = need_string(entry, "id", "location");
    location.name = need_string(entry, "name", "location");
    if (entry.contains("indoor") && !entry["indoor"].is_boolean()) {
      bad("location '" + location.id + "' indoor flag must be boolean");
    }
    location.indoor = entry.value("indoor", true);
    if (!location_ids.insert(location.id).second) {
      bad("duplicate location id '" + location.id + "'");
    }
    config.locations.push_back(std::move(location));
  }

  config.tracked_standards = value.value("tracked_standards", json::array());
  if (!config.tracked_standards.is_array()) {
    bad("tracked_standards must be an array");
  }
  for (const auto& standard : config.tracked_standards) {
    need_string(standard, "label", "tracked standard");
    need_string(standard, "content", "tracked standard");
    norm_kind_from_string(need_string(standard, "kind", "tracked standard"));
    if (!standard.contains("matcher_terms") ||
        !standard["matcher_terms"].is_array() ||
        standard["matcher_terms"].empty()) {
      bad("tracked standards need non-empty matcher_terms");
    }
    if (standard.contains("opposite_terms") &&
        !standard["opposite_terms"].is_array()) {
      bad("tracked standard opposite_terms must be an array");
    }
  }

  config.provider = value.value("provider", json::object());
  if (!config.provider.is_object()) {
    bad("provider section must be an object");
  }

  if (!value.contains("agents") || !value["agents"].is_array() ||
      value["agents"].empty()) {
    bad("at least one agent is required");
  }
  std::set<std::string> names;
  for (const auto& entry : value["agents"]) {
    AgentConfig agent;
    agent.name = need_string(entry, "name", "agent");
    if (!names.insert(agent.name).second) {
      bad("duplicate agent name '" + agent.name + "'");
    }
    agent.persona = need_string(entry, "persona", agent.name);
    agent.home = need_string(entry, "home", agent.name);
    agent.location = need_string(entry, "location", agent.name);
    if (location_ids.find(agent.home) == location_ids.end()) {
      bad(agent.name + " lives at undeclared location '" + agent.home + "'");
    }
    if (location_ids.find(agent.location) == location_ids.end()) {
      bad(agent.name + " frequents undeclared location '" + agent.location +
          "'");
    }
    agent.daily_action = need_string(entry, "daily_action", agent.name);
    agent.goals = entry.value("goals", "get through the day well");
    agent.entrepreneur = entry.value("entrepreneur", false);
    agent.extraverted = entry.value("extraverted", false);
    agent.preferences = entry.value("preferences", json::array());
    if (!agent.preferences.is_array()) {
      bad(agent.name + " preferences must be an array");
    }
    for (const auto& pref : agent.preferences) {
      need_string(pref, "tag", agent.name + " preference");
      const int minute = pref.value("minute", 0);
      if (minute < 0 || minute > 59) {
        bad(agent.name + " preference minute must lie in [0, 59]");
      }
    }
    agent.initial_norms = entry.value("initial_norms", json::array());
    check_norm_list(agent.initial_norms, agent.name + " initial norms");
    if (!agent.initial_norms.empty() && !agent.entrepreneur) {
      bad(agent.name + " lists initial norms but is not an entrepreneur");
    }
    agent.routine = entry.value("routine", json::array());
    check_routine(agent.routine, agent.name);
    config.agents.push_back(std::move(agent));
  }
  return config;
}

std::string WorldConfig::digest() const {
  // nlohmann::json keeps object keys sorted, so dump() is canonical.
  return to_hex(fnv1a64(raw.dump()));
}

}  // namespace normsim
