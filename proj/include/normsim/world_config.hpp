#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "normsim/norm.hpp"

namespace normsim {

// Static description of one simulated resident.
struct AgentConfig {
  std::string name;
  std::string persona;
  std::string home;
  std::string location;      // daytime venue
  std::string daily_action;  // what they normally do there
  std::string goals;
  bool entrepreneur = false;  // authors norms at setup
  bool extraverted = false;   // willing to start corrective conversations
  nlohmann::json preferences = nlohmann::json::array();
  nlohmann::json initial_norms = nlohmann::json::array();
  nlohmann::json routine = nlohmann::json::array();

  // The structured self-description passed to every operation that needs
  // to know who is acting. `index` is the agent's position in the roster.
  nlohmann::json description(int index) const;
};

// A named place agents can be at; co-location is what makes activity
// mutually visible.
struct LocationConfig {
  std::string id;
  std::string name;
  bool indoor = true;
};

struct WorldConfig {
  std::string name;
  int days = 1;
  int observation_interval = 10;   // ticks between observation digests
  int synthesis_threshold = 350;   // qualified-utility sum that triggers it
  int max_conversation_turns = 8;
  int observation_buffer_cap = 128;  // bounded per-agent memory
  std::vector<LocationConfig> locations;
  nlohmann::json tracked_standards = nlohmann::json::array();
  nlohmann::json provider = nlohmann::json::object();  // optional defaults
  std::vector<AgentConfig> agents;
  nlohmann::json raw;  // the parsed file, kept for fingerprinting

  static WorldConfig load(const std::string& path);
  static WorldConfig from_json(const nlohmann::json& value);

  Tick ticks_total() const { return static_cast<Tick>(days) * 1440; }

  // Stable fingerprint of the configuration as loaded.
  std::string digest() const;
};

}  // namespace normsim
