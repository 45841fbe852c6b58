#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "normsim/norm_database.hpp"
#include "normsim/operations.hpp"
#include "normsim/world_config.hpp"

namespace normsim {

// Oldest observations fall off once the buffer is full; an agent's memory
// between digests is deliberately bounded.
inline constexpr std::size_t kObservationBufferCap = 128;

struct Observation {
  std::string actor;
  std::string description;
  std::vector<std::string> tags;

  nlohmann::json to_json() const {
    return nlohmann::json{
        {"actor", actor}, {"description", description}, {"tags", tags}};
  }
};

struct Plan {
  int start_minute = 0;
  int end_minute = 0;
  std::string description;
};

// One queued minute-level action, enriched with the compliance verdicts
// the acting agent attached when it was generated.
struct ScheduledAction {
  std::string description;
  std::vector<std::string> tags;
  std::optional<std::string> location;  // temporary move while it runs
  int duration = 1;                     // minutes
  std::map<std::string, ComplianceStatus> annotations;
};

struct ConversationTurn {
  std::string speaker;
  std::string text;
};

struct Conversation {
  std::uint64_t id = 0;
  std::string initiator;
  std::string partner;
  std::string topic;
  std::vector<ConversationTurn> turns;

  std::string rendered_transcript() const;
  nlohmann::json transcript_json() const;
};

struct SanityCheckStepResult {
  std::string step;  // consistency | duplication | type | conflict
  bool outcome = false;
  std::string rationale;
};

struct SanityCheckResult {
  bool passed = false;
  std::vector<SanityCheckStepResult> steps;
};

// Everything that changes about an agent while the simulation runs.
class AgentRuntime {
 public:
  AgentRuntime(AgentConfig config, int index,
               std::size_t buffer_cap = kObservationBufferCap);

  const AgentConfig& config() const { return config_; }
  int index() const { return index_; }
  const std::string& name() const { return config_.name; }
  const nlohmann::json& description() const { return description_; }

  NormDatabase& norms() { return norms_; }
  const NormDatabase& norms() const { return norms_; }

  // Qualified norms in insertion order, shaped for operation slots.
  nlohmann::json qualified_norms_json() const;

  void push_observation(Observation observation);
  const std::vector<Observation>& observation_buffer() const {
    return observation_buffer_;
  }
  void clear_observations() { observation_buffer_.clear(); }

  std::vector<Plan>& plans() { return plans_; }
  std::size_t& next_plan_index() { return next_plan_index_; }
  std::deque<ScheduledAction>& action_queue() { return action_queue_; }

  const std::optional<ScheduledAction>& current_action() const {
    return current_action_;
  }
  void set_current_action(ScheduledAction action, Tick until);
  Tick current_action_until() const { return current_action_until_; }

  const std::string& current_location() const { return current_location_; }
  void set_current_location(std::string location) {
    current_location_ = std::move(location);
  }

 private:
  AgentConfig config_;
  int index_;
  std::size_t buffer_cap_;
  nlohmann::json description_;
  NormDatabase norms_;
  std::vector<Observation> observation_buffer_;
  std::vector<Plan> plans_;
  std::size_t next_plan_index_ = 0;
  std::deque<ScheduledAction> action_queue_;
  std::optional<ScheduledAction> current_action_;
  Tick current_action_until_ = 0;
  std::string current_location_;
};

}  // namespace normsim
