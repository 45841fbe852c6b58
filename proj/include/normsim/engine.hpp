#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "normsim/agent.hpp"
#include "normsim/pipelines.hpp"
#include "normsim/provider.hpp"
#include "normsim/trace.hpp"
#include "normsim/world_config.hpp"

namespace normsim {

inline constexpr int kTicksPerDay = 1440;
inline constexpr int kTicksPerHour = 60;

struct RunSummary {
  Tick ticks = 0;
  std::uint64_t events = 0;
  std::size_t agents = 0;
  // (name, qualified-norm count) per agent, in roster order.
  std::vector<std::pair<std::string, std::size_t>> qualified_counts;
};

// Drives the simulation: one tick per simulated minute. Each tick every
// agent, in roster order, (1) advances its scheduled actions, (2) perceives
// co-located activity, (3) reacts to norm violations it can see, possibly
// starting a corrective conversation, (4) digests buffered observations on
// its personal cadence, (5) reconsiders its norm store on the hour, and at
// each day boundary plans the day ahead. An agent's visible activity is
// whatever action it last started, until the agent itself replaces it.
class Engine {
 public:
  Engine(const WorldConfig& world, Provider& provider, TraceWriter& trace);

  RunSummary run();

  const std::vector<AgentRuntime>& agents() const { return agents_; }

 private:
  void day_boundary(Tick tick);
  void agent_turn(AgentRuntime& agent, Tick tick);
  void advance_actions(AgentRuntime& agent, Tick tick);
  std::vector<Observation> perceive(const AgentRuntime& agent) const;
  AgentRuntime* find_agent(const std::string& name);

  const WorldConfig& world_;
  SimContext ctx_;
  std::vector<AgentRuntime> agents_;
};

}  // namespace normsim
