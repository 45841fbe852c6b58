#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "normsim/agent.hpp"
#include "normsim/provider.hpp"
#include "normsim/trace.hpp"
#include "normsim/world_config.hpp"

namespace normsim {

// Shared mutable state the per-agent steps need: the provider, the trace,
// the static world description, and the id counters that link events
// (conversations, thoughts, identified information) across the log.
struct SimContext {
  Provider& provider;
  TraceWriter& trace;
  const WorldConfig& world;
  Tick current_tick = 0;
  std::uint64_t next_conversation_id = 1;
  std::uint64_t next_thought_id = 1;
  std::uint64_t next_info_id = 1;
};

// Asks the agent to author its founding norms (norm entrepreneurs list
// them; everyone else authors none). Authored norms are qualified from
// birth. Surplus replies beyond the requested count are dropped.
void create_norms(SimContext& ctx, AgentRuntime& agent, Tick tick);

// Looks at what is happening right now and decides whether any of it
// violates a norm the agent holds, and whether to address the violator.
// Returns the decision when a conflict was found (the engine starts the
// conversation if `talk` is set); empty observations or an empty qualified
// set skip the call entirely.
std::optional<ConflictDecision> sender_step(
    SimContext& ctx, AgentRuntime& agent,
    const std::vector<Observation>& fresh, Tick tick);

// Runs the turn loop between the two agents. The initiator speaks first;
// turns alternate until one side ends the exchange or the configured turn
// budget runs out. A conversation in which nothing was said produces no
// event and an empty transcript.
Conversation conduct_conversation(SimContext& ctx, AgentRuntime& sender,
                                  AgentRuntime& receiver, std::string topic,
                                  Tick tick);

// Extracts normative information from a finished conversation and, when
// something was found, admits it and runs the evaluation pipeline.
void receiver_step(SimContext& ctx, AgentRuntime& agent,
                   const Conversation& conversation, Tick tick);

// Digests the buffered observations into a thought, mines the thought for
// normative information, and evaluates whatever was found. Clears the
// buffer.
void observation_step(SimContext& ctx, AgentRuntime& agent, Tick tick);

// The four-step sanity check over a pending candidate, in fixed order:
// consistency with its origin, duplication against the qualified set,
// type correctness, conflict with the qualified set. Stops at the first
// failed step.
SanityCheckResult immediate_evaluation(SimContext& ctx, AgentRuntime& agent,
                                       NormId candidate_id,
                                       const std::string& origin_text,
                                       Tick tick);

// When the qualified utility mass exceeds the threshold, groups the
// qualified set by theme and replaces each multi-member group with one
// abstract norm whose utility is the weighted mean (rounded half up) of
// its members. Groups that fail any step are skipped individually.
void maybe_synthesize(SimContext& ctx, AgentRuntime& agent, Tick tick);

// Produces the day's plan list. On provider failure the previous day's
// plans stay in force; with nothing to fall back on, a single quiet idle
// plan covers the day.
void generate_plans(SimContext& ctx, AgentRuntime& agent, int day, Tick tick);

// Expands one plan into minute-level actions and queues them. Actions
// without explicit durations split the remaining window evenly. On
// provider failure a single unannotated action covers the window.
// Returns false when the plan index is out of range.
bool generate_actions(SimContext& ctx, AgentRuntime& agent,
                      std::size_t plan_index, int day, Tick tick);

}  // namespace normsim
