#include "normsim/engine.hpp"

namespace normsim {

namespace {

using nlohmann::json;

json action_executed_payload(const AgentRuntime& agent,
                             const ScheduledAction& action) {
  json annotations = json::object();
  for (const auto& [label, verdict] : action.annotations) {
    annotations[label] = to_string(verdict);
  }
  return json{{"agent", agent.name()},
              {"description", action.description},
              {"tags", action.tags},
              {"location", action.location.has_value()
                               ? json(*action.location)
                               : json(nullptr)},
              {"duration_minutes", action.duration},
              {"annotations", annotations}};
}

}  // namespace

Engine::Engine(const WorldConfig& world, Provider& provider,
               TraceWriter& trace)
    : world_(world), ctx_{provider, trace, world} {
  int index = 0;
  for (const auto& agent_config : world.agents) {
    agents_.emplace_back(agent_config, index++,
                         world.observation_buffer_cap);
  }
  provider.set_call_observer([this](const ProviderCallRecord& record) {
    ctx_.trace.append(ctx_.current_tick, EventKind::provider_call,
                      {{"operation", to_string(record.kind)},
                       {"attempt", record.attempt},
                       {"outcome", record.outcome},
                       {"prompt_chars", record.prompt_chars},
                       {"response_chars", record.response_chars}});
  });
}

RunSummary Engine::run() {
  ctx_.current_tick = 0;
  for (auto& agent : agents_) {
    // Only norm entrepreneurs author founding norms; nobody else is asked.
    if (agent.config().entrepreneur) {
      create_norms(ctx_, agent, 0);
    }
  }

  const Tick total = world_.ticks_total();
  for (Tick tick = 0; tick < total; ++tick) {
    ctx_.current_tick = tick;
    if (tick % kTicksPerDay == 0) {
      day_boundary(tick);
    }
    for (auto& agent : agents_) {
      agent_turn(agent, tick);
    }
    ctx_.trace.flush();
  }

  RunSummary summary;
  summary.ticks = total;
  summary.events = ctx_.trace.events_written();
  summary.agents = agents_.size();
  for (const auto& agent : agents_) {
    summary.qualified_counts.emplace_back(agent.name(),
                                          agent.norms().qualified_set().size());
  }
  return summary;
}

void Engine::day_boundary(Tick tick) {
  const int day = static_cast<int>(tick / kTicksPerDay);
  for (auto& agent : agents_) {
    generate_plans(ctx_, agent, day, tick);
    if (generate_actions(ctx_, agent, 0, day, tick)) {
      agent.next_plan_index() = 1;
    }
  }
}

void Engine::agent_turn(AgentRuntime& agent, Tick tick) {
  advance_actions(agent, tick);

  const std::vector<Observation> fresh = perceive(agent);
  for (const auto& observation : fresh) {
    agent.push_observation(observation);
  }

  const auto decision = sender_step(ctx_, agent, fresh, tick);
  if (decision.has_value() && decision->talk && decision->target.has_value()) {
    AgentRuntime* receiver = find_agent(*decision->target);
    if (receiver != nullptr && receiver != &agent &&
        receiver->current_location() == agent.current_location()) {
      const Conversation conversation = conduct_conversation(
          ctx_, agent, *receiver, decision->description, tick);
      if (!conversation.turns.empty()) {
        receiver_step(ctx_, *receiver, conversation, tick);
        receiver_step(ctx_, agent, conversation, tick);
      }
    }
  }

  const int interval = world_.observation_interval;
  if (tick % interval ==
          static_cast<Tick>(agent.index()) % static_cast<Tick>(interval) &&
      !agent.observation_buffer().empty()) {
    observation_step(ctx_, agent, tick);
  }

  if (tick % kTicksPerHour == 0) {
    maybe_synthesize(ctx_, agent, tick);
  }
}

void Engine::advance_actions(AgentRuntime& agent, Tick tick) {
  if (agent.current_action().has_value() &&
      tick < agent.current_action_until()) {
    return;  // still busy
  }
  const int day = static_cast<int>(tick / kTicksPerDay);
  while (agent.action_queue().empty() &&
         agent.next_plan_index() < agent.plans().size()) {
    generate_actions(ctx_, agent, agent.next_plan_index(), day, tick);
    ++agent.next_plan_index();
  }
  if (agent.action_queue().empty()) {
    return;  // nothing scheduled; the last action stays visible
  }
  ScheduledAction action = std::move(agent.action_queue().front());
  agent.action_queue().pop_front();
  ctx_.trace.append(tick, EventKind::action_executed,
                    action_executed_payload(agent, action));
  const std::string location =
      action.location.has_value() ? *action.location : agent.config().location;
  const Tick until = tick + static_cast<Tick>(action.duration);
  agent.set_current_action(std::move(action), until);
  agent.set_current_location(location);
}

std::vector<Observation> Engine::perceive(const AgentRuntime& agent) const {
  std::vector<Observation> fresh;
  for (const auto& other : agents_) {
    if (&other == &agent) continue;
    if (other.current_location() != agent.current_location()) continue;
    if (!other.current_action().has_value()) continue;
    const ScheduledAction& action = *other.current_action();
    fresh.push_back({other.name(), action.description, action.tags});
  }
  return fresh;
}

AgentRuntime* Engine::find_agent(const std::string& name) {
  for (auto& agent : agents_) {
    if (agent.name() == name) return &agent;
  }
  return nullptr;
}

}  // namespace normsim
