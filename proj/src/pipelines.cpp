#include "normsim/pipelines.hpp"

#include <cmath>
#include <iostream>

#include "normsim/errors.hpp"

namespace normsim {

namespace {

using nlohmann::json;

// Every warning goes to stderr for the operator and into the trace for
// later inspection.
void warn(SimContext& ctx, Tick tick, const std::string& who,
          const std::string& message) {
  std::cerr << "warning (" << who << "): " << message << '\n';
  ctx.trace.append(tick, EventKind::warning,
                   {{"agent", who}, {"message", message}});
}

void warn_all(SimContext& ctx, Tick tick, const std::string& who,
              const std::vector<std::string>& warnings) {
  for (const auto& message : warnings) warn(ctx, tick, who, message);
}

json observations_json(const std::vector<Observation>& observations) {
  json list = json::array();
  for (const auto& obs : observations) list.push_back(obs.to_json());
  return list;
}

json candidate_json(const Norm& norm) {
  return json{{"content", norm.content},
              {"kind", to_string(norm.kind)},
              {"utility", norm.utility}};
}

// Admits identified information, runs the sanity check, and qualifies the
// candidate when every step passed. Shared by the conversation and
// observation paths.
void admit_and_evaluate(SimContext& ctx, AgentRuntime& agent,
                        const NormDraft& draft, Provenance provenance,
                        const std::string& origin_text, Tick tick) {
  NormativeInformation info(draft.content, draft.kind, draft.utility,
                            std::move(provenance));
  const NormId id = agent.norms().admit(info, tick);
  const SanityCheckResult result =
      immediate_evaluation(ctx, agent, id, origin_text, tick);
  if (!result.passed) return;
  try {
    agent.norms().qualify(id);
  } catch (const LifecycleError& e) {
    // The duplicate backstop can still fire when two evaluations of the
    // same content interleave within a tick; the candidate stays pending.
    warn(ctx, tick, agent.name(), e.what());
    return;
  }
  ctx.trace.append(tick, EventKind::norm_qualified,
                   {{"agent", agent.name()},
                    {"norm", norm_to_json(agent.norms().get(id))}});
}

}  // namespace

void create_norms(SimContext& ctx, AgentRuntime& agent, Tick tick) {
  const std::size_t expected = agent.config().initial_norms.size();
  const OperationInput input = OperationInput::make(
      OperationKind::create_norm,
      {{"agent_description", agent.description()},
       {"initial_count", expected}});
  InvokeResult result = ctx.provider.invoke(input);
  warn_all(ctx, tick, agent.name(), result.warnings);
  const auto& output = std::get<CreateNormOutput>(result.output);
  std::size_t taken = 0;
  for (const auto& draft : output.norms) {
    if (taken >= expected) {
      warn(ctx, tick, agent.name(),
           "dropping surplus authored norm '" + draft.content + "'");
      continue;
    }
    try {
      const NormId id = agent.norms().insert_created(draft.content, draft.kind,
                                                     draft.utility, tick);
      ctx.trace.append(tick, EventKind::norm_created,
                       {{"agent", agent.name()},
                        {"norm", norm_to_json(agent.norms().get(id))}});
      ++taken;
    } catch (const LifecycleError& e) {
      warn(ctx, tick, agent.name(), e.what());
    }
  }
}

std::optional<ConflictDecision> sender_step(
    SimContext& ctx, AgentRuntime& agent,
    const std::vector<Observation>& fresh, Tick tick) {
  if (fresh.empty()) return std::nullopt;
  json qualified = agent.qualified_norms_json();
  if (qualified.empty()) return std::nullopt;
  const OperationInput input = OperationInput::make(
      OperationKind::detect_conflict_and_decide_to_talk,
      {{"agent_description", agent.description()},
       {"observations", observations_json(fresh)},
       {"qualified_norms", std::move(qualified)}});
  try {
    InvokeResult result = ctx.provider.invoke(input);
    warn_all(ctx, tick, agent.name(), result.warnings);
    auto decision = std::get<ConflictDecision>(std::move(result.output));
    if (!decision.conflict) return std::nullopt;
    ctx.trace.append(tick, EventKind::conflict_detected,
                     {{"observer", agent.name()},
                      {"violator", decision.target.value_or("")},
                      {"description", decision.description}});
    return decision;
  } catch (const ProviderFailure& e) {
    warn(ctx, tick, agent.name(),
         std::string("conflict detection failed: ") + e.what());
    return std::nullopt;
  }
}

Conversation conduct_conversation(SimContext& ctx, AgentRuntime& sender,
                                  AgentRuntime& receiver, std::string topic,
                                  Tick tick) {
  Conversation conversation;
  conversation.id = ctx.next_conversation_id++;
  conversation.initiator = sender.name();
  conversation.partner = receiver.name();
  conversation.topic = std::move(topic);

  for (int turn = 0; turn < ctx.world.max_conversation_turns; ++turn) {
    const bool senders_turn = (turn % 2 == 0);
    AgentRuntime& speaker = senders_turn ? sender : receiver;
    AgentRuntime& counterpart = senders_turn ? receiver : sender;
    const OperationInput input = OperationInput::make(
        OperationKind::generate_conversation_turn,
        {{"agent_description", speaker.description()},
         {"topic", conversation.topic},
         {"transcript", conversation.transcript_json()},
         {"role", senders_turn ? "sender" : "receiver"},
         {"counterpart_name", counterpart.name()}});
    try {
      InvokeResult result = ctx.provider.invoke(input);
      warn_all(ctx, tick, speaker.name(), result.warnings);
      const auto& output = std::get<ConversationTurnOutput>(result.output);
      if (!output.utterance.empty()) {
        conversation.turns.push_back({speaker.name(), output.utterance});
      }
      if (output.end_conversation) break;
    } catch (const ProviderFailure& e) {
      // The exchange is cut short but whatever was already said stands.
      warn(ctx, tick, speaker.name(),
           std::string("conversation turn failed, ending the exchange: ") +
               e.what());
      break;
    }
  }

  if (!conversation.turns.empty()) {
    ctx.trace.append(tick, EventKind::conversation_held,
                     {{"initiator", conversation.initiator},
                      {"partner", conversation.partner},
                      {"conversation_id", conversation.id},
                      {"topic", conversation.topic},
                      {"transcript", conversation.transcript_json()}});
  }
  return conversation;
}

void receiver_step(SimContext& ctx, AgentRuntime& agent,
                   const Conversation& conversation, Tick tick) {
  const std::string transcript = conversation.rendered_transcript();
  const OperationInput input = OperationInput::make(
      OperationKind::identify_normative_information,
      {{"source_text", transcript}, {"source_kind", "conversation"}});
  std::optional<NormDraft> info;
  try {
    InvokeResult result = ctx.provider.invoke(input);
    warn_all(ctx, tick, agent.name(), result.warnings);
    info = std::get<IdentifyOutput>(std::move(result.output)).info;
  } catch (const ProviderFailure& e) {
    warn(ctx, tick, agent.name(),
         std::string("information extraction failed: ") + e.what());
    return;
  }
  if (!info.has_value()) return;
  const std::uint64_t info_id = ctx.next_info_id++;
  ctx.trace.append(tick, EventKind::norm_info_identified,
                   {{"agent", agent.name()},
                    {"source", "conversation"},
                    {"source_id", conversation.id},
                    {"info_id", info_id},
                    {"content", info->content},
                    {"kind", to_string(info->kind)},
                    {"utility", info->utility}});
  admit_and_evaluate(ctx, agent, *info, FromConversation{conversation.id},
                     transcript, tick);
}

void observation_step(SimContext& ctx, AgentRuntime& agent, Tick tick) {
  if (agent.observation_buffer().empty()) return;
  const json observed = observations_json(agent.observation_buffer());
  ctx.trace.append(tick, EventKind::observation,
                   {{"agent", agent.name()}, {"observations", observed}});
  const OperationInput thought_input = OperationInput::make(
      OperationKind::generate_thought,
      {{"agent_description", agent.description()}, {"observations", observed}});
  agent.clear_observations();

  std::string thought_text;
  try {
    InvokeResult thought_result = ctx.provider.invoke(thought_input);
    warn_all(ctx, tick, agent.name(), thought_result.warnings);
    thought_text = std::get<ThoughtOutput>(thought_result.output).thought;
  } catch (const ProviderFailure& e) {
    warn(ctx, tick, agent.name(),
         std::string("reflection failed: ") + e.what());
    return;
  }
  const std::uint64_t thought_id = ctx.next_thought_id++;
  ctx.trace.append(tick, EventKind::thought_generated,
                   {{"agent", agent.name()},
                    {"thought_id", thought_id},
                    {"text", thought_text}});

  const OperationInput identify_input = OperationInput::make(
      OperationKind::identify_normative_information,
      {{"source_text", thought_text}, {"source_kind", "observation"}});
  std::optional<NormDraft> info;
  try {
    InvokeResult identify_result = ctx.provider.invoke(identify_input);
    warn_all(ctx, tick, agent.name(), identify_result.warnings);
    info = std::get<IdentifyOutput>(std::move(identify_result.output)).info;
  } catch (const ProviderFailure& e) {
    warn(ctx, tick, agent.name(),
         std::string("information extraction failed: ") + e.what());
    return;
  }
  if (!info.has_value()) return;
  const std::uint64_t info_id = ctx.next_info_id++;
  ctx.trace.append(tick, EventKind::norm_info_identified,
                   {{"agent", agent.name()},
                    {"source", "observation"},
                    {"source_id", thought_id},
                    {"info_id", info_id},
                    {"content", info->content},
                    {"kind", to_string(info->kind)},
                    {"utility", info->utility}});
  admit_and_evaluate(ctx, agent, *info, FromObservation{thought_id},
                     thought_text, tick);
}

SanityCheckResult immediate_evaluation(SimContext& ctx, AgentRuntime& agent,
                                       NormId candidate_id,
                                       const std::string& origin_text,
                                       Tick tick) {
  const Norm& candidate = agent.norms().get(candidate_id);
  const json candidate_slot = candidate_json(candidate);

  struct StepSpec {
    OperationKind kind;
    const char* name;
  };
  constexpr StepSpec kSteps[] = {
      {OperationKind::check_consistency, "consistency"},
      {OperationKind::check_duplication, "duplication"},
      {OperationKind::check_type, "type"},
      {OperationKind::check_conflict, "conflict"},
  };

  SanityCheckResult result;
  result.passed = true;
  for (const auto& step : kSteps) {
    std::map<std::string, json> slots{{"candidate", candidate_slot}};
    switch (step.kind) {
      case OperationKind::check_consistency:
        slots.emplace("origin_text", origin_text);
        break;
      case OperationKind::check_duplication:
      case OperationKind::check_conflict:
        slots.emplace("qualified_norms", agent.qualified_norms_json());
        break;
      default:
        break;
    }
    try {
      InvokeResult invoke_result = ctx.provider.invoke(
          OperationInput::make(step.kind, std::move(slots)));
      warn_all(ctx, tick, agent.name(), invoke_result.warnings);
      const auto& check = std::get<CheckOutput>(invoke_result.output);
      result.steps.push_back({step.name, check.outcome, check.rationale});
      if (!check.outcome) {
        result.passed = false;
        break;
      }
    } catch (const ProviderFailure& e) {
      // The candidate stays pending; the steps that did run are recorded.
      warn(ctx, tick, agent.name(),
           std::string("check interrupted: ") + e.what());
      result.passed = false;
      break;
    }
  }

  json steps_json = json::array();
  for (const auto& step : result.steps) {
    steps_json.push_back({{"step", step.step},
                          {"outcome", step.outcome},
                          {"rationale", step.rationale}});
  }
  ctx.trace.append(tick, EventKind::sanity_check_result,
                   {{"agent", agent.name()},
                    {"candidate_id", candidate_id.value},
                    {"candidate", candidate_slot},
                    {"steps", steps_json},
                    {"passed", result.passed}});
  return result;
}

void maybe_synthesize(SimContext& ctx, AgentRuntime& agent, Tick tick) {
  if (agent.norms().utility_sum() <= ctx.world.synthesis_threshold) return;

  const std::vector<Norm> snapshot = agent.norms().qualified_set();
  const OperationInput classify_input = OperationInput::make(
      OperationKind::classify_specific_norms,
      {{"qualified_norms", agent.qualified_norms_json()}});
  ClassifyOutput classified;
  try {
    InvokeResult classify_result = ctx.provider.invoke(classify_input);
    warn_all(ctx, tick, agent.name(), classify_result.warnings);
    classified = std::get<ClassifyOutput>(std::move(classify_result.output));
  } catch (const ProviderFailure& e) {
    warn(ctx, tick, agent.name(),
         std::string("classification failed, deferring synthesis: ") +
             e.what());
    return;
  }

  for (const auto& group : classified.groups) {
    if (group.member_positions.size() < 2) continue;
    std::vector<NormId> members;
    json group_slot = json::array();
    std::string joined_contents;
    bool resolved = true;
    for (const std::size_t position : group.member_positions) {
      if (position < 1 || position > snapshot.size()) {
        resolved = false;
        break;
      }
      const Norm& member = snapshot[position - 1];
      members.push_back(member.id);
      group_slot.push_back(candidate_json(member));
      if (!joined_contents.empty()) joined_contents += "; ";
      joined_contents += member.content;
    }
    if (!resolved) {
      warn(ctx, tick, agent.name(),
           "classification referenced a norm position that does not exist; "
           "skipping the group");
      continue;
    }

    const OperationInput abstract_input = OperationInput::make(
        OperationKind::generate_abstract_norm,
        {{"group", group_slot}, {"theme", group.theme}});
    AbstractNormOutput abstract;
    try {
      InvokeResult abstract_result = ctx.provider.invoke(abstract_input);
      warn_all(ctx, tick, agent.name(), abstract_result.warnings);
      abstract =
          std::get<AbstractNormOutput>(std::move(abstract_result.output));
    } catch (const ProviderFailure& e) {
      warn(ctx, tick, agent.name(),
           "abstraction failed for theme '" + group.theme + "': " + e.what());
      continue;
    }
    if (abstract.weights.size() != members.size()) {
      warn(ctx, tick, agent.name(),
           "abstract norm weights do not match the group size; skipping the "
           "group");
      continue;
    }
    double weighted = 0.0;
    for (std::size_t i = 0; i < members.size(); ++i) {
      weighted += abstract.weights[i] *
                  static_cast<double>(snapshot[group.member_positions[i] - 1]
                                          .utility);
    }
    int utility = static_cast<int>(std::floor(weighted + 0.5));
    utility = std::max(kUtilityMin, std::min(kUtilityMax, utility));

    try {
      const NormId abstract_id = agent.norms().admit_synthesis_candidate(
          abstract.content, abstract.kind, utility, members, tick);
      const std::string origin =
          "Drawing together the group's standards (" + joined_contents +
          "), the community keeps one shared rule: " + abstract.content;
      const SanityCheckResult evaluation =
          immediate_evaluation(ctx, agent, abstract_id, origin, tick);
      if (!evaluation.passed) continue;
      agent.norms().qualify(abstract_id);
      ctx.trace.append(tick, EventKind::norm_qualified,
                       {{"agent", agent.name()},
                        {"norm", norm_to_json(agent.norms().get(abstract_id))}});
      agent.norms().apply_synthesis(abstract_id, members);
      json member_ids = json::array();
      for (const auto& member : members) member_ids.push_back(member.value);
      json weights = json::array();
      for (const double weight : abstract.weights) weights.push_back(weight);
      ctx.trace.append(tick, EventKind::norm_synthesized,
                       {{"agent", agent.name()},
                        {"abstract", norm_to_json(agent.norms().get(abstract_id))},
                        {"theme", group.theme},
                        {"member_ids", member_ids},
                        {"weights", weights}});
    } catch (const LifecycleError& e) {
      warn(ctx, tick, agent.name(),
           std::string("synthesis group skipped: ") + e.what());
      continue;
    }
  }
}

void generate_plans(SimContext& ctx, AgentRuntime& agent, int day, Tick tick) {
  const json qualified = agent.qualified_norms_json();
  const OperationInput input = OperationInput::make(
      OperationKind::generate_normative_plans,
      {{"agent_description", agent.description()},
       {"goals", agent.config().goals},
       {"qualified_norms", qualified},
       {"day", day}});
  std::vector<Plan> plans;
  try {
    InvokeResult result = ctx.provider.invoke(input);
    warn_all(ctx, tick, agent.name(), result.warnings);
    const auto& output = std::get<PlansOutput>(result.output);
    for (const auto& draft : output.plans) {
      plans.push_back({draft.start_minute, draft.end_minute, draft.description});
    }
  } catch (const ProviderFailure& e) {
    warn(ctx, tick, agent.name(),
         std::string("planning failed, falling back: ") + e.what());
    if (!agent.plans().empty()) {
      plans = agent.plans();  // yesterday's plans stay in force
    } else {
      plans.push_back({0, 1440, "Spend a quiet day at home."});
    }
  }

  json plans_json = json::array();
  for (const auto& plan : plans) {
    plans_json.push_back({{"start_minute", plan.start_minute},
                          {"end_minute", plan.end_minute},
                          {"description", plan.description}});
  }
  ctx.trace.append(tick, EventKind::plan_generated,
                   {{"agent", agent.name()},
                    {"day", day},
                    {"qualified_norms", qualified},
                    {"plans", plans_json}});
  agent.plans() = std::move(plans);
  agent.next_plan_index() = 0;
  agent.action_queue().clear();
}

bool generate_actions(SimContext& ctx, AgentRuntime& agent,
                      std::size_t plan_index, int day, Tick tick) {
  if (plan_index >= agent.plans().size()) return false;
  const Plan& plan = agent.plans()[plan_index];
  const int window = plan.end_minute - plan.start_minute;

  std::vector<ScheduledAction> scheduled;
  try {
    const OperationInput input = OperationInput::make(
        OperationKind::generate_normative_actions,
        {{"agent_description", agent.description()},
         {"plan",
          json{{"start_minute", plan.start_minute},
               {"end_minute", plan.end_minute},
               {"description", plan.description}}},
         {"qualified_norms", agent.qualified_norms_json()},
         {"tracked_standards", ctx.world.tracked_standards},
         {"day", day}});
    InvokeResult result = ctx.provider.invoke(input);
    warn_all(ctx, tick, agent.name(), result.warnings);
    const auto& output = std::get<ActionsOutput>(result.output);

    // Resolve durations: explicit ones are honored, the rest split the
    // remaining window evenly (never below one minute).
    int explicit_sum = 0;
    int implicit_count = 0;
    for (const auto& draft : output.actions) {
      if (draft.duration_minutes.has_value()) {
        explicit_sum += *draft.duration_minutes;
      } else {
        ++implicit_count;
      }
    }
    const int remaining = std::max(0, window - explicit_sum);
    int spread = 0;
    int extra = 0;
    if (implicit_count > 0) {
      spread = std::max(1, remaining / implicit_count);
      extra = std::max(0, remaining - spread * implicit_count);
    }
    for (const auto& draft : output.actions) {
      ScheduledAction action;
      action.description = draft.description;
      action.tags = draft.tags;
      action.location = draft.location;
      action.annotations = draft.annotations;
      if (draft.duration_minutes.has_value()) {
        action.duration = *draft.duration_minutes;
      } else {
        action.duration = spread + (extra > 0 ? 1 : 0);
        if (extra > 0) --extra;
      }
      scheduled.push_back(std::move(action));
    }
  } catch (const ProviderFailure& e) {
    warn(ctx, tick, agent.name(),
         std::string("action generation failed, idling through the plan: ") +
             e.what());
    ScheduledAction idle;
    idle.description = "Carry on quietly with: " + plan.description;
    idle.duration = std::max(1, window);
    for (const auto& standard : ctx.world.tracked_standards) {
      idle.annotations[standard["label"].get<std::string>()] =
          ComplianceStatus::not_applicable;
    }
    scheduled.push_back(std::move(idle));
  }

  for (auto& action : scheduled) {
    agent.action_queue().push_back(std::move(action));
  }
  return true;
}

}  // namespace normsim
