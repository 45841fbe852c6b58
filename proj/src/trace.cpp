#include "normsim/trace.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <utility>

#include "normsim/digest.hpp"
#include "normsim/errors.hpp"
#include "normsim/operations.hpp"

namespace normsim {

namespace {

using nlohmann::json;

constexpr std::array<const char*, kEventKindCount> kEventKindNames = {
    "Observation",       "ThoughtGenerated",  "ConversationHeld",
    "ConflictDetected",  "NormCreated",       "NormInfoIdentified",
    "SanityCheckResult", "NormQualified",     "NormSynthesized",
    "PlanGenerated",     "ActionExecuted",    "ProviderCall",
    "Warning",
};

[[noreturn]] void fail(std::uint64_t seq, const std::string& message) {
  throw TraceError("event " + std::to_string(seq) + ": " + message);
}

const json& need(const json& payload, const char* key, std::uint64_t seq) {
  auto it = payload.find(key);
  if (it == payload.end()) {
    fail(seq, std::string("payload is missing '") + key + "'");
  }
  return *it;
}

std::string need_string(const json& payload, const char* key,
                        std::uint64_t seq, bool allow_empty = false) {
  const json& value = need(payload, key, seq);
  if (!value.is_string()) {
    fail(seq, std::string("'") + key + "' must be a string");
  }
  const std::string text = value.get<std::string>();
  if (text.empty() && !allow_empty) {
    fail(seq, std::string("'") + key + "' must not be empty");
  }
  return text;
}

std::uint64_t need_uint(const json& payload, const char* key,
                        std::uint64_t seq) {
  const json& value = need(payload, key, seq);
  if (!value.is_number_unsigned() && !value.is_number_integer()) {
    fail(seq, std::string("'") + key + "' must be a non-negative integer");
  }
  if (value.is_number_integer() && value.get<std::int64_t>() < 0) {
    fail(seq, std::string("'") + key + "' must be a non-negative integer");
  }
  return value.get<std::uint64_t>();
}

const json& need_array(const json& payload, const char* key,
                       std::uint64_t seq) {
  const json& value = need(payload, key, seq);
  if (!value.is_array()) {
    fail(seq, std::string("'") + key + "' must be an array");
  }
  return value;
}

void check_agent(const json& payload, const char* key,
                 const std::set<std::string>& agents, std::uint64_t seq) {
  const std::string name = need_string(payload, key, seq);
  if (agents.find(name) == agents.end()) {
    fail(seq, std::string("'") + key + "' names unknown agent '" + name + "'");
  }
}

// Checks a serialized norm snapshot and reports its id. The expected
// lifecycle stage is expressed via the two status flags.
std::uint64_t check_norm_snapshot(const json& snapshot, bool want_act,
                                  bool want_val, std::uint64_t seq) {
  if (!snapshot.is_object()) fail(seq, "norm snapshot must be an object");
  const std::uint64_t id = need_uint(snapshot, "id", seq);
  need_string(snapshot, "content", seq);
  const std::uint64_t utility = need_uint(snapshot, "utility", seq);
  if (utility < static_cast<std::uint64_t>(kUtilityMin) ||
      utility > static_cast<std::uint64_t>(kUtilityMax)) {
    fail(seq, "norm utility out of range");
  }
  norm_kind_from_string(need_string(snapshot, "kind", seq));
  const json& act = need(snapshot, "s_act", seq);
  const json& val = need(snapshot, "s_val", seq);
  if (!act.is_boolean() || !val.is_boolean()) {
    fail(seq, "norm status flags must be booleans");
  }
  if (act.get<bool>() != want_act || val.get<bool>() != want_val) {
    fail(seq, "norm snapshot is in the wrong lifecycle state");
  }
  const json& provenance = need(snapshot, "provenance", seq);
  if (!provenance.is_object() || !provenance.contains("tag")) {
    fail(seq, "norm provenance must be an object with a tag");
  }
  need_uint(snapshot, "created_tick", seq);
  return id;
}

constexpr std::array<const char*, 4> kCheckOrder = {"consistency",
                                                    "duplication", "type",
                                                    "conflict"};

}  // namespace

std::string to_hex(std::uint64_t value) {
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(value));
  return buffer;
}

std::string to_string(EventKind kind) {
  return kEventKindNames[static_cast<int>(kind)];
}

EventKind event_kind_from_string(const std::string& token) {
  for (int i = 0; i < kEventKindCount; ++i) {
    if (token == kEventKindNames[i]) return static_cast<EventKind>(i);
  }
  throw TraceError("unknown event kind: " + token);
}

json SimEvent::to_json() const {
  return json{{"seq", seq},
              {"tick", tick},
              {"kind", to_string(kind)},
              {"payload", payload}};
}

SimEvent SimEvent::from_json(const json& value) {
  SimEvent event;
  if (!value.is_object()) throw TraceError("event line must be a JSON object");
  event.seq = need_uint(value, "seq", 0);
  event.tick = need_uint(value, "tick", event.seq);
  event.kind = event_kind_from_string(need_string(value, "kind", event.seq));
  event.payload = need(value, "payload", event.seq);
  if (!event.payload.is_object()) {
    fail(event.seq, "payload must be an object");
  }
  return event;
}

json TraceHeader::to_json() const {
  return json{{"schema_version", schema_version},
              {"config_digest", config_digest},
              {"seed", seed},
              {"agents", agents},
              {"ticks_total", ticks_total},
              {"standards", standards}};
}

TraceHeader TraceHeader::from_json(const json& value) {
  TraceHeader header;
  if (!value.is_object()) throw TraceError("header must be a JSON object");
  if (!value.contains("schema_version") ||
      !value["schema_version"].is_number_integer()) {
    throw TraceError("header is missing schema_version");
  }
  header.schema_version = value["schema_version"].get<int>();
  if (header.schema_version != kTraceSchemaVersion) {
    throw TraceError("unsupported trace schema version " +
                     std::to_string(header.schema_version));
  }
  header.config_digest = need_string(value, "config_digest", 0);
  header.seed = need_uint(value, "seed", 0);
  for (const auto& name : need_array(value, "agents", 0)) {
    if (!name.is_string()) throw TraceError("header agents must be strings");
    header.agents.push_back(name.get<std::string>());
  }
  if (header.agents.empty()) {
    throw TraceError("header must list at least one agent");
  }
  header.ticks_total = need_uint(value, "ticks_total", 0);
  if (header.ticks_total == 0) {
    throw TraceError("header ticks_total must be positive");
  }
  header.standards = need_array(value, "standards", 0);
  return header;
}

json norm_to_json(const Norm& norm) {
  json provenance;
  if (std::holds_alternative<CreatedByAgent>(norm.provenance)) {
    provenance = json{{"tag", "created"}};
  } else if (const auto* conv =
                 std::get_if<FromConversation>(&norm.provenance)) {
    provenance =
        json{{"tag", "conversation"}, {"conversation_id", conv->conversation_id}};
  } else if (const auto* obs = std::get_if<FromObservation>(&norm.provenance)) {
    provenance = json{{"tag", "observation"}, {"thought_id", obs->thought_id}};
  } else {
    const auto& synth = std::get<SynthesizedFrom>(norm.provenance);
    json members = json::array();
    for (const auto& member : synth.members) members.push_back(member.value);
    provenance = json{{"tag", "synthesized"}, {"member_ids", members}};
  }
  return json{{"id", norm.id.value},
              {"content", norm.content},
              {"utility", norm.utility},
              {"kind", to_string(norm.kind)},
              {"s_act", norm.status.activated()},
              {"s_val", norm.status.valid()},
              {"provenance", provenance},
              {"created_tick", norm.created_tick}};
}

TraceWriter::TraceWriter(const std::string& path, const TraceHeader& header)
    : path_(path) {
  out_.open(path, std::ios::out | std::ios::trunc);
  if (!out_.good()) {
    throw TraceError("cannot open trace file for writing: " + path);
  }
  out_ << header.to_json().dump() << '\n';
  if (!out_.good()) {
    throw TraceError("failed writing trace header: " + path);
  }
}

TraceWriter::~TraceWriter() {
  if (out_.is_open()) out_.flush();
}

std::uint64_t TraceWriter::append(Tick tick, EventKind kind,
                                  json payload) {
  if (any_event_ && tick < last_tick_) {
    throw TraceError("events must not move backwards in time");
  }
  SimEvent event;
  event.seq = next_seq_;
  event.tick = tick;
  event.kind = kind;
  event.payload = std::move(payload);
  out_ << event.to_json().dump() << '\n';
  if (!out_.good()) {
    throw TraceError("failed appending to trace file: " + path_);
  }
  last_tick_ = tick;
  any_event_ = true;
  return next_seq_++;
}

void TraceWriter::flush() {
  out_.flush();
  if (!out_.good()) {
    throw TraceError("failed flushing trace file: " + path_);
  }
}

TraceFile TraceFile::load(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) {
    throw TraceError("cannot open trace file: " + path);
  }
  TraceFile trace;
  std::string line;
  std::size_t line_number = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    json parsed;
    try {
      parsed = json::parse(line);
    } catch (const json::exception& e) {
      throw TraceError("line " + std::to_string(line_number) +
                       " is not valid JSON: " + e.what());
    }
    if (!have_header) {
      trace.header = TraceHeader::from_json(parsed);
      have_header = true;
    } else {
      trace.events.push_back(SimEvent::from_json(parsed));
    }
  }
  if (!have_header) {
    throw TraceError("trace file has no header line: " + path);
  }
  return trace;
}

void TraceFile::write_to(std::ostream& out) const {
  out << header.to_json().dump() << '\n';
  for (const auto& event : events) {
    out << event.to_json().dump() << '\n';
  }
}

void TraceFile::validate() const {
  const std::set<std::string> agents(header.agents.begin(),
                                     header.agents.end());
  if (agents.size() != header.agents.size()) {
    throw TraceError("header lists a duplicate agent name");
  }

  // Norm ids seen in an established (created or qualified) state, per
  // agent, plus the utility they were established with; synthesis
  // members must come from here and may be consumed only once.
  std::map<std::pair<std::string, std::uint64_t>, int> established;
  std::set<std::pair<std::string, std::uint64_t>> superseded;
  // Candidates with a passed check result, per (agent, candidate id).
  std::set<std::pair<std::string, std::uint64_t>> checks_passed;
  // Ids that identified information may reference.
  std::set<std::uint64_t> conversation_ids;
  std::set<std::uint64_t> thought_ids;

  std::uint64_t expected_seq = 0;
  Tick last_tick = 0;
  for (const auto& event : events) {
    const std::uint64_t seq = event.seq;
    if (seq != expected_seq) {
      fail(seq, "sequence numbers must be gapless (expected " +
                    std::to_string(expected_seq) + ")");
    }
    ++expected_seq;
    if (event.tick < last_tick) {
      fail(seq, "tick moved backwards");
    }
    last_tick = event.tick;
    if (event.tick >= header.ticks_total) {
      fail(seq, "tick is beyond the declared simulation length");
    }
    const json& payload = event.payload;
    try {
    switch (event.kind) {
      case EventKind::observation: {
        check_agent(payload, "agent", agents, seq);
        const json& seen = need_array(payload, "observations", seq);
        if (seen.empty()) {
          fail(seq, "an observation batch must not be empty");
        }
        for (const auto& entry : seen) {
          check_agent(entry, "actor", agents, seq);
          need_string(entry, "description", seq);
          need_array(entry, "tags", seq);
        }
        break;
      }
      case EventKind::thought_generated: {
        check_agent(payload, "agent", agents, seq);
        thought_ids.insert(need_uint(payload, "thought_id", seq));
        need_string(payload, "text", seq);
        break;
      }
      case EventKind::conversation_held: {
        check_agent(payload, "initiator", agents, seq);
        check_agent(payload, "partner", agents, seq);
        if (payload["initiator"] == payload["partner"]) {
          fail(seq, "a conversation needs two distinct participants");
        }
        conversation_ids.insert(need_uint(payload, "conversation_id", seq));
        need_string(payload, "topic", seq);
        const json& transcript = need_array(payload, "transcript", seq);
        if (transcript.empty()) {
          fail(seq, "conversation transcript must not be empty");
        }
        const std::string initiator = payload["initiator"].get<std::string>();
        const std::string partner = payload["partner"].get<std::string>();
        for (std::size_t i = 0; i < transcript.size(); ++i) {
          const std::string speaker =
              need_string(transcript[i], "speaker", seq);
          need_string(transcript[i], "text", seq, /*allow_empty=*/true);
          const std::string expected =
              (i % 2 == 0) ? initiator : partner;
          if (speaker != expected) {
            fail(seq, "conversation turns must alternate starting with the "
                      "initiator");
          }
        }
        break;
      }
      case EventKind::conflict_detected: {
        check_agent(payload, "observer", agents, seq);
        check_agent(payload, "violator", agents, seq);
        need_string(payload, "description", seq);
        break;
      }
      case EventKind::norm_created: {
        check_agent(payload, "agent", agents, seq);
        const json& snapshot = need(payload, "norm", seq);
        const std::uint64_t id = check_norm_snapshot(snapshot, true, true, seq);
        if (snapshot["provenance"].value("tag", "") != "created") {
          fail(seq, "created norms must carry creation provenance");
        }
        established[{payload["agent"].get<std::string>(), id}] =
            static_cast<int>(snapshot["utility"].get<std::uint64_t>());
        break;
      }
      case EventKind::norm_info_identified: {
        check_agent(payload, "agent", agents, seq);
        const std::string source = need_string(payload, "source", seq);
        const std::uint64_t source_id = need_uint(payload, "source_id", seq);
        if (source == "conversation") {
          if (conversation_ids.find(source_id) == conversation_ids.end()) {
            fail(seq, "identified information references an unknown "
                      "conversation");
          }
        } else if (source == "observation") {
          if (thought_ids.find(source_id) == thought_ids.end()) {
            fail(seq, "identified information references an unknown thought");
          }
        } else {
          fail(seq, "info source must be conversation or observation");
        }
        need_uint(payload, "info_id", seq);
        need_string(payload, "content", seq);
        norm_kind_from_string(need_string(payload, "kind", seq));
        const std::uint64_t utility = need_uint(payload, "utility", seq);
        if (utility < static_cast<std::uint64_t>(kUtilityMin) ||
            utility > static_cast<std::uint64_t>(kUtilityMax)) {
          fail(seq, "identified utility out of range");
        }
        break;
      }
      case EventKind::sanity_check_result: {
        check_agent(payload, "agent", agents, seq);
        const std::uint64_t candidate_id =
            need_uint(payload, "candidate_id", seq);
        const json& candidate = need(payload, "candidate", seq);
        need_string(candidate, "content", seq);
        norm_kind_from_string(need_string(candidate, "kind", seq));
        need_uint(candidate, "utility", seq);
        const json& steps = need_array(payload, "steps", seq);
        if (steps.size() > kCheckOrder.size()) {
          fail(seq, "too many check steps for one candidate");
        }
        bool all_true = true;
        for (std::size_t i = 0; i < steps.size(); ++i) {
          const std::string step = need_string(steps[i], "step", seq);
          if (step != kCheckOrder[i]) {
            fail(seq, "check steps must run in order (expected '" +
                          std::string(kCheckOrder[i]) + "', got '" + step +
                          "')");
          }
          const json& outcome = need(steps[i], "outcome", seq);
          if (!outcome.is_boolean()) {
            fail(seq, "check outcome must be boolean");
          }
          need_string(steps[i], "rationale", seq);
          if (!outcome.get<bool>()) {
            if (i + 1 != steps.size()) {
              fail(seq, "check steps must stop at the first failed step");
            }
            all_true = false;
          }
        }
        const json& passed = need(payload, "passed", seq);
        if (!passed.is_boolean()) fail(seq, "'passed' must be boolean");
        if (passed.get<bool>()) {
          if (steps.size() != kCheckOrder.size() || !all_true) {
            fail(seq, "a passed check needs all four steps to succeed");
          }
          checks_passed.insert(
              {payload["agent"].get<std::string>(), candidate_id});
        } else if (all_true && steps.size() == kCheckOrder.size()) {
          fail(seq, "a check with four successful steps must pass");
        }
        break;
      }
      case EventKind::norm_qualified: {
        check_agent(payload, "agent", agents, seq);
        const json& snapshot = need(payload, "norm", seq);
        const std::uint64_t id = check_norm_snapshot(snapshot, true, true, seq);
        const std::string agent = payload["agent"].get<std::string>();
        if (snapshot["provenance"].value("tag", "") == "created") {
          fail(seq, "created norms are recorded at creation, not qualified");
        }
        if (checks_passed.find({agent, id}) == checks_passed.end()) {
          fail(seq, "norm qualified without a prior passed check result");
        }
        established[{agent, id}] =
            static_cast<int>(snapshot["utility"].get<std::uint64_t>());
        break;
      }
      case EventKind::norm_synthesized: {
        check_agent(payload, "agent", agents, seq);
        const std::string agent = payload["agent"].get<std::string>();
        const json& snapshot = need(payload, "abstract", seq);
        const std::uint64_t abstract_id =
            check_norm_snapshot(snapshot, true, true, seq);
        const json& provenance = snapshot["provenance"];
        if (provenance.value("tag", "") != "synthesized") {
          fail(seq, "a synthesized norm must carry synthesis provenance");
        }
        if (established.find({agent, abstract_id}) == established.end()) {
          fail(seq, "a synthesized norm must qualify before it supersedes "
                    "its members");
        }
        need_string(payload, "theme", seq);
        const json& members = need_array(payload, "member_ids", seq);
        const json& weights = need_array(payload, "weights", seq);
        if (members.size() < 2) {
          fail(seq, "synthesis needs at least two member norms");
        }
        if (weights.size() != members.size()) {
          fail(seq, "synthesis weights must match the member list");
        }
        if (provenance["member_ids"] != members) {
          fail(seq, "synthesis provenance must list the same members");
        }
        double weight_sum = 0.0;
        double weighted_utility = 0.0;
        for (std::size_t i = 0; i < members.size(); ++i) {
          const json& member = members[i];
          if (!member.is_number_unsigned() && !member.is_number_integer()) {
            fail(seq, "member ids must be integers");
          }
          if (!weights[i].is_number()) {
            fail(seq, "synthesis weights must be numbers");
          }
          const double weight = weights[i].get<double>();
          if (weight < 0.0) fail(seq, "synthesis weights must not be negative");
          const std::uint64_t member_id = member.get<std::uint64_t>();
          if (member_id == abstract_id) {
            fail(seq, "a synthesized norm cannot be its own member");
          }
          const auto entry = established.find({agent, member_id});
          if (entry == established.end()) {
            fail(seq, "synthesis member was never established for this agent");
          }
          if (superseded.count({agent, member_id}) != 0) {
            fail(seq, "synthesis member was already superseded");
          }
          weight_sum += weight;
          weighted_utility += weight * entry->second;
        }
        if (std::abs(weight_sum - 1.0) > 1e-9) {
          fail(seq, "synthesis weights must sum to one");
        }
        int expected_utility =
            static_cast<int>(std::floor(weighted_utility + 0.5));
        expected_utility =
            std::clamp(expected_utility, kUtilityMin, kUtilityMax);
        if (snapshot["utility"].get<std::int64_t>() != expected_utility) {
          fail(seq, "synthesized utility must be the rounded weighted mean "
                    "of its members");
        }
        for (const auto& member : members) {
          superseded.insert({agent, member.get<std::uint64_t>()});
        }
        break;
      }
      case EventKind::plan_generated: {
        check_agent(payload, "agent", agents, seq);
        need_uint(payload, "day", seq);
        const json& snapshot = need_array(payload, "qualified_norms", seq);
        for (const auto& norm : snapshot) {
          need_string(norm, "content", seq);
          norm_kind_from_string(need_string(norm, "kind", seq));
          need_uint(norm, "utility", seq);
        }
        const json& plans = need_array(payload, "plans", seq);
        if (plans.empty()) fail(seq, "a plan list must not be empty");
        int previous_end = 0;
        for (const auto& plan : plans) {
          const int start_minute =
              static_cast<int>(need_uint(plan, "start_minute", seq));
          const int end_minute =
              static_cast<int>(need_uint(plan, "end_minute", seq));
          need_string(plan, "description", seq);
          if (start_minute >= end_minute) {
            fail(seq, "plan windows must have positive length");
          }
          if (start_minute < previous_end) {
            fail(seq, "plan windows must be ordered and non-overlapping");
          }
          previous_end = end_minute;
        }
        break;
      }
      case EventKind::action_executed: {
        check_agent(payload, "agent", agents, seq);
        need_string(payload, "description", seq);
        need_array(payload, "tags", seq);
        const json& location = need(payload, "location", seq);
        if (!location.is_null() && !location.is_string()) {
          fail(seq, "action location must be a string or null");
        }
        const std::uint64_t duration = need_uint(payload, "duration_minutes", seq);
        if (duration < 1) fail(seq, "actions must last at least one minute");
        const json& annotations = need(payload, "annotations", seq);
        if (!annotations.is_object()) {
          fail(seq, "action annotations must be an object");
        }
        for (const auto& [label, verdict] : annotations.items()) {
          (void)label;
          if (!verdict.is_string()) {
            fail(seq, "annotation verdicts must be strings");
          }
          compliance_status_from_string(verdict.get<std::string>());
        }
        break;
      }
      case EventKind::provider_call: {
        operation_kind_from_string(need_string(payload, "operation", seq));
        need_uint(payload, "attempt", seq);
        const std::string outcome = need_string(payload, "outcome", seq);
        if (outcome != "ok" && outcome != "parse_error" &&
            outcome != "transport_error") {
          fail(seq, "provider outcome token is unknown");
        }
        need_uint(payload, "prompt_chars", seq);
        need_uint(payload, "response_chars", seq);
        break;
      }
      case EventKind::warning: {
        need_string(payload, "message", seq);
        if (payload.contains("agent") && !payload["agent"].is_null()) {
          check_agent(payload, "agent", agents, seq);
        }
        break;
      }
    }
    } catch (const ParseError& e) {
      // Token helpers shared with the response parser report through
      // ParseError; here a bad token means the log itself is damaged.
      fail(seq, e.what());
    }
  }
}

}  // namespace normsim
