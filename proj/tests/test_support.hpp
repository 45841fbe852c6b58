#pragma once

// Shared fixtures for the unit and acceptance suites: a queue-driven fake
// backend, temp-file helpers, small world configurations, an event-log
// builder, a scenario runner, and a deliberately naive metrics oracle that
// recomputes every series from scratch.

#include <atomic>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "normsim/engine.hpp"
#include "normsim/errors.hpp"
#include "normsim/metrics.hpp"
#include "normsim/operations.hpp"
#include "normsim/provider.hpp"
#include "normsim/trace.hpp"
#include "normsim/world_config.hpp"

namespace normsim::test {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Temp files

inline std::string unique_temp_path(const std::string& stem,
                                    const std::string& extension = "") {
  static std::atomic<std::uint64_t> counter{0};
  const auto id = counter.fetch_add(1);
  const auto dir = std::filesystem::temp_directory_path() / "normsim_tests";
  std::filesystem::create_directories(dir);
  return (dir / (stem + "_" + std::to_string(id) + extension)).string();
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw std::runtime_error("cannot read " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

// ---------------------------------------------------------------------------
// Queue-driven fake backend

struct RecordedCall {
  OperationKind kind;
  std::string prompt;
};

// Replies are scripted per operation kind and consumed in FIFO order. A
// transport marker makes the next pop throw ProviderFailure, mimicking a
// network-level fault.
class QueueBackend : public Backend {
 public:
  std::string name() const override { return "queued"; }

  void push_reply(OperationKind kind, const json& reply) {
    queues_[kind].push_back(reply.dump());
  }
  void push_raw(OperationKind kind, std::string raw) {
    queues_[kind].push_back(std::move(raw));
  }
  void push_transport_failure(OperationKind kind) {
    queues_[kind].push_back(kTransportMarker);
  }

  std::string complete(OperationKind kind, const OperationInput&,
                       const std::string& rendered_prompt) override {
    calls_.push_back({kind, rendered_prompt});
    auto& queue = queues_[kind];
    if (queue.empty()) {
      throw std::logic_error(std::string("test bug: no queued reply for ") +
                             to_string(kind));
    }
    std::string raw = std::move(queue.front());
    queue.pop_front();
    if (raw == kTransportMarker) {
      throw ProviderFailure("queued transport failure");
    }
    return raw;
  }

  const std::vector<RecordedCall>& calls() const { return calls_; }

  std::size_t call_count(OperationKind kind) const {
    std::size_t count = 0;
    for (const auto& call : calls_) {
      if (call.kind == kind) ++count;
    }
    return count;
  }

  std::size_t queued(OperationKind kind) const {
    auto it = queues_.find(kind);
    return it == queues_.end() ? 0 : it->second.size();
  }

 private:
  static constexpr const char* kTransportMarker = "\x01transport\x01";
  std::map<OperationKind, std::deque<std::string>> queues_;
  std::vector<RecordedCall> calls_;
};

// Owns the provider while keeping the queue reachable for assertions.
struct FakeProvider {
  explicit FakeProvider(int max_retries = 0)
      : backend_owner(std::make_unique<QueueBackend>()),
        backend(backend_owner.get()),
        provider(std::move(backend_owner), max_retries) {}

  std::unique_ptr<QueueBackend> backend_owner;
  QueueBackend* backend;
  Provider provider;
};

// ---------------------------------------------------------------------------
// World fixtures

inline json world_json(const std::vector<std::string>& agent_names) {
  json locations = json::array();
  locations.push_back({{"id", "venue"}, {"name", "The Venue"}, {"indoor", true}});
  json agents = json::array();
  int index = 0;
  for (const auto& name : agent_names) {
    const std::string home = "home_" + std::to_string(index++);
    locations.push_back({{"id", home}, {"name", home}, {"indoor", true}});
    agents.push_back({{"name", name},
                      {"persona", "a resident"},
                      {"home", home},
                      {"location", "venue"},
                      {"daily_action", "spend the day at the venue"},
                      {"goals", "get along"},
                      {"routine", json::array({{{"start", 0},
                                                {"end", 1440},
                                                {"activity", "work"}}})}});
  }
  return json{{"name", "testville"},
              {"days", 1},
              {"observation_interval", 10},
              {"synthesis_threshold", 350},
              {"max_conversation_turns", 8},
              {"locations", locations},
              {"tracked_standards", json::array()},
              {"agents", agents}};
}

inline WorldConfig make_world(
    const std::vector<std::string>& agent_names,
    const std::function<void(json&)>& mutate = nullptr) {
  json value = world_json(agent_names);
  if (mutate) mutate(value);
  return WorldConfig::from_json(value);
}

// ---------------------------------------------------------------------------
// Event-log builder

inline json norm_snapshot(std::uint64_t id, const std::string& content,
                          int utility, const std::string& kind, bool s_act,
                          bool s_val, json provenance,
                          Tick created_tick = 0) {
  return json{{"id", id},
              {"content", content},
              {"utility", utility},
              {"kind", kind},
              {"s_act", s_act},
              {"s_val", s_val},
              {"provenance", std::move(provenance)},
              {"created_tick", created_tick}};
}

inline json all_steps_passed() {
  json steps = json::array();
  for (const char* step : {"consistency", "duplication", "type", "conflict"}) {
    steps.push_back({{"step", step}, {"outcome", true}, {"rationale", "ok"}});
  }
  return steps;
}

// Accumulates events with automatic sequence numbers into a TraceFile that
// the production validator accepts, so metric fixtures stay honest.
class TraceBuilder {
 public:
  TraceBuilder(std::vector<std::string> agents, Tick ticks_total,
               json standards = json::array()) {
    trace_.header.config_digest = "feedfacefeedface";
    trace_.header.seed = 0;
    trace_.header.agents = std::move(agents);
    trace_.header.ticks_total = ticks_total;
    trace_.header.standards = std::move(standards);
  }

  std::uint64_t event(Tick tick, EventKind kind, json payload) {
    SimEvent entry;
    entry.seq = trace_.events.size();
    entry.tick = tick;
    entry.kind = kind;
    entry.payload = std::move(payload);
    trace_.events.push_back(std::move(entry));
    return trace_.events.back().seq;
  }

  // A norm created at setup: established and qualified from birth.
  void created(Tick tick, const std::string& agent, std::uint64_t id,
               const std::string& content, int utility,
               const std::string& kind = "injunctive") {
    event(tick, EventKind::norm_created,
          {{"agent", agent},
           {"norm", norm_snapshot(id, content, utility, kind, true, true,
                                  json{{"tag", "created"}}, tick)}});
  }

  // The passing check plus the qualification event for one candidate.
  void qualified(Tick tick, const std::string& agent, std::uint64_t id,
                 const std::string& content, int utility,
                 const std::string& kind = "injunctive",
                 json provenance = json{{"tag", "conversation"},
                                        {"conversation_id", 0}}) {
    event(tick, EventKind::sanity_check_result,
          {{"agent", agent},
           {"candidate_id", id},
           {"candidate",
            {{"content", content}, {"kind", kind}, {"utility", utility}}},
           {"steps", all_steps_passed()},
           {"passed", true}});
    event(tick, EventKind::norm_qualified,
          {{"agent", agent},
           {"norm", norm_snapshot(id, content, utility, kind, true, true,
                                  std::move(provenance), tick)}});
  }

  // A full synthesis record: check, qualification, then the merge event.
  void synthesized(Tick tick, const std::string& agent,
                   std::uint64_t abstract_id, const std::string& content,
                   int utility, const std::string& kind,
                   const std::vector<std::uint64_t>& members,
                   const std::vector<double>& weights,
                   const std::string& theme = "theme") {
    json member_ids = json::array();
    for (const auto member : members) member_ids.push_back(member);
    const json provenance = {{"tag", "synthesized"}, {"member_ids", member_ids}};
    qualified(tick, agent, abstract_id, content, utility, kind, provenance);
    event(tick, EventKind::norm_synthesized,
          {{"agent", agent},
           {"abstract", norm_snapshot(abstract_id, content, utility, kind,
                                      true, true, provenance, tick)},
           {"theme", theme},
           {"member_ids", member_ids},
           {"weights", weights}});
  }

  void action(Tick tick, const std::string& agent, const std::string& what,
              const std::map<std::string, std::string>& annotations) {
    json notes = json::object();
    for (const auto& [label, verdict] : annotations) notes[label] = verdict;
    event(tick, EventKind::action_executed,
          {{"agent", agent},
           {"description", what},
           {"tags", json::array()},
           {"location", nullptr},
           {"duration_minutes", 1},
           {"annotations", notes}});
  }

  void conflict(Tick tick, const std::string& observer,
                const std::string& violator, const std::string& description) {
    event(tick, EventKind::conflict_detected,
          {{"observer", observer},
           {"violator", violator},
           {"description", description}});
  }

  void conversation(Tick tick, std::uint64_t id, const std::string& initiator,
                    const std::string& partner, const std::string& topic) {
    event(tick, EventKind::conversation_held,
          {{"initiator", initiator},
           {"partner", partner},
           {"conversation_id", id},
           {"topic", topic},
           {"transcript",
            json::array({{{"speaker", initiator}, {"text", topic}},
                         {{"speaker", partner}, {"text", "noted"}}})}});
  }

  void thought(Tick tick, const std::string& agent, std::uint64_t thought_id,
               const std::string& text) {
    event(tick, EventKind::thought_generated,
          {{"agent", agent}, {"thought_id", thought_id}, {"text", text}});
  }

  void info(Tick tick, const std::string& agent, const std::string& source,
            std::uint64_t source_id, std::uint64_t info_id,
            const std::string& content, const std::string& kind = "injunctive",
            int utility = 50) {
    event(tick, EventKind::norm_info_identified,
          {{"agent", agent},
           {"source", source},
           {"source_id", source_id},
           {"info_id", info_id},
           {"content", content},
           {"kind", kind},
           {"utility", utility}});
  }

  const TraceFile& trace() const { return trace_; }

 private:
  TraceFile trace_;
};

// ---------------------------------------------------------------------------
// Scenario runner (mirrors the CLI's run assembly)

inline RunSummary run_scripted(const WorldConfig& world,
                               const std::string& rules_path,
                               std::uint64_t seed,
                               const std::string& trace_path,
                               int max_retries = 3) {
  ProviderConfig config;
  config.backend = ProviderConfig::BackendKind::scripted;
  config.scripted = ScriptedBackendConfig{rules_path, seed};
  config.max_retries = max_retries;
  Provider provider(config);

  TraceHeader header;
  header.config_digest = world.digest();
  header.seed = seed;
  for (const auto& agent : world.agents) header.agents.push_back(agent.name);
  header.ticks_total = world.ticks_total();
  header.standards = world.tracked_standards;

  TraceWriter trace(trace_path, header);
  Engine engine(world, provider, trace);
  RunSummary summary = engine.run();
  trace.flush();
  return summary;
}

// ---------------------------------------------------------------------------
// Naive metrics oracle
//
// Recomputes the whole report with flat records and per-bucket rescans:
// holder lineage is resolved recursively instead of incrementally, latest
// verdicts are rescanned from the start for every bucket, and the activity
// linkage is an existence test over (tick, seq) pairs. Slow on purpose.

namespace naive {

struct EstablishRec {
  Tick tick = 0;
  std::string agent;
  std::uint64_t id = 0;
  std::string content;
  NormKind kind = NormKind::injunctive;
};

struct SynthesisRec {
  Tick tick = 0;
  std::string agent;
  std::uint64_t abstract_id = 0;
  std::vector<std::uint64_t> members;
};

struct VerdictRec {
  Tick tick = 0;
  std::string agent;
  std::string label;
  bool complies = false;
};

struct ConflictRec {
  Tick tick = 0;
  std::uint64_t seq = 0;
  std::string observer;
  std::string violator;
  std::string description;
};

struct ChatRec {
  Tick tick = 0;
  std::uint64_t seq = 0;
  std::uint64_t id = 0;
  std::string topic;
};

struct ThoughtRec {
  Tick tick = 0;
  std::uint64_t seq = 0;
  std::uint64_t id = 0;
};

struct InfoRec {
  Tick tick = 0;
  std::uint64_t seq = 0;
  std::string source;
  std::uint64_t source_id = 0;
};

}  // namespace naive

inline MetricsReport naive_metrics(const TraceFile& trace,
                                   const MetricsOptions& options) {
  std::vector<StandardSpec> all_standards;
  for (const auto& entry : trace.header.standards) {
    all_standards.push_back(StandardSpec::from_json(entry));
  }
  std::vector<StandardSpec> reported;
  if (options.standards_filter.empty()) {
    reported = all_standards;
  } else {
    for (const auto& wanted : options.standards_filter) {
      for (const auto& spec : all_standards) {
        if (spec.label == wanted) reported.push_back(spec);
      }
    }
  }

  std::vector<naive::EstablishRec> establishes;
  std::vector<naive::SynthesisRec> syntheses;
  std::vector<naive::VerdictRec> verdicts;
  std::vector<naive::ConflictRec> conflicts;
  std::vector<naive::ChatRec> chats;
  std::vector<naive::ThoughtRec> thoughts;
  std::vector<naive::InfoRec> infos;

  for (const auto& event : trace.events) {
    const json& p = event.payload;
    switch (event.kind) {
      case EventKind::norm_created:
      case EventKind::norm_qualified: {
        naive::EstablishRec rec;
        rec.tick = event.tick;
        rec.agent = p.at("agent").get<std::string>();
        rec.id = p.at("norm").at("id").get<std::uint64_t>();
        rec.content = p.at("norm").at("content").get<std::string>();
        rec.kind =
            norm_kind_from_string(p.at("norm").at("kind").get<std::string>());
        establishes.push_back(std::move(rec));
        break;
      }
      case EventKind::norm_synthesized: {
        naive::SynthesisRec rec;
        rec.tick = event.tick;
        rec.agent = p.at("agent").get<std::string>();
        rec.abstract_id = p.at("abstract").at("id").get<std::uint64_t>();
        for (const auto& member : p.at("member_ids")) {
          rec.members.push_back(member.get<std::uint64_t>());
        }
        syntheses.push_back(std::move(rec));
        break;
      }
      case EventKind::action_executed: {
        const std::string agent = p.at("agent").get<std::string>();
        for (const auto& [label, verdict] : p.at("annotations").items()) {
          const std::string token = verdict.get<std::string>();
          if (token == "complies" || token == "violates") {
            verdicts.push_back(
                {event.tick, agent, label, token == "complies"});
          }
        }
        break;
      }
      case EventKind::conflict_detected:
        conflicts.push_back({event.tick, event.seq,
                             p.at("observer").get<std::string>(),
                             p.at("violator").get<std::string>(),
                             p.at("description").get<std::string>()});
        break;
      case EventKind::conversation_held:
        chats.push_back({event.tick, event.seq,
                         p.at("conversation_id").get<std::uint64_t>(),
                         p.at("topic").get<std::string>()});
        break;
      case EventKind::thought_generated:
        thoughts.push_back(
            {event.tick, event.seq, p.at("thought_id").get<std::uint64_t>()});
        break;
      case EventKind::norm_info_identified:
        infos.push_back({event.tick, event.seq,
                         p.at("source").get<std::string>(),
                         p.at("source_id").get<std::uint64_t>()});
        break;
      default:
        break;
    }
  }

  MetricsReport report;
  report.bucket_ticks = options.bucket_ticks;
  report.theta = options.theta;
  report.agent_count = trace.header.agents.size();
  report.standards = reported;
  const Tick total = trace.header.ticks_total;
  const std::size_t bucket_count =
      (total + options.bucket_ticks - 1) / options.bucket_ticks;
  for (std::size_t b = 0; b < bucket_count; ++b) {
    report.bucket_starts.push_back(static_cast<Tick>(b) * options.bucket_ticks);
  }
  report.conflicts.assign(bucket_count, 0);
  report.normative_chats.assign(bucket_count, 0);
  report.normative_thoughts.assign(bucket_count, 0);
  for (const auto& spec : reported) {
    report.acceptance[spec.label].assign(bucket_count, 0.0);
    report.adherence[spec.label].assign(bucket_count, 0.0);
  }

  auto direct_labels = [&](const std::string& content, NormKind kind) {
    std::set<std::string> labels;
    for (const auto& spec : all_standards) {
      if (spec.matches(content, kind)) labels.insert(spec.label);
    }
    return labels;
  };

  // Conflicts: one per unique (observer, violator, standard) per bucket; a
  // description that names no tracked standard still counts, under the
  // empty label.
  for (std::size_t b = 0; b < bucket_count; ++b) {
    std::set<std::string> keys;
    for (const auto& rec : conflicts) {
      if (rec.tick / options.bucket_ticks != b) continue;
      std::string label;
      for (const auto& spec : all_standards) {
        if (spec.mentioned_in(rec.description)) {
          label = spec.label;
          break;
        }
      }
      keys.insert(rec.observer + "\x1f" + rec.violator + "\x1f" + label);
    }
    report.conflicts[b] = keys.size();
  }

  // Chats: counted when the topic restates a conflict raised earlier in the
  // same tick, or when identified information referenced the conversation
  // later in the same tick.
  for (const auto& chat : chats) {
    const std::size_t b = chat.tick / options.bucket_ticks;
    bool counted = false;
    for (const auto& rec : conflicts) {
      if (rec.tick == chat.tick && rec.seq < chat.seq &&
          rec.description == chat.topic) {
        counted = true;
        break;
      }
    }
    if (!counted) {
      for (const auto& rec : infos) {
        if (rec.tick == chat.tick && rec.seq > chat.seq &&
            rec.source == "conversation" && rec.source_id == chat.id) {
          counted = true;
          break;
        }
      }
    }
    if (counted && b < bucket_count) ++report.normative_chats[b];
  }

  // Thoughts: counted when identified information referenced the thought
  // later in the same tick.
  for (const auto& thought : thoughts) {
    const std::size_t b = thought.tick / options.bucket_ticks;
    bool counted = false;
    for (const auto& rec : infos) {
      if (rec.tick == thought.tick && rec.seq > thought.seq &&
          rec.source == "observation" && rec.source_id == thought.id) {
        counted = true;
        break;
      }
    }
    if (counted && b < bucket_count) ++report.normative_thoughts[b];
  }

  // Acceptance and adherence: rebuild the state per bucket end from scratch.
  for (std::size_t b = 0; b < bucket_count; ++b) {
    const Tick end = static_cast<Tick>(b + 1) * options.bucket_ticks;

    for (const auto& spec : reported) {
      std::size_t holding = 0;
      std::size_t adhering = 0;
      for (const auto& agent : trace.header.agents) {
        // Resolve the agent's active norms and each norm's effective labels
        // by recursive lineage over the records up to the bucket end.
        std::map<std::uint64_t, std::set<std::string>> direct;
        std::map<std::uint64_t, std::vector<std::uint64_t>> members_of;
        std::set<std::uint64_t> active;
        for (const auto& rec : establishes) {
          if (rec.tick >= end || rec.agent != agent) continue;
          if (direct.find(rec.id) == direct.end()) {
            direct[rec.id] = direct_labels(rec.content, rec.kind);
          }
          active.insert(rec.id);
        }
        for (const auto& rec : syntheses) {
          if (rec.tick >= end || rec.agent != agent) continue;
          members_of[rec.abstract_id] = rec.members;
          for (const auto member : rec.members) active.erase(member);
        }
        std::function<bool(std::uint64_t, const std::string&,
                           std::set<std::uint64_t>&)>
            carries = [&](std::uint64_t id, const std::string& label,
                          std::set<std::uint64_t>& visited) {
              if (!visited.insert(id).second) return false;
              auto it = direct.find(id);
              if (it != direct.end() && it->second.count(label) != 0) {
                return true;
              }
              auto lineage = members_of.find(id);
              if (lineage == members_of.end()) return false;
              for (const auto member : lineage->second) {
                if (carries(member, label, visited)) return true;
              }
              return false;
            };
        bool holds = false;
        for (const auto id : active) {
          std::set<std::uint64_t> visited;
          if (carries(id, spec.label, visited)) {
            holds = true;
            break;
          }
        }
        if (holds) ++holding;

        bool have_verdict = false;
        bool latest = false;
        for (const auto& rec : verdicts) {
          if (rec.tick >= end || rec.agent != agent ||
              rec.label != spec.label) {
            continue;
          }
          have_verdict = true;
          latest = rec.complies;
        }
        if (have_verdict && latest) ++adhering;
      }
      const double denominator =
          report.agent_count == 0 ? 1.0
                                  : static_cast<double>(report.agent_count);
      report.acceptance[spec.label][b] =
          static_cast<double>(holding) / denominator;
      report.adherence[spec.label][b] =
          static_cast<double>(adhering) / denominator;
    }
  }

  for (const auto& spec : reported) {
    std::optional<Tick> when;
    for (std::size_t b = 0; b < bucket_count; ++b) {
      if (report.acceptance[spec.label][b] >= options.theta &&
          report.adherence[spec.label][b] >= options.theta) {
        when = report.bucket_starts[b] + options.bucket_ticks;
        break;
      }
    }
    report.emergence_tick[spec.label] = when;
  }
  return report;
}

}  // namespace normsim::test
