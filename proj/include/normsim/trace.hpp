#pragma once

#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "normsim/norm.hpp"

namespace normsim {

inline constexpr int kTraceSchemaVersion = 1;

enum class EventKind {
  observation,
  thought_generated,
  conversation_held,
  conflict_detected,
  norm_created,
  norm_info_identified,
  sanity_check_result,
  norm_qualified,
  norm_synthesized,
  plan_generated,
  action_executed,
  provider_call,
  warning,
};

inline constexpr int kEventKindCount = 13;

std::string to_string(EventKind kind);
EventKind event_kind_from_string(const std::string& token);

struct SimEvent {
  std::uint64_t seq = 0;
  Tick tick = 0;
  EventKind kind = EventKind::conflict_detected;
  nlohmann::json payload;

  nlohmann::json to_json() const;
  static SimEvent from_json(const nlohmann::json& value);
};

// First line of every trace file. Carries enough of the world setup that
// the analysis layer can work from the log alone.
struct TraceHeader {
  int schema_version = kTraceSchemaVersion;
  std::string config_digest;
  std::uint64_t seed = 0;
  std::vector<std::string> agents;   // names in agent-index order
  Tick ticks_total = 0;
  nlohmann::json standards = nlohmann::json::array();

  nlohmann::json to_json() const;
  static TraceHeader from_json(const nlohmann::json& value);
};

// Serializes a live norm into the snapshot form events carry.
nlohmann::json norm_to_json(const Norm& norm);

// Append-only event log, one JSON object per line, header first.
class TraceWriter {
 public:
  TraceWriter(const std::string& path, const TraceHeader& header);
  ~TraceWriter();

  TraceWriter(const TraceWriter&) = delete;
  TraceWriter& operator=(const TraceWriter&) = delete;

  // Appends one event, assigning the next sequence number. Ticks must be
  // non-decreasing across calls.
  std::uint64_t append(Tick tick, EventKind kind, nlohmann::json payload);

  void flush();

  std::uint64_t events_written() const { return next_seq_; }

 private:
  std::ofstream out_;
  std::string path_;
  std::uint64_t next_seq_ = 0;
  Tick last_tick_ = 0;
  bool any_event_ = false;
};

// A fully loaded trace: header plus all events, in file order.
struct TraceFile {
  TraceHeader header;
  std::vector<SimEvent> events;

  static TraceFile load(const std::string& path);

  // Structural integrity pass: sequence numbers, tick ordering, payload
  // schemas, and lifecycle bookkeeping (a qualification needs a prior
  // passed check result, synthesis members must already be established
  // and never reused after supersession, identified information must
  // reference a conversation or thought already on record, and check
  // steps must run in order and stop at the first failure).
  void validate() const;

  // Re-emits the trace in canonical serialized form.
  void write_to(std::ostream& out) const;
};

}  // namespace normsim
