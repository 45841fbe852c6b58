#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "normsim/norm.hpp"
#include "normsim/trace.hpp"

namespace normsim {

// A community standard as recorded in the trace header: how to recognize
// norms about it (stem terms that must all appear in the normalized norm
// text, plus kind agreement) and the label used in action annotations.
// Opposite terms act as a negative filter: text mentioning any of them is
// never a match.
struct StandardSpec {
  std::string label;
  std::string content;
  NormKind kind = NormKind::injunctive;
  std::vector<std::string> matcher_terms;
  std::vector<std::string> opposite_terms;

  static StandardSpec from_json(const nlohmann::json& value);

  // True when the norm text-and-kind pair is about this standard.
  bool matches(const std::string& norm_content, NormKind norm_kind) const;

  // True when free text (a conflict description) mentions the standard.
  bool mentioned_in(const std::string& text) const;
};

struct MetricsOptions {
  int bucket_ticks = 120;
  double theta = 0.9;  // emergence threshold for acceptance and adherence
  // When non-empty, only these standards are reported; unknown labels are
  // a configuration error.
  std::vector<std::string> standards_filter;
};

// Bucketed time series over one run. Acceptance and adherence are
// end-of-bucket snapshots; counts cover events inside the bucket.
struct MetricsReport {
  int bucket_ticks = 0;
  double theta = 0.0;
  std::size_t agent_count = 0;
  std::vector<Tick> bucket_starts;
  std::vector<StandardSpec> standards;

  // Unique (observer, violator, standard) conflicts per bucket.
  std::vector<std::uint64_t> conflicts;
  // Norm-bearing conversations per bucket: a conversation counts when its
  // topic restates a conflict raised the same tick, or when either side
  // extracted normative information from it the same tick.
  std::vector<std::uint64_t> normative_chats;
  // Thoughts that yielded normative information the same tick, per bucket.
  std::vector<std::uint64_t> normative_thoughts;
  // Fraction of agents holding a norm about the standard (directly or
  // through synthesis lineage), per standard label.
  std::map<std::string, std::vector<double>> acceptance;
  // Fraction of agents whose latest applicable action complies, per label.
  std::map<std::string, std::vector<double>> adherence;
  // First bucket end at which acceptance and adherence both reach theta.
  std::map<std::string, std::optional<Tick>> emergence_tick;
};

// Single pass over the events; works from the trace alone.
MetricsReport compute_metrics(const TraceFile& trace,
                              const MetricsOptions& options);

// Writes the report into `directory` (created if missing):
// conflicts.csv, activity.csv, acceptance_<label>.csv,
// adherence_<label>.csv and emergence.csv. Count series carry integer
// values, proportions are printed with six decimals; single-series files
// start with "bucket_start_tick,value", activity.csv with
// "bucket_start_tick,chats,thoughts".
std::vector<std::string> write_metrics_csv(const MetricsReport& report,
                                           const std::string& directory);

}  // namespace normsim
