#include "normsim/metrics.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "normsim/errors.hpp"

namespace normsim {

namespace {

using nlohmann::json;

bool contains_all(const std::string& normalized_text,
                  const std::vector<std::string>& terms) {
  for (const auto& term : terms) {
    if (normalized_text.find(normalize_content(term)) == std::string::npos) {
      return false;
    }
  }
  return true;
}

bool contains_any(const std::string& normalized_text,
                  const std::vector<std::string>& terms) {
  for (const auto& term : terms) {
    if (normalized_text.find(normalize_content(term)) != std::string::npos) {
      return true;
    }
  }
  return false;
}

// Incremental holder bookkeeping for one agent: which norm ids are active
// and which standards each of them speaks for (directly or inherited).
struct HolderState {
  std::map<std::uint64_t, std::set<std::string>> carried;  // id -> labels
  std::set<std::uint64_t> active;
  std::map<std::string, int> active_count;  // label -> active carriers

  void establish(std::uint64_t id, const std::set<std::string>& labels) {
    if (active.count(id) != 0) return;
    carried[id].insert(labels.begin(), labels.end());
    active.insert(id);
    for (const auto& label : labels) ++active_count[label];
  }

  void extend(std::uint64_t id, const std::set<std::string>& labels) {
    auto& known = carried[id];
    for (const auto& label : labels) {
      if (known.insert(label).second && active.count(id) != 0) {
        ++active_count[label];
      }
    }
  }

  void supersede(std::uint64_t id) {
    if (active.erase(id) == 0) return;
    for (const auto& label : carried[id]) {
      if (--active_count[label] < 0) active_count[label] = 0;
    }
  }

  bool holds(const std::string& label) const {
    auto it = active_count.find(label);
    return it != active_count.end() && it->second > 0;
  }
};

std::string sanitize_for_filename(const std::string& label) {
  std::string out;
  for (char c : label) {
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
        (c >= '0' && c <= '9')) {
      out += c;
    } else {
      out += '_';
    }
  }
  return out;
}

std::string format_proportion(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.6f", value);
  return buffer;
}

}  // namespace

StandardSpec StandardSpec::from_json(const json& value) {
  StandardSpec spec;
  spec.label = value.at("label").get<std::string>();
  spec.content = value.value("content", "");
  spec.kind = norm_kind_from_string(value.at("kind").get<std::string>());
  for (const auto& term : value.at("matcher_terms")) {
    spec.matcher_terms.push_back(term.get<std::string>());
  }
  if (value.contains("opposite_terms")) {
    for (const auto& term : value["opposite_terms"]) {
      spec.opposite_terms.push_back(term.get<std::string>());
    }
  }
  return spec;
}

bool StandardSpec::matches(const std::string& norm_content,
                           NormKind norm_kind) const {
  if (norm_kind != kind) return false;
  const std::string normalized = normalize_content(norm_content);
  if (contains_any(normalized, opposite_terms)) return false;
  return contains_all(normalized, matcher_terms);
}

bool StandardSpec::mentioned_in(const std::string& text) const {
  const std::string normalized = normalize_content(text);
  if (contains_any(normalized, opposite_terms)) return false;
  return contains_all(normalized, matcher_terms);
}

MetricsReport compute_metrics(const TraceFile& trace,
                              const MetricsOptions& options) {
  if (options.bucket_ticks < 1) {
    throw ConfigError("metrics bucket size must be at least one tick");
  }
  MetricsReport report;
  report.bucket_ticks = options.bucket_ticks;
  report.theta = options.theta;
  report.agent_count = trace.header.agents.size();
  std::vector<StandardSpec> all_standards;
  for (const auto& entry : trace.header.standards) {
    all_standards.push_back(StandardSpec::from_json(entry));
  }
  if (options.standards_filter.empty()) {
    report.standards = all_standards;
  } else {
    for (const auto& wanted : options.standards_filter) {
      bool found = false;
      for (const auto& spec : all_standards) {
        if (spec.label == wanted) {
          report.standards.push_back(spec);
          found = true;
          break;
        }
      }
      if (!found) {
        std::string known;
        for (const auto& spec : all_standards) {
          if (!known.empty()) known += ", ";
          known += "'" + spec.label + "'";
        }
        throw ConfigError("unknown standard '" + wanted +
                          "'; the trace tracks: " + known);
      }
    }
  }

  const Tick total = trace.header.ticks_total;
  const std::size_t bucket_count =
      (total + options.bucket_ticks - 1) / options.bucket_ticks;
  for (std::size_t b = 0; b < bucket_count; ++b) {
    report.bucket_starts.push_back(static_cast<Tick>(b) *
                                   options.bucket_ticks);
  }
  report.conflicts.assign(bucket_count, 0);
  report.normative_chats.assign(bucket_count, 0);
  report.normative_thoughts.assign(bucket_count, 0);
  for (const auto& spec : report.standards) {
    report.acceptance[spec.label].assign(bucket_count, 0.0);
    report.adherence[spec.label].assign(bucket_count, 0.0);
  }

  // Per-agent live state, advanced event by event. Holder bookkeeping uses
  // every tracked standard in the header so that lineage stays correct even
  // when the report is filtered.
  std::map<std::string, HolderState> holders;
  // agent -> label -> latest applicable verdict (true = complies).
  std::map<std::string, std::map<std::string, bool>> latest_verdict;
  // Conflict dedup per bucket.
  std::set<std::string> conflict_keys;
  std::size_t current_bucket = 0;

  // Same-tick linkage state for the activity series.
  Tick linkage_tick = 0;
  std::set<std::string> tick_conflict_descriptions;
  std::map<std::uint64_t, std::size_t> pending_conversations;  // id -> bucket
  std::map<std::uint64_t, std::size_t> pending_thoughts;       // id -> bucket

  auto labels_for = [&](const std::string& content, NormKind kind) {
    std::set<std::string> labels;
    for (const auto& spec : all_standards) {
      if (spec.matches(content, kind)) labels.insert(spec.label);
    }
    return labels;
  };

  auto snapshot_bucket = [&](std::size_t bucket) {
    for (const auto& spec : report.standards) {
      std::size_t holding = 0;
      std::size_t adhering = 0;
      for (const auto& name : trace.header.agents) {
        auto holder = holders.find(name);
        if (holder != holders.end() && holder->second.holds(spec.label)) {
          ++holding;
        }
        auto verdicts = latest_verdict.find(name);
        if (verdicts != latest_verdict.end()) {
          auto verdict = verdicts->second.find(spec.label);
          if (verdict != verdicts->second.end() && verdict->second) {
            ++adhering;
          }
        }
      }
      const double denominator =
          report.agent_count == 0 ? 1.0 : static_cast<double>(report.agent_count);
      report.acceptance[spec.label][bucket] =
          static_cast<double>(holding) / denominator;
      report.adherence[spec.label][bucket] =
          static_cast<double>(adhering) / denominator;
    }
  };

  auto advance_to = [&](std::size_t bucket) {
    while (current_bucket < bucket && current_bucket < bucket_count) {
      snapshot_bucket(current_bucket);
      ++current_bucket;
      conflict_keys.clear();
    }
  };

  for (const auto& event : trace.events) {
    const std::size_t bucket =
        static_cast<std::size_t>(event.tick / options.bucket_ticks);
    advance_to(bucket);
    if (event.tick != linkage_tick) {
      linkage_tick = event.tick;
      tick_conflict_descriptions.clear();
      pending_conversations.clear();
      pending_thoughts.clear();
    }
    const json& payload = event.payload;
    switch (event.kind) {
      case EventKind::conflict_detected: {
        const std::string description =
            payload.value("description", std::string());
        tick_conflict_descriptions.insert(description);
        std::string label;
        for (const auto& spec : all_standards) {
          if (spec.mentioned_in(description)) {
            label = spec.label;
            break;
          }
        }
        const std::string key = payload.value("observer", std::string()) +
                                "\x1f" +
                                payload.value("violator", std::string()) +
                                "\x1f" + label;
        if (conflict_keys.insert(key).second && bucket < bucket_count) {
          ++report.conflicts[bucket];
        }
        break;
      }
      case EventKind::conversation_held: {
        if (bucket >= bucket_count) break;
        const std::string topic = payload.value("topic", std::string());
        if (tick_conflict_descriptions.count(topic) != 0) {
          ++report.normative_chats[bucket];
        } else {
          pending_conversations[payload.value("conversation_id",
                                              std::uint64_t{0})] = bucket;
        }
        break;
      }
      case EventKind::thought_generated: {
        if (bucket >= bucket_count) break;
        pending_thoughts[payload.value("thought_id", std::uint64_t{0})] =
            bucket;
        break;
      }
      case EventKind::norm_info_identified: {
        const std::uint64_t source_id =
            payload.value("source_id", std::uint64_t{0});
        if (payload.value("source", "") == std::string("observation")) {
          auto pending = pending_thoughts.find(source_id);
          if (pending != pending_thoughts.end()) {
            ++report.normative_thoughts[pending->second];
            pending_thoughts.erase(pending);
          }
        } else {
          auto pending = pending_conversations.find(source_id);
          if (pending != pending_conversations.end()) {
            ++report.normative_chats[pending->second];
            pending_conversations.erase(pending);
          }
        }
        break;
      }
      case EventKind::norm_created:
      case EventKind::norm_qualified: {
        const std::string agent = payload.value("agent", std::string());
        const json& norm = payload.at("norm");
        const std::uint64_t id = norm.at("id").get<std::uint64_t>();
        const auto labels =
            labels_for(norm.at("content").get<std::string>(),
                       norm_kind_from_string(norm.at("kind").get<std::string>()));
        holders[agent].establish(id, labels);
        break;
      }
      case EventKind::norm_synthesized: {
        const std::string agent = payload.value("agent", std::string());
        HolderState& state = holders[agent];
        const json& abstract = payload.at("abstract");
        const std::uint64_t abstract_id = abstract.at("id").get<std::uint64_t>();
        std::set<std::string> inherited;
        for (const auto& member : payload.at("member_ids")) {
          const std::uint64_t member_id = member.get<std::uint64_t>();
          const auto& labels = state.carried[member_id];
          inherited.insert(labels.begin(), labels.end());
        }
        state.extend(abstract_id, inherited);
        for (const auto& member : payload.at("member_ids")) {
          state.supersede(member.get<std::uint64_t>());
        }
        break;
      }
      case EventKind::action_executed: {
        const std::string agent = payload.value("agent", std::string());
        const json& annotations = payload.at("annotations");
        for (const auto& [label, verdict] : annotations.items()) {
          const std::string token = verdict.get<std::string>();
          if (token == "complies") {
            latest_verdict[agent][label] = true;
          } else if (token == "violates") {
            latest_verdict[agent][label] = false;
          }
          // not_applicable leaves the previous verdict standing
        }
        break;
      }
      default:
        break;
    }
  }
  advance_to(bucket_count);

  for (const auto& spec : report.standards) {
    const auto& acceptance = report.acceptance[spec.label];
    const auto& adherence = report.adherence[spec.label];
    std::optional<Tick> when;
    for (std::size_t b = 0; b < bucket_count; ++b) {
      if (acceptance[b] >= options.theta && adherence[b] >= options.theta) {
        when = report.bucket_starts[b] + options.bucket_ticks;
        break;
      }
    }
    report.emergence_tick[spec.label] = when;
  }
  return report;
}

std::vector<std::string> write_metrics_csv(const MetricsReport& report,
                                           const std::string& directory) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) {
    throw TraceError("cannot create metrics directory: " + directory + ": " +
                     ec.message());
  }

  std::vector<std::string> written;
  auto open_csv = [&](const std::string& filename) {
    const std::string path = directory + "/" + filename;
    std::ofstream out(path, std::ios::out | std::ios::trunc);
    if (!out.good()) {
      throw TraceError("cannot write metrics file: " + path);
    }
    written.push_back(path);
    return out;
  };

  auto write_counts = [&](const std::string& filename,
                          const std::vector<std::uint64_t>& series) {
    auto out = open_csv(filename);
    out << "bucket_start_tick,value\n";
    for (std::size_t b = 0; b < series.size(); ++b) {
      out << report.bucket_starts[b] << ',' << series[b] << '\n';
    }
  };
  auto write_proportions = [&](const std::string& filename,
                               const std::vector<double>& series) {
    auto out = open_csv(filename);
    out << "bucket_start_tick,value\n";
    for (std::size_t b = 0; b < series.size(); ++b) {
      out << report.bucket_starts[b] << ',' << format_proportion(series[b])
          << '\n';
    }
  };

  write_counts("conflicts.csv", report.conflicts);
  {
    auto out = open_csv("activity.csv");
    out << "bucket_start_tick,chats,thoughts\n";
    for (std::size_t b = 0; b < report.bucket_starts.size(); ++b) {
      out << report.bucket_starts[b] << ',' << report.normative_chats[b]
          << ',' << report.normative_thoughts[b] << '\n';
    }
  }
  for (const auto& spec : report.standards) {
    write_proportions("acceptance_" + sanitize_for_filename(spec.label) + ".csv",
                      report.acceptance.at(spec.label));
    write_proportions("adherence_" + sanitize_for_filename(spec.label) + ".csv",
                      report.adherence.at(spec.label));
  }
  auto out = open_csv("emergence.csv");
  out << "standard,emergence_tick\n";
  for (const auto& spec : report.standards) {
    out << spec.label << ',';
    const auto& when = report.emergence_tick.at(spec.label);
    if (when.has_value()) {
      out << *when;
    } else {
      out << "none";
    }
    out << '\n';
  }
  return written;
}

}  // namespace normsim
