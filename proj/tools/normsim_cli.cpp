#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "normsim/engine.hpp"
#include "normsim/errors.hpp"
#include "normsim/metrics.hpp"
#include "normsim/provider.hpp"
#include "normsim/trace.hpp"
#include "normsim/world_config.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitProvider = 3;
constexpr int kExitStorage = 4;
constexpr int kExitBadTrace = 5;

struct RunArgs {
  std::string config_path;
  std::string provider_kind;  // empty = take the config's choice
  std::string rules_path;
  std::string trace_path = "trace.jsonl";
  std::uint64_t seed = 1;
  int max_retries = 3;
  std::string base_url;
  std::string model;
  double temperature = 0.7;
  long timeout_ms = 30000;
  std::string api_key_env = "NORMSIM_API_KEY";

  // Which flags were given explicitly (config defaults fill the rest).
  bool rules_given = false;
  bool retries_given = false;
  bool base_url_given = false;
  bool model_given = false;
  bool temperature_given = false;
  bool timeout_given = false;
  bool api_key_env_given = false;
};

int do_run(const RunArgs& args) {
  normsim::WorldConfig world;
  try {
    world = normsim::WorldConfig::load(args.config_path);
  } catch (const normsim::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  // The config's provider section supplies defaults; explicit flags win.
  const nlohmann::json& defaults = world.provider;
  const std::string backend =
      !args.provider_kind.empty()
          ? args.provider_kind
          : defaults.value("kind", std::string("scripted"));

  normsim::ProviderConfig provider_config;
  provider_config.max_retries =
      args.retries_given ? args.max_retries
                         : defaults.value("max_retries", args.max_retries);
  if (backend == "scripted") {
    provider_config.backend = normsim::ProviderConfig::BackendKind::scripted;
    normsim::ScriptedBackendConfig scripted;
    scripted.rule_table_path =
        args.rules_given ? args.rules_path
                         : defaults.value("rules", args.rules_path);
    scripted.seed = args.seed;
    provider_config.scripted = scripted;
  } else if (backend == "remote") {
    provider_config.backend = normsim::ProviderConfig::BackendKind::remote;
    normsim::RemoteBackendConfig remote;
    remote.base_url = args.base_url_given
                          ? args.base_url
                          : defaults.value("base_url", args.base_url);
    remote.model =
        args.model_given ? args.model : defaults.value("model", args.model);
    remote.temperature =
        args.temperature_given ? args.temperature
                               : defaults.value("temperature", args.temperature);
    remote.timeout_ms =
        args.timeout_given
            ? static_cast<int>(args.timeout_ms)
            : defaults.value("timeout_ms", static_cast<int>(args.timeout_ms));
    remote.api_key_env =
        args.api_key_env_given ? args.api_key_env
                               : defaults.value("api_key_env", args.api_key_env);
    provider_config.remote = remote;
  } else {
    std::cerr << "error: unknown provider '" << backend
              << "' (expected scripted or remote)\n";
    return kExitUsage;
  }

  std::unique_ptr<normsim::Provider> provider;
  try {
    provider_config.validate();
    provider = std::make_unique<normsim::Provider>(provider_config);
  } catch (const normsim::Error& e) {
    std::cerr << "error: provider setup failed: " << e.what() << '\n';
    return kExitProvider;
  }

  try {
    normsim::TraceHeader header;
    header.config_digest = world.digest();
    header.seed = args.seed;
    for (const auto& agent : world.agents) header.agents.push_back(agent.name);
    header.ticks_total = world.ticks_total();
    header.standards = world.tracked_standards;

    normsim::TraceWriter trace(args.trace_path, header);
    normsim::Engine engine(world, *provider, trace);

    const auto started = std::chrono::steady_clock::now();
    const normsim::RunSummary summary = engine.run();
    trace.flush();
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                             std::chrono::steady_clock::now() - started)
                             .count();

    std::cout << "run complete: " << summary.events << " events over "
              << summary.ticks << " ticks; qualified norms:";
    bool first = true;
    for (const auto& [name, count] : summary.qualified_counts) {
      std::cout << (first ? " " : ", ") << name << '=' << count;
      first = false;
    }
    std::cout << '\n';
    std::cerr << "trace=" << args.trace_path << " elapsed=" << elapsed
              << " ms\n";
    return kExitOk;
  } catch (const normsim::TraceError& e) {
    std::cerr << "error: trace storage failed: " << e.what() << '\n';
    return kExitStorage;
  } catch (const normsim::ProviderFailure& e) {
    std::cerr << "error: provider failed during setup: " << e.what() << '\n';
    return kExitProvider;
  } catch (const normsim::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}

int do_analyze(const std::string& trace_path, const std::string& out_dir,
               int bucket, double theta,
               const std::vector<std::string>& standards) {
  try {
    const normsim::TraceFile trace = normsim::TraceFile::load(trace_path);
    trace.validate();
    normsim::MetricsOptions options;
    options.bucket_ticks = bucket;
    options.theta = theta;
    options.standards_filter = standards;
    const normsim::MetricsReport report =
        normsim::compute_metrics(trace, options);
    const auto files = normsim::write_metrics_csv(report, out_dir);
    std::cout << "analyzed " << trace.events.size() << " events into "
              << files.size() << " files under " << out_dir << '\n';
    for (const auto& spec : report.standards) {
      const auto& when = report.emergence_tick.at(spec.label);
      std::cout << "emergence of '" << spec.label << "': ";
      if (when.has_value()) {
        std::cout << *when << '\n';
      } else {
        std::cout << "not reached\n";
      }
    }
    return kExitOk;
  } catch (const normsim::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const normsim::TraceError& e) {
    std::cerr << "error: invalid trace: " << e.what() << '\n';
    return kExitBadTrace;
  }
}

std::string clock_label(normsim::Tick tick) {
  const unsigned long long day = tick / 1440;
  const int minute = static_cast<int>(tick % 1440);
  char buffer[48];
  std::snprintf(buffer, sizeof(buffer), "t=%6llu day %llu %02d:%02d",
                static_cast<unsigned long long>(tick), day, minute / 60,
                minute % 60);
  return buffer;
}

std::string minute_label(int minute) {
  char buffer[16];
  std::snprintf(buffer, sizeof(buffer), "%02d:%02d", (minute / 60) % 24,
                minute % 60);
  return buffer;
}

// True when the event mentions `name` in any participant role.
bool involves(const nlohmann::json& payload, const std::string& name) {
  for (const char* key : {"agent", "observer", "violator", "initiator",
                          "partner"}) {
    if (payload.contains(key) && payload[key].is_string() &&
        payload[key].get<std::string>() == name) {
      return true;
    }
  }
  return false;
}

void print_event(std::ostream& out, const normsim::SimEvent& event) {
  using normsim::EventKind;
  const nlohmann::json& p = event.payload;
  const std::string when = clock_label(event.tick);
  switch (event.kind) {
    case EventKind::observation: {
      const auto& seen = p.at("observations");
      out << when << "  " << p.value("agent", "") << " looks back over "
          << seen.size() << " observed moment"
          << (seen.size() == 1 ? "" : "s");
      if (!seen.empty()) {
        const auto& last = seen.back();
        out << " (latest: " << last.value("actor", "") << " — "
            << last.value("description", "") << ")";
      }
      out << '\n';
      break;
    }
    case EventKind::thought_generated:
      out << when << "  " << p.value("agent", "") << " thinks: \""
          << p.value("text", "") << "\"\n";
      break;
    case EventKind::conversation_held: {
      out << when << "  " << p.value("initiator", "") << " talks with "
          << p.value("partner", "") << " about: " << p.value("topic", "")
          << '\n';
      for (const auto& turn : p.at("transcript")) {
        out << "        " << turn.value("speaker", "") << ": "
            << turn.value("text", "") << '\n';
      }
      break;
    }
    case EventKind::conflict_detected:
      out << when << "  " << p.value("observer", "")
          << " sees a norm conflict (violator: " << p.value("violator", "")
          << "): " << p.value("description", "") << '\n';
      break;
    case EventKind::norm_created: {
      const auto& norm = p.at("norm");
      out << when << "  " << p.value("agent", "")
          << " starts out holding norm #" << norm.value("id", 0) << ": \""
          << norm.value("content", "") << "\" (" << norm.value("kind", "")
          << ", utility " << norm.value("utility", 0) << ")\n";
      break;
    }
    case EventKind::norm_info_identified:
      out << when << "  " << p.value("agent", "")
          << " picks up normative information from a "
          << p.value("source", "") << ": \"" << p.value("content", "")
          << "\" (" << p.value("kind", "") << ", utility "
          << p.value("utility", 0) << ")\n";
      break;
    case EventKind::sanity_check_result: {
      out << when << "  " << p.value("agent", "") << " checks candidate #"
          << p.value("candidate_id", 0) << " \""
          << p.at("candidate").value("content", "") << "\":";
      for (const auto& step : p.at("steps")) {
        out << ' ' << step.value("step", "") << '='
            << (step.value("outcome", false) ? "pass" : "FAIL");
      }
      out << " -> " << (p.value("passed", false) ? "accepted" : "rejected")
          << '\n';
      break;
    }
    case EventKind::norm_qualified: {
      const auto& norm = p.at("norm");
      out << when << "  " << p.value("agent", "") << " internalizes norm #"
          << norm.value("id", 0) << ": \"" << norm.value("content", "")
          << "\" (" << norm.value("kind", "") << ", utility "
          << norm.value("utility", 0) << ")\n";
      break;
    }
    case EventKind::norm_synthesized: {
      const auto& abstract = p.at("abstract");
      out << when << "  " << p.value("agent", "") << " folds norms [";
      const auto& members = p.at("member_ids");
      for (std::size_t i = 0; i < members.size(); ++i) {
        if (i != 0) out << ", ";
        out << members[i].get<std::uint64_t>();
      }
      out << "] into #" << abstract.value("id", 0) << ": \""
          << abstract.value("content", "") << "\" (utility "
          << abstract.value("utility", 0) << ", theme "
          << p.value("theme", "") << ")\n";
      break;
    }
    case EventKind::plan_generated: {
      out << when << "  " << p.value("agent", "") << " plans day "
          << p.value("day", 0) << ":\n";
      for (const auto& plan : p.at("plans")) {
        out << "        " << minute_label(plan.value("start_minute", 0))
            << "-" << minute_label(plan.value("end_minute", 0)) << "  "
            << plan.value("description", "") << '\n';
      }
      break;
    }
    case EventKind::action_executed: {
      out << when << "  " << p.value("agent", "") << " acts: "
          << p.value("description", "") << " ("
          << p.value("duration_minutes", 0) << " min";
      if (p.contains("location") && p["location"].is_string()) {
        out << " @ " << p["location"].get<std::string>();
      }
      out << ")";
      for (const auto& [label, verdict] : p.at("annotations").items()) {
        const std::string token = verdict.get<std::string>();
        if (token == "complies") {
          out << " [complies: " << label << "]";
        } else if (token == "violates") {
          out << " [violates: " << label << "]";
        }
      }
      out << '\n';
      break;
    }
    case EventKind::warning:
      out << when << "  warning";
      if (p.contains("agent") && p["agent"].is_string()) {
        out << " (" << p["agent"].get<std::string>() << ")";
      }
      out << ": " << p.value("message", "") << '\n';
      break;
    case EventKind::provider_call:
      break;  // transport noise; not part of the story
  }
}

int do_replay(const std::string& trace_path, const std::string& out_path,
              const std::string& agent_filter) {
  normsim::TraceFile trace;
  try {
    trace = normsim::TraceFile::load(trace_path);
    trace.validate();
  } catch (const normsim::TraceError& e) {
    std::cerr << "error: invalid trace: " << e.what() << '\n';
    return kExitBadTrace;
  }

  if (!agent_filter.empty() &&
      std::find(trace.header.agents.begin(), trace.header.agents.end(),
                agent_filter) == trace.header.agents.end()) {
    std::cerr << "error: unknown agent '" << agent_filter
              << "'; this run involved:";
    for (const auto& name : trace.header.agents) {
      std::cerr << ' ' << name << ';';
    }
    std::cerr << '\n';
    return kExitUsage;
  }

  std::ofstream file;
  if (!out_path.empty()) {
    file.open(out_path, std::ios::out | std::ios::trunc);
    if (!file.good()) {
      std::cerr << "error: cannot write " << out_path << '\n';
      return kExitStorage;
    }
  }
  std::ostream& out = out_path.empty() ? std::cout : file;

  std::size_t shown = 0;
  for (const auto& event : trace.events) {
    if (event.kind == normsim::EventKind::provider_call) continue;
    if (!agent_filter.empty() && !involves(event.payload, agent_filter)) {
      continue;
    }
    print_event(out, event);
    ++shown;
  }
  if (!out_path.empty() && !file.good()) {
    std::cerr << "error: failed writing " << out_path << '\n';
    return kExitStorage;
  }
  std::cerr << "replayed " << shown << " of " << trace.events.size()
            << " events\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-agent social-norm simulation"};
  app.require_subcommand(1);

  RunArgs run_args;
  CLI::App* run = app.add_subcommand("run", "simulate and write a trace");
  run->add_option("--config", run_args.config_path, "world config JSON")
      ->required();
  run->add_option("--provider", run_args.provider_kind,
                  "operation provider: scripted or remote (overrides the "
                  "config)");
  run->add_option("--rules", run_args.rules_path,
                  "rule table for the scripted provider");
  run->add_option("--out", run_args.trace_path, "trace output path");
  run->add_option("--seed", run_args.seed, "run seed");
  run->add_option("--max-retries", run_args.max_retries,
                  "extra attempts after a malformed reply");
  run->add_option("--base-url", run_args.base_url,
                  "remote endpoint, e.g. http://host:8000/v1");
  run->add_option("--model", run_args.model, "remote model name");
  run->add_option("--temperature", run_args.temperature, "remote temperature");
  run->add_option("--timeout-ms", run_args.timeout_ms, "remote timeout");
  run->add_option("--api-key-env", run_args.api_key_env,
                  "environment variable holding the API key");

  std::string analyze_trace;
  std::string analyze_out = "metrics";
  int analyze_bucket = 120;
  double analyze_theta = 0.9;
  std::vector<std::string> analyze_standards;
  CLI::App* analyze =
      app.add_subcommand("analyze", "compute metrics from a trace");
  analyze->add_option("--trace", analyze_trace, "trace file")->required();
  analyze->add_option("--out", analyze_out, "output directory for CSV files");
  analyze->add_option("--bucket", analyze_bucket, "bucket width in ticks");
  analyze->add_option("--theta", analyze_theta, "emergence threshold");
  analyze->add_option("--standard", analyze_standards,
                      "restrict per-standard series to this label (repeatable)");

  std::string replay_trace;
  std::string replay_out;
  std::string replay_agent;
  CLI::App* replay = app.add_subcommand(
      "replay", "print a human-readable timeline from a trace");
  replay->add_option("--trace", replay_trace, "trace file")->required();
  replay->add_option("--agent", replay_agent,
                     "only show events involving this agent");
  replay->add_option("--out", replay_out,
                     "write the timeline here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (run->parsed()) {
    run_args.rules_given = run->count("--rules") > 0;
    run_args.retries_given = run->count("--max-retries") > 0;
    run_args.base_url_given = run->count("--base-url") > 0;
    run_args.model_given = run->count("--model") > 0;
    run_args.temperature_given = run->count("--temperature") > 0;
    run_args.timeout_given = run->count("--timeout-ms") > 0;
    run_args.api_key_env_given = run->count("--api-key-env") > 0;
    return do_run(run_args);
  }
  if (analyze->parsed()) {
    return do_analyze(analyze_trace, analyze_out, analyze_bucket,
                      analyze_theta, analyze_standards);
  }
  if (replay->parsed()) {
    return do_replay(replay_trace, replay_out, replay_agent);
  }
  return kExitUsage;
}
