#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "normsim/engine.hpp"
#include "normsim/trace.hpp"
#include "normsim/world_config.hpp"
#include "test_support.hpp"

using namespace normsim;

namespace {

const char* kScenarioPath = NORMSIM_SOURCE_DIR "/scenarios/hobbs_cafe.json";
const char* kRulesPath = NORMSIM_SOURCE_DIR "/scenarios/hobbs_cafe.rules.json";

const std::vector<std::string> kRoster = {
    "Abigail Chen",  "Maria Lopez",      "John Lin",
    "Carlos Gomez",  "Sam More",         "Tamara Rodriguez",
    "Tom Gomez",     "Jennifer Moore",   "Eddy Barton",
    "Francisco Lopez"};

struct DayRun {
  WorldConfig world;
  RunSummary summary;
  TraceFile trace;
};

// One shared single-day run; every test in this file reads from it.
const DayRun& hobbs_day() {
  static const DayRun run = [] {
    DayRun result;
    result.world = WorldConfig::load(kScenarioPath);
    result.world.days = 1;
    const std::string trace_path =
        test::unique_temp_path("engine_day", ".jsonl");
    result.summary = test::run_scripted(result.world, kRulesPath, 3, trace_path);
    result.trace = TraceFile::load(trace_path);
    return result;
  }();
  return run;
}

std::map<std::string, int> roster_index(const TraceHeader& header) {
  std::map<std::string, int> indices;
  for (std::size_t i = 0; i < header.agents.size(); ++i) {
    indices[header.agents[i]] = static_cast<int>(i);
  }
  return indices;
}

}  // namespace

TEST_CASE("a full simulated day produces a valid, self-consistent log") {
  const DayRun& run = hobbs_day();

  CHECK(run.summary.ticks == 1440);
  CHECK(run.summary.agents == 10);
  CHECK(run.summary.events == run.trace.events.size());

  CHECK(run.trace.header.agents == kRoster);
  CHECK(run.trace.header.ticks_total == 1440);
  CHECK(run.trace.header.seed == 3);
  CHECK(run.trace.header.config_digest == run.world.digest());
  CHECK(run.trace.header.standards.size() == 3);

  REQUIRE(run.summary.qualified_counts.size() == 10);
  for (std::size_t i = 0; i < kRoster.size(); ++i) {
    CHECK(run.summary.qualified_counts[i].first == kRoster[i]);
    // By the end of the first day everyone holds at least something.
    CHECK(run.summary.qualified_counts[i].second >= 1);
  }

  CHECK_NOTHROW(run.trace.validate());
}

TEST_CASE("only the entrepreneurs author norms, before anything else") {
  const DayRun& run = hobbs_day();

  std::set<std::string> authors;
  std::uint64_t last_created_seq = 0;
  std::uint64_t first_plan_seq = UINT64_MAX;
  std::uint64_t first_action_seq = UINT64_MAX;
  for (const auto& event : run.trace.events) {
    if (event.kind == EventKind::norm_created) {
      CHECK(event.tick == 0);
      authors.insert(event.payload.at("agent").get<std::string>());
      last_created_seq = std::max(last_created_seq, event.seq);
    } else if (event.kind == EventKind::plan_generated && event.tick == 0) {
      first_plan_seq = std::min(first_plan_seq, event.seq);
    } else if (event.kind == EventKind::action_executed && event.tick == 0) {
      first_action_seq = std::min(first_action_seq, event.seq);
    }
  }

  CHECK(authors == std::set<std::string>{"Abigail Chen", "Maria Lopez",
                                         "John Lin"});
  CHECK(last_created_seq < first_plan_seq);
  CHECK(first_plan_seq < first_action_seq);

  // Every agent planned its day at the boundary.
  std::set<std::string> planned;
  for (const auto& event : run.trace.events) {
    if (event.kind == EventKind::plan_generated && event.tick == 0) {
      planned.insert(event.payload.at("agent").get<std::string>());
    }
  }
  CHECK(planned.size() == 10);
}

TEST_CASE("observation digests follow each agent's personal cadence") {
  const DayRun& run = hobbs_day();
  const auto indices = roster_index(run.trace.header);
  const Tick interval = 10;  // scenario's observation_interval

  std::size_t digests = 0;
  for (const auto& event : run.trace.events) {
    if (event.kind != EventKind::observation) continue;
    ++digests;
    const auto agent = event.payload.at("agent").get<std::string>();
    REQUIRE(indices.count(agent) == 1);
    CHECK(event.tick % interval ==
          static_cast<Tick>(indices.at(agent)) % interval);
    CHECK_FALSE(event.payload.at("observations").empty());
  }
  CHECK(digests > 0);
}

TEST_CASE("every agent stays busy through every hour of the day") {
  const DayRun& run = hobbs_day();

  // action starts per agent per hour bucket
  std::map<std::string, std::set<Tick>> hours_covered;
  for (const auto& event : run.trace.events) {
    if (event.kind != EventKind::action_executed) continue;
    const auto agent = event.payload.at("agent").get<std::string>();
    hours_covered[agent].insert(event.tick / 60);
    CHECK(event.payload.at("duration_minutes").get<int>() >= 1);
    CHECK(event.payload.at("duration_minutes").get<int>() <= 60);
  }

  REQUIRE(hours_covered.size() == 10);
  for (const auto& name : kRoster) {
    CAPTURE(name);
    REQUIRE(hours_covered.count(name) == 1);
    CHECK(hours_covered.at(name).size() == 24);
  }
}

TEST_CASE("agents move between home, venue and terrace with their schedule") {
  const DayRun& run = hobbs_day();

  bool carlos_on_terrace = false;
  bool carlos_at_home = false;
  bool carlos_default_venue = false;
  for (const auto& event : run.trace.events) {
    if (event.kind != EventKind::action_executed) continue;
    if (event.payload.at("agent") != "Carlos Gomez") continue;
    const auto& location = event.payload.at("location");
    if (location.is_null()) {
      carlos_default_venue = true;  // stays at the configured venue
    } else if (location == "cafe_terrace") {
      carlos_on_terrace = true;
    } else if (location == "carlos_home") {
      carlos_at_home = true;
    }
  }
  CHECK(carlos_on_terrace);
  CHECK(carlos_at_home);
  CHECK(carlos_default_venue);
}

TEST_CASE("a clean scripted day never needs a retry") {
  const DayRun& run = hobbs_day();

  std::size_t calls = 0;
  for (const auto& event : run.trace.events) {
    if (event.kind != EventKind::provider_call) continue;
    ++calls;
    CHECK(event.payload.at("outcome") == "ok");
    CHECK(event.payload.at("attempt") == 0);
  }
  // Thousands of operations back a full day.
  CHECK(calls > 1000);
}

TEST_CASE("norms spread through conflicts, conversations and observation") {
  const DayRun& run = hobbs_day();

  std::size_t conflicts = 0;
  std::size_t conversations = 0;
  std::size_t thoughts = 0;
  std::set<std::string> qualifying_agents;
  for (const auto& event : run.trace.events) {
    switch (event.kind) {
      case EventKind::conflict_detected:
        ++conflicts;
        break;
      case EventKind::conversation_held:
        ++conversations;
        break;
      case EventKind::thought_generated:
        ++thoughts;
        break;
      case EventKind::norm_qualified:
        qualifying_agents.insert(
            event.payload.at("agent").get<std::string>());
        break;
      default:
        break;
    }
  }

  CHECK(conflicts > 0);
  CHECK(conversations > 0);
  CHECK(thoughts > 0);
  // The word gets around: agents beyond the three founders qualify norms.
  CHECK(qualifying_agents.size() > 3);

  // John Lin's qualified mass crosses the threshold during the day, so his
  // synthesis fires and the merge is on the record.
  bool john_synthesized = false;
  for (const auto& event : run.trace.events) {
    if (event.kind == EventKind::norm_synthesized &&
        event.payload.at("agent") == "John Lin") {
      john_synthesized = true;
      CHECK(event.payload.at("member_ids").size() >= 2);
    }
  }
  CHECK(john_synthesized);
}
