#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "normsim/errors.hpp"
#include "normsim/operations.hpp"
#include "normsim/prompts.hpp"
#include "normsim/provider.hpp"
#include "test_support.hpp"

using namespace normsim;
using test::FakeProvider;
using nlohmann::json;

namespace {

OperationInput thought_input() {
  return OperationInput::make(
      OperationKind::generate_thought,
      {{"agent_description", json{{"name", "Ada"}}},
       {"observations", json::array({{{"actor", "Bo"},
                                      {"description", "hums"},
                                      {"tags", json::array()}}})}});
}

}  // namespace

TEST_CASE("operation kind tokens round-trip and slots are closed") {
  for (std::size_t i = 0; i < kOperationKindCount; ++i) {
    const auto kind = static_cast<OperationKind>(i);
    CHECK(operation_kind_from_string(to_string(kind)) == kind);
    CHECK_FALSE(slot_names(kind).empty());
  }
  CHECK_THROWS_AS(operation_kind_from_string("CastSpell"), ParseError);

  CHECK_THROWS_AS(
      OperationInput::make(OperationKind::generate_thought,
                           {{"agent_description", json::object()}}),
      ParseError);  // missing observations
  CHECK_THROWS_AS(
      OperationInput::make(OperationKind::generate_thought,
                           {{"agent_description", json::object()},
                            {"observations", json::array()},
                            {"mood", "cheerful"}}),
      ParseError);  // unknown slot
}

TEST_CASE("prompt rendering substitutes every slot") {
  const OperationInput input = OperationInput::make(
      OperationKind::identify_normative_information,
      {{"source_text", "People here tip after meals."},
       {"source_kind", "conversation"}});
  const std::string prompt = render_prompt(input.kind, input);
  CHECK(prompt.find("People here tip after meals.") != std::string::npos);
  CHECK(prompt.find("{source_text}") == std::string::npos);
  CHECK(prompt.find("{source_kind}") == std::string::npos);

  OperationInput incomplete;
  incomplete.kind = OperationKind::identify_normative_information;
  incomplete.slots = {{"source_text", "hello"}};
  CHECK_THROWS_AS(render_prompt(incomplete.kind, incomplete), ParseError);
}

TEST_CASE("a clean reply is parsed on the first attempt") {
  FakeProvider fake(3);
  fake.backend->push_reply(OperationKind::generate_thought,
                           json{{"thought", "a quiet afternoon"}});

  std::vector<ProviderCallRecord> records;
  fake.provider.set_call_observer(
      [&](const ProviderCallRecord& record) { records.push_back(record); });

  const InvokeResult result = fake.provider.invoke(thought_input());
  CHECK(std::get<ThoughtOutput>(result.output).thought == "a quiet afternoon");
  CHECK(result.warnings.empty());
  REQUIRE(records.size() == 1);
  CHECK(records[0].attempt == 0);
  CHECK(records[0].outcome == "ok");
  CHECK(records[0].kind == OperationKind::generate_thought);
  CHECK(records[0].prompt_chars == fake.backend->calls()[0].prompt.size());
  CHECK(records[0].response_chars > 0);
}

TEST_CASE("malformed output triggers a retry with one corrective appended") {
  FakeProvider fake(3);
  fake.backend->push_raw(OperationKind::generate_thought, "not json at all");
  fake.backend->push_raw(OperationKind::generate_thought, "{\"thought\": 5}");
  fake.backend->push_reply(OperationKind::generate_thought,
                           json{{"thought", "third time lucky"}});

  const InvokeResult result = fake.provider.invoke(thought_input());
  CHECK(std::get<ThoughtOutput>(result.output).thought == "third time lucky");

  const auto& calls = fake.backend->calls();
  REQUIRE(calls.size() == 3);
  CHECK(calls[0].prompt.find(kRetryCorrective) == std::string::npos);
  for (std::size_t i = 1; i < calls.size(); ++i) {
    // Exactly one corrective, at the end, never stacked.
    const auto first = calls[i].prompt.find(kRetryCorrective);
    REQUIRE(first != std::string::npos);
    CHECK(calls[i].prompt.find(kRetryCorrective, first + 1) ==
          std::string::npos);
    CHECK(calls[i].prompt == calls[0].prompt + kRetryCorrective);
  }
}

TEST_CASE("the attempt budget is one initial try plus max_retries") {
  for (const int max_retries : {0, 1, 3}) {
    CAPTURE(max_retries);
    FakeProvider fake(max_retries);
    for (int i = 0; i <= max_retries; ++i) {
      fake.backend->push_raw(OperationKind::generate_thought, "garbage");
    }
    std::vector<ProviderCallRecord> records;
    fake.provider.set_call_observer(
        [&](const ProviderCallRecord& record) { records.push_back(record); });

    CHECK_THROWS_AS(fake.provider.invoke(thought_input()), ProviderFailure);
    CHECK(fake.backend->calls().size() ==
          static_cast<std::size_t>(max_retries) + 1);
    REQUIRE(records.size() == static_cast<std::size_t>(max_retries) + 1);
    for (int i = 0; i <= max_retries; ++i) {
      CHECK(records[i].attempt == i);
      CHECK(records[i].outcome == "parse_error");
    }
  }
}

TEST_CASE("transport failures consume attempts from the same budget") {
  FakeProvider fake(2);
  fake.backend->push_transport_failure(OperationKind::generate_thought);
  fake.backend->push_raw(OperationKind::generate_thought, "garbage");
  fake.backend->push_reply(OperationKind::generate_thought,
                           json{{"thought", "recovered"}});

  std::vector<ProviderCallRecord> records;
  fake.provider.set_call_observer(
      [&](const ProviderCallRecord& record) { records.push_back(record); });

  const InvokeResult result = fake.provider.invoke(thought_input());
  CHECK(std::get<ThoughtOutput>(result.output).thought == "recovered");
  REQUIRE(records.size() == 3);
  CHECK(records[0].outcome == "transport_error");
  CHECK(records[1].outcome == "parse_error");
  CHECK(records[2].outcome == "ok");

  // Exhaustion by transport alone also fails cleanly.
  FakeProvider dead(1);
  dead.backend->push_transport_failure(OperationKind::generate_thought);
  dead.backend->push_transport_failure(OperationKind::generate_thought);
  CHECK_THROWS_AS(dead.provider.invoke(thought_input()), ProviderFailure);
  CHECK(dead.backend->calls().size() == 2);
}

TEST_CASE("provider construction validates its inputs") {
  CHECK_THROWS_AS(Provider(nullptr, 3), ConfigError);
  CHECK_THROWS_AS(Provider(std::make_unique<test::QueueBackend>(), -1),
                  ConfigError);

  ProviderConfig config;
  config.backend = ProviderConfig::BackendKind::scripted;
  CHECK_THROWS_AS(config.validate(), ConfigError);  // scripted unset
  config.scripted = ScriptedBackendConfig{"", 0};
  CHECK_THROWS_AS(config.validate(), ConfigError);  // empty rule table path
  config.scripted = ScriptedBackendConfig{"rules.json", 0};
  CHECK_NOTHROW(config.validate());
  config.max_retries = -1;
  CHECK_THROWS_AS(config.validate(), ConfigError);

  ProviderConfig remote;
  remote.backend = ProviderConfig::BackendKind::remote;
  CHECK_THROWS_AS(remote.validate(), ConfigError);  // remote unset
  remote.remote = RemoteBackendConfig{"http://localhost:1", "m", 0.7, 1000,
                                      "KEY"};
  CHECK_NOTHROW(remote.validate());
  remote.remote->temperature = 2.5;
  CHECK_THROWS_AS(remote.validate(), ConfigError);
  remote.remote->temperature = 0.7;
  remote.remote->timeout_ms = 0;
  CHECK_THROWS_AS(remote.validate(), ConfigError);
  remote.remote->timeout_ms = 1000;
  remote.remote->api_key_env = "";
  CHECK_THROWS_AS(remote.validate(), ConfigError);
}

// ---------------------------------------------------------------------------
// Response parsing, kind by kind

TEST_CASE("replies may arrive wrapped in code fences") {
  const auto parsed = parse_response(
      OperationKind::generate_thought,
      "```json\n{\"thought\": \"fenced\"}\n```");
  CHECK(std::get<ThoughtOutput>(parsed.output).thought == "fenced");

  const auto bare = parse_response(OperationKind::generate_thought,
                                   "  {\"thought\": \"padded\"}  \n");
  CHECK(std::get<ThoughtOutput>(bare.output).thought == "padded");
}

TEST_CASE("non-object replies are rejected") {
  CHECK_THROWS_AS(parse_response(OperationKind::generate_thought, "[]"),
                  ParseError);
  CHECK_THROWS_AS(parse_response(OperationKind::generate_thought, "plain"),
                  ParseError);
  CHECK_THROWS_AS(parse_response(OperationKind::generate_thought, ""),
                  ParseError);
}

TEST_CASE("authored norms parse and clamp their utilities") {
  const std::string raw = json{
      {"norms",
       json::array(
           {{{"content", "no smoking indoors"},
             {"kind", "injunctive"},
             {"utility", 90}},
            {{"content", "tip generously"},
             {"kind", "descriptive"},
             {"utility", 150}},
            {{"content", "be kind"}, {"kind", "injunctive"}, {"utility", -3}}})}}
                              .dump();
  const auto parsed = parse_response(OperationKind::create_norm, raw);
  const auto& out = std::get<CreateNormOutput>(parsed.output);
  REQUIRE(out.norms.size() == 3);
  CHECK(out.norms[0].utility == 90);
  CHECK(out.norms[1].utility == 100);
  CHECK(out.norms[2].utility == 1);
  REQUIRE(parsed.warnings.size() == 2);
  CHECK(parsed.warnings[0].find("clamped") != std::string::npos);

  CHECK_THROWS_AS(parse_response(OperationKind::create_norm, "{}"), ParseError);
  CHECK_THROWS_AS(
      parse_response(
          OperationKind::create_norm,
          R"({"norms":[{"content":"x","kind":"bossy","utility":5}]})"),
      ParseError);
  CHECK_THROWS_AS(
      parse_response(OperationKind::create_norm,
                     R"({"norms":[{"content":"","kind":"injunctive","utility":5}]})"),
      ParseError);
}

TEST_CASE("conflict decisions require their fields to agree") {
  const auto parsed = parse_response(
      OperationKind::detect_conflict_and_decide_to_talk,
      R"({"conflict":true,"talk":true,"conflict_description":"smoking inside","target":"Bo"})");
  const auto& out = std::get<ConflictDecision>(parsed.output);
  CHECK(out.conflict);
  CHECK(out.talk);
  CHECK(out.description == "smoking inside");
  CHECK(out.target == "Bo");

  const auto quiet = parse_response(
      OperationKind::detect_conflict_and_decide_to_talk,
      R"({"conflict":false,"talk":false,"conflict_description":"","target":null})");
  CHECK_FALSE(std::get<ConflictDecision>(quiet.output).conflict);

  // Booleans must be literal; strings do not count.
  CHECK_THROWS_AS(
      parse_response(OperationKind::detect_conflict_and_decide_to_talk,
                     R"({"conflict":"true","talk":false})"),
      ParseError);
  // A conflict needs a description and a target.
  CHECK_THROWS_AS(
      parse_response(OperationKind::detect_conflict_and_decide_to_talk,
                     R"({"conflict":true,"talk":false,"target":"Bo"})"),
      ParseError);
  CHECK_THROWS_AS(
      parse_response(
          OperationKind::detect_conflict_and_decide_to_talk,
          R"({"conflict":true,"talk":false,"conflict_description":"x"})"),
      ParseError);
  // Talking without a conflict makes no sense.
  CHECK_THROWS_AS(
      parse_response(OperationKind::detect_conflict_and_decide_to_talk,
                     R"({"conflict":false,"talk":true})"),
      ParseError);
}

TEST_CASE("conversation turns allow silence only when ending") {
  const auto parsed =
      parse_response(OperationKind::generate_conversation_turn,
                     R"({"utterance":"hello","end_conversation":false})");
  CHECK(std::get<ConversationTurnOutput>(parsed.output).utterance == "hello");
  CHECK_NOTHROW(parse_response(OperationKind::generate_conversation_turn,
                               R"({"utterance":"","end_conversation":true})"));
  CHECK_THROWS_AS(
      parse_response(OperationKind::generate_conversation_turn,
                     R"({"utterance":"","end_conversation":false})"),
      ParseError);
}

TEST_CASE("identification returns nothing when nothing was found") {
  const auto none = parse_response(
      OperationKind::identify_normative_information, R"({"found":false})");
  CHECK_FALSE(std::get<IdentifyOutput>(none.output).info.has_value());

  const auto some = parse_response(
      OperationKind::identify_normative_information,
      R"({"found":true,"content":"tip after meals","kind":"descriptive","utility":80})");
  const auto& info = std::get<IdentifyOutput>(some.output).info;
  REQUIRE(info.has_value());
  CHECK(info->content == "tip after meals");
  CHECK(info->kind == NormKind::descriptive);
  CHECK(info->utility == 80);

  CHECK_THROWS_AS(parse_response(OperationKind::identify_normative_information,
                                 R"({"found":true})"),
                  ParseError);
}

TEST_CASE("check replies need a literal boolean outcome") {
  for (const auto kind :
       {OperationKind::check_consistency, OperationKind::check_duplication,
        OperationKind::check_type, OperationKind::check_conflict}) {
    const auto parsed =
        parse_response(kind, R"({"outcome":true,"rationale":"fits"})");
    CHECK(std::get<CheckOutput>(parsed.output).outcome);
    CHECK(std::get<CheckOutput>(parsed.output).rationale == "fits");
    CHECK_THROWS_AS(parse_response(kind, R"({"rationale":"no outcome"})"),
                    ParseError);
    CHECK_THROWS_AS(parse_response(kind, R"({"outcome":"yes"})"), ParseError);
  }
}

TEST_CASE("classification demands distinct positive positions and themes") {
  const auto parsed = parse_response(
      OperationKind::classify_specific_norms,
      R"({"groups":[{"members":[1,3],"theme":"health"},{"members":[2],"theme":"courtesy"}]})");
  const auto& out = std::get<ClassifyOutput>(parsed.output);
  REQUIRE(out.groups.size() == 2);
  CHECK(out.groups[0].member_positions == std::vector<std::size_t>{1, 3});
  CHECK(out.groups[0].theme == "health");

  CHECK_THROWS_AS(
      parse_response(OperationKind::classify_specific_norms,
                     R"({"groups":[{"members":[1,1],"theme":"health"}]})"),
      ParseError);
  CHECK_THROWS_AS(
      parse_response(OperationKind::classify_specific_norms,
                     R"({"groups":[{"members":[0,2],"theme":"health"}]})"),
      ParseError);
  CHECK_THROWS_AS(
      parse_response(OperationKind::classify_specific_norms,
                     R"({"groups":[{"members":[1,2],"theme":""}]})"),
      ParseError);
  CHECK_THROWS_AS(
      parse_response(OperationKind::classify_specific_norms,
                     R"({"groups":[{"members":[],"theme":"health"}]})"),
      ParseError);
}

TEST_CASE("abstract norm weights are re-normalized to sum to one") {
  const auto parsed = parse_response(
      OperationKind::generate_abstract_norm,
      R"({"content":"stay healthy","kind":"injunctive","weights":[2,1,1]})");
  const auto& out = std::get<AbstractNormOutput>(parsed.output);
  REQUIRE(out.weights.size() == 3);
  CHECK(out.weights[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out.weights[1] == doctest::Approx(0.25).epsilon(1e-12));
  double sum = 0.0;
  for (const double w : out.weights) sum += w;
  CHECK(std::abs(sum - 1.0) <= 1e-9);

  CHECK_THROWS_AS(
      parse_response(
          OperationKind::generate_abstract_norm,
          R"({"content":"x","kind":"injunctive","weights":[0.5,-0.5]})"),
      ParseError);
  CHECK_THROWS_AS(parse_response(OperationKind::generate_abstract_norm,
                                 R"({"content":"x","kind":"injunctive","weights":[]})"),
                  ParseError);
  CHECK_THROWS_AS(parse_response(OperationKind::generate_abstract_norm,
                                 R"({"content":"","kind":"injunctive","weights":[1]})"),
                  ParseError);
}

TEST_CASE("plans parse 24-hour clock windows in order") {
  const auto parsed = parse_response(
      OperationKind::generate_normative_plans,
      R"({"plans":[{"start":"00:00","end":"07:30","description":"sleep"},
                   {"start":"07:30","end":"24:00","description":"be about"}]})");
  const auto& out = std::get<PlansOutput>(parsed.output);
  REQUIRE(out.plans.size() == 2);
  CHECK(out.plans[0].start_minute == 0);
  CHECK(out.plans[0].end_minute == 450);
  CHECK(out.plans[1].end_minute == 1440);

  CHECK_THROWS_AS(parse_response(OperationKind::generate_normative_plans,
                                 R"({"plans":[]})"),
                  ParseError);
  CHECK_THROWS_AS(
      parse_response(
          OperationKind::generate_normative_plans,
          R"({"plans":[{"start":"09:00","end":"08:00","description":"x"}]})"),
      ParseError);
  CHECK_THROWS_AS(
      parse_response(
          OperationKind::generate_normative_plans,
          R"({"plans":[{"start":"00:00","end":"10:00","description":"x"},
                       {"start":"09:00","end":"11:00","description":"y"}]})"),
      ParseError);
  CHECK_THROWS_AS(
      parse_response(
          OperationKind::generate_normative_plans,
          R"({"plans":[{"start":"25:00","end":"26:00","description":"x"}]})"),
      ParseError);
  CHECK_THROWS_AS(
      parse_response(
          OperationKind::generate_normative_plans,
          R"({"plans":[{"start":"0900","end":"10:00","description":"x"}]})"),
      ParseError);
}

TEST_CASE("actions accept optional fields and reject bad ones") {
  const auto parsed = parse_response(
      OperationKind::generate_normative_actions,
      R"({"actions":[
            {"description":"order coffee"},
            {"description":"smoke by the counter","tags":["smoking_indoors"],
             "location":"cafe","duration_minutes":2,
             "annotations":{"no smoking indoors":"violates"}}]})");
  const auto& out = std::get<ActionsOutput>(parsed.output);
  REQUIRE(out.actions.size() == 2);
  CHECK_FALSE(out.actions[0].duration_minutes.has_value());
  CHECK_FALSE(out.actions[0].location.has_value());
  CHECK(out.actions[0].annotations.empty());
  CHECK(out.actions[1].tags == std::vector<std::string>{"smoking_indoors"});
  CHECK(out.actions[1].location == "cafe");
  CHECK(out.actions[1].duration_minutes == 2);
  CHECK(out.actions[1].annotations.at("no smoking indoors") ==
        ComplianceStatus::violates);

  CHECK_THROWS_AS(parse_response(OperationKind::generate_normative_actions,
                                 R"({"actions":[]})"),
                  ParseError);
  CHECK_THROWS_AS(
      parse_response(
          OperationKind::generate_normative_actions,
          R"({"actions":[{"description":"x","duration_minutes":0}]})"),
      ParseError);
  CHECK_THROWS_AS(
      parse_response(
          OperationKind::generate_normative_actions,
          R"({"actions":[{"description":"x","annotations":{"label":"perhaps"}}]})"),
      ParseError);
  CHECK_THROWS_AS(
      parse_response(OperationKind::generate_normative_actions,
                     R"({"actions":[{"description":""}]})"),
      ParseError);
}

TEST_CASE("compliance status tokens round-trip") {
  CHECK(compliance_status_from_string("complies") ==
        ComplianceStatus::complies);
  CHECK(compliance_status_from_string("violates") ==
        ComplianceStatus::violates);
  CHECK(compliance_status_from_string("not_applicable") ==
        ComplianceStatus::not_applicable);
  CHECK_THROWS_AS(compliance_status_from_string("meh"), ParseError);
  CHECK(std::string(to_string(ComplianceStatus::complies)) == "complies");
  CHECK(std::string(to_string(ComplianceStatus::violates)) == "violates");
  CHECK(std::string(to_string(ComplianceStatus::not_applicable)) ==
        "not_applicable");
}
