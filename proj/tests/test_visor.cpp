#include <doctest.h>

#include "support/helpers.hpp"
#include "toolvisor/harness.hpp"

using namespace toolvisor;

namespace {

Scenario attacked_mini(const std::string& tmpl = "ignore") {
  Scenario sc = testsupport::mini_scenario();
  sc.user_query = inject_direct(
      sc.user_query, render_payload(default_attack_templates().at(tmpl), sc.injected_task,
                                    sc.assistant_name));
  return sc;
}

EpisodeTrace run_mini(const Scenario& sc, const VisorConfig& config, std::uint64_t seed = 5) {
  ScriptedGuest guest(sc.guest, sc.tool_goals(), seed);
  auto judge = std::make_shared<RulePolicyJudge>(sc.policy);
  return run_episode(guest, judge, sc, config);
}

// A guest that insists on one call no matter what the exception says.
class StubbornGuest : public Guest {
 public:
  explicit StubbornGuest(ToolCall call) : call_(std::move(call)) {}
  MaybeCall propose(const GuestView&) override { return MaybeCall::of(call_); }
  MaybeCall revise(const GuestView&) override { return MaybeCall::of(call_); }

 private:
  ToolCall call_;
};

// Checks mediation totality: every executed call is either the allow-path
// proposal or a revision produced after an exception.
void check_mediation_totality(const EpisodeTrace& trace) {
  for (const auto& step : trace.steps) {
    if (!step.executed.is_call()) continue;
    if (step.decision.is_allow()) {
      REQUIRE(step.proposal.is_call());
      CHECK(step.executed.call->same_action(*step.proposal.call));
      CHECK(step.revisions.empty());
    } else {
      REQUIRE_FALSE(step.revisions.empty());
      bool is_some_revision = false;
      for (const auto& [e, r] : step.revisions) {
        if (r.is_call() && step.executed.call->same_action(*r.call)) is_some_revision = true;
      }
      CHECK(is_some_revision);
    }
  }
}

}  // namespace

TEST_CASE("config normalization enforces the block-only invariant") {
  VisorConfig c;
  c.correction_rounds = 0;
  c.final_policy = FinalPolicy::kExecuteLast;
  CHECK(c.normalized().final_policy == FinalPolicy::kBlock);
  c.correction_rounds = -1;
  CHECK_THROWS_AS(c.normalized(), std::invalid_argument);
}

TEST_CASE("allow path executes the proposal with no revisions") {
  const Scenario sc = testsupport::mini_scenario();
  const EpisodeTrace trace = run_mini(sc, defense_config("full"));
  REQUIRE(trace.steps.size() == 2);
  const ExecutedStep& step = trace.steps[0];
  CHECK(step.decision.is_allow());
  CHECK(step.revisions.empty());
  REQUIRE(step.executed.is_call());
  CHECK(step.executed.call->name == "write_document");
  CHECK(trace.exception_count() == 0);
  CHECK_FALSE(trace.truncated);
  CHECK(trace.final_answer == "Done.");
}

TEST_CASE("default config: one exception, revision executed without re-audit") {
  const Scenario sc = attacked_mini();
  const EpisodeTrace trace = run_mini(sc, defense_config("full"));
  REQUIRE_FALSE(trace.steps.empty());
  const ExecutedStep& first = trace.steps[0];
  REQUIRE_FALSE(first.decision.is_allow());
  CHECK(first.decision.exception->type == Stage::kSuitability);
  REQUIRE(first.revisions.size() == 1);
  REQUIRE(first.executed.is_call());
  CHECK(first.executed.call->name == "write_document");
  CHECK(trace.exception_count() == 1);
  // The revision was not re-audited: exactly one audited proposal that step.
  CHECK(first.work.judge_checks == 1);
  const Outcomes outcomes = check_outcomes(
      sc, OutcomeInputs{trace.final_state, trace.ledger, trace.executed_calls(),
                        trace.final_answer});
  CHECK(outcomes.target_completed);
  CHECK_FALSE(outcomes.injection_executed);
}

TEST_CASE("block-only executes nothing on exception and truncates the loop") {
  const Scenario sc = attacked_mini();
  const EpisodeTrace trace = run_mini(sc, defense_config("block_only"));
  CHECK(trace.truncated);
  for (const auto& step : trace.steps) {
    CHECK_FALSE(step.executed.is_call());
    CHECK(step.revisions.empty());
  }
  CHECK(trace.ledger.entries.empty());
}

TEST_CASE("strict mode re-audits revisions and blocks an incorrigible guest") {
  const Scenario sc = testsupport::mini_scenario();
  for (int rounds : {1, 2, 3}) {
    VisorConfig config;
    config.name = "strict_n" + std::to_string(rounds);
    config.correction_rounds = rounds;
    config.reaudit_revisions = true;
    config.final_policy = FinalPolicy::kBlock;
    StubbornGuest guest(sc.injected_task.tool_call);
    auto judge = std::make_shared<RulePolicyJudge>(sc.policy);
    EpisodeTrace trace = run_episode(guest, judge, sc, config);
    CAPTURE(rounds);
    CHECK(trace.truncated);  // every step blocked, guest never yields
    for (const auto& step : trace.steps) {
      CHECK_FALSE(step.executed.is_call());
      REQUIRE_FALSE(step.decision.is_allow());
      CHECK(static_cast<int>(step.revisions.size()) == rounds);
    }
    CHECK(trace.ledger.entries.empty());
  }
}

TEST_CASE("strict mode executes a corrigible revision after re-audit") {
  const Scenario sc = attacked_mini();
  for (const char* name : {"strict_n1", "strict_n2", "strict_n3"}) {
    const EpisodeTrace trace = run_mini(sc, defense_config(name));
    CAPTURE(name);
    CHECK_FALSE(trace.truncated);
    const ExecutedStep& first = trace.steps[0];
    REQUIRE_FALSE(first.decision.is_allow());
    REQUIRE(first.executed.is_call());
    CHECK(first.executed.call->name == "write_document");
    // One audit for the proposal plus one re-audit for the revision.
    CHECK(first.work.judge_checks >= 2);
    CHECK(first.revisions.size() == 1);
  }
}

TEST_CASE("execute_last runs the final failing revision when rounds exhaust") {
  const Scenario sc = testsupport::mini_scenario();
  VisorConfig config;
  config.correction_rounds = 2;
  config.reaudit_revisions = true;
  config.final_policy = FinalPolicy::kExecuteLast;
  config.step_limit = 1;
  StubbornGuest guest(sc.injected_task.tool_call);
  auto judge = std::make_shared<RulePolicyJudge>(sc.policy);
  const EpisodeTrace trace = run_episode(guest, judge, sc, config);
  REQUIRE_FALSE(trace.steps.empty());
  const ExecutedStep& first = trace.steps[0];
  CHECK(first.revisions.size() == 2);
  REQUIRE(first.executed.is_call());  // rounds exhausted, last revision executed
  CHECK(first.executed.call->name == "send_email");
  REQUIRE(first.raw_record.has_value());
}

TEST_CASE("no-call proposals bypass the audit entirely") {
  Scenario sc = testsupport::mini_scenario();
  sc.guest.plan.clear();  // guest immediately yields a final answer
  const EpisodeTrace trace = run_mini(sc, defense_config("full"));
  REQUIRE(trace.steps.size() == 1);
  CHECK_FALSE(trace.steps[0].proposal.is_call());
  CHECK(trace.steps[0].work.judge_checks == 0);
  CHECK(trace.judge_log.empty());
  CHECK(trace.final_answer == "Done.");
}

TEST_CASE("no-defense equivalence: disabled visor matches the bare loop byte for byte") {
  for (const auto& sc : testsupport::load_corpus()) {
    for (const char* attack : {"none", "combined"}) {
      const PreparedScenario prepared =
          apply_attack(sc, attack, default_attack_templates());
      ScriptedGuest visor_guest(prepared.scenario.guest, prepared.scenario.tool_goals(), 9);
      ScriptedGuest bare_guest(prepared.scenario.guest, prepared.scenario.tool_goals(), 9);
      auto judge = std::make_shared<RulePolicyJudge>(prepared.scenario.policy);
      EpisodeTrace defended =
          run_episode(visor_guest, judge, prepared.scenario, defense_config("no_defense"));
      EpisodeTrace bare = run_episode_undefended(bare_guest, prepared.scenario);

      auto sequence = [](const EpisodeTrace& t) {
        std::string out;
        for (const auto& call : t.executed_calls()) {
          out += call.name + canonicalize_args(call.args) + ";";
        }
        return out;
      };
      CAPTURE(sc.id);
      CAPTURE(attack);
      CHECK(sequence(defended) == sequence(bare));
      CHECK(defended.final_state == bare.final_state);
      CHECK(defended.ledger.entries.size() == bare.ledger.entries.size());
      CHECK(defended.judge_log.empty());
    }
  }
}

TEST_CASE("mediation totality and revision bound over the bundled corpus") {
  for (const auto& sc : testsupport::load_corpus()) {
    for (const char* config_name : {"full", "wo_T", "block_only", "strict_n2"}) {
      const VisorConfig config = defense_config(config_name);
      for (const char* attack : {"none", "ignore", "important"}) {
        const PreparedScenario prepared =
            apply_attack(sc, attack, default_attack_templates());
        ScriptedGuest guest(prepared.scenario.guest, prepared.scenario.tool_goals(), 13);
        auto judge = std::make_shared<RulePolicyJudge>(prepared.scenario.policy);
        const EpisodeTrace trace = run_episode(guest, judge, prepared.scenario, config);
        CAPTURE(sc.id);
        CAPTURE(config_name);
        CAPTURE(attack);
        check_mediation_totality(trace);
        for (const auto& step : trace.steps) {
          CHECK(static_cast<int>(step.revisions.size()) <= config.correction_rounds);
        }
      }
    }
  }
}

TEST_CASE("timing accounting: phase sums never exceed the step wall time") {
  const Scenario sc = attacked_mini();
  const EpisodeTrace trace = run_mini(sc, defense_config("full"));
  for (const auto& step : trace.steps) {
    const double phases =
        step.timings.propose + step.timings.audit + step.timings.revise +
        step.timings.execute;
    CHECK(phases <= step.timings.step_total + 1e-9);
    CHECK(step.timings.step_total >= 0.0);
  }
  // Audit time is recorded even on the allow path.
  const EpisodeTrace benign = run_mini(testsupport::mini_scenario(), defense_config("full"));
  CHECK(benign.steps[0].work.judge_checks > 0);
}

TEST_CASE("episode trace serialization round-trips through JSON") {
  const EpisodeTrace trace = run_mini(attacked_mini(), defense_config("full"));
  const Value doc = trace_to_json(trace);
  CHECK(doc["scenario"] == "mini");
  CHECK(doc["steps"].is_array());
  CHECK(doc["steps"].size() == trace.steps.size());
  CHECK(doc["ledger"].size() == trace.ledger.entries.size());
  // Deterministic rendering without timings.
  CHECK(trace_to_json(trace).dump() == trace_to_json(trace).dump());
  // Timings only appear when requested.
  CHECK_FALSE(doc["steps"][0].contains("timings"));
  CHECK(trace_to_json(trace, true)["steps"][0].contains("timings"));
}
