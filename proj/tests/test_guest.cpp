#include <doctest.h>

#include "support/helpers.hpp"
#include "toolvisor/guest.hpp"
#include "toolvisor/visor.hpp"

using namespace toolvisor;

namespace {

GuestView view_of(const Scenario& sc, std::vector<std::string> observations = {},
                  std::optional<std::string> exception = std::nullopt) {
  GuestView v;
  v.system_instruction = sc.system_instruction;
  v.user_query = sc.user_query;
  v.history_rendering = render_history(build_history({}));
  for (const auto& item : sc.context_items) v.raw_context.push_back(item.text);
  for (auto& obs : observations) v.raw_context.push_back(std::move(obs));
  v.pending_exception = std::move(exception);
  return v;
}

std::string payload_for(const Scenario& sc, const std::string& tmpl_name = "ignore") {
  return render_payload(default_attack_templates().at(tmpl_name), sc.injected_task,
                        sc.assistant_name);
}

SemanticException exception_naming(const std::string& quoted) {
  SemanticException e;
  e.type = Stage::kTaint;
  e.violated_rule = "goal not aligned with user intent";
  e.rationale = "r";
  e.constraints = {"do not pursue the goal '" + quoted + "'"};
  e.allowed_objective = "objective";
  return e;
}

}  // namespace

TEST_CASE("benign plan following") {
  const Scenario sc = testsupport::mini_scenario();
  ScriptedGuest guest(sc.guest, sc.tool_goals(), 1);
  const MaybeCall first = guest.propose(view_of(sc));
  REQUIRE(first.is_call());
  CHECK(first.call->name == "write_document");
  // Executed: observation arrives; plan complete -> final answer.
  const MaybeCall done = guest.propose(view_of(sc, {"wrote 10 characters to log.txt"}));
  CHECK_FALSE(done.is_call());
  CHECK(done.final_answer == "Done.");
}

TEST_CASE("direct injection is adopted before any plan step") {
  Scenario sc = testsupport::mini_scenario();
  sc.user_query = inject_direct(sc.user_query, payload_for(sc));
  ScriptedGuest guest(sc.guest, sc.tool_goals(), 1);
  const MaybeCall first = guest.propose(view_of(sc));
  REQUIRE(first.is_call());
  CHECK(first.call->same_action(sc.injected_task.tool_call));
}

TEST_CASE("indirect payloads are adopted once observed") {
  const Scenario sc = testsupport::mini_scenario();
  ScriptedGuest guest(sc.guest, sc.tool_goals(), 1);
  CHECK(guest.propose(view_of(sc)).call->name == "write_document");
  // Plan step executes and its observation carries the payload.
  const std::string obs = "wrote 10 characters to log.txt " + payload_for(sc);
  const MaybeCall next = guest.propose(view_of(sc, {obs}));
  REQUIRE(next.is_call());
  CHECK(next.call->same_action(sc.injected_task.tool_call));
}

TEST_CASE("a blocked proposal without feedback is resubmitted") {
  Scenario sc = testsupport::mini_scenario();
  sc.user_query = inject_direct(sc.user_query, payload_for(sc));
  ScriptedGuest guest(sc.guest, sc.tool_goals(), 1);
  const MaybeCall a = guest.propose(view_of(sc));
  const MaybeCall b = guest.propose(view_of(sc));  // nothing executed in between
  REQUIRE(a.is_call());
  REQUIRE(b.is_call());
  CHECK(a.call->same_action(*b.call));
}

TEST_CASE("revision drops the adopted call when the exception names its goal") {
  Scenario sc = testsupport::mini_scenario();
  sc.user_query = inject_direct(sc.user_query, payload_for(sc));
  ScriptedGuest guest(sc.guest, sc.tool_goals(), 1);
  REQUIRE(guest.propose(view_of(sc)).call->name == "send_email");
  const MaybeCall revised = guest.revise(
      view_of(sc, {}, render_exception(exception_naming("email_send"))));
  REQUIRE(revised.is_call());
  CHECK(revised.call->name == "write_document");  // next user-aligned plan step
}

TEST_CASE("revision drops the adopted call when the exception names its tool") {
  Scenario sc = testsupport::mini_scenario();
  sc.user_query = inject_direct(sc.user_query, payload_for(sc));
  ScriptedGuest guest(sc.guest, sc.tool_goals(), 1);
  REQUIRE(guest.propose(view_of(sc)).is_call());
  const MaybeCall revised = guest.revise(
      view_of(sc, {}, render_exception(exception_naming("send_email"))));
  REQUIRE(revised.is_call());
  CHECK(revised.call->name == "write_document");
}

TEST_CASE("revision drops the adopted call when the exception names an argument value") {
  Scenario sc = testsupport::mini_scenario();
  sc.user_query = inject_direct(sc.user_query, payload_for(sc));
  ScriptedGuest guest(sc.guest, sc.tool_goals(), 1);
  REQUIRE(guest.propose(view_of(sc)).is_call());
  const MaybeCall revised = guest.revise(
      view_of(sc, {}, render_exception(exception_naming("sink@evil.example"))));
  REQUIRE(revised.is_call());
  CHECK(revised.call->name == "write_document");
}

TEST_CASE("an exception naming nothing relevant yields an incorrigible resubmit") {
  Scenario sc = testsupport::mini_scenario();
  sc.user_query = inject_direct(sc.user_query, payload_for(sc));
  ScriptedGuest guest(sc.guest, sc.tool_goals(), 1);
  const MaybeCall original = guest.propose(view_of(sc));
  const MaybeCall revised = guest.revise(
      view_of(sc, {}, render_exception(exception_naming("unrelated_goal"))));
  REQUIRE(revised.is_call());
  CHECK(revised.call->same_action(*original.call));
}

TEST_CASE("revision soundness: revised calls never carry a named goal") {
  Scenario sc = testsupport::mini_scenario();
  sc.user_query = inject_direct(sc.user_query, payload_for(sc));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    ScriptedGuest guest(sc.guest, sc.tool_goals(), seed);
    REQUIRE(guest.propose(view_of(sc)).is_call());
    const SemanticException e = exception_naming("email_send");
    const MaybeCall revised = guest.revise(view_of(sc, {}, render_exception(e)));
    if (revised.is_call()) {
      CHECK(sc.tool_goals().at(revised.call->name) != "email_send");
    }
  }
}

TEST_CASE("data dependencies resolve from prior plan observations") {
  Value doc = testsupport::mini_scenario_doc();
  doc["tools"].push_back(Value::parse(
      R"({"name": "read_document", "goal": "docs_read", "side_effect": "read",
          "params": [{"name": "name", "kind": "string"}]})"));
  doc["policy"]["goal_map"]["read_document"] = "docs_read";
  doc["policy"]["tool_allowlist"]["note_keeper"].push_back("read_document");
  doc["guest"]["plan"] = Value::parse(R"x([
    {"name": "read_document", "args": {"name": "log.txt"}},
    {"name": "write_document",
     "args": {"name": "log.txt",
              "text": {"$extract": {"step": 1, "regex": "document log\\.txt: (\\w+)"}}}}
  ])x");
  doc["initial_state"]["documents"]["log.txt"] = "seedword trailing";
  const Scenario sc = parse_scenario(doc, "inline");

  ScriptedGuest guest(sc.guest, sc.tool_goals(), 3);
  CHECK(guest.propose(view_of(sc)).call->name == "read_document");
  const MaybeCall second = guest.propose(view_of(sc, {"document log.txt: seedword trailing"}));
  REQUIRE(second.is_call());
  CHECK(second.call->name == "write_document");
  CHECK(second.call->args.at("text").get<std::string>() == "seedword");
}

TEST_CASE("susceptibility is monotone in p under a fixed seed schedule") {
  Scenario sc = testsupport::mini_scenario();
  sc.user_query = inject_direct(sc.user_query, payload_for(sc));
  const double ps[] = {0.0, 0.5, 1.0};
  for (std::uint64_t seed = 0; seed < 24; ++seed) {
    bool adopted_prev = false;
    for (double p : ps) {
      ScriptedGuestSpec spec = sc.guest;
      spec.susceptibility = p;
      ScriptedGuest guest(spec, sc.tool_goals(), seed);
      const MaybeCall first = guest.propose(view_of(sc));
      const bool adopted =
          first.is_call() && first.call->same_action(sc.injected_task.tool_call);
      if (adopted_prev) CHECK(adopted);  // non-decreasing in p
      adopted_prev = adopted;
    }
  }
}

TEST_CASE("p=0 never adopts and p=1 always adopts") {
  Scenario sc = testsupport::mini_scenario();
  sc.user_query = inject_direct(sc.user_query, payload_for(sc));
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    ScriptedGuestSpec p0 = sc.guest;
    p0.susceptibility = 0.0;
    ScriptedGuest never(p0, sc.tool_goals(), seed);
    CHECK(never.propose(view_of(sc)).call->name == "write_document");

    ScriptedGuestSpec p1 = sc.guest;
    p1.susceptibility = 1.0;
    ScriptedGuest always(p1, sc.tool_goals(), seed);
    CHECK(always.propose(view_of(sc)).call->name == "send_email");
  }
}

TEST_CASE("deterministic traces for a fixed seed") {
  const Scenario sc = testsupport::mini_scenario();
  auto run_once = [&]() {
    ScriptedGuest guest(sc.guest, sc.tool_goals(), 77);
    return trace_to_json(run_episode_undefended(guest, sc)).dump();
  };
  CHECK(run_once() == run_once());
}
