#include "toolvisor/visor.hpp"

#include <chrono>
#include <stdexcept>

namespace toolvisor {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

GuestView make_view(const Scenario& scenario, const std::vector<RawStepRecord>& raw_trace,
                    const SanitizedHistory& history,
                    std::optional<std::string> pending_exception) {
  GuestView view;
  view.system_instruction = scenario.system_instruction;
  view.user_query = scenario.user_query;
  view.history_rendering = render_history(history);
  for (const auto& item : scenario.context_items) view.raw_context.push_back(item.text);
  for (const auto& rec : raw_trace) view.raw_context.push_back(rec.raw_observation);
  view.pending_exception = std::move(pending_exception);
  return view;
}

std::string step_call_id(int step_index, int attempt) {
  return "s" + std::to_string(step_index) + (attempt == 0 ? "" : ".r" + std::to_string(attempt));
}

}  // namespace

std::string to_string(FinalPolicy p) {
  return p == FinalPolicy::kBlock ? "block" : "execute_last";
}

VisorConfig VisorConfig::normalized() const {
  if (correction_rounds < 0) {
    throw std::invalid_argument("correction_rounds must be >= 0");
  }
  VisorConfig out = *this;
  if (out.correction_rounds == 0) out.final_policy = FinalPolicy::kBlock;
  return out;
}

WorkCounts& WorkCounts::operator+=(const WorkCounts& other) {
  guest_calls += other.guest_calls;
  judge_checks += other.judge_checks;
  tool_executions += other.tool_executions;
  return *this;
}

std::vector<ToolCall> EpisodeTrace::executed_calls() const {
  std::vector<ToolCall> calls;
  for (const auto& step : steps) {
    if (step.executed.is_call()) calls.push_back(*step.executed.call);
  }
  return calls;
}

std::size_t EpisodeTrace::exception_count() const {
  std::size_t n = 0;
  for (const auto& step : steps) {
    if (!step.decision.is_allow()) ++n;
    n += step.revisions.empty() ? 0 : step.revisions.size() - 1;
  }
  return n;
}

std::string EpisodeTrace::judge_inputs_concatenated() const {
  std::string out;
  for (const auto& call : judge_log) {
    out += call.concatenated();
    out += '\n';
  }
  return out;
}

std::string EpisodeTrace::judge_context_channels() const {
  std::string out;
  for (const auto& call : judge_log) {
    out += call.system_instruction;
    out += '\n';
    out += call.user_query;
    out += '\n';
    out += call.history_rendering;
    out += '\n';
  }
  return out;
}

ExecutedStep mediate_step(Guest& guest, StiAuditor& auditor, const Scenario& scenario,
                          Value& state, SideEffectLedger& ledger,
                          std::vector<RawStepRecord>& raw_trace, int step_index,
                          const VisorConfig& config) {
  ExecutedStep step;
  step.index = step_index;
  const auto step_start = Clock::now();
  const SanitizedHistory history = build_history(raw_trace);

  const std::size_t checks_before = auditor.checks_performed();

  auto execute = [&](const ToolCall& call) {
    const auto t0 = Clock::now();
    RawStepRecord record = execute_tool(scenario, call, state, ledger, step_index);
    step.timings.execute += seconds_since(t0);
    step.work.tool_executions += 1;
    raw_trace.push_back(record);
    step.raw_record = record;
  };

  // Trap: obtain the proposal.
  {
    const auto t0 = Clock::now();
    step.proposal = guest.propose(make_view(scenario, raw_trace, history, std::nullopt));
    step.timings.propose = seconds_since(t0);
    step.work.guest_calls += 1;
  }
  if (!step.proposal.is_call()) {
    step.decision = Decision::allow();
    step.executed = step.proposal;
    step.work.judge_checks =
        static_cast<std::int64_t>(auditor.checks_performed() - checks_before);
    step.timings.step_total = seconds_since(step_start);
    return step;
  }
  step.proposal.call->call_id = step_call_id(step_index, 0);

  // Audit.
  AuditInput input{scenario.system_instruction, scenario.user_query, history,
                   *step.proposal.call};
  {
    const auto t0 = Clock::now();
    step.decision = auditor.audit(input);
    step.timings.audit += seconds_since(t0);
  }
  if (step.decision.is_allow()) {
    step.executed = step.proposal;
    execute(*step.executed.call);
    step.work.judge_checks =
        static_cast<std::int64_t>(auditor.checks_performed() - checks_before);
    step.timings.step_total = seconds_since(step_start);
    return step;
  }

  // Recover: exception injection and revision rounds.
  step.executed = MaybeCall::no_call();
  SemanticException current = *step.decision.exception;
  for (int round = 1; round <= config.correction_rounds; ++round) {
    MaybeCall revision;
    {
      const auto t0 = Clock::now();
      revision = guest.revise(
          make_view(scenario, raw_trace, history, render_exception(current)));
      step.timings.revise += seconds_since(t0);
      step.work.guest_calls += 1;
    }
    if (revision.is_call()) revision.call->call_id = step_call_id(step_index, round);
    step.revisions.emplace_back(current, revision);
    if (!revision.is_call()) break;  // guest yielded; step executes nothing

    if (!config.effective_reaudit()) {
      step.executed = revision;
      execute(*step.executed.call);
      break;
    }
    AuditInput revised_input{scenario.system_instruction, scenario.user_query, history,
                             *revision.call};
    Decision re_decision;
    {
      const auto t0 = Clock::now();
      re_decision = auditor.audit(revised_input);
      step.timings.audit += seconds_since(t0);
    }
    if (re_decision.is_allow()) {
      step.executed = revision;
      execute(*step.executed.call);
      break;
    }
    current = *re_decision.exception;
    if (round == config.correction_rounds &&
        config.final_policy == FinalPolicy::kExecuteLast) {
      step.executed = revision;
      execute(*step.executed.call);
    }
  }
  step.work.judge_checks =
      static_cast<std::int64_t>(auditor.checks_performed() - checks_before);
  step.timings.step_total = seconds_since(step_start);
  return step;
}

EpisodeTrace run_episode(Guest& guest, std::shared_ptr<Judge> judge, const Scenario& scenario,
                         const VisorConfig& raw_config) {
  const VisorConfig config = raw_config.normalized();
  const auto start = Clock::now();

  EpisodeTrace trace;
  trace.scenario_id = scenario.id;
  trace.config_name = config.name;
  trace.final_state = scenario.initial_state;

  StiAuditor auditor(std::move(judge), config.toggles, &trace.judge_log);
  std::vector<RawStepRecord> raw_trace;

  for (int step_index = 1; step_index <= config.step_limit; ++step_index) {
    ExecutedStep step = mediate_step(guest, auditor, scenario, trace.final_state,
                                     trace.ledger, raw_trace, step_index, config);
    trace.work += step.work;
    const bool done = !step.proposal.is_call();
    if (done) trace.final_answer = step.proposal.final_answer;
    trace.steps.push_back(std::move(step));
    if (done) {
      trace.wall_seconds = seconds_since(start);
      return trace;
    }
  }
  trace.truncated = true;
  trace.wall_seconds = seconds_since(start);
  return trace;
}

EpisodeTrace run_episode_undefended(Guest& guest, const Scenario& scenario, int step_limit) {
  const auto start = Clock::now();
  EpisodeTrace trace;
  trace.scenario_id = scenario.id;
  trace.config_name = "bare";
  trace.final_state = scenario.initial_state;
  std::vector<RawStepRecord> raw_trace;

  for (int step_index = 1; step_index <= step_limit; ++step_index) {
    ExecutedStep step;
    step.index = step_index;
    const SanitizedHistory history = build_history(raw_trace);
    step.proposal = guest.propose(make_view(scenario, raw_trace, history, std::nullopt));
    step.work.guest_calls = 1;
    step.decision = Decision::allow();
    step.executed = step.proposal;
    if (step.executed.is_call()) {
      step.executed.call->call_id = step_call_id(step_index, 0);
      RawStepRecord record = execute_tool(scenario, *step.executed.call, trace.final_state,
                                          trace.ledger, step_index);
      step.work.tool_executions = 1;
      raw_trace.push_back(record);
      step.raw_record = record;
    }
    trace.work += step.work;
    const bool done = !step.proposal.is_call();
    if (done) trace.final_answer = step.proposal.final_answer;
    trace.steps.push_back(std::move(step));
    if (done) {
      trace.wall_seconds = seconds_since(start);
      return trace;
    }
  }
  trace.truncated = true;
  trace.wall_seconds = seconds_since(start);
  return trace;
}

std::optional<std::string> self_validate(const Scenario& scenario) {
  ScriptedGuest guest(scenario.guest, scenario.tool_goals(), /*seed=*/0);
  EpisodeTrace trace = run_episode_undefended(guest, scenario);
  if (trace.truncated) {
    return "benign run hit the step limit before the plan completed";
  }
  const auto executed = trace.executed_calls();
  const Outcomes outcomes = check_outcomes(
      scenario, OutcomeInputs{trace.final_state, trace.ledger, executed, trace.final_answer});
  if (!outcomes.target_completed) {
    return "benign plan does not satisfy the scenario's own target checker";
  }
  if (outcomes.injection_executed) {
    return "benign run already executes the attacker-intended call";
  }
  return std::nullopt;
}

Value maybe_call_to_json(const MaybeCall& m) {
  if (!m.is_call()) {
    Value out{{"no_call", true}};
    if (!m.final_answer.empty()) out["final_answer"] = m.final_answer;
    if (!m.note.empty()) out["note"] = m.note;
    return out;
  }
  return Value{{"name", m.call->name}, {"args", m.call->args}, {"call_id", m.call->call_id}};
}

Value exception_to_json(const SemanticException& e) {
  return Value{{"type", to_string(e.type)},
               {"violated_rule", e.violated_rule},
               {"rationale", e.rationale},
               {"constraints", e.constraints},
               {"allowed_objective", e.allowed_objective}};
}

Value trace_to_json(const EpisodeTrace& trace, bool include_timings) {
  Value steps = Value::array();
  for (const auto& step : trace.steps) {
    Value s{{"index", step.index},
            {"proposal", maybe_call_to_json(step.proposal)},
            {"decision", step.decision.is_allow() ? Value{{"kind", "allow"}}
                                                  : Value{{"kind", "exception"},
                                                          {"exception", exception_to_json(
                                                                            *step.decision
                                                                                 .exception)}}},
            {"executed", maybe_call_to_json(step.executed)}};
    Value revisions = Value::array();
    for (const auto& [exception, revision] : step.revisions) {
      revisions.push_back(Value{{"exception", exception_to_json(exception)},
                                {"revision", maybe_call_to_json(revision)}});
    }
    s["revisions"] = revisions;
    if (step.raw_record) {
      s["record"] = Value{{"tool", step.raw_record->tool_name},
                          {"status", to_string(step.raw_record->status)},
                          {"observation", step.raw_record->raw_observation}};
    }
    s["work"] = Value{{"guest_calls", step.work.guest_calls},
                      {"judge_checks", step.work.judge_checks},
                      {"tool_executions", step.work.tool_executions}};
    if (include_timings) {
      s["timings"] = Value{{"propose", step.timings.propose},
                           {"audit", step.timings.audit},
                           {"revise", step.timings.revise},
                           {"execute", step.timings.execute},
                           {"step_total", step.timings.step_total}};
    }
    steps.push_back(std::move(s));
  }
  Value out{{"scenario", trace.scenario_id},
            {"attack", trace.attack},
            {"config", trace.config_name},
            {"seed", trace.seed},
            {"truncated", trace.truncated},
            {"final_answer", trace.final_answer},
            {"steps", steps},
            {"final_state", trace.final_state}};
  Value ledger = Value::array();
  for (const auto& entry : trace.ledger.entries) {
    ledger.push_back(
        Value{{"tool", entry.tool}, {"args", entry.args}, {"step", entry.step_index}});
  }
  out["ledger"] = ledger;
  if (include_timings) out["wall_seconds"] = trace.wall_seconds;
  return out;
}

}  // namespace toolvisor
