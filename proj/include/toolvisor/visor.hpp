#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "toolvisor/audit.hpp"
#include "toolvisor/guest.hpp"
#include "toolvisor/scenario.hpp"

namespace toolvisor {

enum class FinalPolicy { kExecuteLast, kBlock };
std::string to_string(FinalPolicy p);

// Mediation knobs. correction_rounds == 0 is block-only: an exception means
// the step executes nothing and no revision is requested. Unless set
// explicitly, revisions are executed immediately at N <= 1 and re-audited at
// N >= 2.
struct VisorConfig {
  std::string name = "full";
  int correction_rounds = 1;
  std::optional<bool> reaudit_revisions;
  FinalPolicy final_policy = FinalPolicy::kExecuteLast;
  StageToggles toggles = StageToggles::all_on();
  int step_limit = 20;

  bool effective_reaudit() const {
    return reaudit_revisions.value_or(correction_rounds >= 2);
  }

  // Enforces the block-only invariant (rounds == 0 forces final_policy=block)
  // and rejects negative rounds.
  VisorConfig normalized() const;
};

struct PhaseTimings {
  double propose = 0.0;
  double audit = 0.0;
  double revise = 0.0;
  double execute = 0.0;
  double step_total = 0.0;
};

// Deterministic cost accounting alongside wall-clock phases: one unit per
// backend invocation.
struct WorkCounts {
  std::int64_t guest_calls = 0;
  std::int64_t judge_checks = 0;
  std::int64_t tool_executions = 0;

  std::int64_t total() const { return guest_calls + judge_checks + tool_executions; }
  WorkCounts& operator+=(const WorkCounts& other);
};

struct ExecutedStep {
  int index = 0;
  MaybeCall proposal;
  Decision decision;
  std::vector<std::pair<SemanticException, MaybeCall>> revisions;
  MaybeCall executed;
  std::optional<RawStepRecord> raw_record;
  PhaseTimings timings;
  WorkCounts work;
};

struct EpisodeTrace {
  std::string scenario_id;
  std::string attack = "none";
  std::string config_name;
  std::uint64_t seed = 0;
  std::vector<ExecutedStep> steps;
  Value final_state;
  SideEffectLedger ledger;
  bool truncated = false;
  std::string final_answer;
  JudgeLog judge_log;
  std::string payload;  // rendered payload delivered this episode, if any
  double wall_seconds = 0.0;
  WorkCounts work;

  std::vector<ToolCall> executed_calls() const;
  std::size_t exception_count() const;
  std::string judge_inputs_concatenated() const;
  // Concatenated context channels only (system instruction, user query,
  // history rendering) across all judge calls; excludes the audited
  // proposal's own name/args fields.
  std::string judge_context_channels() const;
};

// One trap-audit-recover step. NoCall proposals end the step with no audit
// and no execution. On an exception with rounds available, the rendered
// exception is injected and the revision executed (re-audited first when
// configured); with rounds == 0 nothing executes.
ExecutedStep mediate_step(Guest& guest, StiAuditor& auditor, const Scenario& scenario,
                          Value& state, SideEffectLedger& ledger,
                          std::vector<RawStepRecord>& raw_trace, int step_index,
                          const VisorConfig& config);

// Runs mediate_step until the guest returns a no-call final answer or the
// step limit truncates the episode.
EpisodeTrace run_episode(Guest& guest, std::shared_ptr<Judge> judge, const Scenario& scenario,
                         const VisorConfig& config);

// The same guest/environment loop with no visor in between; baseline for
// the no-defense equivalence property.
EpisodeTrace run_episode_undefended(Guest& guest, const Scenario& scenario,
                                    int step_limit = 20);

// Runs the benign plan with the scripted guest and no defense and checks the
// scenario's own target checker. Returns an error message on failure.
std::optional<std::string> self_validate(const Scenario& scenario);

// Structured trace rendering (one record per step). Timings are wall-clock
// and excluded unless requested, so traces stay byte-comparable.
Value trace_to_json(const EpisodeTrace& trace, bool include_timings = false);

Value maybe_call_to_json(const MaybeCall& m);
Value exception_to_json(const SemanticException& e);

}  // namespace toolvisor
