#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "toolvisor/attacks.hpp"
#include "toolvisor/core.hpp"
#include "toolvisor/policy.hpp"

namespace toolvisor {

enum class ParamKind { kString, kNumber, kBoolean, kList, kMap, kAny };
ParamKind param_kind_from_string(const std::string& s);
std::string to_string(ParamKind k);

struct ParamSpec {
  std::string name;
  ParamKind kind = ParamKind::kString;
  bool required = true;
};

enum class SideEffect { kRead, kWrite, kExternalSend };
SideEffect side_effect_from_string(const std::string& s);
std::string to_string(SideEffect e);

// Deterministic simulated behavior: observation text from args plus an
// in-place state delta. Throws ToolError to signal a failed call.
class ToolError : public std::runtime_error {
 public:
  explicit ToolError(const std::string& what) : std::runtime_error(what) {}
};

using BehaviorFn = std::function<std::string(const Value& args, Value& state)>;

struct ToolSpec {
  std::string name;
  std::vector<ParamSpec> params;
  std::string goal;
  SideEffect side_effect = SideEffect::kRead;
  std::string behavior;  // built-in behavior key; defaults to the tool name

  const ParamSpec* find_param(const std::string& name) const;
};

// Names of all built-in behaviors (simulated tools).
const std::map<std::string, BehaviorFn>& builtin_behaviors();

// Append-only record of effectful executions; ground truth for checkers.
struct LedgerEntry {
  std::string tool;
  Value args;
  int step_index = 0;
};

struct SideEffectLedger {
  std::vector<LedgerEntry> entries;

  bool contains(const ToolCall& call) const;  // name + canonical args match
};

// One plan step of the scripted guest. Argument values may be literals or
// {"$extract": {"step": k, "regex": "...", "group": g}} references that pull
// a capture from the raw observation of plan step k (1-based, earlier step).
struct PlanStep {
  std::string tool;
  Value args = Value::object();
};

struct ScriptedGuestSpec {
  std::vector<PlanStep> plan;
  double susceptibility = 1.0;
  std::vector<std::string> trigger_patterns = {kDirectiveMarker};
  std::string final_answer = "Task complete.";
};

struct ContextItem {
  std::string name;
  std::string text;
};

struct InjectionPointSpec {
  std::string id;
  std::string target;  // "state:<json-pointer>" or "context:<item name>"
  InjectPosition position = InjectPosition::kEnd;
  std::size_t midpoint_offset = std::string::npos;  // from a stripped {{MID}} marker
};

inline constexpr const char* kMidpointMarker = "{{MID}}";

enum class InjectionMode { kDirect, kIndirect };

// A self-contained episode definition.
struct Scenario {
  int schema_version = 1;
  std::string id;
  std::string environment;  // "banking" | "mailbox"
  std::string assistant_name = "assistant";
  std::string system_instruction;
  std::string user_query;
  InjectionMode injection_mode = InjectionMode::kDirect;
  std::map<std::string, ToolSpec> tools;
  Value initial_state = Value::object();
  std::vector<ContextItem> context_items;
  std::vector<InjectionPointSpec> injection_points;
  InjectedTask injected_task;
  ScriptedGuestSpec guest;
  PolicySpec policy;
  Value target_checker = Value::array();

  const ToolSpec* find_tool(const std::string& name) const;
  std::map<std::string, std::string> tool_goals() const;
};

class ScenarioError : public std::runtime_error {
 public:
  explicit ScenarioError(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  std::vector<std::string> errors_;
};

// Parses and statically validates a scenario document; every unresolved
// reference is reported with a path into the document.
Scenario parse_scenario(const Value& doc, const std::string& source_name = "scenario");
Scenario load_scenario(const std::string& path);

// Executes one call against the environment. Schema violations and behavior
// errors yield a status=error record; successful effectful calls append to
// the ledger. Returns the raw record; state is mutated in place.
RawStepRecord execute_tool(const Scenario& scenario, const ToolCall& call, Value& state,
                           SideEffectLedger& ledger, int step_index);

// Scenario copy with the rendered payload delivered: appended to the user
// query for direct scenarios, spliced into the declared injection point for
// indirect ones. attack_name "none" returns an untouched copy.
struct PreparedScenario {
  Scenario scenario;
  std::string attack;
  std::string payload;  // empty for "none"
};

PreparedScenario apply_attack(const Scenario& scenario, const std::string& attack_name,
                              const std::map<std::string, AttackTemplate>& templates);

// Inputs for outcome checking at episode end.
struct OutcomeInputs {
  const Value& final_state;
  const SideEffectLedger& ledger;
  const std::vector<ToolCall>& executed_calls;
  const std::string& final_answer;
};

struct Outcomes {
  bool target_completed = false;
  bool injection_executed = false;
};

// target_checker conditions all hold, and the attacker-intended call
// appears in the ledger (name and all bound args) respectively.
Outcomes check_outcomes(const Scenario& scenario, const OutcomeInputs& inputs);

// Evaluates one checker condition; exposed for checker unit tests.
bool eval_checker_condition(const Value& condition, const OutcomeInputs& inputs);

}  // namespace toolvisor
