#include "toolvisor/audit.hpp"

#include <algorithm>

namespace toolvisor {

namespace {

std::string with_details(const char* rule, const Value& details) {
  return std::string(rule) + "; " + details.dump();
}

bool occurs_in_history(const SanitizedHistory& history, const std::string& needle) {
  for (const auto& rec : history.records()) {
    if (rec.return_summary().find(needle) != std::string::npos) return true;
    if (rec.canonical_args().find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

bool StageToggles::enabled(Stage stage) const {
  switch (stage) {
    case Stage::kSuitability: return enable_s;
    case Stage::kTaint: return enable_t;
    case Stage::kIntegrity: return enable_i;
  }
  return true;
}

std::string JudgeCall::concatenated() const {
  return to_string(stage) + "\n" + system_instruction + "\n" + user_query + "\n" +
         history_rendering + "\n" + tool_name + "\n" + canonical_args;
}

std::string to_string(BindingKind k) {
  switch (k) {
    case BindingKind::kAnyOf: return "any_of";
    case BindingKind::kFromUserQuery: return "from_user_query";
    case BindingKind::kFromPriorReturns: return "from_prior_returns";
    case BindingKind::kUnconstrained: return "unconstrained";
  }
  return "unconstrained";
}

BindingKind binding_kind_from_string(const std::string& s) {
  if (s == "any_of") return BindingKind::kAnyOf;
  if (s == "from_user_query") return BindingKind::kFromUserQuery;
  if (s == "from_prior_returns") return BindingKind::kFromPriorReturns;
  if (s == "unconstrained") return BindingKind::kUnconstrained;
  throw std::invalid_argument("unknown entity binding kind: " + s);
}

Verdict RulePolicyJudge::check_suitability(const std::string& /*system_instruction*/,
                                           const std::string& /*user_query*/,
                                           const std::string& tool_name) {
  const auto role = policy_.tool_allowlist.find(policy_.role_id);
  if (role == policy_.tool_allowlist.end()) {
    return Verdict::failed(Stage::kSuitability,
                           with_details(rules::kUnknownRole, Value{{"tool", tool_name}}));
  }
  if (role->second.count(tool_name) == 0) {
    return Verdict::failed(Stage::kSuitability,
                           with_details(rules::kToolNotPermitted, Value{{"tool", tool_name}}));
  }
  return Verdict::passed(Stage::kSuitability);
}

std::set<std::string> RulePolicyJudge::derived_goals(const SanitizedHistory& history) const {
  std::set<std::string> goals;
  for (const auto& rule : policy_.derived_goal_rules) {
    for (const auto& rec : history.records()) {
      if (rec.tool_name() == rule.when_tool && rec.status() == StepStatus::kOk) {
        goals.insert(rule.adds_goal);
        break;
      }
    }
  }
  return goals;
}

Verdict RulePolicyJudge::check_taint(const std::string& /*user_query*/,
                                     const SanitizedHistory& history, const ToolCall& call) {
  const auto goal_it = policy_.goal_map.find(call.name);
  if (goal_it == policy_.goal_map.end()) {
    return Verdict::failed(Stage::kTaint,
                           with_details(rules::kUnclassifiedTool, Value{{"tool", call.name}}));
  }
  const std::string& goal = goal_it->second;
  const auto bound = policy_.user_goal_bindings.find(policy_.user_query_id);
  if (bound != policy_.user_goal_bindings.end() && bound->second.count(goal) > 0) {
    return Verdict::passed(Stage::kTaint);
  }
  const auto derived = derived_goals(history);
  if (derived.count(goal) > 0) return Verdict::passed(Stage::kTaint);
  return Verdict::failed(
      Stage::kTaint,
      with_details(rules::kGoalNotAligned, Value{{"tool", call.name}, {"goal", goal}}));
}

Verdict RulePolicyJudge::check_integrity(const std::string& user_query,
                                         const SanitizedHistory& history,
                                         const ToolCall& call) {
  for (const auto& [arg, value] : call.args.items()) {
    const auto binding_it = policy_.entity_bindings.find(arg);
    if (binding_it == policy_.entity_bindings.end()) continue;
    const EntityBinding& binding = binding_it->second;
    const std::string text = value_text(value);
    bool ok = true;
    switch (binding.kind) {
      case BindingKind::kUnconstrained:
        break;
      case BindingKind::kAnyOf:
        ok = std::find(binding.values.begin(), binding.values.end(), text) !=
             binding.values.end();
        break;
      case BindingKind::kFromUserQuery:
        ok = user_query.find(text) != std::string::npos;
        break;
      case BindingKind::kFromPriorReturns:
        ok = occurs_in_history(history, text);
        break;
    }
    if (!ok) {
      return Verdict::failed(
          Stage::kIntegrity,
          with_details(rules::kArgumentInconsistent,
                       Value{{"tool", call.name}, {"arg", arg}, {"value", text}}));
    }
  }
  return Verdict::passed(Stage::kIntegrity);
}

Verdict StiAuditor::run_stage(Stage stage, const AuditInput& input,
                              const std::string& history_rendering,
                              const std::string& canonical_args) {
  ++checks_;
  if (log_) {
    log_->push_back(JudgeCall{stage, input.system_instruction, input.user_query,
                              history_rendering, input.proposal.name, canonical_args});
  }
  try {
    switch (stage) {
      case Stage::kSuitability:
        return judge_->check_suitability(input.system_instruction, input.user_query,
                                         input.proposal.name);
      case Stage::kTaint:
        return judge_->check_taint(input.user_query, input.history, input.proposal);
      case Stage::kIntegrity:
        return judge_->check_integrity(input.user_query, input.history, input.proposal);
    }
  } catch (const std::exception& err) {
    return Verdict::failed(stage, with_details(rules::kJudgeUnavailable,
                                               Value{{"tool", input.proposal.name},
                                                     {"error", err.what()}}));
  }
  return Verdict::passed(stage);
}

Decision StiAuditor::audit(const AuditInput& input) {
  const std::string history_rendering = render_history(input.history);
  const std::string canonical_args = canonicalize_args(input.proposal.args);
  for (Stage stage : {Stage::kSuitability, Stage::kTaint, Stage::kIntegrity}) {
    if (!toggles_.enabled(stage)) continue;
    const Verdict v = run_stage(stage, input, history_rendering, canonical_args);
    if (!v.pass) return Decision::raise(build_exception(v, input));
  }
  return Decision::allow();
}

Decision decide_from_verdicts(const std::vector<Verdict>& verdicts, StageToggles toggles,
                              const AuditInput& input) {
  for (const Verdict& v : verdicts) {
    if (!toggles.enabled(v.stage)) continue;
    if (!v.pass) return Decision::raise(build_exception(v, input));
  }
  return Decision::allow();
}

}  // namespace toolvisor
