#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "toolvisor/core.hpp"
#include "toolvisor/policy.hpp"

namespace toolvisor {

struct StageToggles {
  bool enable_s = true;
  bool enable_t = true;
  bool enable_i = true;

  bool enabled(Stage stage) const;
  static StageToggles all_on() { return {true, true, true}; }
  static StageToggles all_off() { return {false, false, false}; }
};

// Transport-level judge failure; the audit turns it into a fail-closed
// exception, never into an allow.
class JudgeUnavailableError : public std::runtime_error {
 public:
  explicit JudgeUnavailableError(const std::string& what) : std::runtime_error(what) {}
};

// Exact inputs handed to a judge backend for one check. Recorded so tests
// can assert the audit layer never sees raw-context payloads.
struct JudgeCall {
  Stage stage = Stage::kSuitability;
  std::string system_instruction;
  std::string user_query;
  std::string history_rendering;
  std::string tool_name;
  std::string canonical_args;

  std::string concatenated() const;
};

using JudgeLog = std::vector<JudgeCall>;

// Backend answering the three checks. Implementations never receive raw
// observations; the AuditInput type has no field that could carry them.
class Judge {
 public:
  virtual ~Judge() = default;
  virtual Verdict check_suitability(const std::string& system_instruction,
                                    const std::string& user_query,
                                    const std::string& tool_name) = 0;
  virtual Verdict check_taint(const std::string& user_query, const SanitizedHistory& history,
                              const ToolCall& call) = 0;
  virtual Verdict check_integrity(const std::string& user_query,
                                  const SanitizedHistory& history, const ToolCall& call) = 0;
};

// Deterministic judge driven by a PolicySpec.
class RulePolicyJudge : public Judge {
 public:
  explicit RulePolicyJudge(PolicySpec policy) : policy_(std::move(policy)) {}

  Verdict check_suitability(const std::string& system_instruction,
                            const std::string& user_query,
                            const std::string& tool_name) override;
  Verdict check_taint(const std::string& user_query, const SanitizedHistory& history,
                      const ToolCall& call) override;
  Verdict check_integrity(const std::string& user_query, const SanitizedHistory& history,
                          const ToolCall& call) override;

  const PolicySpec& policy() const { return policy_; }

  // Goals legitimised by successful prior steps.
  std::set<std::string> derived_goals(const SanitizedHistory& history) const;

 private:
  PolicySpec policy_;
};

// Runs the ordered S -> T -> I pipeline over one proposal. Disabled stages
// pass unconditionally and are not sent to the backend; the first enabled
// failure wins and later stages are not evaluated. Backend errors fail
// closed with the "judge unavailable" rule.
class StiAuditor {
 public:
  StiAuditor(std::shared_ptr<Judge> judge, StageToggles toggles, JudgeLog* log = nullptr)
      : judge_(std::move(judge)), toggles_(toggles), log_(log) {}

  Decision audit(const AuditInput& input);

  const StageToggles& toggles() const { return toggles_; }
  std::size_t checks_performed() const { return checks_; }

 private:
  Verdict run_stage(Stage stage, const AuditInput& input, const std::string& history_rendering,
                    const std::string& canonical_args);

  std::shared_ptr<Judge> judge_;
  StageToggles toggles_;
  JudgeLog* log_;
  std::size_t checks_ = 0;
};

// Pure decision algebra over a full verdict triple: the decision is the
// exception built from the earliest enabled failure, else allow. Used by
// property tests to cross-check the short-circuiting auditor.
Decision decide_from_verdicts(const std::vector<Verdict>& verdicts, StageToggles toggles,
                              const AuditInput& input);

}  // namespace toolvisor
