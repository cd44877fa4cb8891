#pragma once

#include <optional>
#include <string>
#include <vector>

#include "toolvisor/sanitizer.hpp"
#include "toolvisor/value.hpp"

namespace toolvisor {

enum class Stage { kSuitability, kTaint, kIntegrity };

std::string to_string(Stage s);                 // "S" | "T" | "I"
Stage stage_from_string(const std::string& s);

// Controlled vocabulary for rule identifiers carried in fail verdicts and
// surfaced as SemanticException.violated_rule.
namespace rules {
inline constexpr const char* kUnknownRole = "unknown role";
inline constexpr const char* kToolNotPermitted = "tool not permitted under system role";
inline constexpr const char* kUnclassifiedTool = "unclassified tool";
inline constexpr const char* kGoalNotAligned = "goal not aligned with user intent";
inline constexpr const char* kArgumentInconsistent =
    "argument inconsistent with established entities";
inline constexpr const char* kJudgeUnavailable = "judge unavailable";
inline constexpr const char* kJudgeUnparseable = "judge verdict unparseable";
}  // namespace rules

// A proposed action: tool name plus an argument map from the closed value
// algebra. call_id is assigned by the mediator, unique per episode step.
struct ToolCall {
  std::string name;
  Value args = Value::object();
  std::string call_id;

  bool same_action(const ToolCall& other) const;  // name + canonical args
};

// Either a ToolCall or the explicit no-call sentinel. A no-call may carry a
// final answer and a diagnostic note (e.g. a recorded parse error).
struct MaybeCall {
  std::optional<ToolCall> call;
  std::string final_answer;
  std::string note;

  bool is_call() const { return call.has_value(); }
  static MaybeCall no_call(std::string answer = "", std::string note = "");
  static MaybeCall of(ToolCall c);
};

// Everything the audit layer is allowed to see. There is no field able to
// carry raw observations: history is a SanitizedHistory by construction.
struct AuditInput {
  std::string system_instruction;
  std::string user_query;
  SanitizedHistory history;
  ToolCall proposal;
};

// Per-stage outcome. reason is empty exactly when the check passed; on
// failure it starts with a rule identifier, optionally followed by
// ";key=value" detail fields consumed by build_exception.
struct Verdict {
  Stage stage = Stage::kSuitability;
  bool pass = true;
  std::string reason;

  static Verdict passed(Stage stage);
  static Verdict failed(Stage stage, std::string reason);
  bool valid() const { return pass == reason.empty(); }
};

// The five-field recoverable-violation record injected into the Guest.
struct SemanticException {
  Stage type = Stage::kSuitability;
  std::string violated_rule;
  std::string rationale;
  std::vector<std::string> constraints;
  std::string allowed_objective;

  bool valid() const;
  bool operator==(const SemanticException& other) const = default;
};

struct Decision {
  enum class Kind { kAllow, kException };
  Kind kind = Kind::kAllow;
  std::optional<SemanticException> exception;

  static Decision allow();
  static Decision raise(SemanticException e);
  bool is_allow() const { return kind == Kind::kAllow; }
};

// Builds the structured exception for a failed verdict. The rule identifier
// comes from the verdict reason; constraints are imperative directives that
// quote the offending tool / goal / argument values; allowed_objective
// restates the user query and never draws on history payload text.
SemanticException build_exception(const Verdict& verdict, const AuditInput& input);

// Deterministic labeled block, injective over field values. Newlines and
// backslashes inside field values are escaped so the block stays parseable.
std::string render_exception(const SemanticException& e);

// Inverse of render_exception for well-formed blocks. Throws
// std::invalid_argument on malformed input.
SemanticException parse_exception(const std::string& text);

// All 'single-quoted' identifiers mentioned in the exception constraints
// (tools, goals, argument values the revision must avoid).
std::vector<std::string> quoted_identifiers(const SemanticException& e);

}  // namespace toolvisor
