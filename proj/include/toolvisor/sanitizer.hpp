#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "toolvisor/value.hpp"

namespace toolvisor {

// Framing tokens wrapping every rendered history block. Content lines are
// escaped so neither token can occur inside them.
inline constexpr const char* kHistoryOpen = "<<[SANITIZED_HISTORY]>>";
inline constexpr const char* kHistoryClose = "<<[/SANITIZED_HISTORY]>>";

inline constexpr std::size_t kDefaultSummaryCap = 200;

// Canonical-args string truncation: values longer than this many bytes are
// cut and suffixed with "…#" plus the first 8 hex chars of their SHA-256.
inline constexpr std::size_t kStringTruncationLimit = 256;
inline constexpr std::size_t kDigestSuffixHexLen = 8;

enum class StepStatus { kOk, kError };

std::string to_string(StepStatus s);
StepStatus step_status_from_string(const std::string& s);

// One executed step as the environment saw it. raw_observation may carry
// attacker-controlled text; only the sanitizer may consume it.
struct RawStepRecord {
  std::string tool_name;
  Value raw_args = Value::object();
  std::string raw_observation;
  StepStatus status = StepStatus::kOk;
};

class SanitizedRecord {
 public:
  const std::string& tool_name() const { return tool_name_; }
  const std::string& canonical_args() const { return canonical_args_; }
  StepStatus status() const { return status_; }
  const std::string& return_summary() const { return return_summary_; }

  friend SanitizedRecord sanitize_record(const RawStepRecord& r, std::size_t summary_cap);

 private:
  SanitizedRecord() = default;

  std::string tool_name_;
  std::string canonical_args_;
  StepStatus status_ = StepStatus::kOk;
  std::string return_summary_;
};

// Structured history view: the only task state the audit layer may see.
// Default construction gives the empty view; records can only enter via
// build_history.
class SanitizedHistory {
 public:
  SanitizedHistory() = default;

  const std::vector<SanitizedRecord>& records() const { return records_; }
  const std::string& delimiter_open() const { return delimiter_open_; }
  const std::string& delimiter_close() const { return delimiter_close_; }
  bool empty() const { return records_.empty(); }
  std::size_t size() const { return records_.size(); }

  friend SanitizedHistory build_history(const std::vector<RawStepRecord>& trace,
                                        std::size_t summary_cap);

 private:
  std::vector<SanitizedRecord> records_;
  std::string delimiter_open_ = kHistoryOpen;
  std::string delimiter_close_ = kHistoryClose;
};

// Canonical text form of an argument map. Frozen grammar: JSON object
// notation, keys sorted bytewise at every nesting level, no whitespace
// between tokens, string values longer than kStringTruncationLimit bytes
// truncated and digest-suffixed. Deterministic and idempotent over its own
// output. Throws ValueError outside the value algebra.
std::string canonicalize_args(const Value& args);

// Single-value canonical form (same rules, any algebra value).
std::string canonical_value(const Value& v);

// Truncation-digest form of a string value, applied when its byte length
// exceeds kStringTruncationLimit. Exposed for entity matching on long values.
std::string truncation_digest_form(const std::string& s);
bool is_truncation_digest_form(const std::string& s);

// Status label plus the first summary_cap bytes of the observation, with
// delimiter-forming and line-breaking characters substituted.
std::string summarize_return(const std::string& raw_observation, StepStatus status,
                             std::size_t summary_cap = kDefaultSummaryCap);

// 1:1 character substitution that prevents framing tokens and line breaks
// from surviving into rendered history lines.
std::string escape_for_history(const std::string& text);

SanitizedRecord sanitize_record(const RawStepRecord& r,
                                std::size_t summary_cap = kDefaultSummaryCap);

SanitizedHistory build_history(const std::vector<RawStepRecord>& trace,
                               std::size_t summary_cap = kDefaultSummaryCap);

// Deterministic text rendering: open token line, one line per record,
// close token line.
std::string render_history(const SanitizedHistory& h);

}  // namespace toolvisor
