#pragma once

#include <map>
#include <optional>
#include <string>

#include "toolvisor/audit.hpp"
#include "toolvisor/guest.hpp"

namespace toolvisor {

// Wire protocol, one request/response pair per check:
//   POST <path> {stage, system_instruction, user_query, history_rendering,
//                tool_name, canonical_args, prompt}
// The response body must contain exactly one verdict object
//   {"status": "pass"|"fail", "reason": <string>}
// possibly surrounded by prose. Anything else fails closed.
struct RemoteJudgeConfig {
  std::string host = "127.0.0.1";
  int port = 0;
  std::string path = "/judge";
  int timeout_ms = 30000;
  // Per-stage prompt templates over {{system_instruction}}, {{user_query}},
  // {{history}}, {{tool_name}}, {{args}}.
  std::map<Stage, std::string> prompts;

  static RemoteJudgeConfig with_default_prompts(std::string host, int port);
};

// Extracts the verdict object from a response body: the whole body if it is
// one, else the unique embedded JSON object whose keys are a subset of
// {status, reason} with a valid status. Zero or several candidates yield a
// fail verdict (fail-closed).
Verdict extract_verdict(Stage stage, const std::string& body);

class RemoteJudge : public Judge {
 public:
  explicit RemoteJudge(RemoteJudgeConfig config) : config_(std::move(config)) {}

  Verdict check_suitability(const std::string& system_instruction,
                            const std::string& user_query,
                            const std::string& tool_name) override;
  Verdict check_taint(const std::string& user_query, const SanitizedHistory& history,
                      const ToolCall& call) override;
  Verdict check_integrity(const std::string& user_query, const SanitizedHistory& history,
                          const ToolCall& call) override;

 private:
  Verdict call_stage(Stage stage, const std::string& system_instruction,
                     const std::string& user_query, const std::string& history_rendering,
                     const std::string& tool_name, const std::string& canonical_args);

  RemoteJudgeConfig config_;
};

// Chat-style remote guest:
//   POST <path> {system_instruction, user_query, tools, history_rendering,
//                context, exception?}
// Response grammar (frozen): a JSON object with either
//   "tool_calls": [{"name": ..., "args": {...}}, ...]   (first call taken)
// or "final": "<answer text>". A plain-text body is a final answer. Any
// malformed tool call yields a no-call with a recorded parse error.
struct RemoteGuestConfig {
  std::string host = "127.0.0.1";
  int port = 0;
  std::string path = "/chat";
  int timeout_ms = 30000;
};

class RemoteGuest : public Guest {
 public:
  RemoteGuest(RemoteGuestConfig config, Value tool_schemas)
      : config_(std::move(config)), tool_schemas_(std::move(tool_schemas)) {}

  MaybeCall propose(const GuestView& view) override;
  MaybeCall revise(const GuestView& view) override;

 private:
  MaybeCall request(const GuestView& view);

  RemoteGuestConfig config_;
  Value tool_schemas_;
};

// Schema document advertised to a remote guest for a scenario's registry.
Value tool_schemas_for(const Scenario& scenario);

// Parses a remote guest response body into a MaybeCall per the grammar above.
MaybeCall parse_guest_response(const std::string& body);

}  // namespace toolvisor
