#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "toolvisor/core.hpp"

namespace toolvisor {

// An attacker-intended task: prose imperative plus the exact tool call the
// attacker wants executed.
struct InjectedTask {
  std::string id;
  std::string description;
  ToolCall tool_call;
};

// Machine-actionable directive embedded in every rendered payload; this is
// the marker form a susceptible scripted guest falls for.
inline constexpr const char* kDirectiveMarker = "ACTION REQUIRED: use tool ";

std::string render_directive(const ToolCall& call);

struct ParsedDirective {
  ToolCall call;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::string text;  // exact directive substring
};

// First well-formed directive at or after `from`, if any.
std::optional<ParsedDirective> find_directive(const std::string& text, std::size_t from = 0);

// Payload strategy: named template over {{task}} / {{assistant_name}}.
struct AttackTemplate {
  std::string name;
  std::string text;
};

// Canonical strategy order used by the harness (excludes the no-attack row).
const std::vector<std::string>& attack_names();  // 7 strategies + adaptive

// The adaptive strategy targets the auditor through retrieved content and is
// only delivered at indirect injection points.
bool attack_is_indirect_only(const std::string& name);

// Built-in template set; editable copies ship as a template file.
std::map<std::string, AttackTemplate> default_attack_templates();
std::map<std::string, AttackTemplate> load_attack_templates(const std::string& path);

std::string render_payload(const AttackTemplate& tmpl, const InjectedTask& task,
                           const std::string& assistant_name = "assistant");

// Direct delivery: payload appended to the benign query; the benign query
// stays recoverable as a prefix. Appending an empty payload is the identity.
std::string inject_direct(const std::string& user_query, const std::string& payload);

enum class InjectPosition { kStart, kMiddle, kEnd };
InjectPosition inject_position_from_string(const std::string& s);
std::string to_string(InjectPosition p);

// Indirect delivery: payload spliced into a context item at the named
// position; every other byte of the item is preserved. middle uses the
// declared midpoint offset when given, else the byte midpoint.
std::string inject_indirect(const std::string& context_item, const std::string& payload,
                            InjectPosition position,
                            std::size_t midpoint_offset = std::string::npos);

}  // namespace toolvisor
