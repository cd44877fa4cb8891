#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

namespace toolvisor {

// How an argument value may be established.
enum class BindingKind {
  kAnyOf,             // member of a fixed literal set
  kFromUserQuery,     // literal occurrence in the user query
  kFromPriorReturns,  // occurrence in prior sanitized returns / canonical args
  kUnconstrained,
};

BindingKind binding_kind_from_string(const std::string& s);
std::string to_string(BindingKind k);

struct EntityBinding {
  BindingKind kind = BindingKind::kUnconstrained;
  std::vector<std::string> values;  // for kAnyOf
};

struct DerivedGoalRule {
  std::string when_tool;  // goal becomes legitimate once this tool succeeded
  std::string adds_goal;
};

// Deterministic policy backing the rule judge. role_id and user_query_id
// select the episode's bindings inside the allowlist / goal tables.
struct PolicySpec {
  std::string role_id;
  std::string user_query_id;
  std::map<std::string, std::set<std::string>> tool_allowlist;     // role -> tools
  std::map<std::string, std::string> goal_map;                     // tool -> goal
  std::map<std::string, std::set<std::string>> user_goal_bindings; // query id -> goals
  std::map<std::string, EntityBinding> entity_bindings;            // arg name -> binding
  std::vector<DerivedGoalRule> derived_goal_rules;
};

}  // namespace toolvisor
