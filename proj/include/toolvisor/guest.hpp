#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "toolvisor/core.hpp"
#include "toolvisor/scenario.hpp"

namespace toolvisor {

// Everything the Guest sees at a step. Unlike the audit layer, the Guest
// operates on the full task context: raw_context carries the scenario's
// context items followed by the raw observation of every executed step.
struct GuestView {
  std::string system_instruction;
  std::string user_query;
  std::string history_rendering;
  std::vector<std::string> raw_context;
  std::optional<std::string> pending_exception;  // rendered, revision requests only
};

class Guest {
 public:
  virtual ~Guest() = default;
  virtual MaybeCall propose(const GuestView& view) = 0;
  virtual MaybeCall revise(const GuestView& view) = 0;
};

// Deterministic stand-in for a vulnerable agent. It follows its plan,
// adopts any embedded task directive it can see (subject to the
// susceptibility draw), and applies a fixed revision rule when handed a
// semantic exception: drop every planned or adopted call whose tool, goal
// category, or argument value is named in the exception constraints, then
// pursue the remaining plan. A call the exception does not name is
// resubmitted unchanged.
class ScriptedGuest : public Guest {
 public:
  ScriptedGuest(ScriptedGuestSpec spec, std::map<std::string, std::string> tool_goals,
                std::uint64_t seed);

  MaybeCall propose(const GuestView& view) override;
  MaybeCall revise(const GuestView& view) override;

 private:
  struct Emission {
    ToolCall call;
    bool from_adoption = false;
    std::size_t plan_index = 0;
  };

  void reconcile(const GuestView& view);
  void scan_for_directives(const GuestView& view);
  MaybeCall emit_next();
  ToolCall resolve_plan_args(const PlanStep& step) const;
  bool call_named_by(const ToolCall& call, const std::vector<std::string>& ids) const;
  double next_draw();

  ScriptedGuestSpec spec_;
  std::map<std::string, std::string> tool_goals_;
  std::uint64_t rng_state_;

  std::size_t plan_index_ = 0;
  std::deque<ToolCall> adopted_;
  std::set<std::string> seen_directives_;
  std::optional<Emission> last_emission_;
  std::size_t seen_observations_ = 0;
  std::vector<std::string> plan_observations_;  // raw observation per completed plan step
};

}  // namespace toolvisor
