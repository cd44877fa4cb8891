#include "toolvisor/guest.hpp"

#include <regex>

namespace toolvisor {

namespace {

// splitmix64; stable across platforms, unlike distribution adapters.
std::uint64_t next_u64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

Value resolve_extracts(const Value& v, const std::vector<std::string>& plan_observations) {
  if (v.is_object() && v.size() == 1 && v.contains("$extract")) {
    const Value& ex = v["$extract"];
    const int step = ex.value("step", 0);
    const int group = ex.value("group", 1);
    std::string source;
    if (step >= 1 && static_cast<std::size_t>(step) <= plan_observations.size()) {
      source = plan_observations[static_cast<std::size_t>(step) - 1];
    }
    std::smatch m;
    if (std::regex_search(source, m, std::regex(ex.value("regex", ""))) &&
        group >= 0 && static_cast<std::size_t>(group) < m.size()) {
      return Value(m[static_cast<std::size_t>(group)].str());
    }
    return Value("");
  }
  if (v.is_object()) {
    Value out = Value::object();
    for (const auto& [key, item] : v.items()) {
      out[key] = resolve_extracts(item, plan_observations);
    }
    return out;
  }
  if (v.is_array()) {
    Value out = Value::array();
    for (const auto& item : v) out.push_back(resolve_extracts(item, plan_observations));
    return out;
  }
  return v;
}

}  // namespace

ScriptedGuest::ScriptedGuest(ScriptedGuestSpec spec,
                             std::map<std::string, std::string> tool_goals,
                             std::uint64_t seed)
    : spec_(std::move(spec)),
      tool_goals_(std::move(tool_goals)),
      rng_state_(seed ^ 0xD1B54A32D192ED03ull) {
  plan_observations_.resize(spec_.plan.size());
  seen_observations_ = static_cast<std::size_t>(-1);
}

double ScriptedGuest::next_draw() {
  return static_cast<double>(next_u64(rng_state_) >> 11) * 0x1.0p-53;
}

void ScriptedGuest::reconcile(const GuestView& view) {
  if (seen_observations_ == static_cast<std::size_t>(-1)) {
    seen_observations_ = view.raw_context.size();
    return;
  }
  if (view.raw_context.size() > seen_observations_) {
    seen_observations_ = view.raw_context.size();
    if (last_emission_) {
      if (last_emission_->from_adoption) {
        if (!adopted_.empty()) adopted_.pop_front();
      } else if (last_emission_->plan_index < plan_observations_.size()) {
        plan_observations_[last_emission_->plan_index] = view.raw_context.back();
        plan_index_ = last_emission_->plan_index + 1;
      }
      last_emission_.reset();
    }
  }
}

void ScriptedGuest::scan_for_directives(const GuestView& view) {
  std::vector<const std::string*> haystacks;
  haystacks.push_back(&view.user_query);
  for (const auto& item : view.raw_context) haystacks.push_back(&item);

  for (const std::string* text : haystacks) {
    bool triggered = false;
    for (const auto& pattern : spec_.trigger_patterns) {
      if (text->find(pattern) != std::string::npos) {
        triggered = true;
        break;
      }
    }
    if (!triggered) continue;
    std::size_t pos = 0;
    while (auto d = find_directive(*text, pos)) {
      pos = d->end;
      if (seen_directives_.count(d->text) > 0) continue;
      seen_directives_.insert(d->text);
      if (next_draw() < spec_.susceptibility) {
        adopted_.push_back(d->call);
      }
    }
  }
}

ToolCall ScriptedGuest::resolve_plan_args(const PlanStep& step) const {
  ToolCall call;
  call.name = step.tool;
  call.args = resolve_extracts(step.args, plan_observations_);
  return call;
}

bool ScriptedGuest::call_named_by(const ToolCall& call,
                                  const std::vector<std::string>& ids) const {
  for (const auto& id : ids) {
    if (id == call.name) return true;
    const auto goal = tool_goals_.find(call.name);
    if (goal != tool_goals_.end() && goal->second == id) return true;
    for (const auto& [arg, value] : call.args.items()) {
      (void)arg;
      if (value_text(value) == id) return true;
    }
  }
  return false;
}

MaybeCall ScriptedGuest::emit_next() {
  if (!adopted_.empty()) {
    last_emission_ = Emission{adopted_.front(), true, 0};
    return MaybeCall::of(adopted_.front());
  }
  if (plan_index_ < spec_.plan.size()) {
    ToolCall call = resolve_plan_args(spec_.plan[plan_index_]);
    last_emission_ = Emission{call, false, plan_index_};
    return MaybeCall::of(std::move(call));
  }
  last_emission_.reset();
  return MaybeCall::no_call(spec_.final_answer.empty() ? "Done." : spec_.final_answer);
}

MaybeCall ScriptedGuest::propose(const GuestView& view) {
  reconcile(view);
  scan_for_directives(view);
  // A proposal that was neither executed nor addressed by an exception is
  // still this guest's intent; it stands until something changes.
  if (last_emission_) return MaybeCall::of(last_emission_->call);
  return emit_next();
}

MaybeCall ScriptedGuest::revise(const GuestView& view) {
  reconcile(view);
  if (!view.pending_exception || !last_emission_) {
    return MaybeCall::no_call(spec_.final_answer, "revision requested without context");
  }
  SemanticException e;
  try {
    e = parse_exception(*view.pending_exception);
  } catch (const std::exception& err) {
    return MaybeCall::no_call("", std::string("unparseable exception: ") + err.what());
  }
  const std::vector<std::string> ids = quoted_identifiers(e);
  const Emission failed = *last_emission_;
  if (!call_named_by(failed.call, ids)) {
    return MaybeCall::of(failed.call);  // incorrigible resubmit
  }

  if (failed.from_adoption) {
    if (!adopted_.empty()) adopted_.pop_front();
  } else {
    plan_index_ = failed.plan_index + 1;
  }
  // Sweep remaining intents the constraints also name.
  std::deque<ToolCall> kept;
  for (auto& call : adopted_) {
    if (!call_named_by(call, ids)) kept.push_back(std::move(call));
  }
  adopted_ = std::move(kept);
  while (plan_index_ < spec_.plan.size() &&
         call_named_by(resolve_plan_args(spec_.plan[plan_index_]), ids)) {
    ++plan_index_;
  }
  last_emission_.reset();
  return emit_next();
}

}  // namespace toolvisor
