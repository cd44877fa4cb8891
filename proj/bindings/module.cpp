// Python bindings for the main operations. JSON-heavy structures cross the
// boundary as JSON text; episode and matrix runs return report documents.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "toolvisor/digest.hpp"
#include "toolvisor/harness.hpp"
#include "toolvisor/remote.hpp"

namespace py = pybind11;
using namespace toolvisor;

namespace {

Value parse_or_throw(const std::string& text, const char* what) {
  Value doc = Value::parse(text, nullptr, false);
  if (doc.is_discarded()) {
    throw py::value_error(std::string(what) + " is not valid JSON");
  }
  return doc;
}

InjectedTask task_from_json(const std::string& text) {
  const Value doc = parse_or_throw(text, "task");
  InjectedTask task;
  task.id = doc.value("id", "task");
  task.description = doc.value("description", "");
  task.tool_call.name = doc.at("tool_call").value("name", "");
  task.tool_call.args = doc.at("tool_call").value("args", Value::object());
  return task;
}

std::map<std::string, AttackTemplate> templates_from(const std::string& path) {
  return path.empty() ? default_attack_templates() : load_attack_templates(path);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Semantic-hypervisor mediation for tool-using agents";

  py::register_exception<ScenarioError>(m, "ScenarioError");

  // --- sanitizer ---
  m.def(
      "canonicalize_args",
      [](const std::string& args_json) {
        return canonicalize_args(parse_or_throw(args_json, "args"));
      },
      py::arg("args_json"),
      "Canonical text form of a JSON argument map (sorted keys, minimal "
      "whitespace, long strings digest-truncated).");
  m.def(
      "summarize_return",
      [](const std::string& observation, const std::string& status, std::size_t cap) {
        return summarize_return(observation, step_status_from_string(status), cap);
      },
      py::arg("observation"), py::arg("status") = "ok",
      py::arg("summary_cap") = kDefaultSummaryCap);
  m.def(
      "render_history",
      [](const std::string& trace_json) {
        std::vector<RawStepRecord> trace;
        for (const auto& r : parse_or_throw(trace_json, "trace")) {
          RawStepRecord record;
          record.tool_name = r.value("tool", "");
          record.raw_args = r.value("args", Value::object());
          record.raw_observation = r.value("observation", "");
          record.status = step_status_from_string(r.value("status", "ok"));
          trace.push_back(std::move(record));
        }
        return render_history(build_history(trace));
      },
      py::arg("trace_json"),
      "Sanitized, delimiter-framed rendering of a raw step trace "
      "([{tool, args, observation, status}, ...]).");
  m.def("sha256_hex", [](const std::string& data) { return sha256_hex(data); });

  // --- attacks ---
  m.def("attack_names", [] { return attack_names(); });
  m.def(
      "render_payload",
      [](const std::string& attack, const std::string& task_json,
         const std::string& assistant_name, const std::string& templates_path) {
        const auto templates = templates_from(templates_path);
        const auto it = templates.find(attack);
        if (it == templates.end()) throw py::value_error("unknown attack: " + attack);
        return render_payload(it->second, task_from_json(task_json), assistant_name);
      },
      py::arg("attack"), py::arg("task_json"), py::arg("assistant_name") = "assistant",
      py::arg("templates_path") = "");
  m.def("inject_direct", &inject_direct, py::arg("user_query"), py::arg("payload"));
  m.def(
      "inject_indirect",
      [](const std::string& item, const std::string& payload, const std::string& position,
         std::size_t midpoint) {
        return inject_indirect(item, payload, inject_position_from_string(position),
                               midpoint);
      },
      py::arg("context_item"), py::arg("payload"), py::arg("position") = "end",
      py::arg("midpoint_offset") = std::string::npos);

  // --- exceptions ---
  m.def(
      "render_exception",
      [](const std::string& exception_json) {
        const Value doc = parse_or_throw(exception_json, "exception");
        SemanticException e;
        e.type = stage_from_string(doc.value("type", "S"));
        e.violated_rule = doc.value("violated_rule", "");
        e.rationale = doc.value("rationale", "");
        for (const auto& c : doc.value("constraints", Value::array())) {
          e.constraints.push_back(c.get<std::string>());
        }
        e.allowed_objective = doc.value("allowed_objective", "");
        return render_exception(e);
      },
      py::arg("exception_json"));
  m.def(
      "parse_exception",
      [](const std::string& text) { return exception_to_json(parse_exception(text)).dump(); },
      py::arg("text"), "Parses a rendered exception block back to JSON.");

  // --- scenarios & episodes ---
  m.def(
      "validate_scenario",
      [](const std::string& path) {
        const Scenario sc = load_scenario(path);
        if (auto err = self_validate(sc)) throw py::value_error(sc.id + ": " + *err);
        return sc.id;
      },
      py::arg("path"), "Loads, statically validates, and self-validates a scenario file.");
  m.def(
      "run_episode",
      [](const std::string& scenario_path, const std::string& attack,
         const std::string& config, std::uint64_t seed, bool include_timings,
         const std::string& templates_path) {
        const Scenario sc = load_scenario(scenario_path);
        const PreparedScenario prepared =
            apply_attack(sc, attack, templates_from(templates_path));
        const std::uint64_t cell_seed =
            derive_cell_seed(seed, CellKey{sc.id, attack, config});
        ScriptedGuest guest(prepared.scenario.guest, prepared.scenario.tool_goals(),
                            cell_seed);
        auto judge = std::make_shared<RulePolicyJudge>(prepared.scenario.policy);
        EpisodeTrace trace =
            run_episode(guest, judge, prepared.scenario, defense_config(config));
        trace.attack = attack;
        trace.seed = cell_seed;
        return trace_to_json(trace, include_timings).dump();
      },
      py::arg("scenario_path"), py::arg("attack") = "none", py::arg("config") = "full",
      py::arg("seed") = 42, py::arg("include_timings") = false,
      py::arg("templates_path") = "",
      "Runs one episode with the scripted guest and rule judge; returns the "
      "trace as JSON text.");
  m.def(
      "run_matrix",
      [](const std::vector<std::string>& scenario_paths,
         const std::vector<std::string>& attacks, const std::vector<std::string>& configs,
         std::uint64_t seed, int jobs, const std::string& templates_path) {
        std::vector<Scenario> scenarios;
        for (const auto& path : scenario_paths) scenarios.push_back(load_scenario(path));
        RunMatrixSpec spec;
        spec.attacks = attacks;
        spec.configs = configs;
        spec.seed = seed;
        spec.jobs = jobs;
        const MetricsReport report =
            run_matrix(spec, scenarios, templates_from(templates_path));
        return report.to_json().dump();
      },
      py::arg("scenario_paths"), py::arg("attacks"), py::arg("configs"),
      py::arg("seed") = 42, py::arg("jobs") = 1, py::arg("templates_path") = "",
      "Runs a scenario x attack x config matrix; returns the metrics report "
      "as JSON text.");
  m.def("defense_config_names", [] { return defense_config_names(); });

  m.attr("__version__") = "0.1.0";
  m.attr("SUMMARY_CAP") = kDefaultSummaryCap;
  m.attr("HISTORY_OPEN") = kHistoryOpen;
  m.attr("HISTORY_CLOSE") = kHistoryClose;
}
