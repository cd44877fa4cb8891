// Command-line front end: matrix runs, scenario validation, payload
// inspection, and single-episode traces.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

#include "toolvisor/harness.hpp"
#include "toolvisor/remote.hpp"

namespace fs = std::filesystem;
using namespace toolvisor;

namespace {

std::vector<std::string> expand_scenario_paths(const std::vector<std::string>& inputs) {
  std::vector<std::string> paths;
  for (const auto& input : inputs) {
    if (fs::is_directory(input)) {
      for (const auto& entry : fs::directory_iterator(input)) {
        if (entry.path().extension() == ".json") paths.push_back(entry.path().string());
      }
    } else {
      paths.push_back(input);
    }
  }
  std::sort(paths.begin(), paths.end());
  return paths;
}

std::vector<Scenario> load_all(const std::vector<std::string>& inputs) {
  std::vector<Scenario> scenarios;
  for (const auto& path : expand_scenario_paths(inputs)) {
    scenarios.push_back(load_scenario(path));
  }
  return scenarios;
}

std::map<std::string, AttackTemplate> templates_from(const std::string& path) {
  return path.empty() ? default_attack_templates() : load_attack_templates(path);
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

int env_port(const char* name, int fallback) {
  const char* value = std::getenv(name);
  return value ? std::atoi(value) : fallback;
}

std::string env_str(const char* name, const std::string& fallback) {
  const char* value = std::getenv(name);
  return value ? value : fallback;
}

Backends backends_for(const std::string& guest_backend, const std::string& judge_backend,
                      const std::string& judge_host, int judge_port,
                      const std::string& guest_host, int guest_port, int timeout_ms) {
  Backends b = Backends::deterministic();
  if (judge_backend == "remote") {
    b.make_judge = [=](const Scenario&) -> std::shared_ptr<Judge> {
      auto config = RemoteJudgeConfig::with_default_prompts(judge_host, judge_port);
      config.timeout_ms = timeout_ms;
      return std::make_shared<RemoteJudge>(config);
    };
  }
  if (guest_backend == "remote") {
    b.make_guest = [=](const Scenario& sc, std::uint64_t) -> std::unique_ptr<Guest> {
      RemoteGuestConfig config;
      config.host = guest_host;
      config.port = guest_port;
      config.timeout_ms = timeout_ms;
      return std::make_unique<RemoteGuest>(config, tool_schemas_for(sc));
    };
  }
  return b;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"toolvisor: semantic-hypervisor mediation for tool-using agents"};
  app.require_subcommand(1);

  // --- run ---
  auto* run = app.add_subcommand("run", "run a scenario x attack x config matrix");
  std::vector<std::string> scenario_inputs{"data/scenarios"};
  std::vector<std::string> attacks;
  std::vector<std::string> configs{"no_defense", "full"};
  std::string templates_path;
  std::string report_path = "report.json";
  std::string latency_path;
  std::string guest_backend = "scripted";
  std::string judge_backend = "rule";
  std::uint64_t seed = 42;
  int jobs = 1;
  int timeout_ms = 30000;
  std::string judge_host = env_str("TOOLVISOR_JUDGE_HOST", "127.0.0.1");
  int judge_port = env_port("TOOLVISOR_JUDGE_PORT", 0);
  std::string guest_host = env_str("TOOLVISOR_GUEST_HOST", "127.0.0.1");
  int guest_port = env_port("TOOLVISOR_GUEST_PORT", 0);
  bool print_table = true;
  run->add_option("-s,--scenarios", scenario_inputs, "scenario files or directories");
  run->add_option("-a,--attacks", attacks, "attack names (default: none + all strategies)");
  run->add_option("-c,--configs", configs, "defense configuration names");
  run->add_option("--templates", templates_path, "attack template file");
  run->add_option("-o,--report", report_path, "metrics report output path");
  run->add_option("--latency-report", latency_path, "latency/work report output path");
  run->add_option("--guest", guest_backend, "guest backend: scripted | remote");
  run->add_option("--judge", judge_backend, "judge backend: rule | remote");
  run->add_option("--seed", seed, "master seed");
  run->add_option("-j,--jobs", jobs, "parallel cells");
  run->add_option("--timeout-ms", timeout_ms, "remote backend deadline");
  run->add_option("--judge-host", judge_host, "remote judge host");
  run->add_option("--judge-port", judge_port, "remote judge port");
  run->add_option("--guest-host", guest_host, "remote guest host");
  run->add_option("--guest-port", guest_port, "remote guest port");
  run->add_flag("--table,!--no-table", print_table, "print the summary table");

  // --- validate ---
  auto* validate = app.add_subcommand("validate", "validate scenario files");
  std::vector<std::string> validate_inputs{"data/scenarios"};
  validate->add_option("paths", validate_inputs, "scenario files or directories");

  // --- attack-render ---
  auto* render = app.add_subcommand("attack-render", "render an attack payload");
  std::string render_scenario;
  std::string render_attack = "ignore";
  std::string render_templates;
  render->add_option("--scenario", render_scenario, "scenario file providing the task")
      ->required();
  render->add_option("--attack", render_attack, "attack template name");
  render->add_option("--templates", render_templates, "attack template file");

  // --- trace ---
  auto* trace_cmd = app.add_subcommand("trace", "run and print one episode trace");
  std::string trace_scenario;
  std::string trace_attack = "none";
  std::string trace_config = "full";
  std::string trace_templates;
  std::string trace_out;
  std::uint64_t trace_seed = 42;
  bool trace_timings = false;
  int trace_rounds = -1;
  bool trace_reaudit = false;
  std::string trace_final_policy;
  std::vector<std::string> trace_disable;
  trace_cmd->add_option("--scenario", trace_scenario, "scenario file")->required();
  trace_cmd->add_option("--attack", trace_attack, "attack name or 'none'");
  trace_cmd->add_option("--config", trace_config, "defense configuration name");
  trace_cmd->add_option("--templates", trace_templates, "attack template file");
  trace_cmd->add_option("--seed", trace_seed, "episode seed");
  trace_cmd->add_option("-o,--out", trace_out, "write trace JSON to this path");
  trace_cmd->add_flag("--timings", trace_timings, "include wall-clock timings");
  trace_cmd->add_option("--rounds", trace_rounds,
                        "override correction rounds N (0 = block-only)");
  trace_cmd->add_flag("--reaudit", trace_reaudit, "re-audit revisions");
  trace_cmd->add_option("--final-policy", trace_final_policy,
                        "rounds-exhausted policy: block | execute_last");
  trace_cmd->add_option("--disable", trace_disable, "disable audit stages: S, T, I");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      if (attacks.empty()) {
        attacks.push_back("none");
        for (const auto& a : attack_names()) attacks.push_back(a);
      }
      RunMatrixSpec spec;
      spec.attacks = attacks;
      spec.configs = configs;
      spec.guest_backend = guest_backend;
      spec.judge_backend = judge_backend;
      spec.seed = seed;
      spec.jobs = jobs;
      const auto scenarios = load_all(scenario_inputs);
      const auto backends = backends_for(guest_backend, judge_backend, judge_host,
                                         judge_port, guest_host, guest_port, timeout_ms);
      const MetricsReport report =
          run_matrix(spec, scenarios, templates_from(templates_path), backends);
      write_file(report_path, report.to_json().dump(2) + "\n");
      if (!latency_path.empty()) {
        write_file(latency_path, report.latency_json().dump(2) + "\n");
      }
      if (print_table) std::cout << report.render_table();
      std::cout << "report written to " << report_path << "\n";
      int errored = 0;
      for (const auto& cell : report.cells) {
        if (!cell.error.empty()) {
          std::cerr << "cell " << cell.key.text() << " failed: " << cell.error << "\n";
          ++errored;
        }
      }
      return errored == 0 ? 0 : 1;
    }

    if (*validate) {
      int failures = 0;
      for (const auto& path : expand_scenario_paths(validate_inputs)) {
        try {
          const Scenario sc = load_scenario(path);
          if (auto err = self_validate(sc)) {
            std::cout << "FAIL " << path << ": " << *err << "\n";
            ++failures;
          } else {
            std::cout << "ok   " << path << " (" << sc.id << ")\n";
          }
        } catch (const ScenarioError& e) {
          std::cout << "FAIL " << path << "\n";
          for (const auto& msg : e.errors()) std::cout << "     " << msg << "\n";
          ++failures;
        }
      }
      return failures == 0 ? 0 : 1;
    }

    if (*render) {
      const Scenario sc = load_scenario(render_scenario);
      const auto templates = templates_from(render_templates);
      const auto it = templates.find(render_attack);
      if (it == templates.end()) {
        std::cerr << "unknown attack template: " << render_attack << "\n";
        return 1;
      }
      std::cout << render_payload(it->second, sc.injected_task, sc.assistant_name) << "\n";
      return 0;
    }

    if (*trace_cmd) {
      const Scenario sc = load_scenario(trace_scenario);
      const auto prepared = apply_attack(sc, trace_attack, templates_from(trace_templates));
      VisorConfig config = defense_config(trace_config);
      if (trace_rounds >= 0) config.correction_rounds = trace_rounds;
      if (trace_reaudit) config.reaudit_revisions = true;
      if (trace_final_policy == "block") config.final_policy = FinalPolicy::kBlock;
      if (trace_final_policy == "execute_last") {
        config.final_policy = FinalPolicy::kExecuteLast;
      }
      for (const auto& stage : trace_disable) {
        if (stage == "S") config.toggles.enable_s = false;
        if (stage == "T") config.toggles.enable_t = false;
        if (stage == "I") config.toggles.enable_i = false;
      }
      config = config.normalized();
      const auto seed_value =
          derive_cell_seed(trace_seed, CellKey{sc.id, trace_attack, trace_config});
      ScriptedGuest guest(prepared.scenario.guest, prepared.scenario.tool_goals(), seed_value);
      auto judge = std::make_shared<RulePolicyJudge>(prepared.scenario.policy);
      EpisodeTrace trace = run_episode(guest, judge, prepared.scenario, config);
      trace.attack = trace_attack;
      trace.seed = seed_value;
      const std::string text = trace_to_json(trace, trace_timings).dump(2) + "\n";
      if (trace_out.empty()) {
        std::cout << text;
      } else {
        write_file(trace_out, text);
        std::cout << "trace written to " << trace_out << "\n";
      }
      return 0;
    }
  } catch (const ScenarioError& e) {
    std::cerr << "scenario error:\n";
    for (const auto& msg : e.errors()) std::cerr << "  " << msg << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
