#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "toolvisor/visor.hpp"

namespace toolvisor {

// Named defense configurations mirroring the evaluation axes: no defense,
// the full pipeline, single-stage ablations, block-only, and strict
// re-auditing rounds.
const std::vector<std::string>& defense_config_names();
VisorConfig defense_config(const std::string& name);

struct RunMatrixSpec {
  std::vector<std::string> scenario_ids;  // empty = all loaded scenarios
  std::vector<std::string> attacks = {"none"};
  std::vector<std::string> configs = {"no_defense", "full"};
  std::string guest_backend = "scripted";
  std::string judge_backend = "rule";
  std::uint64_t seed = 42;
  int jobs = 1;
  bool keep_judge_inputs = true;
};

struct CellKey {
  std::string scenario;
  std::string attack;
  std::string config;

  std::string text() const { return scenario + "|" + attack + "|" + config; }
  bool operator<(const CellKey& other) const { return text() < other.text(); }
};

struct CellResult {
  CellKey key;
  bool applicable = true;
  bool target_completed = false;
  bool injection_executed = false;
  int steps = 0;
  int exceptions = 0;
  bool truncated = false;
  double wall_seconds = 0.0;
  WorkCounts work;
  std::string payload;
  std::string judge_inputs;           // concatenated, for isolation checks
  std::string judge_context_inputs;   // context channels only (no proposal fields)
  std::vector<ToolCall> executed;     // executed call sequence
  std::string error;                  // non-empty when the cell failed to run
};

struct Rate {
  int num = 0;
  int den = 0;

  bool defined() const { return den > 0; }
  double value() const { return defined() ? static_cast<double>(num) / den : 0.0; }
  Value to_json() const;
};

struct MetricsReport {
  RunMatrixSpec spec;
  std::vector<std::string> scenario_ids;
  std::vector<CellResult> cells;  // sorted by key

  Rate bu(const std::string& config) const;
  Rate asr(const std::string& config, const std::string& attack) const;
  Rate ua(const std::string& config, const std::string& attack) const;

  // Deterministic report document: outcomes and exact rates only, no
  // wall-clock values. Byte-identical across runs with equal spec and seed.
  Value to_json() const;
  // Wall-clock and work-unit summary, reported separately.
  Value latency_json() const;
  // Human-readable table in evaluation layout (rows = configs,
  // columns = attacks, UA/ASR per cell).
  std::string render_table() const;
};

// Overhead of one trace set against a baseline with identical
// (scenario, attack) keys. Throws on mismatched keys.
struct LatencyOverhead {
  double benign_mean_seconds = 0.0;
  double attack_mean_seconds = 0.0;
  double benign_wall_ratio = 1.0;
  double attack_wall_ratio = 1.0;
  double benign_work_ratio = 1.0;
  double attack_work_ratio = 1.0;

  Value to_json() const;
};

LatencyOverhead latency_overhead(const std::vector<CellResult>& defended,
                                 const std::vector<CellResult>& baseline);

// Backend factories; defaults build the rule judge and scripted guest.
struct Backends {
  std::function<std::shared_ptr<Judge>(const Scenario&)> make_judge;
  std::function<std::unique_ptr<Guest>(const Scenario&, std::uint64_t seed)> make_guest;

  static Backends deterministic();
};

std::uint64_t derive_cell_seed(std::uint64_t master, const CellKey& key);

// Runs every applicable (scenario, attack, config) cell and aggregates.
// Scenarios are self-validated first; the adaptive attack only applies to
// scenarios with indirect injection points.
MetricsReport run_matrix(const RunMatrixSpec& spec, const std::vector<Scenario>& scenarios,
                         const std::map<std::string, AttackTemplate>& templates,
                         const Backends& backends = Backends::deterministic());

// Exact ratios with explicit denominators over a list of episode outcomes.
struct OutcomeRow {
  std::string attack;
  bool target_completed = false;
  bool injection_executed = false;
};

struct Metrics {
  std::optional<double> bu;
  std::optional<double> ua;
  std::optional<double> asr;
  int benign_den = 0;
  int attacked_den = 0;
};

Metrics compute_metrics(const std::vector<OutcomeRow>& outcomes);

}  // namespace toolvisor
