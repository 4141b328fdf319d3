#pragma once

// Experiment orchestration: verify runs (predicted verdict against the
// empirical diagnostic) and analytic sweeps producing regime maps.
//
// Experiment JSON (schema 1):
//   {
//     "schema_version": 1,
//     "mode": "verify" | "sweep",
//     "model": "<builtin spec>" | {model document},
//     "grid": {"theta": [..] | {"min": a, "max": b, "steps": n},
//              "gamma": same, "p": [..] | {"min", "max", "steps"}},
//     "simulation": {"generations", "replicas", "seed", "max_population", "threads"},
//     "diagnostic": {"first": 1, "last": -1},
//     "boundary_band": 0.05,
//     "allow_mc": false,
//     "output": {"csv": "path", "json": "path"}
//   }

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "brw/estimators.hpp"
#include "brw/laplace.hpp"
#include "brw/models.hpp"
#include "brw/simulator.hpp"
#include "brw/verdict.hpp"

namespace brw {

inline constexpr int kExperimentSchemaVersion = 1;
inline constexpr int kRegimeCsvSchemaVersion = 1;

enum class ExperimentMode { verify, sweep };

struct ExperimentConfig {
  ExperimentMode mode = ExperimentMode::verify;
  std::string model_spec;  // builtin string or a JSON document as text
  nlohmann::json model_json;
  std::vector<double> thetas{0.0};
  std::vector<double> gammas;
  std::vector<double> ps{2.0};
  SimConfig simulation;  // lambdas and companions are filled per run
  DiagnosticWindow window;
  double boundary_band = 0.05;
  bool allow_mc = false;
  std::string csv_path;
  std::string json_path;
};

ExperimentConfig experiment_from_json(const nlohmann::json& doc);
nlohmann::json experiment_to_json(const ExperimentConfig& config);
ExperimentConfig load_experiment(const std::string& path);

struct RegimeMapRow {
  double theta = 0.0, gamma = 0.0, p = 0.0;
  std::optional<CaseLabel> case_label;
  std::optional<Verdict> predicted;
  std::string theorem;
  std::string ratio_name;
  std::optional<double> ratio_value;
  std::optional<EmpiricalVerdict> empirical;
  /// Set iff `empirical` is set and the row is scored.
  std::optional<bool> agreement;
  /// Empty when the row is scored or unscored for lack of a decision;
  /// otherwise "case_three", "cap", "boundary", "out_of_strip", "precondition".
  std::string excluded;
  std::string note;
};

struct RegimeReport {
  std::vector<RegimeMapRow> rows;
  std::size_t scored = 0;
  std::size_t agreed = 0;
  std::optional<double> agreement_rate;
  std::map<std::string, std::size_t> exclusions;
};

/// Ratio that places a verdict report relative to its boundary.
std::pair<std::string, std::optional<double>> key_ratio(const VerdictReport& report);

RegimeReport run_verify(const ExperimentConfig& config);
/// Analytic predictions only. Throws ConfigError("allow_mc") when the model
/// has no closed-form m and allow_mc is false.
RegimeReport run_sweep(const ExperimentConfig& config);

/// Fixed column order; doubles in shortest round-trip form.
void write_regime_csv(const RegimeReport& report, std::ostream& out);
nlohmann::json regime_report_json(const RegimeReport& report);

/// Shortest round-trip decimal form of x; "nan", "inf", "-inf" otherwise.
std::string format_double(double x);

}  // namespace brw
