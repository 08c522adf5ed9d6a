#pragma once

#include "gppa/ppa_engine.hpp"
#include "gppa/problem_io.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace gppa {

enum class ExperimentKind {
  GppaExact,
  GppaInexact,
  Alm,
  Admm,
  RateSweep,
  SuperlinearProbe,
  Equivalence
};

std::string_view to_string(ExperimentKind kind);
std::optional<ExperimentKind> parse_experiment_kind(std::string_view name);

struct OperatorConfig {
  enum class Type { Rotation, Affine };
  Type type = Type::Rotation;
  double a = 1.0;  ///< rotation
  Matrix G;        ///< affine
  Vector h;
  std::optional<double> modulus;
};

MonotoneOperator build_operator(const OperatorConfig& config);

/// Grid axes; an empty axis keeps the base value from the config.
struct SweepGrid {
  std::vector<double> gamma;
  std::vector<double> c;
  std::vector<double> delta0;
  bool empty() const { return gamma.empty() && c.empty() && delta0.empty(); }
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::GppaExact;
  std::optional<OperatorConfig> op;
  std::optional<Problem> problem;
  std::optional<std::filesystem::path> problem_file;
  /// gamma, c schedule, delta schedule, max_iter, residual_tol and seed.
  GppaConfig gppa;
  std::optional<Vector> z0;  ///< GPPA start, or ADMM start z0 = p0 + lambda w0
  std::optional<Vector> p0;  ///< ALM start multiplier (zero when absent)
  double window_fraction = 0.5;
  double rate_tolerance = 1e-6;
  SweepGrid sweep;
  std::filesystem::path out_dir = "out";
  int workers = 1;
};

struct ConfigParse {
  std::optional<ExperimentConfig> config;
  std::vector<std::string> errors;  ///< every problem found, in document order
  bool io_error = false;            ///< a referenced file could not be read
  bool ok() const { return config.has_value(); }
};

/// Parses and validates a JSON config. Relative problem_file paths resolve
/// against base_dir.
ConfigParse parse_config_text(std::string_view text, const std::filesystem::path& base_dir = {});
/// Throws IoError when the config file itself cannot be read.
ConfigParse parse_config_file(const std::filesystem::path& path);

struct PlannedRun {
  int order = 0;
  std::string id;  ///< run_0000, run_0001, ...
  double gamma = 1.0;
  std::optional<double> c;       ///< constant-c override from the grid
  std::optional<double> delta0;  ///< delta0 override from the grid
  std::uint64_t seed = 0;
};

/// Row-major over (gamma, c, delta0); a config without grids plans one run.
std::vector<PlannedRun> plan_runs(const ExperimentConfig& config);

struct RunOutcome {
  PlannedRun plan;
  ExperimentKind kind = ExperimentKind::GppaExact;
  int iterations = 0;
  Termination termination = Termination::MaxIter;
  std::optional<double> theoretical_factor;
  std::optional<double> empirical_tail_ratio_max;
  std::optional<double> empirical_geometric_mean;
  std::optional<bool> tight;
  std::optional<double> final_ratio;
  std::optional<double> max_deviation;
  bool passed = false;
  std::string message;
  std::string trace_csv;
  std::string report_json;
};

/// Executes one planned run in memory.
RunOutcome execute_run(const ExperimentConfig& config, const PlannedRun& plan);

struct ExperimentResult {
  std::vector<RunOutcome> runs;
  std::filesystem::path summary_path;
  int exit_code = 0;  ///< 0 ok, 2 numerical failure or failed check, 3 I/O failure
  std::vector<std::string> messages;
};

/// Runs every planned run on up to config.workers threads and writes
/// <out_dir>/<run id>.csv, <out_dir>/<run id>.report.json and <out_dir>/summary.csv.
ExperimentResult run_experiment(const ExperimentConfig& config);

std::string summary_csv(const std::vector<RunOutcome>& runs);

}  // namespace gppa
