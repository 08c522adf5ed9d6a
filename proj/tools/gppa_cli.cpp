#include "gppa/experiment.hpp"
#include "gppa/problem_io.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kNumerical = 2;
constexpr int kIo = 3;

struct Overrides {
  std::optional<std::string> out_dir;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
};

/// Loads and validates a config, printing every error. Returns the config or
/// an exit code.
std::variant<gppa::ExperimentConfig, int> load(const std::string& path, const Overrides& ov) {
  gppa::ConfigParse parsed;
  try {
    parsed = gppa::parse_config_file(path);
  } catch (const gppa::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
  if (!parsed.ok()) {
    for (const auto& e : parsed.errors) std::cerr << "error: " << e << '\n';
    return parsed.io_error ? kIo : kValidation;
  }
  auto cfg = *parsed.config;
  if (ov.out_dir) cfg.out_dir = *ov.out_dir;
  if (ov.workers) cfg.workers = *ov.workers;
  if (ov.seed) cfg.gppa.seed = *ov.seed;
  return cfg;
}

int run(const std::string& path, const Overrides& ov, bool require_grid) {
  auto loaded = load(path, ov);
  if (auto* code = std::get_if<int>(&loaded)) return *code;
  const auto& cfg = std::get<gppa::ExperimentConfig>(loaded);
  if (require_grid && cfg.sweep.empty()) {
    std::cerr << "error: sweep: config defines no sweep grid\n";
    return kValidation;
  }
  const auto result = gppa::run_experiment(cfg);
  for (const auto& m : result.messages) std::cerr << m << '\n';
  int passed = 0;
  for (const auto& r : result.runs) passed += r.passed ? 1 : 0;
  std::cout << result.runs.size() << " run(s), " << passed << " passed; summary "
            << result.summary_path.string() << '\n';
  return result.exit_code;
}

int validate(const std::string& path) {
  auto loaded = load(path, {});
  if (auto* code = std::get_if<int>(&loaded)) return *code;
  const auto& cfg = std::get<gppa::ExperimentConfig>(loaded);
  std::cout << "valid " << gppa::to_string(cfg.kind) << " config, "
            << gppa::plan_runs(cfg).size() << " planned run(s)\n";
  return kOk;
}

int problem_emit(const std::string& path, const std::string& type, long n, long m, double lambda,
                 std::uint64_t seed) {
  gppa::Problem problem;
  try {
    if (type == "alm") {
      problem = gppa::random_linearly_constrained_qp(n, m, seed);
    } else {
      problem = gppa::random_separable_qp(n, m, lambda, seed);
    }
  } catch (const gppa::InvalidArgument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
  try {
    gppa::emit_problem_file(problem, path);
  } catch (const gppa::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  }
  std::cout << "wrote " << gppa::problem_type_name(problem) << " to " << path << '\n';
  return kOk;
}

int problem_check(const std::string& path) {
  gppa::Problem problem;
  try {
    problem = gppa::load_problem_file(path);
  } catch (const gppa::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const gppa::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
  const auto errors = std::visit([](const auto& p) { return p.validation_errors(); }, problem);
  for (const auto& e : errors) std::cerr << "error: problem: " << e << '\n';
  if (!errors.empty()) return kValidation;
  std::visit([&](const auto& p) {
    std::cout << gppa::problem_type_name(problem) << " n=" << p.n() << " m=" << p.m() << " ok\n";
  }, problem);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Generalized proximal point experiments"};
  app.require_subcommand(1);

  Overrides ov;
  std::string config_path;
  const auto add_overrides = [&](CLI::App* cmd) {
    cmd->add_option("config", config_path, "experiment config (JSON)")->required();
    cmd->add_option_function<std::string>("--out-dir", [&](const std::string& v) { ov.out_dir = v; },
                                          "output directory");
    cmd->add_option_function<int>("--workers", [&](const int& v) { ov.workers = v; },
                                  "parallel runs")
        ->check(CLI::Range(1, 1024));
    cmd->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& v) { ov.seed = v; },
                                            "seed, overrides the config");
  };
  auto* run_cmd = app.add_subcommand("run", "run an experiment");
  add_overrides(run_cmd);
  auto* sweep_cmd = app.add_subcommand("sweep", "run every grid point of a sweep");
  add_overrides(sweep_cmd);
  auto* validate_cmd = app.add_subcommand("validate", "check a config without running it");
  validate_cmd->add_option("config", config_path, "experiment config (JSON)")->required();

  auto* problem_cmd = app.add_subcommand("problem", "problem files");
  problem_cmd->require_subcommand(1);
  std::string problem_path;
  std::string type = "alm";
  long n = 6;
  long m = 3;
  double lambda = 1.0;
  std::uint64_t seed = 0;
  auto* emit_cmd = problem_cmd->add_subcommand("emit", "write a seeded random problem");
  emit_cmd->add_option("path", problem_path, "output file")->required();
  emit_cmd->add_option("--type", type, "alm (linearly constrained) or admm (separable)")
      ->check(CLI::IsMember({"alm", "admm"}));
  emit_cmd->add_option("--n", n, "primal dimension")->check(CLI::PositiveNumber);
  emit_cmd->add_option("--m", m, "constraint dimension")->check(CLI::PositiveNumber);
  emit_cmd->add_option("--lambda", lambda, "ADMM penalty")->check(CLI::PositiveNumber);
  emit_cmd->add_option("--seed", seed, "random seed");
  auto* check_cmd = problem_cmd->add_subcommand("check", "load and validate a problem file");
  check_cmd->add_option("path", problem_path, "problem file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (run_cmd->parsed()) return run(config_path, ov, false);
    if (sweep_cmd->parsed()) return run(config_path, ov, true);
    if (validate_cmd->parsed()) return validate(config_path);
    if (emit_cmd->parsed()) return problem_emit(problem_path, type, n, m, lambda, seed);
    if (check_cmd->parsed()) return problem_check(problem_path);
  } catch (const gppa::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const gppa::NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumerical;
  } catch (const gppa::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kOk;
}
