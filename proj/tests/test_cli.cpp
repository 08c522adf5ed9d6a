#include "gppa/csv.hpp"
#include "gppa/experiment.hpp"
#include "gppa/problem_io.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("gppa_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

const char* kRotation = R"({
  "kind": "gppa_exact",
  "operator": {"type": "rotation", "a": 1.0},
  "gamma": 1.0,
  "c": 1.0,
  "z0": [1.0, 0.0],
  "max_iter": 50,
  "residual_tol": 0
})";

bool mentions(const std::vector<std::string>& errors, const std::string& needle) {
  for (const auto& e : errors) {
    if (e.find(needle) != std::string::npos) return true;
  }
  return false;
}

}  // namespace

TEST(Csv, FormatsSeventeenDigitsAndRoundTrips) {
  EXPECT_EQ(gppa::csv::format_double(0.1), "0.10000000000000001");
  EXPECT_EQ(gppa::csv::format_double(1.0), "1");
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 10000; ++i) {
    const double x = u(rng) * std::pow(10.0, static_cast<int>(u(rng) * 300));
    const double y = *gppa::csv::parse_double(gppa::csv::format_double(x));
    EXPECT_EQ(std::memcmp(&x, &y, sizeof x), 0) << x;
  }
  EXPECT_TRUE(std::isinf(*gppa::csv::parse_double("-inf")));
  EXPECT_FALSE(gppa::csv::parse_double(""));
  EXPECT_THROW(gppa::csv::parse_double("1.5x"), gppa::InvalidArgument);
}

TEST(Csv, WriterUsesLfAndFixedHeader) {
  gppa::csv::Writer w({"k", "value"});
  w.add_row({"0", gppa::csv::cell(0.5)});
  EXPECT_EQ(w.str(), "k,value\n0,0.5\n");
  EXPECT_THROW(w.add_row({"1"}), gppa::InvalidArgument);
  const auto table = gppa::csv::parse(w.str());
  EXPECT_EQ(table.rows.size(), 1u);
  EXPECT_EQ(table.column("value"), 1u);
}

TEST(Config, MinimalRotationIsValid) {
  const auto parsed = gppa::parse_config_text(kRotation);
  ASSERT_TRUE(parsed.ok()) << (parsed.errors.empty() ? "" : parsed.errors[0]);
  EXPECT_EQ(parsed.config->kind, gppa::ExperimentKind::GppaExact);
  EXPECT_EQ(gppa::plan_runs(*parsed.config).size(), 1u);
}

TEST(Config, GammaTwoRejectedWithOpenIntervalMessage) {
  const auto parsed = gppa::parse_config_text(R"({
    "kind": "gppa_exact", "operator": {"type": "rotation"}, "gamma": 2.0, "z0": [1, 0]})");
  ASSERT_FALSE(parsed.ok());
  EXPECT_TRUE(mentions(parsed.errors, "gamma: must lie in the open interval (0,2), got 2"));
}

TEST(Config, AllErrorsReported) {
  const auto parsed = gppa::parse_config_text(R"({
    "kind": "gppa_exact", "operator": {"type": "rotation", "a": -1}, "gamma": 2.0, "c": 0,
    "z0": [1, 0, 0], "bogus": 1, "max_iter": 0})");
  ASSERT_FALSE(parsed.ok());
  EXPECT_TRUE(mentions(parsed.errors, "gamma"));
  EXPECT_TRUE(mentions(parsed.errors, "c: must be > 0, got 0"));
  EXPECT_TRUE(mentions(parsed.errors, "bogus: unknown key"));
  EXPECT_TRUE(mentions(parsed.errors, "operator.a"));
  EXPECT_TRUE(mentions(parsed.errors, "max_iter"));
  EXPECT_TRUE(mentions(parsed.errors, "z0: expected dimension 2"));
  EXPECT_GE(parsed.errors.size(), 6u);
}

TEST(Config, KindSpecificRequirements) {
  EXPECT_TRUE(mentions(gppa::parse_config_text(R"({"kind": "gppa_inexact",
    "operator": {"type": "rotation"}, "z0": [1, 0]})").errors, "delta: required"));
  EXPECT_TRUE(mentions(gppa::parse_config_text(R"({"kind": "alm"})").errors, "problem: required"));
  EXPECT_TRUE(mentions(gppa::parse_config_text(R"({"kind": "rate_sweep",
    "operator": {"type": "rotation"}, "z0": [1, 0], "sweep": {"gamma": [1.0]}})").errors,
                       "rate_sweep needs nonempty gamma and c grids"));
  EXPECT_TRUE(mentions(gppa::parse_config_text(R"({"kind": "rate_sweep",
    "operator": {"type": "rotation"}, "z0": [1, 0], "sweep": {"gamma": [], "c": [1]}})").errors,
                       "grid must be nonempty"));
  EXPECT_TRUE(mentions(gppa::parse_config_text(R"({"kind": "nope"})").errors, "unknown experiment kind"));
  EXPECT_TRUE(mentions(gppa::parse_config_text("{\"kind\": \n").errors, "line 2"));
}

TEST(Config, SweepPlansRowMajor) {
  const auto parsed = gppa::parse_config_text(R"({
    "kind": "rate_sweep", "operator": {"type": "rotation", "a": 1},
    "z0": [1, 0], "sweep": {"gamma": [0.5, 1.0, 1.5, 1.9], "c": [0.5, 1, 2, 4]}})");
  ASSERT_TRUE(parsed.ok());
  const auto plan = gppa::plan_runs(*parsed.config);
  ASSERT_EQ(plan.size(), 16u);
  EXPECT_EQ(plan[1].gamma, 0.5);
  EXPECT_EQ(*plan[1].c, 1.0);
  EXPECT_EQ(plan[4].gamma, 1.0);
  EXPECT_EQ(*plan[4].c, 0.5);
  EXPECT_EQ(plan[15].id, "run_0015");
}

TEST(Config, SweepRejectsBadGridValues) {
  const auto parsed = gppa::parse_config_text(R"({
    "kind": "rate_sweep", "operator": {"type": "rotation"}, "z0": [1, 0],
    "sweep": {"gamma": [0.5, 2.0], "c": [1, -1]}})");
  EXPECT_TRUE(mentions(parsed.errors, "sweep.gamma[1]: must lie in the open interval (0,2), got 2"));
  EXPECT_TRUE(mentions(parsed.errors, "sweep.c[1]: must be > 0, got -1"));
}

TEST(ProblemIo, SeededRoundTripIsBitExact) {
  const auto dir = scratch("roundtrip");
  const gppa::Problem lc = gppa::random_linearly_constrained_qp(6, 3, 42);
  const gppa::Problem sp = gppa::random_separable_qp(5, 4, 0.7, 43);
  for (const auto& p : {lc, sp}) {
    const auto path = dir / (std::string(gppa::problem_type_name(p)) + ".json");
    gppa::emit_problem_file(p, path);
    EXPECT_TRUE(gppa::identical(gppa::load_problem_file(path), p));
  }
}

TEST(ProblemIo, NegativeZeroSurvives) {
  auto P = gppa::random_linearly_constrained_qp(3, 1, 1);
  P.q(0) = -0.0;
  const auto back = gppa::problem_from_json(gppa::problem_to_json(P));
  EXPECT_TRUE(std::signbit(std::get<gppa::LinearlyConstrainedQP>(back).q(0)));
}

TEST(ProblemIo, TruncatedFileIsParseError) {
  const auto dir = scratch("truncated");
  const auto text = gppa::problem_to_json(gppa::random_linearly_constrained_qp(4, 2, 1));
  gppa::write_text_file(dir / "bad.json", text.substr(0, text.size() / 2));
  try {
    gppa::load_problem_file(dir / "bad.json");
    FAIL() << "expected ParseError";
  } catch (const gppa::ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line"), std::string::npos);
  }
  EXPECT_THROW(gppa::load_problem_file(dir / "missing.json"), gppa::IoError);
}

TEST(ProblemIo, FieldContextInErrors) {
  try {
    gppa::problem_from_json(R"({"type": "linearly_constrained_qp",
      "Q": {"rows": 2, "cols": 2, "data": [1, 0, 0]}, "q": [0, 0],
      "A": {"rows": 1, "cols": 2, "data": [1, 1]}, "b": [1]})");
    FAIL() << "expected ParseError";
  } catch (const gppa::ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("Q.data"), std::string::npos);
  }
}

TEST(ProblemIo, HandWrittenScalarProblemSolves) {
  const auto dir = scratch("scalar");
  gppa::write_text_file(dir / "p.json", R"({"type": "linearly_constrained_qp",
    "Q": {"rows": 1, "cols": 1, "data": [2]}, "q": [-2],
    "A": {"rows": 1, "cols": 1, "data": [1]}, "b": [1]})");
  const auto P = std::get<gppa::LinearlyConstrainedQP>(gppa::load_problem_file(dir / "p.json"));
  gppa::AlmConfig cfg;
  cfg.max_iter = 60;
  const auto trace = gppa::run_generalized_alm(P, cfg, gppa::Vector::Zero(1));
  EXPECT_NEAR(trace.x_final(0), 1.0, 1e-12);
  EXPECT_NEAR(trace.p_final(0), 0.0, 1e-12);
}

TEST(Experiment, RotationTightnessSummary) {
  auto parsed = gppa::parse_config_text(kRotation);
  ASSERT_TRUE(parsed.ok());
  parsed.config->out_dir = scratch("tight");
  const auto result = gppa::run_experiment(*parsed.config);
  EXPECT_EQ(result.exit_code, 0);
  const auto table = gppa::csv::read_file(result.summary_path);
  ASSERT_EQ(table.rows.size(), 1u);
  const auto& row = table.rows[0];
  EXPECT_NEAR(*gppa::csv::parse_double(row[table.column("theoretical_factor")]), 0.70711, 1e-5);
  EXPECT_NEAR(*gppa::csv::parse_double(row[table.column("empirical_tail_ratio_max")]), 0.70711, 1e-5);
  EXPECT_EQ(row[table.column("tight")], "true");
  EXPECT_EQ(row[table.column("passed")], "true");
  EXPECT_TRUE(fs::exists(parsed.config->out_dir / "run_0000.csv"));
  EXPECT_TRUE(fs::exists(parsed.config->out_dir / "run_0000.report.json"));
}

TEST(Experiment, TraceCsvRoundTripsInMemoryValues) {
  auto parsed = gppa::parse_config_text(kRotation);
  ASSERT_TRUE(parsed.ok());
  const auto out = gppa::execute_run(*parsed.config, gppa::plan_runs(*parsed.config)[0]);
  const auto table = gppa::csv::parse(out.trace_csv);
  gppa::GppaConfig cfg = parsed.config->gppa;
  const auto trace = gppa::run_exact_gppa(gppa::make_rotation_operator({1.0}), cfg,
                                          (gppa::Vector(2) << 1.0, 0.0).finished());
  ASSERT_EQ(table.rows.size(), trace.records.size());
  const auto col = table.column("residual");
  const auto dcol = table.column("dist_to_zero");
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    const double r = *gppa::csv::parse_double(table.rows[k][col]);
    const double d = *gppa::csv::parse_double(table.rows[k][dcol]);
    EXPECT_EQ(std::memcmp(&r, &trace.records[k].residual, sizeof r), 0);
    EXPECT_EQ(std::memcmp(&d, &*trace.records[k].dist_to_zero, sizeof d), 0);
  }
}

TEST(Experiment, AlmEquivalenceReportPasses) {
  const auto dir = scratch("equiv");
  gppa::emit_problem_file(gppa::random_linearly_constrained_qp(6, 3, 7), dir / "qp.json");
  gppa::write_text_file(dir / "cfg.json", R"({"kind": "equivalence", "problem_file": "qp.json",
    "gamma": 1.5, "c": 1.0, "max_iter": 100, "out_dir": "out"})");
  auto parsed = gppa::parse_config_file(dir / "cfg.json");
  ASSERT_TRUE(parsed.ok()) << parsed.errors[0];
  parsed.config->out_dir = dir / "out";
  const auto result = gppa::run_experiment(*parsed.config);
  EXPECT_EQ(result.exit_code, 0);
  ASSERT_EQ(result.runs.size(), 1u);
  EXPECT_TRUE(result.runs[0].passed);
  EXPECT_LE(*result.runs[0].max_deviation, 1e-9);
  const auto report = gppa::read_text_file(dir / "out" / "run_0000.report.json");
  EXPECT_NE(report.find("\"passed\": true"), std::string::npos);
}

TEST(Experiment, SuperlinearProbeSummary) {
  auto parsed = gppa::parse_config_text(R"({"kind": "superlinear_probe",
    "operator": {"type": "rotation", "a": 1}, "gamma": 1.5,
    "c": {"type": "geometric", "c0": 1, "ratio": 2}, "max_iter": 20, "z0": [1, 0]})");
  ASSERT_TRUE(parsed.ok()) << parsed.errors[0];
  const auto out = gppa::execute_run(*parsed.config, gppa::plan_runs(*parsed.config)[0]);
  ASSERT_TRUE(out.final_ratio);
  EXPECT_NEAR(*out.final_ratio, 0.5, 0.05);
}

TEST(Experiment, AlmAndAdmmKindsRun) {
  const std::string lc = gppa::problem_to_json(gppa::random_linearly_constrained_qp(6, 3, 2));
  const std::string sp = gppa::problem_to_json(gppa::random_separable_qp(5, 4, 1.0, 2));
  for (const auto& [kind, problem] : {std::pair{"alm", lc}, std::pair{"admm", sp}}) {
    auto parsed = gppa::parse_config_text(std::string(R"({"kind": ")") + kind +
                                          R"(", "gamma": 1.2, "max_iter": 150, "residual_tol": 0, "problem": )" +
                                          problem + "}");
    ASSERT_TRUE(parsed.ok()) << parsed.errors[0];
    const auto out = gppa::execute_run(*parsed.config, gppa::plan_runs(*parsed.config)[0]);
    EXPECT_TRUE(out.passed) << kind << " " << out.report_json;
    EXPECT_NE(out.trace_csv.find("k,c_k,delta_k,residual,dist_to_zero,step_ratio,"),
              std::string::npos);
  }
}

TEST(Experiment, DeterministicBytes) {
  auto parsed = gppa::parse_config_text(R"({"kind": "rate_sweep",
    "operator": {"type": "rotation", "a": 2}, "z0": [1, 0.5], "max_iter": 80,
    "delta": {"delta0": 0.3, "rate": 0.8}, "seed": 7,
    "sweep": {"gamma": [0.5, 1.5], "c": [1, 2], "delta0": [0.1, 0.4]}})");
  ASSERT_TRUE(parsed.ok()) << parsed.errors[0];
  auto cfg = *parsed.config;
  cfg.out_dir = scratch("det_a");
  cfg.workers = 1;
  const auto a = gppa::run_experiment(cfg);
  cfg.out_dir = scratch("det_b");
  cfg.workers = 3;
  const auto b = gppa::run_experiment(cfg);
  ASSERT_EQ(a.runs.size(), 8u);
  for (const auto& entry : fs::directory_iterator(fs::temp_directory_path() / "gppa_test_det_a")) {
    const auto name = entry.path().filename();
    EXPECT_EQ(gppa::read_text_file(entry.path()), gppa::read_text_file(cfg.out_dir / name)) << name;
  }
}

TEST(Experiment, UnreachableOutputIsIoFailure) {
  auto parsed = gppa::parse_config_text(kRotation);
  ASSERT_TRUE(parsed.ok());
  const auto dir = scratch("io");
  gppa::write_text_file(dir / "file", "x");
  parsed.config->out_dir = dir / "file" / "sub";
  EXPECT_EQ(gppa::run_experiment(*parsed.config).exit_code, 3);
}
