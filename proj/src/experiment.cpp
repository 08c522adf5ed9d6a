#include "gppa/experiment.hpp"

#include "gppa/admm.hpp"
#include "gppa/alm.hpp"
#include "gppa/csv.hpp"
#include "gppa/rate_lab.hpp"
#include "json_support.hpp"

#include <atomic>
#include <mutex>
#include <thread>

namespace gppa {

namespace {

using detail::json;
using csv::cell;

const std::vector<std::string> kBaseColumns = {"k",        "c_k",          "delta_k",
                                               "residual", "dist_to_zero", "step_ratio"};

std::vector<std::string> columns(std::initializer_list<const char*> extra) {
  std::vector<std::string> out = kBaseColumns;
  out.insert(out.end(), extra.begin(), extra.end());
  return out;
}

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

GppaConfig effective_gppa(const ExperimentConfig& config, const PlannedRun& plan) {
  GppaConfig g = config.gppa;
  g.gamma = plan.gamma;
  if (plan.c) g.c_schedule = CSchedule::constant(*plan.c);
  if (plan.delta0 && *plan.delta0 == 0.0) {
    // delta_k = 0 makes every step exact
    g.delta_schedule.reset();
  } else if (plan.delta0) {
    DeltaSchedule d = g.delta_schedule.value_or(DeltaSchedule{});
    d.delta0 = *plan.delta0;
    g.delta_schedule = d;
  }
  g.seed = plan.seed;
  return g;
}

void put_rate(json& report, RunOutcome& out, const RateReport& rate) {
  out.theoretical_factor = rate.theoretical_factor;
  out.empirical_tail_ratio_max = rate.empirical_tail_ratio_max;
  out.empirical_geometric_mean = rate.empirical_geometric_mean;
  if (rate.theoretical_factor) out.tight = rate.tight;
  report["theoretical_factor"] = opt(rate.theoretical_factor);
  report["empirical_tail_ratio_max"] = rate.empirical_tail_ratio_max;
  report["empirical_geometric_mean"] = rate.empirical_geometric_mean;
  report["tight"] = rate.theoretical_factor ? json(rate.tight) : json(nullptr);
  report["within_bound"] = rate.theoretical_factor ? json(rate.within_bound) : json(nullptr);
  report["tightness_gap"] =
      rate.theoretical_factor ? json(*rate.theoretical_factor - rate.empirical_tail_ratio_max)
                              : json(nullptr);
  report["mode"] = rate.mode == RateComparison::Equality ? "equality" : "bound";
  report["tolerance"] = rate.tolerance;
  report["window"] = {rate.window.first, rate.window.second};
}

bool rate_ok(const RateReport& rate) {
  if (!rate.theoretical_factor) return true;
  return rate.mode == RateComparison::Equality ? rate.tight : rate.within_bound;
}

/// Rate estimate whose theoretical factor depends on the window it lands on.
template <class Theory>
std::optional<RateReport> windowed_rate(const std::vector<double>& dist, double floor,
                                        const ExperimentConfig& config, RateComparison mode,
                                        Theory&& theory, json& report) {
  try {
    auto rate = estimate_rate_from_distances(dist, floor, config.window_fraction, std::nullopt,
                                             mode, config.rate_tolerance);
    auto th = theory(rate.window.first, rate.window.second);
    if (th) {
      rate = estimate_rate_from_distances(dist, floor, config.window_fraction, th, mode,
                                          config.rate_tolerance);
    }
    return rate;
  } catch (const InsufficientData& e) {
    report["rate_notice"] = e.what();
    return std::nullopt;
  }
}

void run_gppa_kind(const ExperimentConfig& config, const PlannedRun& plan, RunOutcome& out,
                   json& report) {
  const MonotoneOperator op = build_operator(*config.op);
  const GppaConfig g = effective_gppa(config, plan);
  const bool inexact = g.delta_schedule.has_value();
  const IterationTrace trace = inexact ? run_inexact_gppa(op, g, *config.z0)
                                       : run_exact_gppa(op, g, *config.z0);
  out.iterations = trace.steps();
  out.termination = trace.termination;
  if (!trace.failure_message.empty()) out.message = trace.failure_message;

  csv::Writer w(columns({"z_norm", "step_length", "inexact_error"}));
  for (const auto& r : trace.records) {
    w.add_row({std::to_string(r.k), cell(r.c_k), cell(r.delta_k), cell(r.residual),
               cell(r.dist_to_zero), cell(r.step_ratio), cell(r.z_norm), cell(r.step_length),
               cell(r.inexact_error)});
  }
  out.trace_csv = w.str();
  out.passed = trace.termination != Termination::NumericalFailure;

  const auto& z_star = op.known_zero();
  const auto a = op.inverse_lipschitz_modulus();
  report["operator"] = op.name();
  report["modulus"] = opt(a);

  if (config.kind == ExperimentKind::SuperlinearProbe) {
    const auto probe = superlinear_probe(config.op->a, g.gamma, g.c_schedule.c0(),
                                         g.c_schedule.ratio(), g.max_iter, *config.z0);
    out.final_ratio = probe.final_ratio;
    report["final_ratio"] = probe.final_ratio;
    report["limit_ratio"] = probe.limit_ratio;
    report["monotone_decreasing"] = probe.monotone_decreasing;
    report["ratios"] = probe.ratios;
    report["c_values"] = probe.c_values;
    return;
  }
  if (!z_star) {
    report["rate_notice"] = "operator has no known zero; rates not measured";
    return;
  }

  std::vector<double> dist;
  int contraction_violations = 0;
  const double slack_weight = g.gamma * (2.0 - g.gamma);
  for (std::size_t k = 0; k < trace.records.size(); ++k) {
    dist.push_back(trace.records[k].dist_to_zero.value_or(0.0));
    if (!inexact && k + 1 < trace.records.size()) {
      const double d0 = trace.records[k].dist_to_zero.value_or(0.0);
      const double d1 = trace.records[k + 1].dist_to_zero.value_or(0.0);
      const double res = trace.records[k].residual;
      if (d1 * d1 > d0 * d0 - slack_weight * res * res + 1e-10) ++contraction_violations;
    }
  }
  if (!inexact) {
    report["contraction_violations"] = contraction_violations;
    if (contraction_violations) out.passed = false;
  }
  if (!a) {
    report["rate_notice"] = "operator declares no modulus; theoretical factor unavailable";
    return;
  }

  const auto c_min = [&](int first, int last) {
    double c = std::numeric_limits<double>::infinity();
    for (int k = first; k < last; ++k) c = std::min(c, trace.records[static_cast<std::size_t>(k)].c_k);
    return c;
  };
  const bool constant_c = g.c_schedule.kind() == CSchedule::Kind::Constant;
  const bool equality = !inexact && config.op->type == OperatorConfig::Type::Rotation &&
                        g.gamma == 1.0 && constant_c;
  const auto mode = equality ? RateComparison::Equality : RateComparison::Bound;
  std::optional<RateReport> rate;
  if (!inexact) {
    rate = windowed_rate(dist, distance_floor(z_star->norm()), config, mode,
                         [&](int first, int last) -> std::optional<double> {
                           return std::sqrt(theoretical_exact_rate(g.gamma, c_min(first, last), *a));
                         },
                         report);
  } else {
    rate = windowed_rate(dist, distance_floor(z_star->norm()), config, mode,
                         [&](int first, int last) -> std::optional<double> {
                           return theoretical_inexact_factor(g.gamma, c_min(first, last), *a,
                                                             g.delta_schedule->at(first));
                         },
                         report);
    const auto check = check_inexact_rate(trace, *z_star, *a);
    report["inexact_checked_steps"] = check.checked;
    report["inexact_violations"] = check.violations;
    report["first_contractive_index"] =
        check.first_contractive_index ? json(*check.first_contractive_index) : json(nullptr);
    if (check.violations) out.passed = false;
    report["final_dist_to_zero"] = dist.back();
  }
  if (rate) {
    put_rate(report, out, *rate);
    if (!inexact && !rate_ok(*rate)) out.passed = false;
  }
}

struct AlmRows {
  std::vector<std::vector<std::string>> rows;
  std::vector<double> dist;
};

AlmRows alm_rows(const LinearlyConstrainedQP& problem, const AlmTrace& trace,
                 const CSchedule& schedule, const Vector& p_star) {
  AlmRows out;
  const auto n = trace.records.size();
  for (std::size_t k = 0; k <= n; ++k) {
    const Vector& p = k < n ? trace.records[k].p : trace.p_final;
    out.dist.push_back((p - p_star).norm());
  }
  for (std::size_t k = 0; k <= n; ++k) {
    std::optional<double> ratio;
    if (k < n && out.dist[k] > 0.0) ratio = out.dist[k + 1] / out.dist[k];
    if (k < n) {
      const auto& r = trace.records[k];
      out.rows.push_back({std::to_string(k), cell(r.c_k), "", cell(r.c_k * r.primal_residual),
                          cell(out.dist[k]), cell(ratio), cell(r.x_next.norm()), cell(r.p.norm()),
                          cell(r.primal_residual), cell(r.kkt)});
    } else {
      out.rows.push_back({std::to_string(k), cell(schedule.at(static_cast<int>(k))), "", "",
                          cell(out.dist[k]), "", "", cell(trace.p_final.norm()), "", ""});
    }
  }
  (void)problem;
  return out;
}

struct AdmmRows {
  std::vector<std::vector<std::string>> rows;
  std::vector<double> dist;
};

AdmmRows admm_rows(const SeparableQP& problem, const AdmmTrace& trace, double gamma,
                   const Vector& z_star) {
  AdmmRows out;
  const auto n = trace.records.size();
  std::vector<Vector> zs;
  for (const auto& r : trace.records) zs.push_back(r.z);
  zs.push_back(trace.p_final + problem.lambda * trace.w_final);
  for (const auto& z : zs) out.dist.push_back((z - z_star).norm());
  for (std::size_t k = 0; k <= n; ++k) {
    if (k < n) {
      const auto& r = trace.records[k];
      const double residual = (zs[k + 1] - zs[k]).norm() / gamma;
      std::optional<double> ratio;
      if (out.dist[k] > 0.0) ratio = out.dist[k + 1] / out.dist[k];
      out.rows.push_back({std::to_string(k), cell(1.0), "", cell(residual), cell(out.dist[k]),
                          cell(ratio), cell(r.x_next.norm()), cell(r.w.norm()), cell(r.p.norm()),
                          cell(r.constraint_residual)});
    } else {
      out.rows.push_back({std::to_string(k), cell(1.0), "", "", cell(out.dist[k]), "", "",
                          cell(trace.w_final.norm()), cell(trace.p_final.norm()), ""});
    }
  }
  return out;
}

json sequence_json(const SequenceRates& r) {
  return {{"root_ratio_max", r.defined() ? json(r.root_ratio_max) : json(nullptr)},
          {"step_ratios", r.step_ratios}};
}

void run_alm_kind(const ExperimentConfig& config, const PlannedRun& plan, RunOutcome& out,
                  json& report) {
  const auto& problem = std::get<LinearlyConstrainedQP>(*config.problem);
  const GppaConfig g = effective_gppa(config, plan);
  AlmConfig ac;
  ac.gamma = g.gamma;
  ac.c_schedule = g.c_schedule;
  ac.max_iter = g.max_iter;
  ac.primal_tol = g.residual_tol;
  const Vector p0 = config.p0.value_or(Vector::Zero(problem.m()));
  const AlmTrace trace = run_generalized_alm(problem, ac, p0);
  out.iterations = static_cast<int>(trace.records.size());
  out.termination = trace.termination;
  out.passed = trace.termination != Termination::NumericalFailure;

  const Vector p_star = alm_dual_optimum(problem);
  const auto rows = alm_rows(problem, trace, ac.c_schedule, p_star);
  csv::Writer w(columns({"x_norm", "p_norm", "primal_residual", "kkt"}));
  for (const auto& r : rows.rows) w.add_row(r);
  out.trace_csv = w.str();

  const double a = problem.lipschitz_gradient() / problem.min_eig_AAt();
  report["modulus"] = a;
  report["final_primal_residual"] =
      trace.records.empty() ? json(nullptr) : json(trace.records.back().primal_residual);
  report["final_kkt"] = trace.records.empty() ? json(nullptr) : json(trace.records.back().kkt);
  const auto rate = windowed_rate(
      rows.dist, distance_floor(p_star.norm()), config, RateComparison::Bound,
      [&](int first, int last) -> std::optional<double> {
        double c = std::numeric_limits<double>::infinity();
        for (int k = first; k < last; ++k) c = std::min(c, ac.c_schedule.at(k));
        return std::sqrt(theoretical_exact_rate(ac.gamma, c, a));
      },
      report);
  if (rate) {
    put_rate(report, out, *rate);
    if (!rate_ok(*rate)) out.passed = false;
  }
}

void run_admm_kind(const ExperimentConfig& config, const PlannedRun& plan, RunOutcome& out,
                   json& report) {
  const auto& problem = std::get<SeparableQP>(*config.problem);
  const GppaConfig g = effective_gppa(config, plan);
  AdmmConfig ac;
  ac.gamma = g.gamma;
  ac.max_iter = g.max_iter;
  ac.residual_tol = g.residual_tol;
  const Vector z0 = config.z0.value_or(Vector::Zero(problem.m()));
  const AdmmTrace trace = run_generalized_admm(problem, ac, admm_init_from_z(problem, z0));
  out.iterations = static_cast<int>(trace.records.size());
  out.termination = trace.termination;
  out.passed = trace.termination != Termination::NumericalFailure;

  const MonotoneOperator dr = make_dr_splitting_operator(problem);
  const Vector& z_star = *dr.known_zero();
  const auto rows = admm_rows(problem, trace, ac.gamma, z_star);
  csv::Writer w(columns({"x_norm", "w_norm", "p_norm", "constraint_residual"}));
  for (const auto& r : rows.rows) w.add_row(r);
  out.trace_csv = w.str();

  const double a = *dr.inverse_lipschitz_modulus();
  report["modulus"] = a;
  report["contraction_bound"] = DrSplitting(problem).contraction_bound();
  report["final_constraint_residual"] =
      trace.records.empty() ? json(nullptr) : json(trace.records.back().constraint_residual);
  const auto est = extract_primal_dual(trace, problem, config.window_fraction);
  report["p_rates"] = sequence_json(est.p_rates);
  report["w_rates"] = sequence_json(est.w_rates);
  report["mx_rates"] = sequence_json(est.mx_rates);
  report["x_rates"] = est.x_rates ? sequence_json(*est.x_rates) : json(nullptr);
  if (!est.notice.empty()) report["notice"] = est.notice;
  const auto rate = windowed_rate(
      rows.dist, distance_floor(z_star.norm()), config, RateComparison::Bound,
      [&](int, int) -> std::optional<double> {
        return std::sqrt(theoretical_exact_rate(ac.gamma, 1.0, a));
      },
      report);
  if (rate) {
    put_rate(report, out, *rate);
    if (!rate_ok(*rate)) out.passed = false;
  }
}

void run_equivalence_kind(const ExperimentConfig& config, const PlannedRun& plan,
                          RunOutcome& out, json& report) {
  const GppaConfig g = effective_gppa(config, plan);
  EquivalenceReport eq;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> header;
  if (const auto* lc = std::get_if<LinearlyConstrainedQP>(&*config.problem)) {
    const Vector p0 = config.p0.value_or(Vector::Zero(lc->m()));
    eq = verify_alm_ppa_equivalence(*lc, g.gamma, g.c_schedule, p0, g.max_iter);
    AlmConfig ac;
    ac.gamma = g.gamma;
    ac.c_schedule = g.c_schedule;
    ac.max_iter = g.max_iter;
    const AlmTrace trace = run_generalized_alm(*lc, ac, p0);
    rows = alm_rows(*lc, trace, ac.c_schedule, alm_dual_optimum(*lc)).rows;
    header = columns({"x_norm", "p_norm", "primal_residual", "kkt", "deviation"});
    report["target"] = "alm";
  } else {
    const auto& sp = std::get<SeparableQP>(*config.problem);
    const Vector z0 = config.z0.value_or(Vector::Zero(sp.m()));
    eq = verify_admm_dr_correspondence(sp, g.gamma, z0, g.max_iter);
    AdmmConfig ac;
    ac.gamma = g.gamma;
    ac.max_iter = g.max_iter;
    const AdmmTrace trace = run_generalized_admm(sp, ac, admm_init_from_z(sp, z0));
    const auto dr = make_dr_splitting_operator(sp);
    rows = admm_rows(sp, trace, g.gamma, *dr.known_zero()).rows;
    header = columns({"x_norm", "w_norm", "p_norm", "constraint_residual", "deviation"});
    report["target"] = "admm";
  }
  csv::Writer w(header);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    auto row = rows[k];
    row.push_back(k < eq.deviations.size() ? cell(eq.deviations[k]) : "");
    w.add_row(row);
  }
  out.trace_csv = w.str();
  out.iterations = eq.iterations;
  out.termination = std::isfinite(eq.max_deviation) ? Termination::MaxIter
                                                    : Termination::NumericalFailure;
  out.max_deviation = std::max(eq.max_deviation, eq.max_resolvent_deviation);
  out.passed = eq.passed();
  report["max_deviation"] = eq.max_deviation;
  report["max_resolvent_deviation"] = eq.max_resolvent_deviation;
  report["deviation_tolerance"] = eq.tolerance;
  report["deviations"] = eq.deviations;
}

double summary_c(const ExperimentConfig& config, const PlannedRun& plan) {
  if (plan.c) return *plan.c;
  if (config.kind == ExperimentKind::Admm ||
      (config.problem && std::holds_alternative<SeparableQP>(*config.problem))) {
    return 1.0;
  }
  return config.gppa.c_schedule.at(0);
}

}  // namespace

RunOutcome execute_run(const ExperimentConfig& config, const PlannedRun& plan) {
  RunOutcome out;
  out.plan = plan;
  out.kind = config.kind;
  json report;
  report["run_id"] = plan.id;
  report["order"] = plan.order;
  report["kind"] = std::string(to_string(config.kind));
  report["gamma"] = plan.gamma;
  report["c"] = summary_c(config, plan);
  report["delta0"] = plan.delta0 ? json(*plan.delta0)
                     : config.gppa.delta_schedule ? json(config.gppa.delta_schedule->delta0)
                                                  : json(nullptr);
  report["seed"] = plan.seed;
  try {
    switch (config.kind) {
      case ExperimentKind::GppaExact:
      case ExperimentKind::GppaInexact:
      case ExperimentKind::RateSweep:
      case ExperimentKind::SuperlinearProbe:
        run_gppa_kind(config, plan, out, report);
        break;
      case ExperimentKind::Alm:
        run_alm_kind(config, plan, out, report);
        break;
      case ExperimentKind::Admm:
        run_admm_kind(config, plan, out, report);
        break;
      case ExperimentKind::Equivalence:
        run_equivalence_kind(config, plan, out, report);
        break;
    }
  } catch (const Error& e) {
    out.termination = Termination::NumericalFailure;
    out.passed = false;
    out.message = e.what();
  }
  if (out.termination == Termination::NumericalFailure) out.passed = false;
  report["iterations"] = out.iterations;
  report["termination"] = std::string(to_string(out.termination));
  report["passed"] = out.passed;
  if (!out.message.empty()) report["message"] = out.message;
  out.report_json = report.dump(2) + "\n";
  return out;
}

std::string summary_csv(const std::vector<RunOutcome>& runs) {
  csv::Writer w({"order", "run_id", "kind", "gamma", "c", "delta0", "seed", "iterations",
                 "termination", "theoretical_factor", "empirical_tail_ratio_max",
                 "empirical_geometric_mean", "tight", "final_ratio", "max_deviation", "passed"});
  for (const auto& r : runs) {
    const json rep = json::parse(r.report_json);
    std::optional<double> c;
    if (rep["c"].is_number()) c = rep["c"].get<double>();
    std::optional<double> delta0;
    if (rep["delta0"].is_number()) delta0 = rep["delta0"].get<double>();
    w.add_row({std::to_string(r.plan.order), r.plan.id, std::string(to_string(r.kind)),
               cell(r.plan.gamma), cell(c), cell(delta0), std::to_string(r.plan.seed),
               std::to_string(r.iterations), std::string(to_string(r.termination)),
               cell(r.theoretical_factor), cell(r.empirical_tail_ratio_max),
               cell(r.empirical_geometric_mean), r.tight ? (*r.tight ? "true" : "false") : "",
               cell(r.final_ratio), cell(r.max_deviation), r.passed ? "true" : "false"});
  }
  return w.str();
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  ExperimentResult result;
  const auto plan = plan_runs(config);
  std::error_code ec;
  std::filesystem::create_directories(config.out_dir, ec);
  if (ec || !std::filesystem::is_directory(config.out_dir)) {
    result.exit_code = 3;
    result.messages.push_back("cannot create output directory " + config.out_dir.string() +
                              (ec ? ": " + ec.message() : ""));
    return result;
  }

  result.runs.resize(plan.size());
  std::atomic<std::size_t> next{0};
  std::mutex message_mutex;
  bool io_failed = false;
  const auto worker = [&] {
    for (std::size_t i = next++; i < plan.size(); i = next++) {
      RunOutcome out = execute_run(config, plan[i]);
      try {
        write_text_file(config.out_dir / (plan[i].id + ".csv"), out.trace_csv);
        write_text_file(config.out_dir / (plan[i].id + ".report.json"), out.report_json);
      } catch (const IoError& e) {
        std::lock_guard lock(message_mutex);
        io_failed = true;
        result.messages.emplace_back(e.what());
      }
      result.runs[i] = std::move(out);
    }
  };
  const auto workers = static_cast<std::size_t>(std::max(1, config.workers));
  const auto threads = std::min(workers, plan.size());
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  result.summary_path = config.out_dir / "summary.csv";
  try {
    write_text_file(result.summary_path, summary_csv(result.runs));
  } catch (const IoError& e) {
    io_failed = true;
    result.messages.emplace_back(e.what());
  }
  for (const auto& r : result.runs) {
    if (r.termination == Termination::NumericalFailure) {
      result.messages.push_back(r.plan.id + ": numerical failure" +
                                (r.message.empty() ? "" : ": " + r.message));
    } else if (!r.passed) {
      result.messages.push_back(r.plan.id + ": check failed");
    }
    if (!r.passed && result.exit_code == 0) result.exit_code = 2;
  }
  if (io_failed) result.exit_code = 3;
  return result;
}

}  // namespace gppa
