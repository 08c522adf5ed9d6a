#include "gppa/admm.hpp"
#include "gppa/alm.hpp"
#include "gppa/experiment.hpp"
#include "gppa/problem_io.hpp"
#include "gppa/rate_lab.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace gppa;

namespace {

CSchedule to_schedule(const py::object& c) {
  if (py::isinstance<CSchedule>(c)) return c.cast<CSchedule>();
  return CSchedule::constant(c.cast<double>());
}

// Columnar view of a trace; z is stored row-wise when vectors are kept.
py::dict trace_dict(const IterationTrace& trace) {
  std::vector<int> k;
  std::vector<double> c_k, residual, z_norm;
  std::vector<std::optional<double>> dist, delta, step_ratio;
  Matrix z;
  const bool stored = !trace.records.empty() && trace.records.front().z.size() > 0;
  if (stored) z.resize(static_cast<Index>(trace.records.size()), trace.records.front().z.size());
  for (std::size_t i = 0; i < trace.records.size(); ++i) {
    const auto& r = trace.records[i];
    k.push_back(r.k);
    c_k.push_back(r.c_k);
    residual.push_back(r.residual);
    z_norm.push_back(r.z_norm);
    dist.push_back(r.dist_to_zero);
    delta.push_back(r.delta_k);
    step_ratio.push_back(r.step_ratio);
    if (stored) z.row(static_cast<Index>(i)) = r.z.transpose();
  }
  py::dict out;
  out["k"] = k;
  out["c_k"] = c_k;
  out["delta_k"] = delta;
  out["residual"] = residual;
  out["z_norm"] = z_norm;
  out["dist_to_zero"] = dist;
  out["step_ratio"] = step_ratio;
  out["z"] = stored ? py::cast(z) : py::none();
  out["final_z"] = trace.final_z;
  out["termination"] = std::string(to_string(trace.termination));
  out["failure_message"] = trace.failure_message;
  return out;
}

py::dict equivalence_dict(const EquivalenceReport& r) {
  py::dict out;
  out["iterations"] = r.iterations;
  out["max_deviation"] = r.max_deviation;
  out["max_resolvent_deviation"] = r.max_resolvent_deviation;
  out["deviations"] = r.deviations;
  out["passed"] = r.passed();
  return out;
}

py::dict rate_dict(const RateReport& r) {
  py::dict out;
  out["theoretical_factor"] = r.theoretical_factor;
  out["empirical_tail_ratio_max"] = r.empirical_tail_ratio_max;
  out["empirical_geometric_mean"] = r.empirical_geometric_mean;
  out["tight"] = r.tight;
  out["within_bound"] = r.within_bound;
  out["window"] = r.window;
  out["ratios"] = r.ratios;
  out["passed"] = r.passed();
  return out;
}

}  // namespace

PYBIND11_MODULE(_gppa, m) {
  m.doc() = "Generalized proximal point iterations, ALM and ADMM";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<InsufficientData>(m, "InsufficientData", PyExc_RuntimeError);

  py::class_<MonotoneOperator>(m, "MonotoneOperator")
      .def_property_readonly("dim", &MonotoneOperator::dim)
      .def_property_readonly("name", &MonotoneOperator::name)
      .def_property_readonly("known_zero", &MonotoneOperator::known_zero)
      .def_property_readonly("inverse_lipschitz_modulus",
                             &MonotoneOperator::inverse_lipschitz_modulus)
      .def("resolvent", &MonotoneOperator::resolvent, py::arg("c"), py::arg("z"))
      .def("forward", &MonotoneOperator::forward, py::arg("z"))
      .def("__repr__", [](const MonotoneOperator& op) {
        return "<MonotoneOperator " + op.name() + " dim=" + std::to_string(op.dim()) + ">";
      });

  m.def("rotation_operator", [](double a) { return make_rotation_operator({a}); },
        py::arg("a") = 1.0);
  m.def(
      "affine_operator",
      [](const Matrix& G, const Vector& h, std::optional<double> modulus, std::string name) {
        return make_affine_operator({G, h, modulus, std::move(name)});
      },
      py::arg("G"), py::arg("h"), py::arg("inverse_lipschitz_modulus") = py::none(),
      py::arg("name") = "affine");

  py::class_<CSchedule>(m, "CSchedule")
      .def_static("constant", &CSchedule::constant, py::arg("c"))
      .def_static("geometric", &CSchedule::geometric, py::arg("c0"), py::arg("ratio"))
      .def_static("list", &CSchedule::list, py::arg("values"), py::arg("kappa") = py::none())
      .def("at", &CSchedule::at, py::arg("k"))
      .def_property_readonly("kappa", &CSchedule::kappa);

  m.def("theoretical_exact_rate", &theoretical_exact_rate, py::arg("gamma"), py::arg("c"),
        py::arg("a"));
  m.def("theoretical_inexact_factor", &theoretical_inexact_factor, py::arg("gamma"), py::arg("c"),
        py::arg("a"), py::arg("delta_k"));

  m.def(
      "run_gppa",
      [](const MonotoneOperator& op, const Vector& z0, double gamma, const py::object& c,
         int max_iter, double residual_tol, std::optional<double> delta0, double delta_rate,
         std::uint64_t seed) {
        GppaConfig cfg;
        cfg.gamma = gamma;
        cfg.c_schedule = to_schedule(c);
        cfg.max_iter = max_iter;
        cfg.residual_tol = residual_tol;
        cfg.seed = seed;
        cfg.store_vectors = true;
        if (delta0) {
          cfg.delta_schedule = DeltaSchedule{*delta0, delta_rate};
          return trace_dict(run_inexact_gppa(op, cfg, z0));
        }
        return trace_dict(run_exact_gppa(op, cfg, z0));
      },
      py::arg("op"), py::arg("z0"), py::arg("gamma") = 1.0, py::arg("c") = 1.0,
      py::arg("max_iter") = 100, py::arg("residual_tol") = 1e-10, py::arg("delta0") = py::none(),
      py::arg("delta_rate") = 0.5, py::arg("seed") = 0);

  m.def(
      "estimate_rate",
      [](const std::vector<double>& distances, double floor, double window_fraction,
         std::optional<double> theoretical_factor, double tolerance) {
        return rate_dict(estimate_rate_from_distances(distances, floor, window_fraction,
                                                      theoretical_factor, RateComparison::Bound,
                                                      tolerance));
      },
      py::arg("distances"), py::arg("floor") = 0.0, py::arg("window_fraction") = 0.5,
      py::arg("theoretical_factor") = py::none(), py::arg("tolerance") = 1e-6);

  m.def(
      "tightness_check_rotation",
      [](double a, double c, double gamma, const Vector& z0, int iters) {
        const auto r = tightness_check_rotation(a, c, gamma, z0, iters);
        py::dict out;
        out["rho"] = r.rho;
        out["squared_ratios"] = r.squared_ratios;
        out["max_abs_deviation"] = r.max_abs_deviation;
        out["max_excess"] = r.max_excess;
        out["violations"] = r.violations;
        out["passed"] = r.passed;
        return out;
      },
      py::arg("a"), py::arg("c"), py::arg("gamma"), py::arg("z0"), py::arg("iters") = 50);

  m.def(
      "superlinear_probe",
      [](double a, double gamma, double c0, double growth, int iters, const Vector& z0) {
        const auto r = superlinear_probe(a, gamma, c0, growth, iters, z0);
        py::dict out;
        out["c_values"] = r.c_values;
        out["ratios"] = r.ratios;
        out["final_ratio"] = r.final_ratio;
        out["limit_ratio"] = r.limit_ratio;
        out["monotone_decreasing"] = r.monotone_decreasing;
        return out;
      },
      py::arg("a"), py::arg("gamma"), py::arg("c0"), py::arg("growth"), py::arg("iters"),
      py::arg("z0"));

  m.def(
      "check_firm_nonexpansive",
      [](const MonotoneOperator& op, double c, int samples, std::uint64_t seed) {
        const auto r = check_firm_nonexpansive(op, c, samples, seed);
        py::dict out;
        out["violations"] = r.violations;
        out["worst_inner_margin"] = r.worst_inner_margin;
        out["worst_energy_margin"] = r.worst_energy_margin;
        out["worst_nonexpansive_margin"] = r.worst_nonexpansive_margin;
        return out;
      },
      py::arg("op"), py::arg("c"), py::arg("samples") = 1000, py::arg("seed") = 0);

  py::class_<LinearlyConstrainedQP>(m, "LinearlyConstrainedQP")
      .def(py::init([](Matrix Q, Vector q, Matrix A, Vector b) {
             LinearlyConstrainedQP p{std::move(Q), std::move(q), std::move(A), std::move(b)};
             p.validate();
             return p;
           }),
           py::arg("Q"), py::arg("q"), py::arg("A"), py::arg("b"))
      .def_readonly("Q", &LinearlyConstrainedQP::Q)
      .def_readonly("q", &LinearlyConstrainedQP::q)
      .def_readonly("A", &LinearlyConstrainedQP::A)
      .def_readonly("b", &LinearlyConstrainedQP::b);

  py::class_<SeparableQP>(m, "SeparableQP")
      .def(py::init([](Matrix Q_f, Vector q_f, Matrix Q_g, Vector q_g, Matrix M, double lambda) {
             SeparableQP p{std::move(Q_f), std::move(q_f), std::move(Q_g), std::move(q_g),
                           std::move(M), lambda};
             p.validate();
             return p;
           }),
           py::arg("Q_f"), py::arg("q_f"), py::arg("Q_g"), py::arg("q_g"), py::arg("M"),
           py::arg("lam"))
      .def_readonly("Q_f", &SeparableQP::Q_f)
      .def_readonly("q_f", &SeparableQP::q_f)
      .def_readonly("Q_g", &SeparableQP::Q_g)
      .def_readonly("q_g", &SeparableQP::q_g)
      .def_readonly("M", &SeparableQP::M)
      .def_readonly("lam", &SeparableQP::lambda);

  m.def("random_linearly_constrained_qp", &random_linearly_constrained_qp, py::arg("n"),
        py::arg("m"), py::arg("seed"));
  m.def("random_separable_qp", &random_separable_qp, py::arg("n"), py::arg("m"),
        py::arg("lam"), py::arg("seed"));
  m.def("alm_dual_optimum", &alm_dual_optimum, py::arg("problem"));
  m.def("dual_alm_operator", &make_dual_alm_operator, py::arg("problem"));
  m.def("dr_splitting_operator", &make_dr_splitting_operator, py::arg("problem"));

  m.def(
      "run_alm",
      [](const LinearlyConstrainedQP& problem, const Vector& p0, double gamma,
         const py::object& c, int max_iter) {
        AlmConfig cfg;
        cfg.gamma = gamma;
        cfg.c_schedule = to_schedule(c);
        cfg.max_iter = max_iter;
        const auto trace = run_generalized_alm(problem, cfg, p0);
        std::vector<double> primal, kkt;
        for (const auto& r : trace.records) {
          primal.push_back(r.primal_residual);
          kkt.push_back(r.kkt);
        }
        py::dict out;
        out["x"] = trace.x_final;
        out["p"] = trace.p_final;
        out["primal_residual"] = primal;
        out["kkt"] = kkt;
        out["termination"] = std::string(to_string(trace.termination));
        return out;
      },
      py::arg("problem"), py::arg("p0"), py::arg("gamma") = 1.0, py::arg("c") = 1.0,
      py::arg("max_iter") = 200);

  m.def(
      "run_admm",
      [](const SeparableQP& problem, const Vector& z0, double gamma, int max_iter) {
        AdmmConfig cfg;
        cfg.gamma = gamma;
        cfg.max_iter = max_iter;
        const auto trace = run_generalized_admm(problem, cfg, admm_init_from_z(problem, z0));
        std::vector<double> constraint;
        for (const auto& r : trace.records) constraint.push_back(r.constraint_residual);
        py::dict out;
        out["x"] = trace.x_final;
        out["w"] = trace.w_final;
        out["p"] = trace.p_final;
        out["constraint_residual"] = constraint;
        out["termination"] = std::string(to_string(trace.termination));
        return out;
      },
      py::arg("problem"), py::arg("z0"), py::arg("gamma") = 1.0, py::arg("max_iter") = 300);

  m.def(
      "verify_alm_ppa_equivalence",
      [](const LinearlyConstrainedQP& problem, double gamma, const py::object& c, const Vector& p0,
         int iters) {
        return equivalence_dict(verify_alm_ppa_equivalence(problem, gamma, to_schedule(c), p0, iters));
      },
      py::arg("problem"), py::arg("gamma"), py::arg("c"), py::arg("p0"), py::arg("iters") = 100);
  m.def(
      "verify_admm_dr_correspondence",
      [](const SeparableQP& problem, double gamma, const Vector& z0, int iters) {
        return equivalence_dict(verify_admm_dr_correspondence(problem, gamma, z0, iters));
      },
      py::arg("problem"), py::arg("gamma"), py::arg("z0"), py::arg("iters") = 100);

  m.def(
      "dual_strong_monotonicity",
      [](const LinearlyConstrainedQP& problem) {
        const auto r = dual_strong_monotonicity(problem);
        return py::make_tuple(r.measured, r.bound);
      },
      py::arg("problem"));

  m.def(
      "emit_problem",
      [](const py::object& problem, const std::filesystem::path& path) {
        if (py::isinstance<LinearlyConstrainedQP>(problem)) {
          emit_problem_file(problem.cast<LinearlyConstrainedQP>(), path);
        } else {
          emit_problem_file(problem.cast<SeparableQP>(), path);
        }
      },
      py::arg("problem"), py::arg("path"));
  m.def(
      "load_problem",
      [](const std::filesystem::path& path) -> py::object {
        const Problem p = load_problem_file(path);
        if (const auto* lc = std::get_if<LinearlyConstrainedQP>(&p)) return py::cast(*lc);
        return py::cast(std::get<SeparableQP>(p));
      },
      py::arg("path"));

  m.def(
      "validate_config",
      [](const std::filesystem::path& path) {
        const auto parsed = parse_config_file(path);
        return parsed.errors;
      },
      py::arg("path"));
  m.def(
      "run_config",
      [](const std::filesystem::path& path, std::optional<std::filesystem::path> out_dir,
         int workers) {
        auto parsed = parse_config_file(path);
        if (!parsed.ok()) throw InvalidArgument(parsed.errors.empty() ? "invalid config" : parsed.errors.front());
        auto cfg = *parsed.config;
        if (out_dir) cfg.out_dir = *out_dir;
        cfg.workers = workers;
        ExperimentResult result;
        {
          py::gil_scoped_release release;
          result = run_experiment(cfg);
        }
        py::dict out;
        out["exit_code"] = result.exit_code;
        out["summary_path"] = result.summary_path;
        out["messages"] = result.messages;
        out["runs"] = static_cast<int>(result.runs.size());
        return out;
      },
      py::arg("path"), py::arg("out_dir") = py::none(), py::arg("workers") = 1);
}
