#include "gppa/alm.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace gppa {

namespace {

Eigen::VectorXd symmetric_eigenvalues(const Matrix& m) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly)
      .eigenvalues();
}

Matrix gaussian_matrix(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) out(i, j) = normal(rng);
  return out;
}

}  // namespace

std::vector<std::string> LinearlyConstrainedQP::validation_errors() const {
  std::vector<std::string> errors;
  if (Q.rows() == 0 || Q.rows() != Q.cols()) errors.emplace_back("Q must be square and nonempty");
  if (q.size() != Q.rows()) errors.emplace_back("q must have n entries");
  if (A.rows() == 0 || A.cols() != Q.rows()) errors.emplace_back("A must be m x n with m >= 1");
  if (b.size() != A.rows()) errors.emplace_back("b must have m entries");
  if (!errors.empty()) return errors;
  if (!Q.allFinite() || !q.allFinite() || !A.allFinite() || !b.allFinite()) {
    errors.emplace_back("problem data must be finite");
    return errors;
  }
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + Q.cwiseAbs().maxCoeff())) {
    errors.emplace_back("Q must be symmetric");
  }
  const double q_min = symmetric_eigenvalues(Q).minCoeff();
  if (!(q_min > 1e-10)) {
    errors.push_back("Q must be positive definite, smallest eigenvalue " + std::to_string(q_min));
  }
  if (A.rows() > A.cols() || !(min_eig_AAt() > 1e-10)) {
    errors.emplace_back("A must have full row rank");
  }
  return errors;
}

void LinearlyConstrainedQP::validate() const {
  auto errors = validation_errors();
  if (errors.empty()) return;
  std::ostringstream msg;
  msg << "invalid linearly constrained QP:";
  for (const auto& e : errors) msg << ' ' << e << ';';
  throw InvalidArgument(msg.str());
}

double LinearlyConstrainedQP::lipschitz_gradient() const {
  return symmetric_eigenvalues(Q).maxCoeff();
}

double LinearlyConstrainedQP::min_eig_AAt() const {
  return symmetric_eigenvalues(A * A.transpose()).minCoeff();
}

LinearlyConstrainedQP random_linearly_constrained_qp(Index n, Index m, std::uint64_t seed) {
  if (n < 1 || m < 1 || m > n) throw InvalidArgument("random QP needs 1 <= m <= n");
  std::mt19937_64 rng(seed);
  LinearlyConstrainedQP p;
  const Matrix B = gaussian_matrix(rng, n, n);
  p.Q = B.transpose() * B + Matrix::Identity(n, n);
  p.q = gaussian_matrix(rng, n, 1);
  p.A = gaussian_matrix(rng, m, n);
  p.b = gaussian_matrix(rng, m, 1);
  return p;
}

Vector alm_x_subproblem(const LinearlyConstrainedQP& problem, const Vector& p, double c) {
  if (!(c > 0.0)) throw InvalidArgument("ALM penalty c must be > 0");
  require_dim(p, problem.m(), "multiplier");
  const Matrix& A = problem.A;
  const Matrix system = problem.Q + c * A.transpose() * A;
  Eigen::LLT<Matrix> llt(system);
  if (llt.info() != Eigen::Success) throw NumericalError("ALM subproblem: factorization failed");
  const Vector x = llt.solve(A.transpose() * p + c * A.transpose() * problem.b - problem.q);
  require_finite(x, "ALM subproblem solution");

  const Vector optimality =
      problem.Q * x + problem.q - A.transpose() * (p - c * (A * x - problem.b));
  if (optimality.norm() > 1e-8 * (1.0 + p.norm())) {
    throw NumericalError("ALM subproblem: first-order condition residual " +
                         std::to_string(optimality.norm()));
  }
  return x;
}

AlmTrace run_generalized_alm(const LinearlyConstrainedQP& problem, const AlmConfig& config,
                             const Vector& p0) {
  problem.validate();
  if (!(config.gamma > 0.0 && config.gamma < 2.0)) {
    throw InvalidArgument("gamma must lie in the open interval (0,2), got " +
                          std::to_string(config.gamma));
  }
  config.c_schedule.validate();
  if (config.max_iter < 1) throw InvalidArgument("max_iter must be >= 1");
  require_dim(p0, problem.m(), "initial multiplier");
  require_finite(p0, "initial multiplier");

  const Vector p_star = alm_dual_optimum(problem);
  AlmTrace trace;
  Vector p = p0;
  Vector x = Vector::Zero(problem.n());
  try {
    for (int k = 0; k < config.max_iter; ++k) {
      AlmRecord rec;
      rec.k = k;
      rec.c_k = config.c_schedule.at(k);
      rec.p = p;
      rec.dual_distance = (p - p_star).norm();
      rec.x_next = alm_x_subproblem(problem, p, rec.c_k);
      const Vector r = problem.A * rec.x_next - problem.b;
      rec.primal_residual = r.norm();
      rec.p_tilde = p - rec.c_k * r;
      rec.p_next = p - (config.gamma * rec.c_k) * r;
      rec.kkt = kkt_residual(problem, rec.x_next, rec.p_next);
      x = rec.x_next;
      p = rec.p_next;
      const bool done = config.primal_tol > 0.0 && rec.primal_residual <= config.primal_tol;
      trace.records.push_back(std::move(rec));
      if (done) {
        trace.termination = Termination::Converged;
        break;
      }
    }
  } catch (const NumericalError&) {
    trace.termination = Termination::NumericalFailure;
  }
  trace.x_final = x;
  trace.p_final = p;
  return trace;
}

Vector alm_dual_optimum(const LinearlyConstrainedQP& problem) {
  Eigen::LLT<Matrix> q_llt(problem.Q);
  if (q_llt.info() != Eigen::Success) throw NumericalError("Q is not positive definite");
  const Matrix Qinv_At = q_llt.solve(problem.A.transpose());
  const Matrix dual = problem.A * Qinv_At;
  const Vector rhs = problem.b + problem.A * q_llt.solve(problem.q);
  Eigen::LDLT<Matrix> ldlt(dual);
  Vector p = ldlt.solve(rhs);
  require_finite(p, "dual optimum");
  return p;
}

Vector alm_primal_optimum(const LinearlyConstrainedQP& problem) {
  const Vector p = alm_dual_optimum(problem);
  return problem.Q.llt().solve(problem.A.transpose() * p - problem.q);
}

MonotoneOperator make_dual_alm_operator(const LinearlyConstrainedQP& problem) {
  problem.validate();
  Eigen::LLT<Matrix> q_llt(problem.Q);
  AffineOperatorSpec spec;
  spec.G = problem.A * q_llt.solve(problem.A.transpose());
  spec.h = -problem.A * q_llt.solve(problem.q) - problem.b;
  spec.inverse_lipschitz_modulus = problem.lipschitz_gradient() / problem.min_eig_AAt();
  spec.name = "dual_alm";
  return make_affine_operator(spec);
}

DualModulusReport dual_strong_monotonicity(const LinearlyConstrainedQP& problem) {
  problem.validate();
  const Matrix G = problem.A * problem.Q.llt().solve(problem.A.transpose());
  DualModulusReport report;
  report.measured = symmetric_eigenvalues(G).minCoeff();
  report.bound = problem.min_eig_AAt() / problem.lipschitz_gradient();
  return report;
}

EquivalenceReport verify_alm_ppa_equivalence(const LinearlyConstrainedQP& problem, double gamma,
                                             const CSchedule& c_schedule, const Vector& p0,
                                             int iters) {
  if (iters < 1) throw InvalidArgument("iters must be >= 1");
  AlmConfig alm_config;
  alm_config.gamma = gamma;
  alm_config.c_schedule = c_schedule;
  alm_config.max_iter = iters;
  const AlmTrace alm = run_generalized_alm(problem, alm_config, p0);

  const MonotoneOperator dual = make_dual_alm_operator(problem);
  GppaConfig ppa_config;
  ppa_config.gamma = gamma;
  ppa_config.c_schedule = c_schedule;
  ppa_config.max_iter = iters;
  ppa_config.residual_tol = 0.0;
  ppa_config.store_vectors = true;
  const IterationTrace ppa = run_exact_gppa(dual, ppa_config, p0);

  EquivalenceReport report;
  report.iterations = iters;
  const auto ppa_at = [&](std::size_t k) -> const IterationRecord& {
    return ppa.records[std::min(k, ppa.records.size() - 1)];
  };
  for (std::size_t k = 0; k <= alm.records.size(); ++k) {
    const Vector& p_alm = k < alm.records.size() ? alm.records[k].p : alm.p_final;
    const double dev = (p_alm - ppa_at(k).z).norm();
    double res_dev = 0.0;
    if (k < alm.records.size()) res_dev = (alm.records[k].p_tilde - ppa_at(k).z_tilde).norm();
    report.max_deviation = std::max(report.max_deviation, dev);
    report.max_resolvent_deviation = std::max(report.max_resolvent_deviation, res_dev);
    report.deviations.push_back(std::max(dev, res_dev));
  }
  if (alm.termination == Termination::NumericalFailure ||
      ppa.termination == Termination::NumericalFailure) {
    report.max_deviation = std::numeric_limits<double>::infinity();
  }
  return report;
}

double kkt_residual(const LinearlyConstrainedQP& problem, const Vector& x, const Vector& p) {
  require_dim(x, problem.n(), "x");
  require_dim(p, problem.m(), "p");
  const double stationarity =
      (problem.Q * x + problem.q - problem.A.transpose() * p).cwiseAbs().maxCoeff();
  const double feasibility = (problem.A * x - problem.b).cwiseAbs().maxCoeff();
  return std::max(stationarity, feasibility);
}

}  // namespace gppa
