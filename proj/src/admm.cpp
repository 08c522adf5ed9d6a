#include "gppa/admm.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <memory>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace gppa {

namespace {

Eigen::VectorXd sym_eigs(const Matrix& m) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly)
      .eigenvalues();
}

Matrix gaussian(std::mt19937_64& rng, Index rows, Index cols) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix out(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) out(i, j) = normal(rng);
  return out;
}

Eigen::LLT<Matrix> spd_factor(const Matrix& m, const char* what) {
  Eigen::LLT<Matrix> llt(m);
  if (llt.info() != Eigen::Success) {
    throw NumericalError(std::string(what) + ": matrix is not positive definite");
  }
  return llt;
}

}  // namespace

std::vector<std::string> SeparableQP::validation_errors() const {
  std::vector<std::string> errors;
  if (Q_f.rows() == 0 || Q_f.rows() != Q_f.cols()) errors.emplace_back("Q_f must be square");
  if (q_f.size() != Q_f.rows()) errors.emplace_back("q_f must have n entries");
  if (Q_g.rows() == 0 || Q_g.rows() != Q_g.cols()) errors.emplace_back("Q_g must be square");
  if (q_g.size() != Q_g.rows()) errors.emplace_back("q_g must have m entries");
  if (M.rows() != Q_g.rows() || M.cols() != Q_f.rows()) errors.emplace_back("M must be m x n");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    errors.push_back("lambda must be > 0, got " + std::to_string(lambda));
  }
  if (!errors.empty()) return errors;
  if (!Q_f.allFinite() || !q_f.allFinite() || !Q_g.allFinite() || !q_g.allFinite() ||
      !M.allFinite()) {
    errors.emplace_back("problem data must be finite");
    return errors;
  }
  if (!(sym_eigs(Q_f).minCoeff() > 1e-10)) errors.emplace_back("Q_f must be positive definite");
  if (!(sym_eigs(Q_g).minCoeff() > 1e-10)) errors.emplace_back("Q_g must be positive definite");
  return errors;
}

void SeparableQP::validate() const {
  auto errors = validation_errors();
  if (errors.empty()) return;
  std::ostringstream msg;
  msg << "invalid separable QP:";
  for (const auto& e : errors) msg << ' ' << e << ';';
  throw InvalidArgument(msg.str());
}

double SeparableQP::alpha() const { return 1.0 / sym_eigs(Q_g).maxCoeff(); }
double SeparableQP::beta() const { return 1.0 / sym_eigs(Q_g).minCoeff(); }

SeparableQP random_separable_qp(Index n, Index m, double lambda, std::uint64_t seed) {
  if (n < 1 || m < 1) throw InvalidArgument("random separable QP needs n, m >= 1");
  std::mt19937_64 rng(seed);
  SeparableQP p;
  const Matrix Bf = gaussian(rng, n, n);
  p.Q_f = Bf.transpose() * Bf + Matrix::Identity(n, n);
  p.q_f = gaussian(rng, n, 1);
  const Matrix Bg = gaussian(rng, m, m);
  p.Q_g = Bg.transpose() * Bg / static_cast<double>(m) + Matrix::Identity(m, m);
  p.q_g = gaussian(rng, m, 1);
  p.M = gaussian(rng, m, n);
  p.lambda = lambda;
  return p;
}

KktPoint separable_kkt_point(const SeparableQP& problem) {
  problem.validate();
  const Index n = problem.n();
  const Index m = problem.m();
  Matrix K = Matrix::Zero(n + 2 * m, n + 2 * m);
  K.block(0, 0, n, n) = problem.Q_f;
  K.block(0, n + m, n, m) = problem.M.transpose();
  K.block(n, n, m, m) = problem.Q_g;
  K.block(n, n + m, m, m) = -Matrix::Identity(m, m);
  K.block(n + m, 0, m, n) = problem.M;
  K.block(n + m, n, m, m) = -Matrix::Identity(m, m);
  Vector rhs = Vector::Zero(n + 2 * m);
  rhs.head(n) = -problem.q_f;
  rhs.segment(n, m) = -problem.q_g;
  const Vector sol = K.fullPivLu().solve(rhs);
  require_finite(sol, "KKT solve");
  return {sol.head(n), sol.segment(n, m), sol.tail(m)};
}

AdmmTrace run_generalized_admm(const SeparableQP& problem, const AdmmConfig& config,
                               const AdmmInit& init) {
  problem.validate();
  const double gamma = config.gamma;
  if (!(gamma > 0.0 && gamma < 2.0)) {
    throw InvalidArgument("gamma must lie in the open interval (0,2), got " + std::to_string(gamma));
  }
  if (config.max_iter < 1) throw InvalidArgument("max_iter must be >= 1");
  require_dim(init.w0, problem.m(), "w0");
  require_dim(init.p0, problem.m(), "p0");
  require_finite(init.w0, "w0");
  require_finite(init.p0, "p0");

  const double lambda = problem.lambda;
  const Matrix& M = problem.M;
  const auto x_factor =
      spd_factor(problem.Q_f + lambda * M.transpose() * M, "ADMM x-subproblem");
  const auto w_factor = spd_factor(
      problem.Q_g + lambda * Matrix::Identity(problem.m(), problem.m()), "ADMM w-subproblem");

  AdmmTrace trace;
  Vector w = init.w0;
  Vector p = init.p0;
  Vector x = Vector::Zero(problem.n());
  for (int k = 0; k < config.max_iter; ++k) {
    AdmmRecord rec;
    rec.k = k;
    rec.w = w;
    rec.p = p;
    rec.z = p + lambda * w;

    rec.x_next = x_factor.solve(-problem.q_f - M.transpose() * p + lambda * M.transpose() * w);
    const Vector mx = M * rec.x_next;
    const Vector target = gamma * mx + (1.0 - gamma) * w;
    rec.w_next = w_factor.solve(-problem.q_g + p + lambda * target);
    rec.p_next = p + lambda * (target - rec.w_next);
    rec.constraint_residual = (mx - rec.w_next).norm();
    rec.w_step_optimality =
        (problem.Q_g * rec.w_next + problem.q_g - p + lambda * (rec.w_next - target)).norm();

    if (!rec.x_next.allFinite() || !rec.w_next.allFinite() || !rec.p_next.allFinite()) {
      trace.termination = Termination::NumericalFailure;
      break;
    }
    x = rec.x_next;
    w = rec.w_next;
    p = rec.p_next;
    const bool done = config.residual_tol > 0.0 && rec.constraint_residual <= config.residual_tol;
    trace.records.push_back(std::move(rec));
    if (done) {
      trace.termination = Termination::Converged;
      break;
    }
  }
  trace.x_final = x;
  trace.w_final = w;
  trace.p_final = p;
  return trace;
}

DrSplitting::DrSplitting(const SeparableQP& problem)
    : m_(problem.m()), lambda_(problem.lambda), Q_g_(problem.Q_g), q_g_(problem.q_g) {
  problem.validate();
  const Index m = problem.m();
  const Matrix I = Matrix::Identity(m, m);
  // B(u) = Q_g^{-1}(u - q_g); J_{lambda B}(z) solves (Q_g + lambda I) u = Q_g z + lambda q_g.
  b_factor_ = spd_factor(Q_g_ + lambda_ * I, "J_B");
  // A(u) = M Q_f^{-1}(M'u + q_f); J_{lambda A}(z) solves
  // (I + lambda M Q_f^{-1} M') u = z - lambda M Q_f^{-1} q_f.
  const auto f_factor = spd_factor(problem.Q_f, "Q_f");
  const Matrix K = problem.M * f_factor.solve(problem.M.transpose());
  a_factor_ = spd_factor(I + lambda_ * 0.5 * (K + K.transpose()), "J_A");
  a_shift_ = lambda_ * problem.M * f_factor.solve(problem.q_f);
  const double a = problem.alpha();
  const double b = problem.beta();
  contraction_bound_ = std::sqrt(1.0 - lambda_ * a / ((1.0 + lambda_ * b) * (1.0 + lambda_ * b)));
}

Vector DrSplitting::resolvent_b(const Vector& z) const {
  return b_factor_.solve(Q_g_ * z + lambda_ * q_g_);
}

Vector DrSplitting::resolvent_a(const Vector& z) const { return a_factor_.solve(z - a_shift_); }

Vector DrSplitting::apply(const Vector& z) const {
  const Vector jb = resolvent_b(z);
  return resolvent_a(2.0 * jb - z) + (z - jb);
}

MonotoneOperator make_dr_splitting_operator(const SeparableQP& problem) {
  auto dr = std::make_shared<const DrSplitting>(problem);
  const KktPoint kkt = separable_kkt_point(problem);
  const Vector z_star = kkt.p + problem.lambda * kkt.w;
  const double L = dr->contraction_bound();
  const double modulus = std::sqrt(2.0 * L - L * L) / (1.0 - L);
  auto resolvent = [dr](double c, const Vector& z) -> Vector {
    if (c != 1.0) {
      throw UnsupportedParameter("Douglas-Rachford operator supports only c = 1, got " +
                                 std::to_string(c));
    }
    return dr->apply(z);
  };
  return MonotoneOperator(problem.m(), resolvent, {}, z_star, modulus, "douglas_rachford");
}

AdmmInit admm_init_from_z(const SeparableQP& problem, const Vector& z0) {
  require_dim(z0, problem.m(), "z0");
  const DrSplitting dr(problem);
  AdmmInit init;
  init.p0 = dr.resolvent_b(z0);
  init.w0 = (z0 - init.p0) / problem.lambda;
  return init;
}

EquivalenceReport verify_admm_dr_correspondence(const SeparableQP& problem, double gamma,
                                                const Vector& z0, int iters) {
  if (iters < 1) throw InvalidArgument("iters must be >= 1");
  const AdmmInit init = admm_init_from_z(problem, z0);
  AdmmConfig admm_config;
  admm_config.gamma = gamma;
  admm_config.max_iter = iters;
  const AdmmTrace admm = run_generalized_admm(problem, admm_config, init);

  const DrSplitting dr(problem);
  const MonotoneOperator op = make_dr_splitting_operator(problem);
  GppaConfig ppa_config;
  ppa_config.gamma = gamma;
  ppa_config.c_schedule = CSchedule::constant(1.0);
  ppa_config.max_iter = iters;
  ppa_config.residual_tol = 0.0;
  ppa_config.store_vectors = true;
  const IterationTrace ppa = run_exact_gppa(op, ppa_config, z0);

  EquivalenceReport report;
  report.iterations = iters;
  const double lambda = problem.lambda;
  for (std::size_t k = 0; k <= admm.records.size(); ++k) {
    const Vector& p = k < admm.records.size() ? admm.records[k].p : admm.p_final;
    const Vector& w = k < admm.records.size() ? admm.records[k].w : admm.w_final;
    const Vector& z = ppa.records[std::min(k, ppa.records.size() - 1)].z;
    const double dev = (p + lambda * w - z).norm();
    const double res_dev = (p - dr.resolvent_b(z)).norm();
    report.max_deviation = std::max(report.max_deviation, dev);
    report.max_resolvent_deviation = std::max(report.max_resolvent_deviation, res_dev);
    report.deviations.push_back(std::max(dev, res_dev));
  }
  if (admm.termination == Termination::NumericalFailure ||
      ppa.termination == Termination::NumericalFailure) {
    report.max_deviation = std::numeric_limits<double>::infinity();
  }
  return report;
}

namespace {

SequenceRates sequence_rates(const std::vector<Vector>& seq, const Vector& limit,
                             double window_fraction) {
  SequenceRates rates;
  const double floor = distance_floor(limit.norm());
  std::vector<double> dist;
  for (const auto& u : seq) {
    const double d = (u - limit).norm();
    if (!(d > floor)) break;
    dist.push_back(d);
  }
  if (dist.size() < 3) return rates;
  const auto n = dist.size();
  auto take = static_cast<std::size_t>(std::ceil(window_fraction * static_cast<double>(n)));
  take = std::clamp<std::size_t>(take, 2, n);
  const std::size_t k0 = n - take;
  for (std::size_t k = k0 + 1; k < n; ++k) {
    rates.step_ratios.push_back(dist[k] / dist[k - 1]);
    const double root = std::pow(dist[k] / dist[k0], 1.0 / static_cast<double>(k - k0));
    rates.root_ratios.push_back(root);
    rates.root_ratio_max = std::max(rates.root_ratio_max, root);
  }
  return rates;
}

}  // namespace

PrimalDualEstimate extract_primal_dual(const AdmmTrace& trace, const SeparableQP& problem,
                                       double window_fraction) {
  PrimalDualEstimate est;
  est.x = trace.x_final;
  est.w = trace.w_final;
  est.p = trace.p_final;
  if (trace.records.empty()) {
    est.notice = "empty trace";
    return est;
  }
  const KktPoint kkt = separable_kkt_point(problem);

  std::vector<Vector> ps, ws, mxs;
  for (const auto& rec : trace.records) {
    ps.push_back(rec.p);
    ws.push_back(rec.w);
    mxs.push_back(problem.M * rec.x_next);
  }
  ps.push_back(trace.p_final);
  ws.push_back(trace.w_final);
  est.p_rates = sequence_rates(ps, kkt.p, window_fraction);
  est.w_rates = sequence_rates(ws, kkt.w, window_fraction);
  est.mx_rates = sequence_rates(mxs, problem.M * kkt.x, window_fraction);

  Eigen::ColPivHouseholderQR<Matrix> qr(problem.M);
  if (qr.rank() == problem.n()) {
    const Matrix MtM = problem.M.transpose() * problem.M;
    const auto recover = MtM.llt();
    std::vector<Vector> xs;
    for (const auto& mx : mxs) xs.push_back(recover.solve(problem.M.transpose() * mx));
    const Vector x_star = recover.solve(problem.M.transpose() * (problem.M * kkt.x));
    est.x_rates = sequence_rates(xs, x_star, window_fraction);
  } else {
    est.notice = "M does not have full column rank; x-rates skipped";
  }
  return est;
}

}  // namespace gppa
