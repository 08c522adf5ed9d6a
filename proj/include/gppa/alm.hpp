#pragma once

#include "gppa/ppa_engine.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gppa {

/// min 1/2 x'Qx + q'x  s.t.  Ax = b, with Q positive definite and A of full row rank.
struct LinearlyConstrainedQP {
  Matrix Q;
  Vector q;
  Matrix A;
  Vector b;

  Index n() const { return Q.rows(); }
  Index m() const { return A.rows(); }

  /// Shape, finiteness, Q > 0 and full row rank of A.
  std::vector<std::string> validation_errors() const;
  void validate() const;

  double lipschitz_gradient() const;  ///< lambda_max(Q)
  double min_eig_AAt() const;         ///< lambda_min(A A')
};

/// Seeded random instance: Q = B'B + I, A Gaussian (full row rank almost surely).
LinearlyConstrainedQP random_linearly_constrained_qp(Index n, Index m, std::uint64_t seed);

/// argmin_x { f(x) - <p, Ax> + c/2 |Ax - b|^2 }
Vector alm_x_subproblem(const LinearlyConstrainedQP& problem, const Vector& p, double c);

struct AlmRecord {
  int k = 0;
  Vector x_next;   ///< x^{k+1}
  Vector p;        ///< p^k
  Vector p_tilde;  ///< p^k - c_k (A x^{k+1} - b)
  Vector p_next;   ///< p^{k+1}
  double c_k = 0.0;
  double primal_residual = 0.0;  ///< |A x^{k+1} - b|
  std::optional<double> dual_distance;  ///< |p^k - p*|
  double kkt = 0.0;                     ///< kkt_residual(x^{k+1}, p^{k+1})
};

struct AlmConfig {
  double gamma = 1.0;
  CSchedule c_schedule = CSchedule::constant(1.0);
  int max_iter = 200;
  /// Stop once the primal residual falls to this value; 0 runs max_iter steps.
  double primal_tol = 0.0;
};

struct AlmTrace {
  std::vector<AlmRecord> records;
  Termination termination = Termination::MaxIter;
  Vector x_final;
  Vector p_final;
};

/// x^{k+1} = argmin_x { f(x) - <p^k, Ax> + c_k/2 |Ax - b|^2 },
/// p^{k+1} = p^k - gamma c_k (A x^{k+1} - b).
AlmTrace run_generalized_alm(const LinearlyConstrainedQP& problem, const AlmConfig& config,
                             const Vector& p0);

/// Dual optimum p* solving A Q^{-1} A' p = b + A Q^{-1} q.
Vector alm_dual_optimum(const LinearlyConstrainedQP& problem);
/// Primal optimum x* = Q^{-1}(A' p* - q).
Vector alm_primal_optimum(const LinearlyConstrainedQP& problem);

/// S_A(p) = A Q^{-1}(A'p - q) - b as an affine monotone operator, with the
/// dual optimum as known zero and modulus a = lambda_max(Q) / lambda_min(AA').
MonotoneOperator make_dual_alm_operator(const LinearlyConstrainedQP& problem);

struct DualModulusReport {
  double measured = 0.0;  ///< smallest eigenvalue of the symmetric part of A Q^{-1} A'
  double bound = 0.0;     ///< lambda_min(AA') / lambda_max(Q)
  bool holds() const { return measured >= bound - 1e-10; }
};

DualModulusReport dual_strong_monotonicity(const LinearlyConstrainedQP& problem);

/// Runs the generalized ALM and, separately, the exact generalized PPA on
/// S_A from the same p0 and compares p^k and p_tilde^k = J_{c_k S_A}(p^k).
EquivalenceReport verify_alm_ppa_equivalence(const LinearlyConstrainedQP& problem, double gamma,
                                             const CSchedule& c_schedule, const Vector& p0,
                                             int iters);

/// max(|Qx + q - A'p|_inf, |Ax - b|_inf)
double kkt_residual(const LinearlyConstrainedQP& problem, const Vector& x, const Vector& p);

}  // namespace gppa
