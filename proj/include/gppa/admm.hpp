#pragma once

#include "gppa/ppa_engine.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gppa {

/// min f(x) + g(w) s.t. Mx = w with
///   f(x) = 1/2 x'Q_f x + q_f'x,  g(w) = 1/2 w'Q_g w + q_g'w,
/// both Q_f and Q_g positive definite, and penalty lambda > 0.
struct SeparableQP {
  Matrix Q_f;
  Vector q_f;
  Matrix Q_g;
  Vector q_g;
  Matrix M;
  double lambda = 1.0;

  Index n() const { return Q_f.rows(); }
  Index m() const { return Q_g.rows(); }

  std::vector<std::string> validation_errors() const;
  void validate() const;

  /// Strong monotonicity modulus of B = grad g*: 1 / lambda_max(Q_g).
  double alpha() const;
  /// Lipschitz constant of B = grad g*: 1 / lambda_min(Q_g).
  double beta() const;
};

SeparableQP random_separable_qp(Index n, Index m, double lambda, std::uint64_t seed);

struct KktPoint {
  Vector x;
  Vector w;
  Vector p;
};

/// Dense solve of Q_f x + q_f + M'p = 0, Q_g w + q_g - p = 0, Mx = w.
KktPoint separable_kkt_point(const SeparableQP& problem);

struct AdmmRecord {
  int k = 0;
  Vector x_next;  ///< x^{k+1}
  Vector w;       ///< w^k
  Vector w_next;  ///< w^{k+1}
  Vector p;       ///< p^k
  Vector p_next;  ///< p^{k+1}
  Vector z;       ///< p^k + lambda w^k
  double constraint_residual = 0.0;  ///< |M x^{k+1} - w^{k+1}|
  double w_step_optimality = 0.0;    ///< first-order residual of the w-subproblem
};

struct AdmmConfig {
  double gamma = 1.0;
  int max_iter = 300;
  /// Stop once the constraint residual falls to this value; 0 runs max_iter steps.
  double residual_tol = 0.0;
};

struct AdmmTrace {
  std::vector<AdmmRecord> records;
  Termination termination = Termination::MaxIter;
  Vector x_final;
  Vector w_final;
  Vector p_final;
};

struct AdmmInit {
  Vector w0;
  Vector p0;
};

/// x^{k+1} = argmin f(x) + <p^k, Mx> + lambda/2 |Mx - w^k|^2
/// w^{k+1} = argmin g(w) - <p^k, w> + lambda/2 |gamma M x^{k+1} + (1-gamma) w^k - w|^2
/// p^{k+1} = p^k + lambda (gamma M x^{k+1} + (1-gamma) w^k - w^{k+1})
AdmmTrace run_generalized_admm(const SeparableQP& problem, const AdmmConfig& config,
                               const AdmmInit& init);

/// Resolvents of the dual operators A = d[f* o (-M')] and B = grad g*, and the
/// Douglas-Rachford map G = J_{lambda A}(2 J_{lambda B} - I) + (I - J_{lambda B}).
class DrSplitting {
 public:
  explicit DrSplitting(const SeparableQP& problem);

  Index dim() const { return m_; }
  double lambda() const { return lambda_; }
  Vector resolvent_a(const Vector& z) const;
  Vector resolvent_b(const Vector& z) const;
  Vector apply(const Vector& z) const;  ///< G(z)
  /// sqrt(1 - lambda alpha / (1 + lambda beta)^2), the proven Lipschitz bound of G.
  double contraction_bound() const { return contraction_bound_; }

 private:
  Index m_;
  double lambda_;
  Matrix Q_g_;
  Vector q_g_;
  Eigen::LLT<Matrix> b_factor_;  // Q_g + lambda I
  Eigen::LLT<Matrix> a_factor_;  // I + lambda M Q_f^{-1} M'
  Vector a_shift_;               // lambda M Q_f^{-1} q_f
  double contraction_bound_;
};

/// Handle whose resolvent at c = 1 is G (the resolvent of S = G^{-1} - I).
/// Other values of c raise UnsupportedParameter. The known zero is
/// z* = p* + lambda w*; the declared modulus follows from the contraction
/// bound L of G as sqrt(2L - L^2) / (1 - L).
MonotoneOperator make_dr_splitting_operator(const SeparableQP& problem);

/// Builds a start satisfying p0 = J_{lambda B}(z0), w0 = (z0 - p0) / lambda.
AdmmInit admm_init_from_z(const SeparableQP& problem, const Vector& z0);

/// Runs the generalized ADMM and, separately, the relaxed fixed-point iteration
/// z^{k+1} = z^k - gamma (z^k - G(z^k)), checking z^k = p^k + lambda w^k and
/// p^k = J_{lambda B}(z^k) at every k.
EquivalenceReport verify_admm_dr_correspondence(const SeparableQP& problem, double gamma,
                                                const Vector& z0, int iters);

struct SequenceRates {
  /// |u^k - u*| / |u^{k-1} - u*| over the tail window.
  std::vector<double> step_ratios;
  /// (|u^k - u*| / |u^{k0} - u*|)^{1/(k-k0)} over the tail window starting at k0.
  std::vector<double> root_ratios;
  double root_ratio_max = 0.0;
  bool defined() const { return !root_ratios.empty(); }
};

struct PrimalDualEstimate {
  Vector x;
  Vector w;
  Vector p;
  SequenceRates p_rates;
  SequenceRates w_rates;
  SequenceRates mx_rates;
  std::optional<SequenceRates> x_rates;
  std::string notice;
};

/// Final iterates plus R-linear diagnostics measured against the dense KKT
/// solution. x-rates need M of full column rank and are skipped otherwise.
PrimalDualEstimate extract_primal_dual(const AdmmTrace& trace, const SeparableQP& problem,
                                       double window_fraction = 0.5);

}  // namespace gppa
