#pragma once

#include "gppa/operators.hpp"

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace gppa {

/// Proximal parameters {c_k}. Every schedule carries a declared lower bound
/// kappa > 0 and all generated values must stay above it.
class CSchedule {
 public:
  enum class Kind { Constant, Geometric, List };

  static CSchedule constant(double c);
  /// c_k = c0 * ratio^k with ratio >= 1.
  static CSchedule geometric(double c0, double ratio);
  /// Explicit values; indices past the end repeat the last value.
  /// kappa defaults to the smallest listed value.
  static CSchedule list(std::vector<double> values, std::optional<double> kappa = std::nullopt);

  Kind kind() const { return kind_; }
  double kappa() const { return kappa_; }
  double c0() const { return c0_; }
  double ratio() const { return ratio_; }
  const std::vector<double>& values() const { return values_; }

  double at(int k) const;
  /// Returns a copy with a different declared lower bound.
  CSchedule with_kappa(double kappa) const;

  std::vector<std::string> validation_errors() const;
  void validate() const;

 private:
  Kind kind_ = Kind::Constant;
  double c0_ = 1.0;
  double ratio_ = 1.0;
  std::vector<double> values_;
  double kappa_ = 1.0;
};

/// Summable relative-error tolerances delta_k = delta0 * rate^k.
struct DeltaSchedule {
  double delta0 = 0.0;
  double rate = 0.5;

  double at(int k) const;
  double sum() const { return delta0 / (1.0 - rate); }
  std::vector<std::string> validation_errors() const;
};

struct GppaConfig {
  double gamma = 1.0;
  CSchedule c_schedule = CSchedule::constant(1.0);
  /// Absent means the exact scheme.
  std::optional<DeltaSchedule> delta_schedule;
  int max_iter = 100;
  /// 0 disables early stopping except at an exact fixed point.
  double residual_tol = 1e-10;
  std::uint64_t seed = 0;
  /// Store full vectors in the trace; by default only for dim <= 64.
  std::optional<bool> store_vectors;

  std::vector<std::string> validation_errors() const;
  void validate() const;
};

struct IterationRecord {
  int k = 0;
  Vector z;        ///< z^k (empty when vectors are not stored)
  Vector z_tilde;  ///< J_{c_k T}(z^k)
  std::optional<Vector> z_bar;
  double c_k = 0.0;
  std::optional<double> delta_k;
  double residual = 0.0;  ///< |z^k - z_tilde^k|
  double z_norm = 0.0;
  std::optional<double> dist_to_zero;
  std::optional<double> step_ratio;  ///< |z^{k+1} - z*| / |z^k - z*|
  /// |z^k - z^{k+1}|, absent on the final record where no step is taken.
  std::optional<double> step_length;
  /// |z_bar^k - z_tilde^k| on inexact steps.
  std::optional<double> inexact_error;
};

enum class Termination { Converged, MaxIter, NumericalFailure };

std::string_view to_string(Termination t);

/// Records are indexed by k. Each record except the last describes the step
/// from z^k to z^{k+1}; the last record holds the final iterate.
struct IterationTrace {
  std::vector<IterationRecord> records;
  Termination termination = Termination::MaxIter;
  GppaConfig config;
  Vector final_z;
  std::string failure_message;

  int steps() const { return records.empty() ? 0 : static_cast<int>(records.size()) - 1; }
};

struct ExactStep {
  Vector z_next;
  Vector z_tilde;
};

/// z^{k+1} = z^k - gamma (z^k - J_{c_k T}(z^k)). With gamma == 1 the classical
/// step z^{k+1} = J_{c_k T}(z^k) is returned exactly.
ExactStep step_exact(const MonotoneOperator& op, double c_k, double gamma, const Vector& z);

struct InexactStep {
  Vector z_next;
  Vector z_tilde;
  Vector z_bar;
};

/// Relaxed step with an inexact resolvent z_bar satisfying
/// |z_bar - J_{c_k T}(z^k)| <= delta_k |z^k - z^{k+1}|.
/// The error is a seeded random direction of magnitude
/// 0.9 * gamma delta_k |z - z_tilde| / (1 + gamma delta_k).
InexactStep step_inexact(const MonotoneOperator& op, double c_k, double gamma, double delta_k,
                         const Vector& z, std::mt19937_64& rng);

IterationTrace run_exact_gppa(const MonotoneOperator& op, const GppaConfig& config, const Vector& z0);
IterationTrace run_inexact_gppa(const MonotoneOperator& op, const GppaConfig& config,
                                const Vector& z0);

/// Outcome of running two independent code paths that should produce the
/// same iterates.
struct EquivalenceReport {
  int iterations = 0;
  double max_deviation = 0.0;            ///< iterate sequences
  double max_resolvent_deviation = 0.0;  ///< p_tilde vs resolvent, or p vs J_B(z)
  std::vector<double> deviations;        ///< per-iteration max of the two
  double tolerance = 1e-9;
  bool passed() const {
    return max_deviation <= tolerance && max_resolvent_deviation <= tolerance;
  }
};

/// |z^k - z_tilde^k| / max(c_k, kappa) <= tol (1 + |z^k|)
bool residual_stop(const IterationRecord& record, double tol, double kappa);

}  // namespace gppa
