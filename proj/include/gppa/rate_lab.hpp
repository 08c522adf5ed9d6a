#pragma once

#include "gppa/ppa_engine.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace gppa {

/// Guaranteed squared contraction factor of the exact scheme:
/// rho = 1 - min(gamma, 2 gamma - gamma^2) c^2 / (a^2 + c^2).
double theoretical_exact_rate(double gamma, double c, double a);

/// (sqrt(rho) + gamma delta) / (1 - gamma delta). Valid as a per-step
/// bound whenever gamma delta < 1, even when it exceeds 1.
/// Throws InvalidArgument when gamma * delta >= 1.
double inexact_factor_bound(double gamma, double c, double a, double delta);

/// The inexact factor theta_k, or nullopt when it is not contractive
/// (theta_k >= 1, or gamma * delta_k >= 1).
std::optional<double> theoretical_inexact_factor(double gamma, double c, double a, double delta_k);

enum class RateComparison { Equality, Bound };

struct RateReport {
  /// Per-step factor on distances (not squared), e.g. sqrt(rho) or theta_k.
  std::optional<double> theoretical_factor;
  double empirical_tail_ratio_max = 0.0;
  double empirical_geometric_mean = 0.0;
  /// |max - theory| and |mean - theory| both within tolerance.
  bool tight = false;
  /// max <= theory + tolerance
  bool within_bound = false;
  double tolerance = 1e-6;
  RateComparison mode = RateComparison::Bound;
  /// Record indices [first, last) whose step ratios form the window.
  std::pair<int, int> window{0, 0};
  std::vector<double> ratios;  ///< ratios inside the window

  bool passed() const { return mode == RateComparison::Equality ? tight : within_bound; }
};

/// Distance ratios |z^{k+1} - z*| / |z^k - z*| over the tail of the trace.
/// Ratios are usable while both distances exceed the floating-point floor.
/// Needs at least 10 usable ratios; throws InsufficientData otherwise.
RateReport estimate_empirical_rate(const IterationTrace& trace, const Vector& z_star,
                                   double window_fraction = 0.5,
                                   std::optional<double> theoretical_factor = std::nullopt,
                                   RateComparison mode = RateComparison::Bound,
                                   double tolerance = 1e-6);

/// Same estimate from a plain distance sequence d_0, d_1, ...; ratios are used
/// while both distances exceed `floor`.
RateReport estimate_rate_from_distances(const std::vector<double>& distances, double floor,
                                        double window_fraction = 0.5,
                                        std::optional<double> theoretical_factor = std::nullopt,
                                        RateComparison mode = RateComparison::Bound,
                                        double tolerance = 1e-6);

/// Usable per-step distance ratios of a trace, keyed by record index.
std::vector<std::pair<int, double>> usable_step_ratios(const IterationTrace& trace,
                                                       const Vector& z_star);

struct RotationTightnessReport {
  double rho = 0.0;
  std::vector<double> squared_ratios;
  double max_abs_deviation = 0.0;  ///< max |ratio^2 - rho|
  double max_excess = 0.0;         ///< max (ratio^2 - rho)
  int violations = 0;
  bool passed = false;
  RateReport rate;
};

/// Exact scheme on the rotation operator with constant c. For gamma == 1 every
/// squared step ratio must equal rho within 1e-12; otherwise it must not
/// exceed rho + 1e-10.
RotationTightnessReport tightness_check_rotation(double a, double c, double gamma, const Vector& z0,
                                                 int iters);

struct LipschitzEstimate {
  double L_hat = 0.0;
  double radius = 0.0;
  int samples = 0;
  std::uint64_t seed = 0;
  std::optional<double> bound;  ///< a / sqrt(a^2 + c^2) when the modulus is declared
  bool within_bound = true;
};

/// max over z in B(z*, radius) of |J_{cT}(z) - z*| / |z - z*|.
LipschitzEstimate estimate_resolvent_lipschitz(const MonotoneOperator& op, double c,
                                               const Vector& z_star, double radius, int samples,
                                               std::uint64_t seed);

struct ProbeReport {
  double a = 0.0;
  double gamma = 0.0;
  double c0 = 0.0;
  double growth = 0.0;
  std::vector<double> c_values;
  std::vector<double> ratios;  ///< |z^{k+1}| / |z^k|
  double final_ratio = 0.0;
  bool monotone_decreasing = false;
  /// Limit of the ratio as c_k grows: |1 - gamma|.
  double limit_ratio = 0.0;
};

/// Exact scheme on the rotation operator with c_k = c0 * growth^k.
ProbeReport superlinear_probe(double a, double gamma, double c0, double growth, int iters,
                              const Vector& z0);

struct InexactRateCheck {
  double a = 0.0;
  int checked = 0;
  int violations = 0;
  /// First record index from which every usable ratio stays below theta_k
  /// with theta_k < 1. Not claimed to be the earliest such index in theory.
  std::optional<int> first_contractive_index;
  double max_excess = 0.0;  ///< max over checked steps of ratio - bound
};

/// Checks ratio_k <= (sqrt(rho_k) + gamma delta_k) / (1 - gamma delta_k) on every
/// usable step of an inexact trace where gamma delta_k < 1 - sqrt(rho_k) (1 + margin).
InexactRateCheck check_inexact_rate(const IterationTrace& trace, const Vector& z_star, double a,
                                    double margin = 1e-3);

}  // namespace gppa
