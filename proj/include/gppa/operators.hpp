#pragma once

#include "gppa/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

namespace gppa {

/// A maximal monotone operator T on R^dim, described by what the proximal
/// point machinery can evaluate: the resolvent J_{cT} = (I + cT)^{-1}, and
/// optionally T itself, a known zero z* and the modulus a with which T^{-1}
/// is Lipschitz continuous at 0.
///
/// Handles are immutable once built and can be shared between threads.
class MonotoneOperator {
 public:
  using ResolventFn = std::function<Vector(double c, const Vector& z)>;
  using ForwardFn = std::function<Vector(const Vector& z)>;

  MonotoneOperator(Index dim, ResolventFn resolvent, ForwardFn forward = {},
                   std::optional<Vector> known_zero = std::nullopt,
                   std::optional<double> inverse_lipschitz_modulus = std::nullopt,
                   std::string name = "operator");

  Index dim() const { return dim_; }
  const std::string& name() const { return name_; }

  /// J_{cT}(z). Requires c > 0 and dim(z) == dim().
  Vector resolvent(double c, const Vector& z) const;

  bool has_forward() const { return static_cast<bool>(forward_); }
  /// T(z); throws UnsupportedParameter when the operator has no forward map.
  Vector forward(const Vector& z) const;

  const std::optional<Vector>& known_zero() const { return known_zero_; }
  std::optional<double> inverse_lipschitz_modulus() const { return modulus_; }

 private:
  Index dim_;
  ResolventFn resolvent_;
  ForwardFn forward_;
  std::optional<Vector> known_zero_;
  std::optional<double> modulus_;
  std::string name_;
};

/// T(x1, x2) = (x2, -x1) / a. Skew, hence monotone but not strongly monotone,
/// yet T^{-1} is Lipschitz at 0 with modulus a.
struct RotationOperatorSpec {
  double a = 1.0;
};

/// z -> G z + h with G + G^T positive semidefinite.
struct AffineOperatorSpec {
  Matrix G;
  Vector h;
  /// Overrides the default modulus 1 / sigma_min(G).
  std::optional<double> inverse_lipschitz_modulus;
  std::string name = "affine";
};

MonotoneOperator make_rotation_operator(const RotationOperatorSpec& spec);
MonotoneOperator make_affine_operator(const AffineOperatorSpec& spec);

/// Free-function spelling of MonotoneOperator::resolvent.
inline Vector resolvent(const MonotoneOperator& op, double c, const Vector& z) {
  return op.resolvent(c, z);
}

struct Representation {
  Vector x;  ///< J_{cT}(z)
  Vector y;  ///< (z - x) / c, an element of T(x)
};

/// Splits z as z = x + c*y with y in T(x). When the forward map is available
/// the membership is checked numerically and NumericalError is raised if it fails.
Representation representation_decompose(const MonotoneOperator& op, double c, const Vector& z);

struct PropertyReport {
  std::uint64_t seed = 0;
  int samples = 0;
  /// min over pairs of <Jz - Jz', (I-J)z - (I-J)z'>
  double worst_inner_margin = 0.0;
  /// min over pairs of |z-z'|^2 - |Jz-Jz'|^2 - |(I-J)z-(I-J)z'|^2
  double worst_energy_margin = 0.0;
  /// min over pairs of |z-z'| - |Jz-Jz'|
  double worst_nonexpansive_margin = 0.0;
  int violations = 0;
  bool passed() const { return violations == 0; }
};

struct FirmnessMargins {
  double inner = 0.0;         ///< <Jz - Jz', (I-J)z - (I-J)z'>
  double energy = 0.0;        ///< |z-z'|^2 - |Jz-Jz'|^2 - |(I-J)z-(I-J)z'|^2
  double nonexpansive = 0.0;  ///< |z-z'| - |Jz-Jz'|
};

FirmnessMargins firm_nonexpansive_margins(const MonotoneOperator& op, double c, const Vector& z,
                                          const Vector& z_prime);

/// Samples pairs from the ball of radius 10 around the origin and checks the
/// firm nonexpansiveness inequalities of J_{cT} with slack 1e-10.
PropertyReport check_firm_nonexpansive(const MonotoneOperator& op, double c, int sample_count,
                                       std::uint64_t seed);

struct RepresentationReport {
  std::uint64_t seed = 0;
  int samples = 0;
  double max_reconstruction_error = 0.0;  ///< relative, |z - (x + c y)| / (1 + |z|)
  double max_forward_error = 0.0;         ///< |y - T(x)| / (1 + |y|), 0 without forward map
  int violations = 0;
  bool passed() const { return violations == 0; }
};

RepresentationReport check_representation_identity(const MonotoneOperator& op, double c,
                                                   int sample_count, std::uint64_t seed);

/// Uniform sample from the ball of the given radius around center.
template <class Rng>
Vector sample_ball(Rng& rng, const Vector& center, double radius);

}  // namespace gppa

#include "gppa/detail/sampling.hpp"
