#include "gppa/operators.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace gppa {

MonotoneOperator::MonotoneOperator(Index dim, ResolventFn resolvent, ForwardFn forward,
                                   std::optional<Vector> known_zero,
                                   std::optional<double> inverse_lipschitz_modulus, std::string name)
    : dim_(dim),
      resolvent_(std::move(resolvent)),
      forward_(std::move(forward)),
      known_zero_(std::move(known_zero)),
      modulus_(inverse_lipschitz_modulus),
      name_(std::move(name)) {
  if (dim_ <= 0) throw InvalidArgument("operator dimension must be positive");
  if (!resolvent_) throw InvalidArgument("operator needs a resolvent");
  if (known_zero_) {
    require_dim(*known_zero_, dim_, "known zero");
    require_finite(*known_zero_, "known zero");
  }
  if (modulus_ && !(*modulus_ > 0.0 && std::isfinite(*modulus_))) {
    throw InvalidArgument("inverse Lipschitz modulus must be positive and finite");
  }
}

Vector MonotoneOperator::resolvent(double c, const Vector& z) const {
  if (!(c > 0.0) || !std::isfinite(c)) {
    throw InvalidArgument("resolvent parameter c must be positive, got " + std::to_string(c));
  }
  require_dim(z, dim_, "resolvent input");
  require_finite(z, "resolvent input");
  Vector out = resolvent_(c, z);
  require_finite(out, name_ + " resolvent output");
  return out;
}

Vector MonotoneOperator::forward(const Vector& z) const {
  if (!forward_) throw UnsupportedParameter(name_ + " has no forward map");
  require_dim(z, dim_, "forward input");
  return forward_(z);
}

MonotoneOperator make_rotation_operator(const RotationOperatorSpec& spec) {
  const double a = spec.a;
  if (!(a > 0.0) || !std::isfinite(a)) {
    throw InvalidArgument("rotation operator needs a > 0, got " + std::to_string(a));
  }
  // (I + cT) = [[1, s], [-s, 1]] with s = c / a.
  auto resolvent = [a](double c, const Vector& z) {
    const double s = c / a;
    const double det = 1.0 + s * s;
    Vector out(2);
    out(0) = (z(0) - s * z(1)) / det;
    out(1) = (s * z(0) + z(1)) / det;
    return out;
  };
  auto forward = [a](const Vector& z) {
    Vector out(2);
    out(0) = z(1) / a;
    out(1) = -z(0) / a;
    return out;
  };
  return MonotoneOperator(2, resolvent, forward, Vector::Zero(2), a, "rotation");
}

MonotoneOperator make_affine_operator(const AffineOperatorSpec& spec) {
  const Index n = spec.G.rows();
  if (n == 0 || spec.G.cols() != n) throw DimensionMismatch("affine operator: G must be square");
  require_dim(spec.h, n, "affine operator offset h");
  if (!spec.G.allFinite() || !spec.h.allFinite()) {
    throw InvalidArgument("affine operator: non-finite data");
  }

  const Matrix sym = 0.5 * (spec.G + spec.G.transpose());
  const double lambda_min = Eigen::SelfAdjointEigenSolver<Matrix>(sym, Eigen::EigenvaluesOnly)
                                .eigenvalues()
                                .minCoeff();
  if (lambda_min < -1e-10) {
    std::ostringstream msg;
    msg << "affine operator is not monotone: smallest eigenvalue of the symmetric part is "
        << lambda_min;
    throw InvalidArgument(msg.str());
  }

  std::optional<Vector> zero;
  std::optional<double> modulus = spec.inverse_lipschitz_modulus;
  Eigen::FullPivLU<Matrix> lu(spec.G);
  if (lu.isInvertible()) {
    zero = lu.solve(-spec.h);
    if (!modulus) {
      const auto sv = Eigen::JacobiSVD<Matrix>(spec.G).singularValues();
      modulus = 1.0 / sv(sv.size() - 1);
    }
  }

  const Matrix G = spec.G;
  const Vector h = spec.h;
  auto resolvent = [G, h](double c, const Vector& z) {
    const Index dim = G.rows();
    const Matrix system = Matrix::Identity(dim, dim) + c * G;
    Eigen::PartialPivLU<Matrix> factor(system);
    Vector x = factor.solve(z - c * h);
    if (!x.allFinite()) throw NumericalError("affine resolvent: linear solve failed");
    return x;
  };
  auto forward = [G, h](const Vector& z) -> Vector { return G * z + h; };
  return MonotoneOperator(n, resolvent, forward, zero, modulus, spec.name);
}

Representation representation_decompose(const MonotoneOperator& op, double c, const Vector& z) {
  Representation rep;
  rep.x = op.resolvent(c, z);
  rep.y = (z - rep.x) / c;
  if (op.has_forward()) {
    const double err = (rep.y - op.forward(rep.x)).norm();
    if (err > 1e-9 * (1.0 + rep.y.norm())) {
      throw NumericalError("representation check failed: |y - T(x)| = " + std::to_string(err));
    }
  }
  return rep;
}

FirmnessMargins firm_nonexpansive_margins(const MonotoneOperator& op, double c, const Vector& z,
                                          const Vector& z_prime) {
  const Vector jz = op.resolvent(c, z);
  const Vector jzp = op.resolvent(c, z_prime);
  const Vector dj = jz - jzp;
  const Vector dr = (z - jz) - (z_prime - jzp);
  FirmnessMargins m;
  m.inner = dj.dot(dr);
  m.energy = (z - z_prime).squaredNorm() - dj.squaredNorm() - dr.squaredNorm();
  m.nonexpansive = (z - z_prime).norm() - dj.norm();
  return m;
}

PropertyReport check_firm_nonexpansive(const MonotoneOperator& op, double c, int sample_count,
                                       std::uint64_t seed) {
  if (sample_count < 1) throw InvalidArgument("sample_count must be at least 1");
  constexpr double kSlack = 1e-10;
  PropertyReport report;
  report.seed = seed;
  report.samples = sample_count;
  report.worst_inner_margin = std::numeric_limits<double>::infinity();
  report.worst_energy_margin = std::numeric_limits<double>::infinity();
  report.worst_nonexpansive_margin = std::numeric_limits<double>::infinity();

  std::mt19937_64 rng(seed);
  const Vector origin = Vector::Zero(op.dim());
  for (int i = 0; i < sample_count; ++i) {
    const Vector z = sample_ball(rng, origin, 10.0);
    const Vector zp = sample_ball(rng, origin, 10.0);
    const auto m = firm_nonexpansive_margins(op, c, z, zp);
    const double inner = m.inner;
    const double energy = m.energy;
    const double nonexp = m.nonexpansive;
    report.worst_inner_margin = std::min(report.worst_inner_margin, inner);
    report.worst_energy_margin = std::min(report.worst_energy_margin, energy);
    report.worst_nonexpansive_margin = std::min(report.worst_nonexpansive_margin, nonexp);
    if (inner < -kSlack || energy < -kSlack || nonexp < -kSlack) ++report.violations;
  }
  return report;
}

RepresentationReport check_representation_identity(const MonotoneOperator& op, double c,
                                                   int sample_count, std::uint64_t seed) {
  if (sample_count < 1) throw InvalidArgument("sample_count must be at least 1");
  RepresentationReport report;
  report.seed = seed;
  report.samples = sample_count;
  std::mt19937_64 rng(seed);
  const Vector origin = Vector::Zero(op.dim());
  for (int i = 0; i < sample_count; ++i) {
    const Vector z = sample_ball(rng, origin, 10.0);
    const Vector x = op.resolvent(c, z);
    const Vector y = (z - x) / c;
    const double recon = (z - (x + c * y)).norm() / (1.0 + z.norm());
    double fwd = 0.0;
    if (op.has_forward()) fwd = (y - op.forward(x)).norm() / (1.0 + y.norm());
    report.max_reconstruction_error = std::max(report.max_reconstruction_error, recon);
    report.max_forward_error = std::max(report.max_forward_error, fwd);
    if (recon > 1e-12 || fwd > 1e-9) ++report.violations;
  }
  return report;
}

}  // namespace gppa
