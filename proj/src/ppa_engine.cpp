#include "gppa/ppa_engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace gppa {

namespace {

std::string join_errors(const std::vector<std::string>& errors) {
  std::ostringstream out;
  for (std::size_t i = 0; i < errors.size(); ++i) {
    if (i) out << "; ";
    out << errors[i];
  }
  return out.str();
}

Vector relax(const Vector& z, const Vector& target, double gamma) {
  if (gamma == 1.0) return target;
  return z - gamma * (z - target);
}

}  // namespace

CSchedule CSchedule::constant(double c) {
  CSchedule s;
  s.kind_ = Kind::Constant;
  s.c0_ = c;
  s.kappa_ = c;
  return s;
}

CSchedule CSchedule::geometric(double c0, double ratio) {
  CSchedule s;
  s.kind_ = Kind::Geometric;
  s.c0_ = c0;
  s.ratio_ = ratio;
  s.kappa_ = c0;
  return s;
}

CSchedule CSchedule::list(std::vector<double> values, std::optional<double> kappa) {
  CSchedule s;
  s.kind_ = Kind::List;
  s.values_ = std::move(values);
  if (kappa) {
    s.kappa_ = *kappa;
  } else if (!s.values_.empty()) {
    s.kappa_ = *std::min_element(s.values_.begin(), s.values_.end());
  } else {
    s.kappa_ = 0.0;
  }
  s.c0_ = s.values_.empty() ? 0.0 : s.values_.front();
  return s;
}

CSchedule CSchedule::with_kappa(double kappa) const {
  CSchedule s = *this;
  s.kappa_ = kappa;
  return s;
}

double CSchedule::at(int k) const {
  switch (kind_) {
    case Kind::Constant:
      return c0_;
    case Kind::Geometric:
      return c0_ * std::pow(ratio_, k);
    case Kind::List:
      if (values_.empty()) return 0.0;
      return values_[std::min<std::size_t>(static_cast<std::size_t>(k), values_.size() - 1)];
  }
  return c0_;
}

std::vector<std::string> CSchedule::validation_errors() const {
  std::vector<std::string> errors;
  if (!(kappa_ > 0.0) || !std::isfinite(kappa_)) {
    errors.push_back("c schedule lower bound kappa must be > 0, got " + std::to_string(kappa_));
  }
  switch (kind_) {
    case Kind::Constant:
      if (!(c0_ > 0.0) || !std::isfinite(c0_)) {
        errors.push_back("c must be > 0, got " + std::to_string(c0_));
      }
      break;
    case Kind::Geometric:
      if (!(c0_ > 0.0) || !std::isfinite(c0_)) {
        errors.push_back("c0 must be > 0, got " + std::to_string(c0_));
      }
      if (!(ratio_ >= 1.0) || !std::isfinite(ratio_)) {
        errors.push_back("geometric c ratio must be >= 1, got " + std::to_string(ratio_));
      }
      break;
    case Kind::List:
      if (values_.empty()) errors.emplace_back("c list must be nonempty");
      for (std::size_t i = 0; i < values_.size(); ++i) {
        if (!(values_[i] > 0.0) || !std::isfinite(values_[i])) {
          errors.push_back("c list entry " + std::to_string(i) + " must be > 0, got " +
                           std::to_string(values_[i]));
        }
      }
      break;
  }
  if (errors.empty() && at(0) < kappa_) {
    errors.push_back("c schedule drops below its lower bound kappa = " + std::to_string(kappa_));
  }
  if (errors.empty() && kind_ == Kind::List) {
    for (double v : values_) {
      if (v < kappa_) {
        errors.push_back("c list entry " + std::to_string(v) + " is below kappa = " +
                         std::to_string(kappa_));
        break;
      }
    }
  }
  return errors;
}

void CSchedule::validate() const {
  auto errors = validation_errors();
  if (!errors.empty()) throw InvalidArgument(join_errors(errors));
}

double DeltaSchedule::at(int k) const { return delta0 * std::pow(rate, k); }

std::vector<std::string> DeltaSchedule::validation_errors() const {
  std::vector<std::string> errors;
  if (!(delta0 >= 0.0) || !std::isfinite(delta0)) {
    errors.push_back("delta0 must be >= 0, got " + std::to_string(delta0));
  }
  if (!(rate > 0.0 && rate < 1.0)) {
    errors.push_back("delta rate must lie in the open interval (0,1), got " + std::to_string(rate));
  }
  return errors;
}

std::vector<std::string> GppaConfig::validation_errors() const {
  std::vector<std::string> errors;
  if (!(gamma > 0.0 && gamma < 2.0)) {
    errors.push_back("gamma must lie in the open interval (0,2), got " + std::to_string(gamma));
  }
  auto c_errors = c_schedule.validation_errors();
  errors.insert(errors.end(), c_errors.begin(), c_errors.end());
  if (delta_schedule) {
    auto d_errors = delta_schedule->validation_errors();
    errors.insert(errors.end(), d_errors.begin(), d_errors.end());
  }
  if (max_iter < 1) errors.push_back("max_iter must be >= 1, got " + std::to_string(max_iter));
  if (!(residual_tol >= 0.0) || !std::isfinite(residual_tol)) {
    errors.push_back("residual_tol must be >= 0, got " + std::to_string(residual_tol));
  }
  return errors;
}

void GppaConfig::validate() const {
  auto errors = validation_errors();
  if (!errors.empty()) throw InvalidArgument(join_errors(errors));
}

std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::Converged:
      return "converged";
    case Termination::MaxIter:
      return "max_iter";
    case Termination::NumericalFailure:
      return "numerical_failure";
  }
  return "unknown";
}

ExactStep step_exact(const MonotoneOperator& op, double c_k, double gamma, const Vector& z) {
  ExactStep step;
  step.z_tilde = op.resolvent(c_k, z);
  step.z_next = relax(z, step.z_tilde, gamma);
  require_finite(step.z_next, "exact step");
  return step;
}

namespace {

InexactStep inexact_from_resolvent(double gamma, double delta_k, const Vector& z,
                                   const Vector& z_tilde, std::mt19937_64& rng) {
  constexpr double kEta = 0.9;
  InexactStep step;
  step.z_tilde = z_tilde;
  const double gd = gamma * delta_k;
  const double s = kEta * gd * (z - z_tilde).norm() / (1.0 + gd);
  step.z_bar = z_tilde;
  if (s > 0.0) step.z_bar += s * sample_direction(rng, z.size());
  step.z_next = relax(z, step.z_bar, gamma);
  require_finite(step.z_next, "inexact step");

  const double err = (step.z_bar - step.z_tilde).norm();
  const double bound = delta_k * (z - step.z_next).norm();
  if (err > bound) {
    std::ostringstream msg;
    msg << "inexactness criterion violated: |z_bar - z_tilde| = " << err << " > " << bound;
    throw NumericalError(msg.str());
  }
  return step;
}

}  // namespace

InexactStep step_inexact(const MonotoneOperator& op, double c_k, double gamma, double delta_k,
                         const Vector& z, std::mt19937_64& rng) {
  if (!(delta_k >= 0.0)) throw InvalidArgument("delta_k must be >= 0");
  return inexact_from_resolvent(gamma, delta_k, z, op.resolvent(c_k, z), rng);
}

bool residual_stop(const IterationRecord& record, double tol, double kappa) {
  return record.residual / std::max(record.c_k, kappa) <= tol * (1.0 + record.z_norm);
}

namespace {

IterationTrace run_gppa(const MonotoneOperator& op, const GppaConfig& config, const Vector& z0,
                        bool inexact) {
  config.validate();
  require_dim(z0, op.dim(), "initial point");
  require_finite(z0, "initial point");

  IterationTrace trace;
  trace.config = config;
  const bool store = config.store_vectors.value_or(op.dim() <= 64);
  const double kappa = config.c_schedule.kappa();
  const auto& z_star = op.known_zero();
  const double floor = z_star ? distance_floor(z_star->norm()) : 0.0;
  std::mt19937_64 rng(config.seed);

  Vector z = z0;
  for (int k = 0;; ++k) {
    IterationRecord rec;
    rec.k = k;
    rec.c_k = config.c_schedule.at(k);
    if (inexact) rec.delta_k = config.delta_schedule->at(k);
    rec.z_norm = z.norm();
    if (z_star) rec.dist_to_zero = (z - *z_star).norm();
    if (store) rec.z = z;

    try {
      const Vector z_tilde = op.resolvent(rec.c_k, z);
      rec.residual = (z - z_tilde).norm();
      if (store) rec.z_tilde = z_tilde;

      if (residual_stop(rec, config.residual_tol, kappa)) {
        trace.termination = Termination::Converged;
        trace.records.push_back(std::move(rec));
        break;
      }
      if (k == config.max_iter) {
        trace.termination = Termination::MaxIter;
        trace.records.push_back(std::move(rec));
        break;
      }

      Vector z_next;
      if (inexact) {
        InexactStep step = inexact_from_resolvent(config.gamma, *rec.delta_k, z, z_tilde, rng);
        rec.inexact_error = (step.z_bar - step.z_tilde).norm();
        if (store) rec.z_bar = step.z_bar;
        z_next = std::move(step.z_next);
      } else {
        z_next = relax(z, z_tilde, config.gamma);
        require_finite(z_next, "exact step");
      }
      rec.step_length = (z - z_next).norm();
      if (z_star && *rec.dist_to_zero > floor) {
        rec.step_ratio = (z_next - *z_star).norm() / *rec.dist_to_zero;
      }
      trace.records.push_back(std::move(rec));
      z = std::move(z_next);
    } catch (const NumericalError& e) {
      trace.termination = Termination::NumericalFailure;
      trace.failure_message = e.what();
      trace.records.push_back(std::move(rec));
      break;
    }
  }
  trace.final_z = z;
  return trace;
}

}  // namespace

IterationTrace run_exact_gppa(const MonotoneOperator& op, const GppaConfig& config,
                              const Vector& z0) {
  if (config.delta_schedule) {
    throw InvalidArgument("run_exact_gppa: config carries a delta schedule; use run_inexact_gppa");
  }
  return run_gppa(op, config, z0, false);
}

IterationTrace run_inexact_gppa(const MonotoneOperator& op, const GppaConfig& config,
                                const Vector& z0) {
  if (!config.delta_schedule) {
    throw InvalidArgument("run_inexact_gppa: config needs a delta schedule");
  }
  return run_gppa(op, config, z0, true);
}

}  // namespace gppa
