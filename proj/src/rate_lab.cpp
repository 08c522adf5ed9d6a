#include "gppa/rate_lab.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace gppa {

namespace {

void check_rate_domain(double gamma, double c, double a) {
  if (!(gamma > 0.0 && gamma < 2.0)) {
    throw InvalidArgument("gamma must lie in the open interval (0,2), got " + std::to_string(gamma));
  }
  if (!(c > 0.0)) throw InvalidArgument("c must be > 0, got " + std::to_string(c));
  if (!(a > 0.0)) throw InvalidArgument("a must be > 0, got " + std::to_string(a));
}

double geometric_mean(const std::vector<double>& xs) {
  double log_sum = 0.0;
  for (double x : xs) log_sum += std::log(x);
  return std::exp(log_sum / static_cast<double>(xs.size()));
}

}  // namespace

double theoretical_exact_rate(double gamma, double c, double a) {
  check_rate_domain(gamma, c, a);
  const double weight = std::min(gamma, 2.0 * gamma - gamma * gamma);
  return 1.0 - weight * (c * c) / (a * a + c * c);
}

double inexact_factor_bound(double gamma, double c, double a, double delta) {
  if (!(delta >= 0.0)) throw InvalidArgument("delta must be >= 0");
  const double gd = gamma * delta;
  if (!(gd < 1.0)) throw InvalidArgument("gamma * delta must be < 1");
  return (std::sqrt(theoretical_exact_rate(gamma, c, a)) + gd) / (1.0 - gd);
}

std::optional<double> theoretical_inexact_factor(double gamma, double c, double a, double delta_k) {
  check_rate_domain(gamma, c, a);
  if (!(delta_k >= 0.0)) throw InvalidArgument("delta_k must be >= 0");
  if (!(gamma * delta_k < 1.0)) return std::nullopt;
  const double theta = inexact_factor_bound(gamma, c, a, delta_k);
  if (!(theta < 1.0)) return std::nullopt;
  return theta;
}

namespace {

std::vector<std::pair<int, double>> ratios_above_floor(const std::vector<double>& dist,
                                                       double floor) {
  std::vector<std::pair<int, double>> out;
  for (std::size_t k = 0; k + 1 < dist.size(); ++k) {
    if (!(dist[k] > floor) || !(dist[k + 1] > floor)) break;
    out.emplace_back(static_cast<int>(k), dist[k + 1] / dist[k]);
  }
  return out;
}

RateReport rate_from_ratios(const std::vector<std::pair<int, double>>& usable,
                            double window_fraction, std::optional<double> theoretical_factor,
                            RateComparison mode, double tolerance) {
  if (!(window_fraction > 0.0 && window_fraction <= 1.0)) {
    throw InvalidArgument("window_fraction must lie in (0,1]");
  }
  if (usable.size() < 10) {
    throw InsufficientData("need at least 10 usable step ratios, have " +
                           std::to_string(usable.size()));
  }
  const auto n = usable.size();
  auto take = static_cast<std::size_t>(std::ceil(window_fraction * static_cast<double>(n)));
  take = std::clamp<std::size_t>(take, 1, n);
  const std::size_t first = n - take;

  RateReport report;
  report.mode = mode;
  report.tolerance = tolerance;
  report.theoretical_factor = theoretical_factor;
  report.window = {usable[first].first, usable.back().first + 1};
  for (std::size_t i = first; i < n; ++i) report.ratios.push_back(usable[i].second);
  report.empirical_tail_ratio_max = *std::max_element(report.ratios.begin(), report.ratios.end());
  report.empirical_geometric_mean = geometric_mean(report.ratios);
  if (theoretical_factor) {
    const double th = *theoretical_factor;
    report.tight = std::abs(report.empirical_tail_ratio_max - th) <= tolerance &&
                   std::abs(report.empirical_geometric_mean - th) <= tolerance;
    report.within_bound = report.empirical_tail_ratio_max <= th + tolerance;
  }
  return report;
}

}  // namespace

std::vector<std::pair<int, double>> usable_step_ratios(const IterationTrace& trace,
                                                       const Vector& z_star) {
  std::vector<double> dist;
  dist.reserve(trace.records.size());
  for (const auto& rec : trace.records) {
    if (rec.z.size() == z_star.size()) {
      dist.push_back((rec.z - z_star).norm());
    } else if (rec.dist_to_zero) {
      dist.push_back(*rec.dist_to_zero);
    } else {
      throw InsufficientData("trace stores neither iterates nor distances to the zero");
    }
  }
  return ratios_above_floor(dist, distance_floor(z_star.norm()));
}

RateReport estimate_rate_from_distances(const std::vector<double>& distances, double floor,
                                        double window_fraction,
                                        std::optional<double> theoretical_factor,
                                        RateComparison mode, double tolerance) {
  return rate_from_ratios(ratios_above_floor(distances, floor), window_fraction,
                          theoretical_factor, mode, tolerance);
}

RateReport estimate_empirical_rate(const IterationTrace& trace, const Vector& z_star,
                                   double window_fraction, std::optional<double> theoretical_factor,
                                   RateComparison mode, double tolerance) {
  return rate_from_ratios(usable_step_ratios(trace, z_star), window_fraction, theoretical_factor,
                          mode, tolerance);
}

RotationTightnessReport tightness_check_rotation(double a, double c, double gamma, const Vector& z0,
                                                 int iters) {
  require_dim(z0, 2, "rotation start");
  if (z0.norm() == 0.0) throw InvalidArgument("tightness check needs z0 != 0");
  const auto op = make_rotation_operator({a});

  GppaConfig config;
  config.gamma = gamma;
  config.c_schedule = CSchedule::constant(c);
  config.max_iter = iters;
  config.residual_tol = 0.0;
  const auto trace = run_exact_gppa(op, config, z0);

  RotationTightnessReport report;
  report.rho = theoretical_exact_rate(gamma, c, a);
  const bool equality = gamma == 1.0;
  for (const auto& [k, ratio] : usable_step_ratios(trace, Vector::Zero(2))) {
    const double sq = ratio * ratio;
    report.squared_ratios.push_back(sq);
    report.max_abs_deviation = std::max(report.max_abs_deviation, std::abs(sq - report.rho));
    report.max_excess = std::max(report.max_excess, sq - report.rho);
    const bool ok = equality ? std::abs(sq - report.rho) <= 1e-12 : sq <= report.rho + 1e-10;
    if (!ok) ++report.violations;
  }
  report.passed = report.violations == 0 && !report.squared_ratios.empty();
  if (report.squared_ratios.size() >= 10) {
    report.rate = estimate_empirical_rate(trace, Vector::Zero(2), 0.5, std::sqrt(report.rho),
                                          equality ? RateComparison::Equality : RateComparison::Bound);
  }
  return report;
}

LipschitzEstimate estimate_resolvent_lipschitz(const MonotoneOperator& op, double c,
                                               const Vector& z_star, double radius, int samples,
                                               std::uint64_t seed) {
  if (samples < 2) throw InvalidArgument("estimate_resolvent_lipschitz needs samples >= 2");
  if (!(radius > 0.0)) throw InvalidArgument("radius must be > 0");
  require_dim(z_star, op.dim(), "z_star");

  LipschitzEstimate est;
  est.radius = radius;
  est.samples = samples;
  est.seed = seed;
  std::mt19937_64 rng(seed);
  for (int i = 0; i < samples; ++i) {
    Vector z = sample_ball(rng, z_star, radius);
    const double d = (z - z_star).norm();
    if (d == 0.0) continue;
    est.L_hat = std::max(est.L_hat, (op.resolvent(c, z) - z_star).norm() / d);
  }
  if (auto a = op.inverse_lipschitz_modulus()) {
    est.bound = *a / std::sqrt(*a * *a + c * c);
    est.within_bound = est.L_hat <= *est.bound + 1e-8;
  }
  return est;
}

ProbeReport superlinear_probe(double a, double gamma, double c0, double growth, int iters,
                              const Vector& z0) {
  if (iters < 10) throw InvalidArgument("superlinear probe needs iters >= 10");
  if (!(growth >= 1.0)) throw InvalidArgument("growth must be >= 1");
  require_dim(z0, 2, "probe start");
  const auto op = make_rotation_operator({a});

  GppaConfig config;
  config.gamma = gamma;
  config.c_schedule = CSchedule::geometric(c0, growth);
  config.max_iter = iters;
  config.residual_tol = 0.0;
  config.store_vectors = true;
  const auto trace = run_exact_gppa(op, config, z0);

  ProbeReport report;
  report.a = a;
  report.gamma = gamma;
  report.c0 = c0;
  report.growth = growth;
  report.limit_ratio = std::abs(1.0 - gamma);
  // The iteration is linear with exact zero at the origin, so ratios stay
  // meaningful down to the normal-number range.
  constexpr double kTiny = 1e-250;
  for (std::size_t k = 0; k + 1 < trace.records.size(); ++k) {
    const double now = trace.records[k].z.norm();
    const double next = trace.records[k + 1].z.norm();
    if (!(now > kTiny) || !(next > kTiny)) break;
    report.c_values.push_back(trace.records[k].c_k);
    report.ratios.push_back(next / now);
  }
  if (!report.ratios.empty()) report.final_ratio = report.ratios.back();
  report.monotone_decreasing = report.ratios.size() >= 2;
  for (std::size_t k = 1; k < report.ratios.size(); ++k) {
    if (!(report.ratios[k] < report.ratios[k - 1])) {
      report.monotone_decreasing = false;
      break;
    }
  }
  return report;
}

InexactRateCheck check_inexact_rate(const IterationTrace& trace, const Vector& z_star, double a,
                                    double margin) {
  InexactRateCheck check;
  check.a = a;
  const double gamma = trace.config.gamma;
  std::optional<int> candidate;
  for (const auto& [k, ratio] : usable_step_ratios(trace, z_star)) {
    const auto& rec = trace.records[static_cast<std::size_t>(k)];
    const double delta = rec.delta_k.value_or(0.0);
    const double sqrt_rho = std::sqrt(theoretical_exact_rate(gamma, rec.c_k, a));
    if (!(gamma * delta < 1.0 - sqrt_rho * (1.0 + margin))) continue;
    const double bound = inexact_factor_bound(gamma, rec.c_k, a, delta);
    ++check.checked;
    check.max_excess = std::max(check.max_excess, ratio - bound);
    if (ratio > bound) {
      ++check.violations;
      candidate.reset();
      continue;
    }
    if (!candidate && bound < 1.0) candidate = k;
  }
  check.first_contractive_index = candidate;
  return check;
}

}  // namespace gppa
