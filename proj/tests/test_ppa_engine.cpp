#include "gppa/ppa_engine.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

using gppa::Matrix;
using gppa::Vector;

namespace {

Vector v2(double a, double b) { return (Vector(2) << a, b).finished(); }
Vector v1(double a) { return (Vector(1) << a).finished(); }

gppa::GppaConfig config(double gamma, double c, int max_iter, double tol = 0.0) {
  gppa::GppaConfig cfg;
  cfg.gamma = gamma;
  cfg.c_schedule = gppa::CSchedule::constant(c);
  cfg.max_iter = max_iter;
  cfg.residual_tol = tol;
  return cfg;
}

gppa::MonotoneOperator diag2() {
  return gppa::make_affine_operator({Matrix::Constant(1, 1, 2.0), v1(0.0), std::nullopt, "affine"});
}

}  // namespace

TEST(CSchedule, Kinds) {
  EXPECT_EQ(gppa::CSchedule::constant(2.0).at(17), 2.0);
  const auto geo = gppa::CSchedule::geometric(1.0, 2.0);
  EXPECT_EQ(geo.at(0), 1.0);
  EXPECT_EQ(geo.at(10), 1024.0);
  const auto list = gppa::CSchedule::list({3.0, 1.0, 2.0});
  EXPECT_EQ(list.at(1), 1.0);
  EXPECT_EQ(list.at(99), 2.0);
  EXPECT_EQ(list.kappa(), 1.0);
  EXPECT_FALSE(gppa::CSchedule::constant(0.0).validation_errors().empty());
  EXPECT_FALSE(gppa::CSchedule::geometric(1.0, 0.5).validation_errors().empty());
  EXPECT_FALSE(gppa::CSchedule::constant(1.0).with_kappa(2.0).validation_errors().empty());
}

TEST(DeltaSchedule, SumIsGeometricSeries) {
  const gppa::DeltaSchedule d{0.5, 0.9};
  EXPECT_NEAR(d.sum(), 5.0, 1e-14);
  double partial = 0.0;
  for (int k = 0; k < 2000; ++k) partial += d.at(k);
  EXPECT_NEAR(partial, 5.0, 1e-12);
}

TEST(GppaConfig, RejectsGammaOutsideOpenInterval) {
  for (double g : {0.0, 2.0, -1.0, 2.5}) {
    auto cfg = config(g, 1.0, 10);
    EXPECT_FALSE(cfg.validation_errors().empty()) << g;
    EXPECT_THROW(cfg.validate(), gppa::InvalidArgument);
  }
  EXPECT_TRUE(config(1.999, 1.0, 10).validation_errors().empty());
}

TEST(StepExact, ClassicalStepAtGammaOne) {
  const auto op = gppa::make_rotation_operator({1.0});
  const auto step = gppa::step_exact(op, 1.0, 1.0, v2(1.0, 0.0));
  EXPECT_NEAR(step.z_next(0), 0.5, 1e-15);
  EXPECT_NEAR(step.z_next(1), 0.5, 1e-15);
  EXPECT_TRUE(oracle::same_bits(step.z_next, step.z_tilde));
}

TEST(StepExact, RelaxedStep) {
  const auto op = gppa::make_rotation_operator({1.0});
  const auto step = gppa::step_exact(op, 1.0, 1.5, v2(1.0, 0.0));
  EXPECT_NEAR(step.z_next(0), 0.25, 1e-15);
  EXPECT_NEAR(step.z_next(1), 0.75, 1e-15);
}

TEST(StepExact, ZeroIsFixedForAnyGamma) {
  const auto op = gppa::make_rotation_operator({2.0});
  for (double g : {0.1, 1.0, 1.9}) {
    EXPECT_EQ(gppa::step_exact(op, 0.7, g, v2(0, 0)).z_next, v2(0, 0));
  }
}

TEST(RunExact, RotationGeometricDecay) {
  const auto op = gppa::make_rotation_operator({1.0});
  const auto trace = gppa::run_exact_gppa(op, config(1.0, 1.0, 50), v2(1.0, 0.0));
  ASSERT_EQ(trace.records.size(), 51u);
  EXPECT_EQ(trace.termination, gppa::Termination::MaxIter);
  for (const auto& r : trace.records) {
    const double expected = std::pow(std::sqrt(0.5), r.k);
    EXPECT_NEAR(r.z.norm(), expected, 1e-10 * expected) << r.k;
  }
}

TEST(RunExact, StartAtZeroStopsImmediately) {
  const auto op = gppa::make_rotation_operator({1.0});
  const auto trace = gppa::run_exact_gppa(op, config(1.0, 1.0, 50, 1e-10), v2(0.0, 0.0));
  ASSERT_EQ(trace.records.size(), 1u);
  EXPECT_EQ(trace.records[0].k, 0);
  EXPECT_EQ(trace.records[0].residual, 0.0);
  EXPECT_EQ(trace.termination, gppa::Termination::Converged);
}

TEST(RunExact, AffineThirds) {
  const auto trace = gppa::run_exact_gppa(diag2(), config(1.0, 1.0, 30), v1(1.0));
  for (const auto& r : trace.records) {
    EXPECT_NEAR(r.z(0), std::pow(1.0 / 3.0, r.k), 1e-15) << r.k;
  }
}

TEST(RunExact, ContractionInequalityHolds) {
  Matrix G(3, 3);
  G << 2, 1, 0, -1, 1, 0.5, 0, -0.5, 0.3;
  const auto op = gppa::make_affine_operator({G, Vector::Ones(3), std::nullopt, "affine"});
  for (double g : {0.25, 1.0, 1.9}) {
    const auto trace = gppa::run_exact_gppa(op, config(g, 0.8, 60), Vector::Constant(3, 5.0));
    for (std::size_t k = 0; k + 1 < trace.records.size(); ++k) {
      const double d0 = *trace.records[k].dist_to_zero;
      const double d1 = *trace.records[k + 1].dist_to_zero;
      const double res = trace.records[k].residual;
      EXPECT_LE(d1 * d1, d0 * d0 - g * (2 - g) * res * res + 1e-10);
    }
  }
}

TEST(RunExact, ResidualSumsStayBounded) {
  const auto op = gppa::make_rotation_operator({3.0});
  const auto trace = gppa::run_exact_gppa(op, config(1.3, 0.5, 300), v2(2.0, -1.0));
  double partial = 0.0;
  double previous = 0.0;
  for (const auto& r : trace.records) {
    partial += r.residual * r.residual;
    EXPECT_GE(partial, previous);
    previous = partial;
  }
  // sum of squared residuals <= |z0 - z*|^2 / (gamma (2 - gamma))
  EXPECT_LE(partial, 5.0 / (1.3 * 0.7) + 1e-9);
}

TEST(RunExact, GammaOneIsBitExactClassicalPpa) {
  const auto op = gppa::make_rotation_operator({0.6});
  const auto trace = gppa::run_exact_gppa(op, config(1.0, 1.3, 40), v2(1.0, 2.0));
  const auto ref = oracle::classical_ppa(op, 1.3, v2(1.0, 2.0), 40);
  ASSERT_EQ(trace.records.size(), ref.size());
  for (std::size_t k = 0; k < ref.size(); ++k) {
    EXPECT_TRUE(oracle::same_bits(trace.records[k].z, ref[k])) << k;
  }
}

TEST(RunExact, RejectsDeltaSchedule) {
  auto cfg = config(1.0, 1.0, 10);
  cfg.delta_schedule = gppa::DeltaSchedule{0.1, 0.5};
  EXPECT_THROW(gppa::run_exact_gppa(gppa::make_rotation_operator({1.0}), cfg, v2(1, 0)),
               gppa::InvalidArgument);
}

TEST(RunExact, LargeDimensionStoresNormsOnly) {
  const int n = 80;
  const auto op = gppa::make_affine_operator(
      {Matrix::Identity(n, n), Vector::Zero(n), std::nullopt, "affine"});
  const auto trace = gppa::run_exact_gppa(op, config(1.0, 1.0, 5), Vector::Ones(n));
  EXPECT_EQ(trace.records[0].z.size(), 0);
  EXPECT_NEAR(trace.records[1].z_norm, std::sqrt(80.0) / 2.0, 1e-12);
  EXPECT_NEAR(*trace.records[1].dist_to_zero, std::sqrt(80.0) / 2.0, 1e-12);
  auto cfg = config(1.0, 1.0, 5);
  cfg.store_vectors = true;
  EXPECT_EQ(gppa::run_exact_gppa(op, cfg, Vector::Ones(n)).records[0].z.size(), n);
}

TEST(StepInexact, ZeroDeltaMatchesExact) {
  const auto op = gppa::make_rotation_operator({1.0});
  std::mt19937_64 rng(1);
  const auto inexact = gppa::step_inexact(op, 1.0, 1.5, 0.0, v2(1.0, 0.0), rng);
  const auto exact = gppa::step_exact(op, 1.0, 1.5, v2(1.0, 0.0));
  EXPECT_TRUE(oracle::same_bits(inexact.z_next, exact.z_next));
  EXPECT_TRUE(oracle::same_bits(inexact.z_bar, exact.z_tilde));
}

TEST(StepInexact, CriterionHoldsOnEveryStep) {
  const auto op = gppa::make_rotation_operator({1.0});
  std::mt19937_64 rng(42);
  Vector z = v2(1.0, 0.0);
  for (double delta : {0.01, 0.3, 0.9, 5.0}) {
    for (int i = 0; i < 50; ++i) {
      const auto s = gppa::step_inexact(op, 1.0, 1.2, delta, z, rng);
      EXPECT_LE((s.z_bar - s.z_tilde).norm(), delta * (z - s.z_next).norm() + 1e-15);
      z = s.z_next.norm() > 1e-200 ? s.z_next : v2(1.0, 0.0);
    }
  }
}

TEST(StepInexact, ZeroStaysFixed) {
  const auto op = gppa::make_rotation_operator({1.0});
  std::mt19937_64 rng(3);
  const auto s = gppa::step_inexact(op, 1.0, 1.0, 0.5, v2(0, 0), rng);
  EXPECT_EQ(s.z_next, v2(0, 0));
  EXPECT_EQ(s.z_tilde, v2(0, 0));
}

TEST(RunInexact, RotationReachesTolerance) {
  auto cfg = config(1.0, 1.0, 200);
  cfg.delta_schedule = gppa::DeltaSchedule{0.5, 0.9};
  cfg.seed = 9;
  const auto trace = gppa::run_inexact_gppa(gppa::make_rotation_operator({1.0}), cfg, v2(1.0, 0.0));
  ASSERT_NE(trace.termination, gppa::Termination::NumericalFailure) << trace.failure_message;
  bool reached = false;
  for (const auto& r : trace.records) {
    if (*r.dist_to_zero < 1e-8) reached = true;
    if (r.step_length) {
      EXPECT_LE(*r.inexact_error, *r.delta_k * *r.step_length + 1e-15);
    }
  }
  EXPECT_TRUE(reached);
}

TEST(RunInexact, ZeroDeltaReproducesExactTrace) {
  auto cfg = config(1.5, 1.0, 40);
  const auto op = gppa::make_rotation_operator({1.0});
  const auto exact = gppa::run_exact_gppa(op, cfg, v2(1.0, 0.0));
  cfg.delta_schedule = gppa::DeltaSchedule{0.0, 0.5};
  for (std::uint64_t seed : {1u, 2u}) {
    cfg.seed = seed;
    const auto inexact = gppa::run_inexact_gppa(op, cfg, v2(1.0, 0.0));
    ASSERT_EQ(inexact.records.size(), exact.records.size());
    for (std::size_t k = 0; k < exact.records.size(); ++k) {
      EXPECT_TRUE(oracle::same_bits(inexact.records[k].z, exact.records[k].z));
    }
  }
}

TEST(RunInexact, SameSeedSameTrace) {
  auto cfg = config(1.0, 1.0, 60);
  cfg.delta_schedule = gppa::DeltaSchedule{0.5, 0.9};
  cfg.seed = 5;
  const auto op = gppa::make_rotation_operator({1.0});
  const auto a = gppa::run_inexact_gppa(op, cfg, v2(1.0, 0.0));
  const auto b = gppa::run_inexact_gppa(op, cfg, v2(1.0, 0.0));
  for (std::size_t k = 0; k < a.records.size(); ++k) {
    EXPECT_TRUE(oracle::same_bits(a.records[k].z, b.records[k].z));
  }
}

TEST(ResidualStop, Thresholds) {
  gppa::IterationRecord rec;
  rec.c_k = 2.0;
  rec.z_norm = 3.0;
  rec.residual = 0.0;
  EXPECT_TRUE(gppa::residual_stop(rec, 1e-10, 1.0));
  rec.residual = 1e-10 * 2.0 * (1.0 + 3.0) * 2.0;
  EXPECT_FALSE(gppa::residual_stop(rec, 1e-10, 1.0));
}

TEST(ResidualStop, RotationTerminatesWithinEightyIterations) {
  const auto op = gppa::make_rotation_operator({1.0});
  const auto trace = gppa::run_exact_gppa(op, config(1.0, 1.0, 500, 1e-10), v2(1.0, 0.0));
  EXPECT_EQ(trace.termination, gppa::Termination::Converged);
  EXPECT_LE(trace.steps(), 80);
  EXPECT_GE(trace.steps(), 60);
}
