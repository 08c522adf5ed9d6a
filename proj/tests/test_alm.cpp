#include "gppa/alm.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include <Eigen/Eigenvalues>

#include <random>

using gppa::Matrix;
using gppa::Vector;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<gppa::Index>(xs.size()));
  gppa::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

gppa::LinearlyConstrainedQP qp(Matrix Q, Vector q, Matrix A, Vector b) {
  return {std::move(Q), std::move(q), std::move(A), std::move(b)};
}

gppa::AlmConfig alm_config(double gamma, double c, int iters) {
  gppa::AlmConfig cfg;
  cfg.gamma = gamma;
  cfg.c_schedule = gppa::CSchedule::constant(c);
  cfg.max_iter = iters;
  return cfg;
}

}  // namespace

TEST(AlmSubproblem, FeasibleUnconstrainedOptimum) {
  const auto P = qp(Matrix::Identity(2, 2), vec({0, 0}), (Matrix(1, 2) << 1, 0).finished(), vec({0}));
  const Vector x = gppa::alm_x_subproblem(P, vec({0}), 1.0);
  EXPECT_NEAR(x.norm(), 0.0, 1e-15);
}

TEST(AlmSubproblem, HandSolvedTwoByTwo) {
  const auto P =
      qp(Matrix::Identity(2, 2), vec({-1, -1}), (Matrix(1, 2) << 1, 1).finished(), vec({0}));
  const Vector x = gppa::alm_x_subproblem(P, vec({0}), 1.0);
  EXPECT_NEAR(x(0), 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(x(1), 1.0 / 3.0, 1e-15);
}

TEST(AlmSubproblem, FirstOrderConditionOnRandomProblems) {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  for (int i = 0; i < 100; ++i) {
    const auto P = gppa::random_linearly_constrained_qp(6, 3, 1000 + i);
    Vector p(3);
    for (int j = 0; j < 3; ++j) p(j) = normal(rng);
    const double c = std::exp(normal(rng));
    const Vector x = gppa::alm_x_subproblem(P, p, c);
    const Vector grad = P.Q * x + P.q - P.A.transpose() * p + c * P.A.transpose() * (P.A * x - P.b);
    EXPECT_LE(grad.norm(), 1e-10);
  }
}

TEST(Alm, ValidationCatchesBadProblems) {
  auto P = gppa::random_linearly_constrained_qp(4, 2, 1);
  EXPECT_TRUE(P.validation_errors().empty());
  P.A.row(1) = P.A.row(0);
  EXPECT_FALSE(P.validation_errors().empty());
  auto Q = gppa::random_linearly_constrained_qp(4, 2, 1);
  Q.Q(0, 0) = -50.0;
  EXPECT_FALSE(Q.validation_errors().empty());
}

TEST(Alm, StationaryAtDualOptimum) {
  const auto P = gppa::random_linearly_constrained_qp(6, 3, 3);
  const Vector p_star = gppa::alm_dual_optimum(P);
  const auto trace = gppa::run_generalized_alm(P, alm_config(1.3, 1.0, 20), p_star);
  for (const auto& r : trace.records) EXPECT_LE((r.p - p_star).norm(), 1e-10);
}

TEST(Alm, ConvergesOnSeededProblem) {
  const auto P = gppa::random_linearly_constrained_qp(6, 3, 11);
  const auto trace = gppa::run_generalized_alm(P, alm_config(1.0, 1.0, 200), Vector::Zero(3));
  double best = 1e300;
  for (const auto& r : trace.records) best = std::min(best, r.primal_residual);
  EXPECT_LT(best, 1e-8);
  const auto relaxed = gppa::run_generalized_alm(P, alm_config(1.5, 1.0, 200), Vector::Zero(3));
  EXPECT_LT(relaxed.records.back().kkt, 1e-8);
  EXPECT_GT((relaxed.records[3].p - trace.records[3].p).norm(), 1e-6);
}

TEST(Alm, GammaOneIsBitExactClassicalAlm) {
  const auto P = gppa::random_linearly_constrained_qp(6, 3, 21);
  const Vector p0 = vec({0.5, -1.0, 2.0});
  const auto trace = gppa::run_generalized_alm(P, alm_config(1.0, 0.7, 50), p0);
  const auto ref = oracle::classical_alm(P, 0.7, p0, 50);
  ASSERT_EQ(trace.records.size(), ref.size());
  for (std::size_t k = 0; k < ref.size(); ++k) {
    EXPECT_TRUE(oracle::same_bits(trace.records[k].x_next, ref[k].x)) << k;
    EXPECT_TRUE(oracle::same_bits(trace.records[k].p_next, ref[k].p)) << k;
  }
}

TEST(DualOperator, SimpleShift) {
  const auto P = qp(Matrix::Identity(2, 2), vec({0, 0}), (Matrix(1, 2) << 1, 0).finished(), vec({1}));
  const auto op = gppa::make_dual_alm_operator(P);
  EXPECT_NEAR(op.forward(vec({3.0}))(0), 2.0, 1e-15);
  ASSERT_TRUE(op.known_zero());
  EXPECT_NEAR((*op.known_zero())(0), 1.0, 1e-15);
}

TEST(DualOperator, ZeroAtDualOptimum) {
  const auto P = gppa::random_linearly_constrained_qp(6, 3, 5);
  const auto op = gppa::make_dual_alm_operator(P);
  EXPECT_LE(op.forward(gppa::alm_dual_optimum(P)).norm(), 1e-10);
}

TEST(DualOperator, StrongMonotonicityOnSampledPairs) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto P = gppa::random_linearly_constrained_qp(6, 3, seed);
    const auto op = gppa::make_dual_alm_operator(P);
    const double modulus = P.min_eig_AAt() / P.lipschitz_gradient();
    std::mt19937_64 rng(seed);
    for (int i = 0; i < 1000; ++i) {
      const Vector p = gppa::sample_ball(rng, Vector::Zero(3), 10.0);
      const Vector q = gppa::sample_ball(rng, Vector::Zero(3), 10.0);
      const double lhs = (op.forward(p) - op.forward(q)).dot(p - q);
      EXPECT_GE(lhs, modulus * (p - q).squaredNorm() - 1e-10);
    }
    EXPECT_TRUE(gppa::dual_strong_monotonicity(P).holds());
  }
}

TEST(Equivalence, DualPpaMatchesAlm) {
  const auto P = gppa::random_linearly_constrained_qp(6, 3, 8);
  for (double g : {0.5, 1.0, 1.9}) {
    const auto rep = gppa::verify_alm_ppa_equivalence(P, g, gppa::CSchedule::constant(1.0),
                                                      Vector::Zero(3), 100);
    EXPECT_TRUE(rep.passed()) << g << " " << rep.max_deviation;
    EXPECT_EQ(rep.deviations.size(), 101u);
  }
}

TEST(Equivalence, StartAtOptimumIsConstant) {
  const auto P = gppa::random_linearly_constrained_qp(6, 3, 8);
  const auto rep = gppa::verify_alm_ppa_equivalence(P, 1.2, gppa::CSchedule::constant(1.0),
                                                    gppa::alm_dual_optimum(P), 30);
  EXPECT_LE(rep.max_deviation, 1e-12);
}

TEST(Kkt, Residual) {
  const auto P = qp(Matrix::Identity(1, 1), vec({1}), Matrix::Identity(1, 1), vec({1}));
  EXPECT_EQ(gppa::kkt_residual(P, vec({0}), vec({0})), 1.0);
  const auto R = gppa::random_linearly_constrained_qp(6, 3, 2);
  EXPECT_LE(gppa::kkt_residual(R, gppa::alm_primal_optimum(R), gppa::alm_dual_optimum(R)), 1e-10);
}

TEST(Kkt, DecreasingTail) {
  const auto P = gppa::random_linearly_constrained_qp(6, 3, 13);
  const auto trace = gppa::run_generalized_alm(P, alm_config(1.0, 2.0, 60), Vector::Zero(3));
  // monotone over the tail before roundoff dominates
  std::size_t checked = 0;
  for (std::size_t k = 20; k + 1 < trace.records.size(); ++k) {
    if (trace.records[k].kkt < 1e-12) break;
    EXPECT_LE(trace.records[k + 1].kkt, trace.records[k].kkt);
    ++checked;
  }
  EXPECT_GT(checked, 0u);
}

TEST(Alm, HandWrittenScalarProblem) {
  const auto P = qp(Matrix::Constant(1, 1, 2.0), vec({-2}), Matrix::Identity(1, 1), vec({1}));
  EXPECT_NEAR(gppa::alm_primal_optimum(P)(0), 1.0, 1e-15);
  EXPECT_NEAR(gppa::alm_dual_optimum(P)(0), 0.0, 1e-15);
  const auto trace = gppa::run_generalized_alm(P, alm_config(1.0, 1.0, 50), vec({3.0}));
  // S_A(p) = p/2, so each classical step scales p by 1/(1 + c/2) = 2/3
  // and x^{k+1} = (p^k + 3)/3
  const double p49 = 3.0 * std::pow(2.0 / 3.0, 49);
  EXPECT_NEAR(trace.p_final(0), 3.0 * std::pow(2.0 / 3.0, 50), 1e-15);
  EXPECT_NEAR(trace.x_final(0), 1.0 + p49 / 3.0, 1e-15);
}
