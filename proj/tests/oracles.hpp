#pragma once

// Reference implementations of the classical (unrelaxed) methods, written
// directly from their textbook update rules. Used to check that the relaxed
// code paths reduce to them at gamma = 1.

#include "gppa/admm.hpp"
#include "gppa/alm.hpp"
#include "gppa/operators.hpp"

#include <Eigen/Cholesky>

#include <cstring>
#include <vector>

namespace oracle {

using gppa::Matrix;
using gppa::Vector;

// z^{k+1} = J_{cT}(z^k)
inline std::vector<Vector> classical_ppa(const gppa::MonotoneOperator& op, double c,
                                         const Vector& z0, int iters) {
  std::vector<Vector> zs{z0};
  for (int k = 0; k < iters; ++k) zs.push_back(op.resolvent(c, zs.back()));
  return zs;
}

struct AlmStep {
  Vector x;
  Vector p;
};

// x^{k+1} = argmin f(x) - <p^k, Ax - b> + c/2 |Ax - b|^2, p^{k+1} = p^k - c (Ax^{k+1} - b)
inline std::vector<AlmStep> classical_alm(const gppa::LinearlyConstrainedQP& P, double c,
                                          const Vector& p0, int iters) {
  std::vector<AlmStep> out;
  Vector p = p0;
  const Matrix& A = P.A;
  const Eigen::LLT<Matrix> llt(P.Q + c * A.transpose() * A);
  for (int k = 0; k < iters; ++k) {
    const Vector x = llt.solve(A.transpose() * p + c * A.transpose() * P.b - P.q);
    p = p - c * (A * x - P.b);
    out.push_back({x, p});
  }
  return out;
}

struct AdmmStep {
  Vector x;
  Vector w;
  Vector p;
};

// x^{k+1} = argmin f(x) + <p, Mx> + lambda/2 |Mx - w|^2
// w^{k+1} = argmin g(w) - <p, w> + lambda/2 |Mx^{k+1} - w|^2
// p^{k+1} = p + lambda (M x^{k+1} - w^{k+1})
inline std::vector<AdmmStep> classical_admm(const gppa::SeparableQP& P, const Vector& w0,
                                            const Vector& p0, int iters) {
  std::vector<AdmmStep> out;
  const double lambda = P.lambda;
  const Matrix& M = P.M;
  const Eigen::LLT<Matrix> xf(P.Q_f + lambda * M.transpose() * M);
  const Eigen::LLT<Matrix> wf(P.Q_g + lambda * Matrix::Identity(P.m(), P.m()));
  Vector w = w0;
  Vector p = p0;
  for (int k = 0; k < iters; ++k) {
    const Vector x = xf.solve(-P.q_f - M.transpose() * p + lambda * M.transpose() * w);
    const Vector mx = M * x;
    const Vector w_next = wf.solve(-P.q_g + p + lambda * mx);
    p = p + lambda * (mx - w_next);
    w = w_next;
    out.push_back({x, w, p});
  }
  return out;
}

inline bool same_bits(const Vector& a, const Vector& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), sizeof(double) * static_cast<std::size_t>(a.size())) == 0;
}

}  // namespace oracle
