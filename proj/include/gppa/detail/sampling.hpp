#pragma once

#include <cmath>
#include <random>

namespace gppa {

template <class Rng>
Vector sample_direction(Rng& rng, Index dim) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector u(dim);
  double norm = 0.0;
  while (norm == 0.0) {
    for (Index i = 0; i < dim; ++i) u(i) = normal(rng);
    norm = u.norm();
  }
  return u / norm;
}

template <class Rng>
Vector sample_ball(Rng& rng, const Vector& center, double radius) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const Index dim = center.size();
  const double r = radius * std::pow(unif(rng), 1.0 / static_cast<double>(dim));
  return center + r * sample_direction(rng, dim);
}

}  // namespace gppa
