// Shared helpers for the unit tests: seeded random generators for hermitian
// matrices and states.

#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "qdgeo/core.hpp"

namespace qdgeo::testing {

inline constexpr double kPi = std::numbers::pi;

inline core::Operator random_hermitian(std::mt19937_64& rng, std::size_t dim, double scale) {
  std::normal_distribution<double> g(0.0, scale);
  const auto d = static_cast<Eigen::Index>(dim);
  core::Matrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = Complex(g(rng), g(rng));
  }
  return core::Operator::hermitian(core::Matrix(0.5 * (m + m.adjoint())));
}

inline core::StateVector random_state(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  core::Vector v(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = Complex(g(rng), g(rng));
  return core::StateVector(v);
}

inline core::Operator random_operator(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  const auto d = static_cast<Eigen::Index>(dim);
  core::Matrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) m(i, j) = Complex(g(rng), g(rng));
  }
  return core::Operator(m);
}

/// Constant generator wrapped as a time-dependent one.
inline core::HamiltonianFn constant(const core::Operator& h) {
  return [h](double) { return h; };
}

}  // namespace qdgeo::testing
