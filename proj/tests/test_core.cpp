#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "qdgeo/core.hpp"
#include "test_support.hpp"

using namespace qdgeo;
using namespace qdgeo::core;
using qdgeo::testing::constant;
using qdgeo::testing::kPi;

TEST_CASE("state vectors are normalized on construction") {
  const StateVector psi{Complex(3, 0), Complex(0, 4)};
  CHECK(std::abs(psi.amplitudes().norm() - 1.0) <= 1e-15);
  CHECK(psi.population(0) == doctest::Approx(0.36));
  CHECK_THROWS_AS(StateVector({Complex(0, 0), Complex(0, 0)}), ModelError);
  CHECK_THROWS_AS(StateVector({Complex(NAN, 0), Complex(1, 0)}), ModelError);
  CHECK_THROWS_AS(StateVector::basis(2, 2), ModelError);
}

TEST_CASE("operator tags are validated") {
  CHECK_THROWS_AS(Operator::hermitian(Operator(2, {{0, 1}, {0, 0}}).matrix()), ModelError);
  CHECK_THROWS_AS(Operator::unitary(Operator(2, {{2, 0}, {0, 1}}).matrix()), NumericalError);
  CHECK(sigma_x().tagged_hermitian());
  CHECK(Operator::identity(3).tagged_unitary());
}

TEST_CASE("propagator of a zero generator is the identity") {
  for (const double t : {0.0, 1.0, 1234.5}) {
    CHECK(max_abs_diff(propagator_constant(Operator::zero(2), t), Operator::identity(2)) == 0.0);
  }
}

TEST_CASE("half-period Rabi rotation gives -i sigma_x") {
  const double rabi = 0.02;
  const Operator u = propagator_constant(Complex(rabi) * sigma_x(), kPi / (2.0 * rabi));
  CHECK(max_abs_diff(u, Complex(0, -1) * sigma_x()) <= 1e-12);
}

TEST_CASE("pi rotation about (1,0,1)/sqrt2 agrees with closed form and RK4") {
  const double rabi = 0.02;
  const Operator h = Complex(rabi) * sigma_x() + Complex(rabi) * sigma_z();
  const double b = rabi * std::sqrt(2.0);
  const double t = kPi / (2.0 * b);
  const Operator u = propagator_constant(h, t);

  // exp(-i pi/2 n.sigma) = -i n.sigma
  const Operator closed = Complex(0, -1.0 / std::sqrt(2.0)) * (sigma_x() + sigma_z());
  CHECK(max_abs_diff(u, closed) <= 1e-12);

  for (std::size_t col = 0; col < 2; ++col) {
    const auto r = rk4_evolve(constant(h), StateVector::basis(2, col), 0.0, t, t / 1e4);
    for (std::size_t row = 0; row < 2; ++row) {
      CHECK(std::abs(r.state[row] - u(row, col)) <= 1e-8);
    }
  }
}

TEST_CASE("RK4 leaves states untouched under a zero Hamiltonian") {
  std::mt19937_64 rng(7);
  const StateVector psi = qdgeo::testing::random_state(rng, 3);
  const auto r = rk4_evolve(constant(Operator::zero(3)), psi, 0.0, 100.0, 0.5);
  CHECK(max_abs_diff(r.state, psi) == 0.0);
  CHECK(r.norm_drift == 0.0);
  CHECK(r.steps == 200);
}

TEST_CASE("RK4 matches the exact propagator on a constant sigma_x drive") {
  const double rabi = 0.02;
  const Operator h = Complex(rabi) * sigma_x();
  const double t = kPi / (2.0 * rabi);
  const StateVector psi0 = StateVector::basis(2, 0);
  const StateVector exact = propagator_constant(h, t).apply(psi0);
  const auto r = rk4_evolve(constant(h), psi0, 0.0, t, t / 2000.0);
  CHECK(max_abs_diff(r.state, exact) <= 1e-8);
  CHECK(r.norm_drift <= 1e-6);
}

namespace {

double raw_rk4_error(const Operator& h, double t, std::size_t steps) {
  // Unnormalized integration so the measured error is the truncation error.
  Vector psi = StateVector::basis(2, 0).amplitudes();
  const double dt = t / static_cast<double>(steps);
  for (std::size_t k = 0; k < steps; ++k) psi = rk4_step(h.matrix(), psi, dt);
  const Vector exact = propagator_constant(h, t).matrix().col(0);
  return (psi - exact).norm();
}

}  // namespace

TEST_CASE("RK4 converges at fourth order") {
  const double rabi = 0.02;
  const Operator h = Complex(rabi) * sigma_x();
  const double t = 5.0 * kPi / (2.0 * rabi);
  for (const std::size_t n : {50u, 100u, 200u}) {
    const double e1 = raw_rk4_error(h, t, n);
    const double e2 = raw_rk4_error(h, t, 2 * n);
    const double order = std::log2(e1 / e2);
    CAPTURE(n);
    CHECK(order >= 3.5);
    CHECK(order <= 4.5);
  }
}

TEST_CASE("RK4 refuses to renormalize a diverging integration") {
  const Operator h = Complex(1.0) * sigma_x();
  CHECK_THROWS_AS(rk4_evolve(constant(h), StateVector::basis(2, 0), 0.0, 50.0, 1.0), StepSizeError);
  CHECK_THROWS_AS(rk4_evolve(constant(h), StateVector::basis(2, 0), 0.0, 1.0, 0.0), ModelError);
}

TEST_CASE("propagator input validation") {
  CHECK_THROWS_AS(propagator_constant(Operator(2, {{0, 1}, {0, 0}}), 1.0), ModelError);
  CHECK_THROWS_AS(propagator_constant(sigma_x(), -1.0), ModelError);
}

TEST_CASE("propagators are unitary and compose") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> time(0.0, 500.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t dim = 2 + static_cast<std::size_t>(trial % 3);
    const Operator h = qdgeo::testing::random_hermitian(rng, dim, 0.05);
    const double t1 = time(rng);
    const double t2 = time(rng);
    const Operator u1 = propagator_constant(h, t1);
    const Operator u2 = propagator_constant(h, t2);
    CHECK(u1.unitarity_error() <= 1e-9);
    CHECK(max_abs_diff(propagator_constant(h, t1 + t2), u2 * u1) <= 1e-9);
  }
}

TEST_CASE("RK4 agrees with the spectral propagator on random constant generators") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t dim = 2 + static_cast<std::size_t>(trial % 3);
    const Operator h = qdgeo::testing::random_hermitian(rng, dim, 0.03);
    const StateVector psi = qdgeo::testing::random_state(rng, dim);
    const double t = 150.0;
    const auto r = rk4_evolve(constant(h), psi, 0.0, t, t / 2000.0);
    CHECK(max_abs_diff(r.state, propagator_constant(h, t).apply(psi)) <= 1e-8);
  }
}

TEST_CASE("tensor products") {
  CHECK(max_abs_diff(tensor(Operator::identity(2), Operator::identity(2)), Operator::identity(4)) == 0.0);

  // |E><G| in the (|E>, |G>) basis; |GG> is index 3 and |EE> index 0.
  const Operator raise = outer(2, 0, 1);
  const Operator rr = tensor(raise, raise);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) CHECK(rr(r, c) == Complex(r == 0 && c == 3 ? 1.0 : 0.0));
  }

  const StateVector gg = StateVector::basis(4, 3);
  const StateVector out = tensor(sigma_x(), sigma_x()).apply(gg);
  CHECK(out.population(0) == doctest::Approx(1.0));

  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Operator a = qdgeo::testing::random_operator(rng, 2);
    const Operator b = qdgeo::testing::random_operator(rng, 2);
    const Operator c = qdgeo::testing::random_operator(rng, 2);
    const Operator d = qdgeo::testing::random_operator(rng, 2);
    CHECK(max_abs_diff(tensor(a, b) * tensor(c, d), tensor(a * c, b * d)) <= 1e-12);
  }
}

TEST_CASE("gate fidelity") {
  const Operator id = Operator::identity(2);
  CHECK(gate_fidelity(sigma_y(), sigma_y()) == doctest::Approx(1.0));
  for (const double theta : {0.3, 1.7, -2.9}) {
    CHECK(gate_fidelity(id, std::exp(kI * theta) * id) == doctest::Approx(1.0));
  }
  CHECK(gate_fidelity(id, sigma_x()) == doctest::Approx(0.0));
  CHECK_THROWS_AS(gate_fidelity(id, Operator::identity(3)), ModelError);
}

TEST_CASE("matrix power") {
  const Operator u = propagator_constant(Complex(0.01) * sigma_y(), 37.0);
  Operator acc = Operator::identity(2);
  for (int i = 0; i < 59; ++i) acc = u * acc;
  CHECK(max_abs_diff(u.pow(59), acc) <= 1e-12);
}
