#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "qdgeo/pulses.hpp"
#include "qdgeo/simulation.hpp"
#include "test_support.hpp"

using namespace qdgeo;
using namespace qdgeo::core;
using namespace qdgeo::pulses;
using qdgeo::testing::kPi;

TEST_CASE("pi-pulse durations") {
  const PulseSegment resonant = make_pi_pulse(0.02, 0.0, 0.0);
  CHECK(resonant.duration() == doctest::Approx(78.5398163397).epsilon(1e-10));
  CHECK(std::abs(2.0 * resonant.field() * resonant.duration() - kPi) <= 1e-12);

  const PulseSegment detuned = make_pi_pulse(0.02, 0.0, 0.04);
  CHECK(detuned.field() == doctest::Approx(0.02 * std::sqrt(2.0)));
  CHECK(detuned.duration() == doctest::Approx(55.5360367).epsilon(1e-8));
  CHECK(detuned.rotation_angle() == kPi);

  const PulseSegment z_only = make_pi_pulse(0.0, 0.0, 0.04);
  CHECK_FALSE(z_only.transfers_population());
  CHECK(z_only.duration() == doctest::Approx(kPi / 0.04));

  CHECK_THROWS_AS(make_pi_pulse(0.0, 0.0, 0.0), ModelError);
}

TEST_CASE("pi-pulses rotate by pi for random fields") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.001, 0.1);
  for (int trial = 0; trial < 200; ++trial) {
    const PulseSegment s = make_pi_pulse(u(rng), u(rng) * 30.0, u(rng) - 0.05);
    CHECK(std::abs(2.0 * s.field() * s.duration() - kPi) <= 1e-12);
  }
}

TEST_CASE("segment validation") {
  CHECK_THROWS_AS(PulseSegment(0.02, 0.0, 0.0, 0.0), ModelError);
  CHECK_THROWS_AS(PulseSegment(0.02, 0.0, 0.0, -1.0), ModelError);
  CHECK_THROWS_AS(PulseSegment(-0.02, 0.0, 0.0, 1.0), ModelError);
  CHECK_THROWS_AS(PulseSequence({}), ModelError);
  CHECK_THROWS_AS(PulseSequence({make_pi_pulse(0.02, 0, 0)}, 0), ModelError);
  const PulseSegment s(0.02, 0.0, 0.04, 10.0);
  CHECK(s.rotation_angle() == doctest::Approx(2.0 * 0.02 * std::sqrt(2.0) * 10.0));
}

TEST_CASE("gate 1 sequence") {
  const PulseSequence seq = gate1_sequence(0.02, 0.04);
  REQUIRE(seq.segments().size() == 2);
  CHECK(seq.repeats() == 1);
  CHECK(seq.segments()[0].phase() == 0.0);
  CHECK(seq.segments()[1].phase() == doctest::Approx(kPi));
  CHECK(seq.segments()[0].detuning() == seq.segments()[1].detuning());
  CHECK(seq.segments()[0].rabi() == seq.segments()[1].rabi());
  CHECK(seq.total_duration() == doctest::Approx(111.072).epsilon(1e-4));
  CHECK(std::abs(seq.total_duration() / 100.0 - 1.0) <= 0.15);
  CHECK_THROWS_AS(gate1_sequence(0.02, 0.0), ModelError);
}

TEST_CASE("gate 2 sequence") {
  const PulseSequence seq = gate2_sequence(0.02, kPi / 8);
  REQUIRE(seq.segments().size() == 2);
  CHECK(seq.segments()[0].phase() == doctest::Approx(kPi / 8));
  CHECK(seq.segments()[1].phase() == doctest::Approx(-kPi / 8));
  CHECK(seq.segments()[0].detuning() == 0.0);
  CHECK(seq.total_duration() == doctest::Approx(157.0796).epsilon(1e-6));
  CHECK_THROWS_AS(gate2_sequence(0.0, 0.1), ModelError);

  // phi0 = 0: a 2 pi rotation, i.e. -I.
  const sim::RotatingTwoLevel model;
  const Operator u = sim::exact_propagator(gate2_sequence(0.02, 0.0), model);
  CHECK(max_abs_diff(u, Complex(-1.0) * Operator::identity(2)) <= 1e-12);
}

TEST_CASE("repetition") {
  const PulseSequence seq = gate1_sequence(0.02, 0.05);
  CHECK(repeat_sequence(seq, 1).repeats() == 1);
  const PulseSequence rep = repeat_sequence(repeat_sequence(seq, 3), 4);
  CHECK(rep.repeats() == 12);
  CHECK(rep.segments().size() == 2);
  CHECK(rep.total_duration() == doctest::Approx(12.0 * seq.total_duration()));
  CHECK_THROWS_AS(repeat_sequence(seq, 0), ModelError);

  const sim::RotatingTwoLevel model;
  const Operator one = sim::sequence_propagator(seq, model);
  const Operator many = sim::sequence_propagator(repeat_sequence(seq, 59), model);
  CHECK(max_abs_diff(many, one.pow(59)) <= 1e-8);
}

TEST_CASE("sequence propagator is the ordered product of segment propagators") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const sim::RotatingTwoLevel model;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<PulseSegment> segs;
    for (int k = 0; k < 4; ++k) segs.emplace_back(0.03 * u(rng), 6.0 * u(rng), 0.06 * (u(rng) - 0.5), 20.0 + 60.0 * u(rng));
    const PulseSequence seq(segs);
    Operator product = Operator::identity(2);
    for (const auto& s : segs) product = propagator_constant(model.hamiltonian(s, 0.0), s.duration()) * product;
    CHECK(max_abs_diff(sim::sequence_propagator(seq, model), product) <= 1e-9);
    CHECK(max_abs_diff(sim::exact_propagator(seq, model), product) <= 1e-12);
  }
}

TEST_CASE("gate 2 returns logical states to their start") {
  const sim::RotatingTwoLevel model;
  for (const double phi0 : {0.1, kPi / 8, 0.7, 1.3}) {
    for (std::size_t b = 0; b < 2; ++b) {
      const auto traj = sim::simulate(gate2_sequence(0.02, phi0), model, StateVector::basis(2, b));
      const auto& n0 = traj.samples.front().n;
      const auto& n1 = traj.samples.back().n;
      const double d = std::sqrt(std::pow(n1[0] - n0[0], 2) + std::pow(n1[1] - n0[1], 2) + std::pow(n1[2] - n0[2], 2));
      CHECK(d <= 1e-6);
    }
  }
}
