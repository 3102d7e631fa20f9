#include "qdgeo/gates.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace qdgeo::gates {

using core::Matrix;
using pulses::PulseSegment;

namespace {

constexpr double kPi = std::numbers::pi;

// Predicted per-loop rotation of the dressed logical field.
double dressed_gamma(const sim::RamanThreeLevel& model, double coupling, double detuning) {
  const Operator h = models::dressed_effective(model.hamiltonian(PulseSegment(coupling, 0.0, detuning, 1.0), 0.0),
                                               {models::basis::kEPlus, models::basis::kEMinus});
  const auto b = models::bloch_field(h);
  return 2.0 * std::atan2(std::hypot(b[0], b[1]), b[2]);
}

double raman_coupling(const models::RamanParams& p) { return p.rabi_plus * p.rabi_minus / std::abs(p.detuning); }

double raman_base_phase(const models::RamanParams& p) {
  return p.phase_plus - p.phase_minus + (p.detuning > 0.0 ? kPi : 0.0);
}

sim::RamanThreeLevel raman_model(const models::RamanParams& p) {
  p.validate();
  if (!(p.rabi_plus > 0.0) || !(p.rabi_minus > 0.0)) {
    throw ModelError("Raman gates need both lasers on (Omega+ > 0 and Omega- > 0)");
  }
  return sim::RamanThreeLevel(p.detuning, p.rabi_minus / p.rabi_plus);
}

void check_raman_regime(const models::RamanParams& p) {
  p.validate();
  const double ratio = std::abs(p.detuning) / std::max(p.rabi_plus, p.rabi_minus);
  if (ratio < 5.0) {
    throw ModelError(fmt::format("Delta / max(Omega) = {:.3g} < 5: Raman elimination not valid", ratio));
  }
}

}  // namespace

Operator target_gate1(double gamma) {
  const double c = std::cos(gamma), s = std::sin(gamma);
  return Operator::unitary(Operator(2, {{c, s}, {-s, c}}).matrix());
}

Operator target_gate2(double gamma_tilde) {
  return Operator::unitary(Operator(2, {{std::exp(kI * gamma_tilde), 0.0}, {0.0, std::exp(-kI * gamma_tilde)}}).matrix());
}

Operator target_two_qubit(double gamma_tilde) {
  Matrix m = Matrix::Identity(4, 4);
  m(models::basis::kGG, models::basis::kGG) = std::exp(-kI * gamma_tilde);
  m(models::basis::kEE, models::basis::kEE) = std::exp(kI * gamma_tilde);
  return Operator::unitary(std::move(m));
}

Gate1Design synthesize_gate1(double gamma, double rabi) {
  if (!(gamma > 0.0 && gamma < kPi)) {
    throw ModelError(fmt::format("gate-1 angle must lie in (0, pi), got {}", gamma));
  }
  if (!(rabi > 0.0)) throw ModelError(fmt::format("gate-1 Rabi frequency must be positive, got {}", rabi));
  const double detuning = 2.0 * rabi / std::tan(0.5 * gamma);
  return Gate1Design{detuning, pulses::gate1_sequence(rabi, detuning)};
}

GateReport run_gate(const PulseSequence& seq, const sim::HamiltonianModel& model, const std::optional<Operator>& target,
                    const RunOptions& options) {
  if (options.initial_state >= model.dim()) throw ModelError("initial state index out of range");
  GateReport r;
  r.model = model.name();
  r.sequence = seq;
  r.gate_time = seq.total_duration();
  r.loop_count = seq.repeats();
  r.initial_state = options.initial_state;
  r.realized = sim::sequence_propagator(seq, model, options.settings);
  r.trajectory = sim::simulate(seq, model, core::StateVector::basis(model.dim(), options.initial_state),
                               options.settings);

  const auto logical = model.logical();
  r.population_transfer = std::norm(r.realized(logical[1], logical[0]));

  if (target) {
    r.target = *target;
    if (target->dim() == model.dim()) {
      r.fidelity = core::gate_fidelity(r.realized, *target);
    } else if (target->dim() == logical.size()) {
      r.fidelity = core::gate_fidelity(sim::subblock(r.realized, logical), *target);
    } else {
      throw ModelError(fmt::format("target dimension {} fits neither the model ({}) nor its logical pair",
                                   target->dim(), model.dim()));
    }
  }

  if (model.dim() > logical.size()) {
    double worst = 0.0;
    for (const auto& psi : r.trajectory.states) {
      for (std::size_t k = 0; k < psi.dim(); ++k) {
        if (std::find(logical.begin(), logical.end(), k) == logical.end()) worst = std::max(worst, psi.population(k));
      }
    }
    r.leakage = worst;
  }

  if (geometry::is_cyclic(r.trajectory)) {
    r.total_phase = geometry::total_phase(r.trajectory);
    r.dyn_phase = geometry::dynamical_phase(r.trajectory);
    r.aa_phase = geometry::aa_phase(r.trajectory);
    r.geom_phase = geometry::wrap_half(*r.aa_phase);
    if (model.dim() == 2) {
      try {
        r.solid_angle = geometry::solid_angle(r.trajectory);
      } catch (const SamplingError& e) {
        r.warnings.emplace_back(e.what());
      }
    }
  } else {
    r.warnings.push_back(fmt::format("trajectory from basis state {} is not cyclic (mismatch {:.3e}); phases omitted",
                                     options.initial_state, geometry::cyclic_mismatch(r.trajectory)));
  }
  return r;
}

LocalFidelity local_phase_fidelity(const Operator& realized, const Operator& target) {
  if (realized.dim() != 4 || target.dim() != 4) throw ModelError("local phase fidelity needs 4x4 operators");
  const Matrix p = realized.matrix() * target.matrix().adjoint();
  const Complex m[4] = {p(0, 0), p(1, 1), p(2, 2), p(3, 3)};
  // |m0 + e^{ia} m1 + e^{ib} m2 + e^{i(a+b)} m3| by alternating exact
  // maximization over a and b, from several starting points.
  double best = -1.0, best_a = 0.0, best_b = 0.0;
  for (int start = 0; start < 8; ++start) {
    double a = 0.0, b = 2.0 * kPi * start / 8.0;
    for (int it = 0; it < 200; ++it) {
      const Complex ea = m[0] + std::exp(kI * b) * m[2];
      const Complex ec = m[1] + std::exp(kI * b) * m[3];
      a = std::arg(ea) - std::arg(ec);
      const Complex fa = m[0] + std::exp(kI * a) * m[1];
      const Complex fc = m[2] + std::exp(kI * a) * m[3];
      b = std::arg(fa) - std::arg(fc);
    }
    const double v = std::abs(m[0] + std::exp(kI * a) * m[1] + std::exp(kI * b) * m[2] + std::exp(kI * (a + b)) * m[3]);
    if (v > best) {
      best = v;
      best_a = a;
      best_b = b;
    }
  }
  Matrix d = Matrix::Zero(4, 4);
  d(0, 0) = 1.0;
  d(1, 1) = std::exp(kI * best_a);
  d(2, 2) = std::exp(kI * best_b);
  d(3, 3) = std::exp(kI * (best_a + best_b));
  // Tr(V^+ D U) = sum_k D_kk (U V^+)_kk
  return LocalFidelity{std::min(1.0, best / 4.0), Operator::unitary(std::move(d))};
}

double conditional_phase(const Operator& u) {
  using namespace models::basis;
  return models::wrap_phase(std::arg(u(kGG, kGG) * u(kEE, kEE) / (u(kGE, kGE) * u(kEG, kEG))));
}

GateReport two_qubit_phase_gate(const models::BiexcitonParams& params, double gamma_tilde, const RunOptions& options) {
  (void)models::build_biexciton_rotating(params);
  const double resonance = models::two_photon_resonance(params.omega0, params.delta);
  const double tol = 1e-12 * std::max(1.0, resonance);
  if (std::abs(params.laser1.frequency - resonance) > tol || std::abs(params.laser2.frequency - resonance) > tol) {
    throw ModelError(fmt::format("two-qubit gate needs both lasers at the two-photon resonance {} rad/fs", resonance));
  }
  if (params.laser1.rabi != params.laser2.rabi) throw ModelError("two-qubit gate needs equal laser Rabi frequencies");
  if (params.validity_ratio() > 0.1) {
    throw ModelError(fmt::format("Omega / delta = {:.3g} > 0.1: outside the perturbative two-photon regime",
                                 params.validity_ratio()));
  }
  const auto eff = models::build_two_photon_effective(params);
  const sim::BiexcitonRotating model(params.omega0, params.delta);
  const auto seq = pulses::gate2_sequence(0.5 * eff.effective_rabi, 0.5 * gamma_tilde,
                                          params.laser1.phase + params.laser2.phase);
  RunOptions opts = options;
  opts.initial_state = models::basis::kGG;
  GateReport r = run_gate(seq, model, target_two_qubit(gamma_tilde), opts);

  const auto local = local_phase_fidelity(r.realized, *r.target);
  r.fidelity = local.fidelity;
  r.conditional_phase = conditional_phase(r.realized);
  using namespace models::basis;
  r.sector_phase = 0.5 * std::arg(r.realized(kEE, kEE) * std::conj(r.realized(kGG, kGG)));

  // (|G> + |E>) (x) (|G> + |E>) / 2
  const core::StateVector plus{0.5, 0.5, 0.5, 0.5};
  const auto out = (local.correction * r.realized).apply(plus);
  r.product_state_fidelity = std::norm(r.target->apply(plus).inner(out));
  return r;
}

PulseSequence raman_loop(const models::RamanParams& params) {
  const auto model = raman_model(params);
  if (params.two_photon_detuning == 0.0) {
    throw ModelError("Raman loop needs a two-photon detuning != 0 (off-resonant rotation gate)");
  }
  const double coupling = raman_coupling(params);
  const double base = raman_base_phase(params);
  std::vector<PulseSegment> segs;
  for (const double phase : {base, base + kPi}) {
    const PulseSegment probe(coupling, phase, params.two_photon_detuning, 1.0);
    const Operator h = models::dressed_effective(model.hamiltonian(probe, 0.0),
                                                 {models::basis::kEPlus, models::basis::kEMinus});
    const auto b = models::bloch_field(h);
    const double field = std::sqrt(b[0] * b[0] + b[1] * b[1] + b[2] * b[2]);
    segs.emplace_back(coupling, phase, params.two_photon_detuning, kPi / (2.0 * field), kPi);
  }
  return PulseSequence(std::move(segs));
}

double measure_gamma_loop(const models::RamanParams& params, const sim::RunSettings& settings) {
  const auto model = raman_model(params);
  const Operator u = sim::sequence_propagator(raman_loop(params), model, settings);
  using namespace models::basis;
  return std::atan2(std::abs(u(kEMinus, kEPlus)), std::abs(u(kEPlus, kEPlus)));
}

double tune_two_photon_detuning(models::RamanParams params, double gamma_loop, const sim::RunSettings& settings) {
  if (!(gamma_loop > 0.0 && gamma_loop < 0.5 * kPi)) {
    throw ModelError(fmt::format("per-loop rotation must lie in (0, pi/2), got {}", gamma_loop));
  }
  const auto model = raman_model(params);
  const double coupling = raman_coupling(params);
  // Dressed prediction falls monotonically from pi at zero detuning.
  double lo = 0.0, hi = std::abs(params.detuning);
  while (dressed_gamma(model, coupling, hi) > gamma_loop) hi *= 2.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (dressed_gamma(model, coupling, mid) > gamma_loop ? lo : hi) = mid;
  }
  // Secant refinement on the simulated loop, which includes switching effects.
  auto measured = [&](double d) {
    params.two_photon_detuning = d;
    return measure_gamma_loop(params, settings) - gamma_loop;
  };
  double x0 = 0.5 * (lo + hi), x1 = 1.01 * x0;
  double f0 = measured(x0), f1 = measured(x1);
  for (int it = 0; it < 20 && std::abs(f1) > 1e-9 && f1 != f0; ++it) {
    const double x2 = x1 - f1 * (x1 - x0) / (f1 - f0);
    x0 = x1;
    f0 = f1;
    x1 = x2;
    f1 = measured(x1);
  }
  return x1;
}

unsigned loop_count(double angle, double gamma_loop) {
  if (!(gamma_loop >= 1e-4)) {
    throw ModelError(fmt::format("per-loop rotation {:.3e} rad < 1e-4: iteration impractical, increase Omega^2/Delta",
                                 gamma_loop));
  }
  return static_cast<unsigned>(std::ceil(angle / gamma_loop));
}

GateReport raman_gate(const models::RamanParams& params, const RamanTarget& target, const RamanOptions& options) {
  check_raman_regime(params);
  RunOptions run_opts;
  run_opts.settings = options.settings;

  if (target.kind == RamanTarget::Kind::Phase) {
    const sim::RamanResonantPlus model;
    const auto seq = pulses::gate2_sequence(params.rabi_plus, 0.5 * (target.gamma_tilde - kPi));
    Matrix t = Matrix::Identity(2, 2);
    t(0, 0) = std::exp(kI * target.gamma_tilde);
    GateReport r = run_gate(seq, model, Operator::unitary(std::move(t)), run_opts);
    r.ground_phase = std::arg(r.realized(models::basis::kGround, models::basis::kGround));
    return r;
  }

  models::RamanParams p = params;
  if (options.gamma_loop_target) p.two_photon_detuning = tune_two_photon_detuning(p, *options.gamma_loop_target, options.settings);
  const auto model = raman_model(p);
  const double gamma = measure_gamma_loop(p, options.settings);
  const unsigned n = loop_count(0.5 * kPi, gamma);
  GateReport r = run_gate(pulses::repeat_sequence(raman_loop(p), n), model, target_gate1(0.5 * kPi), run_opts);
  r.gamma_loop = gamma;
  return r;
}

}  // namespace qdgeo::gates
