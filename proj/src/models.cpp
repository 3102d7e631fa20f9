#include "qdgeo/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

namespace qdgeo::models {

using core::Matrix;
using core::Vector;

namespace {

constexpr double kPi = std::numbers::pi;

Matrix zeros(Eigen::Index d) { return Matrix::Zero(d, d); }

// Raising operator |E><G| of one dot in the per-dot basis (G, E).
Operator dot_raise() { return Operator(2, {{0, 0}, {1, 0}}); }

}  // namespace

double wrap_phase(double phi) {
  double w = std::remainder(phi, 2.0 * kPi);  // [-pi, pi]
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

void TwoLevelParams::validate() const {
  if (!(omega0 > 0.0)) throw ModelError(fmt::format("omega0 must be positive, got {}", omega0));
  if (!(rabi >= 0.0)) throw ModelError(fmt::format("Rabi frequency must be >= 0, got {}", rabi));
  if (!std::isfinite(omegaL) || !std::isfinite(phase)) throw ModelError("non-finite laser parameter");
}

Operator build_rotating_two_level(double rabi, double phase, double detuning) {
  if (!(rabi >= 0.0)) throw ModelError(fmt::format("Rabi frequency must be >= 0, got {}", rabi));
  const double bx = rabi * std::cos(phase);
  const double by = rabi * std::sin(phase);
  const double bz = 0.5 * detuning;
  Matrix m(2, 2);
  m << bz, Complex(bx, -by), Complex(bx, by), -bz;
  return Operator::hermitian(std::move(m));
}

Vec3 bloch_field(const Operator& h) {
  if (h.dim() != 2) throw ModelError("bloch_field needs a 2x2 operator");
  return {0.5 * (h * core::sigma_x()).trace().real(), 0.5 * (h * core::sigma_y()).trace().real(),
          0.5 * (h * core::sigma_z()).trace().real()};
}

HamiltonianFn build_lab_two_level(const TwoLevelParams& params) {
  params.validate();
  const TwoLevelParams p = params;
  return [p](double t) {
    const Complex c = -p.rabi * std::exp(-kI * (p.omegaL * t + p.phase));
    Matrix m(2, 2);
    m << 0.5 * p.omega0, c, std::conj(c), -0.5 * p.omega0;
    return Operator::hermitian(std::move(m));
  };
}

StateVector frame_rotate(const StateVector& psi_lab, double omegaL, double t) {
  if (psi_lab.dim() != 2) throw ModelError("frame_rotate needs a two-level state");
  Vector v(2);
  v << std::exp(kI * (0.5 * omegaL * t)) * psi_lab[0], std::exp(-kI * (0.5 * omegaL * t)) * psi_lab[1];
  return StateVector(std::move(v));
}

StateVector frame_unrotate(const StateVector& psi_rot, double omegaL, double t) {
  return frame_rotate(psi_rot, -omegaL, t);
}

// ---------------------------------------------------------------------------

BiexcitonParams BiexcitonParams::resonant(double omega0, double delta, double rabi, double phase1,
                                          double phase2) {
  const double w = two_photon_resonance(omega0, delta);
  return BiexcitonParams{omega0, delta, Laser{rabi, phase1, w}, Laser{rabi, phase2, w}};
}

double BiexcitonParams::validity_ratio() const {
  return std::max(laser1.rabi, laser2.rabi) / delta;
}

double BiexcitonParams::two_photon_detuning() const {
  return 2.0 * omega0 + delta - (laser1.frequency + laser2.frequency);
}

double two_photon_resonance(double omega0, double delta) { return omega0 + 0.5 * delta; }

namespace {

void validate_biexciton(const BiexcitonParams& p) {
  if (p.delta == 0.0) {
    throw ModelError(
        "biexcitonic shift delta = 0: singular shift, two-photon and single-photon "
        "resonances coincide");
  }
  if (!(p.delta > 0.0)) throw ModelError(fmt::format("biexcitonic shift must be positive, got {}", p.delta));
  if (!(p.omega0 > 0.0)) throw ModelError(fmt::format("omega0 must be positive, got {}", p.omega0));
  if (!(p.laser1.rabi >= 0.0) || !(p.laser2.rabi >= 0.0)) {
    throw ModelError("laser Rabi frequencies must be >= 0");
  }
}

// Coupling part for given complex drive amplitudes of each dot.
Matrix biexciton_coupling(Complex drive1, Complex drive2) {
  const Operator id = Operator::identity(2);
  const Matrix up1 = core::tensor(dot_raise(), id).matrix();
  const Matrix up2 = core::tensor(id, dot_raise()).matrix();
  const Matrix c = drive1 * up1 + drive2 * up2;
  return c + c.adjoint();
}

}  // namespace

HamiltonianFn build_biexciton_full(const BiexcitonParams& params) {
  validate_biexciton(params);
  const BiexcitonParams p = params;
  Matrix h0 = zeros(4);
  h0(basis::kGG, basis::kGG) = -p.omega0;
  h0(basis::kEE, basis::kEE) = p.omega0 + p.delta;
  return [p, h0](double t) {
    const Complex d1 = -0.5 * p.laser1.rabi * std::exp(-kI * (p.laser1.frequency * t + p.laser1.phase));
    const Complex d2 = -0.5 * p.laser2.rabi * std::exp(-kI * (p.laser2.frequency * t + p.laser2.phase));
    return Operator::hermitian(h0 + biexciton_coupling(d1, d2));
  };
}

Operator build_biexciton_rotating(const BiexcitonParams& params) {
  validate_biexciton(params);
  if (params.laser1.frequency != params.laser2.frequency) {
    throw ModelError("rotating biexciton frame needs equal laser frequencies");
  }
  const double w = params.laser1.frequency;
  Matrix h = zeros(4);
  h(basis::kGE, basis::kGE) = params.omega0 - w;
  h(basis::kEG, basis::kEG) = params.omega0 - w;
  h(basis::kEE, basis::kEE) = 2.0 * params.omega0 + params.delta - 2.0 * w;
  h += biexciton_coupling(-0.5 * params.laser1.rabi * std::exp(-kI * params.laser1.phase),
                          -0.5 * params.laser2.rabi * std::exp(-kI * params.laser2.phase));
  return Operator::hermitian(std::move(h));
}

Operator biexciton_frame(const BiexcitonParams& params, double t) {
  // psi_rot = e^{-i omega0 t} e^{i w N t} psi_lab, N = exciton number.
  const double w = params.laser1.frequency;
  Matrix f = zeros(4);
  const std::array<double, 4> n{0.0, 1.0, 1.0, 2.0};
  for (Eigen::Index k = 0; k < 4; ++k) {
    f(k, k) = std::exp(kI * ((w * n[static_cast<std::size_t>(k)] - params.omega0) * t));
  }
  return Operator::unitary(std::move(f));
}

EffectiveModel build_two_photon_effective(const BiexcitonParams& params) {
  validate_biexciton(params);
  const double omega_eff = 2.0 * params.laser1.rabi * params.laser2.rabi / params.delta;
  const double total_phase = params.laser1.phase + params.laser2.phase;
  EffectiveModel out{build_rotating_two_level(0.5 * omega_eff, total_phase, params.two_photon_detuning()),
                     omega_eff, omega_eff, params.validity_ratio(), std::nullopt};
  if (out.validity_ratio > 0.1) {
    out.warning = fmt::format("Omega/delta = {:.3g} > 0.1: two-photon effective model outside its regime",
                              out.validity_ratio);
  }
  return out;
}

// ---------------------------------------------------------------------------

void RamanParams::validate() const {
  if (detuning == 0.0) throw ModelError("Raman detuning Delta = 0: singular detuning");
  if (!std::isfinite(detuning)) throw ModelError("Raman detuning must be finite");
  if (!(rabi_plus >= 0.0) || !(rabi_minus >= 0.0)) throw ModelError("Raman Rabi frequencies must be >= 0");
  if (!std::isfinite(two_photon_detuning) || !std::isfinite(phase_plus) || !std::isfinite(phase_minus)) {
    throw ModelError("non-finite Raman parameter");
  }
}

double RamanParams::validity_ratio() const {
  return std::max(rabi_plus, rabi_minus) / std::abs(detuning);
}

Operator build_raman_three_level(const RamanParams& params) {
  params.validate();
  Matrix h = zeros(3);
  h(basis::kEMinus, basis::kEMinus) = -params.two_photon_detuning;
  h(basis::kGround, basis::kGround) = params.detuning;
  h(basis::kEPlus, basis::kGround) = -params.rabi_plus * std::exp(-kI * params.phase_plus);
  h(basis::kEMinus, basis::kGround) = -params.rabi_minus * std::exp(-kI * params.phase_minus);
  h(basis::kGround, basis::kEPlus) = std::conj(h(basis::kEPlus, basis::kGround));
  h(basis::kGround, basis::kEMinus) = std::conj(h(basis::kEMinus, basis::kGround));
  return Operator::hermitian(std::move(h));
}

EffectiveModel build_raman_effective(const RamanParams& params) {
  params.validate();
  const double coupling = params.rabi_plus * params.rabi_minus / std::abs(params.detuning);
  // Eliminating |G> above the logical pair flips the sign of the coupling,
  // which appears as a pi offset of the B-phase.
  const double sign_phase = params.detuning > 0.0 ? kPi : 0.0;
  EffectiveModel out{
      build_rotating_two_level(coupling, wrap_phase(params.phase_plus - params.phase_minus + sign_phase),
                               params.two_photon_detuning),
      coupling, 2.0 * coupling, params.validity_ratio(), std::nullopt};
  if (out.validity_ratio > 0.2) {
    out.warning = fmt::format("Omega/Delta = {:.3g} > 0.2: Raman effective model outside its regime",
                              out.validity_ratio);
  }
  return out;
}

Operator dressed_effective(const Operator& h, const std::vector<std::size_t>& logical) {
  const auto d = static_cast<Eigen::Index>(h.dim());
  const auto m = static_cast<Eigen::Index>(logical.size());
  if (m == 0 || m > d) throw ModelError("dressed_effective: bad logical subspace");
  for (const std::size_t i : logical) {
    if (i >= h.dim()) throw ModelError("dressed_effective: logical index out of range");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(Matrix(0.5 * (h.matrix() + h.matrix().adjoint())));
  if (es.info() != Eigen::Success) throw NumericalError("dressed_effective: eigensolver failed");
  const Matrix& v = es.eigenvectors();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  auto weight = [&](Eigen::Index k) {
    double w = 0.0;
    for (const std::size_t i : logical) w += std::norm(v(static_cast<Eigen::Index>(i), k));
    return w;
  };
  std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return weight(a) > weight(b); });

  Matrix a(m, m);
  Vector lambda(m);
  for (Eigen::Index c = 0; c < m; ++c) {
    const Eigen::Index k = order[static_cast<std::size_t>(c)];
    lambda(c) = es.eigenvalues()(k);
    for (Eigen::Index r = 0; r < m; ++r) a(r, c) = v(static_cast<Eigen::Index>(logical[static_cast<std::size_t>(r)]), k);
  }
  // Loewdin orthonormalization W = A (A^+ A)^{-1/2}.
  Eigen::SelfAdjointEigenSolver<Matrix> overlap(Matrix(a.adjoint() * a));
  if (overlap.info() != Eigen::Success || overlap.eigenvalues().minCoeff() < 1e-12) {
    throw NumericalError("dressed_effective: logical subspace is not well represented");
  }
  Vector inv_sqrt(m);
  for (Eigen::Index k = 0; k < m; ++k) inv_sqrt(k) = 1.0 / std::sqrt(overlap.eigenvalues()(k));
  const Matrix s = overlap.eigenvectors() * inv_sqrt.asDiagonal() * overlap.eigenvectors().adjoint();
  const Matrix w = a * s;
  return Operator::hermitian(Matrix(0.5 * (w * lambda.asDiagonal() * w.adjoint() +
                                           (w * lambda.asDiagonal() * w.adjoint()).adjoint())));
}

}  // namespace qdgeo::models
