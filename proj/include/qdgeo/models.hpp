// Hamiltonian builders for the exciton qubit schemes.
//
// Basis orders (fixed; every matrix literal and CSV column depends on them):
//   two-level        (|E>, |G>)                 sigma_z = diag(1, -1)
//   biexciton        (|GG>, |GE>, |EG>, |EE>)   first letter = dot 1
//   two-photon eff.  (|EE>, |GG>)
//   Raman            (|E+>, |E->, |G>)
//   Raman eff.       (|E+>, |E->)
//
// Rotating-frame two-level models are written as H = B . sigma with
// B = (Omega cos phi, Omega sin phi, detuning / 2). The lab-frame coupling
// carries an explicit minus sign, -[Omega e^{-i(wL t + phi)} |E><G| + h.c.],
// so a lab phase phi corresponds to the rotating-frame phase phi + pi.

#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "qdgeo/core.hpp"

namespace qdgeo::models {

using core::HamiltonianFn;
using core::Operator;
using core::StateVector;

namespace basis {
inline constexpr std::size_t kE = 0, kG = 1;
inline constexpr std::size_t kGG = 0, kGE = 1, kEG = 2, kEE = 3;
inline constexpr std::size_t kEffEE = 0, kEffGG = 1;
inline constexpr std::size_t kEPlus = 0, kEMinus = 1, kGround = 2;
}  // namespace basis

/// Wraps an angle to (-pi, pi].
double wrap_phase(double phi);

using Vec3 = std::array<double, 3>;

// ---------------------------------------------------------------------------
// Two-level exciton qubit

struct TwoLevelParams {
  double omega0 = 0.0;  // transition angular frequency
  double omegaL = 0.0;  // laser angular frequency
  double rabi = 0.0;    // Omega >= 0
  double phase = 0.0;   // lab-frame phase, wrapped to (-pi, pi]

  void validate() const;
};

/// B . sigma with B = (rabi cos phase, rabi sin phase, detuning / 2) where
/// detuning = omega0 - omegaL.
Operator build_rotating_two_level(double rabi, double phase, double detuning);

/// B_i = Tr(H sigma_i) / 2 for a 2x2 hermitian H.
Vec3 bloch_field(const Operator& h);

/// H0 + H_int(t) with H0 = diag(omega0/2, -omega0/2).
HamiltonianFn build_lab_two_level(const TwoLevelParams& params);

/// Lab-frame amplitudes to the frame co-rotating with the laser:
/// diag(e^{+i wL t/2}, e^{-i wL t/2}).
StateVector frame_rotate(const StateVector& psi_lab, double omegaL, double t);
/// Inverse of frame_rotate.
StateVector frame_unrotate(const StateVector& psi_rot, double omegaL, double t);

// ---------------------------------------------------------------------------
// Two coupled dots with biexcitonic shift

struct Laser {
  double rabi = 0.0;       // single-exciton Rabi frequency (population flips at this rate)
  double phase = 0.0;      // rad
  double frequency = 0.0;  // rad/fs
};

/// Laser i drives the G <-> E transition of dot i. Couplings use the
/// Rabi-frequency convention: matrix element -(rabi/2) e^{-i(w t + phase)}.
struct BiexcitonParams {
  double omega0 = 0.0;  // single-dot transition frequency
  double delta = 0.0;   // biexcitonic shift
  Laser laser1;
  Laser laser2;

  /// Both lasers at the two-photon resonance with equal Rabi frequency.
  static BiexcitonParams resonant(double omega0, double delta, double rabi,
                                  double phase1 = 0.0, double phase2 = 0.0);

  /// max(rabi1, rabi2) / delta
  double validity_ratio() const;
  /// |GG> -> |EE> transition energy minus the sum of laser frequencies
  /// (same sign convention as omega0 - omegaL).
  double two_photon_detuning() const;
};

/// Frequency each laser needs for |GG> <-> |EE> two-photon resonance,
/// half the |GG> -> |EE> gap of H0: omega0 + delta / 2.
double two_photon_resonance(double omega0, double delta);

/// Lab-frame 4x4 Hamiltonian H0 + sum of single-photon couplings with
/// H0 = diag(-omega0, 0, 0, omega0 + delta). Throws ModelError when delta <= 0.
HamiltonianFn build_biexciton_full(const BiexcitonParams& params);

/// Same model in the frame rotating at the common laser frequency, shifted so
/// that |GG> sits at zero energy. Requires equal laser frequencies.
Operator build_biexciton_rotating(const BiexcitonParams& params);

/// Diagonal map taking lab-frame amplitudes into the frame of
/// build_biexciton_rotating at time t.
Operator biexciton_frame(const BiexcitonParams& params, double t);

struct EffectiveModel {
  Operator hamiltonian;
  // Effective Rabi frequency in the convention of the parent model: the
  // coupling magnitude for the Raman pair (as in H = B . sigma), the
  // population flip rate for the two-photon model.
  double effective_rabi = 0.0;
  // Angular frequency of the resonant population oscillation.
  double population_frequency = 0.0;
  double validity_ratio = 0.0;
  std::optional<std::string> warning;
};

/// Two-photon effective model on (|EE>, |GG>): coupling (Omega_eff / 2)
/// e^{-i(phi1 + phi2)} with Omega_eff = 2 Omega1 Omega2 / delta, plus half the
/// two-photon detuning on sigma_z. Warns when Omega/delta > 0.1.
EffectiveModel build_two_photon_effective(const BiexcitonParams& params);

// ---------------------------------------------------------------------------
// Polarization-encoded exciton (Raman coupling through |G>)

struct RamanParams {
  double rabi_plus = 0.0;
  double rabi_minus = 0.0;
  double detuning = 0.0;             // Delta: |G> sits at +Delta in the laser frame
  double two_photon_detuning = 0.0;  // |E-> sits at -two_photon_detuning
  double phase_plus = 0.0;
  double phase_minus = 0.0;

  void validate() const;
  /// max(Omega+, Omega-) / |Delta|
  double validity_ratio() const;
};

/// 3x3 rotating-frame Hamiltonian on (|E+>, |E->, |G>): diagonal
/// (0, -two_photon_detuning, Delta), couplings -Omega_pm e^{-i phi_pm} between
/// |E+-> and |G>, no direct |E+> <-> |E-> element.
Operator build_raman_three_level(const RamanParams& params);

/// Adiabatically eliminated model on (|E+>, |E->): coupling magnitude
/// Omega+ Omega- / |Delta| with B-phase phi+ - phi- (+ pi for Delta > 0) and
/// B_z = two_photon_detuning / 2. Light shifts are dropped; they are equal
/// for equal Rabi frequencies, and dressed_effective keeps them exactly.
/// Warns when the validity ratio exceeds 0.2.
EffectiveModel build_raman_effective(const RamanParams& params);

/// Exact effective Hamiltonian of `h` on the span of `logical` basis states:
/// the eigenvectors with the largest weight on that span are projected onto
/// it and symmetrically orthonormalized.
Operator dressed_effective(const Operator& h, const std::vector<std::size_t>& logical);

}  // namespace qdgeo::models
