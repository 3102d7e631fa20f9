// Geometric gate synthesis and verification: the off-resonant rotation gate,
// the resonant selective phase gate, the biexciton conditional phase gate
// and the Raman-coupled polarization gates.

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "qdgeo/core.hpp"
#include "qdgeo/geometry.hpp"
#include "qdgeo/models.hpp"
#include "qdgeo/pulses.hpp"
#include "qdgeo/simulation.hpp"

namespace qdgeo::gates {

using core::Operator;
using pulses::PulseSequence;

/// Real rotation with columns (cos g, -sin g) and (sin g, cos g).
Operator target_gate1(double gamma);
/// diag(e^{i g}, e^{-i g}).
Operator target_gate2(double gamma_tilde);
/// Conditional phase target on (|GG>, |GE>, |EG>, |EE>):
/// diag(e^{-i g}, 1, 1, e^{i g}).
Operator target_two_qubit(double gamma_tilde);

struct Gate1Design {
  double detuning;
  PulseSequence sequence;
};

/// Detuning 2 rabi / tan(gamma / 2) and the matching gate-1 sequence.
/// Requires gamma in (0, pi) and rabi > 0.
Gate1Design synthesize_gate1(double gamma, double rabi);

struct GateReport {
  std::string model;
  Operator realized;
  std::optional<Operator> target;
  std::optional<double> fidelity;
  // Phases of the trajectory started in basis state `initial_state`; set only
  // when that trajectory is cyclic. geom_phase is the A-A phase reduced
  // modulo pi, the part that a phase gate adds to a logical state.
  std::optional<double> total_phase;
  std::optional<double> dyn_phase;
  std::optional<double> aa_phase;
  std::optional<double> geom_phase;
  std::optional<double> solid_angle;
  std::optional<PulseSequence> sequence;
  double gate_time = 0.0;
  unsigned loop_count = 1;
  std::size_t initial_state = 0;
  geometry::Trajectory trajectory;
  // |<1|U|0>|^2 on the logical pair.
  double population_transfer = 0.0;
  // Largest population of any single non-logical level along the trajectory.
  std::optional<double> leakage;
  std::optional<double> gamma_loop;
  std::optional<double> conditional_phase;
  std::optional<double> sector_phase;
  std::optional<double> product_state_fidelity;
  std::optional<double> ground_phase;
  std::vector<std::string> warnings;
};

struct RunOptions {
  sim::RunSettings settings;
  std::size_t initial_state = 0;  // basis index of the recorded trajectory
};

/// Integrates every basis state through the sequence to assemble the
/// realized propagator and records the trajectory of `initial_state`. A
/// target of the model dimension is compared directly; a 2x2 target is
/// compared on the model's logical pair.
GateReport run_gate(const PulseSequence& seq, const sim::HamiltonianModel& model,
                    const std::optional<Operator>& target = std::nullopt, const RunOptions& options = {});

/// Fidelity maximized over local z rotations of both qubits, and the
/// correction diag(1, e^{ia}, e^{ib}, e^{i(a+b)}) that achieves it.
struct LocalFidelity {
  double fidelity;
  Operator correction;
};
LocalFidelity local_phase_fidelity(const Operator& realized, const Operator& target);

/// Conditional phase arg(U_GG U_EE / (U_GE U_EG)) of the diagonal.
double conditional_phase(const Operator& u);

/// Two-photon selective phase gate on the |GG> <-> |EE> pair. Requires both
/// lasers at two-photon resonance with equal Rabi frequency and
/// Omega / delta <= 0.1. The recorded trajectory starts in |GG>.
GateReport two_qubit_phase_gate(const models::BiexcitonParams& params, double gamma_tilde,
                                const RunOptions& options = {});

struct RamanTarget {
  enum class Kind { Not, Phase };
  Kind kind = Kind::Not;
  double gamma_tilde = 0.0;  // phase target only
};

struct RamanOptions {
  // NOT target: tune the two-photon detuning until the measured per-loop
  // rotation equals this value. Unset: use params.two_photon_detuning.
  std::optional<double> gamma_loop_target;
  sim::RunSettings settings;
};

/// One off-resonant loop (phases base, base + pi) on the full Raman model,
/// with each pulse timed as a pi rotation of the exact dressed field.
PulseSequence raman_loop(const models::RamanParams& params);

/// Per-loop rotation angle atan(|U10| / |U00|) of the logical block.
double measure_gamma_loop(const models::RamanParams& params, const sim::RunSettings& settings = {});

/// Two-photon detuning whose measured per-loop rotation equals `gamma_loop`.
double tune_two_photon_detuning(models::RamanParams params, double gamma_loop,
                                const sim::RunSettings& settings = {});

/// ceil(angle / gamma_loop); throws ModelError when gamma_loop < 1e-4.
unsigned loop_count(double angle, double gamma_loop);

/// NOT: iterates raman_loop until the accumulated rotation reaches pi/2 and
/// runs the whole sequence on the three-level model. Phase: tunes the +
/// laser to |G> <-> |E+>, switches the - laser off and applies the resonant
/// gate-2 recipe so that |E+> acquires e^{i gamma_tilde}.
GateReport raman_gate(const models::RamanParams& params, const RamanTarget& target, const RamanOptions& options = {});

}  // namespace qdgeo::gates
