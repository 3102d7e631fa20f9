// Hamiltonian models driven by pulse sequences, and the segment-wise RK4
// runner that records trajectories and assembles propagators.
//
// Every model takes the effective two-level drive of a PulseSegment
// (B = (rabi cos phase, rabi sin phase, detuning / 2)) and realizes it on
// its own levels.

#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qdgeo/core.hpp"
#include "qdgeo/geometry.hpp"
#include "qdgeo/models.hpp"
#include "qdgeo/pulses.hpp"

namespace qdgeo::sim {

using core::Operator;
using core::StateVector;
using pulses::PulseSegment;
using pulses::PulseSequence;

class HamiltonianModel {
 public:
  virtual ~HamiltonianModel() = default;
  virtual std::size_t dim() const = 0;
  virtual std::string name() const = 0;
  /// Basis indices of the two logical states, in the order (|0>, |1>).
  virtual std::vector<std::size_t> logical() const = 0;
  /// Hamiltonian while `segment` is active at absolute time t (fs).
  virtual Operator hamiltonian(const PulseSegment& segment, double t) const = 0;
  /// True when hamiltonian() depends on t within a segment.
  virtual bool time_dependent() const { return false; }
};

/// H = B . sigma on (|E>, |G>).
class RotatingTwoLevel : public HamiltonianModel {
 public:
  std::size_t dim() const override { return 2; }
  std::string name() const override { return "two_level"; }
  std::vector<std::size_t> logical() const override { return {0, 1}; }
  Operator hamiltonian(const PulseSegment& s, double t) const override;
};

/// Lab-frame two-level dot: laser at omega0 - detuning with lab phase
/// (segment phase - pi), so the rotating-frame phase equals the segment phase.
class LabTwoLevel : public HamiltonianModel {
 public:
  explicit LabTwoLevel(double omega0);
  std::size_t dim() const override { return 2; }
  std::string name() const override { return "two_level_lab"; }
  std::vector<std::size_t> logical() const override { return {0, 1}; }
  Operator hamiltonian(const PulseSegment& s, double t) const override;
  bool time_dependent() const override { return true; }
  double omega0() const { return omega0_; }

 private:
  double omega0_;
};

/// Full Raman model on (|E+>, |E->, |G>). Laser amplitudes are chosen so the
/// adiabatically eliminated coupling equals the segment Rabi frequency:
/// Omega+ Omega- / |Delta| = rabi with Omega- / Omega+ = ratio. The + laser
/// carries the segment phase (minus pi for Delta > 0); the segment detuning
/// is the two-photon detuning.
class RamanThreeLevel : public HamiltonianModel {
 public:
  RamanThreeLevel(double detuning, double ratio = 1.0);
  std::size_t dim() const override { return 3; }
  std::string name() const override { return "raman"; }
  std::vector<std::size_t> logical() const override { return {0, 1}; }
  Operator hamiltonian(const PulseSegment& s, double t) const override;
  models::RamanParams params_for(const PulseSegment& s) const;
  double detuning() const { return detuning_; }
  double ratio() const { return ratio_; }

 private:
  double detuning_;
  double ratio_;
};

/// Adiabatically eliminated Raman model on (|E+>, |E->).
class RamanEffective : public HamiltonianModel {
 public:
  RamanEffective(double detuning, double ratio = 1.0);
  std::size_t dim() const override { return 2; }
  std::string name() const override { return "raman_effective"; }
  std::vector<std::size_t> logical() const override { return {0, 1}; }
  Operator hamiltonian(const PulseSegment& s, double t) const override;

 private:
  RamanThreeLevel full_;
};

/// Raman level scheme with the + laser tuned to |G> <-> |E+> and the - laser
/// off: B . sigma on (|E+>, |G>) while |E-> is a spectator.
class RamanResonantPlus : public HamiltonianModel {
 public:
  std::size_t dim() const override { return 3; }
  std::string name() const override { return "raman_resonant_plus"; }
  std::vector<std::size_t> logical() const override { return {0, 1}; }
  Operator hamiltonian(const PulseSegment& s, double t) const override;
};

/// Two dots with biexcitonic shift in the two-photon rotating frame. Both
/// lasers share the Rabi frequency sqrt(rabi * delta), so the effective
/// |GG> <-> |EE> coupling (Omega_eff / 2) equals the segment Rabi frequency;
/// the segment phase is split equally between the lasers; the segment
/// detuning is the two-photon detuning.
class BiexcitonRotating : public HamiltonianModel {
 public:
  BiexcitonRotating(double omega0, double delta);
  std::size_t dim() const override { return 4; }
  std::string name() const override { return "biexciton"; }
  std::vector<std::size_t> logical() const override {
    return {models::basis::kEE, models::basis::kGG};
  }
  Operator hamiltonian(const PulseSegment& s, double t) const override;
  models::BiexcitonParams params_for(const PulseSegment& s) const;
  double omega0() const { return omega0_; }
  double delta() const { return delta_; }

 private:
  double omega0_;
  double delta_;
};

/// Two-photon effective model on (|EE>, |GG>).
class TwoPhotonEffective : public HamiltonianModel {
 public:
  TwoPhotonEffective(double omega0, double delta);
  std::size_t dim() const override { return 2; }
  std::string name() const override { return "two_photon_effective"; }
  std::vector<std::size_t> logical() const override { return {0, 1}; }
  Operator hamiltonian(const PulseSegment& s, double t) const override;

 private:
  BiexcitonRotating full_;
};

struct RunSettings {
  // Fixed RK4 step. When unset a segment uses at least steps_per_segment
  // steps, and more if needed to keep ||H|| dt <= max_phase_step.
  std::optional<double> dt;
  std::size_t steps_per_segment = 2000;
  double max_phase_step = 0.005;
  // Trajectory samples recorded per segment (segment ends always recorded).
  std::size_t samples_per_segment = 200;
};

/// Integrates `psi0` through the sequence, recording a trajectory.
geometry::Trajectory simulate(const PulseSequence& seq, const HamiltonianModel& model, const StateVector& psi0,
                              const RunSettings& settings = {});

/// Final state only.
StateVector propagate(const PulseSequence& seq, const HamiltonianModel& model, const StateVector& psi0,
                      const RunSettings& settings = {});

/// Realized propagator: column j is the evolved basis state j.
Operator sequence_propagator(const PulseSequence& seq, const HamiltonianModel& model,
                             const RunSettings& settings = {});

/// Exact product of segment propagators for time-independent models.
Operator exact_propagator(const PulseSequence& seq, const HamiltonianModel& model);

/// Restriction of `u` to the given basis indices.
Operator subblock(const Operator& u, const std::vector<std::size_t>& indices);

}  // namespace qdgeo::sim
