// Piecewise-constant pulse segments and sequences.
//
// A segment describes the drive in effective two-level terms,
// H = B . sigma with B = (rabi cos phase, rabi sin phase, detuning / 2), for
// `duration` femtoseconds. Each HamiltonianModel realizes that drive on its
// own physical levels. A "pi-pulse" rotates the Bloch vector by pi, i.e.
// 2 |B| T = pi.

#pragma once

#include <vector>

namespace qdgeo::pulses {

class PulseSegment {
 public:
  /// Rotation angle is derived from the segment field: 2 |B| duration.
  PulseSegment(double rabi, double phase, double detuning, double duration);
  /// Segment timed against a different (e.g. dressed) field; the caller
  /// supplies the resulting rotation angle.
  PulseSegment(double rabi, double phase, double detuning, double duration, double rotation_angle);

  double rabi() const { return rabi_; }
  double phase() const { return phase_; }
  double detuning() const { return detuning_; }
  double duration() const { return duration_; }
  double rotation_angle() const { return rotation_angle_; }
  /// |B| = sqrt(rabi^2 + (detuning/2)^2)
  double field() const;
  /// False for pure z rotations (rabi = 0), which move no population.
  bool transfers_population() const { return rabi_ > 0.0; }

 private:
  double rabi_;
  double phase_;
  double detuning_;
  double duration_;
  double rotation_angle_;
};

class PulseSequence {
 public:
  explicit PulseSequence(std::vector<PulseSegment> segments, unsigned repeats = 1);

  const std::vector<PulseSegment>& segments() const { return segments_; }
  unsigned repeats() const { return repeats_; }
  double loop_duration() const;
  double total_duration() const { return repeats_ * loop_duration(); }

 private:
  std::vector<PulseSegment> segments_;
  unsigned repeats_;
};

/// Segment of duration pi / (2 |B|). Throws ModelError when |B| = 0.
PulseSegment make_pi_pulse(double rabi, double phase, double detuning);

/// Off-resonant rotation gate: two pi-pulses with phases (base, base + pi).
/// Throws ModelError for zero detuning (use gate2_sequence).
PulseSequence gate1_sequence(double rabi, double detuning, double base_phase = 0.0);

/// Resonant selective phase gate: two pi-pulses with phases
/// (base + phi0, base - phi0).
PulseSequence gate2_sequence(double rabi, double phi0, double base_phase = 0.0);

/// Multiplies the repeat count by n >= 1.
PulseSequence repeat_sequence(const PulseSequence& seq, unsigned n);

}  // namespace qdgeo::pulses
