#include "qdgeo/pulses.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

#include "qdgeo/core.hpp"

namespace qdgeo::pulses {

PulseSegment::PulseSegment(double rabi, double phase, double detuning, double duration)
    : PulseSegment(rabi, phase, detuning, duration,
                   2.0 * std::hypot(rabi, 0.5 * detuning) * duration) {}

PulseSegment::PulseSegment(double rabi, double phase, double detuning, double duration,
                           double rotation_angle)
    : rabi_(rabi), phase_(phase), detuning_(detuning), duration_(duration), rotation_angle_(rotation_angle) {
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw ModelError(fmt::format("segment duration must be positive, got {}", duration));
  }
  if (!(rabi >= 0.0) || !std::isfinite(rabi)) {
    throw ModelError(fmt::format("segment Rabi frequency must be >= 0, got {}", rabi));
  }
  if (!std::isfinite(phase) || !std::isfinite(detuning)) throw ModelError("non-finite segment parameter");
}

double PulseSegment::field() const { return std::hypot(rabi_, 0.5 * detuning_); }

PulseSequence::PulseSequence(std::vector<PulseSegment> segments, unsigned repeats)
    : segments_(std::move(segments)), repeats_(repeats) {
  if (segments_.empty()) throw ModelError("pulse sequence needs at least one segment");
  if (repeats_ == 0) throw ModelError("pulse sequence repeat count must be >= 1");
}

double PulseSequence::loop_duration() const {
  double total = 0.0;
  for (const auto& s : segments_) total += s.duration();
  return total;
}

PulseSegment make_pi_pulse(double rabi, double phase, double detuning) {
  const double b = std::hypot(rabi, 0.5 * detuning);
  if (b == 0.0) throw ModelError("pi-pulse with |B| = 0: rotation axis undefined");
  const double duration = std::numbers::pi / (2.0 * b);
  return PulseSegment(rabi, phase, detuning, duration, std::numbers::pi);
}

PulseSequence gate1_sequence(double rabi, double detuning, double base_phase) {
  if (detuning == 0.0) {
    throw ModelError("gate 1 needs an off-resonant laser (detuning != 0); use gate2_sequence for resonant driving");
  }
  return PulseSequence({make_pi_pulse(rabi, base_phase, detuning),
                        make_pi_pulse(rabi, base_phase + std::numbers::pi, detuning)});
}

PulseSequence gate2_sequence(double rabi, double phi0, double base_phase) {
  if (!(rabi > 0.0)) throw ModelError(fmt::format("gate 2 needs a positive Rabi frequency, got {}", rabi));
  return PulseSequence({make_pi_pulse(rabi, base_phase + phi0, 0.0), make_pi_pulse(rabi, base_phase - phi0, 0.0)});
}

PulseSequence repeat_sequence(const PulseSequence& seq, unsigned n) {
  if (n == 0) throw ModelError("repeat count must be >= 1");
  return PulseSequence(seq.segments(), seq.repeats() * n);
}

}  // namespace qdgeo::pulses
