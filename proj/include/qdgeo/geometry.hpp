// Bloch-sphere trajectories and the phases of cyclic evolutions.
//
// Sign conventions: the dynamical phase is -int <H> dt; the total phase is
// arg <psi(0)|psi(T)>; the Aharonov-Anandan (geometric) phase is their
// difference. A loop traversed counterclockwise about its outward normal has
// positive solid angle S and geometric phase -S/2 (mod 2 pi).

#pragma once

#include <span>
#include <string>
#include <vector>

#include "qdgeo/core.hpp"
#include "qdgeo/models.hpp"

namespace qdgeo {

/// A loop-based quantity was requested for a trajectory that does not close.
class CyclicityError : public ModelError {
 public:
  explicit CyclicityError(double mismatch);
  double mismatch() const { return mismatch_; }

 private:
  double mismatch_;
};

/// Trajectory sampled too coarsely for the solid-angle sum.
class SamplingError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace qdgeo

namespace qdgeo::geometry {

using models::Vec3;

inline constexpr double kCyclicTol = 1e-4;
inline constexpr double kMaxSampleGap = 0.1;

struct BlochSample {
  double t = 0.0;
  Vec3 n{0.0, 0.0, 0.0};  // zero for systems that are not two-level
  // <psi|H|psi> with the Hamiltonian of the segment starting at t; at a
  // segment boundary energy_left uses the segment that just ended.
  double energy = 0.0;
  double energy_left = 0.0;
  double dyn_phase_accum = 0.0;
};

struct Trajectory {
  std::vector<BlochSample> samples;
  std::vector<core::StateVector> states;
  std::string model;

  std::size_t dim() const { return states.empty() ? 0 : states.front().dim(); }
  /// Throws ModelError unless times start at 0, increase strictly, and the
  /// sample and state lists match.
  void validate() const;
};

/// (<sigma_x>, <sigma_y>, <sigma_z>) of a two-level state.
Vec3 bloch_vector(const core::StateVector& psi);

/// Bloch-vector distance between the end points, 2 sqrt(1 - |<psi0|psiT>|^2)
/// (for two-level systems this is |n(T) - n(0)|).
double cyclic_mismatch(const Trajectory& traj);
bool is_cyclic(const Trajectory& traj, double tol = kCyclicTol);

/// -int <H> dt by trapezoidal quadrature over the samples.
double dynamical_phase(const Trajectory& traj);

/// arg <psi(0)|psi(T)> in (-pi, pi]. Throws CyclicityError.
double total_phase(const Trajectory& traj);

/// total_phase - dynamical_phase, wrapped to (-pi, pi].
double aa_phase(const Trajectory& traj);

/// Signed solid angle enclosed by the closed geodesic polygon through the
/// Bloch samples, in (-2 pi, 2 pi]. Two-level only; throws CyclicityError
/// for open paths and SamplingError for gaps >= 0.1 rad.
double solid_angle(const Trajectory& traj);
/// Same for a bare list of unit vectors (closed back to the first vertex).
double solid_angle(std::span<const Vec3> path);

/// 2 arctan(2 rabi / detuning). Throws ModelError for zero detuning.
double swept_angle_gamma(double rabi, double detuning);

/// Rotation parameter gamma of a realized gate-1 propagator, modulo pi: the
/// angle of the real rotation left after removing the determinant phase.
double rotation_gamma(const core::Operator& u);

/// Angle in (-pi/2, pi/2] congruent to phi modulo pi.
double wrap_half(double phi);

/// Dominant angular frequency of a uniformly sampled real signal: peak of
/// the Hann-windowed discrete-time Fourier transform, refined between the
/// neighbouring grid frequencies.
double dominant_angular_frequency(std::span<const double> values, double dt);

}  // namespace qdgeo::geometry
