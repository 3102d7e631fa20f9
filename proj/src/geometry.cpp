#include "qdgeo/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace qdgeo {

CyclicityError::CyclicityError(double mismatch)
    : ModelError(fmt::format("trajectory is not cyclic: |n(T) - n(0)| = {:.3e} exceeds {:.0e}", mismatch,
                             geometry::kCyclicTol)),
      mismatch_(mismatch) {}

}  // namespace qdgeo

namespace qdgeo::geometry {

namespace {

constexpr double kPi = std::numbers::pi;

double dot(const Vec3& a, const Vec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }

double det3(const Vec3& a, const Vec3& b, const Vec3& c) {
  return a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) +
         a[2] * (b[0] * c[1] - b[1] * c[0]);
}

Vec3 normalized(const Vec3& v) {
  const double r = std::sqrt(dot(v, v));
  return {v[0] / r, v[1] / r, v[2] / r};
}

// Signed area of the spherical triangle (p, a, b).
double triangle_excess(const Vec3& p, const Vec3& a, const Vec3& b) {
  return 2.0 * std::atan2(det3(p, a, b), 1.0 + dot(p, a) + dot(a, b) + dot(b, p));
}

// Fan apex far from every vertex and from every antipode, where the
// triangle formula loses accuracy.
Vec3 reference_point(std::span<const Vec3> path) {
  Vec3 best{0.0, 0.0, 1.0};
  double best_score = -1.0;
  for (int x = -1; x <= 1; ++x) {
    for (int y = -1; y <= 1; ++y) {
      for (int z = -1; z <= 1; ++z) {
        if (x == 0 && y == 0 && z == 0) continue;
        // Slight irrational tilt keeps candidates off symmetric loops.
        const Vec3 c = normalized({x + 0.1234, y + 0.0567 * z, z + 0.0891 * x});
        double score = 2.0;
        for (const auto& v : path) score = std::min(score, 1.0 - std::abs(dot(c, v)));
        if (score > best_score) {
          best_score = score;
          best = c;
        }
      }
    }
  }
  return best;
}

double great_circle(const Vec3& a, const Vec3& b) {
  const Vec3 c{a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
  return std::atan2(std::sqrt(dot(c, c)), dot(a, b));
}

void require_samples(const Trajectory& traj, std::size_t n) {
  if (traj.samples.size() < n || traj.states.size() != traj.samples.size()) {
    throw ModelError(fmt::format("trajectory needs at least {} samples with states, has {}", n, traj.samples.size()));
  }
}

}  // namespace

void Trajectory::validate() const {
  if (samples.empty()) throw ModelError("empty trajectory");
  if (samples.size() != states.size()) throw ModelError("trajectory samples and states differ in length");
  if (samples.front().t != 0.0) throw ModelError("trajectory must start at t = 0");
  for (std::size_t i = 1; i < samples.size(); ++i) {
    if (!(samples[i].t > samples[i - 1].t)) throw ModelError("trajectory times must increase strictly");
  }
}

Vec3 bloch_vector(const core::StateVector& psi) {
  if (psi.dim() != 2) throw ModelError("Bloch vector needs a two-level state");
  const Complex a = psi[0];
  const Complex b = psi[1];
  const Complex ab = std::conj(a) * b;
  return {2.0 * ab.real(), 2.0 * ab.imag(), std::norm(a) - std::norm(b)};
}

double cyclic_mismatch(const Trajectory& traj) {
  require_samples(traj, 1);
  const double overlap = std::norm(traj.states.front().inner(traj.states.back()));
  return 2.0 * std::sqrt(std::max(0.0, 1.0 - overlap));
}

bool is_cyclic(const Trajectory& traj, double tol) { return cyclic_mismatch(traj) <= tol; }

double dynamical_phase(const Trajectory& traj) {
  require_samples(traj, 2);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < traj.samples.size(); ++i) {
    const auto& a = traj.samples[i];
    const auto& b = traj.samples[i + 1];
    acc -= 0.5 * (a.energy + b.energy_left) * (b.t - a.t);
  }
  return acc;
}

double total_phase(const Trajectory& traj) {
  const double mismatch = cyclic_mismatch(traj);
  if (mismatch > kCyclicTol) throw CyclicityError(mismatch);
  return models::wrap_phase(std::arg(traj.states.front().inner(traj.states.back())));
}

double aa_phase(const Trajectory& traj) { return models::wrap_phase(total_phase(traj) - dynamical_phase(traj)); }

double solid_angle(std::span<const Vec3> path) {
  if (path.size() < 2) return 0.0;
  for (std::size_t i = 0; i < path.size(); ++i) {
    const double gap = great_circle(path[i], path[(i + 1) % path.size()]);
    if (gap >= kMaxSampleGap) {
      throw SamplingError(fmt::format("Bloch samples {} and {} are {:.3f} rad apart (limit {}); record more samples",
                                      i, (i + 1) % path.size(), gap, kMaxSampleGap));
    }
  }
  const Vec3 p = reference_point(path);
  double sum = 0.0;
  for (std::size_t i = 0; i < path.size(); ++i) {
    sum += triangle_excess(p, normalized(path[i]), normalized(path[(i + 1) % path.size()]));
  }
  // Map into (-2 pi, 2 pi].
  sum = std::fmod(sum, 4.0 * kPi);
  if (sum > 2.0 * kPi) sum -= 4.0 * kPi;
  if (sum <= -2.0 * kPi) sum += 4.0 * kPi;
  return sum;
}

double solid_angle(const Trajectory& traj) {
  require_samples(traj, 2);
  if (traj.dim() != 2) throw ModelError("solid angle is defined for two-level trajectories only");
  const double mismatch = cyclic_mismatch(traj);
  if (mismatch > kCyclicTol) throw CyclicityError(mismatch);
  std::vector<Vec3> path;
  path.reserve(traj.samples.size());
  for (const auto& s : traj.samples) path.push_back(s.n);
  return solid_angle(std::span<const Vec3>(path));
}

double swept_angle_gamma(double rabi, double detuning) {
  if (detuning == 0.0) {
    throw ModelError("swept angle needs detuning != 0; resonant driving is the gate-2 case (gamma~ = 2 phi0)");
  }
  return 2.0 * std::atan(2.0 * rabi / detuning);
}

double rotation_gamma(const core::Operator& u) {
  if (u.dim() != 2) throw ModelError("rotation_gamma needs a 2x2 propagator");
  const Complex det = u(0, 0) * u(1, 1) - u(0, 1) * u(1, 0);
  const Complex s = std::sqrt(det);
  const double g = std::atan2((u(0, 1) / s).real(), (u(0, 0) / s).real());
  double r = std::fmod(g, kPi);
  if (r < 0.0) r += kPi;
  return r;
}

double wrap_half(double phi) {
  double r = std::fmod(phi, kPi);
  if (r > 0.5 * kPi) r -= kPi;
  if (r <= -0.5 * kPi) r += kPi;
  return r;
}

double dominant_angular_frequency(std::span<const double> values, double dt) {
  const std::size_t n = values.size();
  if (n < 8 || !(dt > 0.0)) throw ModelError("spectral estimate needs >= 8 samples and dt > 0");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(n);
  std::vector<double> w(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double hann = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(k) / static_cast<double>(n - 1));
    w[k] = (values[k] - mean) * hann;
  }
  auto power = [&](double omega) {
    double re = 0.0, im = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const double ph = omega * dt * static_cast<double>(k);
      re += w[k] * std::cos(ph);
      im -= w[k] * std::sin(ph);
    }
    return re * re + im * im;
  };
  const double step = 2.0 * kPi / (static_cast<double>(n) * dt);
  std::size_t best = 1;
  double best_p = -1.0;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    const double p = power(step * static_cast<double>(k));
    if (p > best_p) {
      best_p = p;
      best = k;
    }
  }
  // Golden-section refinement on the bracketing interval.
  double lo = step * (static_cast<double>(best) - 1.0);
  double hi = step * (static_cast<double>(best) + 1.0);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double p1 = power(x1), p2 = power(x2);
  for (int it = 0; it < 60; ++it) {
    if (p1 > p2) {
      hi = x2;
      x2 = x1;
      p2 = p1;
      x1 = hi - g * (hi - lo);
      p1 = power(x1);
    } else {
      lo = x1;
      x1 = x2;
      p1 = p2;
      x2 = lo + g * (hi - lo);
      p2 = power(x2);
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace qdgeo::geometry
