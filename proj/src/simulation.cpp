#include "qdgeo/simulation.hpp"

#include <cmath>
#include <numbers>

#include <fmt/format.h>

namespace qdgeo::sim {

using core::Matrix;
using core::Vector;

namespace {

constexpr double kPi = std::numbers::pi;

// B . sigma embedded on levels (a, b) of a d-level space.
Operator embedded_field(std::size_t d, std::size_t a, std::size_t b, const PulseSegment& s) {
  const Operator h2 = models::build_rotating_two_level(s.rabi(), s.phase(), s.detuning());
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
  const std::size_t idx[2] = {a, b};
  for (std::size_t r = 0; r < 2; ++r) {
    for (std::size_t c = 0; c < 2; ++c) {
      m(static_cast<Eigen::Index>(idx[r]), static_cast<Eigen::Index>(idx[c])) = h2(r, c);
    }
  }
  return Operator::hermitian(std::move(m));
}

// One RK4 step for a constant generator written as a matrix polynomial.
Matrix rk4_step_matrix(const Matrix& h, double step) {
  const auto d = h.rows();
  const Matrix a = (-kI * step) * h;
  const Matrix a2 = a * a;
  const Matrix a3 = a2 * a;
  const Matrix a4 = a3 * a;
  return Matrix::Identity(d, d) + a + a2 / 2.0 + a3 / 6.0 + a4 / 24.0;
}

double energy_of(const Matrix& h, const Vector& psi) {
  return (psi.adjoint() * h * psi)(0, 0).real() / psi.squaredNorm();
}

// Walks the sequence; records samples into `traj` when non-null.
Vector run(const PulseSequence& seq, const HamiltonianModel& model, const StateVector& psi0,
           const RunSettings& settings, geometry::Trajectory* traj) {
  if (psi0.dim() != model.dim()) {
    throw ModelError(fmt::format("initial state has dimension {}, model '{}' has {}", psi0.dim(), model.name(),
                                 model.dim()));
  }
  if (settings.dt && !(*settings.dt > 0.0)) throw ModelError("integrator dt must be positive");
  if (!settings.dt && (settings.steps_per_segment == 0 || !(settings.max_phase_step > 0.0))) {
    throw ModelError("steps per segment must be >= 1 and the phase step positive");
  }
  if (traj && settings.samples_per_segment == 0) throw ModelError("samples per segment must be >= 1");

  const bool td = model.time_dependent();
  const auto& segs = seq.segments();
  const std::size_t total = segs.size() * seq.repeats();
  auto h_at = [&](std::size_t k, double t) { return model.hamiltonian(segs[k % segs.size()], t).matrix(); };

  Vector psi = psi0.amplitudes();
  double t0 = 0.0;
  if (traj) {
    traj->samples.clear();
    traj->states.clear();
    traj->model = model.name();
    const double e = energy_of(h_at(0, 0.0), psi);
    traj->samples.push_back({0.0, psi0.dim() == 2 ? geometry::bloch_vector(psi0) : geometry::Vec3{0, 0, 0}, e, e, 0.0});
    traj->states.push_back(psi0);
  }

  for (std::size_t k = 0; k < total; ++k) {
    const PulseSegment& seg = segs[k % segs.size()];
    const double duration = seg.duration();
    std::size_t n = 0;
    if (settings.dt) {
      n = static_cast<std::size_t>(std::max(1.0, std::ceil(duration / *settings.dt - 1e-9)));
    } else {
      // Row-sum norm bounds the spectral radius.
      const double bound = model.hamiltonian(seg, t0).matrix().cwiseAbs().rowwise().sum().maxCoeff();
      n = std::max(settings.steps_per_segment,
                   static_cast<std::size_t>(std::ceil(duration * bound / settings.max_phase_step)));
    }
    const double h = duration / static_cast<double>(n);
    const std::size_t stride = traj ? std::max<std::size_t>(1, n / settings.samples_per_segment) : n;

    Matrix hc;
    Matrix step;
    if (!td) {
      hc = model.hamiltonian(seg, t0).matrix();
      step = rk4_step_matrix(hc, h);
    }
    const core::HamiltonianFn fn = [&](double t) { return model.hamiltonian(seg, t); };

    for (std::size_t j = 1; j <= n; ++j) {
      const double t_prev = t0 + static_cast<double>(j - 1) * h;
      psi = td ? core::rk4_step(fn, psi, t_prev, h) : Vector(step * psi);
      const double t = j == n ? t0 + duration : t0 + static_cast<double>(j) * h;

      if (j == n) {
        const double drift = std::abs(1.0 - psi.norm());
        if (drift > core::kMaxNormDrift) throw StepSizeError(drift, h);
        psi.normalize();
      }
      if (!traj || (j % stride != 0 && j != n)) continue;

      const StateVector state(psi);
      const double e_left = energy_of(td ? fn(t).matrix() : hc, psi);
      double e_right = e_left;
      if (j == n && k + 1 < total) e_right = energy_of(h_at(k + 1, t), psi);
      const auto& prev = traj->samples.back();
      const double acc = prev.dyn_phase_accum - 0.5 * (prev.energy + e_left) * (t - prev.t);
      traj->samples.push_back(
          {t, state.dim() == 2 ? geometry::bloch_vector(state) : geometry::Vec3{0, 0, 0}, e_right, e_left, acc});
      traj->states.push_back(state);
    }
    t0 += duration;
  }
  return psi;
}

}  // namespace

Operator RotatingTwoLevel::hamiltonian(const PulseSegment& s, double) const {
  return models::build_rotating_two_level(s.rabi(), s.phase(), s.detuning());
}

LabTwoLevel::LabTwoLevel(double omega0) : omega0_(omega0) {
  if (!(omega0 > 0.0)) throw ModelError(fmt::format("omega0 must be positive, got {}", omega0));
}

Operator LabTwoLevel::hamiltonian(const PulseSegment& s, double t) const {
  models::TwoLevelParams p{omega0_, omega0_ - s.detuning(), s.rabi(), s.phase() - kPi};
  return models::build_lab_two_level(p)(t);
}

RamanThreeLevel::RamanThreeLevel(double detuning, double ratio) : detuning_(detuning), ratio_(ratio) {
  if (detuning == 0.0) throw ModelError("Raman detuning Delta = 0: singular detuning, |G> is resonant");
  if (!(ratio > 0.0)) throw ModelError(fmt::format("Raman laser ratio must be positive, got {}", ratio));
}

models::RamanParams RamanThreeLevel::params_for(const PulseSegment& s) const {
  const double plus = std::sqrt(s.rabi() * std::abs(detuning_) / ratio_);
  models::RamanParams p;
  p.rabi_plus = plus;
  p.rabi_minus = ratio_ * plus;
  p.detuning = detuning_;
  p.two_photon_detuning = s.detuning();
  p.phase_plus = s.phase() - (detuning_ > 0.0 ? kPi : 0.0);
  p.phase_minus = 0.0;
  return p;
}

Operator RamanThreeLevel::hamiltonian(const PulseSegment& s, double) const {
  return models::build_raman_three_level(params_for(s));
}

RamanEffective::RamanEffective(double detuning, double ratio) : full_(detuning, ratio) {}

Operator RamanEffective::hamiltonian(const PulseSegment& s, double) const {
  return models::build_raman_effective(full_.params_for(s)).hamiltonian;
}

Operator RamanResonantPlus::hamiltonian(const PulseSegment& s, double) const {
  return embedded_field(3, models::basis::kEPlus, models::basis::kGround, s);
}

BiexcitonRotating::BiexcitonRotating(double omega0, double delta) : omega0_(omega0), delta_(delta) {
  (void)models::build_biexciton_rotating(params_for(PulseSegment(0.0, 0.0, 0.0, 1.0)));
}

models::BiexcitonParams BiexcitonRotating::params_for(const PulseSegment& s) const {
  const double rabi = std::sqrt(s.rabi() * std::abs(delta_));
  const double w = models::two_photon_resonance(omega0_, delta_) - 0.5 * s.detuning();
  return models::BiexcitonParams{omega0_, delta_, models::Laser{rabi, 0.5 * s.phase(), w},
                                 models::Laser{rabi, 0.5 * s.phase(), w}};
}

Operator BiexcitonRotating::hamiltonian(const PulseSegment& s, double) const {
  return models::build_biexciton_rotating(params_for(s));
}

TwoPhotonEffective::TwoPhotonEffective(double omega0, double delta) : full_(omega0, delta) {}

Operator TwoPhotonEffective::hamiltonian(const PulseSegment& s, double) const {
  return models::build_two_photon_effective(full_.params_for(s)).hamiltonian;
}

geometry::Trajectory simulate(const PulseSequence& seq, const HamiltonianModel& model, const StateVector& psi0,
                              const RunSettings& settings) {
  geometry::Trajectory traj;
  run(seq, model, psi0, settings, &traj);
  return traj;
}

StateVector propagate(const PulseSequence& seq, const HamiltonianModel& model, const StateVector& psi0,
                      const RunSettings& settings) {
  return StateVector(run(seq, model, psi0, settings, nullptr));
}

Operator sequence_propagator(const PulseSequence& seq, const HamiltonianModel& model, const RunSettings& settings) {
  const auto d = static_cast<Eigen::Index>(model.dim());
  Matrix u(d, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    u.col(j) = run(seq, model, StateVector::basis(model.dim(), static_cast<std::size_t>(j)), settings, nullptr);
  }
  return Operator(std::move(u));
}

Operator exact_propagator(const PulseSequence& seq, const HamiltonianModel& model) {
  if (model.time_dependent()) throw ModelError("exact propagator needs a time-independent model");
  Operator loop = Operator::identity(model.dim());
  for (const auto& s : seq.segments()) loop = core::propagator_constant(model.hamiltonian(s, 0.0), s.duration()) * loop;
  return loop.pow(seq.repeats());
}

Operator subblock(const Operator& u, const std::vector<std::size_t>& indices) {
  const auto m = static_cast<Eigen::Index>(indices.size());
  Matrix b(m, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    for (Eigen::Index c = 0; c < m; ++c) {
      b(r, c) = u(indices[static_cast<std::size_t>(r)], indices[static_cast<std::size_t>(c)]);
    }
  }
  return Operator(std::move(b));
}

}  // namespace qdgeo::sim
