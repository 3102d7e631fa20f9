#include "qdgeo/core.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace qdgeo {

StepSizeError::StepSizeError(double drift, double dt)
    : NumericalError(fmt::format(
          "RK4 norm drift {:.3e} exceeds {:.0e} at dt = {:.6g} fs; use a smaller step",
          drift, core::kMaxNormDrift, dt)),
      drift_(drift) {}

namespace core {
namespace {

bool all_finite(const Matrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    const Complex z = m.data()[i];
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

void check_dim(std::size_t d) {
  if (d == 0 || d > kMaxDim) {
    throw ModelError(fmt::format("dimension {} outside [1, {}]", d, kMaxDim));
  }
}

}  // namespace

StateVector::StateVector(Vector amplitudes) : amps_(std::move(amplitudes)) {
  check_dim(dim());
  if (!all_finite(amps_)) throw ModelError("state has non-finite amplitudes");
  const double n = amps_.norm();
  if (n == 0.0) throw ModelError("state has zero norm");
  amps_ /= n;
}

StateVector::StateVector(std::initializer_list<Complex> amplitudes)
    : StateVector([&] {
        Vector v(static_cast<Eigen::Index>(amplitudes.size()));
        Eigen::Index i = 0;
        for (const Complex z : amplitudes) v(i++) = z;
        return v;
      }()) {}

StateVector StateVector::basis(std::size_t dim, std::size_t index) {
  check_dim(dim);
  if (index >= dim) throw ModelError(fmt::format("basis index {} >= dim {}", index, dim));
  Vector v = Vector::Zero(static_cast<Eigen::Index>(dim));
  v(static_cast<Eigen::Index>(index)) = 1.0;
  return StateVector(std::move(v));
}

Complex StateVector::inner(const StateVector& other) const {
  if (other.dim() != dim()) throw ModelError("inner product of states with different dimension");
  return amps_.dot(other.amps_);  // Eigen's dot conjugates the left operand
}

Operator::Operator(Matrix m) : m_(std::move(m)) {
  if (m_.rows() != m_.cols()) throw ModelError("operator must be square");
  check_dim(dim());
  if (!all_finite(m_)) throw ModelError("operator has non-finite entries");
}

Operator::Operator(std::size_t dim,
                   std::initializer_list<std::initializer_list<Complex>> rows) {
  check_dim(dim);
  if (rows.size() != dim) throw ModelError("row count does not match dimension");
  m_.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    if (row.size() != dim) throw ModelError("column count does not match dimension");
    Eigen::Index c = 0;
    for (const Complex z : row) m_(r, c++) = z;
    ++r;
  }
  if (!all_finite(m_)) throw ModelError("operator has non-finite entries");
}

Operator Operator::identity(std::size_t dim) {
  check_dim(dim);
  const auto d = static_cast<Eigen::Index>(dim);
  Operator op(Matrix::Identity(d, d));
  op.hermitian_ = true;
  op.unitary_ = true;
  return op;
}

Operator Operator::zero(std::size_t dim) {
  check_dim(dim);
  const auto d = static_cast<Eigen::Index>(dim);
  Operator op(Matrix::Zero(d, d));
  op.hermitian_ = true;
  return op;
}

Operator Operator::hermitian(Matrix m) {
  Operator op(std::move(m));
  const double err = op.hermiticity_error();
  if (err > kHermitianTol) {
    throw ModelError(fmt::format("operator is not hermitian (max |A - A^+| = {:.3e})", err));
  }
  op.hermitian_ = true;
  return op;
}

Operator Operator::unitary(Matrix m) {
  Operator op(std::move(m));
  const double err = op.unitarity_error();
  if (err > kUnitaryTol) {
    throw NumericalError(fmt::format("operator is not unitary (max |U^+U - I| = {:.3e})", err));
  }
  op.unitary_ = true;
  return op;
}

double Operator::hermiticity_error() const {
  return (m_ - m_.adjoint()).cwiseAbs().maxCoeff();
}

double Operator::unitarity_error() const {
  const Matrix p = m_.adjoint() * m_;
  return (p - Matrix::Identity(m_.rows(), m_.cols())).cwiseAbs().maxCoeff();
}

Operator Operator::adjoint() const {
  Operator op(Matrix(m_.adjoint()));
  op.hermitian_ = hermitian_;
  op.unitary_ = unitary_;
  return op;
}

Complex Operator::expectation(const StateVector& psi) const {
  if (psi.dim() != dim()) throw ModelError("expectation: dimension mismatch");
  return psi.amplitudes().dot(m_ * psi.amplitudes());
}

StateVector Operator::apply(const StateVector& psi) const {
  if (psi.dim() != dim()) throw ModelError("apply: dimension mismatch");
  return StateVector(Vector(m_ * psi.amplitudes()));
}

Operator Operator::pow(unsigned n) const {
  Matrix result = Matrix::Identity(m_.rows(), m_.cols());
  Matrix base = m_;
  while (n > 0) {
    if (n & 1u) result = result * base;
    base = base * base;
    n >>= 1u;
  }
  Operator op(std::move(result));
  op.unitary_ = unitary_;
  return op;
}

Operator operator*(const Operator& a, const Operator& b) {
  if (a.dim() != b.dim()) throw ModelError("operator product: dimension mismatch");
  Operator op(Matrix(a.m_ * b.m_));
  op.unitary_ = a.unitary_ && b.unitary_;
  return op;
}

Operator operator+(const Operator& a, const Operator& b) {
  if (a.dim() != b.dim()) throw ModelError("operator sum: dimension mismatch");
  Operator op(Matrix(a.m_ + b.m_));
  op.hermitian_ = a.hermitian_ && b.hermitian_;
  return op;
}

Operator operator-(const Operator& a, const Operator& b) {
  if (a.dim() != b.dim()) throw ModelError("operator difference: dimension mismatch");
  Operator op(Matrix(a.m_ - b.m_));
  op.hermitian_ = a.hermitian_ && b.hermitian_;
  return op;
}

Operator operator*(Complex s, const Operator& a) {
  Operator op(Matrix(s * a.m_));
  op.hermitian_ = a.hermitian_ && s.imag() == 0.0;
  op.unitary_ = a.unitary_ && std::abs(std::abs(s) - 1.0) <= 1e-15;
  return op;
}

double max_abs_diff(const Operator& a, const Operator& b) {
  if (a.dim() != b.dim()) throw ModelError("max_abs_diff: dimension mismatch");
  return (a.matrix() - b.matrix()).cwiseAbs().maxCoeff();
}

double max_abs_diff(const StateVector& a, const StateVector& b) {
  if (a.dim() != b.dim()) throw ModelError("max_abs_diff: dimension mismatch");
  return (a.amplitudes() - b.amplitudes()).cwiseAbs().maxCoeff();
}

Operator sigma_x() { return Operator::hermitian(Operator(2, {{0, 1}, {1, 0}}).matrix()); }
Operator sigma_y() { return Operator::hermitian(Operator(2, {{0, -kI}, {kI, 0}}).matrix()); }
Operator sigma_z() { return Operator::hermitian(Operator(2, {{1, 0}, {0, -1}}).matrix()); }

Operator outer(std::size_t dim, std::size_t row, std::size_t col) {
  check_dim(dim);
  if (row >= dim || col >= dim) throw ModelError("outer: index out of range");
  const auto d = static_cast<Eigen::Index>(dim);
  Matrix m = Matrix::Zero(d, d);
  m(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(col)) = 1.0;
  return Operator(std::move(m));
}

Operator tensor(const Operator& a, const Operator& b) {
  const auto da = static_cast<Eigen::Index>(a.dim());
  const auto db = static_cast<Eigen::Index>(b.dim());
  if (a.dim() * b.dim() > kMaxDim) throw ModelError("tensor product exceeds maximum dimension");
  Matrix m(da * db, da * db);
  for (Eigen::Index i = 0; i < da; ++i) {
    for (Eigen::Index j = 0; j < da; ++j) {
      m.block(i * db, j * db, db, db) = a.matrix()(i, j) * b.matrix();
    }
  }
  return Operator(std::move(m));
}

Operator propagator_constant(const Operator& h, double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw ModelError(fmt::format("propagation time must be finite and >= 0, got {}", t));
  }
  const double herr = h.hermiticity_error();
  if (herr > kHermitianTol) {
    throw ModelError(fmt::format("generator is not hermitian (max |H - H^+| = {:.3e})", herr));
  }
  // Symmetrize so the solver sees an exactly self-adjoint matrix.
  const Matrix hs = 0.5 * (h.matrix() + h.matrix().adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(hs);
  if (es.info() != Eigen::Success) {
    throw NumericalError(fmt::format(
        "hermitian eigendecomposition failed (dim {}, ||H||_max = {:.3e})", h.dim(),
        hs.cwiseAbs().maxCoeff()));
  }
  const auto& v = es.eigenvectors();
  Vector phases(v.rows());
  for (Eigen::Index k = 0; k < v.rows(); ++k) {
    phases(k) = std::exp(-kI * es.eigenvalues()(k) * t);
  }
  Matrix u = v * phases.asDiagonal() * v.adjoint();
  return Operator::unitary(std::move(u));
}

double gate_fidelity(const Operator& u, const Operator& v) {
  if (u.dim() != v.dim()) {
    throw ModelError(fmt::format("gate_fidelity: dimension mismatch ({} vs {})", u.dim(), v.dim()));
  }
  const Complex tr = (u.matrix().adjoint() * v.matrix()).trace();
  return std::min(1.0, std::abs(tr) / static_cast<double>(u.dim()));
}

Vector rk4_step(const HamiltonianFn& h_of_t, const Vector& psi, double t, double h) {
  const Matrix h0 = h_of_t(t).matrix();
  const Matrix hm = h_of_t(t + 0.5 * h).matrix();
  const Matrix h1 = h_of_t(t + h).matrix();
  const Vector k1 = -kI * (h0 * psi);
  const Vector k2 = -kI * (hm * (psi + 0.5 * h * k1));
  const Vector k3 = -kI * (hm * (psi + 0.5 * h * k2));
  const Vector k4 = -kI * (h1 * (psi + h * k3));
  return psi + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Vector rk4_step(const Matrix& hm, const Vector& psi, double step) {
  const Vector k1 = -kI * (hm * psi);
  const Vector k2 = -kI * (hm * (psi + 0.5 * step * k1));
  const Vector k3 = -kI * (hm * (psi + 0.5 * step * k2));
  const Vector k4 = -kI * (hm * (psi + step * k3));
  return psi + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Rk4Result rk4_evolve(const HamiltonianFn& h_of_t, const StateVector& psi0, double t0,
                     double t1, double dt) {
  if (!(dt > 0.0)) throw ModelError(fmt::format("RK4 step must be positive, got {}", dt));
  if (t1 < t0) throw ModelError("RK4 end time precedes start time");
  const double span = t1 - t0;
  const auto steps = static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
  Vector psi = psi0.amplitudes();
  if (steps > 0) {
    if (h_of_t(t0).dim() != psi0.dim()) {
      throw ModelError("RK4: state and Hamiltonian dimension mismatch");
    }
    const double h = span / static_cast<double>(steps);
    for (std::size_t k = 0; k < steps; ++k) {
      psi = rk4_step(h_of_t, psi, t0 + static_cast<double>(k) * h, h);
    }
  }
  const double drift = std::abs(1.0 - psi.norm());
  if (drift > kMaxNormDrift) throw StepSizeError(drift, dt);
  return Rk4Result{StateVector(std::move(psi)), drift, steps};
}

}  // namespace core
}  // namespace qdgeo
