// Dense complex linear algebra for small quantum systems, exact propagators
// for constant Hamiltonians and a fixed-step RK4 Schroedinger integrator.
//
// Units: hbar = 1, time in femtoseconds, angular frequencies in rad/fs.

#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qdgeo {

using Complex = std::complex<double>;

inline constexpr std::size_t kMaxDim = 16;
inline constexpr Complex kI{0.0, 1.0};

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Physically invalid input: non-hermitian generator, forbidden parameter,
/// broken validity regime, non-cyclic evolution where a loop is required.
class ModelError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure: eigensolver breakdown, excessive norm drift, coarse
/// sampling.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Norm drift of a fixed-step integration exceeded the renormalization bound.
class StepSizeError : public NumericalError {
 public:
  StepSizeError(double drift, double dt);
  double drift() const { return drift_; }

 private:
  double drift_;
};

namespace core {

using Matrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::ColMajor, kMaxDim, kMaxDim>;
using Vector = Eigen::Matrix<Complex, Eigen::Dynamic, 1, Eigen::ColMajor,
                             kMaxDim, 1>;

inline constexpr double kHermitianTol = 1e-12;
inline constexpr double kUnitaryTol = 1e-9;
inline constexpr double kNormTol = 1e-9;
inline constexpr double kMaxNormDrift = 1e-6;

/// Normalized amplitude vector of a d-level system.
class StateVector {
 public:
  /// Normalizes `amplitudes`; throws ModelError for zero or non-finite input.
  explicit StateVector(Vector amplitudes);
  StateVector(std::initializer_list<Complex> amplitudes);

  static StateVector basis(std::size_t dim, std::size_t index);

  std::size_t dim() const { return static_cast<std::size_t>(amps_.size()); }
  const Vector& amplitudes() const { return amps_; }
  Complex operator[](std::size_t i) const { return amps_(static_cast<Eigen::Index>(i)); }

  double population(std::size_t i) const { return std::norm((*this)[i]); }
  Complex inner(const StateVector& other) const;  // <this|other>

 private:
  Vector amps_;
};

/// Square complex matrix with optional hermitian / unitary tags. Tags are
/// checked when set and can be re-validated on demand.
class Operator {
 public:
  Operator() = default;
  explicit Operator(Matrix m);
  Operator(std::size_t dim, std::initializer_list<std::initializer_list<Complex>> rows);

  static Operator identity(std::size_t dim);
  static Operator zero(std::size_t dim);
  static Operator hermitian(Matrix m);  // throws ModelError if not hermitian
  static Operator unitary(Matrix m);    // throws NumericalError if not unitary

  std::size_t dim() const { return static_cast<std::size_t>(m_.rows()); }
  const Matrix& matrix() const { return m_; }
  Complex operator()(std::size_t r, std::size_t c) const {
    return m_(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
  }

  bool tagged_hermitian() const { return hermitian_; }
  bool tagged_unitary() const { return unitary_; }

  /// max |A - A^dagger|
  double hermiticity_error() const;
  /// max |A^dagger A - I|
  double unitarity_error() const;
  bool is_hermitian(double tol = kHermitianTol) const { return hermiticity_error() <= tol; }
  bool is_unitary(double tol = kUnitaryTol) const { return unitarity_error() <= tol; }

  Operator adjoint() const;
  Complex trace() const { return m_.trace(); }
  Complex expectation(const StateVector& psi) const;
  StateVector apply(const StateVector& psi) const;
  Operator pow(unsigned n) const;

  friend Operator operator*(const Operator& a, const Operator& b);
  friend Operator operator+(const Operator& a, const Operator& b);
  friend Operator operator-(const Operator& a, const Operator& b);
  friend Operator operator*(Complex s, const Operator& a);

 private:
  Matrix m_;
  bool hermitian_ = false;
  bool unitary_ = false;
};

/// max elementwise |A - B|
double max_abs_diff(const Operator& a, const Operator& b);
double max_abs_diff(const StateVector& a, const StateVector& b);

// Pauli matrices in the basis (|0>, |1>), sigma_z = diag(1, -1).
Operator sigma_x();
Operator sigma_y();
Operator sigma_z();

/// |row><col| in dimension `dim`.
Operator outer(std::size_t dim, std::size_t row, std::size_t col);

/// Kronecker product A (x) B.
Operator tensor(const Operator& a, const Operator& b);

/// exp(-i H t) by hermitian eigendecomposition. Requires t >= 0.
Operator propagator_constant(const Operator& h, double t);

/// |Tr(U^dagger V)| / d, insensitive to a global phase on either argument.
double gate_fidelity(const Operator& u, const Operator& v);

using HamiltonianFn = std::function<Operator(double)>;

struct Rk4Result {
  StateVector state;
  double norm_drift;  // |1 - ||psi||| before renormalization
  std::size_t steps;
};

/// Classic fixed-step RK4 for i dpsi/dt = H(t) psi from t0 to t1. The step
/// is shrunk so that an integer number of steps lands exactly on t1. The
/// final state is renormalized when the drift is within kMaxNormDrift,
/// otherwise StepSizeError is thrown.
Rk4Result rk4_evolve(const HamiltonianFn& h_of_t, const StateVector& psi0,
                     double t0, double t1, double dt);

/// One RK4 step on a raw amplitude vector (no normalization).
Vector rk4_step(const HamiltonianFn& h_of_t, const Vector& psi, double t, double h);

/// Same step for a constant generator; avoids re-evaluating H.
Vector rk4_step(const Matrix& h, const Vector& psi, double step);

}  // namespace core
}  // namespace qdgeo
