#pragma once

// Dense statevector simulator over a radial + orbital qubit register.
//
// Layout: qubit 0 is the most significant bit of the flat index. Radial qubits
// occupy positions 0..n_rad-1 and orbital qubits n_rad..n-1, so the flat index
// of |r, phi> is r * N_phi + phi.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

#include "eqml/error.hpp"

namespace eqml {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;

class StateVector {
 public:
  StateVector() = default;

  /// |0...0> on n qubits.
  explicit StateVector(int n_qubits) : n_qubits_(n_qubits) {
    require(n_qubits >= 1 && n_qubits <= 30, ErrorCode::InvalidDims, "qubit count out of range");
    amps_.assign(std::size_t{1} << n_qubits, cplx{0.0, 0.0});
    amps_[0] = 1.0;
  }

  StateVector(int n_qubits, std::vector<cplx> amplitudes)
      : n_qubits_(n_qubits), amps_(std::move(amplitudes)) {
    require(n_qubits >= 1 && n_qubits <= 30, ErrorCode::InvalidDims, "qubit count out of range");
    require(amps_.size() == (std::size_t{1} << n_qubits), ErrorCode::DimMismatch,
            "amplitude count must be 2^n");
  }

  static StateVector basis(int n_qubits, std::size_t index) {
    StateVector s(n_qubits);
    require(index < s.size(), ErrorCode::InvalidDims, "basis index out of range");
    s.amps_[0] = 0.0;
    s.amps_[index] = 1.0;
    return s;
  }

  int n_qubits() const noexcept { return n_qubits_; }
  std::size_t size() const noexcept { return amps_.size(); }

  cplx& operator[](std::size_t i) { return amps_[i]; }
  const cplx& operator[](std::size_t i) const { return amps_[i]; }

  std::span<cplx> amplitudes() noexcept { return amps_; }
  std::span<const cplx> amplitudes() const noexcept { return amps_; }

  double norm() const {
    double acc = 0.0;
    for (const auto& a : amps_) acc += std::norm(a);
    return std::sqrt(acc);
  }

  cplx inner(const StateVector& other) const {
    require(other.size() == size(), ErrorCode::DimMismatch, "inner product of mismatched states");
    cplx acc{0.0, 0.0};
    for (std::size_t i = 0; i < amps_.size(); ++i) acc += std::conj(amps_[i]) * other.amps_[i];
    return acc;
  }

  /// Bit mask of qubit q inside the flat index.
  std::size_t mask(int qubit) const {
    require(qubit >= 0 && qubit < n_qubits_, ErrorCode::QubitOutOfRange,
            "qubit " + std::to_string(qubit) + " out of range");
    return std::size_t{1} << (n_qubits_ - 1 - qubit);
  }

 private:
  int n_qubits_ = 0;
  std::vector<cplx> amps_;
};

enum class Axis { X, Y, Z };

/// Applies a general 2x2 matrix [[m00, m01], [m10, m11]] to one qubit.
inline void apply_single_qubit(StateVector& state, int qubit, cplx m00, cplx m01, cplx m10, cplx m11) {
  const std::size_t bit = state.mask(qubit);
  for (std::size_t i = 0; i < state.size(); ++i) {
    if (i & bit) continue;
    const cplx a0 = state[i];
    const cplx a1 = state[i | bit];
    state[i] = m00 * a0 + m01 * a1;
    state[i | bit] = m10 * a0 + m11 * a1;
  }
}

/// exp(-i angle/2 sigma_axis) on `qubit`.
inline void apply_rotation(StateVector& state, int qubit, Axis axis, double angle) {
  const double c = std::cos(angle / 2.0);
  const double s = std::sin(angle / 2.0);
  switch (axis) {
    case Axis::X:
      apply_single_qubit(state, qubit, {c, 0.0}, {0.0, -s}, {0.0, -s}, {c, 0.0});
      break;
    case Axis::Y:
      apply_single_qubit(state, qubit, {c, 0.0}, {-s, 0.0}, {s, 0.0}, {c, 0.0});
      break;
    case Axis::Z: {
      const std::size_t bit = state.mask(qubit);
      const cplx p0{c, -s};
      const cplx p1{c, s};
      for (std::size_t i = 0; i < state.size(); ++i) state[i] *= (i & bit) ? p1 : p0;
      break;
    }
  }
}

/// Pauli sigma_axis on `qubit` (not a rotation; used by the adjoint gradient).
inline void apply_pauli(StateVector& state, int qubit, Axis axis) {
  switch (axis) {
    case Axis::X: apply_single_qubit(state, qubit, 0.0, 1.0, 1.0, 0.0); break;
    case Axis::Y: apply_single_qubit(state, qubit, 0.0, cplx{0.0, -1.0}, cplx{0.0, 1.0}, 0.0); break;
    case Axis::Z: apply_single_qubit(state, qubit, 1.0, 0.0, 0.0, -1.0); break;
  }
}

inline void apply_cz(StateVector& state, int qubit_a, int qubit_b) {
  const std::size_t ma = state.mask(qubit_a);
  const std::size_t mb = state.mask(qubit_b);
  require(qubit_a != qubit_b, ErrorCode::SameQubit, "CZ needs two distinct qubits");
  const std::size_t both = ma | mb;
  for (std::size_t i = 0; i < state.size(); ++i)
    if ((i & both) == both) state[i] = -state[i];
}

namespace detail {

// Blockwise unitary DFT on the low n_orb bits with kernel omega^(sign*m*phi)/sqrt(N).
inline void orbital_dft(StateVector& state, int n_orb, int sign) {
  require(n_orb >= 1 && n_orb < state.n_qubits() + 1, ErrorCode::InvalidDims, "bad orbital qubit count");
  const std::size_t n_phi = std::size_t{1} << n_orb;
  std::vector<cplx> twiddle(n_phi);
  for (std::size_t k = 0; k < n_phi; ++k) {
    const double angle = sign * 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n_phi);
    twiddle[k] = {std::cos(angle), std::sin(angle)};
  }
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_phi));
  std::vector<cplx> block(n_phi);
  for (std::size_t base = 0; base < state.size(); base += n_phi) {
    for (std::size_t m = 0; m < n_phi; ++m) {
      cplx acc{0.0, 0.0};
      for (std::size_t phi = 0; phi < n_phi; ++phi) acc += state[base + phi] * twiddle[(m * phi) % n_phi];
      block[m] = acc * scale;
    }
    for (std::size_t m = 0; m < n_phi; ++m) state[base + m] = block[m];
  }
}

}  // namespace detail

/// Moves the orbital register into the Fourier basis of the cyclic group:
/// a_m <- (1/sqrt N) sum_phi a_phi omega^(-m phi), omega = exp(2 pi i / N).
inline void apply_orbital_dft_inverse(StateVector& state, int n_orb) { detail::orbital_dft(state, n_orb, -1); }

/// Adjoint of apply_orbital_dft_inverse.
inline void apply_orbital_dft(StateVector& state, int n_orb) { detail::orbital_dft(state, n_orb, +1); }

struct Observable {
  enum class Kind { Z, ZProjected };

  Kind kind = Kind::Z;
  int qubit = 0;
  int n_rad = 1;
  int n_orb = 1;

  static Observable z(int qubit, int n_rad, int n_orb) { return {Kind::Z, qubit, n_rad, n_orb}; }
  /// Z_q (x) (I - |0_orb><0_orb|): drops the m = 0 orbital sector.
  static Observable z_projected(int qubit, int n_rad, int n_orb) {
    return {Kind::ZProjected, qubit, n_rad, n_orb};
  }

  /// Diagonal entry of the observable at flat index i.
  double diagonal(std::size_t i) const {
    const std::size_t n_phi = std::size_t{1} << n_orb;
    if (kind == Kind::ZProjected && (i % n_phi) == 0) return 0.0;
    const std::size_t bit = std::size_t{1} << (n_rad + n_orb - 1 - qubit);
    return (i & bit) ? -1.0 : 1.0;
  }
};

inline double expectation(const StateVector& state, const Observable& obs) {
  require(obs.qubit >= 0 && obs.qubit < obs.n_rad, ErrorCode::QubitOutOfRange,
          "observable must act on a radial qubit");
  require(obs.n_rad + obs.n_orb == state.n_qubits(), ErrorCode::DimMismatch,
          "observable register does not match state");
  double acc = 0.0;
  for (std::size_t i = 0; i < state.size(); ++i) acc += std::norm(state[i]) * obs.diagonal(i);
  return acc;
}

/// Explicit diagonal matrix of an observable; test and small-system use only.
inline CMatrix observable_matrix(const Observable& obs) {
  const int n = obs.n_rad + obs.n_orb;
  require(n <= 12, ErrorCode::TooLarge, "explicit observable limited to 12 qubits");
  const Eigen::Index dim = Eigen::Index{1} << n;
  CMatrix m = CMatrix::Zero(dim, dim);
  for (Eigen::Index i = 0; i < dim; ++i) m(i, i) = obs.diagonal(static_cast<std::size_t>(i));
  return m;
}

inline Eigen::VectorXcd to_eigen(const StateVector& state) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(state.size()));
  for (std::size_t i = 0; i < state.size(); ++i) v(static_cast<Eigen::Index>(i)) = state[i];
  return v;
}

inline CMatrix density_matrix(const StateVector& state) {
  require(state.n_qubits() <= 12, ErrorCode::TooLarge, "density matrix limited to 12 qubits");
  const Eigen::VectorXcd v = to_eigen(state);
  return v * v.adjoint();
}

}  // namespace eqml
