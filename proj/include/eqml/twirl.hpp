#pragma once

// Twirling over the cyclic rotation group and the rotation-invariant
// statistics it leaves behind.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "eqml/eqmodel.hpp"
#include "eqml/error.hpp"
#include "eqml/ringgrid.hpp"
#include "eqml/statevec.hpp"

namespace eqml {

/// x~_{r,m} = (1/sqrt N_phi) sum_phi x_{r,phi} omega^{-m phi}.
struct FourierCoeffs {
  int n_rad = 0;
  int n_orb = 0;
  std::vector<cplx> coeffs;
  double norm = 0.0;

  std::size_t n_r() const noexcept { return std::size_t{1} << n_rad; }
  std::size_t n_phi() const noexcept { return std::size_t{1} << n_orb; }
  cplx at(std::size_t r, std::size_t m) const { return coeffs[r * n_phi() + m]; }
};

inline FourierCoeffs fourier_coeffs(const SampledImage& x) {
  FourierCoeffs f{x.n_rad, x.n_orb, {}, x.norm()};
  const std::size_t n_phi = x.n_phi();
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_phi));
  f.coeffs.resize(x.size());
  for (std::size_t r = 0; r < x.n_r(); ++r)
    for (std::size_t m = 0; m < n_phi; ++m) {
      cplx acc{0.0, 0.0};
      for (std::size_t p = 0; p < n_phi; ++p) {
        const double angle = -2.0 * std::numbers::pi * static_cast<double>((m * p) % n_phi) / static_cast<double>(n_phi);
        acc += x.at(r, p) * cplx{std::cos(angle), std::sin(angle)};
      }
      f.coeffs[r * n_phi + m] = acc * scale;
    }
  return f;
}

/// Block-diagonal twirled state: one rank-1 N_r x N_r block per sector m,
/// B_m[r, r'] = x~_{r,m} conj(x~_{r',m}) / ||x||^2.
struct TwirledState {
  int n_rad = 0;
  int n_orb = 0;
  std::vector<CMatrix> blocks;

  double trace() const {
    double t = 0.0;
    for (const auto& b : blocks) t += b.trace().real();
    return t;
  }
};

inline TwirledState twirl_blocks(const SampledImage& x) {
  const double n = x.norm();
  require(n > 0.0, ErrorCode::NormZero, "cannot twirl an all-zero sample");
  const FourierCoeffs f = fourier_coeffs(x);
  const auto n_r = static_cast<Eigen::Index>(x.n_r());
  TwirledState t{x.n_rad, x.n_orb, {}};
  for (std::size_t m = 0; m < x.n_phi(); ++m) {
    Eigen::VectorXcd v(n_r);
    for (Eigen::Index r = 0; r < n_r; ++r) v(r) = f.at(static_cast<std::size_t>(r), m);
    t.blocks.push_back(v * v.adjoint() / (n * n));
  }
  return t;
}

/// Unitary F_orb with F|phi> = sum_m omega^{-m phi}/sqrt(N) |m>, on the full register.
inline CMatrix orbital_fourier_matrix(int n_rad, int n_orb) {
  require(n_rad + n_orb <= 10, ErrorCode::TooLarge, "explicit matrices limited to 10 qubits");
  const std::size_t n_phi = std::size_t{1} << n_orb;
  const std::size_t dim = std::size_t{1} << (n_rad + n_orb);
  CMatrix f = CMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_phi));
  for (std::size_t base = 0; base < dim; base += n_phi)
    for (std::size_t m = 0; m < n_phi; ++m)
      for (std::size_t p = 0; p < n_phi; ++p) {
        const double angle = -2.0 * std::numbers::pi * static_cast<double>((m * p) % n_phi) / static_cast<double>(n_phi);
        f(static_cast<Eigen::Index>(base + m), static_cast<Eigen::Index>(base + p)) =
            scale * cplx{std::cos(angle), std::sin(angle)};
      }
  return f;
}

/// R(g)|r, phi> = |r, phi + g mod N_phi>, pixel basis.
inline CMatrix cyclic_shift_matrix(int n_rad, int n_orb, long long g) {
  require(n_rad + n_orb <= 10, ErrorCode::TooLarge, "explicit matrices limited to 10 qubits");
  const auto n_phi = static_cast<long long>(std::size_t{1} << n_orb);
  const std::size_t dim = std::size_t{1} << (n_rad + n_orb);
  const long long shift = ((g % n_phi) + n_phi) % n_phi;
  CMatrix r = CMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < dim; ++i) {
    const auto phi = static_cast<long long>(i) % n_phi;
    const auto base = static_cast<long long>(i) - phi;
    r(static_cast<Eigen::Index>(base + (phi + shift) % n_phi), static_cast<Eigen::Index>(i)) = 1.0;
  }
  return r;
}

/// (1/N_phi) sum_g R(g) rho R(g)^dag with pixel-basis cyclic shifts.
inline CMatrix twirl_density_explicit(const CMatrix& rho, int n_rad, int n_orb) {
  require(n_rad + n_orb <= 10, ErrorCode::TooLarge, "explicit twirl limited to 10 qubits");
  require(rho.rows() == (Eigen::Index{1} << (n_rad + n_orb)) && rho.cols() == rho.rows(), ErrorCode::DimMismatch,
          "density matrix does not match register");
  const long long n_phi = 1LL << n_orb;
  CMatrix acc = CMatrix::Zero(rho.rows(), rho.cols());
  for (long long g = 0; g < n_phi; ++g) {
    const CMatrix r = cyclic_shift_matrix(n_rad, n_orb, g);
    acc += r * rho * r.adjoint();
  }
  return acc / static_cast<double>(n_phi);
}

inline CMatrix twirl_density_explicit(const StateVector& state, int n_rad, int n_orb) {
  require(n_rad + n_orb <= 10, ErrorCode::TooLarge, "explicit twirl limited to 10 qubits");
  require(state.n_qubits() == n_rad + n_orb, ErrorCode::DimMismatch, "state does not match register");
  return twirl_density_explicit(density_matrix(state), n_rad, n_orb);
}

/// Full 2^n matrix of a TwirledState, in the Fourier basis |r, m>.
inline CMatrix blocks_to_fourier_basis(const TwirledState& t) {
  const std::size_t n_phi = std::size_t{1} << t.n_orb;
  const std::size_t n_r = std::size_t{1} << t.n_rad;
  const auto dim = static_cast<Eigen::Index>(n_phi * n_r);
  CMatrix out = CMatrix::Zero(dim, dim);
  for (std::size_t m = 0; m < n_phi; ++m)
    for (std::size_t r = 0; r < n_r; ++r)
      for (std::size_t rp = 0; rp < n_r; ++rp)
        out(static_cast<Eigen::Index>(r * n_phi + m), static_cast<Eigen::Index>(rp * n_phi + m)) =
            t.blocks[m](static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(rp));
  return out;
}

/// Same matrix moved back to the pixel basis |r, phi>.
inline CMatrix blocks_to_pixel_basis(const TwirledState& t) {
  const CMatrix f = orbital_fourier_matrix(t.n_rad, t.n_orb);
  return f.adjoint() * blocks_to_fourier_basis(t) * f;
}

/// C_{r,r'}(dphi) = sum_a x_{r,a} x_{r',(a - dphi) mod N_phi}.
struct CorrelationTable {
  int n_rad = 0;
  int n_orb = 0;
  std::vector<double> values;

  std::size_t n_r() const noexcept { return std::size_t{1} << n_rad; }
  std::size_t n_phi() const noexcept { return std::size_t{1} << n_orb; }
  double at(std::size_t r, std::size_t rp, std::size_t dphi) const {
    return values[(r * n_r() + rp) * n_phi() + dphi];
  }
  bool operator==(const CorrelationTable&) const = default;
};

/// Products are summed in sorted order, so a rotated input (same summands,
/// permuted) gives bit-identical values.
inline CorrelationTable circular_correlations(const SampledImage& x) {
  CorrelationTable c{x.n_rad, x.n_orb, std::vector<double>(x.n_r() * x.n_r() * x.n_phi(), 0.0)};
  const std::size_t n_phi = x.n_phi();
  std::vector<double> terms(n_phi);
  for (std::size_t r = 0; r < x.n_r(); ++r)
    for (std::size_t rp = 0; rp < x.n_r(); ++rp)
      for (std::size_t d = 0; d < n_phi; ++d) {
        for (std::size_t a = 0; a < n_phi; ++a) terms[a] = x.at(r, a) * x.at(rp, (a + n_phi - d) % n_phi);
        std::sort(terms.begin(), terms.end());
        double acc = 0.0;
        for (double t : terms) acc += t;
        c.values[(r * x.n_r() + rp) * n_phi + d] = acc;
      }
  return c;
}

inline std::string correlations_csv(const CorrelationTable& c, const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  std::ostringstream os;
  os.precision(17);
  os << "r,r_prime,delta_phi,value\n";
  for (const auto& [r, rp] : pairs) {
    require(r < c.n_r() && rp < c.n_r(), ErrorCode::InvalidArgs, "ring pair out of range");
    for (std::size_t d = 0; d < c.n_phi(); ++d) os << r << ',' << rp << ',' << d << ',' << c.at(r, rp, d) << '\n';
  }
  return os.str();
}

struct TwirlCheck {
  std::vector<double> lhs;  // Tr[M_j W rho W^dag] via the statevector
  std::vector<double> rhs;  // Tr[M_j W T(rho) W^dag] via explicit matrices
  double gap = 0.0;         // max_j |lhs_j - rhs_j|
};

/// Compares a model on rho against the same model on the twirled rho.
/// `circuit` is applied to the prepared Fourier-basis state; the full map is
/// W = circuit * (I (x) DFT^-1), and rho is the pixel-basis input state.
inline TwirlCheck twirl_identity_check(int n_rad, int n_orb, const std::vector<Observable>& observables,
                                       const std::function<void(StateVector&)>& circuit, const SampledImage& x) {
  require(n_rad + n_orb <= 10, ErrorCode::TooLarge, "twirl identity check limited to 10 qubits");
  require(x.n_rad == n_rad && x.n_orb == n_orb, ErrorCode::DimMismatch, "input shape does not match register");
  const int n = n_rad + n_orb;
  const std::size_t dim = std::size_t{1} << n;

  StateVector psi = encode_amplitudes(x);
  StateVector evolved = psi;
  apply_orbital_dft_inverse(evolved, n_orb);
  circuit(evolved);

  CMatrix w(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t c = 0; c < dim; ++c) {
    StateVector s = StateVector::basis(n, c);
    apply_orbital_dft_inverse(s, n_orb);
    circuit(s);
    for (std::size_t r = 0; r < dim; ++r) w(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = s[r];
  }
  const CMatrix twirled = twirl_density_explicit(density_matrix(psi), n_rad, n_orb);
  const CMatrix out = w * twirled * w.adjoint();

  TwirlCheck check;
  for (const auto& o : observables) {
    const double l = expectation(evolved, o);
    double r = 0.0;
    for (std::size_t i = 0; i < dim; ++i) r += o.diagonal(i) * out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)).real();
    check.lhs.push_back(l);
    check.rhs.push_back(r);
    check.gap = std::max(check.gap, std::abs(l - r));
  }
  return check;
}

inline TwirlCheck twirl_identity_check(const ModelConfig& cfg, const ModelParams& params, const SampledImage& x) {
  return twirl_identity_check(cfg.n_rad, cfg.n_orb, readout_observables(cfg),
                              [&](StateVector& s) { apply_circuit(cfg, params, s); }, x);
}

}  // namespace eqml
