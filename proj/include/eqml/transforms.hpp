#pragma once

// Diagnostic input transformations acting ring-wise on SampledImage:
//   T1  x_r -> O(lambda) x_r   orthogonal circulant, same map on every ring
//   T2  x_r -> P_r x_r          independent permutation per ring
//   T3  x_r -> x_r - mean(x_r)  ring-mean removal

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <random>
#include <vector>

#include <json.hpp>

#include "eqml/error.hpp"
#include "eqml/ringgrid.hpp"
#include "eqml/statevec.hpp"

namespace eqml {

/// Diagonal phases lambda_m of a real orthogonal circulant O = F^dag diag(lambda) F.
struct CirculantKey {
  std::vector<cplx> lambda;

  std::size_t n_phi() const noexcept { return lambda.size(); }

  static CirculantKey identity(int n_orb) { return {std::vector<cplx>(std::size_t{1} << n_orb, cplx{1.0, 0.0})}; }

  /// Key with lambda_0 = 1, lambda_{N-m} = conj(lambda_m), lambda_{N/2} = +-1.
  static CirculantKey from_free_phases(int n_orb, const std::vector<double>& phases, bool nyquist_negative) {
    const std::size_t n = std::size_t{1} << n_orb;
    require(phases.size() == (n > 2 ? n / 2 - 1 : 0), ErrorCode::InvalidArgs, "wrong number of free phases");
    CirculantKey k{std::vector<cplx>(n, cplx{1.0, 0.0})};
    for (std::size_t m = 1; m < n / 2; ++m) {
      k.lambda[m] = std::polar(1.0, phases[m - 1]);
      k.lambda[n - m] = std::conj(k.lambda[m]);
    }
    k.lambda[n / 2] = nyquist_negative ? -1.0 : 1.0;
    return k;
  }

  void validate(double tol = 1e-12) const {
    const std::size_t n = lambda.size();
    require(n >= 2 && (n & (n - 1)) == 0, ErrorCode::InvalidDims, "key length must be a power of two >= 2");
    require(std::abs(lambda[0] - cplx{1.0, 0.0}) <= tol, ErrorCode::InvalidArgs, "lambda_0 must be 1");
    for (std::size_t m = 0; m < n; ++m) {
      require(std::abs(std::abs(lambda[m]) - 1.0) <= tol, ErrorCode::InvalidArgs, "phases must be unimodular");
      require(std::abs(lambda[(n - m) % n] - std::conj(lambda[m])) <= tol, ErrorCode::InvalidArgs,
              "phases must be conjugate symmetric");
    }
    require(std::abs(lambda[n / 2].imag()) <= tol, ErrorCode::InvalidArgs, "Nyquist phase must be +-1");
  }
};

template <class Rng>
CirculantKey sample_circulant_key(int n_orb, Rng& rng) {
  require(n_orb >= 1, ErrorCode::InvalidDims, "need at least one orbital qubit");
  const std::size_t n = std::size_t{1} << n_orb;
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::vector<double> free;
  for (std::size_t m = 1; m < n / 2; ++m) free.push_back(phase(rng));
  std::bernoulli_distribution coin(0.5);
  return CirculantKey::from_free_phases(n_orb, free, coin(rng));
}

/// Real N_phi x N_phi matrix O(lambda)_{p,q} = (1/N) sum_m lambda_m omega^{m (p - q)}.
inline Eigen::MatrixXd circulant_matrix(const CirculantKey& key) {
  key.validate(1e-9);
  const std::size_t n = key.n_phi();
  Eigen::MatrixXd o(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t p = 0; p < n; ++p)
    for (std::size_t q = 0; q < n; ++q) {
      cplx acc{0.0, 0.0};
      const std::size_t d = (p + n - q) % n;
      for (std::size_t m = 0; m < n; ++m) {
        const double angle = 2.0 * std::numbers::pi * static_cast<double>((m * d) % n) / static_cast<double>(n);
        acc += key.lambda[m] * cplx{std::cos(angle), std::sin(angle)};
      }
      o(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) = acc.real() / static_cast<double>(n);
    }
  return o;
}

namespace detail {

inline SampledImage apply_ring_matrix(const SampledImage& x, const Eigen::MatrixXd& o) {
  require(o.rows() == static_cast<Eigen::Index>(x.n_phi()), ErrorCode::DimMismatch, "key size does not match N_phi");
  SampledImage out(x.n_rad, x.n_orb);
  const std::size_t n = x.n_phi();
  for (std::size_t r = 0; r < x.n_r(); ++r)
    for (std::size_t p = 0; p < n; ++p) {
      double acc = 0.0;
      for (std::size_t q = 0; q < n; ++q) acc += o(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) * x.at(r, q);
      out.at(r, p) = acc;
    }
  return out;
}

}  // namespace detail

inline SampledImage apply_t1(const SampledImage& x, const CirculantKey& key) {
  return detail::apply_ring_matrix(x, circulant_matrix(key));
}

/// x_r(guess) = O(guess)^T x'_r: a preimage consistent with the scrambled image.
inline SampledImage candidate_preimage(const SampledImage& scrambled, const CirculantKey& guess) {
  return detail::apply_ring_matrix(scrambled, circulant_matrix(guess).transpose());
}

/// One permutation of {0..N_phi-1} per ring; (P x)_phi = x_{perm[phi]}.
struct PermutationKey {
  std::vector<std::vector<std::size_t>> perms;

  static PermutationKey identity(int n_rad, int n_orb) {
    std::vector<std::size_t> id(std::size_t{1} << n_orb);
    std::iota(id.begin(), id.end(), std::size_t{0});
    return {std::vector<std::vector<std::size_t>>(std::size_t{1} << n_rad, id)};
  }

  void validate(std::size_t n_r, std::size_t n_phi) const {
    require(perms.size() == n_r, ErrorCode::DimMismatch, "need one permutation per ring");
    for (const auto& p : perms) {
      require(p.size() == n_phi, ErrorCode::DimMismatch, "permutation length must be N_phi");
      std::vector<bool> seen(n_phi, false);
      for (auto v : p) {
        require(v < n_phi && !seen[v], ErrorCode::InvalidArgs, "ring permutation is not a bijection");
        seen[v] = true;
      }
    }
  }
};

template <class Rng>
PermutationKey sample_permutation_key(int n_rad, int n_orb, Rng& rng) {
  PermutationKey k = PermutationKey::identity(n_rad, n_orb);
  for (auto& p : k.perms) std::shuffle(p.begin(), p.end(), rng);
  return k;
}

inline SampledImage apply_t2(const SampledImage& x, const PermutationKey& key) {
  key.validate(x.n_r(), x.n_phi());
  SampledImage out(x.n_rad, x.n_orb);
  for (std::size_t r = 0; r < x.n_r(); ++r)
    for (std::size_t p = 0; p < x.n_phi(); ++p) out.at(r, p) = x.at(r, key.perms[r][p]);
  return out;
}

inline SampledImage apply_t3(const SampledImage& x) {
  const auto means = ring_means(x);
  SampledImage out = x;
  for (std::size_t r = 0; r < x.n_r(); ++r)
    for (std::size_t p = 0; p < x.n_phi(); ++p) out.at(r, p) -= means[r];
  return out;
}

// Key serialization: phases as [re, im] pairs, permutations as integer arrays.

inline nlohmann::json to_json(const CirculantKey& key) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& l : key.lambda) arr.push_back({l.real(), l.imag()});
  return {{"kind", "circulant"}, {"lambda", arr}};
}

inline CirculantKey circulant_key_from_json(const nlohmann::json& j) {
  require(j.value("kind", "") == "circulant", ErrorCode::InvalidArgs, "not a circulant key");
  CirculantKey k;
  for (const auto& pair : j.at("lambda")) k.lambda.emplace_back(pair.at(0).get<double>(), pair.at(1).get<double>());
  k.validate(1e-9);
  return k;
}

inline nlohmann::json to_json(const PermutationKey& key) { return {{"kind", "permutation"}, {"perms", key.perms}}; }

inline PermutationKey permutation_key_from_json(const nlohmann::json& j) {
  require(j.value("kind", "") == "permutation", ErrorCode::InvalidArgs, "not a permutation key");
  PermutationKey k{j.at("perms").get<std::vector<std::vector<std::size_t>>>()};
  require(!k.perms.empty(), ErrorCode::InvalidArgs, "empty permutation key");
  k.validate(k.perms.size(), k.perms.front().size());
  return k;
}

}  // namespace eqml
