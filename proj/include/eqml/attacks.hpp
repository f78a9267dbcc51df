#pragma once

// FGSM / PGD against surrogates, in the flattened sampled representation.
// sign(0) = 0. The default clamp range is [0, 1].

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "eqml/data.hpp"
#include "eqml/error.hpp"
#include "eqml/numerics.hpp"
#include "eqml/surrogate.hpp"

namespace eqml {

enum class AttackKind { FGSM, PGD };

inline std::string to_string(AttackKind k) { return k == AttackKind::FGSM ? "fgsm" : "pgd"; }

inline AttackKind attack_from_string(const std::string& s) {
  if (s == "fgsm" || s == "FGSM") return AttackKind::FGSM;
  if (s == "pgd" || s == "PGD") return AttackKind::PGD;
  fail(ErrorCode::InvalidArgs, "unknown attack '" + s + "'");
}

struct AttackConfig {
  AttackKind kind = AttackKind::FGSM;
  double epsilon = 0.0;
  int steps = 10;
  double step_size = 1e-3;
  std::optional<std::pair<double, double>> clamp_range = std::make_pair(0.0, 1.0);
  std::uint64_t seed = 0;

  /// PGD with T = 10 and alpha = max(eps / T, 1e-3).
  static AttackConfig pgd_default(double eps) {
    AttackConfig c;
    c.kind = AttackKind::PGD;
    c.epsilon = eps;
    c.steps = 10;
    c.step_size = std::max(eps / 10.0, 1e-3);
    return c;
  }

  static AttackConfig fgsm_default(double eps) {
    AttackConfig c;
    c.kind = AttackKind::FGSM;
    c.epsilon = eps;
    return c;
  }

  void validate() const {
    require(epsilon >= 0.0 && std::isfinite(epsilon), ErrorCode::InvalidArgs, "epsilon must be >= 0");
    if (kind == AttackKind::PGD) {
      require(steps >= 1, ErrorCode::InvalidArgs, "PGD needs at least one step");
      require(step_size > 0.0, ErrorCode::InvalidArgs, "PGD step size must be positive");
    }
    if (clamp_range) require(clamp_range->first <= clamp_range->second, ErrorCode::InvalidArgs, "empty clamp range");
  }

  nlohmann::json to_json() const {
    nlohmann::json j = {{"kind", to_string(kind)}, {"epsilon", epsilon}, {"seed", seed}};
    if (kind == AttackKind::PGD) {
      j["steps"] = steps;
      j["step_size"] = step_size;
    }
    j["clamp"] = clamp_range ? nlohmann::json{clamp_range->first, clamp_range->second} : nlohmann::json(nullptr);
    return j;
  }
};

namespace detail {

inline double clamp_opt(double v, const AttackConfig& cfg) {
  return cfg.clamp_range ? std::clamp(v, cfg.clamp_range->first, cfg.clamp_range->second) : v;
}

}  // namespace detail

template <class Model>
std::vector<double> fgsm(const Model& model, std::span<const double> x, std::size_t y, const AttackConfig& cfg) {
  cfg.validate();
  const auto g = input_gradient(model, x, y);
  std::vector<double> adv(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) adv[i] = detail::clamp_opt(x[i] + cfg.epsilon * sign0(g[i]), cfg);
  return adv;
}

/// T steps of x <- Proj_{B_eps(x0)}(clamp(x + alpha sign(grad))), starting at x0.
/// `on_iterate` sees every iterate after projection.
template <class Model>
std::vector<double> pgd(const Model& model, std::span<const double> x0, std::size_t y, const AttackConfig& cfg,
                        const std::function<void(std::span<const double>)>& on_iterate = {}) {
  cfg.validate();
  std::vector<double> x(x0.begin(), x0.end());
  for (int t = 0; t < cfg.steps; ++t) {
    const auto g = input_gradient(model, x, y);
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double stepped = detail::clamp_opt(x[i] + cfg.step_size * sign0(g[i]), cfg);
      x[i] = std::clamp(stepped, x0[i] - cfg.epsilon, x0[i] + cfg.epsilon);
    }
    if (on_iterate) on_iterate(x);
  }
  return x;
}

template <class Model>
std::vector<double> run_attack(const Model& model, std::span<const double> x, std::size_t y, const AttackConfig& cfg) {
  return cfg.kind == AttackKind::FGSM ? fgsm(model, x, y, cfg) : pgd(model, x, y, cfg);
}

inline std::vector<double> run_attack(const Surrogate& s, std::span<const double> x, std::size_t y, const AttackConfig& cfg) {
  return std::visit([&](const auto& m) { return run_attack(m, x, y, cfg); }, s);
}

/// Adversarial copy of a whole dataset, with provenance in meta.
inline Dataset attack_dataset(const Surrogate& s, const Dataset& ds, const AttackConfig& cfg) {
  Dataset out = ds;
  for (std::size_t i = 0; i < ds.size(); ++i)
    out.samples[i].values = run_attack(s, ds.samples[i].values, ds.labels[i], cfg);
  out.record("attack", {{"surrogate", surrogate_kind(s)},
                        {"surrogate_checksum", surrogate_checksum(s)},
                        {"attack", cfg.to_json()}});
  return out;
}

/// Rows chosen for adversarial replacement and their budgets. Stream order:
/// shuffle indices, keep the first round(fraction * N), sort them ascending,
/// then draw one epsilon per kept row in that order.
inline std::vector<std::pair<std::size_t, double>> adv_selection(std::size_t n, double fraction,
                                                                 std::pair<double, double> eps_range, std::uint64_t seed) {
  require(fraction >= 0.0 && fraction <= 1.0, ErrorCode::InvalidArgs, "fraction must be in [0, 1]");
  require(eps_range.first >= 0.0 && eps_range.first <= eps_range.second, ErrorCode::InvalidArgs, "bad epsilon range");
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  std::vector<std::size_t> chosen(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(chosen.begin(), chosen.end());
  std::uniform_real_distribution<double> eps(eps_range.first, eps_range.second);
  std::vector<std::pair<std::size_t, double>> out;
  for (auto i : chosen) out.emplace_back(i, eps(rng));
  return out;
}

/// Replaces a seeded subset of rows by FGSM-on-LC counterparts with per-row
/// epsilon ~ U(eps_range). Labels are unchanged.
inline Dataset build_adv_training_set(const Dataset& ds, const LinearModel& lc, double fraction = 0.5,
                                      std::pair<double, double> eps_range = {0.05, 0.2}, std::uint64_t seed = 0) {
  require(!ds.empty(), ErrorCode::EmptyDataset, "cannot build adversarial set from an empty dataset");
  Dataset out = ds;
  for (const auto& [i, eps] : adv_selection(ds.size(), fraction, eps_range, seed)) {
    AttackConfig cfg = AttackConfig::fgsm_default(eps);
    out.samples[i].values = fgsm(lc, ds.samples[i].values, ds.labels[i], cfg);
  }
  out.record("adv_training", {{"fraction", fraction},
                              {"eps_range", {eps_range.first, eps_range.second}},
                              {"seed", seed},
                              {"surrogate_checksum", surrogate_checksum(Surrogate{lc})}});
  return out;
}

}  // namespace eqml
