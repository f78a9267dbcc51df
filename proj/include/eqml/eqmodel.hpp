#pragma once

// Rotationally equivariant classifier.
//
//   |psi>  = (I_rad (x) DFT^-1_orb) encode(x)
//   U      = prod_i [ CZ chain ] [ R_z R_y R_x on every radial qubit ]
//   logit_j = scale * <psi| U^dag M_j U |psi>
//
// Rotations touch radial qubits only and CZ is diagonal, so every gate that
// reaches the orbital register is diagonal in the Fourier basis and commutes
// with the cyclic rotation group.

#include <cmath>
#include <cstddef>
#include <fstream>
#include <numbers>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "eqml/error.hpp"
#include "eqml/numerics.hpp"
#include "eqml/ringgrid.hpp"
#include "eqml/statevec.hpp"

namespace eqml {

enum class Readout { Standard, M0Suppressed };

inline std::string to_string(Readout r) { return r == Readout::Standard ? "standard" : "m0_suppressed"; }

inline Readout readout_from_string(const std::string& s) {
  if (s == "standard") return Readout::Standard;
  if (s == "m0_suppressed" || s == "m0") return Readout::M0Suppressed;
  fail(ErrorCode::InvalidArgs, "unknown readout mode '" + s + "'");
}

struct ModelConfig {
  int n_rad = 1;
  int n_orb = 1;
  int depth = 0;
  int n_classes = 1;
  Readout readout = Readout::Standard;
  double logit_scale = 1.0;
  std::vector<std::pair<int, int>> cz_topology;

  int n_qubits() const noexcept { return n_rad + n_orb; }

  /// Nearest-neighbour chain over the whole register, crossing the radial/orbital boundary.
  static std::vector<std::pair<int, int>> chain(int n_qubits) {
    std::vector<std::pair<int, int>> pairs;
    for (int q = 0; q + 1 < n_qubits; ++q) pairs.emplace_back(q, q + 1);
    return pairs;
  }

  static ModelConfig make(int n_rad, int n_orb, int depth, int n_classes, Readout readout = Readout::Standard) {
    ModelConfig cfg{n_rad, n_orb, depth, n_classes, readout, 1.0, chain(n_rad + n_orb)};
    cfg.validate();
    return cfg;
  }

  void validate() const {
    require(n_rad >= 1 && n_orb >= 1, ErrorCode::InvalidDims, "need radial and orbital qubits");
    require(n_rad + n_orb <= 24, ErrorCode::TooLarge, "register too large for dense simulation");
    require(depth >= 0, ErrorCode::InvalidArgs, "depth must be non-negative");
    require(n_classes >= 1 && n_classes <= n_rad, ErrorCode::InvalidArgs, "need 1 <= n_classes <= n_rad");
    require(std::isfinite(logit_scale), ErrorCode::InvalidArgs, "logit scale must be finite");
    for (const auto& [a, b] : cz_topology) {
      require(a >= 0 && a < n_qubits() && b >= 0 && b < n_qubits(), ErrorCode::QubitOutOfRange, "CZ pair out of range");
      require(a != b, ErrorCode::SameQubit, "CZ pair uses one qubit twice");
    }
  }
};

/// theta[i][q][k], k = 0,1,2 for R_x, R_y, R_z, stored row-major.
struct ModelParams {
  int depth = 0;
  int n_rad = 0;
  std::vector<double> theta;

  ModelParams() = default;
  ModelParams(int depth_, int n_rad_) : depth(depth_), n_rad(n_rad_), theta(static_cast<std::size_t>(depth_) * n_rad_ * 3, 0.0) {}

  static std::size_t index(int n_rad, int layer, int qubit, int k) {
    return (static_cast<std::size_t>(layer) * n_rad + qubit) * 3 + k;
  }
  double& at(int layer, int qubit, int k) { return theta[index(n_rad, layer, qubit, k)]; }
  double at(int layer, int qubit, int k) const { return theta[index(n_rad, layer, qubit, k)]; }
  std::size_t size() const noexcept { return theta.size(); }

  bool operator==(const ModelParams&) const = default;
};

/// Uniform on [-pi, pi).
inline ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  ModelParams p(cfg.depth, cfg.n_rad);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-std::numbers::pi, std::numbers::pi);
  for (auto& t : p.theta) t = dist(rng);
  return p;
}

namespace detail {

inline void check_params(const ModelConfig& cfg, const ModelParams& params) {
  require(params.depth == cfg.depth && params.n_rad == cfg.n_rad &&
              params.theta.size() == static_cast<std::size_t>(cfg.depth) * cfg.n_rad * 3,
          ErrorCode::DimMismatch, "parameter shape does not match config");
}

inline void check_input(const ModelConfig& cfg, const SampledImage& x) {
  require(x.n_rad == cfg.n_rad && x.n_orb == cfg.n_orb, ErrorCode::DimMismatch, "input shape does not match config");
}

constexpr Axis kLayerAxes[3] = {Axis::X, Axis::Y, Axis::Z};

// <bra| sigma_axis on qubit |ket>
inline cplx pauli_element(const StateVector& bra, const StateVector& ket, int qubit, Axis axis) {
  const std::size_t bit = ket.mask(qubit);
  cplx acc{0.0, 0.0};
  for (std::size_t i = 0; i < ket.size(); ++i) {
    if (i & bit) continue;
    const std::size_t j = i | bit;
    switch (axis) {
      case Axis::X: acc += std::conj(bra[i]) * ket[j] + std::conj(bra[j]) * ket[i]; break;
      case Axis::Y: acc += std::conj(bra[i]) * (cplx{0.0, -1.0} * ket[j]) + std::conj(bra[j]) * (cplx{0.0, 1.0} * ket[i]); break;
      case Axis::Z: acc += std::conj(bra[i]) * ket[i] - std::conj(bra[j]) * ket[j]; break;
    }
  }
  return acc;
}

}  // namespace detail

/// Encoded input moved into the orbital Fourier basis.
inline StateVector prepare_state(const ModelConfig& cfg, const SampledImage& x) {
  detail::check_input(cfg, x);
  StateVector s = encode_amplitudes(x);
  apply_orbital_dft_inverse(s, cfg.n_orb);
  return s;
}

inline void apply_layer(const ModelConfig& cfg, const ModelParams& params, int layer, StateVector& state) {
  for (int q = 0; q < cfg.n_rad; ++q)
    for (int k = 0; k < 3; ++k) apply_rotation(state, q, detail::kLayerAxes[k], params.at(layer, q, k));
  for (const auto& [a, b] : cfg.cz_topology) apply_cz(state, a, b);
}

inline void apply_circuit(const ModelConfig& cfg, const ModelParams& params, StateVector& state) {
  detail::check_params(cfg, params);
  for (int i = 0; i < cfg.depth; ++i) apply_layer(cfg, params, i, state);
}

inline std::vector<Observable> readout_observables(const ModelConfig& cfg) {
  std::vector<Observable> obs;
  for (int j = 0; j < cfg.n_classes; ++j)
    obs.push_back(cfg.readout == Readout::Standard ? Observable::z(j, cfg.n_rad, cfg.n_orb)
                                                   : Observable::z_projected(j, cfg.n_rad, cfg.n_orb));
  return obs;
}

/// Logits from an already-evolved state.
inline std::vector<double> readout(const ModelConfig& cfg, const StateVector& evolved) {
  std::vector<double> logits;
  for (const auto& o : readout_observables(cfg)) logits.push_back(cfg.logit_scale * expectation(evolved, o));
  return logits;
}

inline std::vector<double> forward(const ModelConfig& cfg, const ModelParams& params, const SampledImage& x) {
  StateVector s = prepare_state(cfg, x);
  apply_circuit(cfg, params, s);
  return readout(cfg, s);
}

inline std::size_t predict(const ModelConfig& cfg, const ModelParams& params, const SampledImage& x) {
  return argmax(forward(cfg, params, x));
}

inline double loss(const ModelConfig& cfg, const ModelParams& params, const SampledImage& x, std::size_t y) {
  require(y < static_cast<std::size_t>(cfg.n_classes), ErrorCode::LabelOutOfRange, "label out of range");
  return cross_entropy(forward(cfg, params, x), y);
}

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;
  std::vector<double> logits;
};

/// Exact gradient by reverse (adjoint) sweep: one forward pass plus one
/// backward pass regardless of the parameter count.
inline LossAndGrad loss_and_gradient(const ModelConfig& cfg, const ModelParams& params, const SampledImage& x,
                                     std::size_t y) {
  require(y < static_cast<std::size_t>(cfg.n_classes), ErrorCode::LabelOutOfRange, "label out of range");
  StateVector phi = prepare_state(cfg, x);
  apply_circuit(cfg, params, phi);

  LossAndGrad out;
  out.logits = readout(cfg, phi);
  out.loss = cross_entropy(out.logits, y);
  out.grad.assign(params.size(), 0.0);
  if (cfg.depth == 0) return out;

  const std::vector<double> p = softmax(out.logits);
  const auto obs = readout_observables(cfg);
  StateVector lambda = phi;
  for (std::size_t i = 0; i < phi.size(); ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < obs.size(); ++j) {
      const double coeff = cfg.logit_scale * (p[j] - (j == y ? 1.0 : 0.0));
      d += coeff * obs[j].diagonal(i);
    }
    lambda[i] *= d;
  }

  for (int layer = cfg.depth - 1; layer >= 0; --layer) {
    for (auto it = cfg.cz_topology.rbegin(); it != cfg.cz_topology.rend(); ++it) {
      apply_cz(phi, it->first, it->second);
      apply_cz(lambda, it->first, it->second);
    }
    for (int q = cfg.n_rad - 1; q >= 0; --q)
      for (int k = 2; k >= 0; --k) {
        const Axis axis = detail::kLayerAxes[k];
        out.grad[ModelParams::index(cfg.n_rad, layer, q, k)] = detail::pauli_element(lambda, phi, q, axis).imag();
        apply_rotation(phi, q, axis, -params.at(layer, q, k));
        apply_rotation(lambda, q, axis, -params.at(layer, q, k));
      }
  }
  return out;
}

inline std::vector<double> gradient(const ModelConfig& cfg, const ModelParams& params, const SampledImage& x,
                                    std::size_t y) {
  return loss_and_gradient(cfg, params, x, y).grad;
}

/// Same contract as gradient(), computed by the parameter-shift rule. Costs two
/// circuit evaluations per angle; kept as an independent route for checking.
inline std::vector<double> gradient_parameter_shift(const ModelConfig& cfg, const ModelParams& params,
                                                    const SampledImage& x, std::size_t y) {
  require(y < static_cast<std::size_t>(cfg.n_classes), ErrorCode::LabelOutOfRange, "label out of range");
  const auto logits = forward(cfg, params, x);
  const auto p = softmax(logits);
  std::vector<double> grad(params.size(), 0.0);
  ModelParams shifted = params;
  for (std::size_t k = 0; k < params.size(); ++k) {
    shifted.theta[k] = params.theta[k] + std::numbers::pi / 2.0;
    const auto plus = forward(cfg, shifted, x);
    shifted.theta[k] = params.theta[k] - std::numbers::pi / 2.0;
    const auto minus = forward(cfg, shifted, x);
    shifted.theta[k] = params.theta[k];
    double g = 0.0;
    for (std::size_t j = 0; j < logits.size(); ++j) g += (p[j] - (j == y ? 1.0 : 0.0)) * (plus[j] - minus[j]) / 2.0;
    grad[k] = g;
  }
  return grad;
}

/// Dense unitary of the variational part U_theta (no encoding, no DFT).
inline CMatrix circuit_unitary(const ModelConfig& cfg, const ModelParams& params) {
  require(cfg.n_qubits() <= 10, ErrorCode::TooLarge, "explicit unitary limited to 10 qubits");
  const std::size_t dim = std::size_t{1} << cfg.n_qubits();
  CMatrix u(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  for (std::size_t c = 0; c < dim; ++c) {
    StateVector s = StateVector::basis(cfg.n_qubits(), c);
    apply_circuit(cfg, params, s);
    for (std::size_t r = 0; r < dim; ++r) u(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = s[r];
  }
  return u;
}

// ---------------------------------------------------------------------------
// Checkpoints

inline constexpr int kModelCheckpointVersion = 1;

inline nlohmann::json to_json(const ModelConfig& cfg, const ModelParams& params) {
  nlohmann::json j;
  j["format_version"] = kModelCheckpointVersion;
  j["n_rad"] = cfg.n_rad;
  j["n_orb"] = cfg.n_orb;
  j["depth"] = cfg.depth;
  j["n_classes"] = cfg.n_classes;
  j["readout"] = to_string(cfg.readout);
  j["logit_scale"] = cfg.logit_scale;
  j["cz_topology"] = nlohmann::json::array();
  for (const auto& [a, b] : cfg.cz_topology) j["cz_topology"].push_back({a, b});
  j["theta"] = params.theta;
  return j;
}

inline std::pair<ModelConfig, ModelParams> model_from_json(const nlohmann::json& j) {
  require(j.value("format_version", -1) == kModelCheckpointVersion, ErrorCode::UnsupportedVersion,
          "unsupported model checkpoint version");
  ModelConfig cfg;
  cfg.n_rad = j.at("n_rad").get<int>();
  cfg.n_orb = j.at("n_orb").get<int>();
  cfg.depth = j.at("depth").get<int>();
  cfg.n_classes = j.at("n_classes").get<int>();
  cfg.readout = readout_from_string(j.at("readout").get<std::string>());
  cfg.logit_scale = j.at("logit_scale").get<double>();
  for (const auto& pair : j.at("cz_topology")) cfg.cz_topology.emplace_back(pair.at(0).get<int>(), pair.at(1).get<int>());
  cfg.validate();
  ModelParams p(cfg.depth, cfg.n_rad);
  auto theta = j.at("theta").get<std::vector<double>>();
  require(theta.size() == p.theta.size(), ErrorCode::DimMismatch, "theta length does not match config");
  p.theta = std::move(theta);
  return {cfg, p};
}

inline void save_model(const std::string& path, const ModelConfig& cfg, const ModelParams& params) {
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path);
  out << to_json(cfg, params).dump(2) << '\n';
}

inline std::pair<ModelConfig, ModelParams> load_model(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot read " + path);
  return model_from_json(nlohmann::json::parse(in));
}

}  // namespace eqml
