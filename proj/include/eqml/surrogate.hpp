#pragma once

// Classical surrogates on the flattened radial-orbital representation
// (index r * N_phi + phi): a linear classifier and a one-hidden-layer MLP,
// trained with AdamW on softmax cross-entropy.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "eqml/data.hpp"
#include "eqml/error.hpp"
#include "eqml/numerics.hpp"

namespace eqml {

/// f_c(x) = sum_i W[c, i] x_i + b_c. Parameters are stored flat: W row-major, then b.
struct LinearModel {
  int n_classes = 0;
  int input_dim = 0;
  std::vector<double> params;

  LinearModel() = default;
  LinearModel(int classes, int dim)
      : n_classes(classes), input_dim(dim), params(static_cast<std::size_t>(classes) * (dim + 1), 0.0) {
    require(classes >= 1 && dim >= 1, ErrorCode::InvalidDims, "empty linear model");
  }

  double& w(int c, int i) { return params[static_cast<std::size_t>(c) * input_dim + i]; }
  double w(int c, int i) const { return params[static_cast<std::size_t>(c) * input_dim + i]; }
  double& b(int c) { return params[static_cast<std::size_t>(n_classes) * input_dim + c]; }
  double b(int c) const { return params[static_cast<std::size_t>(n_classes) * input_dim + c]; }

  std::span<const double> weights() const { return {params.data(), static_cast<std::size_t>(n_classes) * input_dim}; }

  bool operator==(const LinearModel&) const = default;
};

/// x -> W2 relu(W1 x + b1) + b2. Flat layout: W1 (H x D), b1, W2 (C x H), b2.
struct MlpModel {
  int input_dim = 0;
  int hidden = 256;
  int n_classes = 0;
  std::vector<double> params;

  MlpModel() = default;
  MlpModel(int dim, int hidden_width, int classes)
      : input_dim(dim), hidden(hidden_width), n_classes(classes),
        params(static_cast<std::size_t>(hidden_width) * (dim + 1) + static_cast<std::size_t>(classes) * (hidden_width + 1), 0.0) {
    require(dim >= 1 && hidden_width >= 1 && classes >= 1, ErrorCode::InvalidDims, "empty MLP");
  }

  std::size_t w1_off() const { return 0; }
  std::size_t b1_off() const { return static_cast<std::size_t>(hidden) * input_dim; }
  std::size_t w2_off() const { return b1_off() + hidden; }
  std::size_t b2_off() const { return w2_off() + static_cast<std::size_t>(n_classes) * hidden; }

  double& w1(int h, int i) { return params[w1_off() + static_cast<std::size_t>(h) * input_dim + i]; }
  double w1(int h, int i) const { return params[w1_off() + static_cast<std::size_t>(h) * input_dim + i]; }
  double& b1(int h) { return params[b1_off() + h]; }
  double b1(int h) const { return params[b1_off() + h]; }
  double& w2(int c, int h) { return params[w2_off() + static_cast<std::size_t>(c) * hidden + h]; }
  double w2(int c, int h) const { return params[w2_off() + static_cast<std::size_t>(c) * hidden + h]; }
  double& b2(int c) { return params[b2_off() + c]; }
  double b2(int c) const { return params[b2_off() + c]; }

  bool operator==(const MlpModel&) const = default;
};

using Surrogate = std::variant<LinearModel, MlpModel>;

inline std::string surrogate_kind(const LinearModel&) { return "lc"; }
inline std::string surrogate_kind(const MlpModel&) { return "mlp"; }
inline std::string surrogate_kind(const Surrogate& s) {
  return std::visit([](const auto& m) { return surrogate_kind(m); }, s);
}

/// Uniform in +-1/sqrt(fan_in).
inline LinearModel init_linear(int n_classes, int input_dim, std::uint64_t seed) {
  LinearModel m(n_classes, input_dim);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-1.0 / std::sqrt(input_dim), 1.0 / std::sqrt(input_dim));
  for (auto& p : m.params) p = d(rng);
  return m;
}

inline MlpModel init_mlp(int input_dim, int hidden, int n_classes, std::uint64_t seed) {
  MlpModel m(input_dim, hidden, n_classes);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d1(-1.0 / std::sqrt(input_dim), 1.0 / std::sqrt(input_dim));
  std::uniform_real_distribution<double> d2(-1.0 / std::sqrt(hidden), 1.0 / std::sqrt(hidden));
  for (std::size_t i = 0; i < m.w2_off(); ++i) m.params[i] = d1(rng);
  for (std::size_t i = m.w2_off(); i < m.params.size(); ++i) m.params[i] = d2(rng);
  return m;
}

inline std::vector<double> surrogate_forward(const LinearModel& m, std::span<const double> x) {
  require(x.size() == static_cast<std::size_t>(m.input_dim), ErrorCode::DimMismatch, "input length does not match model");
  std::vector<double> logits(static_cast<std::size_t>(m.n_classes));
  for (int c = 0; c < m.n_classes; ++c) {
    double acc = m.b(c);
    for (int i = 0; i < m.input_dim; ++i) acc += m.w(c, i) * x[static_cast<std::size_t>(i)];
    logits[static_cast<std::size_t>(c)] = acc;
  }
  return logits;
}

inline std::vector<double> surrogate_forward(const MlpModel& m, std::span<const double> x) {
  require(x.size() == static_cast<std::size_t>(m.input_dim), ErrorCode::DimMismatch, "input length does not match model");
  std::vector<double> a(static_cast<std::size_t>(m.hidden));
  for (int h = 0; h < m.hidden; ++h) {
    double acc = m.b1(h);
    for (int i = 0; i < m.input_dim; ++i) acc += m.w1(h, i) * x[static_cast<std::size_t>(i)];
    a[static_cast<std::size_t>(h)] = std::max(acc, 0.0);
  }
  std::vector<double> logits(static_cast<std::size_t>(m.n_classes));
  for (int c = 0; c < m.n_classes; ++c) {
    double acc = m.b2(c);
    for (int h = 0; h < m.hidden; ++h) acc += m.w2(c, h) * a[static_cast<std::size_t>(h)];
    logits[static_cast<std::size_t>(c)] = acc;
  }
  return logits;
}

inline std::vector<double> surrogate_forward(const Surrogate& s, std::span<const double> x) {
  return std::visit([&](const auto& m) { return surrogate_forward(m, x); }, s);
}

struct LossGrads {
  double loss = 0.0;
  std::vector<double> param_grad;
  std::vector<std::vector<double>> input_grad;  // one per batch row, of the mean loss
};

namespace detail {

inline void check_batch(std::span<const std::vector<double>> batch, std::span<const std::size_t> labels, int n_classes) {
  require(!batch.empty(), ErrorCode::EmptyDataset, "empty batch");
  require(batch.size() == labels.size(), ErrorCode::DimMismatch, "batch and label counts differ");
  for (auto y : labels) require(y < static_cast<std::size_t>(n_classes), ErrorCode::LabelOutOfRange, "label out of range");
}

}  // namespace detail

inline LossGrads surrogate_loss_grads(const LinearModel& m, std::span<const std::vector<double>> batch,
                                      std::span<const std::size_t> labels) {
  detail::check_batch(batch, labels, m.n_classes);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  LossGrads out;
  out.param_grad.assign(m.params.size(), 0.0);
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const auto& x = batch[n];
    const auto logits = surrogate_forward(m, x);
    out.loss += cross_entropy(logits, labels[n]) * inv_b;
    auto delta = softmax(logits);
    delta[labels[n]] -= 1.0;
    std::vector<double> gx(x.size(), 0.0);
    for (int c = 0; c < m.n_classes; ++c) {
      const double d = delta[static_cast<std::size_t>(c)] * inv_b;
      for (int i = 0; i < m.input_dim; ++i) {
        out.param_grad[static_cast<std::size_t>(c) * m.input_dim + i] += d * x[static_cast<std::size_t>(i)];
        gx[static_cast<std::size_t>(i)] += d * m.w(c, i);
      }
      out.param_grad[static_cast<std::size_t>(m.n_classes) * m.input_dim + c] += d;
    }
    out.input_grad.push_back(std::move(gx));
  }
  return out;
}

inline LossGrads surrogate_loss_grads(const MlpModel& m, std::span<const std::vector<double>> batch,
                                      std::span<const std::size_t> labels) {
  detail::check_batch(batch, labels, m.n_classes);
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  const auto hsz = static_cast<std::size_t>(m.hidden);
  LossGrads out;
  out.param_grad.assign(m.params.size(), 0.0);
  std::vector<double> pre(hsz), act(hsz), dact(hsz);
  for (std::size_t n = 0; n < batch.size(); ++n) {
    const auto& x = batch[n];
    require(x.size() == static_cast<std::size_t>(m.input_dim), ErrorCode::DimMismatch, "input length does not match model");
    for (int h = 0; h < m.hidden; ++h) {
      double acc = m.b1(h);
      for (int i = 0; i < m.input_dim; ++i) acc += m.w1(h, i) * x[static_cast<std::size_t>(i)];
      pre[static_cast<std::size_t>(h)] = acc;
      act[static_cast<std::size_t>(h)] = std::max(acc, 0.0);
    }
    std::vector<double> logits(static_cast<std::size_t>(m.n_classes));
    for (int c = 0; c < m.n_classes; ++c) {
      double acc = m.b2(c);
      for (int h = 0; h < m.hidden; ++h) acc += m.w2(c, h) * act[static_cast<std::size_t>(h)];
      logits[static_cast<std::size_t>(c)] = acc;
    }
    out.loss += cross_entropy(logits, labels[n]) * inv_b;
    auto delta = softmax(logits);
    delta[labels[n]] -= 1.0;

    std::fill(dact.begin(), dact.end(), 0.0);
    for (int c = 0; c < m.n_classes; ++c) {
      const double d = delta[static_cast<std::size_t>(c)] * inv_b;
      for (int h = 0; h < m.hidden; ++h) {
        out.param_grad[m.w2_off() + static_cast<std::size_t>(c) * hsz + h] += d * act[static_cast<std::size_t>(h)];
        dact[static_cast<std::size_t>(h)] += d * m.w2(c, h);
      }
      out.param_grad[m.b2_off() + static_cast<std::size_t>(c)] += d;
    }
    std::vector<double> gx(x.size(), 0.0);
    for (int h = 0; h < m.hidden; ++h) {
      if (pre[static_cast<std::size_t>(h)] <= 0.0) continue;
      const double d = dact[static_cast<std::size_t>(h)];
      for (int i = 0; i < m.input_dim; ++i) {
        out.param_grad[m.w1_off() + static_cast<std::size_t>(h) * m.input_dim + i] += d * x[static_cast<std::size_t>(i)];
        gx[static_cast<std::size_t>(i)] += d * m.w1(h, i);
      }
      out.param_grad[m.b1_off() + static_cast<std::size_t>(h)] += d;
    }
    out.input_grad.push_back(std::move(gx));
  }
  return out;
}

inline LossGrads surrogate_loss_grads(const Surrogate& s, std::span<const std::vector<double>> batch,
                                      std::span<const std::size_t> labels) {
  return std::visit([&](const auto& m) { return surrogate_loss_grads(m, batch, labels); }, s);
}

/// Gradient of the single-sample loss with respect to the input.
template <class Model>
std::vector<double> input_gradient(const Model& m, std::span<const double> x, std::size_t y) {
  const std::vector<std::vector<double>> batch{std::vector<double>(x.begin(), x.end())};
  const std::vector<std::size_t> labels{y};
  return surrogate_loss_grads(m, batch, labels).input_grad.front();
}

// ---------------------------------------------------------------------------
// Optimizer

/// Adam with decoupled weight decay: theta <- theta - lr (m^ / (sqrt(v^) + eps) + wd theta).
struct AdamW {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-4;
  long step_count = 0;
  std::vector<double> m;
  std::vector<double> v;

  void step(std::vector<double>& params, std::span<const double> grad) {
    require(grad.size() == params.size(), ErrorCode::DimMismatch, "gradient shape does not match parameters");
    if (m.size() != params.size()) {
      m.assign(params.size(), 0.0);
      v.assign(params.size(), 0.0);
    }
    ++step_count;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step_count));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
      const double mh = m[i] / c1;
      const double vh = v[i] / c2;
      params[i] -= lr * (mh / (std::sqrt(vh) + eps) + weight_decay * params[i]);
    }
  }
};

// ---------------------------------------------------------------------------
// Training

struct EpochStats {
  double loss = 0.0;      // full-pass training loss after the epoch
  double accuracy = 0.0;  // accuracy on the selection set after the epoch
};

template <class Model>
struct TrainResult {
  Model model;  // best checkpoint by selection accuracy (earliest wins ties)
  Model last;
  double best_accuracy = 0.0;
  std::vector<EpochStats> history;
};

inline std::vector<std::vector<double>> flatten(const Dataset& ds) {
  std::vector<std::vector<double>> xs;
  xs.reserve(ds.size());
  for (const auto& s : ds.samples) xs.push_back(s.values);
  return xs;
}

template <class Model>
double surrogate_accuracy(const Model& m, const Dataset& ds) {
  require(!ds.empty(), ErrorCode::EmptyDataset, "empty dataset");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (argmax(surrogate_forward(m, ds.samples[i].values)) == ds.labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

/// Mini-batch AdamW with seeded shuffling. `selection` (defaults to the
/// training set) picks the retained checkpoint.
template <class Model>
TrainResult<Model> train_surrogate(Model model, const Dataset& train, AdamW opt, int epochs, std::size_t batch_size,
                                   std::uint64_t seed, const Dataset* selection = nullptr) {
  require(!train.empty(), ErrorCode::EmptyDataset, "cannot train on an empty dataset");
  require(batch_size >= 1 && epochs >= 0, ErrorCode::InvalidArgs, "bad batch size or epoch count");
  const Dataset& sel = selection ? *selection : train;
  const auto xs = flatten(train);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);

  TrainResult<Model> res{model, model, epochs > 0 ? -1.0 : surrogate_accuracy(model, sel), {}};
  for (int e = 0; e < epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t end = std::min(order.size(), start + batch_size);
      std::vector<std::vector<double>> bx;
      std::vector<std::size_t> by;
      for (std::size_t k = start; k < end; ++k) {
        bx.push_back(xs[order[k]]);
        by.push_back(train.labels[order[k]]);
      }
      const auto g = surrogate_loss_grads(model, bx, by);
      opt.step(model.params, g.param_grad);
    }
    EpochStats st;
    st.loss = surrogate_loss_grads(model, xs, train.labels).loss;
    st.accuracy = surrogate_accuracy(model, sel);
    res.history.push_back(st);
    if (st.accuracy > res.best_accuracy) {
      res.best_accuracy = st.accuracy;
      res.model = model;
    }
  }
  res.last = model;
  return res;
}

// ---------------------------------------------------------------------------
// Ring-invariance score

/// S = 1 - ||W - P W||_F / ||W||_F, where P averages each (class, ring) row
/// of weights over the orbital index.
inline double ring_invariance_score(const LinearModel& m, int n_rad, int n_orb) {
  const std::size_t n_r = std::size_t{1} << n_rad;
  const std::size_t n_phi = std::size_t{1} << n_orb;
  require(static_cast<std::size_t>(m.input_dim) == n_r * n_phi, ErrorCode::DimMismatch, "model input does not match grid");
  double total = 0.0;
  double resid = 0.0;
  for (int c = 0; c < m.n_classes; ++c)
    for (std::size_t r = 0; r < n_r; ++r) {
      double mean = 0.0;
      for (std::size_t p = 0; p < n_phi; ++p) mean += m.w(c, static_cast<int>(r * n_phi + p));
      mean /= static_cast<double>(n_phi);
      for (std::size_t p = 0; p < n_phi; ++p) {
        const double w = m.w(c, static_cast<int>(r * n_phi + p));
        total += w * w;
        resid += (w - mean) * (w - mean);
      }
    }
  require(total > 0.0, ErrorCode::ZeroWeights, "ring-invariance score undefined for zero weights");
  return 1.0 - std::sqrt(resid) / std::sqrt(total);
}

// ---------------------------------------------------------------------------
// Checkpoints: u32 header length | JSON header | little-endian float32 weights

inline constexpr int kSurrogateCheckpointVersion = 1;

inline std::vector<unsigned char> float32_blob(std::span<const double> params) {
  std::vector<unsigned char> blob;
  blob.reserve(params.size() * 4);
  for (double p : params) {
    const auto f = static_cast<float>(p);
    std::uint32_t bits = 0;
    std::memcpy(&bits, &f, sizeof bits);
    for (int k = 0; k < 4; ++k) blob.push_back(static_cast<unsigned char>((bits >> (8 * k)) & 0xFF));
  }
  return blob;
}

/// Checksum of the float32 weight blob; identifies a surrogate in provenance records.
inline std::uint64_t surrogate_checksum(const Surrogate& s) {
  return std::visit([](const auto& m) { return fnv1a(float32_blob(m.params)); }, s);
}

inline void save_surrogate(const std::string& path, const Surrogate& s) {
  nlohmann::json header;
  header["format_version"] = kSurrogateCheckpointVersion;
  std::vector<unsigned char> blob;
  std::visit(
      [&](const auto& m) {
        header["kind"] = surrogate_kind(m);
        header["n_classes"] = m.n_classes;
        header["input_dim"] = m.input_dim;
        header["n_weights"] = m.params.size();
        blob = float32_blob(m.params);
      },
      s);
  if (const auto* mlp = std::get_if<MlpModel>(&s)) header["hidden"] = mlp->hidden;
  header["fnv1a64"] = fnv1a(blob);
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::Io, "cannot write " + path);
  const auto len = static_cast<std::uint32_t>(text.size());
  for (int k = 0; k < 4; ++k) out.put(static_cast<char>((len >> (8 * k)) & 0xFF));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.write(reinterpret_cast<const char*>(blob.data()), static_cast<std::streamsize>(blob.size()));
}

inline Surrogate load_surrogate(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot read " + path);
  const std::vector<unsigned char> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  require(bytes.size() >= 4, ErrorCode::Io, "truncated surrogate checkpoint");
  std::uint32_t len = 0;
  for (int k = 0; k < 4; ++k) len |= std::uint32_t{bytes[static_cast<std::size_t>(k)]} << (8 * k);
  require(bytes.size() >= 4 + std::size_t{len}, ErrorCode::Io, "truncated surrogate header");
  const auto header = nlohmann::json::parse(bytes.begin() + 4, bytes.begin() + 4 + len);
  require(header.value("format_version", -1) == kSurrogateCheckpointVersion, ErrorCode::UnsupportedVersion,
          "unsupported surrogate checkpoint version");
  const std::vector<unsigned char> blob(bytes.begin() + 4 + len, bytes.end());
  const auto n = header.at("n_weights").get<std::size_t>();
  require(blob.size() == n * 4, ErrorCode::Io, "surrogate weight blob has wrong length");
  require(header.at("fnv1a64").get<std::uint64_t>() == fnv1a(blob), ErrorCode::ChecksumMismatch,
          "surrogate weight checksum mismatch");
  std::vector<double> params(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits = 0;
    for (int k = 0; k < 4; ++k) bits |= std::uint32_t{blob[i * 4 + static_cast<std::size_t>(k)]} << (8 * k);
    float f = 0.0f;
    std::memcpy(&f, &bits, sizeof f);
    params[i] = f;
  }
  const auto kind = header.at("kind").get<std::string>();
  const int classes = header.at("n_classes").get<int>();
  const int dim = header.at("input_dim").get<int>();
  if (kind == "lc") {
    LinearModel m(classes, dim);
    require(m.params.size() == n, ErrorCode::DimMismatch, "weight count does not match shape");
    m.params = std::move(params);
    return m;
  }
  require(kind == "mlp", ErrorCode::InvalidArgs, "unknown surrogate kind '" + kind + "'");
  MlpModel m(dim, header.at("hidden").get<int>(), classes);
  require(m.params.size() == n, ErrorCode::DimMismatch, "weight count does not match shape");
  m.params = std::move(params);
  return m;
}

}  // namespace eqml
