#pragma once

// Experiment harness: quantum-model training, evaluation, the clean/transformed
// protocol matrix and surrogate transfer sweeps.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "eqml/attacks.hpp"
#include "eqml/data.hpp"
#include "eqml/eqmodel.hpp"
#include "eqml/error.hpp"
#include "eqml/numerics.hpp"
#include "eqml/surrogate.hpp"

namespace eqml {

// ---------------------------------------------------------------------------
// Small utilities

/// splitmix64 step; derives independent stream seeds from a base seed and a tag.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t tag) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t tag_of(const std::string& s) {
  return fnv1a({reinterpret_cast<const unsigned char*>(s.data()), s.size()});
}

/// Runs body(i) for i in [0, n) on up to `threads` workers. Each index is
/// handled by exactly one worker; callers write into per-index slots.
inline void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, n); ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) body(i);
    });
  for (auto& t : pool) t.join();
}

/// EQML_THREADS overrides the requested thread count.
inline int resolve_threads(int requested) {
  if (const char* env = std::getenv("EQML_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  return std::max(1, requested);
}

// ---------------------------------------------------------------------------
// Quantum-model training

struct TrainConfig {
  int epochs = 10;
  std::size_t batch_size = 16;
  double lr = 3e-3;
};

struct QuantumTrainResult {
  ModelParams params;  // best by training accuracy, earliest epoch on ties
  ModelParams last;
  double best_accuracy = 0.0;
  std::vector<EpochStats> history;
};

inline std::vector<std::size_t> predictions(const ModelConfig& cfg, const ModelParams& params, const Dataset& ds,
                                            int threads = 1) {
  std::vector<std::size_t> out(ds.size());
  parallel_for(ds.size(), threads, [&](std::size_t i) { out[i] = predict(cfg, params, ds.samples[i]); });
  return out;
}

inline double evaluate(const ModelConfig& cfg, const ModelParams& params, const Dataset& ds, int threads = 1) {
  require(!ds.empty(), ErrorCode::EmptyDataset, "cannot evaluate on an empty dataset");
  const auto pred = predictions(cfg, params, ds, threads);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) correct += pred[i] == ds.labels[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

namespace detail {

inline EpochStats full_pass(const ModelConfig& cfg, const ModelParams& params, const Dataset& ds, int threads) {
  std::vector<double> losses(ds.size());
  std::vector<char> hit(ds.size());
  parallel_for(ds.size(), threads, [&](std::size_t i) {
    const auto logits = forward(cfg, params, ds.samples[i]);
    losses[i] = cross_entropy(logits, ds.labels[i]);
    hit[i] = argmax(logits) == ds.labels[i];
  });
  EpochStats st;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    st.loss += losses[i];
    st.accuracy += hit[i];
  }
  st.loss /= static_cast<double>(ds.size());
  st.accuracy /= static_cast<double>(ds.size());
  return st;
}

}  // namespace detail

/// Mini-batch AdamW (no weight decay) on softmax cross-entropy over the
/// readout logits. Per-sample gradients may be computed concurrently but are
/// summed in ascending sample order.
inline QuantumTrainResult train_quantum(const ModelConfig& cfg, const Dataset& train, const TrainConfig& tc,
                                        std::uint64_t seed, int threads = 1) {
  require(!train.empty(), ErrorCode::EmptyDataset, "cannot train on an empty dataset");
  require(train.n_rad == cfg.n_rad && train.n_orb == cfg.n_orb, ErrorCode::DimMismatch, "dataset does not match model");
  require(tc.batch_size >= 1 && tc.epochs >= 0, ErrorCode::InvalidArgs, "bad batch size or epoch count");
  ModelParams params = init_params(cfg, mix_seed(seed, 1));
  AdamW opt;
  opt.lr = tc.lr;
  opt.weight_decay = 0.0;
  std::mt19937_64 rng(mix_seed(seed, 2));
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  QuantumTrainResult res{params, params, -1.0, {}};
  if (tc.epochs == 0) res.best_accuracy = detail::full_pass(cfg, params, train, threads).accuracy;
  std::vector<std::vector<double>> slot;
  for (int e = 0; e < tc.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
      const std::size_t end = std::min(order.size(), start + tc.batch_size);
      slot.assign(end - start, {});
      parallel_for(end - start, threads, [&](std::size_t k) {
        const std::size_t idx = order[start + k];
        slot[k] = gradient(cfg, params, train.samples[idx], train.labels[idx]);
      });
      std::vector<double> grad(params.size(), 0.0);
      for (const auto& g : slot)
        for (std::size_t i = 0; i < g.size(); ++i) grad[i] += g[i];
      for (auto& g : grad) g /= static_cast<double>(end - start);
      if (!grad.empty()) opt.step(params.theta, grad);
    }
    const EpochStats st = detail::full_pass(cfg, params, train, threads);
    res.history.push_back(st);
    if (st.accuracy > res.best_accuracy) {
      res.best_accuracy = st.accuracy;
      res.params = params;
    }
  }
  res.last = params;
  return res;
}

// ---------------------------------------------------------------------------
// Experiment configuration

struct DatasetSpec {
  std::string name = "stm_like";
  std::string kind = "synth";  // "synth" or "idx"
  int n_classes = 4;
  std::size_t train_size = 500;
  std::size_t test_size = 100;
  double noise_sigma = 0.03;
  int image_size = 64;
  std::uint64_t seed = 20240611;
  std::string train_images, train_labels, test_images, test_labels;
  std::vector<int> exclude_labels;
};

struct SurrogateSpec {
  std::string kind = "lc";  // "lc" or "mlp"
  int epochs = 40;
  double lr = 1e-2;
  std::size_t batch_size = 128;
  double weight_decay = 1e-4;
  int hidden = 256;
};

struct ExperimentConfig {
  DatasetSpec dataset;
  int n_rad = 4;
  int n_orb = 3;
  int depth = 16;
  double logit_scale = 1.0;
  TrainConfig train;
  std::vector<std::uint64_t> seeds = {0, 1, 2};
  std::vector<Variant> variants = {Variant::Clean, Variant::T1, Variant::T2, Variant::T3};
  KeyScope key_scope = KeyScope::PerImage;
  std::vector<SurrogateSpec> surrogates = {SurrogateSpec{}};
  std::vector<AttackKind> attacks = {AttackKind::PGD};
  std::vector<double> eps_grid;
  std::optional<std::pair<double, double>> clamp_range = std::make_pair(0.0, 1.0);
  double adv_fraction = 0.5;
  std::pair<double, double> adv_eps_range = {0.05, 0.2};
  std::vector<std::string> sweep_targets = {"clean", "clean_m0", "adv"};
  std::string output_dir = "out";
  int threads = 1;

  /// 0, step, 2 step, ... up to and including max (within rounding).
  static std::vector<double> make_grid(double max, double step) {
    std::vector<double> g;
    const auto n = static_cast<int>(std::floor(max / step + 1e-9));
    for (int k = 0; k <= n; ++k) g.push_back(std::round(k * step * 1e12) / 1e12);
    return g;
  }

  /// n_rad=4, n_orb=3, D=16, 500 train / 100 test, 3 seeds, logit scale 5.
  static ExperimentConfig desk_scale() {
    ExperimentConfig c;
    c.logit_scale = 5.0;
    c.eps_grid = make_grid(0.3, 0.025);
    return c;
  }

  ModelConfig model_config(Readout readout = Readout::Standard) const {
    ModelConfig m = ModelConfig::make(n_rad, n_orb, depth, dataset.n_classes, readout);
    m.logit_scale = logit_scale;
    m.validate();
    return m;
  }

  void validate() const {
    require(!seeds.empty(), ErrorCode::InvalidArgs, "seed list must not be empty");
    require(!eps_grid.empty() && eps_grid.front() == 0.0, ErrorCode::InvalidArgs, "epsilon grid must start at 0");
    require(std::is_sorted(eps_grid.begin(), eps_grid.end()), ErrorCode::InvalidArgs, "epsilon grid must be ascending");
    require(!variants.empty() && variants.front() == Variant::Clean, ErrorCode::InvalidArgs,
            "variant list must start with clean");
    require(dataset.n_classes >= 2 && dataset.n_classes <= n_rad, ErrorCode::InvalidArgs, "need 2 <= n_classes <= n_rad");
    require(dataset.kind == "synth" || dataset.kind == "idx", ErrorCode::InvalidArgs, "dataset kind must be synth or idx");
    for (const auto& t : sweep_targets)
      require(t == "clean" || t == "clean_m0" || t == "adv", ErrorCode::InvalidArgs, "unknown sweep target '" + t + "'");
    for (const auto& s : surrogates) require(s.kind == "lc" || s.kind == "mlp", ErrorCode::InvalidArgs, "unknown surrogate kind");
  }
};

inline nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["dataset"] = {{"name", c.dataset.name},
                  {"kind", c.dataset.kind},
                  {"n_classes", c.dataset.n_classes},
                  {"train_size", c.dataset.train_size},
                  {"test_size", c.dataset.test_size},
                  {"noise_sigma", c.dataset.noise_sigma},
                  {"image_size", c.dataset.image_size},
                  {"seed", c.dataset.seed},
                  {"train_images", c.dataset.train_images},
                  {"train_labels", c.dataset.train_labels},
                  {"test_images", c.dataset.test_images},
                  {"test_labels", c.dataset.test_labels},
                  {"exclude_labels", c.dataset.exclude_labels}};
  j["grid"] = {{"n_rad", c.n_rad}, {"n_orb", c.n_orb}};
  j["model"] = {{"depth", c.depth}, {"logit_scale", c.logit_scale}};
  j["train"] = {{"epochs", c.train.epochs}, {"batch_size", c.train.batch_size}, {"lr", c.train.lr}};
  j["seeds"] = c.seeds;
  j["variants"] = nlohmann::json::array();
  for (auto v : c.variants) j["variants"].push_back(to_string(v));
  j["key_scope"] = c.key_scope == KeyScope::PerImage ? "per_image" : "per_dataset";
  j["surrogates"] = nlohmann::json::array();
  for (const auto& s : c.surrogates)
    j["surrogates"].push_back({{"kind", s.kind},
                               {"epochs", s.epochs},
                               {"lr", s.lr},
                               {"batch_size", s.batch_size},
                               {"weight_decay", s.weight_decay},
                               {"hidden", s.hidden}});
  j["attacks"] = nlohmann::json::array();
  for (auto a : c.attacks) j["attacks"].push_back(to_string(a));
  j["eps_grid"] = c.eps_grid;
  j["clamp"] = c.clamp_range ? nlohmann::json{c.clamp_range->first, c.clamp_range->second} : nlohmann::json(nullptr);
  j["adv_training"] = {{"fraction", c.adv_fraction}, {"eps_range", {c.adv_eps_range.first, c.adv_eps_range.second}}};
  j["sweep_targets"] = c.sweep_targets;
  j["output_dir"] = c.output_dir;
  j["threads"] = c.threads;
  return j;
}

/// Missing keys keep their desk-scale defaults.
inline ExperimentConfig experiment_from_json(const nlohmann::json& j) {
  ExperimentConfig c = ExperimentConfig::desk_scale();
  if (j.contains("dataset")) {
    const auto& d = j["dataset"];
    c.dataset.name = d.value("name", c.dataset.name);
    c.dataset.kind = d.value("kind", c.dataset.kind);
    c.dataset.n_classes = d.value("n_classes", c.dataset.n_classes);
    c.dataset.train_size = d.value("train_size", c.dataset.train_size);
    c.dataset.test_size = d.value("test_size", c.dataset.test_size);
    c.dataset.noise_sigma = d.value("noise_sigma", c.dataset.noise_sigma);
    c.dataset.image_size = d.value("image_size", c.dataset.image_size);
    c.dataset.seed = d.value("seed", c.dataset.seed);
    c.dataset.train_images = d.value("train_images", c.dataset.train_images);
    c.dataset.train_labels = d.value("train_labels", c.dataset.train_labels);
    c.dataset.test_images = d.value("test_images", c.dataset.test_images);
    c.dataset.test_labels = d.value("test_labels", c.dataset.test_labels);
    c.dataset.exclude_labels = d.value("exclude_labels", c.dataset.exclude_labels);
  }
  if (j.contains("grid")) {
    c.n_rad = j["grid"].value("n_rad", c.n_rad);
    c.n_orb = j["grid"].value("n_orb", c.n_orb);
  }
  if (j.contains("model")) {
    c.depth = j["model"].value("depth", c.depth);
    c.logit_scale = j["model"].value("logit_scale", c.logit_scale);
  }
  if (j.contains("train")) {
    c.train.epochs = j["train"].value("epochs", c.train.epochs);
    c.train.batch_size = j["train"].value("batch_size", c.train.batch_size);
    c.train.lr = j["train"].value("lr", c.train.lr);
  }
  if (j.contains("seeds")) c.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  if (j.contains("variants")) {
    c.variants.clear();
    for (const auto& v : j["variants"]) c.variants.push_back(variant_from_string(v.get<std::string>()));
  }
  if (j.contains("key_scope")) {
    const auto s = j["key_scope"].get<std::string>();
    require(s == "per_image" || s == "per_dataset", ErrorCode::InvalidArgs, "key_scope must be per_image or per_dataset");
    c.key_scope = s == "per_image" ? KeyScope::PerImage : KeyScope::PerDataset;
  }
  if (j.contains("surrogates")) {
    c.surrogates.clear();
    for (const auto& s : j["surrogates"]) {
      SurrogateSpec spec;
      spec.kind = s.value("kind", spec.kind);
      spec.epochs = s.value("epochs", spec.epochs);
      spec.lr = s.value("lr", spec.lr);
      spec.batch_size = s.value("batch_size", spec.batch_size);
      spec.weight_decay = s.value("weight_decay", spec.weight_decay);
      spec.hidden = s.value("hidden", spec.hidden);
      c.surrogates.push_back(spec);
    }
  }
  if (j.contains("attacks")) {
    c.attacks.clear();
    for (const auto& a : j["attacks"]) c.attacks.push_back(attack_from_string(a.get<std::string>()));
  }
  if (j.contains("eps_grid")) c.eps_grid = j["eps_grid"].get<std::vector<double>>();
  if (j.contains("clamp")) {
    if (j["clamp"].is_null())
      c.clamp_range.reset();
    else
      c.clamp_range = std::make_pair(j["clamp"].at(0).get<double>(), j["clamp"].at(1).get<double>());
  }
  if (j.contains("adv_training")) {
    c.adv_fraction = j["adv_training"].value("fraction", c.adv_fraction);
    if (j["adv_training"].contains("eps_range"))
      c.adv_eps_range = {j["adv_training"]["eps_range"].at(0).get<double>(), j["adv_training"]["eps_range"].at(1).get<double>()};
  }
  if (j.contains("sweep_targets")) c.sweep_targets = j["sweep_targets"].get<std::vector<std::string>>();
  c.output_dir = j.value("output_dir", c.output_dir);
  c.threads = j.value("threads", c.threads);
  c.validate();
  return c;
}

inline ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::Io, "cannot read config " + path);
  return experiment_from_json(nlohmann::json::parse(in));
}

// ---------------------------------------------------------------------------
// Data preparation

struct TrainTest {
  Dataset train;
  Dataset test;
};

inline TrainTest load_data(const ExperimentConfig& c) {
  const auto& d = c.dataset;
  if (d.kind == "idx") {
    const std::set<int> excl(d.exclude_labels.begin(), d.exclude_labels.end());
    const auto raw_train = ingest_idx(d.train_images, d.train_labels, excl, d.train_size);
    const auto raw_test = ingest_idx(d.test_images, d.test_labels, excl, d.test_size);
    require(!raw_train.images.empty() && !raw_test.images.empty(), ErrorCode::EmptyDataset, "IDX input produced no samples");
    const auto grid = build_grid(c.n_rad, c.n_orb, raw_train.images.front().height(), raw_train.images.front().width());
    TrainTest tt{sample_dataset(raw_train, grid), sample_dataset(raw_test, grid)};
    tt.train.meta["name"] = tt.test.meta["name"] = d.name;
    return tt;
  }
  const auto grid = build_grid(c.n_rad, c.n_orb, d.image_size, d.image_size);
  const std::size_t total = d.train_size + d.test_size;
  const auto per_class = static_cast<int>((total + d.n_classes - 1) / d.n_classes);
  const Dataset all = synth_stm_like(d.n_classes, per_class, d.noise_sigma, grid, d.seed);
  auto [train, rest] = split_dataset(all, d.train_size, mix_seed(d.seed, 7));
  Dataset test{rest.n_rad, rest.n_orb, rest.n_classes, {}, {}, rest.meta};
  for (std::size_t i = 0; i < std::min(d.test_size, rest.size()); ++i) test.push(rest.samples[i], rest.labels[i]);
  train.meta["name"] = test.meta["name"] = d.name;
  return {train, test};
}

inline Surrogate train_surrogate_spec(const SurrogateSpec& spec, const Dataset& train, std::uint64_t seed) {
  AdamW opt;
  opt.lr = spec.lr;
  opt.weight_decay = spec.weight_decay;
  const int dim = static_cast<int>(std::size_t{1} << (train.n_rad + train.n_orb));
  if (spec.kind == "lc")
    return train_surrogate(init_linear(train.n_classes, dim, mix_seed(seed, 11)), train, opt, spec.epochs, spec.batch_size,
                           mix_seed(seed, 12))
        .model;
  return train_surrogate(init_mlp(dim, spec.hidden, train.n_classes, mix_seed(seed, 13)), train, opt, spec.epochs,
                         spec.batch_size, mix_seed(seed, 14))
      .model;
}

inline VariantOptions variant_options(const ExperimentConfig& c, std::uint64_t seed, const std::string& role,
                                      const LinearModel* lc) {
  VariantOptions opt;
  opt.key_scope = c.key_scope;
  opt.seed = mix_seed(seed, tag_of(role));
  if (lc) {
    const LinearModel lc_copy = *lc;
    const auto frac = c.adv_fraction;
    const auto range = c.adv_eps_range;
    const auto adv_seed = mix_seed(seed, tag_of(role + "/adv"));
    opt.adversary = [lc_copy, frac, range, adv_seed](const Dataset& ds) {
      return build_adv_training_set(ds, lc_copy, frac, range, adv_seed);
    };
  }
  return opt;
}

// ---------------------------------------------------------------------------
// Results

struct ResultRow {
  std::string dataset;
  std::string train_variant;
  std::string eval_variant;
  std::string surrogate = "none";
  std::string attack = "none";
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  double accuracy = 0.0;
  std::size_t n_eval = 0;

  auto key() const { return std::tie(dataset, surrogate, attack, train_variant, eval_variant, epsilon, seed); }
};

inline void sort_rows(std::vector<ResultRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) { return a.key() < b.key(); });
}

// ---------------------------------------------------------------------------
// Protocol matrix: (a) train clean / test on each variant,
//                  (b) train on each variant / test clean.
// The shared clean/clean cell is emitted once per seed.

inline std::vector<ResultRow> protocol_matrix(const ExperimentConfig& c, const TrainTest& data) {
  c.validate();
  const int threads = resolve_threads(c.threads);
  const ModelConfig mcfg = c.model_config();
  const std::string name = data.train.meta.value("name", c.dataset.name);
  const bool needs_lc = std::find(c.variants.begin(), c.variants.end(), Variant::Adv) != c.variants.end();

  std::vector<std::vector<ResultRow>> per_seed(c.seeds.size());
  for (std::size_t s = 0; s < c.seeds.size(); ++s) {
    const std::uint64_t seed = c.seeds[s];
    std::optional<LinearModel> lc;
    if (needs_lc) {
      SurrogateSpec spec;
      for (const auto& sp : c.surrogates)
        if (sp.kind == "lc") spec = sp;
      lc = std::get<LinearModel>(train_surrogate_spec(spec, data.train, mix_seed(seed, tag_of("adv-lc"))));
    }
    const LinearModel* lcp = lc ? &*lc : nullptr;

    const auto clean = train_quantum(mcfg, data.train, c.train, seed, threads);
    for (auto v : c.variants) {
      const Dataset test_v = apply_variant(data.test, v, variant_options(c, seed, "test/" + to_string(v), lcp));
      per_seed[s].push_back({name, "clean", to_string(v), "none", "none", 0.0, seed,
                             evaluate(mcfg, clean.params, test_v, threads), test_v.size()});
    }
    for (auto v : c.variants) {
      if (v == Variant::Clean) continue;
      const Dataset train_v = apply_variant(data.train, v, variant_options(c, seed, "train/" + to_string(v), lcp));
      const auto trained = train_quantum(mcfg, train_v, c.train, seed, threads);
      per_seed[s].push_back({name, to_string(v), "clean", "none", "none", 0.0, seed,
                             evaluate(mcfg, trained.params, data.test, threads), data.test.size()});
    }
  }
  std::vector<ResultRow> rows;
  for (auto& r : per_seed) rows.insert(rows.end(), r.begin(), r.end());
  sort_rows(rows);
  return rows;
}

// ---------------------------------------------------------------------------
// Transfer sweeps

/// For each epsilon: craft adversarial test sets on the surrogate and report
/// (i) the surrogate on its own examples ("whitebox") and (ii) the quantum
/// target on the transferred examples ("transfer").
inline std::vector<ResultRow> transfer_sweep(const ModelConfig& target_cfg, const ModelParams& target_params,
                                             const std::string& target_label, const Surrogate& surrogate,
                                             AttackKind kind, const Dataset& test, const std::vector<double>& eps_grid,
                                             std::uint64_t seed, const std::string& dataset_name,
                                             std::optional<std::pair<double, double>> clamp = std::make_pair(0.0, 1.0),
                                             int threads = 1, bool include_whitebox = true) {
  require(!test.empty(), ErrorCode::EmptyDataset, "empty test set");
  std::vector<ResultRow> rows(eps_grid.size() * (include_whitebox ? 2 : 1));
  parallel_for(eps_grid.size(), threads, [&](std::size_t k) {
    const double eps = eps_grid[k];
    AttackConfig ac = kind == AttackKind::PGD ? AttackConfig::pgd_default(eps) : AttackConfig::fgsm_default(eps);
    ac.clamp_range = clamp;
    ac.seed = seed;
    const Dataset adv = attack_dataset(surrogate, test, ac);
    const std::string skind = surrogate_kind(surrogate);
    rows[k * (include_whitebox ? 2 : 1)] = {dataset_name, target_label, "transfer", skind, to_string(kind), eps, seed,
                                            evaluate(target_cfg, target_params, adv), adv.size()};
    if (include_whitebox) {
      const double acc = std::visit([&](const auto& m) { return surrogate_accuracy(m, adv); }, surrogate);
      rows[k * 2 + 1] = {dataset_name, "clean", "whitebox", skind, to_string(kind), eps, seed, acc, adv.size()};
    }
  });
  return rows;
}

/// Full sweep: per seed, trains the surrogates and the configured quantum
/// targets ("clean", "clean_m0", "adv"), then sweeps every surrogate x attack.
inline std::vector<ResultRow> sweep_experiment(const ExperimentConfig& c, const TrainTest& data) {
  c.validate();
  const int threads = resolve_threads(c.threads);
  const std::string name = data.train.meta.value("name", c.dataset.name);
  std::vector<ResultRow> rows;
  for (const std::uint64_t seed : c.seeds) {
    std::vector<Surrogate> surrogates;
    for (const auto& spec : c.surrogates)
      surrogates.push_back(train_surrogate_spec(spec, data.train, mix_seed(seed, tag_of("surrogate/" + spec.kind))));

    std::vector<std::tuple<std::string, ModelConfig, ModelParams>> targets;
    for (const auto& t : c.sweep_targets) {
      if (t == "clean") {
        const auto m = c.model_config(Readout::Standard);
        targets.emplace_back(t, m, train_quantum(m, data.train, c.train, seed, threads).params);
      } else if (t == "clean_m0") {
        const auto m = c.model_config(Readout::M0Suppressed);
        targets.emplace_back(t, m, train_quantum(m, data.train, c.train, seed, threads).params);
      } else {
        SurrogateSpec lc_spec;
        for (const auto& sp : c.surrogates)
          if (sp.kind == "lc") lc_spec = sp;
        const auto lc = std::get<LinearModel>(train_surrogate_spec(lc_spec, data.train, mix_seed(seed, tag_of("adv-lc"))));
        const Dataset mixed = build_adv_training_set(data.train, lc, c.adv_fraction, c.adv_eps_range,
                                                     mix_seed(seed, tag_of("train/adv/adv")));
        const auto m = c.model_config(Readout::Standard);
        targets.emplace_back(t, m, train_quantum(m, mixed, c.train, seed, threads).params);
      }
    }
    for (const auto& sur : surrogates)
      for (const auto kind : c.attacks)
        for (std::size_t ti = 0; ti < targets.size(); ++ti) {
          const auto& [label, mcfg, params] = targets[ti];
          auto part = transfer_sweep(mcfg, params, label, sur, kind, data.test, c.eps_grid, seed, name, c.clamp_range,
                                     threads, ti == 0);
          rows.insert(rows.end(), part.begin(), part.end());
        }
  }
  sort_rows(rows);
  return rows;
}

}  // namespace eqml
