// eqml command-line driver.
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "eqml/attacks.hpp"
#include "eqml/data.hpp"
#include "eqml/eqmodel.hpp"
#include "eqml/harness.hpp"
#include "eqml/report.hpp"
#include "eqml/surrogate.hpp"
#include "eqml/transforms.hpp"
#include "eqml/twirl.hpp"

namespace fs = std::filesystem;
using namespace eqml;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> threads;
  bool desk_scale = false;
};

/// Config file values override desk-scale defaults; --desk-scale restores the
/// preset sizes afterwards; --seed/--threads/--out override last.
ExperimentConfig resolve_config(const Globals& g) {
  ExperimentConfig c = g.config.empty() ? ExperimentConfig::desk_scale() : load_experiment(g.config);
  if (g.desk_scale) {
    const ExperimentConfig d = ExperimentConfig::desk_scale();
    c.n_rad = d.n_rad;
    c.n_orb = d.n_orb;
    c.depth = d.depth;
    c.logit_scale = d.logit_scale;
    c.train = d.train;
    c.seeds = d.seeds;
    c.eps_grid = d.eps_grid;
    c.dataset.train_size = d.dataset.train_size;
    c.dataset.test_size = d.dataset.test_size;
  }
  if (g.seed) c.seeds = {*g.seed};
  if (g.threads) c.threads = *g.threads;
  if (!g.out.empty()) c.output_dir = g.out;
  c.validate();
  return c;
}

std::string out_dir(const Globals& g, const ExperimentConfig& c) {
  const std::string dir = g.out.empty() ? c.output_dir : g.out;
  fs::create_directories(dir);
  return dir;
}

std::string in_out(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void write_json(const std::string& path, const nlohmann::json& j) { write_text(path, j.dump(2) + "\n"); }

std::uint64_t first_seed(const Globals& g) { return g.seed.value_or(0); }

std::vector<std::pair<std::size_t, std::size_t>> all_pairs(std::size_t n_r) {
  std::vector<std::pair<std::size_t, std::size_t>> p;
  for (std::size_t r = 0; r < n_r; ++r)
    for (std::size_t rp = r; rp < n_r; ++rp) p.emplace_back(r, rp);
  return p;
}

// ---------------------------------------------------------------------------
// analyze

int analyze_twirl(int qubits, int instances, std::uint64_t seed) {
  const int n_rad = qubits / 2;
  const int n_orb = qubits - n_rad;
  const auto cfg = ModelConfig::make(n_rad, n_orb, 4, 2, Readout::Standard);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < instances; ++t) {
    const auto params = init_params(cfg, mix_seed(seed, static_cast<std::uint64_t>(t)));
    SampledImage x(n_rad, n_orb);
    for (auto& v : x.values) v = u(rng);
    worst = std::max(worst, twirl_identity_check(cfg, params, x).gap);
  }
  std::printf("twirl-identity n_rad=%d n_orb=%d instances=%d max_gap=%.3e\n", n_rad, n_orb, instances, worst);
  return 0;
}

int analyze_equivariance(int qubits, int instances, std::uint64_t seed) {
  const int n_rad = qubits / 2;
  const int n_orb = qubits - n_rad;
  const auto cfg = ModelConfig::make(n_rad, n_orb, 8, std::min(2, 1 << n_rad), Readout::Standard);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst = 0.0;
  std::size_t flips = 0;
  for (int t = 0; t < instances; ++t) {
    const auto params = init_params(cfg, mix_seed(seed, static_cast<std::uint64_t>(t)));
    SampledImage x(n_rad, n_orb);
    for (auto& v : x.values) v = u(rng);
    const auto base = forward(cfg, params, x);
    for (long long g = 1; g < (1LL << n_orb); ++g) {
      const auto l = forward(cfg, params, rotate_samples(x, g));
      for (std::size_t j = 0; j < l.size(); ++j) worst = std::max(worst, std::abs(l[j] - base[j]));
      flips += argmax(l) != argmax(base);
    }
  }
  std::printf("equivariance n_rad=%d n_orb=%d instances=%d max_logit_diff=%.3e prediction_flips=%zu\n", n_rad, n_orb,
              instances, worst, flips);
  return 0;
}

int analyze_correlations(const std::string& data, std::size_t index, const std::string& out) {
  require(!data.empty(), ErrorCode::InvalidArgs, "--data is required for correlations");
  const Dataset ds = load_dataset(data);
  require(index < ds.size(), ErrorCode::InvalidArgs, "--index out of range");
  const std::string csv = correlation_export(ds.samples[index], all_pairs(ds.samples[index].n_r()));
  if (out.empty())
    std::cout << csv;
  else
    write_text(out, csv);
  return 0;
}

int analyze_sring(const std::string& model, int n_rad, int n_orb) {
  require(!model.empty(), ErrorCode::InvalidArgs, "--model is required for sring");
  const Surrogate s = load_surrogate(model);
  require(std::holds_alternative<LinearModel>(s), ErrorCode::InvalidArgs, "S_ring needs a linear surrogate");
  const auto& lc = std::get<LinearModel>(s);
  if (n_rad == 0 && n_orb == 0) {
    // Infer a square-ish split of the input dimension.
    const int bits = std::countr_zero(static_cast<unsigned>(lc.input_dim));
    n_rad = bits - bits / 2;
    n_orb = bits / 2;
  }
  std::printf("sring=%.12f\n", ring_invariance_score(lc, n_rad, n_orb));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rotation-equivariant quantum classifier toolkit: data, training, transforms, attacks, reports."};
  app.footer("Config files are JSON; see docs/config-schema.md. Exit codes: 0 ok, 1 usage error, 2 runtime error.");
  app.require_subcommand(1);

  Globals g;
  app.add_option("--config", g.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "Seed (replaces the config seed list)");
  app.add_option("--out", g.out, "Output directory or file");
  app.add_option("--threads", g.threads, "Worker threads (EQML_THREADS overrides)")->check(CLI::PositiveNumber);
  app.add_flag("--desk-scale", g.desk_scale, "Force the desk-scale preset sizes");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "Build train/test EQDS datasets from the config");
  gen->fallthrough();

  // encode
  std::string enc_data;
  std::size_t enc_index = 0;
  auto* enc = app.add_subcommand("encode", "Amplitude-encode one sample and print the state as JSON");
  enc->add_option("--data", enc_data, "EQDS dataset")->required()->check(CLI::ExistingFile);
  enc->add_option("--index", enc_index, "Sample index");
  enc->fallthrough();

  // train-quantum
  std::string tq_data, tq_readout = "standard";
  std::optional<int> tq_epochs;
  auto* tq = app.add_subcommand("train-quantum", "Train the equivariant quantum model");
  tq->add_option("--data", tq_data, "Training EQDS dataset")->required()->check(CLI::ExistingFile);
  tq->add_option("--readout", tq_readout, "Readout mode")->check(CLI::IsMember({"standard", "m0_suppressed"}));
  tq->add_option("--epochs", tq_epochs, "Epochs (overrides config)");
  tq->fallthrough();

  // train-surrogate
  std::string ts_data, ts_kind = "lc";
  auto* ts = app.add_subcommand("train-surrogate", "Train a classical surrogate (lc or mlp)");
  ts->add_option("--data", ts_data, "Training EQDS dataset")->required()->check(CLI::ExistingFile);
  ts->add_option("--kind", ts_kind, "Surrogate kind")->check(CLI::IsMember({"lc", "mlp"}));
  ts->fallthrough();

  // attack
  std::string at_model, at_data, at_kind = "pgd";
  double at_eps = 0.1;
  auto* at = app.add_subcommand("attack", "Craft adversarial examples on a surrogate");
  at->add_option("--model", at_model, "Surrogate checkpoint")->required()->check(CLI::ExistingFile);
  at->add_option("--data", at_data, "EQDS dataset")->required()->check(CLI::ExistingFile);
  at->add_option("--attack", at_kind, "Attack")->check(CLI::IsMember({"fgsm", "pgd"}));
  at->add_option("--epsilon", at_eps, "l_inf budget")->check(CLI::NonNegativeNumber);
  at->fallthrough();

  // transform
  std::string tr_data, tr_variant = "T1", tr_scope = "per_image";
  auto* tr = app.add_subcommand("transform", "Apply a T1/T2/T3 variant to a dataset");
  tr->add_option("--data", tr_data, "EQDS dataset")->required()->check(CLI::ExistingFile);
  tr->add_option("--variant", tr_variant, "Variant")->check(CLI::IsMember({"clean", "T1", "T2", "T3"}));
  tr->add_option("--key-scope", tr_scope, "Key scope")->check(CLI::IsMember({"per_image", "per_dataset"}));
  tr->fallthrough();

  // analyze
  std::string an_check, an_data, an_model;
  int an_qubits = 4, an_instances = 20, an_rad = 0, an_orb = 0;
  std::size_t an_index = 0;
  auto* an = app.add_subcommand("analyze", "Diagnostics: twirl identity, equivariance, correlations, S_ring");
  an->add_option("--check", an_check, "Check to run")
      ->required()
      ->check(CLI::IsMember({"twirl-identity", "equivariance", "correlations", "sring"}));
  an->add_option("--qubits", an_qubits, "Total qubits for synthetic checks")->check(CLI::Range(2, 10));
  an->add_option("--instances", an_instances, "Random instances")->check(CLI::PositiveNumber);
  an->add_option("--data", an_data, "EQDS dataset (correlations)");
  an->add_option("--index", an_index, "Sample index (correlations)");
  an->add_option("--model", an_model, "Linear surrogate checkpoint (sring)");
  an->add_option("--n-rad", an_rad, "Radial qubits (sring)");
  an->add_option("--n-orb", an_orb, "Orbital qubits (sring)");
  an->fallthrough();

  auto* pr = app.add_subcommand("protocol", "Run the clean/transformed protocol matrix");
  pr->fallthrough();
  auto* sw = app.add_subcommand("sweep", "Run surrogate transfer-attack sweeps");
  sw->fallthrough();

  std::vector<std::string> rp_inputs;
  auto* rp = app.add_subcommand("report", "Aggregate result CSVs into panels, series and a JSON summary");
  rp->add_option("inputs", rp_inputs, "Result CSV files")->required()->check(CLI::ExistingFile);
  rp->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (gen->parsed()) {
      const auto c = resolve_config(g);
      const auto dir = out_dir(g, c);
      const auto data = load_data(c);
      save_dataset(data.train, in_out(dir, "train.eqds"));
      save_dataset(data.test, in_out(dir, "test.eqds"));
      write_json(in_out(dir, "config.json"), to_json(c));
      std::printf("wrote %zu train / %zu test samples to %s\n", data.train.size(), data.test.size(), dir.c_str());
    } else if (enc->parsed()) {
      const Dataset ds = load_dataset(enc_data);
      require(enc_index < ds.size(), ErrorCode::InvalidArgs, "--index out of range");
      const auto state = encode_amplitudes(ds.samples[enc_index]);
      nlohmann::json j = {{"index", enc_index},
                          {"label", ds.labels[enc_index]},
                          {"n_qubits", ds.n_rad + ds.n_orb},
                          {"norm", ds.samples[enc_index].norm()}};
      for (std::size_t i = 0; i < state.size(); ++i) j["amplitudes"].push_back(state[i].real());
      std::cout << j.dump(2) << "\n";
    } else if (tq->parsed()) {
      auto c = resolve_config(g);
      if (tq_epochs) c.train.epochs = *tq_epochs;
      const Dataset ds = load_dataset(tq_data);
      c.n_rad = ds.n_rad;
      c.n_orb = ds.n_orb;
      c.dataset.n_classes = ds.n_classes;
      const auto mcfg = c.model_config(readout_from_string(tq_readout));
      const auto res = train_quantum(mcfg, ds, c.train, c.seeds.front(), resolve_threads(c.threads));
      const auto dir = out_dir(g, c);
      save_model(in_out(dir, "model_" + tq_readout + ".json"), mcfg, res.params);
      std::string hist = "epoch,loss,accuracy\n";
      for (std::size_t e = 0; e < res.history.size(); ++e) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g\n", e + 1, res.history[e].loss, res.history[e].accuracy);
        hist += buf;
      }
      write_text(in_out(dir, "history_" + tq_readout + ".csv"), hist);
      std::printf("best train accuracy %.4f\n", res.best_accuracy);
    } else if (ts->parsed()) {
      const auto c = resolve_config(g);
      const Dataset ds = load_dataset(ts_data);
      SurrogateSpec spec;
      for (const auto& s : c.surrogates)
        if (s.kind == ts_kind) spec = s;
      spec.kind = ts_kind;
      const Surrogate s = train_surrogate_spec(spec, ds, first_seed(g));
      const auto dir = out_dir(g, c);
      save_surrogate(in_out(dir, "surrogate_" + ts_kind + ".bin"), s);
      const double acc = std::visit([&](const auto& m) { return surrogate_accuracy(m, ds); }, s);
      std::printf("train accuracy %.4f\n", acc);
      if (const auto* lc = std::get_if<LinearModel>(&s)) std::printf("sring=%.12f\n", ring_invariance_score(*lc, ds.n_rad, ds.n_orb));
    } else if (at->parsed()) {
      const auto c = resolve_config(g);
      const Surrogate s = load_surrogate(at_model);
      const Dataset ds = load_dataset(at_data);
      AttackConfig ac = attack_from_string(at_kind) == AttackKind::PGD ? AttackConfig::pgd_default(at_eps)
                                                                          : AttackConfig::fgsm_default(at_eps);
      ac.clamp_range = c.clamp_range;
      ac.seed = first_seed(g);
      const Dataset adv = attack_dataset(s, ds, ac);
      const auto dir = out_dir(g, c);
      save_dataset(adv, in_out(dir, "adv_" + at_kind + ".eqds"));
      const double acc = std::visit([&](const auto& m) { return surrogate_accuracy(m, adv); }, s);
      std::printf("surrogate accuracy on adversarial set %.4f\n", acc);
    } else if (tr->parsed()) {
      const auto c = resolve_config(g);
      const Dataset ds = load_dataset(tr_data);
      VariantOptions opt;
      opt.key_scope = tr_scope == "per_image" ? KeyScope::PerImage : KeyScope::PerDataset;
      opt.seed = first_seed(g);
      const Dataset out = apply_variant(ds, variant_from_string(tr_variant), opt);
      const auto dir = out_dir(g, c);
      save_dataset(out, in_out(dir, tr_variant + ".eqds"));
      std::printf("wrote %zu samples\n", out.size());
    } else if (an->parsed()) {
      if (an_check == "twirl-identity") return analyze_twirl(an_qubits, an_instances, first_seed(g));
      if (an_check == "equivariance") return analyze_equivariance(an_qubits, an_instances, first_seed(g));
      if (an_check == "correlations") return analyze_correlations(an_data, an_index, g.out);
      return analyze_sring(an_model, an_rad, an_orb);
    } else if (pr->parsed()) {
      const auto c = resolve_config(g);
      const auto rows = protocol_matrix(c, load_data(c));
      const auto dir = out_dir(g, c);
      write_text(in_out(dir, "protocol.csv"), rows_to_csv(rows));
      write_text(in_out(dir, "panels.txt"), panels_to_text(table1_panels(rows)));
      write_json(in_out(dir, "protocol_summary.json"), summary_json(rows));
      std::cout << panels_to_text(table1_panels(rows));
    } else if (sw->parsed()) {
      const auto c = resolve_config(g);
      const auto rows = sweep_experiment(c, load_data(c));
      const auto dir = out_dir(g, c);
      write_text(in_out(dir, "sweep.csv"), rows_to_csv(rows));
      write_text(in_out(dir, "series.csv"), series_to_csv(sweep_series(rows)));
      write_json(in_out(dir, "sweep_summary.json"), summary_json(rows));
      std::printf("wrote %zu rows to %s\n", rows.size(), dir.c_str());
    } else if (rp->parsed()) {
      std::vector<ResultRow> rows;
      for (const auto& p : rp_inputs) {
        auto part = rows_from_csv(read_text(p));
        rows.insert(rows.end(), part.begin(), part.end());
      }
      sort_rows(rows);
      const std::string dir = g.out.empty() ? "." : g.out;
      fs::create_directories(dir);
      write_json(in_out(dir, "summary.json"), summary_json(rows));
      const auto series = sweep_series(rows);
      if (!series.empty()) write_text(in_out(dir, "series.csv"), series_to_csv(series));
      if (summary_json(rows)["panels"].empty()) return 0;
      const auto text = panels_to_text(table1_panels(rows));
      write_text(in_out(dir, "panels.txt"), text);
      std::cout << text;
    }
  } catch (const Error& e) {
    std::cerr << "error [" << to_string(e.code()) << "]: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
