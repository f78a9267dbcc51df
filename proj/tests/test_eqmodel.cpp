#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "eqml/eqmodel.hpp"
#include "eqml/numerics.hpp"
#include "eqml/transforms.hpp"
#include "eqml/twirl.hpp"
#include "test_util.hpp"

using namespace eqml;
using eqml::tu::max_abs_diff;
using eqml::tu::random_samples;

namespace {

ModelConfig cfg_of(int n_rad, int n_orb, int depth, int n_classes, Readout r = Readout::Standard, double scale = 1.0) {
  auto c = ModelConfig::make(n_rad, n_orb, depth, n_classes, r);
  c.logit_scale = scale;
  return c;
}

}  // namespace

TEST(Forward, BasisStateZeroDepth) {
  const auto cfg = cfg_of(1, 1, 0, 1);
  SampledImage x(1, 1);
  x.at(0, 0) = 1.0;
  const auto logits = forward(cfg, ModelParams(0, 1), x);
  ASSERT_EQ(logits.size(), 1u);
  EXPECT_NEAR(logits[0], 1.0, 1e-15);
}

TEST(Forward, RingConstantInputSuppressed) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (int t = 0; t < 10; ++t) {
    const auto cfg = cfg_of(3, 2, 4, 3, Readout::M0Suppressed, 2.5);
    const auto params = init_params(cfg, t);
    SampledImage x(3, 2);
    for (std::size_t r = 0; r < x.n_r(); ++r) {
      const double v = u(rng);
      for (std::size_t p = 0; p < x.n_phi(); ++p) x.at(r, p) = v;
    }
    for (double l : forward(cfg, params, x)) EXPECT_LE(std::abs(l), 1e-12);
  }
}

TEST(Forward, RotationInvariantLogits) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 10; ++t) {
    for (auto mode : {Readout::Standard, Readout::M0Suppressed}) {
      const auto cfg = cfg_of(2, 3, 5, 2, mode);
      const auto params = init_params(cfg, 100 + t);
      const auto x = random_samples(2, 3, rng);
      const auto base = forward(cfg, params, x);
      for (int g = 0; g < 8; ++g) {
        EXPECT_LE(max_abs_diff(base, forward(cfg, params, rotate_samples(x, g))), 1e-9);
        EXPECT_EQ(predict(cfg, params, x), predict(cfg, params, rotate_samples(x, g)));
      }
    }
  }
}

TEST(Forward, DimMismatchAndNormZero) {
  const auto cfg = cfg_of(2, 2, 1, 2);
  const auto params = init_params(cfg, 0);
  EXPECT_THROW(forward(cfg, params, SampledImage(2, 1, std::vector<double>(8, 1.0))), Error);
  try {
    forward(cfg, params, SampledImage(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NormZero);
  }
}

TEST(Forward, T1KeyInvariance) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const auto cfg = cfg_of(2, 3, 4, 2);
    const auto params = init_params(cfg, t);
    const auto x = random_samples(2, 3, rng);
    const auto key = sample_circulant_key(3, rng);
    EXPECT_LE(max_abs_diff(forward(cfg, params, x), forward(cfg, params, apply_t1(x, key))), 1e-9);
  }
}

TEST(Forward, M0SuppressedEqualsProjectedUnnormalizedState) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 5; ++t) {
    const auto cfg_m0 = cfg_of(2, 2, 3, 2, Readout::M0Suppressed);
    const auto cfg_std = cfg_of(2, 2, 3, 2, Readout::Standard);
    const auto params = init_params(cfg_m0, t);
    const auto x = random_samples(2, 2, rng);

    StateVector s = prepare_state(cfg_std, x);
    for (std::size_t i = 0; i < s.size(); i += 4) s[i] = 0.0;
    apply_circuit(cfg_std, params, s);
    const auto expect = readout(cfg_std, s);
    EXPECT_LE(max_abs_diff(forward(cfg_m0, params, x), expect), 1e-12);
  }
}

TEST(Forward, CircuitCommutesWithRotation) {
  for (int t = 0; t < 3; ++t) {
    const auto cfg = cfg_of(2, 3, 3, 2);
    const CMatrix u = circuit_unitary(cfg, init_params(cfg, t));
    const CMatrix f = orbital_fourier_matrix(2, 3);
    for (int g = 1; g < 8; ++g) {
      const CMatrix rep = f * cyclic_shift_matrix(2, 3, g) * f.adjoint();
      EXPECT_LE((u * rep - rep * u).norm(), 1e-10);
    }
  }
}

TEST(Predict, ArgmaxTieBreak) {
  EXPECT_EQ(argmax(std::vector<double>{0.9, 0.1}), 0u);
  EXPECT_EQ(argmax(std::vector<double>{0.5, 0.5}), 0u);
  EXPECT_EQ(argmax(std::vector<double>{0.1, 0.5, 0.5}), 1u);
}

TEST(Loss, UniformLogits) {
  EXPECT_NEAR(cross_entropy(std::vector<double>{0.3, 0.3, 0.3}, 1), std::log(3.0), 1e-15);
}

TEST(Loss, Saturation) {
  EXPECT_NEAR(cross_entropy(std::vector<double>{1000.0, 0.0, -2.0}, 0), 0.0, 1e-12);
  EXPECT_TRUE(std::isfinite(cross_entropy(std::vector<double>{1000.0, 0.0}, 1)));
}

TEST(Loss, MatchesLogSumExpOracle) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    const auto cfg = cfg_of(3, 2, 3, 3, Readout::Standard, 3.0);
    const auto params = init_params(cfg, t);
    const auto x = random_samples(3, 2, rng);
    const auto l = forward(cfg, params, x);
    long double s = 0.0L;
    for (double v : l) s += std::exp(static_cast<long double>(v));
    const double oracle = static_cast<double>(std::log(s) - l[t % 3]);
    EXPECT_NEAR(loss(cfg, params, x, t % 3), oracle, 1e-12);
  }
}

TEST(Loss, LabelOutOfRange) {
  const auto cfg = cfg_of(2, 1, 1, 2);
  std::mt19937_64 rng(6);
  try {
    loss(cfg, init_params(cfg, 0), random_samples(2, 1, rng), 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::LabelOutOfRange);
  }
}

TEST(Gradient, ZeroDepthIsEmpty) {
  const auto cfg = cfg_of(2, 1, 0, 2);
  std::mt19937_64 rng(7);
  EXPECT_TRUE(gradient(cfg, ModelParams(0, 2), random_samples(2, 1, rng), 0).empty());
}

TEST(Gradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  const double h = 1e-4;
  for (int t = 0; t < 4; ++t)
    for (auto mode : {Readout::Standard, Readout::M0Suppressed}) {
      const auto cfg = cfg_of(2, 2, 2, 2, mode, 1.0 + t);
      const auto params = init_params(cfg, 50 + t);
      const auto x = random_samples(2, 2, rng);
      const std::size_t y = t % 2;
      const auto g = gradient(cfg, params, x, y);
      const auto ps = gradient_parameter_shift(cfg, params, x, y);
      for (std::size_t k = 0; k < params.size(); ++k) {
        auto p = params, m = params;
        p.theta[k] += h;
        m.theta[k] -= h;
        const double fd = (loss(cfg, p, x, y) - loss(cfg, m, x, y)) / (2 * h);
        EXPECT_LE(std::abs(g[k] - fd), 1e-4 * std::max(std::abs(fd), 1e-3)) << k;
        EXPECT_NEAR(g[k], ps[k], 1e-12);
      }
    }
}

TEST(Gradient, RotatedInputSameGradient) {
  std::mt19937_64 rng(9);
  const auto cfg = cfg_of(2, 3, 3, 2);
  const auto params = init_params(cfg, 1);
  const auto x = random_samples(2, 3, rng);
  const auto g0 = gradient(cfg, params, x, 1);
  for (int g = 1; g < 8; ++g) EXPECT_LE(max_abs_diff(g0, gradient(cfg, params, rotate_samples(x, g), 1)), 1e-8);
}

TEST(Gradient, Deterministic) {
  std::mt19937_64 rng(10);
  const auto cfg = cfg_of(3, 2, 4, 3);
  const auto params = init_params(cfg, 2);
  const auto x = random_samples(3, 2, rng);
  EXPECT_EQ(gradient(cfg, params, x, 2), gradient(cfg, params, x, 2));
}

TEST(Config, Validation) {
  EXPECT_THROW(ModelConfig::make(2, 2, 1, 3), Error);
  auto c = ModelConfig::make(2, 2, 1, 2);
  c.cz_topology.push_back({0, 4});
  EXPECT_THROW(c.validate(), Error);
  c.cz_topology.back() = {1, 1};
  EXPECT_THROW(c.validate(), Error);
}

TEST(Init, UniformRangeAndSeeded) {
  const auto cfg = cfg_of(3, 2, 10, 2);
  const auto a = init_params(cfg, 7);
  EXPECT_EQ(a, init_params(cfg, 7));
  EXPECT_NE(a, init_params(cfg, 8));
  for (double t : a.theta) {
    EXPECT_GE(t, -std::numbers::pi);
    EXPECT_LT(t, std::numbers::pi);
  }
}

TEST(Checkpoint, RoundTrip) {
  auto cfg = cfg_of(3, 2, 4, 2, Readout::M0Suppressed, 2.0);
  cfg.cz_topology = {{0, 2}, {1, 4}};
  const auto params = init_params(cfg, 3);
  const auto path = (std::filesystem::temp_directory_path() / "eqml_model_ckpt.json").string();
  save_model(path, cfg, params);
  const auto [c2, p2] = load_model(path);
  EXPECT_EQ(p2, params);
  EXPECT_EQ(c2.readout, Readout::M0Suppressed);
  EXPECT_EQ(c2.cz_topology, cfg.cz_topology);
  EXPECT_EQ(c2.logit_scale, 2.0);
  std::filesystem::remove(path);
}

TEST(Checkpoint, RejectsUnknownVersion) {
  const auto cfg = cfg_of(2, 1, 1, 2);
  auto j = to_json(cfg, init_params(cfg, 0));
  j["format_version"] = 99;
  try {
    model_from_json(j);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsupportedVersion);
  }
}
