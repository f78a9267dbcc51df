#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <filesystem>
#include <random>
#include <variant>

#include <Eigen/Dense>

#include "eqml/data.hpp"
#include "eqml/surrogate.hpp"
#include "test_util.hpp"

using namespace eqml;

namespace {

std::vector<double> random_vec(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  std::vector<double> v(n);
  for (auto& x : v) x = g(rng);
  return v;
}

// Two Gaussian blobs 5 sigma apart along the first axis.
Dataset blobs(int n_per_class, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.1);
  Dataset ds{1, 1, 2, {}, {}, {}};
  for (int i = 0; i < 2 * n_per_class; ++i) {
    const std::size_t y = i % 2;
    SampledImage s(1, 1);
    for (auto& v : s.values) v = 0.5 + g(rng);
    s.values[0] += y == 0 ? -0.25 : 0.25;
    ds.push(s, y);
  }
  return ds;
}

template <class Model>
void check_fd(Model m, const std::vector<std::vector<double>>& xs, const std::vector<std::size_t>& ys) {
  const double h = 1e-5;
  const auto g = surrogate_loss_grads(m, xs, ys);
  for (std::size_t k = 0; k < m.params.size(); ++k) {
    const double orig = m.params[k];
    m.params[k] = orig + h;
    const double lp = surrogate_loss_grads(m, xs, ys).loss;
    m.params[k] = orig - h;
    const double lm = surrogate_loss_grads(m, xs, ys).loss;
    m.params[k] = orig;
    const double fd = (lp - lm) / (2 * h);
    EXPECT_LE(std::abs(g.param_grad[k] - fd), 1e-4 * std::max(std::abs(fd), 1e-4)) << "param " << k;
  }
  for (std::size_t b = 0; b < xs.size(); ++b)
    for (std::size_t i = 0; i < xs[b].size(); ++i) {
      auto xp = xs, xm = xs;
      xp[b][i] += h;
      xm[b][i] -= h;
      const double fd = (surrogate_loss_grads(m, xp, ys).loss - surrogate_loss_grads(m, xm, ys).loss) / (2 * h);
      EXPECT_LE(std::abs(g.input_grad[b][i] - fd), 1e-4 * std::max(std::abs(fd), 1e-4)) << "input " << b << "," << i;
    }
}

}  // namespace

TEST(LinearForward, BiasOnly) {
  LinearModel m(2, 3);
  m.b(0) = 1.0;
  m.b(1) = 2.0;
  EXPECT_EQ(surrogate_forward(m, std::vector<double>{0.3, -4.0, 9.0}), (std::vector<double>{1.0, 2.0}));
  EXPECT_THROW(surrogate_forward(m, std::vector<double>{1.0}), Error);
}

TEST(LinearForward, RingConstantWeightsRotationInvariant) {
  std::mt19937_64 rng(1);
  LinearModel m(3, 32);
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 4; ++r) {
      const double w = random_vec(1, rng)[0];
      for (int p = 0; p < 8; ++p) m.w(c, r * 8 + p) = w;
    }
  const auto x = tu::random_samples(2, 3, rng);
  const auto base = surrogate_forward(m, x.values);
  for (int g = 0; g < 8; ++g) EXPECT_LE(tu::max_abs_diff(base, surrogate_forward(m, rotate_samples(x, g).values)), 1e-12);
}

TEST(MlpForward, IdentitySlices) {
  MlpModel m(3, 4, 2);
  for (int i = 0; i < 3; ++i) m.w1(i, i) = 1.0;
  for (int c = 0; c < 2; ++c) m.w2(c, c) = 1.0;
  EXPECT_EQ(surrogate_forward(m, std::vector<double>{-0.5, 0.7, 2.0}), (std::vector<double>{0.0, 0.7}));
  EXPECT_EQ(surrogate_forward(m, std::vector<double>{0.25, -1.0, 2.0}), (std::vector<double>{0.25, 0.0}));
}

TEST(LossGrads, BinaryLcInputGradient) {
  LinearModel m(2, 2);
  m.w(0, 0) = 1.0;
  m.w(1, 1) = 1.0;
  const auto g = input_gradient(m, std::vector<double>{0.5, 0.4}, 0);
  const double p1 = std::exp(0.4) / (std::exp(0.5) + std::exp(0.4));
  EXPECT_NEAR(g[0], -p1, 1e-15);
  EXPECT_NEAR(g[1], p1, 1e-15);
  EXPECT_EQ(sign0(g[0]), -1.0);
  EXPECT_EQ(sign0(g[1]), 1.0);
}

TEST(LossGrads, ZeroModelBiasGradient) {
  LinearModel m(4, 3);
  const std::vector<std::vector<double>> xs{{0.1, 0.2, 0.3}};
  const auto g = surrogate_loss_grads(m, xs, std::vector<std::size_t>{2});
  for (int c = 0; c < 4; ++c) EXPECT_NEAR(g.param_grad[12 + c], 0.25 - (c == 2 ? 1.0 : 0.0), 1e-15);
  EXPECT_NEAR(g.loss, std::log(4.0), 1e-15);
}

TEST(LossGrads, LinearMatchesFiniteDifferences) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 5; ++t) {
    auto m = init_linear(3, 6, t);
    check_fd(m, {random_vec(6, rng), random_vec(6, rng)}, {0, 2});
  }
}

TEST(LossGrads, MlpMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 5; ++t) {
    auto m = init_mlp(5, 7, 3, t);
    check_fd(m, {random_vec(5, rng), random_vec(5, rng), random_vec(5, rng)}, {1, 0, 2});
  }
}

TEST(LossGrads, Errors) {
  LinearModel m(2, 2);
  EXPECT_THROW(surrogate_loss_grads(m, std::vector<std::vector<double>>{{1.0, 2.0}}, std::vector<std::size_t>{2}), Error);
  EXPECT_THROW(surrogate_loss_grads(m, std::vector<std::vector<double>>{{1.0}}, std::vector<std::size_t>{0}), Error);
}

TEST(LossGrads, LcInputGradientInWeightDifferenceSpan) {
  std::mt19937_64 rng(4);
  const auto m = init_linear(2, 6, 9);
  for (int t = 0; t < 10; ++t) {
    const auto x = random_vec(6, rng);
    const auto g = input_gradient(m, x, 0);
    const double s = g[0] / (m.w(1, 0) - m.w(0, 0));
    for (int i = 0; i < 6; ++i) EXPECT_NEAR(g[i], s * (m.w(1, i) - m.w(0, i)), 1e-12);
    EXPECT_GT(s, 0.0);
  }
}

TEST(AdamW, SingleStepClosedForm) {
  AdamW opt;
  opt.lr = 0.1;
  opt.weight_decay = 0.01;
  std::vector<double> p{1.0, -2.0};
  opt.step(p, std::vector<double>{0.5, -3.0});
  // First bias-corrected step is lr * sign(g) (up to eps) plus decoupled decay.
  EXPECT_NEAR(p[0], 1.0 - 0.1 * (0.5 / (0.5 + 1e-8) + 0.01 * 1.0), 1e-12);
  EXPECT_NEAR(p[1], -2.0 - 0.1 * (-3.0 / (3.0 + 1e-8) + 0.01 * -2.0), 1e-12);
}

TEST(Train, SeparableBlobs) {
  const auto ds = blobs(100, 5);
  AdamW opt;
  opt.lr = 0.05;
  const auto res = train_surrogate(init_linear(2, 4, 1), ds, opt, 20, 16, 7);
  EXPECT_GE(res.best_accuracy, 0.99);
  EXPECT_GE(surrogate_accuracy(res.model, ds), 0.99);
  ASSERT_EQ(res.history.size(), 20u);
  for (std::size_t e = 1; e < res.history.size(); ++e) EXPECT_LE(res.history[e].loss, res.history[e - 1].loss + 1e-6);
}

TEST(Train, ZeroEpochsUnchanged) {
  const auto ds = blobs(10, 1);
  const auto m = init_mlp(4, 8, 2, 3);
  EXPECT_EQ(train_surrogate(m, ds, AdamW{}, 0, 4, 1).model, m);
}

TEST(Train, Deterministic) {
  const auto ds = blobs(30, 2);
  const auto a = train_surrogate(init_mlp(4, 8, 2, 3), ds, AdamW{}, 5, 8, 11);
  const auto b = train_surrogate(init_mlp(4, 8, 2, 3), ds, AdamW{}, 5, 8, 11);
  EXPECT_EQ(a.last, b.last);
  EXPECT_EQ(a.model, b.model);
}

TEST(Train, EmptyDataset) {
  Dataset empty{1, 1, 2, {}, {}, {}};
  EXPECT_THROW(train_surrogate(LinearModel(2, 4), empty, AdamW{}, 1, 4, 0), Error);
}

TEST(RingScore, ConstantAndZeroMean) {
  LinearModel a(2, 16), b(2, 16);
  std::mt19937_64 rng(6);
  for (int c = 0; c < 2; ++c)
    for (int r = 0; r < 4; ++r) {
      const double w = random_vec(1, rng)[0];
      for (int p = 0; p < 4; ++p) {
        a.w(c, r * 4 + p) = w;
        b.w(c, r * 4 + p) = (p % 2 == 0 ? w : -w);
      }
    }
  EXPECT_NEAR(ring_invariance_score(a, 2, 2), 1.0, 1e-12);
  EXPECT_NEAR(ring_invariance_score(b, 2, 2), 0.0, 1e-12);
}

TEST(RingScore, MatchesProjectorOracle) {
  for (int t = 0; t < 10; ++t) {
    const auto m = init_linear(3, 32, t);
    // Explicit averaging matrix P acting on each class row.
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(32, 32);
    for (int r = 0; r < 4; ++r)
      for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) p(r * 8 + i, r * 8 + j) = 1.0 / 8.0;
    Eigen::MatrixXd w(3, 32);
    for (int c = 0; c < 3; ++c)
      for (int i = 0; i < 32; ++i) w(c, i) = m.w(c, i);
    const double oracle = 1.0 - (w - w * p.transpose()).norm() / w.norm();
    const double s = ring_invariance_score(m, 2, 3);
    EXPECT_NEAR(s, oracle, 1e-10);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(RingScore, ZeroWeights) {
  try {
    ring_invariance_score(LinearModel(2, 4), 1, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroWeights);
  }
}

TEST(Checkpoint, RoundTripBothKinds) {
  const auto dir = std::filesystem::temp_directory_path();
  for (const Surrogate& s : {Surrogate{init_linear(3, 8, 1)}, Surrogate{init_mlp(8, 5, 3, 2)}}) {
    const auto path = (dir / ("eqml_sur_" + surrogate_kind(s) + ".bin")).string();
    save_surrogate(path, s);
    const auto back = load_surrogate(path);
    EXPECT_EQ(surrogate_kind(back), surrogate_kind(s));
    EXPECT_EQ(surrogate_checksum(back), surrogate_checksum(s));
    std::visit(
        [&](const auto& m) {
          using M = std::decay_t<decltype(m)>;
          const auto& orig = std::get<M>(s);
          for (std::size_t i = 0; i < m.params.size(); ++i) EXPECT_EQ(m.params[i], static_cast<float>(orig.params[i]));
        },
        back);
    std::filesystem::remove(path);
  }
}

TEST(Checkpoint, CorruptBlobRejected) {
  const auto path = (std::filesystem::temp_directory_path() / "eqml_sur_corrupt.bin").string();
  save_surrogate(path, Surrogate{init_linear(2, 4, 1)});
  {
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-1, std::ios::end);
    f.put('\x7f');
  }
  try {
    load_surrogate(path);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ChecksumMismatch);
  }
  std::filesystem::remove(path);
}
