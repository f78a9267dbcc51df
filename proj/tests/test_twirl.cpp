#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "eqml/eqmodel.hpp"
#include "eqml/twirl.hpp"
#include "test_util.hpp"

using namespace eqml;
using eqml::tu::random_samples;

TEST(FourierCoeffs, ConstantRing) {
  SampledImage x(1, 3, std::vector<double>(16, 0.0));
  for (std::size_t p = 0; p < 8; ++p) x.at(1, p) = 0.4;
  const auto f = fourier_coeffs(x);
  EXPECT_NEAR(std::abs(f.at(1, 0) - cplx(std::sqrt(8.0) * 0.4, 0.0)), 0.0, 1e-15);
  for (std::size_t m = 1; m < 8; ++m) EXPECT_NEAR(std::abs(f.at(1, m)), 0.0, 1e-15);
}

TEST(FourierCoeffs, DeltaRing) {
  SampledImage x(0, 2, {1.0, 0.0, 0.0, 0.0});
  const auto f = fourier_coeffs(x);
  for (std::size_t m = 0; m < 4; ++m) EXPECT_NEAR(std::abs(f.at(0, m) - cplx(0.5, 0.0)), 0.0, 1e-15);
}

TEST(FourierCoeffs, ParsevalAndConjugateSymmetry) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 20; ++t) {
    const auto x = random_samples(2, 3, rng);
    const auto f = fourier_coeffs(x);
    double lhs = 0.0, rhs = 0.0;
    for (auto c : f.coeffs) lhs += std::norm(c);
    for (double v : x.values) rhs += v * v;
    EXPECT_NEAR(lhs, rhs, 1e-10);
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t m = 1; m < 8; ++m) EXPECT_NEAR(std::abs(f.at(r, 8 - m) - std::conj(f.at(r, m))), 0.0, 1e-12);
  }
}

TEST(TwirlBlocks, RingConstantOnlyZeroSector) {
  SampledImage x(2, 2);
  const double means[4] = {0.1, 0.5, 0.3, 0.9};
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t p = 0; p < 4; ++p) x.at(r, p) = means[r];
  const auto t = twirl_blocks(x);
  for (std::size_t m = 1; m < 4; ++m) EXPECT_LT(t.blocks[m].norm(), 1e-15);
  double s = 0.0;
  for (double v : means) s += v * v;
  for (int r = 0; r < 4; ++r)
    for (int rp = 0; rp < 4; ++rp) EXPECT_NEAR(t.blocks[0](r, rp).real(), means[r] * means[rp] / s, 1e-15);
}

TEST(TwirlBlocks, TwoPointExample) {
  const auto t = twirl_blocks(SampledImage(0, 1, {1.0, 0.0}));
  ASSERT_EQ(t.blocks.size(), 2u);
  EXPECT_NEAR(std::abs(t.blocks[0](0, 0) - cplx(0.5, 0.0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(t.blocks[1](0, 0) - cplx(0.5, 0.0)), 0.0, 1e-15);

  // Same thing by averaging rho over both group elements by hand.
  const CMatrix rho = density_matrix(encode_amplitudes(SampledImage(0, 1, {1.0, 0.0})));
  CMatrix swap(2, 2);
  swap << 0, 1, 1, 0;
  const CMatrix avg = 0.5 * (rho + swap * rho * swap.adjoint());
  EXPECT_TRUE(avg.isApprox(CMatrix::Identity(2, 2) * 0.5));
}

TEST(TwirlBlocks, TraceRankHermitian) {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const auto tw = twirl_blocks(random_samples(3, 2, rng));
    EXPECT_NEAR(tw.trace(), 1.0, 1e-10);
    for (const auto& b : tw.blocks) {
      EXPECT_TRUE(b.isApprox(b.adjoint(), 1e-14));
      Eigen::JacobiSVD<CMatrix> svd(b);
      EXPECT_LE(svd.singularValues()(1), 1e-10);
      Eigen::SelfAdjointEigenSolver<CMatrix> es(b);
      EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12);
    }
  }
}

TEST(TwirlBlocks, NormZero) { EXPECT_THROW(twirl_blocks(SampledImage(1, 1)), Error); }

TEST(TwirlExplicit, FixedPointOnInvariantInput) {
  SampledImage x(2, 2);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t p = 0; p < 4; ++p) x.at(r, p) = 0.2 + 0.1 * r;
  const CMatrix rho = density_matrix(encode_amplitudes(x));
  EXPECT_LE((twirl_density_explicit(rho, 2, 2) - rho).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(TwirlExplicit, MatchesBlocksAfterBasisChange) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    const auto x = random_samples(2, 3, rng);
    const CMatrix explicit_t = twirl_density_explicit(encode_amplitudes(x), 2, 3);
    EXPECT_NEAR(explicit_t.trace().real(), 1.0, 1e-12);
    const CMatrix from_blocks = blocks_to_pixel_basis(twirl_blocks(x));
    EXPECT_LE((explicit_t - from_blocks).cwiseAbs().maxCoeff(), 1e-10);

    // Independent route: conjugate the explicit twirl by a dense DFT.
    const CMatrix f = orbital_fourier_matrix(2, 3);
    EXPECT_LE((f * explicit_t * f.adjoint() - blocks_to_fourier_basis(twirl_blocks(x))).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(TwirlExplicit, PixelEntriesAreCorrelations) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    const auto x = random_samples(2, 2, rng);
    const CMatrix pix = blocks_to_pixel_basis(twirl_blocks(x));
    const auto c = circular_correlations(x);
    const double n2 = x.norm() * x.norm();
    for (std::size_t r = 0; r < 4; ++r)
      for (std::size_t rp = 0; rp < 4; ++rp)
        for (std::size_t a = 0; a < 4; ++a)
          for (std::size_t b = 0; b < 4; ++b) {
            const double expect = c.at(r, rp, (a + 4 - b) % 4) / (4.0 * n2);
            EXPECT_NEAR(pix(static_cast<Eigen::Index>(r * 4 + a), static_cast<Eigen::Index>(rp * 4 + b)).real(), expect, 1e-10);
          }
  }
}

TEST(TwirlExplicit, TooLarge) {
  EXPECT_THROW(twirl_density_explicit(CMatrix::Identity(2048, 2048), 8, 3), Error);
}

TEST(Correlations, DiagonalIsRingEnergy) {
  std::mt19937_64 rng(5);
  const auto x = random_samples(2, 3, rng);
  const auto c = circular_correlations(x);
  for (std::size_t r = 0; r < 4; ++r) {
    double e = 0.0;
    for (double v : x.ring(r)) e += v * v;
    EXPECT_NEAR(c.at(r, r, 0), e, 1e-14);
  }
}

TEST(Correlations, ShiftedDeltas) {
  SampledImage x(1, 2, {1, 0, 0, 0, 0, 1, 0, 0});
  const auto c = circular_correlations(x);
  for (std::size_t d = 0; d < 4; ++d) EXPECT_EQ(c.at(0, 1, d), d == 3 ? 1.0 : 0.0);
}

TEST(Correlations, SymmetryAndRotationInvariance) {
  std::mt19937_64 rng(6);
  const auto x = random_samples(2, 3, rng);
  const auto c = circular_correlations(x);
  for (std::size_t r = 0; r < 4; ++r)
    for (std::size_t rp = 0; rp < 4; ++rp)
      for (std::size_t d = 0; d < 8; ++d) EXPECT_NEAR(c.at(r, rp, d), c.at(rp, r, (8 - d) % 8), 1e-14);
  for (int g = 0; g < 8; ++g) EXPECT_EQ(circular_correlations(rotate_samples(x, g)).values, c.values);
}

TEST(TwirlIdentity, ZeroDepth) {
  std::mt19937_64 rng(7);
  const auto cfg = ModelConfig::make(2, 2, 0, 2);
  const auto chk = twirl_identity_check(cfg, ModelParams(0, 2), random_samples(2, 2, rng));
  EXPECT_LE(chk.gap, 1e-10);
}

TEST(TwirlIdentity, RandomEquivariantCircuits) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 10; ++t) {
    for (auto mode : {Readout::Standard, Readout::M0Suppressed}) {
      const auto cfg = ModelConfig::make(2, 2, 4, 2, mode);
      const auto chk = twirl_identity_check(cfg, init_params(cfg, t), random_samples(2, 2, rng));
      EXPECT_LE(chk.gap, 1e-10);
      EXPECT_EQ(chk.lhs.size(), 2u);
    }
  }
}

TEST(TwirlIdentity, OrbitalRotationBreaksIt) {
  std::mt19937_64 rng(9);
  const auto cfg = ModelConfig::make(2, 2, 4, 2);
  double worst = 0.0;
  for (int t = 0; t < 5; ++t) {
    const auto params = init_params(cfg, t);
    const auto circuit = [&](StateVector& s) {
      apply_layer(cfg, params, 0, s);
      apply_rotation(s, 2, Axis::X, 0.9);
      for (int i = 1; i < cfg.depth; ++i) apply_layer(cfg, params, i, s);
    };
    const auto chk = twirl_identity_check(2, 2, readout_observables(cfg), circuit, random_samples(2, 2, rng));
    worst = std::max(worst, chk.gap);
    EXPECT_GT(chk.gap, 1e-3);
  }
  EXPECT_GT(worst, 1e-3);
}

TEST(CorrelationCsv, RowsAndHeader) {
  std::mt19937_64 rng(10);
  const auto x = random_samples(2, 3, rng);
  const auto csv = correlations_csv(circular_correlations(x), {{0, 0}, {0, 1}, {2, 3}});
  EXPECT_EQ(csv.rfind("r,r_prime,delta_phi,value\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 3 * 8);
}
