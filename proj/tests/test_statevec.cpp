#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "eqml/statevec.hpp"
#include "test_util.hpp"

using namespace eqml;
using eqml::tu::random_state;

namespace {

double diff(const StateVector& a, const StateVector& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Dense DFT over the orbital index with kernel omega^{sign m phi} / sqrt(N).
CMatrix dense_orbital_dft(int n_rad, int n_orb, int sign) {
  const int nr = 1 << n_rad, np = 1 << n_orb;
  CMatrix f = CMatrix::Zero(nr * np, nr * np);
  for (int r = 0; r < nr; ++r)
    for (int m = 0; m < np; ++m)
      for (int p = 0; p < np; ++p)
        f(r * np + m, r * np + p) = std::polar(1.0 / std::sqrt(np), sign * 2.0 * std::numbers::pi * m * p / np);
  return f;
}

}  // namespace

TEST(Rotation, RxPiOnZero) {
  StateVector s(1);
  apply_rotation(s, 0, Axis::X, std::numbers::pi);
  EXPECT_NEAR(std::abs(s[0]), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(s[1] - cplx(0.0, -1.0)), 0.0, 1e-15);
}

TEST(Rotation, RzPhase) {
  StateVector s(1);
  apply_rotation(s, 0, Axis::Z, 0.7);
  EXPECT_NEAR(std::abs(s[0] - std::polar(1.0, -0.35)), 0.0, 1e-15);
  EXPECT_EQ(s[1], cplx(0.0, 0.0));
}

TEST(Rotation, PreservesNorm) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> a(-4.0, 4.0);
  auto s = random_state(5, rng);
  for (int t = 0; t < 60; ++t) {
    apply_rotation(s, t % 5, static_cast<Axis>(t % 3), a(rng));
    ASSERT_NEAR(s.norm(), 1.0, 1e-12);
  }
}

TEST(Rotation, QubitOutOfRange) {
  StateVector s(2);
  try {
    apply_rotation(s, 2, Axis::X, 0.1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::QubitOutOfRange);
  }
}

TEST(Rotation, DisjointQubitsCommute) {
  std::mt19937_64 rng(2);
  const auto s = random_state(4, rng);
  auto a = s, b = s;
  apply_rotation(a, 0, Axis::Y, 0.3);
  apply_rotation(a, 3, Axis::X, 1.1);
  apply_rotation(b, 3, Axis::X, 1.1);
  apply_rotation(b, 0, Axis::Y, 0.3);
  EXPECT_LT(diff(a, b), 1e-12);
}

TEST(Cz, SignOnBothSet) {
  auto s = StateVector::basis(2, 3);
  apply_cz(s, 0, 1);
  EXPECT_EQ(s[3], cplx(-1.0, 0.0));
  auto t = StateVector::basis(2, 2);
  apply_cz(t, 0, 1);
  EXPECT_EQ(t[2], cplx(1.0, 0.0));
}

TEST(Cz, Involution) {
  std::mt19937_64 rng(3);
  const auto s = random_state(4, rng);
  auto t = s;
  apply_cz(t, 1, 3);
  apply_cz(t, 1, 3);
  EXPECT_EQ(diff(s, t), 0.0);
}

TEST(Cz, Errors) {
  StateVector s(3);
  try {
    apply_cz(s, 1, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SameQubit);
  }
  try {
    apply_cz(s, 0, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::QubitOutOfRange);
  }
}

TEST(OrbitalDft, UniformBlockToZeroMode) {
  std::vector<cplx> a(4, cplx(0.5, 0.0));
  StateVector s(2, a);
  apply_orbital_dft_inverse(s, 2);
  EXPECT_NEAR(std::abs(s[0] - cplx(1.0, 0.0)), 0.0, 1e-15);
  for (int i = 1; i < 4; ++i) EXPECT_NEAR(std::abs(s[i]), 0.0, 1e-15);
}

TEST(OrbitalDft, DeltaToUniform) {
  auto s = StateVector::basis(3, 0);
  apply_orbital_dft_inverse(s, 3);
  for (int i = 0; i < 8; ++i) EXPECT_NEAR(std::abs(s[i] - cplx(1.0 / std::sqrt(8.0), 0.0)), 0.0, 1e-15);
}

TEST(OrbitalDft, MatchesDenseOracleAndRoundTrips) {
  std::mt19937_64 rng(4);
  for (int n_orb = 1; n_orb <= 3; ++n_orb) {
    const int n_rad = 2;
    const auto s = random_state(n_rad + n_orb, rng);
    auto t = s;
    apply_orbital_dft_inverse(t, n_orb);
    const Eigen::VectorXcd expect = dense_orbital_dft(n_rad, n_orb, -1) * to_eigen(s);
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(std::abs(t[i] - expect(static_cast<Eigen::Index>(i))), 0.0, 1e-12);
    EXPECT_NEAR(t.norm(), 1.0, 1e-12);
    apply_orbital_dft(t, n_orb);
    EXPECT_LT(diff(s, t), 1e-12);
  }
}

TEST(Expectation, ZOnZeroState) {
  StateVector s(4);
  for (int q = 0; q < 2; ++q) EXPECT_EQ(expectation(s, Observable::z(q, 2, 2)), 1.0);
}

TEST(Expectation, ProjectedOnZeroOrbital) {
  StateVector s(4);
  for (int q = 0; q < 2; ++q) EXPECT_EQ(expectation(s, Observable::z_projected(q, 2, 2)), 0.0);
}

TEST(Expectation, MatchesDenseOracle) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    const auto s = random_state(5, rng);
    const Eigen::VectorXcd v = to_eigen(s);
    for (int q = 0; q < 3; ++q)
      for (const auto& obs : {Observable::z(q, 3, 2), Observable::z_projected(q, 3, 2)}) {
        // Build Z_q (x) P explicitly with Kronecker products.
        CMatrix m = CMatrix::Identity(1, 1);
        for (int k = 0; k < 3; ++k) {
          CMatrix f = CMatrix::Identity(2, 2);
          if (k == q) f(1, 1) = -1.0;
          CMatrix next(m.rows() * 2, m.cols() * 2);
          for (Eigen::Index i = 0; i < m.rows(); ++i)
            for (Eigen::Index j = 0; j < m.cols(); ++j) next.block(2 * i, 2 * j, 2, 2) = m(i, j) * f;
          m = next;
        }
        CMatrix orb = CMatrix::Identity(4, 4);
        if (obs.kind == Observable::Kind::ZProjected) orb(0, 0) = 0.0;
        CMatrix full(32, 32);
        for (Eigen::Index i = 0; i < 8; ++i)
          for (Eigen::Index j = 0; j < 8; ++j) full.block(4 * i, 4 * j, 4, 4) = m(i, j) * orb;
        const double oracle = (v.adjoint() * full * v)(0, 0).real();
        const double e = expectation(s, obs);
        EXPECT_NEAR(e, oracle, 1e-10);
        EXPECT_LE(std::abs(e), 1.0);
        EXPECT_TRUE(observable_matrix(obs).isApprox(full, 1e-14));
      }
  }
}

TEST(Expectation, QubitMustBeRadial) {
  StateVector s(4);
  EXPECT_THROW(expectation(s, Observable::z(2, 2, 2)), Error);
}

TEST(DensityMatrix, ZeroState) {
  const auto rho = density_matrix(StateVector(1));
  EXPECT_EQ(rho(0, 0), cplx(1.0, 0.0));
  EXPECT_EQ(rho(0, 1), cplx(0.0, 0.0));
  EXPECT_EQ(rho(1, 0), cplx(0.0, 0.0));
  EXPECT_EQ(rho(1, 1), cplx(0.0, 0.0));
}

TEST(DensityMatrix, TraceAndPurity) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 5; ++t) {
    const auto rho = density_matrix(random_state(4, rng));
    EXPECT_NEAR(rho.trace().real(), 1.0, 1e-12);
    EXPECT_TRUE(rho.isApprox(rho.adjoint(), 1e-14));
    EXPECT_LT((rho * rho - rho).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(DensityMatrix, TooLarge) {
  try {
    density_matrix(StateVector(13));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooLarge);
  }
}
