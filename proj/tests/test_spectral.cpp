#include <doctest.h>

#include <cmath>

#include "kklflow/spectral.hpp"
#include "test_util.hpp"

using namespace kklflow;
using testutil::random_matrix;
using testutil::random_orthogonal;
using testutil::random_psd;

namespace {

// Independent eigenvalue route for r <= 3: characteristic polynomial in
// closed form (quadratic formula / trigonometric cubic).
std::vector<double> charpoly_eigenvalues(const Eigen::MatrixXd& M) {
  const int r = static_cast<int>(M.rows());
  if (r == 1) return {M(0, 0)};
  if (r == 2) {
    double tr = M(0, 0) + M(1, 1);
    double det = M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0);
    double disc = std::sqrt(std::max(0.0, tr * tr - 4.0 * det));
    return {(tr + disc) / 2.0, (tr - disc) / 2.0};
  }
  REQUIRE(r == 3);
  double p1 = M(0, 1) * M(0, 1) + M(0, 2) * M(0, 2) + M(1, 2) * M(1, 2);
  if (p1 == 0.0) return {M(0, 0), M(1, 1), M(2, 2)};
  double q = M.trace() / 3.0;
  double p2 = 0.0;
  for (int i = 0; i < 3; ++i) p2 += (M(i, i) - q) * (M(i, i) - q);
  p2 += 2.0 * p1;
  double p = std::sqrt(p2 / 6.0);
  Eigen::Matrix3d B = (M - q * Eigen::Matrix3d::Identity()) / p;
  double detb = B.determinant() / 2.0;
  detb = std::min(1.0, std::max(-1.0, detb));
  double phi = std::acos(detb) / 3.0;
  double e1 = q + 2.0 * p * std::cos(phi);
  double e3 = q + 2.0 * p * std::cos(phi + 2.0 * M_PI / 3.0);
  return {e1, 3.0 * q - e1 - e3, e3};
}

double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace

TEST_CASE("sym_eig on small explicit matrices") {
  Eigen::MatrixXd D(2, 2);
  D << 2, 0, 0, 1;
  auto eig = sym_eig(D);
  CHECK(eig.retained == 2);
  CHECK(eig.eigenvalues(0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(eig.eigenvalues(1) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(eig.eigenvectors(0, 0)) == doctest::Approx(1.0).epsilon(1e-12));

  Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(2, 2);
  auto rank1 = sym_eig(ones);
  CHECK(rank1.retained == 1);
  CHECK(rank1.eigenvalues(0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(rank1.eigenvalues(1) == 0.0);  // clamped, marked dropped
}

TEST_CASE("sym_eig reconstruction on random PSD matrices") {
  RngStream rng(31, 0);
  for (int trial = 0; trial < 30; ++trial) {
    int r = 2 + rng.uniform_int(20);
    Eigen::MatrixXd M = random_psd(rng, r);
    auto eig = sym_eig(M);
    Eigen::MatrixXd back = eig.eigenvectors * eig.eigenvalues.asDiagonal() *
                           eig.eigenvectors.transpose();
    CHECK((back - M).norm() <= 1e-10 * M.norm());
    Eigen::MatrixXd vtv = eig.eigenvectors.transpose() * eig.eigenvectors;
    CHECK((vtv - Eigen::MatrixXd::Identity(r, r)).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("sym_eig rejects bad inputs") {
  Eigen::MatrixXd indef(2, 2);
  indef << 1, 0, 0, -1;
  CHECK_THROWS_WITH_AS(sym_eig(indef), doctest::Contains("not PSD"), std::runtime_error);

  Eigen::MatrixXd asym(2, 2);
  asym << 1, 0.5, 0.1, 1;
  CHECK_THROWS_AS(sym_eig(asym), std::invalid_argument);
}

TEST_CASE("entropy trace on explicit spectra") {
  CHECK(entropy_trace(Eigen::MatrixXd::Identity(4, 4)) == 0.0);
  Eigen::MatrixXd half = 0.5 * Eigen::MatrixXd::Identity(2, 2);
  CHECK(entropy_trace(half) == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
  Eigen::MatrixXd deg(2, 2);
  deg << 1, 0, 0, 0;
  CHECK(entropy_trace(deg) == 0.0);  // 0 log 0 = 0
}

TEST_CASE("entropy trace agrees with the characteristic-polynomial route") {
  RngStream rng(37, 1);
  for (int trial = 0; trial < 50; ++trial) {
    int r = 1 + rng.uniform_int(3);
    Eigen::MatrixXd M = random_psd(rng, r);
    M += 0.05 * Eigen::MatrixXd::Identity(r, r);  // keep eigenvalues clear of the floor
    double expected = 0.0;
    for (double lam : charpoly_eigenvalues(M)) expected += xlogx(lam);
    CHECK(entropy_trace(M) == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("spectral_apply on explicit matrices") {
  CHECK(spectral_apply(Eigen::MatrixXd::Identity(3, 3), SpectralFn::log_over_x).norm() == 0.0);

  Eigen::MatrixXd D(2, 2);
  D << std::exp(1.0), 0, 0, 1;
  Eigen::MatrixXd G = spectral_apply(D, SpectralFn::log_over_x);
  CHECK(G(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(std::abs(G(1, 1)) <= 1e-15);
  CHECK(std::abs(G(0, 1)) <= 1e-15);
}

TEST_CASE("M g(M) equals the log on the range of M") {
  RngStream rng(41, 2);
  for (int trial = 0; trial < 20; ++trial) {
    int r = 3 + rng.uniform_int(8);
    Eigen::MatrixXd M = random_psd(rng, r, std::max(1, r - 2));  // rank deficient
    Eigen::MatrixXd lhs = M * spectral_apply(M, SpectralFn::log_over_x);
    Eigen::MatrixXd rhs = spectral_apply(M, SpectralFn::log);
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("spectral_apply commutes with orthogonal conjugation") {
  RngStream rng(43, 3);
  for (int trial = 0; trial < 20; ++trial) {
    int r = 2 + rng.uniform_int(7);
    Eigen::MatrixXd M = random_psd(rng, r);
    M += 0.01 * Eigen::MatrixXd::Identity(r, r);
    Eigen::MatrixXd Q = random_orthogonal(rng, r);
    Eigen::MatrixXd lhs = spectral_apply(Q * M * Q.transpose(), SpectralFn::log);
    Eigen::MatrixXd rhs = Q * spectral_apply(M, SpectralFn::log) * Q.transpose();
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("divided-difference table on explicit spectra") {
  Eigen::MatrixXd D(2, 2);
  D << std::exp(1.0), 0, 0, 1;
  auto eig = sym_eig(D);
  Eigen::MatrixXd L = loewner(eig);
  CHECK(L(0, 1) == doctest::Approx(1.0 / (std::exp(1.0) - 1.0)).epsilon(1e-12));
  CHECK(L(0, 1) == doctest::Approx(0.581977).epsilon(1e-6));
  CHECK(L(0, 0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

  Eigen::MatrixXd two = 2.0 * Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd L2 = loewner(sym_eig(two));
  CHECK(L2(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(L2(0, 1) == doctest::Approx(0.5).epsilon(1e-14));  // analytic limit 2/(a+a) = 1/a

  CHECK((L - L.transpose()).norm() == 0.0);
  CHECK((L.array() > 0.0).all());
}

TEST_CASE("divided-difference entries are continuous at the degeneracy switch") {
  const double tol = 1e-8;
  auto entry = [&](double delta) {
    Eigen::MatrixXd D(2, 2);
    D << 1.0 + delta, 0, 0, 1.0;
    return loewner(sym_eig(D), tol)(0, 1);
  };
  // straddle the threshold: both sides approximate 1/eta with O(delta) error
  double below = entry(0.5 * tol);
  double above = entry(1.5 * tol);
  CHECK(std::abs(below - above) <= 10.0 * tol);
  CHECK(std::abs(below - 1.0) <= 10.0 * tol);
}

TEST_CASE("factor transfer identity on explicit factors") {
  // orthonormal rows: psi psi^T = I, log vanishes on both sides
  Eigen::MatrixXd iso(3, 6);
  iso.setZero();
  iso(0, 0) = iso(1, 1) = iso(2, 2) = 1.0;
  auto sides = psi_transfer(iso, SpectralFn::log);
  CHECK(sides.lhs.norm() <= 1e-14);
  CHECK(sides.rhs.norm() <= 1e-14);

  // diagonal scaling embedded in a wider space
  Eigen::MatrixXd sc(3, 6);
  sc.setZero();
  sc(0, 0) = 0.5;
  sc(1, 1) = 1.5;
  sc(2, 2) = 3.0;
  auto ds = psi_transfer(sc, SpectralFn::log);
  for (int i = 0; i < 3; ++i) {
    double s2 = sc(i, i) * sc(i, i);
    CHECK(ds.lhs(i, i) == doctest::Approx(std::log(s2)).epsilon(1e-12));
    CHECK(ds.rhs(i, i) == doctest::Approx(std::log(s2)).epsilon(1e-12));
  }
  CHECK((ds.lhs - ds.rhs).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("factor transfer identity on random full-rank factors") {
  RngStream rng(47, 4);
  for (int trial = 0; trial < 100; ++trial) {
    int r = 2 + rng.uniform_int(4);
    int d = r + 1 + rng.uniform_int(5);
    Eigen::MatrixXd psi = random_matrix(rng, r, d);
    auto f = (trial % 2 == 0) ? SpectralFn::log : SpectralFn::log_over_x;
    auto sides = psi_transfer(psi, f);
    CHECK((sides.lhs - sides.rhs).cwiseAbs().maxCoeff() <= 1e-9);
  }
}

TEST_CASE("factor transfer rejects rank-deficient factors") {
  Eigen::MatrixXd psi(3, 6);
  psi.setZero();
  psi(0, 0) = 1.0;
  psi(1, 1) = 1.0;  // third row zero
  CHECK_THROWS_AS(psi_transfer(psi, SpectralFn::log), std::runtime_error);
}
