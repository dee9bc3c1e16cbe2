#include <doctest.h>

#include <cmath>

#include "kklflow/kernel.hpp"
#include "test_util.hpp"

using namespace kklflow;
using testutil::random_matrix;

TEST_CASE("gaussian kernel values") {
  KernelSpec k = KernelSpec::gaussian(1.0);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd y(2);
  y << 1.0, 0.0;
  CHECK(kernel_value(k, x, x) == 1.0);
  CHECK(kernel_value(k, x, y) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

  KernelSpec p = KernelSpec::polynomial(2, 1.0);
  Eigen::VectorXd a(2), b(2);
  a << 1.0, 0.0;
  b << 0.0, 1.0;
  CHECK(kernel_value(p, a, b) == 1.0);  // (1 + 0)^2
}

TEST_CASE("kernel rejects mismatched dimensions and bad parameters") {
  KernelSpec k = KernelSpec::gaussian(1.0);
  Eigen::VectorXd x(2), y(3);
  x.setZero();
  y.setZero();
  CHECK_THROWS_AS(kernel_value(k, x, y), std::invalid_argument);
  CHECK_THROWS_AS(kernel_grad1(k, x, y), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::gaussian(0.0), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::gaussian(-1.0), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::polynomial(0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(KernelSpec::polynomial(2, -0.5), std::invalid_argument);
}

TEST_CASE("gaussian gradient closed forms") {
  KernelSpec k = KernelSpec::gaussian(1.0);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(2);
  CHECK(kernel_grad1(k, x, x).norm() == 0.0);

  Eigen::VectorXd y(2);
  y << 1.0, 0.0;
  Eigen::VectorXd g = kernel_grad1(k, x, y);
  CHECK(g(0) == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-10));
  CHECK(g(1) == 0.0);

  KernelSpec lin = KernelSpec::polynomial(1, 0.0);
  Eigen::VectorXd a(3), b(3);
  a << 0.3, -0.2, 1.1;
  b << -0.5, 0.7, 0.2;
  CHECK((kernel_grad1(lin, a, b) - b).norm() == 0.0);
}

TEST_CASE("kernel symmetry holds exactly") {
  RngStream rng(7, 1);
  for (int trial = 0; trial < 200; ++trial) {
    KernelSpec k = (trial % 2 == 0) ? KernelSpec::gaussian(rng.uniform(0.2, 3.0))
                                    : KernelSpec::polynomial(1 + rng.uniform_int(3), 0.5);
    Eigen::VectorXd x = testutil::random_vector(rng, 3);
    Eigen::VectorXd y = testutil::random_vector(rng, 3);
    CHECK(kernel_value(k, x, y) == kernel_value(k, y, x));
  }
}

TEST_CASE("gradients match central finite differences") {
  RngStream rng(11, 2);
  for (int trial = 0; trial < 200; ++trial) {
    double sigma = rng.uniform(0.5, 2.0);
    KernelSpec k = KernelSpec::gaussian(sigma);
    Eigen::VectorXd x = testutil::random_vector(rng, 3);
    // keep the pair within ~2 sigma so gradients are not vanishingly small
    Eigen::VectorXd y = x + testutil::random_vector(rng, 3, 0.6 * sigma);
    Eigen::VectorXd g = kernel_grad1(k, x, y);
    const double h = 1e-6;
    for (int i = 0; i < 3; ++i) {
      Eigen::VectorXd xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      double fd = (kernel_value(k, xp, y) - kernel_value(k, xm, y)) / (2 * h);
      CHECK(std::abs(fd - g(i)) <= 1e-6 * std::max(1.0, std::abs(g(i))));
    }
  }
}

TEST_CASE("gram matrices are positive semi-definite") {
  RngStream rng(13, 3);
  for (int trial = 0; trial < 20; ++trial) {
    int n = 2 + rng.uniform_int(19);
    KernelSpec k = (trial % 2 == 0) ? KernelSpec::gaussian(rng.uniform(0.3, 2.0))
                                    : KernelSpec::polynomial(2, 1.0);
    Eigen::MatrixXd X = random_matrix(rng, n, 2);
    Eigen::MatrixXd G = gram(k, X, X);
    CHECK((G - G.transpose()).cwiseAbs().maxCoeff() <= 1e-14);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
    double lam_min = es.eigenvalues().minCoeff();
    double lam_max = es.eigenvalues().maxCoeff();
    CHECK(lam_min >= -1e-10 * lam_max);
  }
}

TEST_CASE("gram agrees with pointwise evaluation") {
  RngStream rng(17, 4);
  KernelSpec k = KernelSpec::gaussian(0.8);
  Eigen::MatrixXd X = random_matrix(rng, 5, 3);
  Eigen::MatrixXd Y = random_matrix(rng, 4, 3);
  Eigen::MatrixXd G = gram(k, X, Y);
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 4; ++j)
      CHECK(G(i, j) == doctest::Approx(kernel_value(k, X.row(i), Y.row(j))).epsilon(1e-14));
}

TEST_CASE("bandwidth heuristics") {
  Eigen::MatrixXd X(1, 2), Y(1, 2);
  X << 0.0, 0.0;
  Y << 3.0, 4.0;
  CHECK(bandwidth_heuristic(X, Y, BandwidthRule::mean_distance_squared) == 25.0);
  CHECK(bandwidth_heuristic(X, Y, BandwidthRule::mean_squared_distance) == 25.0);

  // two pairs where the rules differ: distances 1 and 3
  Eigen::MatrixXd X2(1, 1), Y2(2, 1);
  X2 << 0.0;
  Y2 << 1.0, 3.0;
  CHECK(bandwidth_heuristic(X2, Y2, BandwidthRule::mean_distance_squared) == 4.0);  // ((1+3)/2)^2
  CHECK(bandwidth_heuristic(X2, Y2, BandwidthRule::mean_squared_distance) == 5.0);  // (1+9)/2

  Eigen::MatrixXd Z(1, 2);
  Z << 1.0, 1.0;
  CHECK_THROWS_AS(bandwidth_heuristic(Z, Z, BandwidthRule::mean_distance_squared),
                  std::invalid_argument);
  Eigen::MatrixXd empty(0, 2);
  CHECK_THROWS_AS(bandwidth_heuristic(empty, Y, BandwidthRule::mean_squared_distance),
                  std::invalid_argument);
}
