#include "kklflow/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace kklflow {

KernelSpec KernelSpec::gaussian(double sigma) {
  KernelSpec k;
  k.family = KernelFamily::gaussian;
  k.bandwidth = sigma;
  k.validate();
  return k;
}

KernelSpec KernelSpec::polynomial(int degree, double offset) {
  KernelSpec k;
  k.family = KernelFamily::polynomial;
  k.degree = degree;
  k.offset = offset;
  k.validate();
  return k;
}

void KernelSpec::validate() const {
  if (family == KernelFamily::gaussian) {
    if (!(bandwidth > 0.0) || !std::isfinite(bandwidth))
      throw std::invalid_argument("gaussian kernel requires bandwidth > 0");
  } else {
    if (degree < 1) throw std::invalid_argument("polynomial kernel requires degree >= 1");
    if (offset < 0.0) throw std::invalid_argument("polynomial kernel requires offset >= 0");
  }
}

namespace {

void check_dims(ConstVecRef x, ConstVecRef y) {
  if (x.size() != y.size() || x.size() < 1)
    throw std::invalid_argument("kernel arguments must share a dimension d >= 1");
}

}  // namespace

double kernel_value(const KernelSpec& k, ConstVecRef x, ConstVecRef y) {
  check_dims(x, y);
  if (k.family == KernelFamily::gaussian) {
    double d2 = (x - y).squaredNorm();
    return std::exp(-d2 / (k.bandwidth * k.bandwidth));
  }
  return std::pow(k.offset + x.dot(y), k.degree);
}

Eigen::VectorXd kernel_grad1(const KernelSpec& k, ConstVecRef x, ConstVecRef y) {
  check_dims(x, y);
  if (k.family == KernelFamily::gaussian) {
    double s2 = k.bandwidth * k.bandwidth;
    double v = std::exp(-(x - y).squaredNorm() / s2);
    return (-2.0 / s2 * v) * (x - y);
  }
  double base = k.offset + x.dot(y);
  if (k.degree == 1) return Eigen::VectorXd(y);
  return (k.degree * std::pow(base, k.degree - 1)) * y;
}

Eigen::MatrixXd gram(const KernelSpec& k, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
  if (X.cols() != Y.cols())
    throw std::invalid_argument("gram: point sets must share a dimension");
  const auto n = X.rows();
  const auto m = Y.rows();
  Eigen::MatrixXd G(n, m);
  if (k.family == KernelFamily::gaussian) {
    double inv_s2 = 1.0 / (k.bandwidth * k.bandwidth);
    Eigen::VectorXd xs = X.rowwise().squaredNorm();
    Eigen::VectorXd ys = Y.rowwise().squaredNorm();
    G.noalias() = X * Y.transpose();
    G = ((-inv_s2) * ((-2.0) * G + xs.replicate(1, m) + ys.transpose().replicate(n, 1))).array().exp();
  } else {
    G.noalias() = X * Y.transpose();
    G = (G.array() + k.offset).pow(k.degree);
  }
  return G;
}

double bandwidth_heuristic(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                           BandwidthRule rule) {
  const auto n = X.rows();
  const auto m = Y.rows();
  if (n < 1 || m < 1) throw std::invalid_argument("bandwidth_heuristic: empty point set");
  if (X.cols() != Y.cols())
    throw std::invalid_argument("bandwidth_heuristic: dimension mismatch");
  double acc = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < m; ++j) {
      double d2 = (X.row(i) - Y.row(j)).squaredNorm();
      acc += (rule == BandwidthRule::mean_squared_distance) ? d2 : std::sqrt(d2);
    }
  }
  acc /= static_cast<double>(n * m);
  double sigma = (rule == BandwidthRule::mean_distance_squared) ? acc * acc : acc;
  if (!(sigma > 0.0))
    throw std::invalid_argument("bandwidth_heuristic: degenerate bandwidth (all points coincide)");
  return sigma;
}

}  // namespace kklflow
