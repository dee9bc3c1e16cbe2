#pragma once

#include <Eigen/Dense>

namespace kklflow {

/// Vector view that also binds to matrix rows (inner stride > 1).
using ConstVecRef = Eigen::Ref<const Eigen::VectorXd, 0, Eigen::InnerStride<>>;

enum class KernelFamily { gaussian, polynomial };

/// Positive-definite kernel description.
///
/// gaussian:    k(x, y) = exp(-||x - y||^2 / sigma^2)   (note: sigma^2, no factor 2)
/// polynomial:  k(x, y) = (offset + <x, y>)^degree
struct KernelSpec {
  KernelFamily family = KernelFamily::gaussian;
  double bandwidth = 1.0;  // sigma > 0, gaussian only
  int degree = 2;          // >= 1, polynomial only
  double offset = 1.0;     // >= 0, polynomial only

  static KernelSpec gaussian(double sigma);
  static KernelSpec polynomial(int degree, double offset);

  void validate() const;
};

/// k(x, y). Throws std::invalid_argument on dimension mismatch.
double kernel_value(const KernelSpec& k, ConstVecRef x, ConstVecRef y);

/// Gradient of k(x, y) in the first argument.
/// gaussian: -(2/sigma^2) (x - y) k(x, y); polynomial: degree (offset + <x,y>)^(degree-1) y.
Eigen::VectorXd kernel_grad1(const KernelSpec& k, ConstVecRef x, ConstVecRef y);

/// Gram matrix K[i, j] = k(X.row(i), Y.row(j)); points are matrix rows.
Eigen::MatrixXd gram(const KernelSpec& k, const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

enum class BandwidthRule {
  mean_distance_squared,  // (mean over all pairs of ||x_i - y_j||)^2
  mean_squared_distance,  // mean over all pairs of ||x_i - y_j||^2
};

/// Data-driven bandwidth from all cross-pair distances between X and Y.
/// Throws if either set is empty or if the result is zero (all points coincide).
double bandwidth_heuristic(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, BandwidthRule rule);

}  // namespace kklflow
