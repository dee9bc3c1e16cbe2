#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace kklflow {

/// Weighted point cloud: points are rows of an n x d matrix, weights are
/// nonnegative and sum to 1 (within 1e-12).
struct DiscreteMeasure {
  Eigen::MatrixXd points;
  Eigen::VectorXd weights;

  int size() const { return static_cast<int>(points.rows()); }
  int dim() const { return static_cast<int>(points.cols()); }

  /// Throws std::invalid_argument on any violated invariant.
  void validate() const;

  static DiscreteMeasure uniform(Eigen::MatrixXd pts);
  static DiscreteMeasure weighted(Eigen::MatrixXd pts, Eigen::VectorXd w);

  /// Single unit-mass atom.
  static DiscreteMeasure dirac(const Eigen::VectorXd& x);
};

/// (1 - eps) p + eps r on the union of atoms. Atoms whose resulting weight is
/// exactly zero (eps in {0, 1}) are removed.
DiscreteMeasure mix(const DiscreteMeasure& p, const DiscreteMeasure& r, double eps);

struct GaussianComponent {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;  // symmetric positive definite
};

enum class TargetFamily {
  gaussian,
  gaussian_mixture,
  exponential,
  rings,
  spiral,
  heart,
  uniform_box,
};

/// Declarative description of a sampleable distribution.
struct TargetSpec {
  TargetFamily family = TargetFamily::gaussian;
  int dim = 2;

  // gaussian / gaussian_mixture
  std::vector<GaussianComponent> components;
  Eigen::VectorXd mixture_weights;

  // exponential: iid coordinates with density rate * exp(-rate * x) on x >= 0
  double rate = 1.0;

  // rings: union of circles, sampled by arc length
  Eigen::MatrixXd ring_centers;  // k x 2
  Eigen::VectorXd ring_radii;    // k, all > 0

  // spiral: r = scale * theta for theta in [0, 2*pi*turns], uniform in arc length
  double spiral_turns = 2.0;
  double spiral_scale = 0.35;

  // heart: uniform (by rejection) inside (x^2 + y^2 - 1)^3 - x^2 y^3 <= 0
  // spiral/heart placement
  double shape_scale = 1.0;
  Eigen::Vector2d shape_center = Eigen::Vector2d::Zero();

  // uniform_box
  Eigen::VectorXd box_lo, box_hi;

  void validate() const;

  static TargetSpec gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov);
  static TargetSpec gaussian_mixture(std::vector<GaussianComponent> comps,
                                     Eigen::VectorXd weights);
  static TargetSpec exponential(double rate, int dim = 1);
  /// Three unit circles centered at (0,0), (2.5,0), (5,0).
  static TargetSpec three_rings();
  static TargetSpec rings(Eigen::MatrixXd centers, Eigen::VectorXd radii);
  static TargetSpec spiral(double turns = 2.0, double scale = 0.35,
                           double shape_scale = 1.0,
                           Eigen::Vector2d center = Eigen::Vector2d::Zero());
  static TargetSpec heart(double shape_scale = 1.0,
                          Eigen::Vector2d center = Eigen::Vector2d::Zero());
  static TargetSpec uniform_box(Eigen::VectorXd lo, Eigen::VectorXd hi);
};

/// Draws n points with uniform weights 1/n; deterministic given (spec, n, seed).
DiscreteMeasure sample(const TargetSpec& spec, int n, std::uint64_t seed);

}  // namespace kklflow
