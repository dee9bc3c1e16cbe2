#pragma once

#include <Eigen/Dense>

#include <vector>

#include "kklflow/measure.hpp"

namespace kklflow {

/// Minimum-cost assignment on a dense square cost matrix (shortest augmenting
/// path, O(n^3)). Returns the column assigned to each row.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

/// Exact Wasserstein-2 distance between equal-size uniform clouds:
/// sqrt(min over permutations of (1/n) sum ||x_i - y_pi(i)||^2).
/// Throws unless n == m and both weight vectors are uniform.
double wasserstein2(const DiscreteMeasure& p, const DiscreteMeasure& q);

/// Energy distance, full-sum V-statistic:
///   2 sum w_i v_j ||x_i - y_j|| - sum w_i w_j ||x_i - x_j|| - sum v_i v_j ||y_i - y_j||,
/// clamped at 0.
double energy_distance(const DiscreteMeasure& p, const DiscreteMeasure& q);

}  // namespace kklflow
