#pragma once

#include <Eigen/Dense>

#include "kklflow/kernel.hpp"
#include "kklflow/measure.hpp"

namespace kklflow {

/// Squared maximum mean discrepancy, full-sum (biased) estimator:
///   sum_ij w_i w_j k(x_i, x_j) - 2 sum_ij w_i v_j k(x_i, y_j)
///   + sum_ij v_i v_j k(y_i, y_j),
/// clamped at 0.
double mmd_squared(const DiscreteMeasure& p, const DiscreteMeasure& q, const KernelSpec& k);

/// Gradient of the witness function f = sum_j w_j k(., x_j) - sum_j v_j k(., y_j) at x.
Eigen::VectorXd mmd_witness_gradient(const DiscreteMeasure& p, const DiscreteMeasure& q,
                                     const KernelSpec& k, ConstVecRef x);

}  // namespace kklflow
