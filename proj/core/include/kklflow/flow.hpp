#pragma once

#include <Eigen/Dense>

#include <optional>
#include <utility>
#include <vector>

#include "kklflow/kernel.hpp"
#include "kklflow/kkl.hpp"
#include "kklflow/measure.hpp"

namespace kklflow {

enum class FlowObjective { kkl, mmd };

enum class OptimMethod { gd, gd_linesearch, lbfgs };

struct OptimizerSpec {
  OptimMethod method = OptimMethod::lbfgs;
  /// Step size for gd / gd_linesearch; empty means the data-driven heuristic.
  std::optional<double> step_size;
  int max_iters = 100;
  double grad_tol = 1e-7;
  /// Wall-clock budget in seconds; 0 disables the cap.
  double max_seconds = 0.0;
  // L-BFGS
  int memory_size = 10;
  double wolfe_c1 = 1e-4;
  double wolfe_c2 = 0.9;
  // backtracking (gd_linesearch)
  double backtrack_factor = 0.5;
  int max_halvings = 30;

  void validate() const;
};

/// The functional being descended and its fixed data.
struct FlowProblem {
  FlowObjective objective = FlowObjective::kkl;
  DiscreteMeasure target;
  KernelSpec kernel;
  double alpha = 0.1;  // kkl only
  KklOptions options;
};

/// Objective value and per-particle Euclidean gradient (n x d) of the
/// particle function X -> D(uniform cloud at X || target). One spectral-cache
/// build per call for the kkl objective.
std::pair<double, Eigen::MatrixXd> objective_and_gradient(const FlowProblem& prob,
                                                          const Eigen::MatrixXd& positions);

/// Step size h = (1/n) (sum_ij ||x_i - y_j||^2)^(1/2) n^(-1/(d+4)).
double step_size_heuristic(const DiscreteMeasure& p, const DiscreteMeasure& q);

struct FlowState {
  Eigen::MatrixXd positions;
  int iteration = 0;
  std::vector<double> objective_history;      // length = iteration + 1
  std::vector<double> gradient_norm_history;  // Frobenius norms, same length
  /// Stored L-BFGS curvature pairs (s, y); every retained pair satisfies
  /// <s, y> > 1e-10 ||s|| ||y||.
  std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>> lbfgs_memory;
  bool stopped_by_line_search = false;
  bool converged = false;  // gradient norm reached grad_tol
};

struct FlowTraceRow {
  int iter = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
  double w2 = std::numeric_limits<double>::quiet_NaN();
  double energy_dist = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
};

struct FlowResult {
  FlowState state;
  std::vector<FlowTraceRow> trace;
  std::vector<std::pair<int, Eigen::MatrixXd>> snapshots;  // (iteration, positions)
};

struct TraceOptions {
  int every = 1;          // record a row every `every` iterations (plus first and last)
  bool track_w2 = false;  // requires equal sizes, uniform weights
  bool track_energy = false;
  std::vector<int> snapshot_iters;  // iterations at which positions are copied out
};

/// Runs the particle descent from p0 (uniform weights required) toward the
/// problem's target. gd moves every particle by -step * velocity with velocity
/// = n * (Euclidean gradient); gd_linesearch backtracks on the same direction
/// until the Armijo condition holds; lbfgs runs the two-loop recursion with a
/// strong-Wolfe line search on the flattened positions. A failed line search
/// accepts the zero step and stops (numerically stationary point). Non-finite
/// values abort with a diagnostic.
FlowResult run_flow(const DiscreteMeasure& p0, const FlowProblem& prob,
                    const OptimizerSpec& opt, const TraceOptions& trace = {});

}  // namespace kklflow
