#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "kklflow/flow.hpp"
#include "kklflow/kernel.hpp"
#include "kklflow/kkl.hpp"
#include "kklflow/measure.hpp"

namespace kklflow {

/// Flat, JSON-backed description of one run. Command-line flags override
/// config keys; unset measure files fall back to the sampleable specs.
struct ExperimentConfig {
  // global
  std::uint64_t seed = 0;
  std::string out_dir = "out";
  int threads = 1;
  /// When false (default) wall-clock columns are written as 0 so output files
  /// are byte-identical across reruns; when true they carry real timings.
  bool timing = false;

  // measures
  std::string p_file, q_file;  // point-cloud CSVs; empty = use the specs below
  std::optional<TargetSpec> source, target;
  int n = 100, m = 100;

  // kernel
  double sigma = 1.0;
  std::string bandwidth_rule = "fixed";  // fixed | mean_distance_squared | mean_squared_distance
  std::vector<double> alphas = {0.1};
  KklOptions kkl;

  // concentration
  std::vector<int> n_grid = {16, 32, 64, 128, 256, 512};
  int runs = 50;

  // skewness
  int subset = 10;                        // atoms of q kept in p
  std::string subset_weights = "random";  // random | uniform

  // flow
  std::string objective = "kkl";    // kkl | mmd
  std::string optimizer = "lbfgs";  // gd | gd_linesearch | lbfgs
  double step_size = 0.0;           // 0 = data-driven heuristic
  int max_iters = 100;
  double grad_tol = 1e-7;
  int trace_every = 1;
  std::vector<int> snapshots;
  std::vector<std::string> metrics = {"w2", "energy"};

  void validate() const;
};

/// Parses a JSON config; keys present in the file override `base`, everything
/// else is inherited from it. Unknown keys are rejected.
ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base = {});

/// Resolved inputs of a run: both measures and the kernel (after applying the
/// bandwidth rule to the sampled/loaded points).
struct ResolvedInputs {
  DiscreteMeasure p, q;
  KernelSpec kernel;
};
ResolvedInputs resolve_inputs(const ExperimentConfig& cfg);

struct ConcentrationCell {
  int n = 0;
  double alpha = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  int runs = 0;
};

/// Samples `runs` independent (p, q) pairs per grid size (shared across the
/// alpha list) and reports mean/std of the divergence. Deterministic given
/// seed, independent of `threads`.
std::vector<ConcentrationCell> run_concentration(const TargetSpec& source,
                                                 const TargetSpec& target, double sigma,
                                                 const std::vector<double>& alphas,
                                                 const std::vector<int>& n_grid, int runs,
                                                 std::uint64_t seed, int threads,
                                                 const KklOptions& opt = {});

struct SkewnessRow {
  double alpha = 0.0;
  double kkl_a = 0.0;
  double kkl_exact = 0.0;
  double abs_dev = 0.0;
  double bound = 0.0;
};

struct SkewnessResult {
  std::vector<SkewnessRow> rows;
  double mu = 1.0;
  DiscreteMeasure p, q;
};

/// Builds a nested pair (p = weighted subsample of q's atoms), evaluates the
/// regularized and exact divergences on the alpha grid and the deviation bound
/// with mu taken from the weight ratios.
SkewnessResult run_skewness(const DiscreteMeasure& q, int subset, bool random_weights,
                            const KernelSpec& kernel, const std::vector<double>& alphas,
                            std::uint64_t seed, const KklOptions& opt = {});

// Subcommand entry points; write CSV/SVG outputs under cfg.out_dir and return
// a process exit code (0 iff every in-config assertion held).
int cmd_divergence(const ExperimentConfig& cfg);
int cmd_concentration(const ExperimentConfig& cfg);
int cmd_skewness(const ExperimentConfig& cfg);
int cmd_flow(const ExperimentConfig& cfg);
int cmd_selftest(const ExperimentConfig& cfg);

}  // namespace kklflow
