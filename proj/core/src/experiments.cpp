#include "kklflow/experiments.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "kklflow/io.hpp"
#include "kklflow/metrics.hpp"
#include "kklflow/mmd.hpp"
#include "kklflow/rng.hpp"
#include "kklflow/svg.hpp"

namespace kklflow {

using nlohmann::json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

Eigen::VectorXd vector_from_json(const json& j) {
  Eigen::VectorXd v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  if (j.empty()) return {};
  Eigen::MatrixXd m(j.size(), j[0].size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].size() != j[0].size()) throw std::invalid_argument("ragged matrix in config");
    for (std::size_t k = 0; k < j[i].size(); ++k) m(i, k) = j[i][k].get<double>();
  }
  return m;
}

TargetSpec target_from_json(const json& j) {
  const std::string family = j.at("family").get<std::string>();
  if (family == "gaussian") {
    Eigen::VectorXd mean = vector_from_json(j.at("mean"));
    Eigen::MatrixXd cov;
    if (j.contains("cov"))
      cov = matrix_from_json(j.at("cov"));
    else
      cov = Eigen::MatrixXd::Identity(mean.size(), mean.size());
    if (j.contains("cov_scale")) cov *= j.at("cov_scale").get<double>();
    return TargetSpec::gaussian(std::move(mean), std::move(cov));
  }
  if (family == "gaussian_mixture") {
    std::vector<GaussianComponent> comps;
    for (const auto& cj : j.at("components")) {
      GaussianComponent c;
      c.mean = vector_from_json(cj.at("mean"));
      c.cov = cj.contains("cov") ? matrix_from_json(cj.at("cov"))
                                 : Eigen::MatrixXd::Identity(c.mean.size(), c.mean.size());
      comps.push_back(std::move(c));
    }
    Eigen::VectorXd w = j.contains("weights")
                            ? vector_from_json(j.at("weights"))
                            : Eigen::VectorXd::Constant(comps.size(), 1.0 / comps.size());
    return TargetSpec::gaussian_mixture(std::move(comps), std::move(w));
  }
  if (family == "exponential")
    return TargetSpec::exponential(j.value("rate", 1.0), j.value("dim", 1));
  if (family == "rings") {
    if (!j.contains("centers")) return TargetSpec::three_rings();
    return TargetSpec::rings(matrix_from_json(j.at("centers")), vector_from_json(j.at("radii")));
  }
  if (family == "spiral") {
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    if (j.contains("center")) c = vector_from_json(j.at("center"));
    return TargetSpec::spiral(j.value("turns", 2.0), j.value("scale", 0.35),
                              j.value("shape_scale", 1.0), c);
  }
  if (family == "heart") {
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    if (j.contains("center")) c = vector_from_json(j.at("center"));
    return TargetSpec::heart(j.value("shape_scale", 1.0), c);
  }
  if (family == "uniform_box")
    return TargetSpec::uniform_box(vector_from_json(j.at("lo")), vector_from_json(j.at("hi")));
  throw std::invalid_argument("unknown target family: " + family);
}

const char* kAllowedKeys[] = {
    "seed",       "out",        "threads",        "timing",     "p_file",     "q_file",
    "source",     "target",     "n",              "m",          "sigma",      "bandwidth_rule",
    "alphas",     "eig_floor_scale", "degeneracy_tol", "n_grid", "runs",       "subset",
    "subset_weights", "objective", "optimizer",   "step_size",  "max_iters",  "grad_tol",
    "trace_every", "snapshots", "metrics",
};

std::string run_dir(const ExperimentConfig& cfg) { return cfg.out_dir; }

std::string path_in(const ExperimentConfig& cfg, const std::string& name) {
  return (std::filesystem::path(run_dir(cfg)) / name).string();
}

double shown_seconds(const ExperimentConfig& cfg, double real) {
  return cfg.timing ? real : 0.0;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (threads < 1) throw std::invalid_argument("config: threads must be >= 1");
  if (n < 1 || m < 1) throw std::invalid_argument("config: n and m must be >= 1");
  if (!(sigma > 0.0)) throw std::invalid_argument("config: sigma must be positive");
  for (double a : alphas)
    if (!(a > 0.0 && a < 1.0))
      throw std::invalid_argument("config: every alpha must lie in (0, 1)");
  if (alphas.empty()) throw std::invalid_argument("config: alphas must be nonempty");
  if (bandwidth_rule != "fixed" && bandwidth_rule != "mean_distance_squared" &&
      bandwidth_rule != "mean_squared_distance")
    throw std::invalid_argument("config: unknown bandwidth_rule " + bandwidth_rule);
  if (objective != "kkl" && objective != "mmd")
    throw std::invalid_argument("config: objective must be kkl or mmd");
  if (optimizer != "gd" && optimizer != "gd_linesearch" && optimizer != "lbfgs")
    throw std::invalid_argument("config: unknown optimizer " + optimizer);
  if (runs < 1) throw std::invalid_argument("config: runs must be >= 1");
  for (int g : n_grid)
    if (g < 1) throw std::invalid_argument("config: n_grid entries must be >= 1");
  if (step_size < 0.0) throw std::invalid_argument("config: step_size must be >= 0");
  if (max_iters < 0) throw std::invalid_argument("config: max_iters must be >= 0");
  if (trace_every < 1) throw std::invalid_argument("config: trace_every must be >= 1");
}

ExperimentConfig load_config_file(const std::string& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error("config parse error in " + path + ": " + e.what());
  }

  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* k : kAllowedKeys)
      if (key == k) known = true;
    if (!known) throw std::invalid_argument("config: unknown key '" + key + "' in " + path);
  }

  ExperimentConfig cfg = std::move(base);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.out_dir = j.value("out", cfg.out_dir);
  cfg.threads = j.value("threads", cfg.threads);
  cfg.timing = j.value("timing", cfg.timing);
  cfg.p_file = j.value("p_file", cfg.p_file);
  cfg.q_file = j.value("q_file", cfg.q_file);
  if (j.contains("source")) cfg.source = target_from_json(j.at("source"));
  if (j.contains("target")) cfg.target = target_from_json(j.at("target"));
  cfg.n = j.value("n", cfg.n);
  cfg.m = j.value("m", cfg.m);
  cfg.sigma = j.value("sigma", cfg.sigma);
  cfg.bandwidth_rule = j.value("bandwidth_rule", cfg.bandwidth_rule);
  if (j.contains("alphas")) cfg.alphas = j.at("alphas").get<std::vector<double>>();
  cfg.kkl.eig_floor_scale = j.value("eig_floor_scale", cfg.kkl.eig_floor_scale);
  cfg.kkl.degeneracy_tol = j.value("degeneracy_tol", cfg.kkl.degeneracy_tol);
  if (j.contains("n_grid")) cfg.n_grid = j.at("n_grid").get<std::vector<int>>();
  cfg.runs = j.value("runs", cfg.runs);
  cfg.subset = j.value("subset", cfg.subset);
  cfg.subset_weights = j.value("subset_weights", cfg.subset_weights);
  cfg.objective = j.value("objective", cfg.objective);
  cfg.optimizer = j.value("optimizer", cfg.optimizer);
  cfg.step_size = j.value("step_size", cfg.step_size);
  cfg.max_iters = j.value("max_iters", cfg.max_iters);
  cfg.grad_tol = j.value("grad_tol", cfg.grad_tol);
  cfg.trace_every = j.value("trace_every", cfg.trace_every);
  if (j.contains("snapshots")) cfg.snapshots = j.at("snapshots").get<std::vector<int>>();
  if (j.contains("metrics")) cfg.metrics = j.at("metrics").get<std::vector<std::string>>();
  cfg.validate();
  return cfg;
}

ResolvedInputs resolve_inputs(const ExperimentConfig& cfg) {
  cfg.validate();
  ResolvedInputs r;
  if (!cfg.p_file.empty())
    r.p = load_point_cloud(cfg.p_file);
  else if (cfg.source)
    r.p = sample(*cfg.source, cfg.n, mix_seed(cfg.seed, 1));
  else
    throw std::invalid_argument("config: no p_file and no source spec");
  if (!cfg.q_file.empty())
    r.q = load_point_cloud(cfg.q_file);
  else if (cfg.target)
    r.q = sample(*cfg.target, cfg.m, mix_seed(cfg.seed, 2));
  else
    throw std::invalid_argument("config: no q_file and no target spec");

  if (cfg.bandwidth_rule == "fixed")
    r.kernel = KernelSpec::gaussian(cfg.sigma);
  else
    r.kernel = KernelSpec::gaussian(bandwidth_heuristic(
        r.p.points, r.q.points,
        cfg.bandwidth_rule == "mean_distance_squared" ? BandwidthRule::mean_distance_squared
                                                      : BandwidthRule::mean_squared_distance));
  return r;
}

// ---------------------------------------------------------------------------
// Concentration study
// ---------------------------------------------------------------------------

std::vector<ConcentrationCell> run_concentration(const TargetSpec& source,
                                                 const TargetSpec& target, double sigma,
                                                 const std::vector<double>& alphas,
                                                 const std::vector<int>& n_grid, int runs,
                                                 std::uint64_t seed, int threads,
                                                 const KklOptions& opt) {
  const KernelSpec kernel = KernelSpec::gaussian(sigma);
  const int cells = static_cast<int>(n_grid.size());
  const int na = static_cast<int>(alphas.size());

  // values[(n_idx * runs + run) * na + a]
  std::vector<double> values(static_cast<std::size_t>(cells) * runs * na, 0.0);
  std::vector<std::pair<int, int>> tasks;
  tasks.reserve(static_cast<std::size_t>(cells) * runs);
  for (int ni = 0; ni < cells; ++ni)
    for (int run = 0; run < runs; ++run) tasks.emplace_back(ni, run);

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      std::size_t t = next.fetch_add(1);
      if (t >= tasks.size()) return;
      auto [ni, run] = tasks[t];
      try {
        // The same sampled pair feeds every alpha so curves are ordered per run.
        std::uint64_t base = (static_cast<std::uint64_t>(ni) << 32) |
                             (static_cast<std::uint64_t>(run) << 1);
        DiscreteMeasure p = sample(source, n_grid[ni], mix_seed(seed, base));
        DiscreteMeasure q = sample(target, n_grid[ni], mix_seed(seed, base | 1));
        for (int a = 0; a < na; ++a)
          values[(static_cast<std::size_t>(ni) * runs + run) * na + a] =
              kkl_alpha(p, q, kernel, alphas[a], opt);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::vector<ConcentrationCell> out;
  for (int ni = 0; ni < cells; ++ni) {
    for (int a = 0; a < na; ++a) {
      double mean = 0.0;
      for (int run = 0; run < runs; ++run)
        mean += values[(static_cast<std::size_t>(ni) * runs + run) * na + a];
      mean /= runs;
      double var = 0.0;
      for (int run = 0; run < runs; ++run) {
        double dev = values[(static_cast<std::size_t>(ni) * runs + run) * na + a] - mean;
        var += dev * dev;
      }
      double stddev = runs > 1 ? std::sqrt(var / (runs - 1)) : 0.0;
      out.push_back({n_grid[ni], alphas[a], mean, stddev, runs});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Skewness study
// ---------------------------------------------------------------------------

SkewnessResult run_skewness(const DiscreteMeasure& q, int subset, bool random_weights,
                            const KernelSpec& kernel, const std::vector<double>& alphas,
                            std::uint64_t seed, const KklOptions& opt) {
  q.validate();
  if (subset < 1 || subset > q.size())
    throw std::invalid_argument("run_skewness: subset must lie in [1, m]");

  // Sample distinct atom indices of q, then reweight.
  RngStream rng(seed, 0xA11CE);
  std::vector<int> idx(q.size());
  for (int i = 0; i < q.size(); ++i) idx[i] = i;
  for (int i = q.size() - 1; i > 0; --i) std::swap(idx[i], idx[rng.uniform_int(i + 1)]);
  idx.resize(subset);

  Eigen::MatrixXd pts(subset, q.dim());
  Eigen::VectorXd w(subset);
  for (int i = 0; i < subset; ++i) {
    pts.row(i) = q.points.row(idx[i]);
    w(i) = random_weights ? rng.uniform(0.5, 1.5) : 1.0;
  }
  w /= w.sum();

  SkewnessResult result;
  result.q = q;
  result.p = DiscreteMeasure::weighted(std::move(pts), std::move(w));
  result.mu = nested_mu(result.p, q);

  double exact = kkl_exact_nested(result.p, q, kernel, opt);
  for (double a : alphas) {
    SkewnessRow row;
    row.alpha = a;
    row.kkl_exact = exact;
    row.kkl_a = kkl_alpha(result.p, q, kernel, a, opt);
    row.abs_dev = std::abs(row.kkl_a - row.kkl_exact);
    row.bound = skewness_bound(result.p, q, kernel, a, result.mu, opt);
    result.rows.push_back(row);
  }
  return result;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_divergence(const ExperimentConfig& cfg) {
  ResolvedInputs in = resolve_inputs(cfg);
  CsvWriter csv({"alpha", "kkl_alpha", "mmd_squared", "seconds"});
  for (double a : cfg.alphas) {
    auto t0 = Clock::now();
    double kkl = kkl_alpha(in.p, in.q, in.kernel, a, cfg.kkl);
    double mmd = mmd_squared(in.p, in.q, in.kernel);
    csv.add_row({format_double(a), format_double(kkl), format_double(mmd),
                 format_double(shown_seconds(cfg, seconds_since(t0)))});
  }
  csv.write(path_in(cfg, "divergence.csv"));
  return 0;
}

int cmd_concentration(const ExperimentConfig& cfg) {
  cfg.validate();
  TargetSpec source, target;
  if (cfg.source && cfg.target) {
    source = *cfg.source;
    target = *cfg.target;
  } else {
    // Documented default pair: anisotropic 10-d Gaussians with different
    // means and variances, q dominating p coordinatewise, scaled so cloud
    // diameters are a few bandwidth units at the default sigma = 10.
    const int d = 10;
    Eigen::VectorXd mean_p = Eigen::VectorXd::Zero(d);
    Eigen::VectorXd mean_q = Eigen::VectorXd::Constant(d, 1.5);
    Eigen::VectorXd var_p(d), var_q(d);
    for (int i = 0; i < d; ++i) {
      var_p(i) = 2.5 + i * (2.0 / (d - 1));  // 2.5 .. 4.5
      var_q(i) = 5.0 + i * (2.0 / (d - 1));  // 5.0 .. 7.0
    }
    source = TargetSpec::gaussian(mean_p, var_p.asDiagonal());
    target = TargetSpec::gaussian(mean_q, var_q.asDiagonal());
  }

  auto cells = run_concentration(source, target, cfg.sigma, cfg.alphas, cfg.n_grid, cfg.runs,
                                 cfg.seed, cfg.threads, cfg.kkl);

  CsvWriter csv({"n", "alpha", "mean", "std", "runs"});
  for (const auto& c : cells)
    csv.add_row({std::to_string(c.n), format_double(c.alpha), format_double(c.mean),
                 format_double(c.stddev), std::to_string(c.runs)});
  csv.write(path_in(cfg, "concentration.csv"));

  const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::vector<svg::Series> mean_series, std_series;
  for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
    svg::Series ms, ss;
    ms.label = ss.label = "alpha=" + format_double(cfg.alphas[a]);
    ms.color = ss.color = palette[a % 6];
    for (const auto& c : cells) {
      if (c.alpha != cfg.alphas[a]) continue;
      ms.x.push_back(c.n);
      ms.y.push_back(c.mean);
      ms.yerr.push_back(c.stddev);
      if (c.stddev > 0.0) {
        ss.x.push_back(c.n);
        ss.y.push_back(c.stddev);
      }
    }
    mean_series.push_back(std::move(ms));
    if (!ss.x.empty()) std_series.push_back(std::move(ss));
  }
  svg::ChartOptions mean_opt;
  mean_opt.title = "divergence vs sample size";
  mean_opt.xlabel = "n";
  mean_opt.ylabel = "mean over runs";
  mean_opt.log_x = true;
  write_text_file(path_in(cfg, "concentration_mean.svg"), svg::line_chart(mean_series, mean_opt));
  if (!std_series.empty()) {
    svg::ChartOptions std_opt;
    std_opt.title = "spread vs sample size";
    std_opt.xlabel = "n";
    std_opt.ylabel = "std over runs";
    std_opt.log_x = true;
    std_opt.log_y = true;
    write_text_file(path_in(cfg, "concentration_std.svg"), svg::line_chart(std_series, std_opt));
  }
  return 0;
}

int cmd_skewness(const ExperimentConfig& cfg) {
  cfg.validate();
  DiscreteMeasure q;
  if (!cfg.q_file.empty())
    q = load_point_cloud(cfg.q_file);
  else if (cfg.target)
    q = sample(*cfg.target, cfg.m, mix_seed(cfg.seed, 2));
  else
    throw std::invalid_argument("config: skewness needs q_file or a target spec");

  KernelSpec kernel = KernelSpec::gaussian(cfg.sigma);
  auto res = run_skewness(q, cfg.subset, cfg.subset_weights == "random", kernel, cfg.alphas,
                          cfg.seed, cfg.kkl);

  CsvWriter csv({"alpha", "kkl_alpha", "kkl_exact", "abs_dev", "bound"});
  int violations = 0;
  for (const auto& row : res.rows) {
    csv.add_row({format_double(row.alpha), format_double(row.kkl_a),
                 format_double(row.kkl_exact), format_double(row.abs_dev),
                 format_double(row.bound)});
    if (row.abs_dev > row.bound) {
      ++violations;
      std::cerr << "skewness bound violated at alpha=" << format_double(row.alpha)
                << ": abs_dev=" << format_double(row.abs_dev)
                << " > bound=" << format_double(row.bound) << "\n";
    }
  }
  csv.write(path_in(cfg, "skewness.csv"));
  return violations == 0 ? 0 : 1;
}

int cmd_flow(const ExperimentConfig& cfg) {
  ResolvedInputs in = resolve_inputs(cfg);

  FlowProblem prob;
  prob.objective = cfg.objective == "kkl" ? FlowObjective::kkl : FlowObjective::mmd;
  prob.target = in.q;
  prob.kernel = in.kernel;
  prob.alpha = cfg.alphas.front();
  prob.options = cfg.kkl;

  OptimizerSpec opt;
  opt.method = cfg.optimizer == "gd"
                   ? OptimMethod::gd
                   : (cfg.optimizer == "gd_linesearch" ? OptimMethod::gd_linesearch
                                                       : OptimMethod::lbfgs);
  if (cfg.step_size > 0.0) opt.step_size = cfg.step_size;
  opt.max_iters = cfg.max_iters;
  opt.grad_tol = cfg.grad_tol;

  TraceOptions trace;
  trace.every = cfg.trace_every;
  for (const auto& mname : cfg.metrics) {
    if (mname == "w2")
      trace.track_w2 = true;
    else if (mname == "energy")
      trace.track_energy = true;
    else
      throw std::invalid_argument("config: unknown metric " + mname);
  }
  trace.snapshot_iters = cfg.snapshots;

  FlowResult res = run_flow(in.p, prob, opt, trace);

  CsvWriter csv({"iter", "objective", "grad_norm", "w2", "energy_dist", "seconds"});
  for (const auto& row : res.trace)
    csv.add_row({std::to_string(row.iter), format_double(row.objective),
                 format_double(row.grad_norm),
                 std::isnan(row.w2) ? "nan" : format_double(row.w2),
                 std::isnan(row.energy_dist) ? "nan" : format_double(row.energy_dist),
                 format_double(shown_seconds(cfg, row.seconds))});
  csv.write(path_in(cfg, "trace.csv"));

  for (const auto& [iter, positions] : res.snapshots) {
    char name[64];
    std::snprintf(name, sizeof(name), "positions_iter%06d.csv", iter);
    save_point_cloud(path_in(cfg, name), DiscreteMeasure::uniform(positions));
  }

  if (in.p.dim() == 2) {
    std::vector<svg::ScatterSet> sets(3);
    sets[0].label = "target";
    sets[0].color = "#bbbbbb";
    sets[0].points = in.q.points;
    sets[1].label = "initial";
    sets[1].color = "#1f77b4";
    sets[1].points = in.p.points;
    sets[2].label = "final";
    sets[2].color = "#d62728";
    sets[2].points = res.state.positions;
    write_text_file(path_in(cfg, "flow.svg"),
                    svg::scatter_plot(sets, cfg.objective + " flow"));
  }

  // Line-search methods promise monotone objectives; surface any violation.
  if (opt.method != OptimMethod::gd) {
    const auto& h = res.state.objective_history;
    for (std::size_t i = 1; i < h.size(); ++i) {
      if (h[i] > h[i - 1] + 1e-12) {
        std::cerr << "objective increased at iteration " << i << "\n";
        return 1;
      }
    }
  }
  return 0;
}

int cmd_selftest(const ExperimentConfig& cfg) {
  int failures = 0;
  auto check = [&](const char* name, bool ok) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name << "\n";
    if (!ok) ++failures;
  };

  // Kernel gradient vs central differences.
  {
    RngStream rng(cfg.seed, 101);
    bool ok = true;
    for (int trial = 0; trial < 20 && ok; ++trial) {
      KernelSpec k = KernelSpec::gaussian(rng.uniform(0.5, 2.0));
      Eigen::VectorXd x(3), y(3);
      for (int i = 0; i < 3; ++i) {
        x(i) = rng.normal();
        y(i) = x(i) + 0.5 * rng.normal();
      }
      Eigen::VectorXd g = kernel_grad1(k, x, y);
      for (int i = 0; i < 3; ++i) {
        Eigen::VectorXd xp = x, xm = x;
        xp(i) += 1e-6;
        xm(i) -= 1e-6;
        double fd = (kernel_value(k, xp, y) - kernel_value(k, xm, y)) / 2e-6;
        if (std::abs(fd - g(i)) > 1e-6 * std::max(1.0, std::abs(g(i)))) ok = false;
      }
    }
    check("kernel gradient matches finite differences", ok);
  }

  // Closed form against the finite-feature route.
  {
    RngStream rng(cfg.seed, 202);
    KernelSpec poly = KernelSpec::polynomial(2, 1.0);
    bool ok = true;
    for (int trial = 0; trial < 5 && ok; ++trial) {
      Eigen::MatrixXd X(6, 2), Y(8, 2);
      for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
      for (int i = 0; i < Y.size(); ++i) Y.data()[i] = rng.normal();
      auto p = DiscreteMeasure::uniform(X);
      auto q = DiscreteMeasure::uniform(Y);
      double a = kkl_alpha(p, q, poly, 0.3);
      double b = kkl_alpha_oracle(p, q, poly, 0.3);
      if (std::abs(a - b) > 1e-8 * std::max({1e-12, std::abs(a), std::abs(b)})) ok = false;
    }
    check("gram-spectrum route agrees with feature-space route", ok);
  }

  // Exact assignment against brute force at n = 5.
  {
    RngStream rng(cfg.seed, 303);
    Eigen::MatrixXd X(5, 2), Y(5, 2);
    for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
    for (int i = 0; i < Y.size(); ++i) Y.data()[i] = rng.normal();
    auto p = DiscreteMeasure::uniform(X);
    auto q = DiscreteMeasure::uniform(Y);
    std::vector<int> perm = {0, 1, 2, 3, 4};
    double best = 1e300;
    do {
      double acc = 0.0;
      for (int i = 0; i < 5; ++i) acc += (X.row(i) - Y.row(perm[i])).squaredNorm();
      best = std::min(best, acc);
    } while (std::next_permutation(perm.begin(), perm.end()));
    double w2 = wasserstein2(p, q);
    check("assignment solver matches factorial enumeration",
          std::abs(w2 - std::sqrt(best / 5.0)) < 1e-12);
  }

  // A short descent run reaches a lower objective.
  {
    RngStream rng(cfg.seed, 404);
    Eigen::MatrixXd X(12, 2), Y(12, 2);
    for (int i = 0; i < X.size(); ++i) X.data()[i] = rng.normal() + 2.0;
    for (int i = 0; i < Y.size(); ++i) Y.data()[i] = rng.normal();
    FlowProblem prob;
    prob.objective = FlowObjective::kkl;
    prob.target = DiscreteMeasure::uniform(Y);
    prob.kernel = KernelSpec::gaussian(1.0);
    prob.alpha = 0.1;
    OptimizerSpec opt;
    opt.method = OptimMethod::lbfgs;
    opt.max_iters = 15;
    FlowResult res = run_flow(DiscreteMeasure::uniform(X), prob, opt, {});
    check("short descent run decreases the objective",
          res.state.objective_history.back() < res.state.objective_history.front());
  }

  std::cout << (failures == 0 ? "selftest passed\n" : "selftest FAILED\n");
  return failures == 0 ? 0 : 1;
}

}  // namespace kklflow
