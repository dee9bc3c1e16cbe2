#include "kklflow/flow.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "kklflow/metrics.hpp"
#include "kklflow/mmd.hpp"

namespace kklflow {

void OptimizerSpec::validate() const {
  if (step_size && !(*step_size > 0.0))
    throw std::invalid_argument("optimizer: step size must be positive");
  if (max_iters < 0) throw std::invalid_argument("optimizer: max_iters must be >= 0");
  if (grad_tol < 0.0) throw std::invalid_argument("optimizer: grad_tol must be >= 0");
  if (memory_size < 1) throw std::invalid_argument("optimizer: memory_size must be >= 1");
  if (!(wolfe_c1 > 0.0 && wolfe_c1 < wolfe_c2 && wolfe_c2 < 1.0))
    throw std::invalid_argument("optimizer: need 0 < c1 < c2 < 1");
  if (!(backtrack_factor > 0.0 && backtrack_factor < 1.0))
    throw std::invalid_argument("optimizer: backtracking factor must lie in (0, 1)");
  if (max_halvings < 1) throw std::invalid_argument("optimizer: max_halvings must be >= 1");
}

std::pair<double, Eigen::MatrixXd> objective_and_gradient(const FlowProblem& prob,
                                                          const Eigen::MatrixXd& positions) {
  const int n = static_cast<int>(positions.rows());
  DiscreteMeasure p = DiscreteMeasure::uniform(positions);
  if (prob.objective == FlowObjective::kkl) {
    SpectralCache cache =
        build_spectral_cache(p, prob.target, prob.kernel, prob.alpha, prob.options);
    Eigen::MatrixXd grad = wasserstein_gradient_at_atoms(cache) / static_cast<double>(n);
    return {cache.kkl_value, std::move(grad)};
  }
  double value = mmd_squared(p, prob.target, prob.kernel);
  Eigen::MatrixXd grad(n, positions.cols());
  for (int i = 0; i < n; ++i)
    grad.row(i) = (2.0 / n) *
                  mmd_witness_gradient(p, prob.target, prob.kernel, positions.row(i)).transpose();
  return {value, std::move(grad)};
}

double step_size_heuristic(const DiscreteMeasure& p, const DiscreteMeasure& q) {
  p.validate();
  q.validate();
  if (p.dim() != q.dim()) throw std::invalid_argument("step_size_heuristic: dimension mismatch");
  double sum_sq = 0.0;
  for (int i = 0; i < p.size(); ++i)
    for (int j = 0; j < q.size(); ++j)
      sum_sq += (p.points.row(i) - q.points.row(j)).squaredNorm();
  double n = static_cast<double>(p.size());
  double d = static_cast<double>(p.dim());
  return std::sqrt(sum_sq) / n * std::pow(n, -1.0 / (d + 4.0));
}

namespace {

using Clock = std::chrono::steady_clock;

struct Evaluation {
  double f = 0.0;
  Eigen::MatrixXd grad;
  double gnorm = 0.0;
};

Evaluation evaluate(const FlowProblem& prob, const Eigen::MatrixXd& X, int iter) {
  auto [f, g] = objective_and_gradient(prob, X);
  if (!std::isfinite(f) || !g.allFinite())
    throw std::runtime_error("flow: non-finite objective or gradient at iteration " +
                             std::to_string(iter));
  Evaluation ev;
  ev.f = f;
  ev.gnorm = g.norm();
  ev.grad = std::move(g);
  return ev;
}

double frob_dot(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  return (a.array() * b.array()).sum();
}

Eigen::VectorXd two_loop(const std::vector<std::pair<Eigen::VectorXd, Eigen::VectorXd>>& mem,
                         const Eigen::VectorXd& g) {
  if (mem.empty()) return g;
  const auto k = mem.size();
  std::vector<double> alpha(k), rho(k);
  Eigen::VectorXd q = g;
  for (int i = static_cast<int>(k) - 1; i >= 0; --i) {
    rho[i] = 1.0 / mem[i].second.dot(mem[i].first);
    alpha[i] = rho[i] * mem[i].first.dot(q);
    q -= alpha[i] * mem[i].second;
  }
  q *= mem.back().first.dot(mem.back().second) / mem.back().second.squaredNorm();
  for (std::size_t i = 0; i < k; ++i) {
    double beta = rho[i] * mem[i].second.dot(q);
    q += (alpha[i] - beta) * mem[i].first;
  }
  return q;
}

struct WolfeOutcome {
  bool accepted = false;
  double t = 0.0;
  Evaluation ev;
};

// Strong-Wolfe line search along D from X (Armijo + curvature), bracketing
// then bisection zoom. Falls back to the best Armijo point seen; an empty
// outcome means not even sufficient decrease was found.
WolfeOutcome strong_wolfe(const FlowProblem& prob, const Eigen::MatrixXd& X,
                          const Eigen::MatrixXd& D, const Evaluation& cur, double t_init,
                          double c1, double c2, int iter) {
  const double phi0 = cur.f;
  const double dphi0 = frob_dot(cur.grad, D);
  WolfeOutcome best;  // best Armijo point

  auto probe = [&](double t) {
    Evaluation ev = evaluate(prob, X + t * D, iter);
    return ev;
  };
  auto note_armijo = [&](double t, const Evaluation& ev) {
    if (ev.f <= phi0 + c1 * t * dphi0 && (!best.accepted || ev.f < best.ev.f)) {
      best.accepted = true;
      best.t = t;
      best.ev = ev;
    }
  };

  double t_lo = 0.0, phi_lo = phi0, dphi_lo = dphi0;
  double t_hi = -1.0;
  double t = t_init, t_prev = 0.0, phi_prev = phi0;
  bool bracketed = false;

  for (int i = 0; i < 20; ++i) {
    Evaluation ev = probe(t);
    double dphi = frob_dot(ev.grad, D);
    note_armijo(t, ev);
    if (ev.f > phi0 + c1 * t * dphi0 || (i > 0 && ev.f >= phi_prev)) {
      t_lo = t_prev;
      phi_lo = (i > 0) ? phi_prev : phi0;
      dphi_lo = (i > 0) ? dphi_lo : dphi0;
      t_hi = t;
      bracketed = true;
      break;
    }
    if (std::abs(dphi) <= -c2 * dphi0) {
      WolfeOutcome out;
      out.accepted = true;
      out.t = t;
      out.ev = std::move(ev);
      return out;
    }
    if (dphi >= 0.0) {
      t_lo = t;
      phi_lo = ev.f;
      dphi_lo = dphi;
      t_hi = t_prev;
      bracketed = true;
      break;
    }
    t_prev = t;
    phi_prev = ev.f;
    dphi_lo = dphi;
    t *= 2.0;
  }

  if (bracketed) {
    for (int zi = 0; zi < 30; ++zi) {
      double tm = 0.5 * (t_lo + t_hi);
      if (std::abs(t_hi - t_lo) <= 1e-14 * std::max(1.0, std::abs(t_lo))) break;
      Evaluation ev = probe(tm);
      double dphi = frob_dot(ev.grad, D);
      note_armijo(tm, ev);
      if (ev.f > phi0 + c1 * tm * dphi0 || ev.f >= phi_lo) {
        t_hi = tm;
      } else {
        if (std::abs(dphi) <= -c2 * dphi0) {
          WolfeOutcome out;
          out.accepted = true;
          out.t = tm;
          out.ev = std::move(ev);
          return out;
        }
        if (dphi * (t_hi - t_lo) >= 0.0) t_hi = t_lo;
        t_lo = tm;
        phi_lo = ev.f;
        dphi_lo = dphi;
      }
    }
  }
  return best;  // strong curvature unmet; best sufficient-decrease point (or none)
}

}  // namespace

FlowResult run_flow(const DiscreteMeasure& p0, const FlowProblem& prob, const OptimizerSpec& opt,
                    const TraceOptions& trace_opts) {
  opt.validate();
  p0.validate();
  prob.target.validate();
  if (p0.dim() != prob.target.dim())
    throw std::invalid_argument("run_flow: source/target dimension mismatch");
  const int n = p0.size();
  const int d = p0.dim();
  if ((p0.weights.array() - 1.0 / n).abs().maxCoeff() > 1e-12)
    throw std::invalid_argument("run_flow: the flow requires uniform source weights");

  const double gamma0 =
      opt.step_size ? *opt.step_size : step_size_heuristic(p0, prob.target);
  const bool with_w2 = trace_opts.track_w2 && prob.target.size() == n;
  const auto uw = Eigen::VectorXd::Constant(prob.target.size(), 1.0 / prob.target.size());
  const bool target_uniform = (prob.target.weights - uw).cwiseAbs().maxCoeff() <= 1e-12;

  FlowResult result;
  FlowState& st = result.state;
  st.positions = p0.points;

  const auto t_start = Clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(Clock::now() - t_start).count(); };

  int last_traced = -1;
  auto record_trace = [&](int iter, const Evaluation& ev) {
    FlowTraceRow row;
    row.iter = iter;
    row.objective = ev.f;
    row.grad_norm = ev.gnorm;
    if (with_w2 && target_uniform)
      row.w2 = wasserstein2(DiscreteMeasure::uniform(st.positions), prob.target);
    if (trace_opts.track_energy)
      row.energy_dist = energy_distance(DiscreteMeasure::uniform(st.positions), prob.target);
    row.seconds = elapsed();
    result.trace.push_back(row);
    last_traced = iter;
  };
  auto maybe_snapshot = [&](int iter) {
    if (std::find(trace_opts.snapshot_iters.begin(), trace_opts.snapshot_iters.end(), iter) !=
        trace_opts.snapshot_iters.end())
      result.snapshots.emplace_back(iter, st.positions);
  };

  Evaluation cur = evaluate(prob, st.positions, 0);
  st.objective_history.push_back(cur.f);
  st.gradient_norm_history.push_back(cur.gnorm);
  record_trace(0, cur);
  maybe_snapshot(0);

  for (int iter = 1; iter <= opt.max_iters; ++iter) {
    if (cur.gnorm <= opt.grad_tol) {
      st.converged = true;
      break;
    }
    if (opt.max_seconds > 0.0 && elapsed() >= opt.max_seconds) break;

    if (opt.method == OptimMethod::gd) {
      // Explicit transport step: every particle moves by -gamma times the
      // velocity field, which is n times the Euclidean per-particle gradient.
      st.positions.noalias() -= gamma0 * (static_cast<double>(n) * cur.grad);
      cur = evaluate(prob, st.positions, iter);
    } else if (opt.method == OptimMethod::gd_linesearch) {
      Eigen::MatrixXd D = -static_cast<double>(n) * cur.grad;
      double m0 = frob_dot(cur.grad, D);  // = -n ||grad||^2
      double t = gamma0;
      bool ok = false;
      Evaluation trial;
      for (int h = 0; h <= opt.max_halvings; ++h) {
        trial = evaluate(prob, st.positions + t * D, iter);
        if (trial.f <= cur.f + opt.wolfe_c1 * t * m0) {
          ok = true;
          break;
        }
        t *= opt.backtrack_factor;
      }
      if (!ok) {
        st.stopped_by_line_search = true;
        break;
      }
      st.positions += t * D;
      cur = std::move(trial);
    } else {  // lbfgs
      Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(cur.grad.data(), cur.grad.size());
      Eigen::VectorXd dir_flat = -two_loop(st.lbfgs_memory, g);
      if (!(dir_flat.dot(g) < 0.0)) {
        st.lbfgs_memory.clear();
        dir_flat = -g;
      }
      Eigen::MatrixXd D = Eigen::Map<const Eigen::MatrixXd>(dir_flat.data(), n, d);
      double t_init =
          st.lbfgs_memory.empty() ? std::min(1.0, 1.0 / std::max(1e-12, dir_flat.norm())) : 1.0;
      WolfeOutcome ls =
          strong_wolfe(prob, st.positions, D, cur, t_init, opt.wolfe_c1, opt.wolfe_c2, iter);
      if (!ls.accepted) {
        st.stopped_by_line_search = true;
        break;
      }
      Eigen::VectorXd s = ls.t * dir_flat;
      Eigen::VectorXd g_new =
          Eigen::Map<const Eigen::VectorXd>(ls.ev.grad.data(), ls.ev.grad.size());
      Eigen::VectorXd y = g_new - g;
      if (s.dot(y) > 1e-10 * s.norm() * y.norm()) {
        st.lbfgs_memory.emplace_back(std::move(s), std::move(y));
        if (static_cast<int>(st.lbfgs_memory.size()) > opt.memory_size)
          st.lbfgs_memory.erase(st.lbfgs_memory.begin());
      }
      st.positions += ls.t * D;
      cur = std::move(ls.ev);
    }

    st.iteration = iter;
    st.objective_history.push_back(cur.f);
    st.gradient_norm_history.push_back(cur.gnorm);
    if (trace_opts.every > 0 && iter % trace_opts.every == 0) record_trace(iter, cur);
    maybe_snapshot(iter);
  }

  if (last_traced != st.iteration) record_trace(st.iteration, cur);
  return result;
}

}  // namespace kklflow
