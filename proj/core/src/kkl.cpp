#include "kklflow/kkl.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace kklflow {

namespace {

void check_pair(const DiscreteMeasure& p, const DiscreteMeasure& q) {
  p.validate();
  q.validate();
  if (p.dim() != q.dim()) throw std::invalid_argument("measures must share a dimension");
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("alpha must lie strictly inside (0, 1)");
}

double clamp_zero(double v, const KklOptions& opt) {
  return std::abs(v) <= opt.zero_clamp ? 0.0 : v;
}

// W^{1/2} Kp W^{1/2}, the Gram carrying the entropy term's spectrum.
Eigen::MatrixXd entropy_gram(const DiscreteMeasure& p, const KernelSpec& k) {
  Eigen::VectorXd ws = p.weights.array().sqrt();
  Eigen::MatrixXd Kpp = gram(k, p.points, p.points);
  return ws.asDiagonal() * Kpp * ws.asDiagonal();
}

// sum_j eta_j log(eta_j) ||a_j||^2 / alpha over the retained joint spectrum,
// which equals Tr(I_alpha K log K) by cyclicity without forming the product.
double joint_cross_term(const EigenDecomposition& eig, int n, double alpha) {
  double acc = 0.0;
  for (int j = 0; j < eig.retained; ++j) {
    double eta = eig.eigenvalues(j);
    double mass = eig.eigenvectors.col(j).head(n).squaredNorm();
    acc += eta * std::log(eta) * mass / alpha;
  }
  return acc;
}

}  // namespace

JointGram build_joint_gram(const DiscreteMeasure& p, const DiscreteMeasure& q,
                           const KernelSpec& k, double alpha) {
  check_pair(p, q);
  check_alpha(alpha);
  const int n = p.size(), m = q.size();

  Eigen::VectorXd scale(n + m);
  scale.head(n) = (alpha * p.weights.array()).sqrt();
  scale.tail(m) = ((1.0 - alpha) * q.weights.array()).sqrt();

  Eigen::MatrixXd K(n + m, n + m);
  K.topLeftCorner(n, n) = gram(k, p.points, p.points);
  K.topRightCorner(n, m) = gram(k, p.points, q.points);
  K.bottomLeftCorner(m, n) = K.topRightCorner(n, m).transpose();
  K.bottomRightCorner(m, m) = gram(k, q.points, q.points);
  K = scale.asDiagonal() * K * scale.asDiagonal();

  JointGram jg;
  jg.K = std::move(K);
  jg.i_alpha_diag = Eigen::VectorXd::Zero(n + m);
  jg.i_alpha_diag.head(n).setConstant(1.0 / alpha);
  jg.alpha = alpha;
  jg.n = n;
  jg.m = m;
  return jg;
}

double kkl_alpha(const DiscreteMeasure& p, const DiscreteMeasure& q, const KernelSpec& k,
                 double alpha, const KklOptions& opt) {
  JointGram jg = build_joint_gram(p, q, k, alpha);
  double entropy = entropy_trace(sym_eig(entropy_gram(p, k), opt.eig_floor_scale));
  auto eig_joint = sym_eig(jg.K, opt.eig_floor_scale);
  return clamp_zero(entropy - joint_cross_term(eig_joint, jg.n, alpha), opt);
}

// ---------------------------------------------------------------------------
// Finite-feature route (polynomial kernels)
// ---------------------------------------------------------------------------

int polynomial_feature_dim(int dim, int degree) {
  // C(dim + degree, degree)
  long long out = 1;
  for (int i = 1; i <= degree; ++i) out = out * (dim + i) / i;
  return static_cast<int>(out);
}

namespace {

void enumerate_monomials(int dim, int budget, std::vector<int>& current,
                         std::vector<std::vector<int>>& out) {
  if (static_cast<int>(current.size()) == dim) {
    out.push_back(current);
    return;
  }
  for (int k = 0; k <= budget; ++k) {
    current.push_back(k);
    enumerate_monomials(dim, budget - k, current, out);
    current.pop_back();
  }
}

double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

}  // namespace

Eigen::VectorXd polynomial_features(const KernelSpec& poly, ConstVecRef x) {
  if (poly.family != KernelFamily::polynomial)
    throw std::invalid_argument("polynomial_features requires a polynomial kernel");
  const int d = static_cast<int>(x.size());
  const int D = polynomial_feature_dim(d, poly.degree);
  if (D > 200) throw std::invalid_argument("polynomial feature dimension exceeds 200");

  std::vector<std::vector<int>> monomials;
  std::vector<int> scratch;
  enumerate_monomials(d, poly.degree, scratch, monomials);

  // (offset + <x,y>)^degree = sum over multi-indices of
  //   multinomial(degree; k0, k) offset^{k0} prod (x_i y_i)^{k_i},  k0 = degree - |k|.
  Eigen::VectorXd phi(D);
  int idx = 0;
  for (const auto& mono : monomials) {
    int total = 0;
    double denom = 1.0;
    double value = 1.0;
    for (int i = 0; i < d; ++i) {
      total += mono[i];
      denom *= factorial(mono[i]);
      value *= std::pow(x(i), mono[i]);
    }
    int k0 = poly.degree - total;
    double coef = factorial(poly.degree) / (denom * factorial(k0)) * std::pow(poly.offset, k0);
    phi(idx++) = std::sqrt(coef) * value;
  }
  return phi;
}

double kkl_alpha_oracle(const DiscreteMeasure& p, const DiscreteMeasure& q,
                        const KernelSpec& poly, double alpha, const KklOptions& opt) {
  check_pair(p, q);
  check_alpha(alpha);
  if (poly.family != KernelFamily::polynomial)
    throw std::invalid_argument("kkl_alpha_oracle requires a polynomial kernel");

  const int d = p.dim();
  const int D = polynomial_feature_dim(d, poly.degree);
  if (D > 200) throw std::invalid_argument("polynomial feature dimension exceeds 200");

  auto covariance = [&](const DiscreteMeasure& mu) {
    Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(D, D);
    for (int i = 0; i < mu.size(); ++i) {
      Eigen::VectorXd phi = polynomial_features(poly, mu.points.row(i));
      sigma.noalias() += mu.weights(i) * phi * phi.transpose();
    }
    return sigma;
  };

  Eigen::MatrixXd sigma_p = covariance(p);
  Eigen::MatrixXd sigma_mix = alpha * sigma_p + (1.0 - alpha) * covariance(q);

  double entropy = entropy_trace(sym_eig(sigma_p, opt.eig_floor_scale));
  Eigen::MatrixXd log_mix = spectral_apply(sigma_mix, SpectralFn::log, opt.eig_floor_scale);
  double cross = sigma_p.cwiseProduct(log_mix).sum();
  return clamp_zero(entropy - cross, opt);
}

// ---------------------------------------------------------------------------
// Nested-support exact divergence
// ---------------------------------------------------------------------------

namespace {

// Tr(Sigma_p log Sigma_q) through the target's weighted Gram spectrum, plus a
// projected-mass audit that certifies the kernel-range inclusion numerically.
double nested_cross_impl(const DiscreteMeasure& p, const DiscreteMeasure& q,
                         const KernelSpec& k, const KklOptions& opt) {
  Eigen::VectorXd vs = q.weights.array().sqrt();
  Eigen::MatrixXd Mq = vs.asDiagonal() * gram(k, q.points, q.points) * vs.asDiagonal();
  auto eig_q = sym_eig(Mq, opt.eig_floor_scale);

  Eigen::MatrixXd Kqp = gram(k, q.points, p.points);  // m x n
  Eigen::MatrixXd R = eig_q.retained_vectors().transpose() * (vs.asDiagonal() * Kqp);

  double cross = 0.0, projected = 0.0;
  for (int t = 0; t < eig_q.retained; ++t) {
    double gamma = eig_q.eigenvalues(t);
    double s = (R.row(t).transpose().array().square() * p.weights.array()).sum();
    cross += std::log(gamma) / gamma * s;
    projected += s / gamma;
  }

  double expected = 0.0;
  for (int i = 0; i < p.size(); ++i)
    expected += p.weights(i) * kernel_value(k, p.points.row(i), p.points.row(i));
  if (std::abs(projected - expected) > 1e-6 * std::max(1.0, std::abs(expected)))
    throw std::runtime_error("support leakage: atoms of p escape the span of q's features");
  return cross;
}

}  // namespace

double nested_cross_term(const DiscreteMeasure& p, const DiscreteMeasure& q,
                         const KernelSpec& k, const KklOptions& opt) {
  check_pair(p, q);
  return nested_cross_impl(p, q, k, opt);
}

double kkl_exact_nested(const DiscreteMeasure& p, const DiscreteMeasure& q,
                        const KernelSpec& k, const KklOptions& opt) {
  check_pair(p, q);
  double cross = nested_cross_impl(p, q, k, opt);
  double entropy = entropy_trace(sym_eig(entropy_gram(p, k), opt.eig_floor_scale));
  return clamp_zero(entropy - cross, opt);
}

namespace {

// Index of the atom of q coinciding with x, or -1.
int matching_atom(const DiscreteMeasure& q, const Eigen::RowVectorXd& x) {
  for (int j = 0; j < q.size(); ++j)
    if ((q.points.row(j) - x).squaredNorm() <= 1e-24) return j;
  return -1;
}

}  // namespace

double nested_mu(const DiscreteMeasure& p, const DiscreteMeasure& q) {
  check_pair(p, q);
  double mu = 1.0;
  for (int i = 0; i < p.size(); ++i) {
    int j = matching_atom(q, p.points.row(i));
    if (j < 0) throw std::invalid_argument("nested_mu: atom of p is not an atom of q");
    if (p.weights(i) > 0.0) mu = std::min(mu, q.weights(j) / p.weights(i));
  }
  if (!(mu > 0.0)) throw std::invalid_argument("nested_mu: zero weight ratio");
  return mu;
}

double skewness_bound(const DiscreteMeasure& p, const DiscreteMeasure& q, const KernelSpec& k,
                      double alpha, double mu, const KklOptions& opt) {
  check_pair(p, q);
  check_alpha(alpha);
  if (!(mu > 0.0 && mu <= 1.0)) throw std::invalid_argument("mu must lie in (0, 1]");
  for (int i = 0; i < p.size(); ++i) {
    int j = matching_atom(q, p.points.row(i));
    if (j < 0) throw std::invalid_argument("skewness_bound: supports are not nested");
    if (p.weights(i) > q.weights(j) / mu * (1.0 + 1e-12))
      throw std::invalid_argument("skewness_bound: mu inconsistent with the weight ratios");
  }
  double cross = std::abs(nested_cross_impl(p, q, k, opt));
  double factor = alpha * (1.0 + 1.0 / mu) +
                  alpha * alpha / (1.0 - alpha) * (1.0 + 1.0 / (mu * mu));
  return factor * cross;
}

// ---------------------------------------------------------------------------
// Spectral cache, first variation, gradient
// ---------------------------------------------------------------------------

SpectralCache build_spectral_cache(const DiscreteMeasure& p, const DiscreteMeasure& q,
                                   const KernelSpec& k, double alpha, const KklOptions& opt) {
  JointGram jg = build_joint_gram(p, q, k, alpha);
  const int n = jg.n, m = jg.m;

  SpectralCache c;
  c.alpha = alpha;
  c.n = n;
  c.m = m;
  c.source_points = p.points;
  c.target_points = q.points;
  c.s_scale = p.weights.array().sqrt();
  c.t_scale.resize(n + m);
  c.t_scale.head(n) = (alpha * p.weights.array()).sqrt();
  c.t_scale.tail(m) = ((1.0 - alpha) * q.weights.array()).sqrt();
  c.kernel = k;

  c.eig_entropy = sym_eig(entropy_gram(p, k), opt.eig_floor_scale);
  c.eig_joint = sym_eig(jg.K, opt.eig_floor_scale);
  c.g_entropy = spectral_apply(c.eig_entropy, SpectralFn::log_over_x);

  const int r = c.eig_joint.retained;
  if (r > 0) {
    auto C = c.eig_joint.retained_vectors();
    Eigen::MatrixXd block = C.topRows(n);                   // a_j as columns
    Eigen::MatrixXd G = block.transpose() * block;          // <a_j, a_k>
    G = (G.array().abs() <= opt.pair_skip_tol).select(0.0, G);
    Eigen::MatrixXd L = loewner(c.eig_joint, opt.degeneracy_tol);
    c.a_core = L.cwiseProduct(G);
    c.a_matrix = C * c.a_core * C.transpose();
  } else {
    c.a_core = Eigen::MatrixXd::Zero(0, 0);
    c.a_matrix = Eigen::MatrixXd::Zero(n + m, n + m);
  }
  c.g_plus_a = spectral_apply(c.eig_joint, SpectralFn::log_over_x) + c.a_matrix;

  c.g_entropy_vals.resize(c.eig_entropy.retained);
  for (int j = 0; j < c.eig_entropy.retained; ++j)
    c.g_entropy_vals(j) = apply_fn(SpectralFn::log_over_x, c.eig_entropy.eigenvalues(j));
  c.g_joint_vals.resize(r);
  for (int j = 0; j < r; ++j)
    c.g_joint_vals(j) = apply_fn(SpectralFn::log_over_x, c.eig_joint.eigenvalues(j));

  c.kkl_value = entropy_trace(c.eig_entropy) - joint_cross_term(c.eig_joint, n, alpha);
  if (std::abs(c.kkl_value) <= opt.zero_clamp) c.kkl_value = 0.0;
  return c;
}

namespace {

struct KernelVectors {
  Eigen::VectorXd s;  // n
  Eigen::VectorXd t;  // n + m
};

KernelVectors kernel_vectors(const SpectralCache& c, ConstVecRef x) {
  KernelVectors kv;
  kv.s.resize(c.n);
  kv.t.resize(c.n + c.m);
  for (int i = 0; i < c.n; ++i) {
    double v = kernel_value(c.kernel, x, c.source_points.row(i));
    kv.s(i) = c.s_scale(i) * v;
    kv.t(i) = c.t_scale(i) * v;
  }
  for (int j = 0; j < c.m; ++j)
    kv.t(c.n + j) = c.t_scale(c.n + j) * kernel_value(c.kernel, x, c.target_points.row(j));
  return kv;
}

}  // namespace

double first_variation(const SpectralCache& c, ConstVecRef x) {
  auto kv = kernel_vectors(c, x);
  Eigen::VectorXd sp = c.eig_entropy.retained_vectors().transpose() * kv.s;
  Eigen::VectorXd tp = c.eig_joint.retained_vectors().transpose() * kv.t;
  return 1.0 + sp.dot(c.g_entropy_vals.cwiseProduct(sp)) -
         tp.dot(c.g_joint_vals.cwiseProduct(tp)) - tp.dot(c.a_core * tp);
}

Eigen::VectorXd wasserstein_gradient(const SpectralCache& c, ConstVecRef x) {
  auto kv = kernel_vectors(c, x);
  Eigen::VectorXd sp = c.eig_entropy.retained_vectors().transpose() * kv.s;
  Eigen::VectorXd tp = c.eig_joint.retained_vectors().transpose() * kv.t;
  Eigen::VectorXd gs = c.eig_entropy.retained_vectors() * c.g_entropy_vals.cwiseProduct(sp);
  Eigen::VectorXd gt =
      c.eig_joint.retained_vectors() * (c.g_joint_vals.cwiseProduct(tp) + c.a_core * tp);

  const int d = static_cast<int>(x.size());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(d);
  for (int i = 0; i < c.n; ++i)
    out += (2.0 * gs(i) * c.s_scale(i)) * kernel_grad1(c.kernel, x, c.source_points.row(i));
  for (int i = 0; i < c.n; ++i)
    out -= (2.0 * gt(i) * c.t_scale(i)) * kernel_grad1(c.kernel, x, c.source_points.row(i));
  for (int j = 0; j < c.m; ++j)
    out -= (2.0 * gt(c.n + j) * c.t_scale(c.n + j)) *
           kernel_grad1(c.kernel, x, c.target_points.row(j));
  return out;
}

Eigen::MatrixXd wasserstein_gradient_at_atoms(const SpectralCache& c) {
  const int n = c.n, m = c.m, d = static_cast<int>(c.source_points.cols());
  Eigen::MatrixXd Kxx = gram(c.kernel, c.source_points, c.source_points);
  Eigen::MatrixXd Kyx = gram(c.kernel, c.target_points, c.source_points);

  Eigen::MatrixXd s_all = c.s_scale.asDiagonal() * Kxx;  // column i = S(x_i)
  Eigen::MatrixXd t_all(n + m, n);
  t_all.topRows(n) = c.t_scale.head(n).asDiagonal() * Kxx;
  t_all.bottomRows(m) = c.t_scale.tail(m).asDiagonal() * Kyx;

  Eigen::MatrixXd sp = c.eig_entropy.retained_vectors().transpose() * s_all;
  Eigen::MatrixXd tp = c.eig_joint.retained_vectors().transpose() * t_all;
  Eigen::MatrixXd gs =
      c.eig_entropy.retained_vectors() * c.g_entropy_vals.asDiagonal() * sp;
  Eigen::MatrixXd gt = c.eig_joint.retained_vectors() *
                       (c.g_joint_vals.asDiagonal() * tp + c.a_core * tp);

  Eigen::MatrixXd grad(n, d);
  if (c.kernel.family == KernelFamily::gaussian) {
    double coef = -4.0 / (c.kernel.bandwidth * c.kernel.bandwidth);
    for (int i = 0; i < n; ++i) {
      // 2 sum_j u_j grad1(x_i, z_j) with grad1 = -(2/s^2)(x_i - z_j) k(x_i, z_j)
      Eigen::VectorXd us =
          gs.col(i).cwiseProduct(c.s_scale).cwiseProduct(Kxx.col(i));
      Eigen::VectorXd ut(n + m);
      ut.head(n) = gt.col(i).head(n).cwiseProduct(c.t_scale.head(n)).cwiseProduct(Kxx.col(i));
      ut.tail(m) = gt.col(i).tail(m).cwiseProduct(c.t_scale.tail(m)).cwiseProduct(Kyx.col(i));
      Eigen::VectorXd xi = c.source_points.row(i).transpose();
      Eigen::VectorXd spart =
          coef * (us.sum() * xi - c.source_points.transpose() * us);
      Eigen::VectorXd tpart =
          coef * (ut.sum() * xi - c.source_points.transpose() * ut.head(n) -
                  c.target_points.transpose() * ut.tail(m));
      grad.row(i) = (spart - tpart).transpose();
    }
  } else {
    for (int i = 0; i < n; ++i)
      grad.row(i) = wasserstein_gradient(c, c.source_points.row(i)).transpose();
  }
  return grad;
}

}  // namespace kklflow
