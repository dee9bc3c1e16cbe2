#pragma once

#include <Eigen/Dense>

#include "kklflow/kernel.hpp"
#include "kklflow/measure.hpp"
#include "kklflow/spectral.hpp"

namespace kklflow {

/// Numerical policy knobs shared by the divergence evaluators.
struct KklOptions {
  double eig_floor_scale = 1.0;  // scales the sym_eig clamp threshold
  double degeneracy_tol = 1e-8;  // relative switch to the divided-difference limit
  double zero_clamp = 1e-9;      // |value| below this reported as exactly 0
  double pair_skip_tol = 1e-14;  // cross pairs with |<a_j, a_k>| below are skipped
};

/// Joint Gram matrix of the mixture factor. Row i of the implicit factor is
/// sqrt(alpha w_i) phi(x_i) for i < n and sqrt((1-alpha) v_j) phi(y_j) after,
/// so with uniform weights the blocks are
///   [ (alpha/n) Kp                sqrt(alpha(1-alpha)/(nm)) Kpq ]
///   [ sqrt(alpha(1-alpha)/(nm)) Kqp   ((1-alpha)/m) Kq          ]
struct JointGram {
  Eigen::MatrixXd K;             // (n+m) x (n+m), PSD up to round-off
  Eigen::VectorXd i_alpha_diag;  // 1/alpha on the first n entries, 0 after
  double alpha = 0.5;
  int n = 0, m = 0;
};

JointGram build_joint_gram(const DiscreteMeasure& p, const DiscreteMeasure& q,
                           const KernelSpec& k, double alpha);

/// Regularized kernel KL divergence between discrete measures:
/// the entropy trace of the weighted Gram of p minus the cross trace computed
/// from the joint Gram spectrum as sum_j eta_j log(eta_j) ||a_j||^2 / alpha,
/// a_j being the first n entries of the j-th eigenvector. Values within
/// zero_clamp of 0 are reported as exactly 0. Nonnegative for unit-diagonal
/// kernels (k(x,x) = 1); kernels with mismatched operator traces (polynomial)
/// can produce negative values.
double kkl_alpha(const DiscreteMeasure& p, const DiscreteMeasure& q, const KernelSpec& k,
                 double alpha, const KklOptions& opt = {});

/// Independent route for polynomial kernels: builds the explicit D-dimensional
/// monomial feature covariances and evaluates both traces in feature space.
/// Throws if the feature dimension C(d + degree, degree) exceeds 200.
double kkl_alpha_oracle(const DiscreteMeasure& p, const DiscreteMeasure& q,
                        const KernelSpec& poly, double alpha, const KklOptions& opt = {});

/// Unregularized divergence for nested supports (every atom of p is an atom
/// of q). Verifies that the feature-space mass of p projected on the span of
/// q's features accounts for all of sum_i w_i k(x_i, x_i); throws
/// std::runtime_error("support leakage") otherwise.
double kkl_exact_nested(const DiscreteMeasure& p, const DiscreteMeasure& q,
                        const KernelSpec& k, const KklOptions& opt = {});

/// Cross trace of the nested evaluator (the log-covariance pairing of p
/// against q), exposed because the deviation bound is proportional to it.
double nested_cross_term(const DiscreteMeasure& p, const DiscreteMeasure& q,
                         const KernelSpec& k, const KklOptions& opt = {});

/// Largest mu in (0, 1] such that w_i <= v_{j(i)} / mu over matched atoms;
/// throws if some atom of p has no matching atom in q.
double nested_mu(const DiscreteMeasure& p, const DiscreteMeasure& q);

/// Deviation bound between the regularized and nested-exact divergences:
///   (alpha (1 + 1/mu) + alpha^2/(1-alpha) (1 + 1/mu^2)) * |cross trace|.
/// Requires nested supports and mu consistent with the weight ratios.
double skewness_bound(const DiscreteMeasure& p, const DiscreteMeasure& q, const KernelSpec& k,
                      double alpha, double mu, const KklOptions& opt = {});

/// Everything the first variation and its spatial gradient need, built once
/// per (p, q, kernel, alpha) and immutable afterwards: eigendecompositions of
/// the entropy Gram and the joint Gram, g = log(x)/x applied to both, and the
/// divided-difference matrix
///   A = sum_j (||a_j||^2 / eta_j) c_j c_j^T
///     + sum_{j != k} L[j,k] <a_j, a_k> c_j c_k^T
/// assembled over retained eigenpairs only.
struct SpectralCache {
  double alpha = 0.5;
  int n = 0, m = 0;
  Eigen::MatrixXd source_points;  // n x d
  Eigen::MatrixXd target_points;  // m x d
  Eigen::VectorXd s_scale;        // sqrt(w_i), length n
  Eigen::VectorXd t_scale;        // sqrt(alpha w_i) ++ sqrt((1-alpha) v_j), length n+m
  KernelSpec kernel;
  EigenDecomposition eig_entropy;  // of W^{1/2} Kp W^{1/2}
  EigenDecomposition eig_joint;    // of the joint Gram K
  Eigen::MatrixXd g_entropy;       // g(W^{1/2} Kp W^{1/2}), n x n
  Eigen::MatrixXd a_matrix;        // A, (n+m) x (n+m)
  Eigen::MatrixXd g_plus_a;        // g(K) + A
  // Spectral-basis form of the same data; evaluation contracts through it so
  // small retained eigenvalues never materialize as huge matrix entries.
  Eigen::VectorXd g_entropy_vals;  // log(lam)/lam over retained entropy eigenpairs
  Eigen::VectorXd g_joint_vals;    // log(eta)/eta over retained joint eigenpairs
  Eigen::MatrixXd a_core;          // divided differences .* <a_j, a_k>, retained x retained
  double kkl_value = 0.0;          // divergence at the cached configuration
};

SpectralCache build_spectral_cache(const DiscreteMeasure& p, const DiscreteMeasure& q,
                                   const KernelSpec& k, double alpha,
                                   const KklOptions& opt = {});

/// First variation of the divergence in its first argument, evaluated at x:
///   1 + S(x)^T g_entropy S(x) - T(x)^T (g(K) + A) T(x)
/// with S(x)[i] = sqrt(w_i) k(x, x_i) and T(x) the jointly scaled kernel vector.
double first_variation(const SpectralCache& cache, ConstVecRef x);

/// Spatial gradient of the first variation with the cache frozen:
///   2 J_S(x)^T g_entropy S(x) - 2 J_T(x)^T (g(K) + A) T(x).
Eigen::VectorXd wasserstein_gradient(const SpectralCache& cache, ConstVecRef x);

/// Gradients at all source atoms (rows); one shared cache, batched products.
Eigen::MatrixXd wasserstein_gradient_at_atoms(const SpectralCache& cache);

/// Dimension of the monomial feature space of a polynomial kernel.
int polynomial_feature_dim(int dim, int degree);

/// Explicit feature map phi with <phi(x), phi(y)> = (offset + <x,y>)^degree.
Eigen::VectorXd polynomial_features(const KernelSpec& poly, ConstVecRef x);

}  // namespace kklflow
