#pragma once

#include <Eigen/Dense>

namespace kklflow {

/// Eigendecomposition of a symmetric PSD matrix with a drop policy for the
/// numerically-zero tail: eigenvalues below
///     floor = floor_scale * r * eps_machine * max(lambda_max, 1)
/// are clamped to exactly 0 and excluded from every spectral function, which
/// realizes the 0 log 0 = 0 convention of the positive-spectrum trace sums.
struct EigenDecomposition {
  Eigen::VectorXd eigenvalues;   // descending; clamped entries are exactly 0
  Eigen::MatrixXd eigenvectors;  // orthonormal columns, matching order
  double floor = 0.0;
  int retained = 0;  // eigenvalues[0..retained) are strictly positive

  Eigen::Ref<const Eigen::MatrixXd> retained_vectors() const {
    return eigenvectors.leftCols(retained);
  }
};

/// Throws std::invalid_argument if M is not square/symmetric (1e-10 relative
/// asymmetry) and std::runtime_error("matrix not PSD") if an eigenvalue falls
/// below -1e-8 * lambda_max.
EigenDecomposition sym_eig(const Eigen::MatrixXd& M, double floor_scale = 1.0);

enum class SpectralFn { log_over_x, log, xlogx };

double apply_fn(SpectralFn f, double x);

/// Tr(M log M) over the retained spectrum.
double entropy_trace(const EigenDecomposition& eig);
double entropy_trace(const Eigen::MatrixXd& M, double floor_scale = 1.0);

/// V diag(f(lambda_retained), 0_dropped) V^T.
Eigen::MatrixXd spectral_apply(const EigenDecomposition& eig, SpectralFn f);
Eigen::MatrixXd spectral_apply(const Eigen::MatrixXd& M, SpectralFn f, double floor_scale = 1.0);

/// Divided-difference table of log over the retained eigenvalues:
///   L[j, k] = (log l_j - log l_k) / (l_j - l_k),  L[j, j] = 1 / l_j,
/// with the analytic limit 2 / (l_j + l_k) once |l_j - l_k| <=
/// degeneracy_tol * max(l_j, l_k). Symmetric with positive entries.
Eigen::MatrixXd loewner(const EigenDecomposition& eig, double degeneracy_tol = 1e-8);

struct PsiTransferSides {
  Eigen::MatrixXd lhs;  // f(psi^T psi)
  Eigen::MatrixXd rhs;  // psi^T (psi psi^T)^{-1/2} f(psi psi^T) (psi psi^T)^{-1/2} psi
};

/// Evaluates both sides of the factor-transfer identity
///   f(psi^T psi) = psi^T (psi psi^T)^{-1/2} f(psi psi^T) (psi psi^T)^{-1/2} psi
/// for a wide factor psi (r x D, r < D). Throws if psi psi^T is rank deficient.
PsiTransferSides psi_transfer(const Eigen::MatrixXd& psi, SpectralFn f);

}  // namespace kklflow
