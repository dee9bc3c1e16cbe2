#include "kklflow/spectral.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace kklflow {

EigenDecomposition sym_eig(const Eigen::MatrixXd& M, double floor_scale) {
  const auto r = M.rows();
  if (M.cols() != r || r < 1) throw std::invalid_argument("sym_eig: matrix must be square");
  double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    throw std::invalid_argument("sym_eig: matrix is not symmetric");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (M + M.transpose()));
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("sym_eig: eigendecomposition failed");

  // the solver returns ascending order; flip to descending
  EigenDecomposition out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();

  double lam_max = out.eigenvalues(0);
  if (out.eigenvalues(r - 1) < -1e-8 * std::max(lam_max, 0.0))
    throw std::runtime_error("sym_eig: matrix not PSD");

  out.floor = floor_scale * static_cast<double>(r) *
              std::numeric_limits<double>::epsilon() * std::max(lam_max, 1.0);
  out.retained = 0;
  for (Eigen::Index j = 0; j < r; ++j) {
    if (out.eigenvalues(j) < out.floor) {
      out.eigenvalues.tail(r - j).setZero();
      break;
    }
    ++out.retained;
  }
  return out;
}

double apply_fn(SpectralFn f, double x) {
  switch (f) {
    case SpectralFn::log_over_x:
      return std::log(x) / x;
    case SpectralFn::log:
      return std::log(x);
    case SpectralFn::xlogx:
      return x * std::log(x);
  }
  return 0.0;
}

double entropy_trace(const EigenDecomposition& eig) {
  double acc = 0.0;
  for (int j = 0; j < eig.retained; ++j) acc += apply_fn(SpectralFn::xlogx, eig.eigenvalues(j));
  return acc;
}

double entropy_trace(const Eigen::MatrixXd& M, double floor_scale) {
  return entropy_trace(sym_eig(M, floor_scale));
}

Eigen::MatrixXd spectral_apply(const EigenDecomposition& eig, SpectralFn f) {
  const auto r = eig.eigenvectors.rows();
  if (eig.retained == 0) return Eigen::MatrixXd::Zero(r, r);
  Eigen::VectorXd fv(eig.retained);
  for (int j = 0; j < eig.retained; ++j) fv(j) = apply_fn(f, eig.eigenvalues(j));
  auto V = eig.retained_vectors();
  return V * fv.asDiagonal() * V.transpose();
}

Eigen::MatrixXd spectral_apply(const Eigen::MatrixXd& M, SpectralFn f, double floor_scale) {
  return spectral_apply(sym_eig(M, floor_scale), f);
}

Eigen::MatrixXd loewner(const EigenDecomposition& eig, double degeneracy_tol) {
  const int r = eig.retained;
  if (r == 0) throw std::invalid_argument("loewner: no retained eigenvalues");
  Eigen::MatrixXd L(r, r);
  for (int j = 0; j < r; ++j) {
    double lj = eig.eigenvalues(j);
    L(j, j) = 1.0 / lj;
    for (int k = j + 1; k < r; ++k) {
      double lk = eig.eigenvalues(k);
      double entry;
      if (std::abs(lj - lk) <= degeneracy_tol * std::max(lj, lk))
        entry = 2.0 / (lj + lk);  // analytic limit of the divided difference
      else
        entry = (std::log(lj) - std::log(lk)) / (lj - lk);
      L(j, k) = entry;
      L(k, j) = entry;
    }
  }
  return L;
}

PsiTransferSides psi_transfer(const Eigen::MatrixXd& psi, SpectralFn f) {
  const auto r = psi.rows();
  const auto d = psi.cols();
  if (r >= d) throw std::invalid_argument("psi_transfer: factor must be wide (rows < cols)");

  Eigen::MatrixXd small = psi * psi.transpose();
  auto eig_small = sym_eig(small);
  if (eig_small.retained < r)
    throw std::runtime_error("psi_transfer: psi psi^T is rank deficient");

  PsiTransferSides sides;
  sides.lhs = spectral_apply(psi.transpose() * psi, f);
  // G^{-1/2} f(G) G^{-1/2} shares G's eigenbasis, so it is f(s)/s on the spectrum.
  Eigen::VectorXd mid(r);
  for (Eigen::Index j = 0; j < r; ++j)
    mid(j) = apply_fn(f, eig_small.eigenvalues(j)) / eig_small.eigenvalues(j);
  const auto& V = eig_small.eigenvectors;
  sides.rhs = psi.transpose() * (V * mid.asDiagonal() * V.transpose()) * psi;
  return sides;
}

}  // namespace kklflow
