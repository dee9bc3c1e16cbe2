#include "kklflow/mmd.hpp"

#include <algorithm>
#include <stdexcept>
#include <vector>

namespace kklflow {

double mmd_squared(const DiscreteMeasure& p, const DiscreteMeasure& q, const KernelSpec& k) {
  p.validate();
  q.validate();
  if (p.dim() != q.dim()) throw std::invalid_argument("mmd_squared: dimension mismatch");
  const auto& w = p.weights;
  const auto& v = q.weights;
  double pp = w.dot(gram(k, p.points, p.points) * w);
  double qq = v.dot(gram(k, q.points, q.points) * v);
  // Cross terms are summed in sorted order so the result is exactly symmetric
  // in (p, q) regardless of accumulation order.
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(p.size()) * q.size());
  for (int i = 0; i < p.size(); ++i)
    for (int j = 0; j < q.size(); ++j)
      terms.push_back(w(i) * v(j) * kernel_value(k, p.points.row(i), q.points.row(j)));
  std::sort(terms.begin(), terms.end());
  double pq = 0.0;
  for (double t : terms) pq += t;
  double out = (pp + qq) - 2.0 * pq;
  return out < 0.0 ? 0.0 : out;
}

Eigen::VectorXd mmd_witness_gradient(const DiscreteMeasure& p, const DiscreteMeasure& q,
                                     const KernelSpec& k, ConstVecRef x) {
  if (p.dim() != q.dim() || p.dim() != x.size())
    throw std::invalid_argument("mmd_witness_gradient: dimension mismatch");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
  for (int j = 0; j < p.size(); ++j)
    out += p.weights(j) * kernel_grad1(k, x, p.points.row(j));
  for (int j = 0; j < q.size(); ++j)
    out -= q.weights(j) * kernel_grad1(k, x, q.points.row(j));
  return out;
}

}  // namespace kklflow
