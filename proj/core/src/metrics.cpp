#include "kklflow/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace kklflow {

std::vector<int> solve_assignment(const Eigen::MatrixXd& cost) {
  const int n = static_cast<int>(cost.rows());
  if (cost.cols() != n || n < 1) throw std::invalid_argument("solve_assignment: square matrix required");
  if (!cost.allFinite()) throw std::invalid_argument("solve_assignment: non-finite costs");

  constexpr double kInf = std::numeric_limits<double>::infinity();
  // Shortest augmenting path with dual potentials (1-indexed, column 0 virtual).
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), kInf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = p[j0], j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] != 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

double wasserstein2(const DiscreteMeasure& p, const DiscreteMeasure& q) {
  p.validate();
  q.validate();
  if (p.dim() != q.dim()) throw std::invalid_argument("wasserstein2: dimension mismatch");
  const int n = p.size();
  if (q.size() != n) throw std::invalid_argument("wasserstein2: clouds must have equal size");
  double uw = 1.0 / n;
  if ((p.weights.array() - uw).abs().maxCoeff() > 1e-12 ||
      (q.weights.array() - uw).abs().maxCoeff() > 1e-12)
    throw std::invalid_argument("wasserstein2: uniform weights required");

  Eigen::MatrixXd cost(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) cost(i, j) = (p.points.row(i) - q.points.row(j)).squaredNorm();

  std::vector<int> match = solve_assignment(cost);
  // Summing the matched costs in sorted order makes the value independent of
  // atom ordering and exactly symmetric in (p, q).
  std::vector<double> matched(n);
  for (int i = 0; i < n; ++i) matched[i] = cost(i, match[i]);
  std::sort(matched.begin(), matched.end());
  double acc = 0.0;
  for (double c : matched) acc += c;
  return std::sqrt(acc / n);
}

double energy_distance(const DiscreteMeasure& p, const DiscreteMeasure& q) {
  p.validate();
  q.validate();
  if (p.dim() != q.dim()) throw std::invalid_argument("energy_distance: dimension mismatch");
  // Cross terms summed in sorted order: exactly symmetric in (p, q).
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(p.size()) * q.size());
  for (int i = 0; i < p.size(); ++i)
    for (int j = 0; j < q.size(); ++j)
      terms.push_back(p.weights(i) * q.weights(j) * (p.points.row(i) - q.points.row(j)).norm());
  std::sort(terms.begin(), terms.end());
  double cross = 0.0;
  for (double t : terms) cross += t;

  double within_p = 0.0, within_q = 0.0;
  for (int i = 0; i < p.size(); ++i)
    for (int j = 0; j < p.size(); ++j)
      within_p += p.weights(i) * p.weights(j) * (p.points.row(i) - p.points.row(j)).norm();
  for (int i = 0; i < q.size(); ++i)
    for (int j = 0; j < q.size(); ++j)
      within_q += q.weights(i) * q.weights(j) * (q.points.row(i) - q.points.row(j)).norm();
  double out = 2.0 * cross - (within_p + within_q);
  return out < 0.0 ? 0.0 : out;
}

}  // namespace kklflow
