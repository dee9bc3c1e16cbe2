#include "kklflow/measure.hpp"

#include <cmath>
#include <stdexcept>

#include "kklflow/rng.hpp"

namespace kklflow {

void DiscreteMeasure::validate() const {
  const auto n = points.rows();
  if (n < 1) throw std::invalid_argument("measure must carry at least one atom");
  if (points.cols() < 1) throw std::invalid_argument("measure atoms need dimension >= 1");
  if (weights.size() != n)
    throw std::invalid_argument("weights size does not match the number of atoms");
  if ((weights.array() < 0.0).any())
    throw std::invalid_argument("weights must be nonnegative");
  if (std::abs(weights.sum() - 1.0) > 1e-12)
    throw std::invalid_argument("weights must sum to 1 within 1e-12");
  if (!points.allFinite() || !weights.allFinite())
    throw std::invalid_argument("measure contains non-finite entries");
}

DiscreteMeasure DiscreteMeasure::uniform(Eigen::MatrixXd pts) {
  DiscreteMeasure m;
  m.points = std::move(pts);
  m.weights = Eigen::VectorXd::Constant(m.points.rows(), 1.0 / double(m.points.rows()));
  m.validate();
  return m;
}

DiscreteMeasure DiscreteMeasure::weighted(Eigen::MatrixXd pts, Eigen::VectorXd w) {
  DiscreteMeasure m;
  m.points = std::move(pts);
  m.weights = std::move(w);
  m.validate();
  return m;
}

DiscreteMeasure DiscreteMeasure::dirac(const Eigen::VectorXd& x) {
  DiscreteMeasure m;
  m.points = x.transpose();
  m.weights = Eigen::VectorXd::Ones(1);
  return m;
}

DiscreteMeasure mix(const DiscreteMeasure& p, const DiscreteMeasure& r, double eps) {
  p.validate();
  r.validate();
  if (p.dim() != r.dim()) throw std::invalid_argument("mix: dimension mismatch");
  if (!(eps >= 0.0 && eps <= 1.0)) throw std::invalid_argument("mix: eps must lie in [0, 1]");

  const int n = p.size(), k = r.size();
  Eigen::MatrixXd pts(n + k, p.dim());
  Eigen::VectorXd w(n + k);
  pts.topRows(n) = p.points;
  pts.bottomRows(k) = r.points;
  w.head(n) = (1.0 - eps) * p.weights;
  w.tail(k) = eps * r.weights;

  // Drop exact zeros (eps at the endpoints), then renormalize round-off.
  int kept = 0;
  for (int i = 0; i < n + k; ++i) {
    if (w(i) == 0.0) continue;
    pts.row(kept) = pts.row(i);
    w(kept) = w(i);
    ++kept;
  }
  DiscreteMeasure out;
  out.points = pts.topRows(kept);
  out.weights = w.head(kept) / w.head(kept).sum();
  out.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Target specifications
// ---------------------------------------------------------------------------

namespace {

void check_spd(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols()) throw std::invalid_argument("covariance must be square");
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() >
      1e-10 * std::max(1.0, cov.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("covariance must be symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("covariance must be positive definite");
}

}  // namespace

void TargetSpec::validate() const {
  if (dim < 1) throw std::invalid_argument("target dimension must be >= 1");
  switch (family) {
    case TargetFamily::gaussian:
    case TargetFamily::gaussian_mixture: {
      if (components.empty()) throw std::invalid_argument("gaussian target needs components");
      if (mixture_weights.size() != static_cast<Eigen::Index>(components.size()))
        throw std::invalid_argument("mixture weights must match the component count");
      if ((mixture_weights.array() < 0.0).any() || std::abs(mixture_weights.sum() - 1.0) > 1e-9)
        throw std::invalid_argument("mixture weights must be nonnegative and sum to 1");
      for (const auto& c : components) {
        if (c.mean.size() != dim) throw std::invalid_argument("component mean has wrong dimension");
        check_spd(c.cov);
        if (c.cov.rows() != dim) throw std::invalid_argument("component covariance has wrong dimension");
      }
      break;
    }
    case TargetFamily::exponential:
      if (!(rate > 0.0)) throw std::invalid_argument("exponential rate must be positive");
      break;
    case TargetFamily::rings:
      if (dim != 2) throw std::invalid_argument("rings target lives in dimension 2");
      if (ring_centers.rows() < 1 || ring_centers.cols() != 2)
        throw std::invalid_argument("ring centers must be a k x 2 matrix");
      if (ring_radii.size() != ring_centers.rows() || (ring_radii.array() <= 0.0).any())
        throw std::invalid_argument("ring radii must be positive, one per center");
      break;
    case TargetFamily::spiral:
      if (dim != 2) throw std::invalid_argument("spiral target lives in dimension 2");
      if (!(spiral_turns > 0.0) || !(spiral_scale > 0.0) || !(shape_scale > 0.0))
        throw std::invalid_argument("spiral parameters must be positive");
      break;
    case TargetFamily::heart:
      if (dim != 2) throw std::invalid_argument("heart target lives in dimension 2");
      if (!(shape_scale > 0.0)) throw std::invalid_argument("heart scale must be positive");
      break;
    case TargetFamily::uniform_box:
      if (box_lo.size() != dim || box_hi.size() != dim)
        throw std::invalid_argument("box bounds must match the dimension");
      if ((box_hi.array() <= box_lo.array()).any())
        throw std::invalid_argument("box upper bounds must exceed lower bounds");
      break;
  }
}

TargetSpec TargetSpec::gaussian(Eigen::VectorXd mean, Eigen::MatrixXd cov) {
  TargetSpec s;
  s.family = TargetFamily::gaussian;
  s.dim = static_cast<int>(mean.size());
  s.components.push_back({std::move(mean), std::move(cov)});
  s.mixture_weights = Eigen::VectorXd::Ones(1);
  s.validate();
  return s;
}

TargetSpec TargetSpec::gaussian_mixture(std::vector<GaussianComponent> comps,
                                        Eigen::VectorXd weights) {
  TargetSpec s;
  s.family = TargetFamily::gaussian_mixture;
  if (comps.empty()) throw std::invalid_argument("mixture needs at least one component");
  s.dim = static_cast<int>(comps.front().mean.size());
  s.components = std::move(comps);
  s.mixture_weights = std::move(weights);
  s.validate();
  return s;
}

TargetSpec TargetSpec::exponential(double rate, int dim) {
  TargetSpec s;
  s.family = TargetFamily::exponential;
  s.dim = dim;
  s.rate = rate;
  s.validate();
  return s;
}

TargetSpec TargetSpec::rings(Eigen::MatrixXd centers, Eigen::VectorXd radii) {
  TargetSpec s;
  s.family = TargetFamily::rings;
  s.dim = 2;
  s.ring_centers = std::move(centers);
  s.ring_radii = std::move(radii);
  s.validate();
  return s;
}

TargetSpec TargetSpec::three_rings() {
  Eigen::MatrixXd centers(3, 2);
  centers << 0.0, 0.0, 2.5, 0.0, 5.0, 0.0;
  return rings(centers, Eigen::VectorXd::Ones(3));
}

TargetSpec TargetSpec::spiral(double turns, double scale, double shape_scale,
                              Eigen::Vector2d center) {
  TargetSpec s;
  s.family = TargetFamily::spiral;
  s.dim = 2;
  s.spiral_turns = turns;
  s.spiral_scale = scale;
  s.shape_scale = shape_scale;
  s.shape_center = center;
  s.validate();
  return s;
}

TargetSpec TargetSpec::heart(double shape_scale, Eigen::Vector2d center) {
  TargetSpec s;
  s.family = TargetFamily::heart;
  s.dim = 2;
  s.shape_scale = shape_scale;
  s.shape_center = center;
  s.validate();
  return s;
}

TargetSpec TargetSpec::uniform_box(Eigen::VectorXd lo, Eigen::VectorXd hi) {
  TargetSpec s;
  s.family = TargetFamily::uniform_box;
  s.dim = static_cast<int>(lo.size());
  s.box_lo = std::move(lo);
  s.box_hi = std::move(hi);
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

namespace {

Eigen::VectorXd draw_gaussian(const GaussianComponent& c, RngStream& rng) {
  Eigen::LLT<Eigen::MatrixXd> llt(c.cov);
  Eigen::VectorXd z(c.mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = rng.normal();
  return c.mean + llt.matrixL() * z;
}

// Arc length of r = a*theta from 0: s(theta) = (a/2)(theta sqrt(1+theta^2) + asinh theta).
double spiral_arc_length(double a, double theta) {
  return 0.5 * a * (theta * std::sqrt(1.0 + theta * theta) + std::asinh(theta));
}

double invert_spiral_arc(double a, double target, double theta_max) {
  double lo = 0.0, hi = theta_max;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    if (spiral_arc_length(a, mid) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

bool inside_heart(double x, double y) {
  double q = x * x + y * y - 1.0;
  return q * q * q - x * x * y * y * y <= 0.0;
}

}  // namespace

DiscreteMeasure sample(const TargetSpec& spec, int n, std::uint64_t seed) {
  spec.validate();
  if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
  RngStream rng(seed);
  Eigen::MatrixXd pts(n, spec.dim);

  switch (spec.family) {
    case TargetFamily::gaussian:
    case TargetFamily::gaussian_mixture: {
      Eigen::VectorXd cdf(spec.mixture_weights.size());
      double acc = 0.0;
      for (Eigen::Index i = 0; i < cdf.size(); ++i) {
        acc += spec.mixture_weights(i);
        cdf(i) = acc;
      }
      for (int i = 0; i < n; ++i) {
        double u = rng.uniform();
        int comp = 0;
        while (comp + 1 < cdf.size() && u > cdf(comp)) ++comp;
        pts.row(i) = draw_gaussian(spec.components[comp], rng).transpose();
      }
      break;
    }
    case TargetFamily::exponential: {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < spec.dim; ++j)
          pts(i, j) = -std::log1p(-rng.uniform()) / spec.rate;
      break;
    }
    case TargetFamily::rings: {
      // Ring choice proportional to circumference = uniform on the union by arc length.
      Eigen::VectorXd cdf(spec.ring_radii.size());
      double total = spec.ring_radii.sum();
      double acc = 0.0;
      for (Eigen::Index i = 0; i < cdf.size(); ++i) {
        acc += spec.ring_radii(i) / total;
        cdf(i) = acc;
      }
      for (int i = 0; i < n; ++i) {
        double u = rng.uniform();
        int ring = 0;
        while (ring + 1 < cdf.size() && u > cdf(ring)) ++ring;
        double theta = rng.uniform(0.0, 2.0 * M_PI);
        pts(i, 0) = spec.ring_centers(ring, 0) + spec.ring_radii(ring) * std::cos(theta);
        pts(i, 1) = spec.ring_centers(ring, 1) + spec.ring_radii(ring) * std::sin(theta);
      }
      break;
    }
    case TargetFamily::spiral: {
      double theta_max = 2.0 * M_PI * spec.spiral_turns;
      double total = spiral_arc_length(spec.spiral_scale, theta_max);
      for (int i = 0; i < n; ++i) {
        double theta = invert_spiral_arc(spec.spiral_scale, rng.uniform() * total, theta_max);
        double r = spec.spiral_scale * theta;
        pts(i, 0) = spec.shape_center(0) + spec.shape_scale * r * std::cos(theta);
        pts(i, 1) = spec.shape_center(1) + spec.shape_scale * r * std::sin(theta);
      }
      break;
    }
    case TargetFamily::heart: {
      for (int i = 0; i < n; ++i) {
        double x, y;
        do {
          x = rng.uniform(-1.5, 1.5);
          y = rng.uniform(-1.5, 1.5);
        } while (!inside_heart(x, y));
        pts(i, 0) = spec.shape_center(0) + spec.shape_scale * x;
        pts(i, 1) = spec.shape_center(1) + spec.shape_scale * y;
      }
      break;
    }
    case TargetFamily::uniform_box: {
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < spec.dim; ++j)
          pts(i, j) = rng.uniform(spec.box_lo(j), spec.box_hi(j));
      break;
    }
  }
  return DiscreteMeasure::uniform(std::move(pts));
}

}  // namespace kklflow
