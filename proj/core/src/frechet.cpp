#include "manifoldmix/frechet.hpp"

#include <cmath>
#include <cstdio>
#include <string>

namespace manifoldmix {

namespace {

constexpr double kHalfPi = 1.57079632679489661923;

std::vector<double> checked_weights(size_t n, const std::vector<double>& w) {
  if (w.empty()) return std::vector<double>(n, 1.0 / static_cast<double>(n));
  if (w.size() != n)
    throw std::invalid_argument("frechet_mean: " + std::to_string(w.size()) +
                                " weights for " + std::to_string(n) +
                                " points");
  double total = 0.0;
  for (double wi : w) {
    if (!(wi >= 0.0))
      throw std::invalid_argument("frechet_mean: weights must be nonnegative");
    total += wi;
  }
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument(
        "frechet_mean: weights must sum to 1 (got " + std::to_string(total) +
        ")");
  return w;
}

}  // namespace

Point frechet_mean(const std::vector<Point>& points,
                   const std::vector<double>& weights, const MeanConfig& cfg,
                   MeanStats* stats) {
  if (points.empty())
    throw std::invalid_argument("frechet_mean: empty point list");
  const ManifoldId m = points.front().manifold;
  for (const Point& p : points)
    if (p.manifold != m)
      throw std::invalid_argument(
          "frechet_mean: points live on different manifolds");
  const std::vector<double> w = checked_weights(points.size(), weights);

  Eigen::VectorXd avg = Eigen::VectorXd::Zero(m.ambient_dim());
  for (size_t n = 0; n < points.size(); ++n) avg += w[n] * points[n].coords;
  Point mu = project_to_manifold(m, avg);

  MeanStats local;
  MeanStats& st = stats ? *stats : local;
  st = MeanStats{};

  if (m.kind == ManifoldKind::Sphere) {
    for (const Point& p : points)
      if (distance(mu, p) >= kHalfPi) {
        st.ball_check_ok = false;
        break;
      }
    if (!st.ball_check_ok && cfg.warn_hemisphere)
      std::fprintf(stderr,
                   "frechet_mean: data is not contained in an open "
                   "half-sphere around the initial iterate; the Karcher "
                   "mean may not be unique\n");
  }

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    Eigen::VectorXd update = Eigen::VectorXd::Zero(m.ambient_dim());
    for (size_t n = 0; n < points.size(); ++n) {
      if (w[n] == 0.0) continue;
      update += w[n] * log_map(mu, points[n]).coords;
    }
    update *= cfg.step;
    Tangent u{mu, update};
    const double norm = std::sqrt(inner(mu, u, u));
    st.iters = iter;
    st.last_update_norm = norm;
    if (norm <= cfg.tol) return mu;
    mu = exp_map(mu, u);
  }
  throw ConvergenceError(
      "frechet_mean: no convergence after " + std::to_string(cfg.max_iters) +
          " iterations (last update norm " +
          std::to_string(st.last_update_norm) + ")",
      mu);
}

namespace {

Eigen::MatrixXd covariance_impl(const std::vector<Point>& points,
                                const Point& mean,
                                const std::vector<double>* weights,
                                bool unbiased) {
  if (points.empty())
    throw std::invalid_argument("tangent_covariance: empty point list");
  for (const Point& p : points)
    if (p.manifold != mean.manifold)
      throw std::invalid_argument(
          "tangent_covariance: point/mean manifold mismatch");
  const int dim = mean.manifold.intrinsic_dim();
  const TangentBasis basis = tangent_basis(mean);

  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(dim, dim);
  double total_weight = 0.0;
  for (size_t n = 0; n < points.size(); ++n) {
    const double wn = weights ? (*weights)[n] : 1.0;
    if (weights && !(wn >= 0.0))
      throw std::invalid_argument(
          "tangent_covariance: weights must be nonnegative");
    if (wn == 0.0) continue;
    const Eigen::VectorXd c = to_coords(basis, log_map(mean, points[n]));
    acc += wn * (c * c.transpose());
    total_weight += wn;
  }

  double denom;
  if (weights) {
    if (total_weight <= 0.0)
      throw std::invalid_argument("tangent_covariance: zero total weight");
    denom = total_weight;
  } else if (unbiased) {
    if (points.size() < 2)
      throw std::invalid_argument(
          "tangent_covariance: the unbiased estimator needs at least two "
          "points");
    denom = static_cast<double>(points.size() - 1);
  } else {
    denom = static_cast<double>(points.size());
  }
  acc /= denom;
  return 0.5 * (acc + acc.transpose());
}

}  // namespace

Eigen::MatrixXd tangent_covariance(const std::vector<Point>& points,
                                   const Point& mean, bool unbiased) {
  return covariance_impl(points, mean, nullptr, unbiased);
}

Eigen::MatrixXd tangent_covariance(const std::vector<Point>& points,
                                   const Point& mean,
                                   const std::vector<double>& weights) {
  if (weights.size() != points.size())
    throw std::invalid_argument("tangent_covariance: " +
                                std::to_string(weights.size()) +
                                " weights for " +
                                std::to_string(points.size()) + " points");
  return covariance_impl(points, mean, &weights, false);
}

}  // namespace manifoldmix
