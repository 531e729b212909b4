#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "manifoldmix/manifold.hpp"

namespace manifoldmix {

struct MeanConfig {
  int max_iters = 200;
  double tol = 1e-9;   // metric norm of the tangent update
  double step = 1.0;
  /// Emit a stderr warning when sphere data is not contained in an open
  /// geodesic ball of radius pi/2 around the initial iterate.  EM callers
  /// silence this: responsibilities routinely put tiny weight on far points.
  bool warn_hemisphere = true;
};

struct MeanStats {
  int iters = 0;
  double last_update_norm = 0.0;
  bool ball_check_ok = true;
};

/// Karcher fixed-point iteration failed to reach tol; carries the final
/// iterate so callers (k-means, EM) can keep going with the best estimate.
struct ConvergenceError : std::runtime_error {
  Point last_iterate;
  ConvergenceError(const std::string& what, Point last)
      : std::runtime_error(what), last_iterate(std::move(last)) {}
};

/// Weighted Fréchet (Karcher) mean: the fixed point of
///   mu <- exp(mu, step * sum_n w_n log(mu, x_n)),
/// initialized at the projection of the weighted embedding average.
/// Weights must be nonnegative and sum to 1 within 1e-9; an empty weight
/// list means uniform.  Throws ConvergenceError after max_iters, carrying
/// the last iterate.
Point frechet_mean(const std::vector<Point>& points,
                   const std::vector<double>& weights = {},
                   const MeanConfig& cfg = {}, MeanStats* stats = nullptr);

/// Covariance of tangent coordinates c_n = to_coords(log(mean, x_n)) in the
/// deterministic basis at `mean`.  Unweighted form; `unbiased` selects
/// 1/(N-1) (default) versus 1/N normalization.
Eigen::MatrixXd tangent_covariance(const std::vector<Point>& points,
                                   const Point& mean, bool unbiased = true);

/// Weighted covariance sum_n w_n c_n c_n^T / sum_n w_n (the EM convention).
Eigen::MatrixXd tangent_covariance(const std::vector<Point>& points,
                                   const Point& mean,
                                   const std::vector<double>& weights);

}  // namespace manifoldmix
