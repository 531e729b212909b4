#pragma once

// Shared fixtures and independent oracles for the test suites.  The oracles
// deliberately re-derive results through a different route than the library
// (grid search, ladder constructions, brute-force sums) so agreement means
// something.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "manifoldmix/frechet.hpp"
#include "manifoldmix/manifold.hpp"
#include "manifoldmix/rng.hpp"

namespace mmx = manifoldmix;

inline constexpr double kPi = 3.14159265358979323846;

// chi-square upper critical values, P(X > x) = 0.01
inline constexpr double kChi2Crit99Dof19 = 36.1909;

inline mmx::Point uniform_sphere_point(int d, mmx::Rng& rng) {
  Eigen::VectorXd v(d + 1);
  do {
    for (int i = 0; i <= d; ++i) v[i] = rng.normal();
  } while (v.norm() < 1e-6);
  v.normalize();
  return mmx::make_point(mmx::sphere(d), v);
}

inline mmx::Point random_spd_point(int d, mmx::Rng& rng, double lo = 0.2,
                                   double hi = 3.0) {
  // eigenvalue-controlled SPD draw, independent of the library's random_spd
  Eigen::MatrixXd g(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) g(i, j) = rng.normal();
  Eigen::MatrixXd s = g + g.transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(s);
  Eigen::VectorXd ev(d);
  for (int i = 0; i < d; ++i) ev[i] = rng.uniform(lo, hi);
  Eigen::MatrixXd m =
      es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return mmx::point_from_matrix(mmx::spd(d), 0.5 * (m + m.transpose()));
}

inline mmx::Point random_point(mmx::ManifoldId m, mmx::Rng& rng) {
  return m.kind == mmx::ManifoldKind::Sphere ? uniform_sphere_point(m.size, rng)
                                             : random_spd_point(m.size, rng);
}

/// Random tangent with metric norm <= max_norm, built through the
/// deterministic basis.
inline mmx::Tangent random_tangent(const mmx::Point& base, double max_norm,
                                   mmx::Rng& rng) {
  auto basis = mmx::tangent_basis(base);
  int dim = static_cast<int>(basis.vectors.size());
  Eigen::VectorXd c(dim);
  for (int i = 0; i < dim; ++i) c[i] = rng.normal();
  double n = c.norm();
  if (n > 1e-12) c *= rng.uniform(0.0, max_norm) / n;
  return mmx::from_coords(basis, c);
}

/// Weighted Karcher objective F(p) = 1/2 sum_i w_i d(p, x_i)^2.
inline double karcher_objective(const mmx::Point& p,
                                const std::vector<mmx::Point>& pts,
                                const std::vector<double>& w) {
  double f = 0.0;
  for (size_t i = 0; i < pts.size(); ++i) {
    double d = mmx::distance(p, pts[i]);
    f += 0.5 * w[i] * d * d;
  }
  return f;
}

/// Brute-force Fréchet mean on S^2: scans a full latitude-longitude grid at
/// the given angular resolution and returns the cell-center minimizer of the
/// Karcher objective.
inline mmx::Point grid_frechet_oracle_s2(const std::vector<mmx::Point>& pts,
                                         const std::vector<double>& w,
                                         double res_deg = 0.5) {
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_v(3);
  best_v << 1, 0, 0;
  const double res = res_deg * kPi / 180.0;
  const int n_lat = static_cast<int>(std::lround(kPi / res));
  const int n_lon = static_cast<int>(std::lround(2.0 * kPi / res));
  for (int i = 0; i < n_lat; ++i) {
    double lat = -kPi / 2 + (i + 0.5) * res;
    for (int j = 0; j < n_lon; ++j) {
      double lon = -kPi + (j + 0.5) * res;
      Eigen::VectorXd v(3);
      v << std::cos(lat) * std::cos(lon), std::cos(lat) * std::sin(lon),
          std::sin(lat);
      double f = 0.0;
      for (size_t k = 0; k < pts.size(); ++k) {
        double c = std::clamp(v.dot(pts[k].coords), -1.0, 1.0);
        double d = std::acos(c);
        f += 0.5 * w[k] * d * d;
      }
      if (f < best) {
        best = f;
        best_v = v;
      }
    }
  }
  return mmx::make_point(mmx::sphere(2), best_v);
}

/// Schild's ladder: numerical parallel transport using only exp and log.
/// Accuracy is limited by the finite parallelogram arm (quadratic bias), so
/// the arm is kept much shorter than the rung spacing.
inline mmx::Tangent schild_transport(const mmx::Point& from,
                                     const mmx::Point& to,
                                     const mmx::Tangent& v, int n_rungs = 50) {
  mmx::Tangent whole = mmx::log_map(from, to);
  double vnorm = std::sqrt(mmx::inner(from, v, v));
  double arm = 0.01 / std::max(1.0, vnorm);
  mmx::Point x = from;
  Eigen::VectorXd vc = v.coords * arm;
  for (int i = 1; i <= n_rungs; ++i) {
    double t = static_cast<double>(i) / n_rungs;
    mmx::Point x_next =
        mmx::exp_map(from, mmx::Tangent{from, whole.coords * t});
    mmx::Point p0 = mmx::exp_map(x, mmx::Tangent{x, vc});
    mmx::Tangent half = mmx::log_map(p0, x_next);
    half.coords *= 0.5;
    mmx::Point mid = mmx::exp_map(p0, half);
    mmx::Tangent diag = mmx::log_map(x, mid);
    diag.coords *= 2.0;
    mmx::Point p1 = mmx::exp_map(x, diag);
    vc = mmx::log_map(x_next, p1).coords;
    x = x_next;
  }
  return mmx::Tangent{to, vc / arm};
}

inline double max_abs_diff(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

/// log N(x; mu, Sigma) the pedestrian way (explicit inverse and
/// determinant), used to cross-check the library's solver-based path.
inline double naive_gauss_logpdf(const Eigen::VectorXd& x,
                                 const Eigen::VectorXd& mu,
                                 const Eigen::MatrixXd& sigma) {
  int d = static_cast<int>(x.size());
  Eigen::VectorXd r = x - mu;
  double quad = r.dot(sigma.inverse() * r);
  double logdet = std::log(sigma.determinant());
  return -0.5 * (d * std::log(2.0 * kPi) + logdet + quad);
}

inline double logsumexp(const std::vector<double>& v) {
  double m = *std::max_element(v.begin(), v.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}
