#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "manifoldmix/manifold.hpp"
#include "manifoldmix/rng.hpp"

namespace manifoldmix {

/// The three density models under comparison:
///  - Euclidean:  GMM on embedding coordinates, geometry ignored.
///  - Tangent:    GMM on log-map coordinates at one shared basepoint, no
///                volume correction (the single-tangent-space shortcut this
///                library exists to measure).
///  - Riemannian: mixture of Riemannian Gaussians, one basepoint per
///                component.
enum class Variant { Euclidean, Tangent, Riemannian };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& name);

struct Component {
  double prior = 0.0;
  /// Euclidean: embedding coordinates.  Tangent: tangent coordinates at the
  /// mixture basepoint.  Riemannian: manifold point coordinates.
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

struct Mixture {
  Variant variant = Variant::Euclidean;
  ManifoldId manifold;
  std::vector<Component> components;
  std::optional<Point> tangent_base;  // Tangent variant only
  std::vector<double> train_log;      // per-iteration train log-likelihood
};

struct EmConfig {
  int max_iters = 100;
  double ll_tol = 1e-6;    // absolute change of summed train LL
  double cov_reg = 1e-8;   // ridge added to every M-step covariance
  /// Minimum responsibility mass per component, as a fraction of N;
  /// starved components are reseeded at the lowest-density datum.
  double reseed_frac = 1e-3;
};

/// Embedding used by the Euclidean variant: sphere points keep their raw
/// coordinates (dimension d+1); SPD points use orthonormal symmetric-basis
/// coordinates (diagonal, then upper off-diagonal * sqrt(2); dimension
/// d(d+1)/2) so the Frobenius inner product is preserved.
Eigen::VectorXd embed(const Point& p);
int embed_dim(ManifoldId m);

/// Shared initialization: geodesic k-means++ seeding followed by k-means
/// with Fréchet-mean centroid updates until assignments stabilize (at most
/// 50 rounds).  Returns a hard assignment per datum.  Throws
/// std::invalid_argument when fewer than k distinct points exist.
std::vector<int> init_shared(const std::vector<Point>& data, int k, Rng& rng);

/// Standard EM in the embedding space, initialized from per-cluster sample
/// statistics.  Means are not constrained to the manifold.
Mixture fit_euclidean(const std::vector<Point>& data,
                      const std::vector<int>& assignments,
                      const EmConfig& cfg = {});

/// EM on log-map coordinates at one fixed basepoint.  Every sphere datum
/// must lie strictly inside the injectivity ball of `base`; a datum at or
/// beyond the cut locus raises CutLocusError (the single-tangent-space
/// fallacy made into a hard error rather than silent distortion).
Mixture fit_tangent(const std::vector<Point>& data, const Point& base,
                    const std::vector<int>& assignments,
                    const EmConfig& cfg = {});

/// EM over Riemannian Gaussians: E-step with rgd_logpdf, M-step with
/// responsibility-weighted Fréchet means and tangent covariances.  An
/// M-step candidate that would lower the train log-likelihood is rejected
/// and EM stops (ascent safeguard; the weighted Fréchet mean only
/// approximates the exact M-step under anisotropic covariances).
Mixture fit_riemannian(const std::vector<Point>& data,
                       const std::vector<int>& assignments,
                       const EmConfig& cfg = {});

struct LoglikStats {
  long cut_locus_incidents = 0;
};

/// Summed log-likelihood of `data` under the mixture.  For the Tangent
/// variant a sphere datum at or beyond the cut locus of the basepoint
/// contributes the floor value -745 and is counted in `stats`.
double loglik(const Mixture& m, const std::vector<Point>& data,
              LoglikStats* stats = nullptr);

/// E-step responsibilities (N x K, rows sum to 1).
Eigen::MatrixXd responsibilities(const Mixture& m,
                                 const std::vector<Point>& data);

struct GridCell {
  double lat_deg = 0.0;
  double lon_deg = 0.0;
  double density = 0.0;
  double solid_angle = 0.0;
  Point point;
};

/// Density evaluated on a latitude-longitude grid of the given angular
/// resolution (degrees).  S^2 only; throws UnsupportedError elsewhere.
/// sum(density * solid_angle) approximates the surface integral.
std::vector<GridCell> density_grid(const Mixture& m, double resolution_deg);

}  // namespace manifoldmix
