#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "manifoldmix/manifold.hpp"
#include "manifoldmix/rng.hpp"

namespace manifoldmix {

/// Riemannian Gaussian: N(x; mu, Sigma) with the quadratic form taken on
/// tangent coordinates of log_mu(x) in the deterministic basis at mu.
/// Sigma is intrinsic_dim x intrinsic_dim.
struct RgdParams {
  Point mean;
  Eigen::MatrixXd cov;
};

/// log N(x) = -1/2 (D log(2pi) + log det Sigma + c^T Sigma^-1 c) with the
/// flat-space normalizer; accurate for low-variance data, approximate
/// otherwise.  Throws CutLocusError when x is outside the injectivity ball
/// of the mean (sphere antipode).
double rgd_logpdf(const RgdParams& params, const Point& x);

/// Exact draws on spheres via tangent rejection with acceptance
/// (sin r / r)^{d-1}, truncated at r < pi - 1e-6.  On SPD an independence
/// Metropolis chain with a wrapped-Gaussian proposal and the exp-map
/// Jacobian acceptance ratio (200 burn-in steps, thinning 5).
std::vector<Point> sample_rgd(const RgdParams& params, int n, Rng& rng);

/// Wrapped Gaussian: push-forward of N(0, Sigma) through exp at the mean
/// (sphere draws are re-sampled until |c| < pi - 1e-6).
std::vector<Point> sample_wgd(const RgdParams& params, int n, Rng& rng);

/// von Mises-Fisher on spheres, density proportional to
/// exp(kappa <mu, x>); kappa > 0.
struct VmfParams {
  Point mean_direction;
  double kappa = 1.0;
};

/// Wood-style rejection sampler for the cosine marginal plus a uniform
/// direction in the orthogonal complement.
std::vector<Point> sample_vmf(const VmfParams& params, int n, Rng& rng);

/// Inverse-Wishart on SPD(d): scale must be SPD, dof > d - 1.
struct InverseWishartParams {
  Eigen::MatrixXd scale;
  double dof = 1.0;
};

/// Bartlett draws of Wishart(scale^-1, dof), inverted.  Draws whose
/// condition number exceeds 1e12 are redrawn (up to 100 times, then
/// PathologicalCovarianceError).
std::vector<Point> sample_inverse_wishart(const InverseWishartParams& params,
                                          int n, Rng& rng);

/// Q diag(lambda) Q^T with Q the sign-fixed orthogonal factor of a Gaussian
/// matrix and lambda_i uniform in [eig_lo, eig_hi]; requires
/// 0 < eig_lo <= eig_hi.
Eigen::MatrixXd random_spd(int dim, double eig_lo, double eig_hi, Rng& rng);

enum class Family { Rgd, Wgd, Vmf, Iwd };

Family parse_family(const std::string& name);
std::string family_name(Family f);

/// A single-family mixture used as a sampling target.  Exactly one of the
/// parameter vectors is populated, matching `family`, with one entry per
/// component.
struct TargetSpec {
  ManifoldId manifold;
  Family family = Family::Rgd;
  std::vector<double> weights;
  std::vector<RgdParams> gauss;        // Rgd / Wgd
  std::vector<VmfParams> vmf;          // Vmf
  std::vector<InverseWishartParams> iwd;  // Iwd
};

/// Ancestral sampling: component index by weight, then one draw from that
/// component's family sampler; output order is draw order.  A
/// single-component spec short-circuits to the direct family sampler on the
/// same stream.
std::vector<Point> sample_target(const TargetSpec& spec, int n, Rng& rng);

}  // namespace manifoldmix
