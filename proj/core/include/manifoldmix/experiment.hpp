#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "manifoldmix/distributions.hpp"
#include "manifoldmix/gmm.hpp"

namespace manifoldmix {

/// One benchmark run: draw n_targets random mixture targets, sample
/// train/test sets from each, fit all three variants from a shared
/// initialization, evaluate held-out log-likelihood.
struct ExperimentSpec {
  ManifoldId manifold;
  Family family = Family::Rgd;
  int n_targets = 100;
  int n_train = 100;
  int n_test = 100;
  int k_target = 0;  // 0 = family default (3 on spheres, 5 on SPD)
  int k_model = 0;   // 0 = same as k_target
  std::uint64_t seed = 0;
};

struct MethodSummary {
  double mean_ll = 0.0;   // mean over completed targets of summed test LL
  double std_ll = 0.0;    // sample standard deviation across targets
  int failures = 0;       // targets this method failed on
  long incidents = 0;     // cut-locus incidents during evaluation
  double wall_seconds = 0.0;  // not part of any serialized output
};

struct TargetRow {
  int target_index = 0;
  Variant method = Variant::Euclidean;
  double train_ll = 0.0;
  double test_ll = 0.0;
  int em_iters = 0;
  long incidents = 0;
};

struct ExperimentResult {
  ExperimentSpec spec;
  std::vector<TargetRow> rows;  // completed targets only, target-index order
  std::array<MethodSummary, 3> summary;  // indexed by Variant
  int n_completed = 0;
};

/// Sphere target family (3 components): means are the normalized vectors
/// 1, (1,-1,...,-1) and its antipode; Rgd/Wgd covariances are random SPD
/// with eigenvalues in [0.01, 0.25]; vMF concentrations are uniform in
/// [20, 70].  Weights are uniform.
TargetSpec make_sphere_targets(int d, Family family, Rng& rng);

/// SPD target family (5 components): Rgd/Wgd means are random SPD with
/// eigenvalues in [0.1, 2] and covariances with eigenvalues in [0.1, 0.5];
/// inverse-Wishart targets reuse the same random SPD law for their scales
/// with dof uniform in [d+1, d+3].  Weights are uniform.
TargetSpec make_spd_targets(int d, Family family, Rng& rng);

/// Runs the experiment.  Targets are independent, each derives its own rng
/// stream via mix_seed(spec.seed, target_index), and may execute in
/// parallel (MANIFOLDMIX_THREADS caps the worker count); results are merged
/// in target-index order so output is scheduling-independent.  A target
/// where any fit fails is skipped from aggregation and counted against the
/// failing method; more than 20% skipped targets is an error.
ExperimentResult run_experiment(const ExperimentSpec& spec);

void write_summary_csv(const ExperimentResult& result,
                       const std::string& path);
void write_per_target_csv(const ExperimentResult& result,
                          const std::string& path);

/// How badly one shared tangent space distorts pairwise geometry: compares
/// geodesic distances d(x_i, x_j) with tangent-coordinate distances
/// |c_i - c_j| at `base` over all pairs (exact; N <= 2000).
struct DistortionReport {
  int n = 0;
  double mean_abs = 0.0;
  double max_abs = 0.0;
  double q50 = 0.0;
  double q90 = 0.0;
  double q99 = 0.0;
  /// mean of d(x_i,x_j) - |c_i - c_j|; <= 0 on spheres, whose log map
  /// never shortens chordal images inside a convex ball.
  double signed_mean = 0.0;
  double frac_beyond_half_pi = 0.0;  // sphere: points farther than pi/2
  double max_base_distance_error = 0.0;  // max | |c_i| - d(base, x_i) |
};

DistortionReport distortion_report(const std::vector<Point>& data,
                                   const Point& base);

std::string distortion_to_json(const DistortionReport& report);

/// Synthetic "C" on S^2: n points uniformly spaced along a 270-degree arc
/// of the circle at geodesic radius 0.6 around e1, perturbed by
/// tangent-space Gaussian noise of scale noise_sigma.  Deterministic given
/// the rng.
std::vector<Point> make_c_shape(int n, double noise_sigma, Rng& rng);

}  // namespace manifoldmix
