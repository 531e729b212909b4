#pragma once

#include <stdexcept>
#include <string>

namespace manifoldmix {

/// Thrown when a logarithm (or a density that needs one) is requested at or
/// beyond the cut locus of its basepoint, e.g. antipodal points on a sphere.
struct CutLocusError : std::runtime_error {
  explicit CutLocusError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown by samplers when the requested covariance makes the scheme
/// degenerate (rejection acceptance collapses, conditioning blows up).
struct PathologicalCovarianceError : std::runtime_error {
  explicit PathologicalCovarianceError(const std::string& what)
      : std::runtime_error(what) {}
};

/// Requested operation does not exist for the given manifold or family
/// (vMF on SPD matrices, density grids off S^2, ...).
struct UnsupportedError : std::invalid_argument {
  explicit UnsupportedError(const std::string& what)
      : std::invalid_argument(what) {}
};

}  // namespace manifoldmix
