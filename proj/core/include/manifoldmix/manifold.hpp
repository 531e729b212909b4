#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "manifoldmix/errors.hpp"

namespace manifoldmix {

enum class ManifoldKind { Sphere, Spd };

/// Identifies one of the supported Riemannian manifolds:
///  - sphere(d): the unit hypersphere S^d embedded in R^{d+1}
///  - spd(d):    d x d symmetric positive-definite matrices with the
///               affine-invariant metric <U,V>_P = trace(P^-1 U P^-1 V)
struct ManifoldId {
  ManifoldKind kind = ManifoldKind::Sphere;
  int size = 2;  // sphere: intrinsic dimension d; spd: matrix side length d

  int intrinsic_dim() const {
    return kind == ManifoldKind::Sphere ? size : size * (size + 1) / 2;
  }
  /// Length of the flat coordinate vector a Point/Tangent carries.
  int ambient_dim() const {
    return kind == ManifoldKind::Sphere ? size + 1 : size * size;
  }

  std::string str() const;
  /// Parses "sphere:d" / "spd:d"; throws UnsupportedError on anything else.
  static ManifoldId parse(const std::string& text);

  bool operator==(const ManifoldId&) const = default;
};

inline ManifoldId sphere(int d) { return {ManifoldKind::Sphere, d}; }
inline ManifoldId spd(int d) { return {ManifoldKind::Spd, d}; }

/// A point on a manifold.  Sphere points are unit vectors in R^{d+1}; SPD
/// points are row-major flattened symmetric positive-definite matrices.
struct Point {
  ManifoldId manifold;
  Eigen::VectorXd coords;

  /// SPD only: view of coords as a d x d matrix.
  Eigen::MatrixXd matrix() const;
};

/// A tangent vector, stored in the same flat layout as its basepoint.
/// Sphere tangents are orthogonal to the basepoint; SPD tangents are
/// symmetric matrices.
struct Tangent {
  Point base;
  Eigen::VectorXd coords;

  Eigen::MatrixXd matrix() const;
};

/// Metric-orthonormal tangent basis at a fixed basepoint, in a fixed,
/// deterministic order (see tangent_basis).
struct TangentBasis {
  Point base;
  std::vector<Eigen::VectorXd> vectors;  // ambient coordinates, intrinsic_dim of them
};

/// Validating constructors.  make_point checks the manifold invariants
/// (unit norm / symmetric positive definite) and throws std::invalid_argument
/// when they fail; make_tangent checks tangency/symmetry.
Point make_point(ManifoldId m, const Eigen::VectorXd& coords);
Point point_from_matrix(ManifoldId m, const Eigen::MatrixXd& mat);
Tangent make_tangent(const Point& base, const Eigen::VectorXd& coords);
Tangent tangent_from_matrix(const Point& base, const Eigen::MatrixXd& mat);
void validate_point(const Point& p);
void validate_tangent(const Tangent& u);

/// pi for spheres, +infinity for SPD (a Hadamard manifold).
double injectivity_radius(ManifoldId m);

/// Riemannian exponential.  Sphere: cos(|u|) x + sin(|u|) u/|u|.
/// SPD: P^{1/2} expm(P^{-1/2} U P^{-1/2}) P^{1/2}.
Point exp_map(const Point& base, const Tangent& u);

/// Riemannian logarithm; inverse of exp_map inside the injectivity ball.
/// Throws CutLocusError on the sphere when y is antipodal to base
/// (distance > pi - 1e-9).
Tangent log_map(const Point& base, const Point& y);

/// Geodesic distance.  Sphere: arccos(<x,y>) with the dot product clamped to
/// [-1,1].  SPD: Frobenius norm of logm(P^{-1/2} Q P^{-1/2}).
double distance(const Point& x, const Point& y);

/// Parallel transport of v along the geodesic from `from` to `to`.
/// Sphere: rotation in the plane spanned by the basepoint and the geodesic
/// direction.  SPD: V -> A V A^T with A = (Q P^-1)^{1/2}.
Tangent parallel_transport(const Point& from, const Point& to,
                           const Tangent& v);

/// Riemannian inner product of two tangents at `base`.  Throws
/// std::invalid_argument when either tangent is based elsewhere.
double inner(const Point& base, const Tangent& u, const Tangent& v);

/// Deterministic metric-orthonormal basis:
///  - sphere: the Householder reflection mapping e1 to base, applied to
///    e2..e_{d+1} (base == e1 degenerates to {e2, ..., e_{d+1}});
///  - spd: images of the standard orthonormal symmetric basis under
///    V -> P^{1/2} V P^{1/2}; diagonal units first, then row-major upper
///    off-diagonal pairs scaled by 1/sqrt(2).
TangentBasis tangent_basis(const Point& base);

/// Coordinates of u in the given basis (metric inner products) and back.
Eigen::VectorXd to_coords(const TangentBasis& basis, const Tangent& u);
Tangent from_coords(const TangentBasis& basis, const Eigen::VectorXd& c);

/// Nearest-point style projection used for data ingestion: sphere rescales to
/// unit norm (zero vector is an error); SPD symmetrizes and clamps
/// eigenvalues from below at 1e-8.
Point project_to_manifold(ManifoldId m, const Eigen::VectorXd& raw);

// --- small symmetric-matrix helpers shared across the library ---

/// Eigendecomposition of the symmetrized input; throws std::runtime_error if
/// the solver fails.
void sym_eig(const Eigen::MatrixXd& s, Eigen::MatrixXd& vectors,
             Eigen::VectorXd& values);
Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& s);
Eigen::MatrixXd sym_inv_sqrt(const Eigen::MatrixXd& s);
Eigen::MatrixXd sym_exp(const Eigen::MatrixXd& s);
Eigen::MatrixXd sym_log(const Eigen::MatrixXd& s);

}  // namespace manifoldmix
