#include "manifoldmix/manifold.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <string>

namespace manifoldmix {

namespace {

constexpr double kPi = 3.14159265358979323846;
// Tolerance for membership/tangency checks on constructed objects.
constexpr double kValidateTol = 1e-8;

Eigen::MatrixXd reshape(const Eigen::VectorXd& flat, int d) {
  // Row-major flattening; symmetric payloads make the distinction moot, but
  // keep one convention everywhere.
  Eigen::MatrixXd out(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out(i, j) = flat[i * d + j];
  return out;
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& mat) {
  const int d = static_cast<int>(mat.rows());
  Eigen::VectorXd out(d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) out[i * d + j] = mat(i, j);
  return out;
}

void check_dim(ManifoldId m, const Eigen::VectorXd& coords,
               const char* what) {
  if (coords.size() != m.ambient_dim())
    throw std::invalid_argument(std::string(what) + " has " +
                                std::to_string(coords.size()) +
                                " coordinates; " + m.str() + " needs " +
                                std::to_string(m.ambient_dim()));
}

// Applies f to the eigenvalues of the symmetrized input.
template <typename F>
Eigen::MatrixXd sym_apply(const Eigen::MatrixXd& s, F&& f) {
  Eigen::MatrixXd vectors;
  Eigen::VectorXd values;
  sym_eig(s, vectors, values);
  for (Eigen::Index i = 0; i < values.size(); ++i) values[i] = f(values[i]);
  Eigen::MatrixXd out =
      vectors * values.asDiagonal() * vectors.transpose();
  return 0.5 * (out + out.transpose());
}

}  // namespace

std::string ManifoldId::str() const {
  return (kind == ManifoldKind::Sphere ? "sphere:" : "spd:") +
         std::to_string(size);
}

ManifoldId ManifoldId::parse(const std::string& text) {
  auto colon = text.find(':');
  if (colon == std::string::npos)
    throw UnsupportedError("manifold id '" + text +
                           "' is not of the form sphere:<d> or spd:<d>");
  const std::string name = text.substr(0, colon);
  const std::string num = text.substr(colon + 1);
  if (num.empty() || num.find_first_not_of("0123456789") != std::string::npos)
    throw UnsupportedError("manifold id '" + text + "' has a malformed size");
  int size = 0;
  try {
    size = std::stoi(num);
  } catch (const std::exception&) {
    throw UnsupportedError("manifold id '" + text + "' has a malformed size");
  }
  if (size < 1)
    throw UnsupportedError("manifold size must be at least 1, got '" + text +
                           "'");
  if (name == "sphere") return sphere(size);
  if (name == "spd") return spd(size);
  throw UnsupportedError("unknown manifold '" + name +
                         "'; supported: sphere, spd");
}

Eigen::MatrixXd Point::matrix() const {
  if (manifold.kind != ManifoldKind::Spd)
    throw std::invalid_argument("matrix() is only defined for spd points");
  return reshape(coords, manifold.size);
}

Eigen::MatrixXd Tangent::matrix() const {
  if (base.manifold.kind != ManifoldKind::Spd)
    throw std::invalid_argument("matrix() is only defined for spd tangents");
  return reshape(coords, base.manifold.size);
}

void validate_point(const Point& p) {
  check_dim(p.manifold, p.coords, "point");
  if (!p.coords.allFinite())
    throw std::invalid_argument("point has non-finite coordinates");
  if (p.manifold.kind == ManifoldKind::Sphere) {
    if (std::abs(p.coords.norm() - 1.0) > kValidateTol)
      throw std::invalid_argument("sphere point is not unit norm (|x| = " +
                                  std::to_string(p.coords.norm()) + ")");
    return;
  }
  const Eigen::MatrixXd mat = p.matrix();
  const double scale = std::max(1.0, mat.cwiseAbs().maxCoeff());
  if ((mat - mat.transpose()).cwiseAbs().maxCoeff() > kValidateTol * scale)
    throw std::invalid_argument("spd point is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mat,
                                                    Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success)
    throw std::invalid_argument("spd point eigendecomposition failed");
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument(
        "spd point is not positive definite (min eigenvalue " +
        std::to_string(es.eigenvalues().minCoeff()) + ")");
}

void validate_tangent(const Tangent& u) {
  validate_point(u.base);
  check_dim(u.base.manifold, u.coords, "tangent");
  if (!u.coords.allFinite())
    throw std::invalid_argument("tangent has non-finite coordinates");
  if (u.base.manifold.kind == ManifoldKind::Sphere) {
    const double drift = std::abs(u.base.coords.dot(u.coords));
    if (drift > kValidateTol * std::max(1.0, u.coords.norm()))
      throw std::invalid_argument(
          "sphere tangent is not orthogonal to its basepoint (<x,u> = " +
          std::to_string(drift) + ")");
    return;
  }
  const Eigen::MatrixXd mat = u.matrix();
  const double scale = std::max(1.0, mat.cwiseAbs().maxCoeff());
  if ((mat - mat.transpose()).cwiseAbs().maxCoeff() > kValidateTol * scale)
    throw std::invalid_argument("spd tangent is not symmetric");
}

Point make_point(ManifoldId m, const Eigen::VectorXd& coords) {
  Point p{m, coords};
  validate_point(p);
  return p;
}

Point point_from_matrix(ManifoldId m, const Eigen::MatrixXd& mat) {
  if (m.kind != ManifoldKind::Spd)
    throw std::invalid_argument("point_from_matrix is only for spd manifolds");
  if (mat.rows() != m.size || mat.cols() != m.size)
    throw std::invalid_argument("matrix shape does not match " + m.str());
  return make_point(m, flatten(mat));
}

Tangent make_tangent(const Point& base, const Eigen::VectorXd& coords) {
  Tangent u{base, coords};
  validate_tangent(u);
  return u;
}

Tangent tangent_from_matrix(const Point& base, const Eigen::MatrixXd& mat) {
  if (base.manifold.kind != ManifoldKind::Spd)
    throw std::invalid_argument(
        "tangent_from_matrix is only for spd manifolds");
  return make_tangent(base, flatten(mat));
}

double injectivity_radius(ManifoldId m) {
  return m.kind == ManifoldKind::Sphere
             ? kPi
             : std::numeric_limits<double>::infinity();
}

Point exp_map(const Point& base, const Tangent& u) {
  check_dim(base.manifold, u.coords, "tangent");
  if (base.manifold.kind == ManifoldKind::Sphere) {
    const double drift = std::abs(base.coords.dot(u.coords));
    if (drift > kValidateTol * std::max(1.0, u.coords.norm()))
      throw std::invalid_argument(
          "exp_map: tangent is not orthogonal to the basepoint");
    const double n = u.coords.norm();
    if (n == 0.0) return base;
    Eigen::VectorXd y =
        std::cos(n) * base.coords + (std::sin(n) / n) * u.coords;
    y /= y.norm();  // pin the unit-norm invariant against rounding
    return Point{base.manifold, std::move(y)};
  }
  const Eigen::MatrixXd p = base.matrix();
  const Eigen::MatrixXd half = sym_sqrt(p);
  const Eigen::MatrixXd inv_half = sym_inv_sqrt(p);
  const Eigen::MatrixXd w = inv_half * u.matrix() * inv_half;
  Eigen::MatrixXd out = half * sym_exp(w) * half;
  out = 0.5 * (out + out.transpose());
  return Point{base.manifold, flatten(out)};
}

Tangent log_map(const Point& base, const Point& y) {
  if (base.manifold != y.manifold)
    throw std::invalid_argument("log_map: points live on different manifolds");
  if (base.manifold.kind == ManifoldKind::Sphere) {
    double dot = base.coords.dot(y.coords);
    dot = std::min(1.0, std::max(-1.0, dot));
    const double theta = std::acos(dot);
    Eigen::VectorXd w = y.coords - dot * base.coords;
    const double wn = w.norm();
    // Second clause: acos of a double dot product cannot resolve angles
    // closer to pi than ~2e-8, but the geodesic direction w (norm sin
    // theta) still exposes numerically antipodal inputs.
    if (theta > kPi - 1e-9 || (theta > 3.0 && wn < 1e-7))
      throw CutLocusError(
          "log_map: point is at the cut locus of the basepoint "
          "(geodesic distance " +
          std::to_string(theta) + ")");
    if (wn < 1e-300)
      return Tangent{base,
                     Eigen::VectorXd::Zero(base.manifold.ambient_dim())};
    Eigen::VectorXd u = (theta / wn) * w;
    u -= base.coords.dot(u) * base.coords;  // re-pin tangency
    return Tangent{base, std::move(u)};
  }
  const Eigen::MatrixXd p = base.matrix();
  const Eigen::MatrixXd half = sym_sqrt(p);
  const Eigen::MatrixXd inv_half = sym_inv_sqrt(p);
  const Eigen::MatrixXd w = inv_half * y.matrix() * inv_half;
  Eigen::MatrixXd out = half * sym_log(w) * half;
  out = 0.5 * (out + out.transpose());
  return Tangent{base, flatten(out)};
}

double distance(const Point& x, const Point& y) {
  if (x.manifold != y.manifold)
    throw std::invalid_argument("distance: points live on different manifolds");
  if (x.manifold.kind == ManifoldKind::Sphere) {
    double dot = x.coords.dot(y.coords);
    dot = std::min(1.0, std::max(-1.0, dot));
    return std::acos(dot);
  }
  const Eigen::MatrixXd inv_half = sym_inv_sqrt(x.matrix());
  const Eigen::MatrixXd w = inv_half * y.matrix() * inv_half;
  Eigen::MatrixXd vectors;
  Eigen::VectorXd values;
  sym_eig(w, vectors, values);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (values[i] <= 0.0)
      throw std::invalid_argument(
          "distance: whitened matrix is not positive definite");
    const double l = std::log(values[i]);
    sum += l * l;
  }
  return std::sqrt(sum);
}

Tangent parallel_transport(const Point& from, const Point& to,
                           const Tangent& v) {
  if (from.manifold != to.manifold)
    throw std::invalid_argument(
        "parallel_transport: endpoints live on different manifolds");
  check_dim(from.manifold, v.coords, "tangent");
  if (from.manifold.kind == ManifoldKind::Sphere) {
    const Tangent dir = log_map(from, to);
    const double theta = dir.coords.norm();
    Eigen::VectorXd out = v.coords;
    if (theta > 0.0) {
      const Eigen::VectorXd e = dir.coords / theta;
      const double along = e.dot(v.coords);
      out += along * ((std::cos(theta) - 1.0) * e -
                      std::sin(theta) * from.coords);
    }
    out -= to.coords.dot(out) * to.coords;  // re-pin tangency at the target
    return Tangent{to, std::move(out)};
  }
  const Eigen::MatrixXd p = from.matrix();
  const Eigen::MatrixXd half = sym_sqrt(p);
  const Eigen::MatrixXd inv_half = sym_inv_sqrt(p);
  const Eigen::MatrixXd w = inv_half * to.matrix() * inv_half;
  const Eigen::MatrixXd a = half * sym_apply(sym_log(w), [](double t) {
                              return std::exp(0.5 * t);
                            }) *
                            inv_half;
  Eigen::MatrixXd out = a * v.matrix() * a.transpose();
  out = 0.5 * (out + out.transpose());
  return Tangent{to, flatten(out)};
}

double inner(const Point& base, const Tangent& u, const Tangent& v) {
  const double scale = std::max(1.0, base.coords.norm());
  if (u.base.manifold != base.manifold || v.base.manifold != base.manifold ||
      (u.base.coords - base.coords).norm() > 1e-9 * scale ||
      (v.base.coords - base.coords).norm() > 1e-9 * scale)
    throw std::invalid_argument(
        "inner: tangents are not based at the given point");
  if (base.manifold.kind == ManifoldKind::Sphere)
    return u.coords.dot(v.coords);
  const Eigen::MatrixXd p = base.matrix();
  Eigen::LLT<Eigen::MatrixXd> llt(p);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument("inner: basepoint is not positive definite");
  const Eigen::MatrixXd pu = llt.solve(u.matrix());
  const Eigen::MatrixXd pv = llt.solve(v.matrix());
  return (pu * pv).trace();
}

TangentBasis tangent_basis(const Point& base) {
  TangentBasis out{base, {}};
  const ManifoldId m = base.manifold;
  out.vectors.reserve(m.intrinsic_dim());
  if (m.kind == ManifoldKind::Sphere) {
    const int n = m.ambient_dim();
    Eigen::VectorXd w = base.coords;
    w[0] -= 1.0;  // reflector taking e1 to the basepoint
    const double wsq = w.squaredNorm();
    for (int i = 1; i < n; ++i) {
      Eigen::VectorXd h = Eigen::VectorXd::Zero(n);
      h[i] = 1.0;
      if (wsq >= 1e-28) h -= (2.0 * w[i] / wsq) * w;
      out.vectors.push_back(std::move(h));
    }
    return out;
  }
  const int d = m.size;
  const Eigen::MatrixXd half = sym_sqrt(base.matrix());
  const double inv_rt2 = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < d; ++i) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(d, d);
    e(i, i) = 1.0;
    out.vectors.push_back(flatten(half * e * half));
  }
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      Eigen::MatrixXd e = Eigen::MatrixXd::Zero(d, d);
      e(i, j) = inv_rt2;
      e(j, i) = inv_rt2;
      out.vectors.push_back(flatten(half * e * half));
    }
  return out;
}

Eigen::VectorXd to_coords(const TangentBasis& basis, const Tangent& u) {
  const ManifoldId m = basis.base.manifold;
  Eigen::VectorXd c(m.intrinsic_dim());
  if (m.kind == ManifoldKind::Sphere) {
    for (size_t k = 0; k < basis.vectors.size(); ++k)
      c[static_cast<Eigen::Index>(k)] = basis.vectors[k].dot(u.coords);
    return c;
  }
  // Whitening shortcut: coordinates in the P^{1/2} E_k P^{1/2} basis are the
  // vech-with-sqrt2 entries of P^{-1/2} U P^{-1/2}.
  const int d = m.size;
  const Eigen::MatrixXd inv_half = sym_inv_sqrt(basis.base.matrix());
  const Eigen::MatrixXd s = inv_half * u.matrix() * inv_half;
  int k = 0;
  for (int i = 0; i < d; ++i) c[k++] = s(i, i);
  const double rt2 = std::sqrt(2.0);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) c[k++] = rt2 * 0.5 * (s(i, j) + s(j, i));
  return c;
}

Tangent from_coords(const TangentBasis& basis, const Eigen::VectorXd& c) {
  const ManifoldId m = basis.base.manifold;
  if (c.size() != m.intrinsic_dim())
    throw std::invalid_argument("from_coords: expected " +
                                std::to_string(m.intrinsic_dim()) +
                                " coordinates, got " +
                                std::to_string(c.size()));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(m.ambient_dim());
  for (size_t k = 0; k < basis.vectors.size(); ++k)
    out += c[static_cast<Eigen::Index>(k)] * basis.vectors[k];
  return Tangent{basis.base, std::move(out)};
}

Point project_to_manifold(ManifoldId m, const Eigen::VectorXd& raw) {
  check_dim(m, raw, "input");
  if (!raw.allFinite())
    throw std::invalid_argument("projection input has non-finite entries");
  if (m.kind == ManifoldKind::Sphere) {
    const double n = raw.norm();
    if (n < 1e-300)
      throw std::invalid_argument(
          "cannot project the zero vector onto a sphere");
    return Point{m, raw / n};
  }
  Eigen::MatrixXd s = reshape(raw, m.size);
  s = 0.5 * (s + s.transpose());
  Eigen::MatrixXd clamped =
      sym_apply(s, [](double t) { return std::max(t, 1e-8); });
  return Point{m, flatten(clamped)};
}

void sym_eig(const Eigen::MatrixXd& s, Eigen::MatrixXd& vectors,
             Eigen::VectorXd& values) {
  const Eigen::MatrixXd symm = 0.5 * (s + s.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(symm);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("symmetric eigendecomposition failed");
  vectors = es.eigenvectors();
  values = es.eigenvalues();
}

Eigen::MatrixXd sym_sqrt(const Eigen::MatrixXd& s) {
  return sym_apply(s, [](double t) { return std::sqrt(std::max(t, 0.0)); });
}

Eigen::MatrixXd sym_inv_sqrt(const Eigen::MatrixXd& s) {
  return sym_apply(s, [](double t) {
    if (t <= 0.0)
      throw std::runtime_error(
          "inverse square root of a non-positive-definite matrix");
    return 1.0 / std::sqrt(t);
  });
}

Eigen::MatrixXd sym_exp(const Eigen::MatrixXd& s) {
  return sym_apply(s, [](double t) { return std::exp(t); });
}

Eigen::MatrixXd sym_log(const Eigen::MatrixXd& s) {
  return sym_apply(s, [](double t) {
    if (t <= 0.0)
      throw std::runtime_error(
          "matrix logarithm of a non-positive-definite matrix");
    return std::log(t);
  });
}

}  // namespace manifoldmix
