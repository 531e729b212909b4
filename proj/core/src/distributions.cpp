#include "manifoldmix/distributions.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <string>

namespace manifoldmix {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kSphereTrunc = kPi - 1e-6;

Eigen::LLT<Eigen::MatrixXd> checked_llt(const Eigen::MatrixXd& cov, int dim,
                                        const char* who) {
  if (cov.rows() != dim || cov.cols() != dim)
    throw std::invalid_argument(std::string(who) + ": covariance is " +
                                std::to_string(cov.rows()) + "x" +
                                std::to_string(cov.cols()) + ", expected " +
                                std::to_string(dim));
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() >
      1e-8 * std::max(1.0, cov.cwiseAbs().maxCoeff()))
    throw std::invalid_argument(std::string(who) +
                                ": covariance is not symmetric");
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success)
    throw std::invalid_argument(std::string(who) +
                                ": covariance is not positive definite");
  return llt;
}

Eigen::VectorXd gaussian_coords(const Eigen::MatrixXd& chol_l, Rng& rng) {
  Eigen::VectorXd z(chol_l.rows());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return chol_l * z;
}

/// Volume factor of the SPD exponential at mu for the tangent with basis
/// coordinates c: prod over eigenvalue pairs of sinh(g)/g with g half the
/// eigenvalue gap of mu^{-1/2} U mu^{-1/2}.
double spd_exp_volume(const TangentBasis& basis, const Eigen::VectorXd& c) {
  const int d = basis.base.manifold.size;
  Eigen::MatrixXd delta = Eigen::MatrixXd::Zero(d, d);
  int k = 0;
  for (int i = 0; i < d; ++i) delta(i, i) = c[k++];
  const double inv_rt2 = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      delta(i, j) = c[k] * inv_rt2;
      delta(j, i) = c[k] * inv_rt2;
      ++k;
    }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(delta,
                                                    Eigen::EigenvaluesOnly);
  const Eigen::VectorXd& vals = es.eigenvalues();
  double vol = 1.0;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      const double g = 0.5 * (vals[j] - vals[i]);
      vol *= std::abs(g) < 1e-4 ? 1.0 + g * g / 6.0 : std::sinh(g) / g;
    }
  return vol;
}

}  // namespace

double rgd_logpdf(const RgdParams& params, const Point& x) {
  const ManifoldId m = params.mean.manifold;
  if (x.manifold != m)
    throw std::invalid_argument("rgd_logpdf: point/mean manifold mismatch");
  const int dim = m.intrinsic_dim();
  Eigen::LLT<Eigen::MatrixXd> llt = checked_llt(params.cov, dim, "rgd_logpdf");
  const TangentBasis basis = tangent_basis(params.mean);
  const Eigen::VectorXd c = to_coords(basis, log_map(params.mean, x));
  double logdet = 0.0;
  const auto& l = llt.matrixLLT();
  for (int i = 0; i < dim; ++i) logdet += 2.0 * std::log(l(i, i));
  const double quad = c.dot(llt.solve(c));
  return -0.5 * (dim * std::log(2.0 * kPi) + logdet + quad);
}

std::vector<Point> sample_rgd(const RgdParams& params, int n, Rng& rng) {
  const ManifoldId m = params.mean.manifold;
  const int dim = m.intrinsic_dim();
  Eigen::LLT<Eigen::MatrixXd> llt = checked_llt(params.cov, dim, "sample_rgd");
  const Eigen::MatrixXd chol_l = llt.matrixL();
  const TangentBasis basis = tangent_basis(params.mean);
  std::vector<Point> out;
  out.reserve(n);

  if (m.kind == ManifoldKind::Sphere) {
    const int d = m.size;
    long attempts = 0;
    long accepted = 0;
    while (static_cast<int>(out.size()) < n) {
      ++attempts;
      if (attempts >= 10000 &&
          static_cast<double>(accepted) / static_cast<double>(attempts) < 1e-4)
        throw PathologicalCovarianceError(
            "sample_rgd: rejection acceptance rate collapsed (" +
            std::to_string(accepted) + "/" + std::to_string(attempts) +
            "); the covariance is too spread out for the sphere");
      const Eigen::VectorXd c = gaussian_coords(chol_l, rng);
      const double r = c.norm();
      if (r >= kSphereTrunc) continue;
      // exp-map volume factor (sin r / r)^(d-1)
      const double factor = r < 1e-12 ? 1.0 : std::sin(r) / r;
      if (rng.uniform() >= std::pow(factor, d - 1)) continue;
      ++accepted;
      out.push_back(exp_map(params.mean, from_coords(basis, c)));
    }
    return out;
  }

  // SPD: independence Metropolis with the push-forward Gaussian as proposal;
  // the Gaussian factors cancel, leaving the volume-factor ratio.
  Eigen::VectorXd state = Eigen::VectorXd::Zero(dim);
  double state_vol = 1.0;
  auto step = [&]() {
    const Eigen::VectorXd prop = gaussian_coords(chol_l, rng);
    const double prop_vol = spd_exp_volume(basis, prop);
    if (rng.uniform() < prop_vol / state_vol) {
      state = prop;
      state_vol = prop_vol;
    }
  };
  for (int i = 0; i < 200; ++i) step();
  for (int k = 0; k < n; ++k) {
    for (int j = 0; j < 5; ++j) step();
    out.push_back(exp_map(params.mean, from_coords(basis, state)));
  }
  return out;
}

std::vector<Point> sample_wgd(const RgdParams& params, int n, Rng& rng) {
  const ManifoldId m = params.mean.manifold;
  const int dim = m.intrinsic_dim();
  Eigen::LLT<Eigen::MatrixXd> llt = checked_llt(params.cov, dim, "sample_wgd");
  const Eigen::MatrixXd chol_l = llt.matrixL();
  const TangentBasis basis = tangent_basis(params.mean);
  std::vector<Point> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd c = gaussian_coords(chol_l, rng);
    if (m.kind == ManifoldKind::Sphere)
      while (c.norm() >= kSphereTrunc) c = gaussian_coords(chol_l, rng);
    out.push_back(exp_map(params.mean, from_coords(basis, c)));
  }
  return out;
}

std::vector<Point> sample_vmf(const VmfParams& params, int n, Rng& rng) {
  const Point& mu = params.mean_direction;
  if (mu.manifold.kind != ManifoldKind::Sphere)
    throw UnsupportedError("sample_vmf: von Mises-Fisher lives on spheres");
  if (!(params.kappa > 0.0))
    throw std::invalid_argument("sample_vmf: concentration must be positive");
  const int m = mu.manifold.ambient_dim();
  const double kappa = params.kappa;
  const double mm1 = static_cast<double>(m - 1);
  const double b =
      (-2.0 * kappa + std::sqrt(4.0 * kappa * kappa + mm1 * mm1)) / mm1;
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + mm1 * std::log(1.0 - x0 * x0);
  const TangentBasis basis = tangent_basis(mu);

  std::vector<Point> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    double w = 0.0;
    for (;;) {
      const double g1 = rng.gamma(0.5 * mm1);
      const double g2 = rng.gamma(0.5 * mm1);
      const double z = g1 / (g1 + g2);  // Beta((m-1)/2, (m-1)/2)
      w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
      const double u = 1.0 - rng.uniform();  // (0, 1]
      if (kappa * w + mm1 * std::log(1.0 - x0 * w) - c >= std::log(u)) break;
    }
    // uniform direction in the tangent complement
    Eigen::VectorXd v(m - 1);
    double vn = 0.0;
    do {
      for (int i = 0; i < m - 1; ++i) v[i] = rng.normal();
      vn = v.norm();
    } while (vn < 1e-12);
    v /= vn;
    Eigen::VectorXd x = w * mu.coords;
    const double tangential = std::sqrt(std::max(0.0, 1.0 - w * w));
    for (int i = 0; i < m - 1; ++i)
      x += tangential * v[i] * basis.vectors[i];
    x /= x.norm();
    out.push_back(Point{mu.manifold, std::move(x)});
  }
  return out;
}

std::vector<Point> sample_inverse_wishart(const InverseWishartParams& params,
                                          int n, Rng& rng) {
  const int d = static_cast<int>(params.scale.rows());
  if (params.scale.cols() != d)
    throw std::invalid_argument("sample_inverse_wishart: scale is not square");
  if (!(params.dof > d - 1))
    throw std::invalid_argument(
        "sample_inverse_wishart: dof must exceed d - 1 (got " +
        std::to_string(params.dof) + " for d = " + std::to_string(d) + ")");
  Eigen::LLT<Eigen::MatrixXd> scale_llt(params.scale);
  if (scale_llt.info() != Eigen::Success)
    throw std::invalid_argument("sample_inverse_wishart: scale is not SPD");
  // Bartlett factor of Wishart(scale^-1, dof)
  const Eigen::MatrixXd wishart_scale =
      scale_llt.solve(Eigen::MatrixXd::Identity(d, d));
  Eigen::LLT<Eigen::MatrixXd> wllt(0.5 *
                                   (wishart_scale + wishart_scale.transpose()));
  if (wllt.info() != Eigen::Success)
    throw std::invalid_argument(
        "sample_inverse_wishart: inverted scale is not SPD");
  const Eigen::MatrixXd l = wllt.matrixL();

  const ManifoldId manifold = spd(d);
  std::vector<Point> out;
  out.reserve(n);
  for (int k = 0; k < n; ++k) {
    Point drawn{manifold, Eigen::VectorXd()};
    bool ok = false;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
      Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
      for (int i = 0; i < d; ++i) {
        a(i, i) = std::sqrt(rng.chi_squared(params.dof - i));
        for (int j = 0; j < i; ++j) a(i, j) = rng.normal();
      }
      const Eigen::MatrixXd la = l * a;
      Eigen::MatrixXd w = la * la.transpose();
      Eigen::MatrixXd x = w.inverse();
      x = 0.5 * (x + x.transpose());
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
          x, Eigen::EigenvaluesOnly);
      const double lo = es.eigenvalues().minCoeff();
      const double hi = es.eigenvalues().maxCoeff();
      if (lo <= 0.0 || hi / lo > 1e12) continue;
      drawn = point_from_matrix(manifold, x);
      ok = true;
    }
    if (!ok)
      throw PathologicalCovarianceError(
          "sample_inverse_wishart: 100 consecutive draws were numerically "
          "singular");
    out.push_back(std::move(drawn));
  }
  return out;
}

Eigen::MatrixXd random_spd(int dim, double eig_lo, double eig_hi, Rng& rng) {
  if (!(eig_lo > 0.0) || !(eig_lo <= eig_hi))
    throw std::invalid_argument(
        "random_spd: eigenvalue bounds must satisfy 0 < lo <= hi");
  Eigen::MatrixXd g(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR();
  for (int i = 0; i < dim; ++i)
    if (r(i, i) < 0.0) q.col(i) *= -1.0;
  Eigen::VectorXd lambda(dim);
  for (int i = 0; i < dim; ++i) lambda[i] = rng.uniform(eig_lo, eig_hi);
  Eigen::MatrixXd out = q * lambda.asDiagonal() * q.transpose();
  return 0.5 * (out + out.transpose());
}

Family parse_family(const std::string& name) {
  if (name == "rgd") return Family::Rgd;
  if (name == "wgd") return Family::Wgd;
  if (name == "vmf") return Family::Vmf;
  if (name == "iwd") return Family::Iwd;
  throw std::invalid_argument("unknown family '" + name +
                              "'; expected rgd, wgd, vmf, or iwd");
}

std::string family_name(Family f) {
  switch (f) {
    case Family::Rgd: return "rgd";
    case Family::Wgd: return "wgd";
    case Family::Vmf: return "vmf";
    case Family::Iwd: return "iwd";
  }
  return "rgd";
}

namespace {

size_t target_components(const TargetSpec& spec) {
  switch (spec.family) {
    case Family::Rgd:
    case Family::Wgd: return spec.gauss.size();
    case Family::Vmf: return spec.vmf.size();
    case Family::Iwd: return spec.iwd.size();
  }
  return 0;
}

std::vector<Point> component_draw(const TargetSpec& spec, size_t k, int n,
                                  Rng& rng) {
  switch (spec.family) {
    case Family::Rgd: return sample_rgd(spec.gauss[k], n, rng);
    case Family::Wgd: return sample_wgd(spec.gauss[k], n, rng);
    case Family::Vmf: return sample_vmf(spec.vmf[k], n, rng);
    case Family::Iwd: return sample_inverse_wishart(spec.iwd[k], n, rng);
  }
  throw std::invalid_argument("sample_target: unknown family");
}

}  // namespace

std::vector<Point> sample_target(const TargetSpec& spec, int n, Rng& rng) {
  const size_t k = target_components(spec);
  if (k == 0)
    throw std::invalid_argument("sample_target: no components in spec");
  if (spec.weights.size() != k)
    throw std::invalid_argument("sample_target: " +
                                std::to_string(spec.weights.size()) +
                                " weights for " + std::to_string(k) +
                                " components");
  double total = 0.0;
  for (double w : spec.weights) {
    if (!(w >= 0.0))
      throw std::invalid_argument(
          "sample_target: weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12)
    throw std::invalid_argument("sample_target: weights sum to " +
                                std::to_string(total) + ", expected 1");

  if (k == 1) return component_draw(spec, 0, n, rng);

  std::vector<Point> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    double acc = 0.0;
    size_t pick = k - 1;
    for (size_t j = 0; j < k; ++j) {
      acc += spec.weights[j];
      if (u < acc) {
        pick = j;
        break;
      }
    }
    out.push_back(component_draw(spec, pick, 1, rng)[0]);
  }
  return out;
}

}  // namespace manifoldmix
