#include "doctest.h"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "manifoldmix/distributions.hpp"
#include "manifoldmix/frechet.hpp"
#include "manifoldmix/gmm.hpp"
#include "manifoldmix/manifold.hpp"
#include "manifoldmix/rng.hpp"
#include "test_helpers.hpp"

using namespace manifoldmix;

namespace {

Point pole() {
  Eigen::VectorXd v(3);
  v << 1, 0, 0;
  return make_point(sphere(2), v);
}

// Two well-separated wrapped-Gaussian clusters on S^2.
std::vector<Point> two_clusters(int n_each, double sigma2, Rng& rng) {
  Eigen::VectorXd a(3), b(3);
  a << 1, 0, 0;
  b << -0.2, 0.9, 0.3;
  Eigen::MatrixXd cov = sigma2 * Eigen::MatrixXd::Identity(2, 2);
  auto first =
      sample_wgd({make_point(sphere(2), a), cov}, n_each, rng);
  auto second = sample_wgd(
      {make_point(sphere(2), b.normalized()), cov}, n_each, rng);
  first.insert(first.end(), second.begin(), second.end());
  return first;
}

double flat_mixture_loglik(const Mixture& m, const std::vector<Point>& data) {
  // straightforward re-evaluation: ln sum_k pi_k N(c; mu_k, Sigma_k)
  double total = 0.0;
  for (const Point& p : data) {
    Eigen::VectorXd c;
    if (m.variant == Variant::Euclidean) {
      c = embed(p);
    } else {
      auto basis = tangent_basis(*m.tangent_base);
      c = to_coords(basis, log_map(*m.tangent_base, p));
    }
    std::vector<double> terms;
    for (const Component& comp : m.components)
      terms.push_back(std::log(comp.prior) +
                      naive_gauss_logpdf(c, comp.mean, comp.cov));
    total += logsumexp(terms);
  }
  return total;
}

}  // namespace

TEST_CASE("variant names round-trip") {
  for (Variant v : {Variant::Euclidean, Variant::Tangent, Variant::Riemannian})
    CHECK(parse_variant(variant_name(v)) == v);
  CHECK_THROWS_AS(parse_variant("projective"), std::invalid_argument);
}

TEST_CASE("embedding preserves the Frobenius inner product on spd") {
  Rng rng(301);
  CHECK(embed_dim(sphere(2)) == 3);
  CHECK(embed_dim(spd(3)) == 6);
  for (int i = 0; i < 50; ++i) {
    Point p = random_spd_point(3, rng);
    Point q = random_spd_point(3, rng);
    double frob = (p.matrix() - q.matrix()).norm();
    CHECK((embed(p) - embed(q)).norm() == doctest::Approx(frob).epsilon(1e-12));
  }
  Point s = uniform_sphere_point(2, rng);
  CHECK(max_abs_diff(embed(s), s.coords) == 0.0);
}

TEST_CASE("init_shared: trivial cases and determinism") {
  Rng data_rng(302);
  auto data = two_clusters(20, 0.01, data_rng);

  Rng a(303);
  auto one = init_shared(data, 1, a);
  CHECK(std::all_of(one.begin(), one.end(), [](int v) { return v == 0; }));

  Rng b(304), c(304);
  auto first = init_shared(data, 3, b);
  auto second = init_shared(data, 3, c);
  CHECK(first == second);

  // K = N distinct points: every point its own cluster
  std::vector<Point> tiny(data.begin(), data.begin() + 5);
  Rng d(305);
  auto perm = init_shared(tiny, 5, d);
  std::vector<int> sorted = perm;
  std::sort(sorted.begin(), sorted.end());
  CHECK(sorted == std::vector<int>({0, 1, 2, 3, 4}));

  // fewer than K distinct points
  std::vector<Point> dup = {data[0], data[0], data[1], data[1]};
  Rng e(306);
  CHECK_THROWS_AS(init_shared(dup, 3, e), std::invalid_argument);
}

TEST_CASE("init_shared recovers well-separated clusters") {
  Rng data_rng(307);
  auto data = two_clusters(30, 0.005, data_rng);
  Rng rng(308);
  auto labels = init_shared(data, 2, rng);
  // within each true cluster all labels agree; across clusters they differ
  for (int i = 1; i < 30; ++i) CHECK(labels[i] == labels[0]);
  for (int i = 31; i < 60; ++i) CHECK(labels[i] == labels[30]);
  CHECK(labels[0] != labels[30]);
}

TEST_CASE("fit_euclidean: repeated-point clusters hit the EM fixed point") {
  Rng rng(309);
  Point a = uniform_sphere_point(2, rng);
  Point b = uniform_sphere_point(2, rng);
  std::vector<Point> data;
  for (int i = 0; i < 10; ++i) data.push_back(a);
  for (int i = 0; i < 15; ++i) data.push_back(b);
  std::vector<int> labels(25, 0);
  std::fill(labels.begin() + 10, labels.end(), 1);
  EmConfig cfg;
  Mixture m = fit_euclidean(data, labels, cfg);
  REQUIRE(m.components.size() == 2);
  // order matches the label ids
  CHECK(max_abs_diff(m.components[0].mean, embed(a)) < 1e-12);
  CHECK(max_abs_diff(m.components[1].mean, embed(b)) < 1e-12);
  CHECK(m.components[0].prior == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(m.components[1].prior == doctest::Approx(0.6).epsilon(1e-12));
  for (const Component& comp : m.components)
    CHECK((comp.cov - cfg.cov_reg * Eigen::MatrixXd::Identity(3, 3))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
}

TEST_CASE("fit_euclidean: K=1 equals closed-form sample statistics") {
  Rng rng(310);
  auto data = two_clusters(40, 0.02, rng);
  std::vector<int> labels(data.size(), 0);
  EmConfig cfg;
  Mixture m = fit_euclidean(data, labels, cfg);
  REQUIRE(m.components.size() == 1);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
  for (const Point& p : data) mean += embed(p);
  mean /= static_cast<double>(data.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(3, 3);
  for (const Point& p : data) {
    Eigen::VectorXd r = embed(p) - mean;
    cov += r * r.transpose();
  }
  cov /= static_cast<double>(data.size());
  cov += cfg.cov_reg * Eigen::MatrixXd::Identity(3, 3);
  CHECK(max_abs_diff(m.components[0].mean, mean) < 1e-9);
  CHECK((m.components[0].cov - cov).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(m.components[0].prior == doctest::Approx(1.0));
}

TEST_CASE("fit_euclidean recovers a separated two-component mixture") {
  Rng rng(311);
  auto data = two_clusters(250, 0.01, rng);
  Rng init_rng(312);
  auto labels = init_shared(data, 2, init_rng);
  Mixture m = fit_euclidean(data, labels);
  REQUIRE(m.components.size() == 2);
  for (const Component& comp : m.components)
    CHECK(comp.prior == doctest::Approx(0.5).epsilon(0.10));
  // each true center is close to some component mean
  Eigen::VectorXd a(3), b(3);
  a << 1, 0, 0;
  b << -0.2, 0.9, 0.3;
  b.normalize();
  for (const Eigen::VectorXd& truth : {a, b}) {
    double best = 1e9;
    for (const Component& comp : m.components)
      best = std::min(best, (comp.mean - truth).norm());
    CHECK(best < 0.1);
  }
}

TEST_CASE("fit_tangent at the Karcher mean centers the single component") {
  Rng rng(313);
  Point center = uniform_sphere_point(2, rng);
  Eigen::MatrixXd cov = Eigen::Vector2d(0.05, 0.02).asDiagonal();
  auto data = sample_wgd({center, cov}, 300, rng);
  Point base = frechet_mean(data);
  std::vector<int> labels(data.size(), 0);
  Mixture m = fit_tangent(data, base, labels);
  REQUIRE(m.components.size() == 1);
  REQUIRE(m.tangent_base.has_value());
  CHECK(max_abs_diff(m.tangent_base->coords, base.coords) == 0.0);
  CHECK(m.components[0].mean.norm() < 1e-7);
  Eigen::MatrixXd expect = tangent_covariance(data, base, false);
  CHECK((m.components[0].cov - expect).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("fit_tangent: the basepoint choice changes the fit") {
  Rng rng(314);
  // an off-center crescent: data nowhere near the north pole
  Eigen::VectorXd c(3);
  c << 0, 1, 0;
  Eigen::MatrixXd cov = Eigen::Vector2d(0.3, 0.02).asDiagonal();
  auto data = sample_wgd({make_point(sphere(2), c), cov}, 200, rng);
  auto test = sample_wgd({make_point(sphere(2), c), cov}, 200, rng);
  Rng init_rng(315);
  auto labels = init_shared(data, 2, init_rng);
  Mixture at_pole = fit_tangent(data, pole(), labels);
  Mixture at_mean = fit_tangent(data, frechet_mean(data), labels);
  double ll_pole = loglik(at_pole, test);
  double ll_mean = loglik(at_mean, test);
  CHECK(std::abs(ll_pole - ll_mean) > 1e-3);
}

TEST_CASE("fit_tangent refuses data at the basepoint's cut locus") {
  Point base = pole();
  std::vector<Point> data = {base, make_point(sphere(2), -base.coords)};
  std::vector<int> labels = {0, 0};
  CHECK_THROWS_AS(fit_tangent(data, base, labels), CutLocusError);
}

TEST_CASE("fit_riemannian: K=1 reduces to Frechet-mean MLE") {
  Rng rng(316);
  for (ManifoldId m : {sphere(2), spd(2)}) {
    Point center = random_point(m, rng);
    int dim = m.intrinsic_dim();
    Eigen::MatrixXd cov = 0.03 * Eigen::MatrixXd::Identity(dim, dim);
    auto data = sample_wgd({center, cov}, 150, rng);
    std::vector<int> labels(data.size(), 0);
    EmConfig cfg;
    Mixture fit = fit_riemannian(data, labels, cfg);
    REQUIRE(fit.components.size() == 1);
    CHECK(fit.components[0].prior == doctest::Approx(1.0));
    Point mu = make_point(m, fit.components[0].mean);
    Point oracle = frechet_mean(data);
    CHECK(distance(mu, oracle) < 1e-6);
    Eigen::MatrixXd expect = tangent_covariance(data, mu, false) +
                             cfg.cov_reg * Eigen::MatrixXd::Identity(dim, dim);
    CHECK((fit.components[0].cov - expect).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("fit_riemannian is equivariant under rotations") {
  Rng rng(317);
  auto data = two_clusters(40, 0.01, rng);
  auto test = two_clusters(10, 0.01, rng);

  Eigen::MatrixXd g(3, 3);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) g(r, c) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ();
  auto rotate = [&](const std::vector<Point>& ps) {
    std::vector<Point> out;
    for (const Point& p : ps)
      out.push_back(make_point(p.manifold, (q * p.coords).normalized()));
    return out;
  };
  auto data_r = rotate(data);
  auto test_r = rotate(test);

  Rng ia(318), ib(318);
  auto labels = init_shared(data, 2, ia);
  auto labels_r = init_shared(data_r, 2, ib);
  REQUIRE(labels == labels_r);  // geodesic distances are rotation-invariant

  Mixture fit = fit_riemannian(data, labels);
  Mixture fit_r = fit_riemannian(data_r, labels_r);
  CHECK(loglik(fit, test) ==
        doctest::Approx(loglik(fit_r, test_r)).epsilon(1e-6));

  // hard assignments are isometry-invariant
  Eigen::MatrixXd resp = responsibilities(fit, data);
  Eigen::MatrixXd resp_r = responsibilities(fit_r, data_r);
  for (int n = 0; n < resp.rows(); ++n) {
    int arg = 0, arg_r = 0;
    resp.row(n).maxCoeff(&arg);
    resp_r.row(n).maxCoeff(&arg_r);
    CHECK(arg == arg_r);
  }
}

TEST_CASE("EM traces are monotone and covariances stay positive definite") {
  int checked = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Rng rng(400 + trial);
    ManifoldId m = trial % 3 == 2 ? spd(2) : sphere(2);
    int k = 2 + trial % 2;
    // random mixture target
    TargetSpec spec;
    spec.manifold = m;
    spec.family = trial % 2 == 0 ? Family::Wgd : Family::Rgd;
    spec.weights.assign(k, 1.0 / k);
    for (int j = 0; j < k; ++j) {
      Point mu = random_point(m, rng);
      spec.gauss.push_back(
          {mu, random_spd(m.intrinsic_dim(), 0.01, 0.08, rng)});
    }
    auto data = sample_target(spec, 60, rng);
    Rng init_rng(500 + trial);
    auto labels = init_shared(data, k, init_rng);
    EmConfig cfg;
    cfg.max_iters = 40;
    std::vector<Mixture> fits;
    fits.push_back(fit_euclidean(data, labels, cfg));
    fits.push_back(fit_tangent(data, frechet_mean(data), labels, cfg));
    fits.push_back(fit_riemannian(data, labels, cfg));
    for (const Mixture& fit : fits) {
      REQUIRE(!fit.train_log.empty());
      for (size_t i = 1; i < fit.train_log.size(); ++i)
        CHECK(fit.train_log[i] >= fit.train_log[i - 1] - 1e-8);
      // the recorded trace ends at the returned model's likelihood
      CHECK(fit.train_log.back() ==
            doctest::Approx(loglik(fit, data)).epsilon(1e-9));
      double prior_sum = 0.0;
      for (const Component& comp : fit.components) {
        prior_sum += comp.prior;
        CHECK(comp.prior >= 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(comp.cov);
        CHECK(es.eigenvalues().minCoeff() >= cfg.cov_reg / 2);
      }
      CHECK(prior_sum == doctest::Approx(1.0).epsilon(1e-9));
      ++checked;
    }
  }
  CHECK(checked == 150);
}

TEST_CASE("responsibilities rows sum to one") {
  Rng rng(319);
  auto data = two_clusters(30, 0.02, rng);
  Rng init_rng(320);
  auto labels = init_shared(data, 2, init_rng);
  for (const Mixture& fit :
       {fit_euclidean(data, labels),
        fit_tangent(data, frechet_mean(data), labels),
        fit_riemannian(data, labels)}) {
    Eigen::MatrixXd resp = responsibilities(fit, data);
    REQUIRE(resp.rows() == 60);
    REQUIRE(resp.cols() == 2);
    for (int n = 0; n < resp.rows(); ++n) {
      CHECK(std::abs(resp.row(n).sum() - 1.0) <= 1e-12);
      CHECK(resp.row(n).minCoeff() >= 0.0);
    }
  }
}

TEST_CASE("variants agree in the flat limit") {
  Rng rng(321);
  Point center = uniform_sphere_point(2, rng);
  Eigen::MatrixXd cov = 2.5e-4 * Eigen::MatrixXd::Identity(2, 2);
  auto train = sample_wgd({center, cov}, 200, rng);
  auto held = sample_wgd({center, cov}, 100, rng);
  Rng init_rng(322);
  auto labels = init_shared(train, 2, init_rng);
  Mixture riem = fit_riemannian(train, labels);
  Mixture tang = fit_tangent(train, frechet_mean(train), labels);
  double lr = loglik(riem, held);
  double lt = loglik(tang, held);
  CHECK(std::abs(lr - lt) / std::abs(lr) < 0.02);
}

TEST_CASE("loglik: closed forms, additivity, and the brute-force oracle") {
  Rng rng(323);
  auto data = two_clusters(25, 0.02, rng);
  Rng init_rng(324);
  auto labels = init_shared(data, 2, init_rng);

  Mixture riem = fit_riemannian(data, labels);
  auto sample = std::vector<Point>(data.begin(), data.begin() + 20);
  // independent straightforward re-evaluation
  double oracle = 0.0;
  for (const Point& p : sample) {
    std::vector<double> terms;
    for (const Component& comp : riem.components) {
      RgdParams params{make_point(riem.manifold, comp.mean), comp.cov};
      terms.push_back(std::log(comp.prior) + rgd_logpdf(params, p));
    }
    oracle += logsumexp(terms);
  }
  CHECK(loglik(riem, sample) == doctest::Approx(oracle).epsilon(1e-9));

  // duplicating every point doubles the sum
  auto doubled = sample;
  doubled.insert(doubled.end(), sample.begin(), sample.end());
  CHECK(loglik(riem, doubled) ==
        doctest::Approx(2.0 * loglik(riem, sample)).epsilon(1e-12));

  // K=1 mixture evaluated at its mean equals the component logpdf
  std::vector<int> ones(data.size(), 0);
  Mixture single = fit_riemannian(data, ones);
  Point mu = make_point(single.manifold, single.components[0].mean);
  RgdParams params{mu, single.components[0].cov};
  CHECK(loglik(single, {mu}) ==
        doctest::Approx(rgd_logpdf(params, mu)).epsilon(1e-12));

  // flat variants against the pedestrian mixture density
  Mixture euc = fit_euclidean(data, labels);
  CHECK(loglik(euc, sample) ==
        doctest::Approx(flat_mixture_loglik(euc, sample)).epsilon(1e-9));
  Mixture tan_fit = fit_tangent(data, frechet_mean(data), labels);
  CHECK(loglik(tan_fit, sample) ==
        doctest::Approx(flat_mixture_loglik(tan_fit, sample)).epsilon(1e-9));
}

TEST_CASE("loglik floors cut-locus points for the tangent variant") {
  Rng rng(325);
  Point base = pole();
  Eigen::MatrixXd cov = 0.02 * Eigen::MatrixXd::Identity(2, 2);
  auto data = sample_wgd({base, cov}, 50, rng);
  std::vector<int> labels(data.size(), 0);
  Mixture fit = fit_tangent(data, base, labels);

  auto probe = std::vector<Point>(data.begin(), data.begin() + 5);
  double clean = loglik(fit, probe);
  probe.push_back(make_point(sphere(2), -base.coords));
  LoglikStats stats;
  double floored = loglik(fit, probe, &stats);
  CHECK(stats.cut_locus_incidents == 1);
  CHECK(floored == doctest::Approx(clean - 745.0).epsilon(1e-12));

  LoglikStats clean_stats;
  loglik(fit, std::vector<Point>(data.begin(), data.begin() + 5),
         &clean_stats);
  CHECK(clean_stats.cut_locus_incidents == 0);
}

TEST_CASE("density_grid: argmax, quadrature, flatness, validation") {
  Rng rng(326);
  Point mu = uniform_sphere_point(2, rng);
  Eigen::MatrixXd cov = 0.05 * Eigen::MatrixXd::Identity(2, 2);
  auto data = sample_rgd({mu, cov}, 400, rng);
  std::vector<int> labels(data.size(), 0);
  Mixture fit = fit_riemannian(data, labels);

  auto grid = density_grid(fit, 2.0);
  REQUIRE(grid.size() == 90u * 180u);
  double quad = 0.0, omega = 0.0, best_density = -1.0;
  Point best = mu;
  for (const GridCell& cell : grid) {
    CHECK(cell.density >= 0.0);
    quad += cell.density * cell.solid_angle;
    omega += cell.solid_angle;
    if (cell.density > best_density) {
      best_density = cell.density;
      best = cell.point;
    }
  }
  CHECK(omega == doctest::Approx(4.0 * kPi).epsilon(1e-9));
  CHECK(quad > 0.9);
  CHECK(quad < 1.1);
  // argmax within one cell diagonal of the fitted mean
  Point fit_mu = make_point(sphere(2), fit.components[0].mean);
  CHECK(distance(best, fit_mu) < 2.0 * (2.0 * kPi / 180.0));

  // near-uniform mixture: huge isotropic covariance
  Mixture flat = fit;
  flat.components[0].cov = 50.0 * Eigen::MatrixXd::Identity(2, 2);
  auto flat_grid = density_grid(flat, 6.0);
  double lo = 1e300, hi = 0.0;
  for (const GridCell& cell : flat_grid) {
    lo = std::min(lo, cell.density);
    hi = std::max(hi, cell.density);
  }
  CHECK(hi / lo < 10.0);

  // density values agree with a per-point evaluation
  const GridCell& probe = grid[1234];
  CHECK(probe.density ==
        doctest::Approx(std::exp(loglik(fit, {probe.point}))).epsilon(1e-12));

  Rng spd_rng(327);
  auto spd_data = sample_wgd(
      {random_spd_point(2, spd_rng),
       0.02 * Eigen::MatrixXd::Identity(3, 3)},
      30, spd_rng);
  std::vector<int> spd_labels(spd_data.size(), 0);
  Mixture spd_fit = fit_riemannian(spd_data, spd_labels);
  CHECK_THROWS_AS(density_grid(spd_fit, 5.0), UnsupportedError);
}
