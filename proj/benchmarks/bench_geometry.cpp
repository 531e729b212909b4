// Microbenchmarks for the geometric primitives and the EM trainers.  These
// exist to catch performance regressions, not to prove anything statistical;
// the statistical comparison lives in the `bench` CLI subcommand.

#include <benchmark/benchmark.h>

#include <vector>

#include "manifoldmix/distributions.hpp"
#include "manifoldmix/frechet.hpp"
#include "manifoldmix/gmm.hpp"
#include "manifoldmix/manifold.hpp"
#include "manifoldmix/rng.hpp"

namespace mmx = manifoldmix;

namespace {

mmx::Point sphere_base(int d) {
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(d + 1);
  e1[0] = 1.0;
  return mmx::make_point(mmx::sphere(d), e1);
}

mmx::Tangent some_tangent(const mmx::Point& base, double scale,
                          mmx::Rng& rng) {
  const mmx::TangentBasis basis = mmx::tangent_basis(base);
  Eigen::VectorXd c(base.manifold.intrinsic_dim());
  for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = rng.normal();
  c *= scale / c.norm();
  return mmx::from_coords(basis, c);
}

void bm_sphere_exp(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  mmx::Rng rng(1);
  const mmx::Point base = sphere_base(d);
  const mmx::Tangent u = some_tangent(base, 0.8, rng);
  for (auto _ : state) benchmark::DoNotOptimize(mmx::exp_map(base, u));
}

void bm_sphere_log(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  mmx::Rng rng(2);
  const mmx::Point base = sphere_base(d);
  const mmx::Point target = mmx::exp_map(base, some_tangent(base, 0.8, rng));
  for (auto _ : state) benchmark::DoNotOptimize(mmx::log_map(base, target));
}

void bm_sphere_transport(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  mmx::Rng rng(3);
  const mmx::Point from = sphere_base(d);
  const mmx::Point to = mmx::exp_map(from, some_tangent(from, 0.9, rng));
  const mmx::Tangent v = some_tangent(from, 0.5, rng);
  for (auto _ : state)
    benchmark::DoNotOptimize(mmx::parallel_transport(from, to, v));
}

void bm_spd_exp(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  mmx::Rng rng(4);
  const mmx::Point base = mmx::point_from_matrix(
      mmx::spd(d), mmx::random_spd(d, 0.5, 2.0, rng));
  const mmx::Tangent u = some_tangent(base, 0.8, rng);
  for (auto _ : state) benchmark::DoNotOptimize(mmx::exp_map(base, u));
}

void bm_spd_log(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  mmx::Rng rng(5);
  const mmx::Point base = mmx::point_from_matrix(
      mmx::spd(d), mmx::random_spd(d, 0.5, 2.0, rng));
  const mmx::Point target = mmx::exp_map(base, some_tangent(base, 0.8, rng));
  for (auto _ : state) benchmark::DoNotOptimize(mmx::log_map(base, target));
}

void bm_spd_transport(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  mmx::Rng rng(6);
  const mmx::Point from = mmx::point_from_matrix(
      mmx::spd(d), mmx::random_spd(d, 0.5, 2.0, rng));
  const mmx::Point to = mmx::exp_map(from, some_tangent(from, 0.7, rng));
  const mmx::Tangent v = some_tangent(from, 0.5, rng);
  for (auto _ : state)
    benchmark::DoNotOptimize(mmx::parallel_transport(from, to, v));
}

std::vector<mmx::Point> cap_sample(int d, int n, mmx::Rng& rng) {
  const mmx::Point base = sphere_base(d);
  const Eigen::MatrixXd cov = 0.05 * Eigen::MatrixXd::Identity(d, d);
  return mmx::sample_wgd({base, cov}, n, rng);
}

void bm_frechet_mean(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  mmx::Rng rng(7);
  const std::vector<mmx::Point> data = cap_sample(3, n, rng);
  mmx::MeanConfig cfg;
  cfg.warn_hemisphere = false;
  for (auto _ : state)
    benchmark::DoNotOptimize(mmx::frechet_mean(data, {}, cfg));
}

void bm_rgd_sample(benchmark::State& state) {
  mmx::Rng rng(8);
  const mmx::RgdParams params{sphere_base(3),
                              0.05 * Eigen::MatrixXd::Identity(3, 3)};
  for (auto _ : state)
    benchmark::DoNotOptimize(mmx::sample_rgd(params, 100, rng));
}

void bm_em(benchmark::State& state) {
  const auto variant = static_cast<mmx::Variant>(state.range(0));
  mmx::Rng rng(9);
  std::vector<mmx::Point> data = cap_sample(2, 60, rng);
  {
    const mmx::Point other = mmx::make_point(
        mmx::sphere(2), Eigen::Vector3d(0.0, 1.0, 0.0));
    const Eigen::MatrixXd cov = 0.05 * Eigen::MatrixXd::Identity(2, 2);
    auto more = mmx::sample_wgd({other, cov}, 60, rng);
    data.insert(data.end(), more.begin(), more.end());
  }
  mmx::Rng init_rng(10);
  const std::vector<int> labels = mmx::init_shared(data, 2, init_rng);
  mmx::EmConfig cfg;
  cfg.max_iters = 25;
  for (auto _ : state) {
    switch (variant) {
      case mmx::Variant::Euclidean:
        benchmark::DoNotOptimize(mmx::fit_euclidean(data, labels, cfg));
        break;
      case mmx::Variant::Tangent:
        benchmark::DoNotOptimize(
            mmx::fit_tangent(data, sphere_base(2), labels, cfg));
        break;
      case mmx::Variant::Riemannian:
        benchmark::DoNotOptimize(mmx::fit_riemannian(data, labels, cfg));
        break;
    }
  }
}

BENCHMARK(bm_sphere_exp)->Arg(2)->Arg(10);
BENCHMARK(bm_sphere_log)->Arg(2)->Arg(10);
BENCHMARK(bm_sphere_transport)->Arg(2)->Arg(10);
BENCHMARK(bm_spd_exp)->Arg(2)->Arg(3);
BENCHMARK(bm_spd_log)->Arg(2)->Arg(3);
BENCHMARK(bm_spd_transport)->Arg(2)->Arg(3);
BENCHMARK(bm_frechet_mean)->Arg(50)->Arg(200);
BENCHMARK(bm_rgd_sample);
BENCHMARK(bm_em)->DenseRange(0, 2);

}  // namespace

BENCHMARK_MAIN();
