#include "manifoldmix/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "json.hpp"
#include "manifoldmix/frechet.hpp"
#include "manifoldmix/io.hpp"

namespace manifoldmix {

namespace {

constexpr double kPi = 3.14159265358979323846;

int worker_count() {
  if (const char* env = std::getenv("MANIFOLDMIX_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n >= 1) return static_cast<int>(n);
  }
  const unsigned hc = std::thread::hardware_concurrency();
  return hc > 0 ? static_cast<int>(hc) : 1;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

struct TargetOutcome {
  bool completed = false;
  std::array<bool, 3> failed{};
  std::array<TargetRow, 3> rows{};
  std::array<double, 3> wall{};
};

ExperimentSpec resolve(ExperimentSpec spec) {
  if (spec.n_targets < 1 || spec.n_train < 1 || spec.n_test < 1)
    throw std::invalid_argument("run_experiment: counts must be positive");
  if (spec.k_target == 0)
    spec.k_target = spec.manifold.kind == ManifoldKind::Sphere ? 3 : 5;
  if (spec.k_model == 0) spec.k_model = spec.k_target;
  if (spec.k_target < 1 || spec.k_model < 1)
    throw std::invalid_argument(
        "run_experiment: component counts must be positive");
  return spec;
}

TargetOutcome run_one_target(const ExperimentSpec& spec, int t) {
  TargetOutcome out;
  for (int v = 0; v < 3; ++v) {
    out.rows[v].target_index = t;
    out.rows[v].method = static_cast<Variant>(v);
  }

  Rng rng(mix_seed(spec.seed, static_cast<std::uint64_t>(t)));
  std::vector<Point> train, test;
  std::vector<int> labels;
  Point base;
  try {
    const TargetSpec target =
        spec.manifold.kind == ManifoldKind::Sphere
            ? make_sphere_targets(spec.manifold.size, spec.family, rng)
            : make_spd_targets(spec.manifold.size, spec.family, rng);
    train = sample_target(target, spec.n_train, rng);
    test = sample_target(target, spec.n_test, rng);
    labels = init_shared(train, spec.k_model, rng);
    MeanConfig cfg;
    cfg.warn_hemisphere = false;
    try {
      base = frechet_mean(train, {}, cfg);
    } catch (const ConvergenceError& e) {
      base = e.last_iterate;
    }
  } catch (const std::exception&) {
    out.failed = {true, true, true};
    return out;
  }

  for (int v = 0; v < 3; ++v) {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      Mixture fit;
      switch (static_cast<Variant>(v)) {
        case Variant::Euclidean:
          fit = fit_euclidean(train, labels);
          break;
        case Variant::Tangent:
          fit = fit_tangent(train, base, labels);
          break;
        case Variant::Riemannian:
          fit = fit_riemannian(train, labels);
          break;
      }
      out.rows[v].train_ll = fit.train_log.back();
      out.rows[v].em_iters = static_cast<int>(fit.train_log.size()) - 1;
      LoglikStats stats;
      out.rows[v].test_ll = loglik(fit, test, &stats);
      out.rows[v].incidents = stats.cut_locus_incidents;
    } catch (const std::exception&) {
      out.failed[v] = true;
    }
    out.wall[v] = seconds_since(t0);
  }
  out.completed = !out.failed[0] && !out.failed[1] && !out.failed[2];
  return out;
}

}  // namespace

TargetSpec make_sphere_targets(int d, Family family, Rng& rng) {
  if (d < 2)
    throw std::invalid_argument("make_sphere_targets: need d >= 2");
  if (family == Family::Iwd)
    throw std::invalid_argument(
        "make_sphere_targets: inverse-Wishart targets live on spd manifolds");
  TargetSpec spec;
  spec.manifold = sphere(d);
  spec.family = family;
  spec.weights.assign(3, 1.0 / 3.0);

  // the three published directions: all-ones, (1, -1...), and its antipode
  Eigen::VectorXd m1 = Eigen::VectorXd::Ones(d + 1);
  Eigen::VectorXd m2 = -Eigen::VectorXd::Ones(d + 1);
  m2[0] = 1.0;
  std::vector<Point> means = {project_to_manifold(spec.manifold, m1),
                              project_to_manifold(spec.manifold, m2)};
  means.push_back(make_point(spec.manifold, -means[1].coords));

  for (const Point& mu : means) {
    if (family == Family::Vmf)
      spec.vmf.push_back({mu, rng.uniform(20.0, 70.0)});
    else
      spec.gauss.push_back({mu, random_spd(d, 0.01, 0.25, rng)});
  }
  return spec;
}

TargetSpec make_spd_targets(int d, Family family, Rng& rng) {
  if (d < 2)
    throw std::invalid_argument("make_spd_targets: need d >= 2");
  if (family != Family::Rgd && family != Family::Iwd)
    throw std::invalid_argument(
        "make_spd_targets: only rgd and iwd target families are defined");
  TargetSpec spec;
  spec.manifold = spd(d);
  spec.family = family;
  spec.weights.assign(5, 1.0 / 5.0);
  const int dim = spec.manifold.intrinsic_dim();

  for (int j = 0; j < 5; ++j) {
    const Point mean =
        point_from_matrix(spec.manifold, random_spd(d, 0.1, 2.0, rng));
    if (family == Family::Iwd)
      spec.iwd.push_back({mean.matrix(), rng.uniform(d + 1.0, d + 3.0)});
    else
      spec.gauss.push_back({mean, random_spd(dim, 0.1, 0.5, rng)});
  }
  return spec;
}

ExperimentResult run_experiment(const ExperimentSpec& raw) {
  const ExperimentSpec spec = resolve(raw);
  const int n = spec.n_targets;
  std::vector<TargetOutcome> outcomes(n);

  const int workers = std::min(worker_count(), n);
  if (workers <= 1) {
    for (int t = 0; t < n; ++t) outcomes[t] = run_one_target(spec, t);
  } else {
    std::atomic<int> next{0};
    auto work = [&]() {
      for (int t = next.fetch_add(1); t < n; t = next.fetch_add(1))
        outcomes[t] = run_one_target(spec, t);
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (std::thread& th : pool) th.join();
  }

  // merge in target-index order so the result is scheduling-independent
  ExperimentResult res;
  res.spec = spec;
  for (int t = 0; t < n; ++t) {
    const TargetOutcome& out = outcomes[t];
    for (int v = 0; v < 3; ++v) {
      res.summary[v].wall_seconds += out.wall[v];
      if (out.failed[v]) ++res.summary[v].failures;
    }
    if (!out.completed) continue;
    ++res.n_completed;
    for (int v = 0; v < 3; ++v) {
      res.rows.push_back(out.rows[v]);
      res.summary[v].incidents += out.rows[v].incidents;
    }
  }

  const int skipped = n - res.n_completed;
  if (5 * skipped > n)
    throw std::runtime_error(
        "run_experiment: " + std::to_string(skipped) + " of " +
        std::to_string(n) +
        " targets failed (more than 20%); the configuration is unusable");

  for (int v = 0; v < 3; ++v) {
    double mean = 0.0;
    for (const TargetRow& row : res.rows)
      if (row.method == static_cast<Variant>(v)) mean += row.test_ll;
    if (res.n_completed > 0) mean /= res.n_completed;
    double var = 0.0;
    for (const TargetRow& row : res.rows)
      if (row.method == static_cast<Variant>(v))
        var += (row.test_ll - mean) * (row.test_ll - mean);
    res.summary[v].mean_ll = mean;
    res.summary[v].std_ll =
        res.n_completed > 1 ? std::sqrt(var / (res.n_completed - 1)) : 0.0;
  }
  return res;
}

void write_summary_csv(const ExperimentResult& result,
                       const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::invalid_argument("summary csv: cannot open '" + path +
                                "' for writing");
  out << "manifold,dim,family,method,mean_ll,std_ll,failures\n";
  const std::string kind =
      result.spec.manifold.kind == ManifoldKind::Sphere ? "sphere" : "spd";
  for (int v = 0; v < 3; ++v) {
    out << kind << ',' << result.spec.manifold.size << ','
        << family_name(result.spec.family) << ','
        << variant_name(static_cast<Variant>(v)) << ','
        << format_double(result.summary[v].mean_ll) << ','
        << format_double(result.summary[v].std_ll) << ','
        << result.summary[v].failures << '\n';
  }
}

void write_per_target_csv(const ExperimentResult& result,
                          const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::invalid_argument("per-target csv: cannot open '" + path +
                                "' for writing");
  out << "target_index,method,train_ll,test_ll,em_iters,incidents\n";
  for (const TargetRow& row : result.rows) {
    out << row.target_index << ',' << variant_name(row.method) << ','
        << format_double(row.train_ll) << ',' << format_double(row.test_ll)
        << ',' << row.em_iters << ',' << row.incidents << '\n';
  }
}

DistortionReport distortion_report(const std::vector<Point>& data,
                                   const Point& base) {
  const int n = static_cast<int>(data.size());
  if (n > 2000)
    throw std::invalid_argument(
        "distortion_report: exact pairwise computation is capped at 2000 "
        "points; subsample first");
  for (const Point& p : data)
    if (p.manifold != base.manifold)
      throw std::invalid_argument(
          "distortion_report: datum on the wrong manifold");

  DistortionReport rep;
  rep.n = n;
  if (n == 0) return rep;

  const TangentBasis basis = tangent_basis(base);
  std::vector<Eigen::VectorXd> coords;
  coords.reserve(n);
  int beyond = 0;
  for (const Point& p : data) {
    coords.push_back(to_coords(basis, log_map(base, p)));
    const double d0 = distance(base, p);
    rep.max_base_distance_error = std::max(
        rep.max_base_distance_error, std::abs(coords.back().norm() - d0));
    if (base.manifold.kind == ManifoldKind::Sphere && d0 > kPi / 2.0)
      ++beyond;
  }
  rep.frac_beyond_half_pi = static_cast<double>(beyond) / n;

  std::vector<double> abs_diffs;
  abs_diffs.reserve(static_cast<size_t>(n) * (n - 1) / 2);
  double signed_sum = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double geo = distance(data[i], data[j]);
      const double flat = (coords[i] - coords[j]).norm();
      signed_sum += geo - flat;
      abs_diffs.push_back(std::abs(geo - flat));
      rep.max_abs = std::max(rep.max_abs, abs_diffs.back());
    }
  }
  if (abs_diffs.empty()) return rep;

  const size_t m = abs_diffs.size();
  rep.signed_mean = signed_sum / static_cast<double>(m);
  double abs_sum = 0.0;
  for (double d : abs_diffs) abs_sum += d;
  rep.mean_abs = abs_sum / static_cast<double>(m);
  std::sort(abs_diffs.begin(), abs_diffs.end());
  auto quantile = [&](double q) {
    const size_t idx = std::min(
        m - 1, static_cast<size_t>(q * static_cast<double>(m)));
    return abs_diffs[idx];
  };
  rep.q50 = quantile(0.50);
  rep.q90 = quantile(0.90);
  rep.q99 = quantile(0.99);
  return rep;
}

std::string distortion_to_json(const DistortionReport& report) {
  nlohmann::json doc;
  doc["n"] = report.n;
  doc["mean_abs"] = report.mean_abs;
  doc["max_abs"] = report.max_abs;
  doc["q50"] = report.q50;
  doc["q90"] = report.q90;
  doc["q99"] = report.q99;
  doc["signed_mean"] = report.signed_mean;
  doc["frac_beyond_half_pi"] = report.frac_beyond_half_pi;
  doc["max_base_distance_error"] = report.max_base_distance_error;
  return doc.dump(2);
}

std::vector<Point> make_c_shape(int n, double noise_sigma, Rng& rng) {
  if (n < 10)
    throw std::invalid_argument("make_c_shape: need at least 10 points");
  if (noise_sigma < 0.0)
    throw std::invalid_argument("make_c_shape: noise scale must be >= 0");
  const double radius = 0.6;
  const double span = 1.5 * kPi;  // 270 degrees
  std::vector<Point> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double phi =
        -0.75 * kPi + span * static_cast<double>(i) / (n - 1);
    Eigen::Vector3d v(std::cos(radius),
                      std::sin(radius) * std::cos(phi),
                      std::sin(radius) * std::sin(phi));
    const Point p = make_point(sphere(2), v);
    const TangentBasis basis = tangent_basis(p);
    Eigen::Vector2d c;
    do {
      c << rng.normal(), rng.normal();
      c *= noise_sigma;
    } while (c.norm() >= kPi - 1e-6);  // wrap by redrawing, like the sampler
    out.push_back(exp_map(p, from_coords(basis, c)));
  }
  return out;
}

}  // namespace manifoldmix
