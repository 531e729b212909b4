// Command-line front end: benchmark runs, model fitting/serialization,
// target sampling, density grids, and distortion reports.
//
// Exit codes are a stable scripting contract: 0 success, 1 runtime or
// numerical failure, 2 usage/validation failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "manifoldmix/experiment.hpp"
#include "manifoldmix/frechet.hpp"
#include "manifoldmix/gmm.hpp"
#include "manifoldmix/io.hpp"

namespace mmx = manifoldmix;

namespace {

/// Shared flag bag; each subcommand binds the subset it uses.
struct CliConfig {
  std::string manifold = "sphere:2";
  std::string family = "rgd";
  std::string method = "riemannian";
  std::string basepoint = "frechet";
  std::string input;
  std::string model;
  std::string out;
  int targets = 100;
  int train = 100;
  int test = 100;
  int k = 0;
  int n = 100;
  double noise = 0.05;
  double res = 2.0;
  std::uint64_t seed = 0;
};

/// "r.csv" -> "r_per_target.csv"; extension-free stems get the suffix too.
std::string per_target_path(const std::string& out) {
  const size_t slash = out.find_last_of("/\\");
  const size_t dot = out.find_last_of('.');
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return out + "_per_target";
  return out.substr(0, dot) + "_per_target" + out.substr(dot);
}

mmx::Point origin_point(mmx::ManifoldId m) {
  if (m.kind == mmx::ManifoldKind::Sphere) {
    Eigen::VectorXd e1 = Eigen::VectorXd::Zero(m.ambient_dim());
    e1[0] = 1.0;
    return mmx::make_point(m, e1);
  }
  return mmx::point_from_matrix(m, Eigen::MatrixXd::Identity(m.size, m.size));
}

mmx::Point resolve_basepoint(const std::string& name,
                             const std::vector<mmx::Point>& data) {
  if (data.empty())
    throw std::invalid_argument("no points to take a basepoint from");
  if (name == "origin") return origin_point(data.front().manifold);
  if (name == "frechet") return mmx::frechet_mean(data);
  throw std::invalid_argument("unknown basepoint '" + name +
                              "'; expected origin or frechet");
}

mmx::TargetSpec named_target(mmx::ManifoldId m, mmx::Family family,
                             mmx::Rng& rng) {
  return m.kind == mmx::ManifoldKind::Sphere
             ? mmx::make_sphere_targets(m.size, family, rng)
             : mmx::make_spd_targets(m.size, family, rng);
}

int cmd_bench(const CliConfig& cfg) {
  mmx::ExperimentSpec spec;
  spec.manifold = mmx::ManifoldId::parse(cfg.manifold);
  spec.family = mmx::parse_family(cfg.family);
  spec.n_targets = cfg.targets;
  spec.n_train = cfg.train;
  spec.n_test = cfg.test;
  spec.k_target = cfg.k;
  spec.k_model = cfg.k;
  spec.seed = cfg.seed;

  const mmx::ExperimentResult result = mmx::run_experiment(spec);
  mmx::write_summary_csv(result, cfg.out);
  mmx::write_per_target_csv(result, per_target_path(cfg.out));

  std::cerr << "bench: " << result.n_completed << "/" << spec.n_targets
            << " targets completed\n";
  return 0;
}

int cmd_fit(const CliConfig& cfg) {
  const mmx::Variant method = mmx::parse_variant(cfg.method);
  const std::vector<mmx::Point> data = mmx::read_points_csv(cfg.input);
  if (cfg.k < 1)
    throw std::invalid_argument("fit: --k must be at least 1");

  mmx::Rng rng(cfg.seed);
  const std::vector<int> labels = mmx::init_shared(data, cfg.k, rng);

  mmx::Mixture fit;
  switch (method) {
    case mmx::Variant::Euclidean:
      fit = mmx::fit_euclidean(data, labels);
      break;
    case mmx::Variant::Tangent:
      fit = mmx::fit_tangent(data, resolve_basepoint(cfg.basepoint, data),
                             labels);
      break;
    case mmx::Variant::Riemannian:
      fit = mmx::fit_riemannian(data, labels);
      break;
  }
  mmx::save_mixture(cfg.out, fit);

  mmx::LoglikStats stats;
  const double final_ll = mmx::loglik(fit, data, &stats);
  nlohmann::json report;
  report["train_ll"] = final_ll;
  report["iterations"] = fit.train_log.size() - 1;
  report["incidents"] = stats.cut_locus_incidents;
  report["model"] = cfg.out;
  std::cout << report.dump(2) << '\n';
  return 0;
}

int cmd_sample(const CliConfig& cfg) {
  const mmx::ManifoldId m = mmx::ManifoldId::parse(cfg.manifold);
  mmx::Rng rng(cfg.seed);
  std::vector<mmx::Point> points;
  if (cfg.family == "cshape") {
    if (m != mmx::sphere(2))
      throw std::invalid_argument("sample: cshape data lives on sphere:2");
    points = mmx::make_c_shape(cfg.n, cfg.noise, rng);
  } else {
    const mmx::TargetSpec target =
        named_target(m, mmx::parse_family(cfg.family), rng);
    points = mmx::sample_target(target, cfg.n, rng);
  }
  mmx::write_points_csv(cfg.out, points);
  return 0;
}

int cmd_grid(const CliConfig& cfg) {
  const mmx::Mixture model = mmx::load_mixture(cfg.model);
  const std::vector<mmx::GridCell> grid = mmx::density_grid(model, cfg.res);
  std::ofstream out(cfg.out, std::ios::binary);
  if (!out)
    throw std::invalid_argument("grid: cannot open '" + cfg.out +
                                "' for writing");
  out << "lat_deg,lon_deg,density,solid_angle\n";
  for (const mmx::GridCell& cell : grid)
    out << mmx::format_double(cell.lat_deg) << ','
        << mmx::format_double(cell.lon_deg) << ','
        << mmx::format_double(cell.density) << ','
        << mmx::format_double(cell.solid_angle) << '\n';
  return 0;
}

int cmd_distort(const CliConfig& cfg) {
  const std::vector<mmx::Point> data = mmx::read_points_csv(cfg.input);
  const mmx::Point base = resolve_basepoint(cfg.basepoint, data);
  const mmx::DistortionReport report = mmx::distortion_report(data, base);
  const std::string doc = mmx::distortion_to_json(report);
  if (cfg.out.empty()) {
    std::cout << doc << '\n';
  } else {
    std::ofstream out(cfg.out, std::ios::binary);
    if (!out)
      throw std::invalid_argument("distort: cannot open '" + cfg.out +
                                  "' for writing");
    out << doc << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CliConfig cfg;
  CLI::App app{
      "Gaussian mixtures on spheres and SPD manifolds: Euclidean, "
      "single-tangent-space, and Riemannian fits, plus the benchmark "
      "comparing them"};
  app.require_subcommand(1);

  CLI::App* bench = app.add_subcommand(
      "bench", "Run the repeated train/test comparison and write CSVs");
  bench->add_option("--manifold", cfg.manifold, "sphere:d or spd:d");
  bench->add_option("--family", cfg.family,
                    "target family: rgd, wgd, vmf (sphere) or iwd (spd)");
  bench->add_option("--targets", cfg.targets, "number of target densities");
  bench->add_option("--train", cfg.train, "training points per target");
  bench->add_option("--test", cfg.test, "held-out points per target");
  bench->add_option("--k", cfg.k,
                    "mixture components (0 = family default: 3 or 5)");
  bench->add_option("--seed", cfg.seed, "experiment seed");
  bench->add_option("--out", cfg.out, "summary CSV path")->required();

  CLI::App* fit = app.add_subcommand(
      "fit", "Fit one mixture variant to a point CSV and save the model");
  fit->add_option("--input", cfg.input, "point CSV")->required();
  fit->add_option("--method", cfg.method,
                  "euclidean, tangent, or riemannian");
  fit->add_option("--basepoint", cfg.basepoint,
                  "tangent basepoint: origin or frechet");
  fit->add_option("--k", cfg.k, "mixture components")->required();
  fit->add_option("--seed", cfg.seed, "initialization seed");
  fit->add_option("--out", cfg.out, "model JSON path")->required();

  CLI::App* sample = app.add_subcommand(
      "sample", "Draw points from a named target density into a CSV");
  sample->add_option("--manifold", cfg.manifold, "sphere:d or spd:d");
  sample->add_option("--family", cfg.family,
                     "rgd, wgd, vmf, iwd, or cshape (sphere:2)");
  sample->add_option("--n", cfg.n, "number of draws");
  sample->add_option("--noise", cfg.noise, "cshape tangent noise scale");
  sample->add_option("--seed", cfg.seed, "sampling seed");
  sample->add_option("--out", cfg.out, "point CSV path")->required();

  CLI::App* grid = app.add_subcommand(
      "grid", "Evaluate a saved sphere:2 model on a lat/lon density grid");
  grid->add_option("--model", cfg.model, "model JSON from fit")->required();
  grid->add_option("--res", cfg.res, "cell size in degrees");
  grid->add_option("--out", cfg.out, "grid CSV path")->required();

  CLI::App* distort = app.add_subcommand(
      "distort",
      "Report how a single tangent space distorts pairwise distances");
  distort->add_option("--input", cfg.input, "point CSV")->required();
  distort->add_option("--basepoint", cfg.basepoint, "origin or frechet");
  distort->add_option("--out", cfg.out, "report JSON path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // --help exits cleanly; bad usage is 2
  }

  try {
    if (bench->parsed()) return cmd_bench(cfg);
    if (fit->parsed()) return cmd_fit(cfg);
    if (sample->parsed()) return cmd_sample(cfg);
    if (grid->parsed()) return cmd_grid(cfg);
    if (distort->parsed()) return cmd_distort(cfg);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
