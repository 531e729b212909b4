#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "manifoldmix/distributions.hpp"
#include "manifoldmix/frechet.hpp"
#include "manifoldmix/gmm.hpp"
#include "manifoldmix/io.hpp"
#include "test_helpers.hpp"

using namespace manifoldmix;

namespace {

/// Temp file that removes itself; keeps the suite rerunnable.
struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("iotest_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool same_bits(double a, double b) {
  return a == b && std::signbit(a) == std::signbit(b);
}

}  // namespace

TEST_CASE("format_double round-trips every value exactly") {
  std::vector<double> probes = {0.0,
                                1.0,
                                -1.0,
                                0.1,
                                1.0 / 3.0,
                                kPi,
                                -kPi,
                                6.02214076e23,
                                1e-300,
                                -2.2250738585072014e-308,
                                0.49999999999999994};
  Rng rng(601);
  for (int i = 0; i < 200; ++i)
    probes.push_back((rng.uniform() - 0.5) * std::pow(10.0, rng.uniform(-12, 12)));
  for (double x : probes) {
    const double back = std::stod(format_double(x));
    CHECK(same_bits(back, x));
  }
  // compact for representable integers
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-3.0) == "-3");
}

TEST_CASE("points CSV: headers, framing, and near-exact round trip") {
  Rng rng(602);
  std::vector<Point> sph;
  for (int i = 0; i < 40; ++i) sph.push_back(uniform_sphere_point(4, rng));
  std::vector<Point> spdp;
  for (int i = 0; i < 25; ++i) spdp.push_back(random_spd_point(3, rng));

  const std::string text = points_to_csv(sph);
  CHECK(text.rfind("# manifold=sphere:4\n", 0) == 0);
  CHECK(points_to_csv(spdp).rfind("# manifold=spd:3\n", 0) == 0);

  // writing is deterministic
  CHECK(points_to_csv(sph) == text);

  // a unit row has d+1 comma-separated fields
  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line);  // header
  std::getline(lines, line);
  CHECK(std::count(line.begin(), line.end(), ',') == 4);

  auto sph_back = points_from_csv(text);
  REQUIRE(sph_back.size() == sph.size());
  for (size_t i = 0; i < sph.size(); ++i) {
    CHECK(sph_back[i].manifold == sph[i].manifold);
    // re-projection may touch the last ulp but nothing more
    CHECK((sph_back[i].coords - sph[i].coords).cwiseAbs().maxCoeff() < 1e-15);
  }
  auto spd_back = points_from_csv(points_to_csv(spdp));
  REQUIRE(spd_back.size() == spdp.size());
  for (size_t i = 0; i < spdp.size(); ++i)
    CHECK((spd_back[i].coords - spdp[i].coords).cwiseAbs().maxCoeff() < 1e-12);

  // repeated write/read generations never drift beyond the last ulp
  auto gen2 = points_from_csv(points_to_csv(sph_back));
  for (size_t i = 0; i < sph.size(); ++i)
    CHECK((gen2[i].coords - sph_back[i].coords).cwiseAbs().maxCoeff() < 1e-15);

  TempFile f("points.csv");
  write_points_csv(f.path, spdp);
  auto from_file = read_points_csv(f.path);
  REQUIRE(from_file.size() == spdp.size());
  CHECK(slurp(f.path) == points_to_csv(spdp));
}

TEST_CASE("points CSV rejects malformed input naming the row") {
  // wrong field count
  CHECK_THROWS_AS(points_from_csv("# manifold=sphere:2\n0.1,0.2\n"),
                  std::invalid_argument);
  // non-numeric field
  CHECK_THROWS_AS(points_from_csv("# manifold=sphere:2\n1,0,zero\n"),
                  std::invalid_argument);
  // trailing garbage after a number
  CHECK_THROWS_AS(points_from_csv("# manifold=sphere:2\n1,0,0x\n"),
                  std::invalid_argument);
  // the error message points at the offending row
  try {
    points_from_csv("# manifold=sphere:2\n1,0,0\n0,1,0\nbroken\n");
    CHECK(false);
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("row 3") != std::string::npos);
  }
  // missing or foreign header
  CHECK_THROWS_AS(points_from_csv("1,0,0\n"), std::invalid_argument);
  CHECK_THROWS_AS(points_from_csv(""), std::invalid_argument);
  CHECK_THROWS_AS(points_from_csv("# manifold=torus:2\n"),
                  std::invalid_argument);
  // zero rows is legal
  CHECK(points_from_csv("# manifold=sphere:2\n").empty());
  // rows are cleaned up through the projection: a slightly off-sphere row
  auto p = points_from_csv("# manifold=sphere:2\n2,0,0\n");
  REQUIRE(p.size() == 1u);
  CHECK(p[0].coords[0] == doctest::Approx(1.0).epsilon(1e-15));
  // mixed manifolds cannot be written into one file
  Rng mix_rng(603);
  std::vector<Point> mixed = {make_point(sphere(2), Eigen::Vector3d(1, 0, 0)),
                              uniform_sphere_point(3, mix_rng)};
  CHECK_THROWS_AS(points_to_csv(mixed), std::invalid_argument);
}

TEST_CASE("mixture JSON round-trips bit-exactly") {
  Rng rng(604);
  auto cap = [&](const Eigen::Vector3d& c, int n) {
    std::vector<Point> out;
    Point base = make_point(sphere(2), c.normalized());
    Eigen::MatrixXd cov = 0.02 * Eigen::MatrixXd::Identity(2, 2);
    auto draws = sample_wgd({base, cov}, n, rng);
    return draws;
  };
  auto data = cap(Eigen::Vector3d(1, 0, 0), 30);
  auto more = cap(Eigen::Vector3d(0, 1, 0.2), 30);
  data.insert(data.end(), more.begin(), more.end());
  Rng init_rng(605);
  auto labels = init_shared(data, 2, init_rng);

  std::vector<Mixture> fits = {
      fit_euclidean(data, labels),
      fit_tangent(data, frechet_mean(data), labels),
      fit_riemannian(data, labels)};
  // an SPD model too
  std::vector<Point> spd_data;
  for (int i = 0; i < 20; ++i) spd_data.push_back(random_spd_point(2, rng));
  fits.push_back(fit_riemannian(spd_data, std::vector<int>(20, 0)));

  for (const Mixture& m : fits) {
    CAPTURE(variant_name(m.variant));
    const std::string doc = mixture_to_json(m);
    Mixture back = mixture_from_json(doc);
    CHECK(back.variant == m.variant);
    CHECK(back.manifold == m.manifold);
    REQUIRE(back.components.size() == m.components.size());
    for (size_t j = 0; j < m.components.size(); ++j) {
      CHECK(same_bits(back.components[j].prior, m.components[j].prior));
      REQUIRE(back.components[j].mean.size() == m.components[j].mean.size());
      for (int i = 0; i < m.components[j].mean.size(); ++i)
        CHECK(same_bits(back.components[j].mean[i], m.components[j].mean[i]));
      REQUIRE(back.components[j].cov.rows() == m.components[j].cov.rows());
      for (int r = 0; r < m.components[j].cov.rows(); ++r)
        for (int c = 0; c < m.components[j].cov.cols(); ++c)
          CHECK(same_bits(back.components[j].cov(r, c),
                          m.components[j].cov(r, c)));
    }
    CHECK(back.tangent_base.has_value() == m.tangent_base.has_value());
    if (m.tangent_base)
      CHECK(back.tangent_base->coords == m.tangent_base->coords);
    REQUIRE(back.train_log.size() == m.train_log.size());
    for (size_t i = 0; i < m.train_log.size(); ++i)
      CHECK(same_bits(back.train_log[i], m.train_log[i]));
    // serialize -> parse -> serialize is the identity
    CHECK(mixture_to_json(back) == doc);
  }

  TempFile f("model.json");
  save_mixture(f.path, fits[2]);
  Mixture loaded = load_mixture(f.path);
  CHECK(mixture_to_json(loaded) == mixture_to_json(fits[2]));
}

TEST_CASE("mixture JSON rejects broken documents") {
  CHECK_THROWS_AS(mixture_from_json("{"), std::invalid_argument);
  CHECK_THROWS_AS(mixture_from_json("{}"), std::invalid_argument);
  CHECK_THROWS_AS(
      mixture_from_json(R"({"variant":"spherical","manifold":"sphere:2",)"
                        R"("components":[],"train_log":[],"basis":"x"})"),
      std::invalid_argument);
  CHECK_THROWS_AS(load_mixture("definitely_missing_file.json"),
                  std::invalid_argument);
}
