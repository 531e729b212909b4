#include "manifoldmix/gmm.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "manifoldmix/distributions.hpp"
#include "manifoldmix/frechet.hpp"

namespace manifoldmix {

namespace {

constexpr double kPi = 3.14159265358979323846;
/// log of the smallest positive normal double; the contribution of a point
/// the model assigns zero density (tangent projection failed at the cut
/// locus).
constexpr double kLogFloor = -745.0;

std::string variant_names[] = {"euclidean", "tangent", "riemannian"};

double log_sum_exp(const Eigen::VectorXd& terms) {
  const double m = terms.maxCoeff();
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (Eigen::Index i = 0; i < terms.size(); ++i)
    s += std::exp(terms[i] - m);
  return m + std::log(s);
}

/// Cached Cholesky evaluation of one Gaussian component on flat coordinates.
struct FlatGauss {
  Eigen::VectorXd mean;
  Eigen::LLT<Eigen::MatrixXd> llt;
  double log_norm = 0.0;  // -(D ln 2pi + ln det Sigma)/2

  FlatGauss(const Eigen::VectorXd& mu, const Eigen::MatrixXd& cov)
      : mean(mu), llt(cov) {
    if (llt.info() != Eigen::Success)
      throw std::runtime_error(
          "mixture component covariance is not positive definite");
    double logdet = 0.0;
    const auto& l = llt.matrixLLT();
    for (Eigen::Index i = 0; i < cov.rows(); ++i)
      logdet += 2.0 * std::log(l(i, i));
    log_norm = -0.5 * (static_cast<double>(cov.rows()) *
                           std::log(2.0 * kPi) +
                       logdet);
  }

  double logpdf(const Eigen::VectorXd& x) const {
    const Eigen::VectorXd r = x - mean;
    return log_norm - 0.5 * r.dot(llt.solve(r));
  }
};

/// Per-component caches for evaluating a fitted Mixture at manifold points.
class MixtureEval {
 public:
  explicit MixtureEval(const Mixture& m) : m_(m) {
    for (const Component& comp : m.components) {
      log_priors_.push_back(comp.prior > 0.0
                                ? std::log(comp.prior)
                                : -std::numeric_limits<double>::infinity());
      // For the Riemannian variant the component mean is the manifold point
      // itself; in the tangent coordinates the density is centered at zero.
      if (m.variant == Variant::Riemannian)
        gauss_.emplace_back(Eigen::VectorXd::Zero(comp.cov.rows()), comp.cov);
      else
        gauss_.emplace_back(comp.mean, comp.cov);
    }
    if (m.variant == Variant::Tangent) {
      if (!m.tangent_base.has_value())
        throw std::invalid_argument(
            "tangent mixture is missing its basepoint");
      bases_.push_back(tangent_basis(*m.tangent_base));
    } else if (m.variant == Variant::Riemannian) {
      for (const Component& comp : m.components)
        bases_.push_back(tangent_basis(Point{m.manifold, comp.mean}));
    }
  }

  int k() const { return static_cast<int>(gauss_.size()); }

  /// Per-component log joint terms ln pi_k + ln p_k(x).  Returns true when
  /// the point was representable; false when the tangent projection hit the
  /// cut locus, in which case every term is the floor contribution.
  bool log_terms(const Point& p, Eigen::VectorXd& out) const {
    out.resize(k());
    switch (m_.variant) {
      case Variant::Euclidean: {
        const Eigen::VectorXd c = embed(p);
        for (int j = 0; j < k(); ++j)
          out[j] = log_priors_[j] + gauss_[j].logpdf(c);
        return true;
      }
      case Variant::Tangent: {
        Eigen::VectorXd c;
        try {
          c = to_coords(bases_[0], log_map(*m_.tangent_base, p));
        } catch (const CutLocusError&) {
          for (int j = 0; j < k(); ++j) out[j] = log_priors_[j] + kLogFloor;
          return false;
        }
        for (int j = 0; j < k(); ++j)
          out[j] = log_priors_[j] + gauss_[j].logpdf(c);
        return true;
      }
      case Variant::Riemannian: {
        for (int j = 0; j < k(); ++j) {
          try {
            const Eigen::VectorXd c = to_coords(
                bases_[j], log_map(bases_[j].base, p));
            out[j] = log_priors_[j] + gauss_[j].logpdf(c);
          } catch (const CutLocusError&) {
            out[j] = log_priors_[j] + kLogFloor;
          }
        }
        return true;
      }
    }
    return true;
  }

 private:
  const Mixture& m_;
  std::vector<double> log_priors_;
  std::vector<FlatGauss> gauss_;
  std::vector<TangentBasis> bases_;
};

void check_data(const std::vector<Point>& data, ManifoldId m,
                const char* who) {
  if (data.empty())
    throw std::invalid_argument(std::string(who) + ": empty dataset");
  for (const Point& p : data)
    if (p.manifold != m)
      throw std::invalid_argument(std::string(who) +
                                  ": datum on the wrong manifold");
}

int check_assignments(const std::vector<int>& a, size_t n, const char* who) {
  if (a.size() != n)
    throw std::invalid_argument(std::string(who) + ": " +
                                std::to_string(a.size()) +
                                " assignments for " + std::to_string(n) +
                                " points");
  int k = 0;
  for (int label : a) {
    if (label < 0)
      throw std::invalid_argument(std::string(who) +
                                  ": negative cluster label");
    k = std::max(k, label + 1);
  }
  return k;
}

// ---------------------------------------------------------------------------
// Flat EM shared by the Euclidean and Tangent variants.
// ---------------------------------------------------------------------------

struct FlatState {
  std::vector<double> priors;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covs;
};

double flat_estep(const Eigen::MatrixXd& x, const FlatState& st,
                  Eigen::MatrixXd& resp) {
  const int n = static_cast<int>(x.rows());
  const int k = static_cast<int>(st.priors.size());
  std::vector<FlatGauss> gauss;
  for (int j = 0; j < k; ++j) gauss.emplace_back(st.means[j], st.covs[j]);
  resp.resize(n, k);
  double ll = 0.0;
  Eigen::VectorXd terms(k);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < k; ++j)
      terms[j] = (st.priors[j] > 0.0
                      ? std::log(st.priors[j])
                      : -std::numeric_limits<double>::infinity()) +
                 gauss[j].logpdf(x.row(i).transpose());
    const double lse = log_sum_exp(terms);
    ll += lse;
    for (int j = 0; j < k; ++j) resp(i, j) = std::exp(terms[j] - lse);
  }
  return ll;
}

/// Reseeds starved components at the data rows with the lowest density
/// under the surviving components, then renormalizes the priors.
void flat_reseed(const Eigen::MatrixXd& x, const std::vector<bool>& starved,
                 FlatState& st, double reg) {
  const int n = static_cast<int>(x.rows());
  const int k = static_cast<int>(st.priors.size());
  std::vector<int> alive;
  for (int j = 0; j < k; ++j)
    if (!starved[j]) alive.push_back(j);
  // density of every datum under the surviving mixture
  Eigen::VectorXd score = Eigen::VectorXd::Zero(n);
  if (!alive.empty()) {
    std::vector<FlatGauss> gauss;
    for (int j : alive) gauss.emplace_back(st.means[j], st.covs[j]);
    Eigen::VectorXd terms(static_cast<int>(alive.size()));
    for (int i = 0; i < n; ++i) {
      for (size_t a = 0; a < alive.size(); ++a)
        terms[static_cast<int>(a)] =
            gauss[a].logpdf(x.row(i).transpose());
      score[i] = log_sum_exp(terms);
    }
  }
  // global covariance as a safe restart spread
  Eigen::VectorXd gmean = x.colwise().mean();
  Eigen::MatrixXd gcov = Eigen::MatrixXd::Zero(x.cols(), x.cols());
  for (int i = 0; i < n; ++i) {
    const Eigen::VectorXd r = x.row(i).transpose() - gmean;
    gcov += r * r.transpose();
  }
  gcov /= static_cast<double>(n);
  gcov += reg * Eigen::MatrixXd::Identity(x.cols(), x.cols());

  std::vector<bool> used(n, false);
  for (int j = 0; j < k; ++j) {
    if (!starved[j]) continue;
    int pick = 0;
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i)
      if (!used[i] && score[i] < worst) {
        worst = score[i];
        pick = i;
      }
    used[pick] = true;
    st.means[j] = x.row(pick).transpose();
    st.covs[j] = gcov;
    st.priors[j] = 1.0 / static_cast<double>(n);
  }
  double total = 0.0;
  for (double p : st.priors) total += p;
  for (double& p : st.priors) p /= total;
}

void flat_mstep(const Eigen::MatrixXd& x, const Eigen::MatrixXd& resp,
                FlatState& st, const EmConfig& cfg) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  const int k = static_cast<int>(resp.cols());
  std::vector<bool> starved(k, false);
  for (int j = 0; j < k; ++j) {
    const double mass = resp.col(j).sum();
    if (mass < cfg.reseed_frac * n) {
      starved[j] = true;
      continue;
    }
    Eigen::VectorXd mu = (resp.col(j).transpose() * x).transpose() / mass;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < n; ++i) {
      const Eigen::VectorXd r = x.row(i).transpose() - mu;
      cov += resp(i, j) * (r * r.transpose());
    }
    cov /= mass;
    cov += cfg.cov_reg * Eigen::MatrixXd::Identity(d, d);
    st.means[j] = std::move(mu);
    st.covs[j] = 0.5 * (cov + cov.transpose());
    st.priors[j] = mass / static_cast<double>(n);
  }
  if (std::any_of(starved.begin(), starved.end(), [](bool b) { return b; }))
    flat_reseed(x, starved, st, cfg.cov_reg);
}

FlatState flat_init(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                    int k, const EmConfig& cfg) {
  const int n = static_cast<int>(x.rows());
  const int d = static_cast<int>(x.cols());
  FlatState st;
  st.priors.assign(k, 0.0);
  st.means.assign(k, Eigen::VectorXd::Zero(d));
  st.covs.assign(k, Eigen::MatrixXd::Zero(d, d));
  std::vector<int> counts(k, 0);
  for (int i = 0; i < n; ++i) {
    counts[labels[i]]++;
    st.means[labels[i]] += x.row(i).transpose();
  }
  std::vector<bool> starved(k, false);
  for (int j = 0; j < k; ++j) {
    if (counts[j] == 0) {
      starved[j] = true;
      continue;
    }
    st.means[j] /= static_cast<double>(counts[j]);
  }
  for (int i = 0; i < n; ++i) {
    const int j = labels[i];
    if (starved[j]) continue;
    const Eigen::VectorXd r = x.row(i).transpose() - st.means[j];
    st.covs[j] += r * r.transpose();
  }
  for (int j = 0; j < k; ++j) {
    if (starved[j]) continue;
    st.covs[j] /= static_cast<double>(counts[j]);
    st.covs[j] += cfg.cov_reg * Eigen::MatrixXd::Identity(d, d);
    st.priors[j] = static_cast<double>(counts[j]) / static_cast<double>(n);
  }
  if (std::any_of(starved.begin(), starved.end(), [](bool b) { return b; }))
    flat_reseed(x, starved, st, cfg.cov_reg);
  return st;
}

/// EM in a flat coordinate space with an ascent guard: a candidate step that
/// lowers the training log-likelihood (regularization and reseeding are not
/// exact ascent steps) is rejected and the loop stops.
std::pair<FlatState, std::vector<double>> flat_em(
    const Eigen::MatrixXd& x, const std::vector<int>& labels, int k,
    const EmConfig& cfg) {
  FlatState st = flat_init(x, labels, k, cfg);
  Eigen::MatrixXd resp;
  double ll = flat_estep(x, st, resp);
  std::vector<double> trace{ll};
  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    FlatState candidate = st;
    flat_mstep(x, resp, candidate, cfg);
    Eigen::MatrixXd resp2;
    const double ll2 = flat_estep(x, candidate, resp2);
    if (ll2 < ll) break;
    st = std::move(candidate);
    resp = std::move(resp2);
    trace.push_back(ll2);
    if (ll2 - ll < cfg.ll_tol) break;
    ll = ll2;
  }
  return {std::move(st), std::move(trace)};
}

Mixture flat_to_mixture(Variant v, ManifoldId m, const FlatState& st,
                        std::vector<double> trace,
                        std::optional<Point> base) {
  Mixture out;
  out.variant = v;
  out.manifold = m;
  out.tangent_base = std::move(base);
  out.train_log = std::move(trace);
  for (size_t j = 0; j < st.priors.size(); ++j)
    out.components.push_back({st.priors[j], st.means[j], st.covs[j]});
  return out;
}

}  // namespace

std::string variant_name(Variant v) {
  return variant_names[static_cast<int>(v)];
}

Variant parse_variant(const std::string& name) {
  for (int i = 0; i < 3; ++i)
    if (name == variant_names[i]) return static_cast<Variant>(i);
  throw std::invalid_argument("unknown variant '" + name +
                              "'; expected euclidean, tangent, or riemannian");
}

int embed_dim(ManifoldId m) {
  return m.kind == ManifoldKind::Sphere ? m.size + 1
                                        : m.size * (m.size + 1) / 2;
}

Eigen::VectorXd embed(const Point& p) {
  if (p.manifold.kind == ManifoldKind::Sphere) return p.coords;
  const int d = p.manifold.size;
  const Eigen::MatrixXd mat = p.matrix();
  Eigen::VectorXd out(embed_dim(p.manifold));
  int k = 0;
  for (int i = 0; i < d; ++i) out[k++] = mat(i, i);
  const double rt2 = std::sqrt(2.0);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) out[k++] = rt2 * mat(i, j);
  return out;
}

std::vector<int> init_shared(const std::vector<Point>& data, int k,
                             Rng& rng) {
  if (k < 1) throw std::invalid_argument("init_shared: k must be positive");
  const int n = static_cast<int>(data.size());
  if (n < k)
    throw std::invalid_argument("init_shared: fewer points than clusters");
  check_data(data, data.front().manifold, "init_shared");

  int distinct = 0;
  for (int i = 0; i < n && distinct < k; ++i) {
    bool fresh = true;
    for (int j = 0; j < i && fresh; ++j)
      if (data[i].coords == data[j].coords) fresh = false;
    if (fresh) ++distinct;
  }
  if (distinct < k)
    throw std::invalid_argument(
        "init_shared: fewer than k distinct points (" +
        std::to_string(distinct) + " < " + std::to_string(k) + ")");

  // k-means++ seeding on geodesic distances
  std::vector<Point> centers;
  centers.push_back(data[rng.uniform_int(n)]);
  std::vector<double> d2(n);
  for (int j = 1; j < k; ++j) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const Point& c : centers)
        best = std::min(best, distance(data[i], c));
      d2[i] = best * best;
      total += d2[i];
    }
    const double u = rng.uniform() * total;
    double acc = 0.0;
    int pick = n - 1;
    for (int i = 0; i < n; ++i) {
      acc += d2[i];
      if (u < acc) {
        pick = i;
        break;
      }
    }
    centers.push_back(data[pick]);
  }

  MeanConfig mean_cfg;
  mean_cfg.warn_hemisphere = false;
  std::vector<int> labels(n, -1);
  for (int round = 0; round < 50; ++round) {
    std::vector<int> next(n);
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = distance(data[i], centers[0]);
      for (int j = 1; j < k; ++j) {
        const double dj = distance(data[i], centers[j]);
        if (dj < best_d) {
          best_d = dj;
          best = j;
        }
      }
      next[i] = best;
    }
    // revive empty clusters at the datum farthest from its own center
    std::vector<int> counts(k, 0);
    for (int label : next) counts[label]++;
    for (int j = 0; j < k; ++j) {
      if (counts[j] > 0) continue;
      int far = 0;
      double far_d = -1.0;
      for (int i = 0; i < n; ++i) {
        if (counts[next[i]] <= 1) continue;  // don't orphan a singleton
        const double di = distance(data[i], centers[next[i]]);
        if (di > far_d) {
          far_d = di;
          far = i;
        }
      }
      counts[next[far]]--;
      next[far] = j;
      counts[j] = 1;
      centers[j] = data[far];
    }
    const bool stable = next == labels;
    labels = std::move(next);
    if (stable) break;
    for (int j = 0; j < k; ++j) {
      std::vector<Point> members;
      for (int i = 0; i < n; ++i)
        if (labels[i] == j) members.push_back(data[i]);
      if (members.empty()) continue;
      try {
        centers[j] = frechet_mean(members, {}, mean_cfg);
      } catch (const ConvergenceError& e) {
        centers[j] = e.last_iterate;
      } catch (const CutLocusError&) {
        // keep the previous center when the update is undefined
      }
    }
  }
  return labels;
}

Mixture fit_euclidean(const std::vector<Point>& data,
                      const std::vector<int>& assignments,
                      const EmConfig& cfg) {
  const ManifoldId m = data.empty() ? sphere(2) : data.front().manifold;
  check_data(data, m, "fit_euclidean");
  const int k = check_assignments(assignments, data.size(), "fit_euclidean");
  Eigen::MatrixXd x(data.size(), embed_dim(m));
  for (size_t i = 0; i < data.size(); ++i)
    x.row(static_cast<Eigen::Index>(i)) = embed(data[i]).transpose();
  auto [st, trace] = flat_em(x, assignments, k, cfg);
  return flat_to_mixture(Variant::Euclidean, m, st, std::move(trace),
                         std::nullopt);
}

Mixture fit_tangent(const std::vector<Point>& data, const Point& base,
                    const std::vector<int>& assignments,
                    const EmConfig& cfg) {
  check_data(data, base.manifold, "fit_tangent");
  const int k = check_assignments(assignments, data.size(), "fit_tangent");
  const TangentBasis basis = tangent_basis(base);
  Eigen::MatrixXd x(data.size(), base.manifold.intrinsic_dim());
  for (size_t i = 0; i < data.size(); ++i) {
    try {
      x.row(static_cast<Eigen::Index>(i)) =
          to_coords(basis, log_map(base, data[i])).transpose();
    } catch (const CutLocusError&) {
      throw CutLocusError(
          "fit_tangent: datum " + std::to_string(i) +
          " lies at the cut locus of the basepoint; a single tangent space "
          "cannot represent it");
    }
  }
  auto [st, trace] = flat_em(x, assignments, k, cfg);
  return flat_to_mixture(Variant::Tangent, base.manifold, st,
                         std::move(trace), base);
}

namespace {

// ---------------------------------------------------------------------------
// Riemannian EM internals.
// ---------------------------------------------------------------------------

struct RiemComponent {
  double prior = 0.0;
  Point mean;
  Eigen::MatrixXd cov;
};

Mixture riem_to_mixture(ManifoldId m, const std::vector<RiemComponent>& comps,
                        std::vector<double> trace) {
  Mixture out;
  out.variant = Variant::Riemannian;
  out.manifold = m;
  out.train_log = std::move(trace);
  for (const RiemComponent& c : comps)
    out.components.push_back({c.prior, c.mean.coords, c.cov});
  return out;
}

double riem_estep(const std::vector<Point>& data,
                  const std::vector<RiemComponent>& comps,
                  Eigen::MatrixXd& resp) {
  Mixture view = riem_to_mixture(data.front().manifold, comps, {});
  MixtureEval eval(view);
  const int n = static_cast<int>(data.size());
  const int k = eval.k();
  resp.resize(n, k);
  double ll = 0.0;
  Eigen::VectorXd terms(k);
  for (int i = 0; i < n; ++i) {
    eval.log_terms(data[i], terms);
    const double lse = log_sum_exp(terms);
    ll += lse;
    for (int j = 0; j < k; ++j) resp(i, j) = std::exp(terms[j] - lse);
  }
  return ll;
}

}  // namespace

Mixture fit_riemannian(const std::vector<Point>& data,
                       const std::vector<int>& assignments,
                       const EmConfig& cfg) {
  const ManifoldId m = data.empty() ? sphere(2) : data.front().manifold;
  check_data(data, m, "fit_riemannian");
  const int k = check_assignments(assignments, data.size(), "fit_riemannian");
  const int n = static_cast<int>(data.size());
  const int dim = m.intrinsic_dim();
  const Eigen::MatrixXd reg_eye =
      cfg.cov_reg * Eigen::MatrixXd::Identity(dim, dim);

  MeanConfig mean_cfg;
  mean_cfg.warn_hemisphere = false;

  // initial parameters from the hard clusters
  std::vector<RiemComponent> comps(k);
  {
    std::vector<std::vector<Point>> members(k);
    for (int i = 0; i < n; ++i) members[assignments[i]].push_back(data[i]);
    // a cluster someone left empty: seed it at the farthest datum
    for (int j = 0; j < k; ++j)
      if (members[j].empty()) members[j].push_back(data[n - 1]);
    for (int j = 0; j < k; ++j) {
      try {
        comps[j].mean = frechet_mean(members[j], {}, mean_cfg);
      } catch (const ConvergenceError& e) {
        comps[j].mean = e.last_iterate;
      }
      comps[j].cov =
          tangent_covariance(members[j], comps[j].mean, false) + reg_eye;
      comps[j].prior = static_cast<double>(members[j].size()) /
                       static_cast<double>(n);
    }
    double total = 0.0;
    for (const RiemComponent& c : comps) total += c.prior;
    for (RiemComponent& c : comps) c.prior /= total;
  }

  Eigen::MatrixXd resp;
  double ll = riem_estep(data, comps, resp);
  std::vector<double> trace{ll};

  for (int iter = 0; iter < cfg.max_iters; ++iter) {
    std::vector<RiemComponent> candidate = comps;
    std::vector<int> starved;
    for (int j = 0; j < k; ++j) {
      const double mass = resp.col(j).sum();
      if (mass < cfg.reseed_frac * n) {
        starved.push_back(j);
        continue;
      }
      std::vector<double> w(n);
      for (int i = 0; i < n; ++i) w[i] = resp(i, j) / mass;
      try {
        candidate[j].mean = frechet_mean(data, w, mean_cfg);
      } catch (const ConvergenceError& e) {
        candidate[j].mean = e.last_iterate;
      } catch (const CutLocusError&) {
        // keep the previous mean when some datum is antipodal to an iterate
      }
      std::vector<double> col(n);
      for (int i = 0; i < n; ++i) col[i] = resp(i, j);
      candidate[j].cov =
          tangent_covariance(data, candidate[j].mean, col) + reg_eye;
      candidate[j].prior = mass / static_cast<double>(n);
    }
    if (!starved.empty()) {
      // lowest mixture density under the surviving components
      std::vector<RiemComponent> alive;
      for (int j = 0; j < k; ++j)
        if (std::find(starved.begin(), starved.end(), j) == starved.end())
          alive.push_back(candidate[j]);
      Eigen::VectorXd score = Eigen::VectorXd::Zero(n);
      if (!alive.empty()) {
        Mixture view = riem_to_mixture(m, alive, {});
        MixtureEval eval(view);
        Eigen::VectorXd terms(eval.k());
        for (int i = 0; i < n; ++i) {
          eval.log_terms(data[i], terms);
          score[i] = log_sum_exp(terms);
        }
      }
      std::vector<bool> used(n, false);
      for (int j : starved) {
        int pick = 0;
        double worst = std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i)
          if (!used[i] && score[i] < worst) {
            worst = score[i];
            pick = i;
          }
        used[pick] = true;
        candidate[j].mean = data[pick];
        candidate[j].cov = tangent_covariance(data, data[pick],
                                              std::vector<double>(n, 1.0)) +
                           reg_eye;
        candidate[j].prior = 1.0 / static_cast<double>(n);
      }
      double total = 0.0;
      for (const RiemComponent& c : candidate) total += c.prior;
      for (RiemComponent& c : candidate) c.prior /= total;
    }

    Eigen::MatrixXd resp2;
    double ll2 = riem_estep(data, candidate, resp2);
    // The weighted Fréchet mean is only the exact M-step for isotropic
    // covariances, so the full step can lose likelihood.  Damp it along
    // the geodesic toward the candidate means instead of stopping; the
    // t = 0 level updates only covariances and priors, which are exact
    // conditional maximizers and cannot descend.  Reseed iterations keep
    // the plain accept-or-stop rule: there is no geodesic path toward a
    // component that was just replanted elsewhere.
    if (ll2 < ll && starved.empty()) {
      for (double t : {0.5, 0.25, 0.0}) {
        std::vector<RiemComponent> damped = comps;
        for (int j = 0; j < k; ++j) {
          if (t > 0.0) {
            try {
              Tangent dir = log_map(comps[j].mean, candidate[j].mean);
              dir.coords *= t;
              damped[j].mean = exp_map(comps[j].mean, dir);
            } catch (const CutLocusError&) {
              // keep the previous mean
            }
          }
          std::vector<double> col(n);
          for (int i = 0; i < n; ++i) col[i] = resp(i, j);
          damped[j].cov =
              tangent_covariance(data, damped[j].mean, col) + reg_eye;
          damped[j].prior = candidate[j].prior;
        }
        const double ll_t = riem_estep(data, damped, resp2);
        if (ll_t >= ll) {
          candidate = std::move(damped);
          ll2 = ll_t;
          break;
        }
      }
    }
    if (ll2 < ll) break;
    comps = std::move(candidate);
    resp = std::move(resp2);
    trace.push_back(ll2);
    if (ll2 - ll < cfg.ll_tol) break;
    ll = ll2;
  }
  return riem_to_mixture(m, comps, std::move(trace));
}

double loglik(const Mixture& m, const std::vector<Point>& data,
              LoglikStats* stats) {
  check_data(data, m.manifold, "loglik");
  MixtureEval eval(m);
  double total = 0.0;
  long incidents = 0;
  Eigen::VectorXd terms(eval.k());
  for (const Point& p : data) {
    const bool representable = eval.log_terms(p, terms);
    if (!representable) ++incidents;
    total += log_sum_exp(terms);
  }
  if (stats) stats->cut_locus_incidents = incidents;
  return total;
}

Eigen::MatrixXd responsibilities(const Mixture& m,
                                 const std::vector<Point>& data) {
  check_data(data, m.manifold, "responsibilities");
  MixtureEval eval(m);
  Eigen::MatrixXd resp(data.size(), eval.k());
  Eigen::VectorXd terms(eval.k());
  for (size_t i = 0; i < data.size(); ++i) {
    eval.log_terms(data[i], terms);
    const double lse = log_sum_exp(terms);
    for (int j = 0; j < eval.k(); ++j)
      resp(static_cast<Eigen::Index>(i), j) = std::exp(terms[j] - lse);
  }
  return resp;
}

std::vector<GridCell> density_grid(const Mixture& m, double resolution_deg) {
  if (m.manifold != sphere(2))
    throw UnsupportedError(
        "density_grid: latitude-longitude export only exists on sphere:2");
  if (!(resolution_deg > 0.0))
    throw std::invalid_argument("density_grid: resolution must be positive");
  const int nlat = std::max(1, static_cast<int>(std::lround(180.0 / resolution_deg)));
  const int nlon = std::max(1, static_cast<int>(std::lround(360.0 / resolution_deg)));
  const double dlat = 180.0 / nlat;
  const double dlon = 360.0 / nlon;
  const double rad = kPi / 180.0;

  MixtureEval eval(m);
  Eigen::VectorXd terms(eval.k());
  std::vector<GridCell> out;
  out.reserve(static_cast<size_t>(nlat) * nlon);
  for (int i = 0; i < nlat; ++i) {
    const double lat = -90.0 + (i + 0.5) * dlat;
    const double band = (std::sin((lat + 0.5 * dlat) * rad) -
                         std::sin((lat - 0.5 * dlat) * rad)) *
                        (dlon * rad);
    for (int j = 0; j < nlon; ++j) {
      const double lon = -180.0 + (j + 0.5) * dlon;
      Eigen::VectorXd v(3);
      v << std::cos(lat * rad) * std::cos(lon * rad),
          std::cos(lat * rad) * std::sin(lon * rad), std::sin(lat * rad);
      GridCell cell;
      cell.lat_deg = lat;
      cell.lon_deg = lon;
      cell.point = make_point(sphere(2), v / v.norm());
      eval.log_terms(cell.point, terms);
      cell.density = std::exp(log_sum_exp(terms));
      cell.solid_angle = band;
      out.push_back(std::move(cell));
    }
  }
  return out;
}

}  // namespace manifoldmix
