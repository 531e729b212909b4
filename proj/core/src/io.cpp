#include "manifoldmix/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace manifoldmix {

namespace {

using nlohmann::json;

/// Identifies the tangent-frame convention coordinates are relative to:
/// spheres use the Householder frame anchored at the first axis, SPD uses
/// the square-root congruence frame.  A reader seeing a different tag must
/// not reinterpret the numbers.
constexpr const char* kBasisTag = "householder-e1/sqrt-congruence";

int row_width(ManifoldId m) {
  return m.kind == ManifoldKind::Sphere ? m.size + 1
                                        : m.size * (m.size + 1) / 2;
}

std::vector<double> parse_row(const std::string& line, int row_no) {
  std::vector<double> out;
  size_t start = 0;
  while (start <= line.size()) {
    size_t comma = line.find(',', start);
    const std::string field =
        line.substr(start, comma == std::string::npos ? comma : comma - start);
    size_t used = 0;
    double value = 0.0;
    try {
      value = std::stod(field, &used);
    } catch (const std::exception&) {
      throw std::invalid_argument("points csv: row " + std::to_string(row_no) +
                                  " has a non-numeric field '" + field + "'");
    }
    while (used < field.size() &&
           (field[used] == ' ' || field[used] == '\t' || field[used] == '\r'))
      ++used;
    if (used != field.size())
      throw std::invalid_argument("points csv: row " + std::to_string(row_no) +
                                  " has a malformed field '" + field + "'");
    out.push_back(value);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(arr.size());
  for (size_t i = 0; i < arr.size(); ++i)
    v[static_cast<Eigen::Index>(i)] = arr.at(i).get<double>();
  return v;
}

}  // namespace

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string points_to_csv(const std::vector<Point>& points) {
  if (points.empty())
    throw std::invalid_argument("points csv: nothing to write");
  const ManifoldId m = points.front().manifold;
  for (const Point& p : points)
    if (p.manifold != m)
      throw std::invalid_argument(
          "points csv: all points must share one manifold");
  std::string out = "# manifold=" + m.str() + "\n";
  for (const Point& p : points) {
    if (m.kind == ManifoldKind::Sphere) {
      for (Eigen::Index i = 0; i < p.coords.size(); ++i) {
        if (i) out += ',';
        out += format_double(p.coords[i]);
      }
    } else {
      const Eigen::MatrixXd mat = p.matrix();
      bool first = true;
      for (int r = 0; r < m.size; ++r)
        for (int c = r; c < m.size; ++c) {
          if (!first) out += ',';
          first = false;
          out += format_double(mat(r, c));
        }
    }
    out += '\n';
  }
  return out;
}

std::vector<Point> points_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line.rfind("# manifold=", 0) != 0)
    throw std::invalid_argument(
        "points csv: missing '# manifold=...' header");
  std::string id = line.substr(std::string("# manifold=").size());
  if (!id.empty() && id.back() == '\r') id.pop_back();
  const ManifoldId m = ManifoldId::parse(id);
  const int width = row_width(m);

  std::vector<Point> out;
  int row_no = 0;
  while (std::getline(in, line)) {
    ++row_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<double> fields = parse_row(line, row_no);
    if (static_cast<int>(fields.size()) != width)
      throw std::invalid_argument(
          "points csv: row " + std::to_string(row_no) + " has " +
          std::to_string(fields.size()) + " fields, expected " +
          std::to_string(width));
    if (m.kind == ManifoldKind::Sphere) {
      Eigen::VectorXd raw(width);
      for (int i = 0; i < width; ++i) raw[i] = fields[i];
      out.push_back(project_to_manifold(m, raw));
    } else {
      Eigen::MatrixXd mat(m.size, m.size);
      int k = 0;
      for (int r = 0; r < m.size; ++r)
        for (int c = r; c < m.size; ++c) {
          mat(r, c) = fields[k];
          mat(c, r) = fields[k];
          ++k;
        }
      Eigen::VectorXd raw(m.size * m.size);
      for (int r = 0; r < m.size; ++r)
        for (int c = 0; c < m.size; ++c) raw[r * m.size + c] = mat(r, c);
      out.push_back(project_to_manifold(m, raw));
    }
  }
  return out;
}

void write_points_csv(const std::string& path,
                      const std::vector<Point>& points) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::invalid_argument("points csv: cannot open '" + path +
                                "' for writing");
  out << points_to_csv(points);
}

std::vector<Point> read_points_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::invalid_argument("points csv: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return points_from_csv(ss.str());
}

std::string mixture_to_json(const Mixture& m) {
  json doc;
  doc["variant"] = variant_name(m.variant);
  doc["manifold"] = m.manifold.str();
  doc["basis"] = kBasisTag;
  json comps = json::array();
  for (const Component& c : m.components) {
    json jc;
    jc["prior"] = c.prior;
    jc["mean"] = vector_to_json(c.mean);
    json cov = json::array();
    for (Eigen::Index r = 0; r < c.cov.rows(); ++r)
      cov.push_back(vector_to_json(c.cov.row(r).transpose()));
    jc["cov"] = cov;
    comps.push_back(std::move(jc));
  }
  doc["components"] = std::move(comps);
  if (m.tangent_base) doc["tangent_base"] = vector_to_json(m.tangent_base->coords);
  doc["train_log"] = m.train_log;
  return doc.dump(2);
}

Mixture mixture_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    Mixture m;
    m.variant = parse_variant(doc.at("variant").get<std::string>());
    m.manifold = ManifoldId::parse(doc.at("manifold").get<std::string>());
    if (doc.at("basis").get<std::string>() != kBasisTag)
      throw std::invalid_argument(
          "mixture json: coordinates are relative to an unknown tangent "
          "frame '" +
          doc.at("basis").get<std::string>() + "'");
    for (const json& jc : doc.at("components")) {
      Component c;
      c.prior = jc.at("prior").get<double>();
      c.mean = vector_from_json(jc.at("mean"));
      const json& rows = jc.at("cov");
      const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
      c.cov.resize(n, n);
      for (Eigen::Index r = 0; r < n; ++r) {
        const Eigen::VectorXd row = vector_from_json(rows.at(r));
        if (row.size() != n)
          throw std::invalid_argument(
              "mixture json: covariance is not square");
        c.cov.row(r) = row.transpose();
      }
      m.components.push_back(std::move(c));
    }
    if (doc.contains("tangent_base"))
      m.tangent_base =
          make_point(m.manifold, vector_from_json(doc.at("tangent_base")));
    if (m.variant == Variant::Tangent && !m.tangent_base)
      throw std::invalid_argument(
          "mixture json: tangent model without a basepoint");
    m.train_log = doc.at("train_log").get<std::vector<double>>();
    return m;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("mixture json: ") + e.what());
  }
}

void save_mixture(const std::string& path, const Mixture& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw std::invalid_argument("mixture json: cannot open '" + path +
                                "' for writing");
  out << mixture_to_json(m) << '\n';
}

Mixture load_mixture(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw std::invalid_argument("mixture json: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return mixture_from_json(ss.str());
}

}  // namespace manifoldmix
