#pragma once

#include <string>
#include <vector>

#include "manifoldmix/gmm.hpp"
#include "manifoldmix/manifold.hpp"

namespace manifoldmix {

/// Round-trip exact decimal representation of a double ("%.17g"); every
/// CSV writer in the library goes through this so repeated runs are
/// byte-identical.
std::string format_double(double x);

/// Point CSV format: a comment header "# manifold=sphere:d" or
/// "# manifold=spd:d", then one point per row.  Sphere rows carry the d+1
/// embedding coordinates; SPD rows carry the d(d+1)/2 upper-triangle
/// entries in row-major order, unscaled.  Rows are ingested through
/// project_to_manifold.  Malformed rows raise std::invalid_argument naming
/// the row.
void write_points_csv(const std::string& path,
                      const std::vector<Point>& points);
std::vector<Point> read_points_csv(const std::string& path);

std::string points_to_csv(const std::vector<Point>& points);
std::vector<Point> points_from_csv(const std::string& text);

/// Model documents are JSON with variant, manifold, components (priors,
/// means, row-major covariance rows), the tangent basepoint when present,
/// the training log, and a "basis" string recording the tangent-basis
/// convention the coordinates are relative to.  Doubles round-trip
/// bit-exactly; serialize -> parse -> serialize is the identity.
std::string mixture_to_json(const Mixture& m);
Mixture mixture_from_json(const std::string& text);
void save_mixture(const std::string& path, const Mixture& m);
Mixture load_mixture(const std::string& path);

}  // namespace manifoldmix
