#pragma once

// Grid samples of every vanishing polynomial of a 2-d model, for drawing
// zero-level sets with an external plotting tool.

#include <cstdio>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>

#include <nlohmann/json.hpp>

#include "vanish/basis.hpp"

namespace vanish {

struct GridBounds {
  double x_min = -2.0;
  double x_max = 2.0;
  double y_min = -2.0;
  double y_max = 2.0;
};

/// Row k = i * resolution + j holds the point (x_i, y_j).
struct ContourGrid {
  GridBounds bounds;
  int resolution = 0;
  Matrix points;  // resolution^2 x 2
  Matrix values;  // resolution^2 x |G|
  std::vector<int> degrees;
};

inline ContourGrid contour_grid(const BasisSet& basis, const GridBounds& bounds, int resolution) {
  if (resolution < 2) throw InputError("contour grid resolution must be >= 2");
  if (basis.registry.dim() != 2) throw InputError("contour grids need a 2-d model");
  if (!(bounds.x_max > bounds.x_min) || !(bounds.y_max > bounds.y_min)) throw InputError("contour bounds are empty");
  ContourGrid g;
  g.bounds = bounds;
  g.resolution = resolution;
  const Index n = static_cast<Index>(resolution) * resolution;
  g.points.resize(n, 2);
  const double dx = (bounds.x_max - bounds.x_min) / (resolution - 1);
  const double dy = (bounds.y_max - bounds.y_min) / (resolution - 1);
  for (int i = 0; i < resolution; ++i) {
    for (int j = 0; j < resolution; ++j) {
      const Index k = static_cast<Index>(i) * resolution + j;
      g.points(k, 0) = i + 1 == resolution ? bounds.x_max : bounds.x_min + i * dx;
      g.points(k, 1) = j + 1 == resolution ? bounds.y_max : bounds.y_min + j * dy;
    }
  }
  g.values = basis.evaluate_vanishing(g.points);
  g.degrees = basis.vanishing_degrees();
  return g;
}

namespace detail {

inline std::string exact(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

/// Header `x,y,g0,...` then resolution^2 rows.
inline void write_contour_csv(std::ostream& os, const ContourGrid& g) {
  os << "x,y";
  for (Index c = 0; c < g.values.cols(); ++c) os << ",g" << c;
  os << '\n';
  for (Index k = 0; k < g.points.rows(); ++k) {
    os << detail::exact(g.points(k, 0)) << ',' << detail::exact(g.points(k, 1));
    for (Index c = 0; c < g.values.cols(); ++c) os << ',' << detail::exact(g.values(k, c));
    os << '\n';
  }
}

inline void write_points_csv(std::ostream& os, const Matrix& pts) {
  for (Index i = 0; i < pts.rows(); ++i) {
    for (Index j = 0; j < pts.cols(); ++j) os << (j ? "," : "") << detail::exact(pts(i, j));
    os << '\n';
  }
}

inline nlohmann::ordered_json contour_json(const ContourGrid& g, const std::optional<PointSet>& knots) {
  nlohmann::ordered_json polys = nlohmann::ordered_json::array();
  for (Index c = 0; c < g.values.cols(); ++c) {
    std::vector<double> v(g.values.col(c).data(), g.values.col(c).data() + g.values.rows());
    polys.push_back({{"degree", g.degrees[static_cast<std::size_t>(c)]}, {"values", std::move(v)}});
  }
  std::vector<double> xs(static_cast<std::size_t>(g.points.rows()));
  std::vector<double> ys(xs.size());
  for (Index k = 0; k < g.points.rows(); ++k) {
    xs[static_cast<std::size_t>(k)] = g.points(k, 0);
    ys[static_cast<std::size_t>(k)] = g.points(k, 1);
  }
  nlohmann::ordered_json kj = nlohmann::ordered_json::array();
  if (knots) {
    for (Index i = 0; i < knots->size(); ++i) kj.push_back({knots->matrix()(i, 0), knots->matrix()(i, 1)});
  }
  return {{"bounds", {g.bounds.x_min, g.bounds.x_max, g.bounds.y_min, g.bounds.y_max}},
          {"resolution", g.resolution},
          {"x", std::move(xs)},
          {"y", std::move(ys)},
          {"polynomials", std::move(polys)},
          {"knots", std::move(kj)}};
}

enum class GridFormat { Csv, Json };

/// Writes the grid to `path`. CSV output puts the knots in `<path>.knots.csv`
/// (skipped when there are none); JSON embeds them.
inline void export_contour_grid(const BasisSet& basis, const std::optional<PointSet>& knots, const GridBounds& bounds,
                                int resolution, const std::string& path, GridFormat format = GridFormat::Csv) {
  const ContourGrid g = contour_grid(basis, bounds, resolution);
  std::ofstream f(path);
  if (!f) throw InputError("cannot write " + path);
  if (format == GridFormat::Json) {
    f << contour_json(g, knots).dump() << '\n';
    return;
  }
  write_contour_csv(f, g);
  if (knots) {
    std::ofstream k(path + ".knots.csv");
    if (!k) throw InputError("cannot write " + path + ".knots.csv");
    write_points_csv(k, knots->matrix());
  }
}

}  // namespace vanish
