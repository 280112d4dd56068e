#pragma once

// Labeled datasets: CSV ingestion, min-max scaling, stratified splits and folds.

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "vanish/errors.hpp"
#include "vanish/polycore.hpp"

namespace vanish {

/// Per-column affine map onto [-1, 1]. Constant columns map to 0.
struct MinMaxScaler {
  Vector lo;
  Vector hi;

  static MinMaxScaler fit(const Matrix& x) {
    MinMaxScaler s;
    s.lo = x.colwise().minCoeff().transpose();
    s.hi = x.colwise().maxCoeff().transpose();
    return s;
  }

  Matrix transform(const Matrix& x) const {
    Matrix out(x.rows(), x.cols());
    for (Index j = 0; j < x.cols(); ++j) {
      const double range = hi(j) - lo(j);
      if (range > 0.0) {
        out.col(j) = ((x.col(j).array() - lo(j)) * (2.0 / range) - 1.0).matrix();
      } else {
        out.col(j).setZero();
      }
    }
    return out;
  }

  /// Inverse of transform; a constant column comes back as its constant.
  Matrix inverse_transform(const Matrix& x) const {
    Matrix out(x.rows(), x.cols());
    for (Index j = 0; j < x.cols(); ++j) {
      const double range = hi(j) - lo(j);
      if (range > 0.0) {
        out.col(j) = ((x.col(j).array() + 1.0) * (range / 2.0) + lo(j)).matrix();
      } else {
        out.col(j).setConstant(lo(j));
      }
    }
    return out;
  }
};

struct LabeledDataset {
  PointSet points;
  std::vector<int> labels;
  std::vector<std::string> class_names;  // id -> original label text
  std::string name;
  std::optional<MinMaxScaler> scaling;  // set once the points have been scaled

  Index size() const { return points.size(); }
  Index dim() const { return points.dim(); }
  int num_classes() const { return static_cast<int>(class_names.size()); }

  void validate() const {
    if (static_cast<Index>(labels.size()) != points.size()) throw InputError("label count does not match point count");
    for (int l : labels) {
      if (l < 0 || l >= num_classes()) throw InputError("label id out of range");
    }
  }

  /// Rows belonging to class c, in original order.
  std::vector<Index> class_rows(int c) const {
    std::vector<Index> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == c) out.push_back(static_cast<Index>(i));
    }
    return out;
  }

  Matrix class_points(int c) const {
    const auto rows = class_rows(c);
    Matrix out(static_cast<Index>(rows.size()), dim());
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = points.row(rows[i]);
    return out;
  }

  LabeledDataset subset(const std::vector<Index>& rows) const {
    if (rows.empty()) throw InputError("empty subset");
    Matrix m(static_cast<Index>(rows.size()), dim());
    LabeledDataset out;
    out.labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      m.row(static_cast<Index>(i)) = points.row(rows[i]);
      out.labels.push_back(labels[static_cast<std::size_t>(rows[i])]);
    }
    out.points = PointSet(std::move(m));
    out.class_names = class_names;
    out.name = name;
    out.scaling = scaling;
    return out;
  }

  LabeledDataset with_points(Matrix m) const {
    LabeledDataset out = *this;
    out.points = PointSet(std::move(m));
    return out;
  }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      cells.push_back(cell);
      cell.clear();
    } else if (ch != '\r') {
      cell.push_back(ch);
    }
  }
  cells.push_back(cell);
  for (auto& c : cells) {
    const auto b = c.find_first_not_of(" \t");
    const auto e = c.find_last_not_of(" \t");
    c = b == std::string::npos ? std::string() : c.substr(b, e - b + 1);
  }
  return cells;
}

inline bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  errno = 0;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return errno == 0 && end == s.c_str() + s.size() && std::isfinite(out);
}

}  // namespace detail

/// Parses CSV text. `label_column` indexes the label (negative counts from the
/// end); every other column must be numeric. Labels are mapped to contiguous
/// ids in lexicographic order of their text. Rows are 1-based in errors.
inline LabeledDataset parse_csv(std::istream& in, int label_column, bool has_header, const std::string& name = "") {
  std::vector<std::vector<std::string>> rows;
  std::string line;
  long row_no = 0;
  long first_data_row = has_header ? 2 : 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (row_no == 1 && has_header) continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    rows.push_back(detail::split_csv_line(line));
  }
  if (rows.empty()) throw InputError("CSV contains no data rows");
  const long ncols = static_cast<long>(rows.front().size());
  const long label = label_column < 0 ? ncols + label_column : label_column;
  if (label < 0 || label >= ncols) throw InputError("label column " + std::to_string(label_column) + " not present");
  if (ncols < 2) throw InputError("CSV needs at least one feature column besides the label");

  std::set<std::string> names;
  for (const auto& r : rows) {
    if (static_cast<long>(r.size()) != ncols) throw InputError("ragged CSV row");
    names.insert(r[static_cast<std::size_t>(label)]);
  }
  LabeledDataset ds;
  ds.name = name;
  ds.class_names.assign(names.begin(), names.end());
  std::map<std::string, int> ids;
  for (std::size_t i = 0; i < ds.class_names.size(); ++i) ids[ds.class_names[i]] = static_cast<int>(i);

  Matrix m(static_cast<Index>(rows.size()), ncols - 1);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    Index out_col = 0;
    for (long j = 0; j < ncols; ++j) {
      if (j == label) continue;
      double v;
      if (!detail::parse_double(rows[i][static_cast<std::size_t>(j)], v)) {
        throw ParseError("non-numeric feature '" + rows[i][static_cast<std::size_t>(j)] + "'",
                         static_cast<long>(i) + first_data_row, j + 1);
      }
      m(static_cast<Index>(i), out_col++) = v;
    }
    ds.labels.push_back(ids[rows[i][static_cast<std::size_t>(label)]]);
  }
  ds.points = PointSet(std::move(m));
  return ds;
}

inline LabeledDataset load_csv(const std::string& path, int label_column = -1, bool has_header = true) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open " + path);
  std::string name = path;
  if (auto slash = name.find_last_of('/'); slash != std::string::npos) name = name.substr(slash + 1);
  if (auto dot = name.find_last_of('.'); dot != std::string::npos) name = name.substr(0, dot);
  return parse_csv(f, label_column, has_header, name);
}

/// Unlabeled numeric CSV (every column is a coordinate).
inline PointSet load_points_csv(const std::string& path, bool has_header = false) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  long row_no = 0;
  while (std::getline(f, line)) {
    ++row_no;
    if (row_no == 1 && has_header) continue;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = detail::split_csv_line(line);
    std::vector<double> r;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      double v;
      if (!detail::parse_double(cells[j], v)) throw ParseError("non-numeric cell '" + cells[j] + "'", row_no, static_cast<long>(j) + 1);
      r.push_back(v);
    }
    rows.push_back(std::move(r));
  }
  return PointSet::from_rows(rows);
}

/// The dataset with min-max scaling fitted on `fit_on` applied.
inline LabeledDataset apply_scaling(const LabeledDataset& ds, const MinMaxScaler& scaler) {
  LabeledDataset out = ds.with_points(scaler.transform(ds.points.matrix()));
  out.scaling = scaler;
  return out;
}

struct TrainTestSplit {
  LabeledDataset train;
  LabeledDataset test;
  std::vector<Index> train_rows;
  std::vector<Index> test_rows;
};

/// Stratified random split: round(train_fraction * n_c) rows of every class
/// go to training, clamped so both parts keep at least one row.
inline TrainTestSplit split_train_test(const LabeledDataset& ds, double train_fraction, std::uint64_t seed) {
  ds.validate();
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) throw InputError("train_fraction must lie in (0, 1)");
  std::mt19937_64 rng(seed);
  TrainTestSplit out;
  for (int c = 0; c < ds.num_classes(); ++c) {
    auto rows = ds.class_rows(c);
    if (rows.size() < 2) throw InputError("class '" + ds.class_names[static_cast<std::size_t>(c)] + "' has fewer than 2 rows");
    std::shuffle(rows.begin(), rows.end(), rng);
    auto n_train = static_cast<std::size_t>(std::lround(train_fraction * static_cast<double>(rows.size())));
    n_train = std::clamp<std::size_t>(n_train, 1, rows.size() - 1);
    out.train_rows.insert(out.train_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test_rows.insert(out.test_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_train), rows.end());
  }
  std::sort(out.train_rows.begin(), out.train_rows.end());
  std::sort(out.test_rows.begin(), out.test_rows.end());
  out.train = ds.subset(out.train_rows);
  out.test = ds.subset(out.test_rows);
  return out;
}

/// Stratified k-fold assignment; returns fold id per row.
inline std::vector<int> stratified_folds(const LabeledDataset& ds, int folds, std::uint64_t seed) {
  if (folds < 2) throw InputError("need at least 2 folds");
  std::mt19937_64 rng(seed);
  std::vector<int> fold(static_cast<std::size_t>(ds.size()), 0);
  int next = 0;
  for (int c = 0; c < ds.num_classes(); ++c) {
    auto rows = ds.class_rows(c);
    std::shuffle(rows.begin(), rows.end(), rng);
    for (Index r : rows) {
      fold[static_cast<std::size_t>(r)] = next;
      next = (next + 1) % folds;
    }
  }
  return fold;
}

}  // namespace vanish
