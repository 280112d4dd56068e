#pragma once

// Class-wise vanishing polynomials as a feature map: a sample is described by
// the absolute values of every class's vanishing polynomials, so the block of
// its own class is close to zero.

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "vanish/basis.hpp"
#include "vanish/dataset.hpp"
#include "vanish/pursuit.hpp"

namespace vanish {

enum class Method { Proposed, Vca };

inline const char* method_name(Method m) { return m == Method::Proposed ? "proposed" : "vca"; }

struct TrainConfig {
  Method method = Method::Proposed;
  PursuitConfig pursuit;  // epsilon is shared with VCA
  int vca_max_degree = 10;
};

/// One fitted basis per class plus the ordered subset of each class's
/// vanishing polynomials that forms the feature layout.
class ClassFeatureModel {
 public:
  ClassFeatureModel() = default;

  ClassFeatureModel(Method method, std::vector<BasisSet> bases, std::vector<std::optional<PointSet>> knots,
                    std::vector<bool> truncated = {})
      : method_(method), bases_(std::move(bases)), knots_(std::move(knots)), truncated_(std::move(truncated)) {
    truncated_.resize(bases_.size(), false);
    layout_.reserve(bases_.size());
    for (const auto& b : bases_) layout_.push_back(b.vanishing);
    compile();
  }

  Method method() const noexcept { return method_; }
  int num_classes() const noexcept { return static_cast<int>(bases_.size()); }
  const BasisSet& basis(int c) const { return bases_.at(static_cast<std::size_t>(c)); }
  const std::optional<PointSet>& knots(int c) const { return knots_.at(static_cast<std::size_t>(c)); }
  const std::vector<PolyRef>& layout(int c) const { return layout_.at(static_cast<std::size_t>(c)); }
  std::optional<double> hd_fraction() const noexcept { return hd_fraction_; }
  /// Whether class c's fit stopped at a degree or reset cap.
  bool truncated(int c) const { return truncated_.at(static_cast<std::size_t>(c)); }
  int num_truncated() const { return static_cast<int>(std::count(truncated_.begin(), truncated_.end(), true)); }
  int dim() const { return bases_.empty() ? 0 : bases_.front().registry.dim(); }

  std::size_t feature_dim() const {
    std::size_t n = 0;
    for (const auto& l : layout_) n += l.size();
    return n;
  }

  double mean_degree() const {
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t c = 0; c < layout_.size(); ++c) {
      for (const auto& r : layout_[c]) {
        s += bases_[c].registry.poly(r).degree;
        ++n;
      }
    }
    return n ? s / static_cast<double>(n) : 0.0;
  }

  /// Absolute evaluations, classes concatenated in order. One row per point.
  Matrix extract(const Matrix& points) const {
    if (points.cols() != dim()) throw InputError("feature extraction dimension mismatch");
    Matrix out(points.rows(), static_cast<Index>(feature_dim()));
    Index col = 0;
    for (std::size_t c = 0; c < programs_.size(); ++c) {
      if (layout_[c].empty()) continue;
      const Matrix v = programs_[c].evaluate(points);
      out.middleCols(col, v.cols()) = v.cwiseAbs();
      col += v.cols();
    }
    return out;
  }

  ClassFeatureModel restricted(double fraction) const;

 private:
  void compile() {
    programs_.clear();
    for (std::size_t c = 0; c < bases_.size(); ++c) {
      programs_.emplace_back(bases_[c].registry, std::span<const PolyRef>(layout_[c]));
    }
  }

  Method method_ = Method::Proposed;
  std::vector<BasisSet> bases_;
  std::vector<std::optional<PointSet>> knots_;
  std::vector<bool> truncated_;
  std::vector<std::vector<PolyRef>> layout_;
  std::optional<double> hd_fraction_;
  std::vector<Program> programs_;
};

/// Keeps, per class, the ceil(fraction * |G_i|) polynomials of highest degree;
/// within a degree earlier-constructed polynomials win. Kept polynomials stay
/// in construction order.
inline ClassFeatureModel ClassFeatureModel::restricted(double fraction) const {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InputError("fraction must lie in (0, 1]");
  ClassFeatureModel out = *this;
  for (std::size_t c = 0; c < layout_.size(); ++c) {
    const auto& full = bases_[c].vanishing;
    std::vector<std::size_t> order(full.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return bases_[c].registry.poly(full[a]).degree > bases_[c].registry.poly(full[b]).degree;
    });
    const auto keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(full.size()) - 1e-9));
    order.resize(std::min(keep, order.size()));
    std::sort(order.begin(), order.end());
    out.layout_[c].clear();
    for (std::size_t i : order) out.layout_[c].push_back(full[i]);
  }
  out.hd_fraction_ = fraction;
  out.compile();
  return out;
}

inline ClassFeatureModel restrict_higher_degrees(const ClassFeatureModel& model, double fraction) {
  return model.restricted(fraction);
}

/// Fits one basis per class on that class's rows only.
inline ClassFeatureModel train_class_models(const LabeledDataset& train, const TrainConfig& cfg) {
  train.validate();
  if (train.num_classes() < 2) throw InputError("need at least 2 classes");
  std::vector<BasisSet> bases;
  std::vector<std::optional<PointSet>> knots;
  std::vector<bool> truncated;
  for (int c = 0; c < train.num_classes(); ++c) {
    const auto rows = train.class_rows(c);
    if (rows.empty()) throw InputError("class '" + train.class_names[static_cast<std::size_t>(c)] + "' has no points");
    const PointSet pts(train.class_points(c));
    if (cfg.method == Method::Proposed) {
      KnotModel m = fit(pts, cfg.pursuit);
      truncated.push_back(m.diagnostics.truncated);
      bases.push_back(std::move(m.basis));
      knots.emplace_back(std::move(m.knots));
    } else {
      VcaResult v = vca_fit(pts, cfg.pursuit.epsilon, cfg.vca_max_degree);
      truncated.push_back(v.truncated);
      bases.push_back(std::move(v.basis));
      knots.emplace_back(std::nullopt);
    }
  }
  return ClassFeatureModel(cfg.method, std::move(bases), std::move(knots), std::move(truncated));
}

inline Vector extract_features(const Vector& x, const ClassFeatureModel& model) {
  if (x.size() != model.dim()) throw InputError("feature extraction dimension mismatch");
  return model.extract(x.transpose()).row(0).transpose();
}

inline Matrix extract_features(const Matrix& points, const ClassFeatureModel& model) { return model.extract(points); }

/// One row per sample. Columns are named c<class>_g<k>, k indexing that
/// class's layout; an optional leading `label` column holds class ids.
inline void write_features_csv(std::ostream& os, const ClassFeatureModel& model, const Matrix& features,
                               const std::vector<int>* labels = nullptr) {
  if (features.cols() != static_cast<Index>(model.feature_dim())) throw InputError("feature matrix does not match layout");
  if (labels && static_cast<Index>(labels->size()) != features.rows()) throw InputError("label count mismatch");
  bool first = true;
  auto sep = [&]() -> std::ostream& {
    if (!first) os << ',';
    first = false;
    return os;
  };
  if (labels) sep() << "label";
  for (int c = 0; c < model.num_classes(); ++c) {
    for (std::size_t k = 0; k < model.layout(c).size(); ++k) sep() << 'c' << c << "_g" << k;
  }
  os << '\n';
  const auto old = os.precision(17);
  for (Index i = 0; i < features.rows(); ++i) {
    first = true;
    if (labels) sep() << (*labels)[static_cast<std::size_t>(i)];
    for (Index j = 0; j < features.cols(); ++j) sep() << features(i, j);
    os << '\n';
  }
  os.precision(old);
}

}  // namespace vanish
