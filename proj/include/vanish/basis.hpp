#pragma once

// Degree-t basis construction over two point sets: candidates are products of
// lower nonvanishing polynomials, residualized against F^{t-1} on the knots Z,
// then split by one SVD on the data X0 (tolerance eps) and two SVDs on Z
// (tolerance eta).

#include <span>
#include <vector>

#include "vanish/polycore.hpp"

namespace vanish {

/// Degree-1 candidates: the coordinate functions x_0 .. x_{d-1}.
inline std::vector<Polynomial> coordinate_candidates(const PolyRegistry& registry) {
  std::vector<Polynomial> out;
  out.reserve(static_cast<std::size_t>(registry.dim()));
  for (int j = 0; j < registry.dim(); ++j) {
    Combination c;
    c.base_terms.push_back({1.0, registry.coordinate_ref(j), std::nullopt});
    out.push_back({1, std::move(c), 1.0});
  }
  return out;
}

/// All products f*g with f in F_1 and g in F_{t-1}, one per ordered pair.
/// Returns an empty list when either factor set is empty.
inline std::vector<Polynomial> generate_candidates(std::span<const PolyRef> f1, std::span<const PolyRef> fprev,
                                                   const PolyRegistry& registry) {
  std::vector<Polynomial> out;
  if (f1.empty() || fprev.empty()) return out;
  out.reserve(f1.size() * fprev.size());
  for (const auto& a : f1) {
    const int da = registry.poly(a).degree;
    for (const auto& b : fprev) {
      Combination c;
      c.base_terms.push_back({1.0, a, b});
      out.push_back({da + registry.poly(b).degree, std::move(c), 1.0});
    }
  }
  return out;
}

/// Residual candidates together with their evaluations on Z and X0.
struct Residual {
  std::vector<Polynomial> polys;
  Matrix on_knots;  // C_t(Z)
  Matrix on_data;   // C_t(X0), empty when no data set was supplied
};

namespace detail {

inline Residual residualize(std::span<const Polynomial> candidates, std::span<const PolyRef> lower, const Matrix& z,
                            const Matrix* x0, const PolyRegistry& registry) {
  Residual out;
  if (candidates.empty()) return out;
  const Program cand(registry, candidates);
  const Program low(registry, lower);
  const Matrix cz = cand.evaluate(z);
  const Matrix fz = low.evaluate(z);
  const Matrix proj = pseudo_inverse(fz) * cz;  // |F^{t-1}| x |C|
  out.on_knots = cz - fz * proj;
  if (x0) out.on_data = cand.evaluate(*x0) - low.evaluate(*x0) * proj;
  out.polys.reserve(candidates.size());
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    if (!candidates[j].is_combination()) throw InputError("candidates must be combination polynomials");
    Polynomial p = candidates[j];
    auto& comb = std::get<Combination>(p.kind);
    if (p.scale != 1.0) {
      for (auto& t : comb.base_terms) t.coef /= p.scale;
      for (auto& t : comb.lower_terms) t.coef /= p.scale;
      p.scale = 1.0;
    }
    for (std::size_t k = 0; k < lower.size(); ++k) {
      const double c = proj(static_cast<Index>(k), static_cast<Index>(j));
      if (c != 0.0) comb.lower_terms.push_back({-c, lower[k]});
    }
    out.polys.push_back(std::move(p));
  }
  return out;
}

}  // namespace detail

/// C_t = C~_t - F^{t-1} (F^{t-1}(Z)^+ C~_t(Z)). On Z the residuals are
/// orthogonal to the column space of F^{t-1}(Z).
inline std::vector<Polynomial> residualize(std::span<const Polynomial> candidates, std::span<const PolyRef> lower,
                                           const PointSet& z, const PolyRegistry& registry) {
  if (lower.empty()) throw InputError("residualize needs at least the degree-0 polynomial");
  return detail::residualize(candidates, lower, z.matrix(), nullptr, registry).polys;
}

struct BasisDiagnostics {
  Vector data_singular_values;        // C_t(X0)
  Vector knot_singular_values;        // C_t(Z) V0^eps
  Vector knot_singular_values_upper;  // C_t(Z) V0~
  int discarded = 0;                  // eps-nonvanishing on X0 but eta-vanishing on Z
  int merged_nonvanishing = 0;        // second-part directions absorbed by the first part on Z
};

struct BasisLayerResult {
  std::vector<Polynomial> vanishing;     // G_t
  std::vector<Polynomial> nonvanishing;  // F_t, each with scale = ||f(Z)||
  BasisDiagnostics diagnostics;
};

/// One degree of the basis construction.
inline BasisLayerResult find_basis(std::span<const Polynomial> candidates, std::span<const PolyRef> lower,
                                   const PointSet& z, const PointSet& x0, double eps, double eta,
                                   const PolyRegistry& registry) {
  if (z.dim() != x0.dim()) throw InputError("data and knots have different dimensions");
  if (z.dim() != registry.dim()) throw InputError("point dimension does not match registry");
  if (lower.empty()) throw InputError("find_basis needs at least the degree-0 polynomial");
  if (!(eps >= 0.0) || !(eta >= 0.0)) throw InputError("tolerances must be >= 0");
  BasisLayerResult out;
  if (candidates.empty()) return out;

  const Residual res = detail::residualize(candidates, lower, z.matrix(), &x0.matrix(), registry);

  const SpectralSplit on_data = spectral_split(res.on_data, eps);
  const Matrix& v0_above = on_data.right_above;  // V0~
  const Matrix& v0_below = on_data.right_below;  // V0^eps

  const SpectralSplit knots_below = spectral_split(res.on_knots * v0_below, eta);
  const SpectralSplit knots_above = spectral_split(res.on_knots * v0_above, eta);

  out.diagnostics.data_singular_values = on_data.singular_values;
  out.diagnostics.knot_singular_values = knots_below.singular_values;
  out.diagnostics.knot_singular_values_upper = knots_above.singular_values;
  out.diagnostics.discarded = static_cast<int>(knots_above.right_below.cols());

  const Matrix g_coefs = v0_below * knots_below.right_below;
  out.vanishing.reserve(static_cast<std::size_t>(g_coefs.cols()));
  for (Index j = 0; j < g_coefs.cols(); ++j) out.vanishing.push_back(linear_combination(res.polys, g_coefs.col(j)));

  // The two nonvanishing parts are each orthonormal on Z but not mutually so
  // once Z != X0. Project the eps-vanishing part off the first on Z and keep
  // what stays above eta, so F_t(Z) has full column rank.
  const Matrix upper_coefs = v0_above * knots_above.right_above;
  Matrix lower_coefs = v0_below * knots_below.right_above;
  if (upper_coefs.cols() > 0 && lower_coefs.cols() > 0) {
    const Matrix upper_z = res.on_knots * upper_coefs;
    lower_coefs -= upper_coefs * (pseudo_inverse(upper_z) * (res.on_knots * lower_coefs));
    const SpectralSplit rest = spectral_split(res.on_knots * lower_coefs, eta);
    lower_coefs = lower_coefs * rest.right_above;
    out.diagnostics.merged_nonvanishing = static_cast<int>(rest.right_below.cols());
  }
  Matrix f_coefs(v0_above.rows(), upper_coefs.cols() + lower_coefs.cols());
  f_coefs << upper_coefs, lower_coefs;
  out.nonvanishing.reserve(static_cast<std::size_t>(f_coefs.cols()));
  for (Index j = 0; j < f_coefs.cols(); ++j) {
    Polynomial f = linear_combination(res.polys, f_coefs.col(j));
    f.scale = (res.on_knots * f_coefs.col(j)).norm();
    out.nonvanishing.push_back(std::move(f));
  }
  return out;
}

/// Registry plus the refs of its vanishing and nonvanishing members; the
/// common output shape of the VCA baseline and the knot pursuit.
struct BasisSet {
  PolyRegistry registry;
  std::vector<PolyRef> vanishing;
  std::vector<PolyRef> nonvanishing;  // includes the degree-0 constant

  std::vector<int> vanishing_degrees() const {
    std::vector<int> out;
    out.reserve(vanishing.size());
    for (const auto& r : vanishing) out.push_back(registry.poly(r).degree);
    return out;
  }

  Matrix evaluate_vanishing(const Matrix& points) const {
    if (vanishing.empty()) return Matrix(points.rows(), 0);
    return evaluate_matrix(std::span<const PolyRef>(vanishing), registry, points);
  }
};

struct VcaResult {
  BasisSet basis;
  std::vector<int> vanishing_per_degree;     // index t-1 -> |G_t|
  std::vector<int> nonvanishing_per_degree;  // index t-1 -> |F_t|
  bool truncated = false;
};

/// Vanishing Component Analysis: the basis construction with Z = X and a
/// single tolerance, climbing degrees until no candidates remain.
inline VcaResult vca_fit(const PointSet& x, double eps, int max_degree = 10) {
  if (!(eps >= 0.0)) throw InputError("vca_fit: eps must be >= 0");
  VcaResult out;
  BasisSet& b = out.basis;
  b.registry = PolyRegistry(static_cast<int>(x.dim()), x.size());
  b.nonvanishing.push_back(PolyRegistry::constant_ref());
  std::vector<Polynomial> candidates = coordinate_candidates(b.registry);
  std::vector<PolyRef> f1;
  for (int t = 1;; ++t) {
    BasisLayerResult layer = find_basis(candidates, b.nonvanishing, x, x, eps, eps, b.registry);
    std::vector<PolyRef> ft;
    for (auto& g : layer.vanishing) b.vanishing.push_back(b.registry.add(std::move(g), Role::Vanishing));
    for (auto& f : layer.nonvanishing) ft.push_back(b.registry.add(std::move(f), Role::Nonvanishing));
    b.nonvanishing.insert(b.nonvanishing.end(), ft.begin(), ft.end());
    out.vanishing_per_degree.push_back(static_cast<int>(layer.vanishing.size()));
    out.nonvanishing_per_degree.push_back(static_cast<int>(ft.size()));
    if (t == 1) f1 = ft;
    candidates = generate_candidates(f1, ft, b.registry);
    if (candidates.empty()) break;
    if (t >= max_degree) {
      out.truncated = true;
      break;
    }
  }
  return out;
}

}  // namespace vanish
