#pragma once

// Joint search for polynomials that eps-vanish on the data X0 and
// delta-vanish on data knots Z. Per degree the basis and the knots are
// updated alternately while an interim tolerance eta cools from eps to delta;
// when degrees are exhausted with some polynomial still above delta on Z the
// construction restarts at degree 1 keeping only Z and eta.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vanish/basis.hpp"
#include "vanish/knotting.hpp"
#include "vanish/polycore.hpp"

namespace vanish {

struct PursuitConfig {
  double epsilon = 0.1;
  std::optional<double> delta;  // defaults to 0.01 * epsilon
  double lambda = 1.0;
  double gamma = 0.9;
  double eta_floor_snap = 1e-12;
  int max_degree = 10;
  int max_resets = 20;
  OptimizerParams optimizer;
  bool anchor_to_original = true;  // false: anchor each knot to its previous position
  bool squared_norms = false;

  double delta_value() const { return delta ? *delta : 0.01 * epsilon; }

  void validate() const {
    if (!(epsilon > 0.0)) throw InputError("epsilon must be > 0");
    const double d = delta_value();
    if (!(d >= 0.0)) throw InputError("delta must be >= 0");
    if (d > epsilon) throw InputError("delta must not exceed epsilon");
    if (!(lambda >= 0.0)) throw InputError("lambda must be >= 0");
    if (!(gamma > 0.0 && gamma < 1.0)) throw InputError("gamma must lie in (0, 1)");
    if (max_degree < 1) throw InputError("max_degree must be >= 1");
    if (max_resets < 0) throw InputError("max_resets must be >= 0");
  }
};

struct ResetEvent {
  double eta_before = 0.0;
  double eta_after = 0.0;
  int degree = 0;  // degree reached when the reset fired
};

struct PursuitDiagnostics {
  std::vector<double> eta_trace;  // every value eta took, in order
  std::vector<ResetEvent> resets;
  std::vector<int> vanishing_per_degree;       // final epoch, index t-1
  std::vector<int> nonvanishing_per_degree;    // final epoch, index t-1
  std::vector<int> nonvanishing_total_trace;   // |F| (with F_0) after every degree of every epoch
  int pursuit_iterations = 0;
  long objective_evaluations = 0;
  int optimizer_flags = 0;
  double max_data_norm = 0.0;  // max ||g(X0)|| over G
  double max_knot_norm = 0.0;  // max ||g(Z)|| over G
  bool truncated = false;
  std::string truncation_reason;
};

struct KnotModel {
  BasisSet basis;
  PointSet knots;
  PursuitConfig config;
  PursuitDiagnostics diagnostics;

  std::size_t num_vanishing() const { return basis.vanishing.size(); }
};

/// max_g ||g(Z)||, or nullopt when the set is empty.
inline std::optional<double> max_column_norm(const Matrix& evals) {
  if (evals.cols() == 0) return std::nullopt;
  return evals.colwise().norm().maxCoeff();
}

/// eta <- min(gamma * eta, max_g ||g(Z)||), never below delta and snapped to
/// delta once within `snap` of it.
inline double cool_eta(double eta, double gamma, std::optional<double> max_norm, double delta = 0.0,
                       double snap = 1e-12) {
  double next = gamma * eta;
  if (max_norm) next = std::min(next, *max_norm);
  next = std::max(next, delta);
  if (next - delta < snap) next = delta;
  return next;
}

inline double cool_eta(double eta, double gamma, std::span<const Polynomial> vanishing, const PointSet& z,
                       const PolyRegistry& registry, double delta = 0.0, double snap = 1e-12) {
  std::optional<double> m;
  if (!vanishing.empty()) m = max_column_norm(evaluate_matrix(vanishing, registry, z));
  return cool_eta(eta, gamma, m, delta, snap);
}

struct PursuitStep {
  BasisLayerResult layer;
  PointSet knots;
  double eta = 0.0;
  std::vector<double> eta_trace;  // values eta was cooled to, in order
  int iterations = 0;
  int optimizer_flags = 0;
  long evaluations = 0;  // knot objective evaluations
};

namespace detail {

inline std::vector<Polynomial> polys_of(const PolyRegistry& registry, std::span<const PolyRef> refs) {
  std::vector<Polynomial> out;
  out.reserve(refs.size());
  for (const auto& r : refs) out.push_back(registry.poly(r));
  return out;
}

inline KnotObjectiveSpec pursuit_objective(const PolyRegistry& registry, const BasisLayerResult& layer, int degree,
                                           const PursuitConfig& cfg) {
  KnotObjectiveSpec spec;
  spec.lambda = cfg.lambda;
  spec.squared_norms = cfg.squared_norms;
  for (int k = 1; k < degree; ++k) {
    spec.vanishing_layers.push_back(polys_of(registry, registry.refs(k, Role::Vanishing)));
    spec.nonvanishing_layers.push_back(polys_of(registry, registry.refs(k, Role::Nonvanishing)));
  }
  spec.vanishing_layers.push_back(layer.vanishing);
  spec.nonvanishing_layers.push_back(layer.nonvanishing);
  // Regularize up to the degree of the first vanishing polynomial.
  spec.reg_max_degree = 0;
  for (std::size_t k = 0; k < spec.vanishing_layers.size(); ++k) {
    if (!spec.vanishing_layers[k].empty()) {
      spec.reg_max_degree = static_cast<int>(k) + 1;
      break;
    }
  }
  return spec;
}

inline std::vector<Polynomial> all_vanishing(const PolyRegistry& registry, const BasisLayerResult& layer) {
  std::vector<Polynomial> g = polys_of(registry, registry.refs(Role::Vanishing));
  g.insert(g.end(), layer.vanishing.begin(), layer.vanishing.end());
  return g;
}

constexpr double kVanishSlack = 1e-12;

}  // namespace detail

/// Alternates knotting and basis refits for one degree until every
/// polynomial in G^t is delta-vanishing on Z, eta reaches delta, or G_t
/// becomes empty. `lower` is F^{t-1}.
inline PursuitStep exact_vanish_pursuit(const PolyRegistry& registry, std::span<const PolyRef> lower,
                                        std::span<const Polynomial> candidates, BasisLayerResult layer,
                                        PointSet knots, const PointSet& data, double eta, int degree,
                                        const PursuitConfig& cfg) {
  const double delta = cfg.delta_value();
  PursuitStep out;
  while (eta > delta && !layer.vanishing.empty()) {
    const KnotObjectiveSpec spec = detail::pursuit_objective(registry, layer, degree, cfg);
    const PointSet& anchors = cfg.anchor_to_original ? data : knots;
    KnotAllResult moved = knot_all(anchors, knots, spec, registry, cfg.optimizer);
    knots = std::move(moved.knots);
    out.optimizer_flags += moved.flagged;
    out.evaluations += moved.evaluations;
    ++out.iterations;

    const std::vector<Polynomial> g_all = detail::all_vanishing(registry, layer);
    const std::optional<double> worst = max_column_norm(evaluate_matrix(g_all, registry, knots));
    if (worst && *worst <= delta + detail::kVanishSlack) break;

    eta = cool_eta(eta, cfg.gamma, worst, delta, cfg.eta_floor_snap);
    out.eta_trace.push_back(eta);
    layer = find_basis(candidates, lower, knots, data, cfg.epsilon, eta, registry);
  }
  out.layer = std::move(layer);
  out.knots = std::move(knots);
  out.eta = eta;
  return out;
}

/// Full pursuit from X0. Caps on degree and resets end the run with a
/// truncation flag instead of throwing.
inline KnotModel fit(const PointSet& data, const PursuitConfig& cfg) {
  cfg.validate();
  if (data.empty()) throw InputError("fit: empty data");
  const double eps = cfg.epsilon;
  const double delta = cfg.delta_value();
  const int dim = static_cast<int>(data.dim());

  KnotModel model;
  model.config = cfg;
  PursuitDiagnostics& diag = model.diagnostics;
  PointSet knots = data;
  double eta = eps;
  diag.eta_trace.push_back(eta);

  for (;;) {
    PolyRegistry registry(dim, knots.size());
    std::vector<PolyRef> lower{PolyRegistry::constant_ref()};
    std::vector<PolyRef> vanishing;
    std::vector<PolyRef> f1;
    std::vector<Polynomial> candidates = coordinate_candidates(registry);
    diag.vanishing_per_degree.clear();
    diag.nonvanishing_per_degree.clear();

    bool reset = false;
    for (int t = 1;; ++t) {
      BasisLayerResult layer = find_basis(candidates, lower, knots, data, eps, eta, registry);
      PursuitStep step =
          exact_vanish_pursuit(registry, lower, candidates, std::move(layer), std::move(knots), data, eta, t, cfg);
      knots = std::move(step.knots);
      eta = step.eta;
      diag.eta_trace.insert(diag.eta_trace.end(), step.eta_trace.begin(), step.eta_trace.end());
      diag.pursuit_iterations += step.iterations;
      diag.optimizer_flags += step.optimizer_flags;
      diag.objective_evaluations += step.evaluations;

      std::vector<PolyRef> ft;
      for (auto& g : step.layer.vanishing) vanishing.push_back(registry.add(std::move(g), Role::Vanishing));
      for (auto& f : step.layer.nonvanishing) ft.push_back(registry.add(std::move(f), Role::Nonvanishing));
      lower.insert(lower.end(), ft.begin(), ft.end());
      diag.vanishing_per_degree.push_back(static_cast<int>(step.layer.vanishing.size()));
      diag.nonvanishing_per_degree.push_back(static_cast<int>(ft.size()));
      diag.nonvanishing_total_trace.push_back(static_cast<int>(lower.size()));
      if (t == 1) f1 = ft;

      std::vector<Polynomial> next = generate_candidates(f1, ft, registry);
      if (next.empty()) {
        std::optional<double> worst;
        if (!vanishing.empty()) worst = max_column_norm(evaluate_matrix(std::span<const PolyRef>(vanishing), registry, knots));
        if (!worst || *worst <= delta + detail::kVanishSlack) break;
        if (static_cast<int>(diag.resets.size()) >= cfg.max_resets) {
          diag.truncated = true;
          diag.truncation_reason = "max_resets";
          break;
        }
        ResetEvent ev{eta, eta, t};
        // At the floor the clamp would leave eta unchanged; step below delta
        // instead so the reset still tightens the tolerance.
        eta = eta > delta ? cool_eta(eta, cfg.gamma, worst, delta, cfg.eta_floor_snap) : cfg.gamma * eta;
        ev.eta_after = eta;
        diag.resets.push_back(ev);
        diag.eta_trace.push_back(eta);
        reset = true;
        break;
      }
      if (t >= cfg.max_degree) {
        diag.truncated = true;
        diag.truncation_reason = "max_degree";
        break;
      }
      candidates = std::move(next);
    }
    if (reset) continue;

    model.basis.registry = std::move(registry);
    model.basis.vanishing = std::move(vanishing);
    model.basis.nonvanishing = std::move(lower);
    break;
  }
  model.knots = std::move(knots);
  if (!model.basis.vanishing.empty()) {
    diag.max_data_norm = *max_column_norm(model.basis.evaluate_vanishing(data.matrix()));
    diag.max_knot_norm = *max_column_norm(model.basis.evaluate_vanishing(model.knots.matrix()));
  }
  return model;
}

}  // namespace vanish
