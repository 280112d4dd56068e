#pragma once

// Data knotting: move each knot toward the common zero set of the vanishing
// polynomials while a nonvanishing-layer distance keeps it near its source
// point. Solved pointwise by BFGS on a finite-difference gradient.

#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "vanish/polycore.hpp"

namespace vanish {

struct KnotObjectiveSpec {
  std::vector<std::vector<Polynomial>> vanishing_layers;     // [k-1] -> G_k
  std::vector<std::vector<Polynomial>> nonvanishing_layers;  // [k-1] -> F_k
  double lambda = 1.0;
  int reg_max_degree = 0;  // regularize F_1..F_reg_max_degree; 0 means every layer
  bool squared_norms = false;
};

/// KnotObjectiveSpec compiled into one Program. Evaluation is const and
/// thread-compatible given a per-caller scratch buffer.
class KnotObjective {
 public:
  KnotObjective(const KnotObjectiveSpec& spec, const PolyRegistry& registry)
      : lambda_(spec.lambda), squared_(spec.squared_norms) {
    if (!(spec.lambda >= 0.0)) throw InputError("lambda must be >= 0");
    std::vector<Polynomial> outputs;
    for (const auto& layer : spec.vanishing_layers) {
      g_offsets_.push_back(outputs.size());
      outputs.insert(outputs.end(), layer.begin(), layer.end());
    }
    g_offsets_.push_back(outputs.size());
    const std::size_t reg = spec.reg_max_degree > 0
                                ? std::min(static_cast<std::size_t>(spec.reg_max_degree), spec.nonvanishing_layers.size())
                                : spec.nonvanishing_layers.size();
    f_begin_ = outputs.size();
    for (std::size_t k = 0; k < reg; ++k) {
      f_offsets_.push_back(outputs.size() - f_begin_);
      outputs.insert(outputs.end(), spec.nonvanishing_layers[k].begin(), spec.nonvanishing_layers[k].end());
    }
    f_offsets_.push_back(outputs.size() - f_begin_);
    program_ = Program(registry, outputs);
    dim_ = registry.dim();
  }

  int dim() const noexcept { return dim_; }
  std::size_t num_regularized() const noexcept { return f_offsets_.back(); }

  /// F_1..F_reg evaluated at the anchor point.
  Vector anchor_features(const Vector& x) const {
    Vector all = program_.evaluate_point(x);
    return all.tail(static_cast<Index>(num_regularized()));
  }

  struct Workspace {
    std::vector<double> values;
    std::vector<double> scratch;
    long evaluations = 0;
  };

  double value(std::span<const double> z, const Vector& anchor, Workspace& ws) const {
    ++ws.evaluations;
    ws.values.resize(program_.num_outputs());
    program_.evaluate_point(z, ws.values, ws.scratch);
    double total = 0.0;
    for (std::size_t k = 0; k + 1 < g_offsets_.size(); ++k) {
      double s = 0.0;
      for (std::size_t i = g_offsets_[k]; i < g_offsets_[k + 1]; ++i) s += ws.values[i] * ws.values[i];
      total += squared_ ? s : std::sqrt(s);
    }
    if (lambda_ == 0.0) return total;
    for (std::size_t k = 0; k + 1 < f_offsets_.size(); ++k) {
      double s = 0.0;
      for (std::size_t i = f_offsets_[k]; i < f_offsets_[k + 1]; ++i) {
        const double diff = ws.values[f_begin_ + i] - anchor(static_cast<Index>(i));
        s += diff * diff;
      }
      total += lambda_ * (squared_ ? s : std::sqrt(s));
    }
    return total;
  }

  double value(const Vector& z, const Vector& anchor) const {
    Workspace ws;
    return value(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())), anchor, ws);
  }

 private:
  Program program_;
  std::vector<std::size_t> g_offsets_;
  std::vector<std::size_t> f_offsets_;
  std::size_t f_begin_ = 0;
  double lambda_;
  bool squared_;
  int dim_ = 0;
};

/// sum_k ||G_k(z)|| + lambda * sum_{k <= reg} ||F_k(z) - F_k(x)||.
inline double knot_objective(const Vector& z, const Vector& x, const KnotObjectiveSpec& spec,
                             const PolyRegistry& registry) {
  if (z.size() != registry.dim() || x.size() != registry.dim()) throw InputError("knot_objective dimension mismatch");
  const KnotObjective obj(spec, registry);
  return obj.value(z, obj.anchor_features(x));
}

struct OptimizerParams {
  int max_iters = 200;
  double grad_tol = 1e-8;
  double step_tol = 1e-12;
  double fd_step = 1e-6;  // relative: h_j = fd_step * (1 + |z_j|)
  int max_backtracks = 50;
};

struct KnotPointResult {
  Vector z;
  double objective = 0.0;
  double initial_objective = 0.0;
  int iterations = 0;
  bool nonfinite = false;  // a non-finite objective was met during the search
};

namespace detail {

inline void fd_gradient(const KnotObjective& obj, const Vector& anchor, Vector& z, double h_rel,
                        KnotObjective::Workspace& ws, Vector& grad, bool& nonfinite) {
  const std::span<const double> zs(z.data(), static_cast<std::size_t>(z.size()));
  grad.resize(z.size());
  for (Index j = 0; j < z.size(); ++j) {
    const double orig = z(j);
    const double h = h_rel * (1.0 + std::abs(orig));
    z(j) = orig + h;
    const double fp = obj.value(zs, anchor, ws);
    z(j) = orig - h;
    const double fm = obj.value(zs, anchor, ws);
    z(j) = orig;
    grad(j) = (fp - fm) / (2.0 * h);
    if (!std::isfinite(grad(j))) {
      grad(j) = 0.0;
      nonfinite = true;
    }
  }
}

}  // namespace detail

/// BFGS with Armijo backtracking from z_init. Never returns a point with a
/// larger objective than z_init.
inline KnotPointResult knot_point(const KnotObjective& obj, const Vector& anchor, const Vector& z_init,
                                  const OptimizerParams& opt, KnotObjective::Workspace& ws) {
  KnotPointResult out;
  Vector z = z_init;
  const Index d = z.size();
  auto f_at = [&](const Vector& p) {
    return obj.value(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), anchor, ws);
  };
  double f = f_at(z);
  out.initial_objective = f;
  if (!std::isfinite(f)) {
    out.z = z_init;
    out.objective = f;
    out.nonfinite = true;
    return out;
  }
  Vector g;
  detail::fd_gradient(obj, anchor, z, opt.fd_step, ws, g, out.nonfinite);
  Matrix h = Matrix::Identity(d, d);
  bool identity = true;
  bool first = true;
  Vector zn(d);
  Vector gn;
  int it = 0;
  for (; it < opt.max_iters; ++it) {
    if (g.lpNorm<Eigen::Infinity>() <= opt.grad_tol) break;
    Vector p = -(h * g);
    double slope = g.dot(p);
    if (!(slope < 0.0)) {
      h.setIdentity();
      identity = true;
      p = -g;
      slope = g.dot(p);
    }
    double alpha = 1.0;
    if (first) alpha = std::min(1.0, 0.1 / std::max(p.lpNorm<Eigen::Infinity>(), 1e-300));
    bool accepted = false;
    double fn = f;
    for (int bt = 0; bt < opt.max_backtracks; ++bt) {
      zn = z + alpha * p;
      fn = f_at(zn);
      if (!std::isfinite(fn)) {
        out.nonfinite = true;
      } else if (fn <= f + 1e-4 * alpha * slope && fn < f) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    // |g| has a kink on the zero set, so a full quasi-Newton step can jump
    // across it to a stationary point of g. Keep halving while that helps.
    for (int bt = 0; accepted && bt < opt.max_backtracks; ++bt) {
      const Vector zh = z + 0.5 * alpha * p;
      const double fh = f_at(zh);
      if (!std::isfinite(fh) || !(fh < fn)) break;
      alpha *= 0.5;
      zn = zh;
      fn = fh;
    }
    if (!accepted) {
      if (!identity) {
        h.setIdentity();
        identity = true;
        continue;
      }
      break;
    }
    const Vector s = zn - z;
    if (s.norm() <= opt.step_tol) {
      z = zn;
      f = fn;
      ++it;
      break;
    }
    detail::fd_gradient(obj, anchor, zn, opt.fd_step, ws, gn, out.nonfinite);
    const Vector y = gn - g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm() && sy > 0.0) {
      if (first) h *= sy / y.squaredNorm();
      const double rho = 1.0 / sy;
      const Matrix left = Matrix::Identity(d, d) - rho * s * y.transpose();
      h = left * h * left.transpose() + rho * s * s.transpose();
      identity = false;
    }
    z = zn;
    f = fn;
    g = gn;
    first = false;
  }
  out.z = z;
  out.objective = f;
  out.iterations = it;
  return out;
}

inline KnotPointResult knot_point(const Vector& x, const Vector& z_init, const KnotObjectiveSpec& spec,
                                  const PolyRegistry& registry, const OptimizerParams& opt = {}) {
  if (x.size() != registry.dim() || z_init.size() != registry.dim()) throw InputError("knot_point dimension mismatch");
  if (!x.allFinite() || !z_init.allFinite()) throw InputError("knot_point inputs must be finite");
  const KnotObjective obj(spec, registry);
  KnotObjective::Workspace ws;
  return knot_point(obj, obj.anchor_features(x), z_init, opt, ws);
}

struct KnotAllResult {
  PointSet knots;
  int flagged = 0;  // points whose search met a non-finite objective
  int total_iterations = 0;
  long evaluations = 0;  // objective evaluations, finite differences included
};

/// Knots every row of `current` independently, anchored at the matching row
/// of `anchors`. Rows share nothing but the read-only objective.
inline KnotAllResult knot_all(const PointSet& anchors, const PointSet& current, const KnotObjectiveSpec& spec,
                              const PolyRegistry& registry, const OptimizerParams& opt = {}) {
  if (anchors.size() != current.size() || anchors.dim() != current.dim()) {
    throw InputError("knot_all: anchors and knots must have the same shape");
  }
  const KnotObjective obj(spec, registry);
  Matrix z(current.size(), current.dim());
  KnotAllResult out;
  KnotObjective::Workspace ws;
  for (Index i = 0; i < current.size(); ++i) {
    const KnotPointResult r = knot_point(obj, obj.anchor_features(anchors.point(i)), current.point(i), opt, ws);
    z.row(i) = r.z.transpose();
    out.flagged += r.nonfinite ? 1 : 0;
    out.total_iterations += r.iterations;
  }
  out.evaluations = ws.evaluations;
  out.knots = PointSet(std::move(z));
  return out;
}

/// ||F(x) - F(y)|| over the concatenated nonvanishing polynomials.
inline double generalized_distance(const Vector& x, const Vector& y, std::span<const Polynomial> nonvanishing,
                                   const PolyRegistry& registry) {
  if (x.size() != registry.dim() || y.size() != registry.dim()) throw InputError("generalized_distance dimension mismatch");
  if (nonvanishing.empty()) return 0.0;
  const Program prog(registry, nonvanishing);
  return (prog.evaluate_point(x) - prog.evaluate_point(y)).norm();
}

}  // namespace vanish
