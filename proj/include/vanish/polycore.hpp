#pragma once

// Polynomial core: point sets, recursive polynomial trees, the per-degree
// registry that owns them, a flat evaluator, a brute-force monomial oracle and
// the threshold-partitioned SVD used by the basis construction.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "vanish/errors.hpp"

namespace vanish {

using Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// ---------------------------------------------------------------------------
// PointSet

/// N x d matrix of finite reals, one point per row.
class PointSet {
 public:
  PointSet() = default;

  explicit PointSet(Matrix data) : data_(std::move(data)) {
    if (data_.rows() < 1 || data_.cols() < 1) {
      throw InputError("PointSet requires at least one point and one coordinate");
    }
    if (!data_.allFinite()) throw InputError("PointSet entries must be finite");
  }

  static PointSet from_rows(const std::vector<std::vector<double>>& rows) {
    if (rows.empty() || rows.front().empty()) throw InputError("PointSet requires at least one point");
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < m.rows(); ++i) {
      const auto& r = rows[static_cast<std::size_t>(i)];
      if (static_cast<Index>(r.size()) != m.cols()) throw InputError("ragged rows in PointSet");
      for (Index j = 0; j < m.cols(); ++j) m(i, j) = r[static_cast<std::size_t>(j)];
    }
    return PointSet(std::move(m));
  }

  Index size() const noexcept { return data_.rows(); }
  Index dim() const noexcept { return data_.cols(); }
  bool empty() const noexcept { return data_.size() == 0; }

  const Matrix& matrix() const noexcept { return data_; }
  auto row(Index i) const { return data_.row(i); }

  Vector point(Index i) const { return data_.row(i).transpose(); }

 private:
  Matrix data_;
};

// ---------------------------------------------------------------------------
// Polynomial trees

/// Index of a polynomial inside a PolyRegistry: (degree layer, position in layer).
struct PolyRef {
  int degree = 0;
  int position = 0;

  friend bool operator==(const PolyRef&, const PolyRef&) = default;
  friend auto operator<=>(const PolyRef&, const PolyRef&) = default;
};

struct Constant {
  double value = 0.0;
};

struct Coordinate {
  int index = 0;
};

/// coef * left * right, or coef * left when right is empty.
struct BaseTerm {
  double coef = 0.0;
  PolyRef left;
  std::optional<PolyRef> right;
};

struct LowerTerm {
  double coef = 0.0;
  PolyRef ref;
};

struct Combination {
  std::vector<BaseTerm> base_terms;
  std::vector<LowerTerm> lower_terms;
};

/// A polynomial is a tree over registry entries. Its value is the value of
/// `kind` divided by `scale`; nonvanishing layers store their normalization
/// there so the rescale never touches coefficients.
struct Polynomial {
  int degree = 0;
  std::variant<Constant, Coordinate, Combination> kind;
  double scale = 1.0;

  static Polynomial constant(double v) { return {0, Constant{v}, 1.0}; }
  static Polynomial coordinate(int j) { return {1, Coordinate{j}, 1.0}; }

  bool is_combination() const noexcept { return std::holds_alternative<Combination>(kind); }
  const Combination& combination() const { return std::get<Combination>(kind); }
};

enum class Role : std::uint8_t { Primitive, Nonvanishing, Vanishing };

inline const char* role_name(Role r) {
  switch (r) {
    case Role::Primitive: return "primitive";
    case Role::Nonvanishing: return "nonvanishing";
    case Role::Vanishing: return "vanishing";
  }
  return "?";
}

struct RegistryEntry {
  Polynomial poly;
  Role role = Role::Primitive;
};

/// Per-degree store of polynomials. Layer 0 holds the constant of the F_0 set,
/// layer 1 starts with the d coordinate primitives. Entries are append-only;
/// a reset builds a fresh registry.
class PolyRegistry {
 public:
  PolyRegistry() = default;

  /// Seeds F_0 = {1/sqrt(n_points)} and the d coordinate functions.
  PolyRegistry(int dim, Index n_points) : dim_(dim) {
    if (dim < 1) throw InputError("registry dimension must be >= 1");
    if (n_points < 1) throw InputError("registry needs at least one point");
    layers_.resize(2);
    layers_[0].push_back({Polynomial::constant(1.0 / std::sqrt(static_cast<double>(n_points))), Role::Nonvanishing});
    for (int j = 0; j < dim; ++j) layers_[1].push_back({Polynomial::coordinate(j), Role::Primitive});
  }

  int dim() const noexcept { return dim_; }
  int max_degree() const noexcept { return static_cast<int>(layers_.size()) - 1; }

  static constexpr PolyRef constant_ref() { return {0, 0}; }
  PolyRef coordinate_ref(int j) const { return {1, j}; }

  bool contains(PolyRef r) const noexcept {
    return r.degree >= 0 && r.degree < static_cast<int>(layers_.size()) && r.position >= 0 &&
           r.position < static_cast<int>(layers_[static_cast<std::size_t>(r.degree)].size());
  }

  const RegistryEntry& at(PolyRef r) const {
    if (!contains(r)) {
      throw StructuralError("dangling PolyRef (" + std::to_string(r.degree) + ", " + std::to_string(r.position) + ")");
    }
    return layers_[static_cast<std::size_t>(r.degree)][static_cast<std::size_t>(r.position)];
  }

  const Polynomial& poly(PolyRef r) const { return at(r).poly; }

  /// Appends a polynomial to the layer matching its degree. References must
  /// already resolve.
  PolyRef add(Polynomial p, Role role) {
    if (p.degree < 0) throw StructuralError("negative degree");
    check_refs(p);
    if (static_cast<std::size_t>(p.degree) >= layers_.size()) layers_.resize(static_cast<std::size_t>(p.degree) + 1);
    auto& layer = layers_[static_cast<std::size_t>(p.degree)];
    const int deg = p.degree;
    layer.push_back({std::move(p), role});
    return {deg, static_cast<int>(layer.size()) - 1};
  }

  std::vector<PolyRef> refs(int degree, Role role) const {
    std::vector<PolyRef> out;
    if (degree < 0 || degree >= static_cast<int>(layers_.size())) return out;
    const auto& layer = layers_[static_cast<std::size_t>(degree)];
    for (std::size_t i = 0; i < layer.size(); ++i) {
      if (layer[i].role == role) out.push_back({degree, static_cast<int>(i)});
    }
    return out;
  }

  /// All refs with the given role, ordered by degree then position.
  std::vector<PolyRef> refs(Role role) const {
    std::vector<PolyRef> out;
    for (int t = 0; t < static_cast<int>(layers_.size()); ++t) {
      auto r = refs(t, role);
      out.insert(out.end(), r.begin(), r.end());
    }
    return out;
  }

  const std::vector<RegistryEntry>& layer(int degree) const {
    if (degree < 0 || degree >= static_cast<int>(layers_.size())) throw InputError("layer " + std::to_string(degree) + " out of range");
    return layers_[static_cast<std::size_t>(degree)];
  }

  /// Rebuilds a registry entry by entry, in layer order. Every reference must
  /// resolve to an entry added before it.
  static PolyRegistry from_layers(int dim, const std::vector<std::vector<RegistryEntry>>& layers) {
    if (dim < 1) throw InputError("registry dimension must be >= 1");
    PolyRegistry r;
    r.dim_ = dim;
    r.layers_.resize(layers.size());
    for (std::size_t t = 0; t < layers.size(); ++t) {
      for (const auto& e : layers[t]) {
        if (e.poly.degree != static_cast<int>(t)) throw StructuralError("entry degree does not match its layer");
        if (!(e.poly.scale != 0.0 && std::isfinite(e.poly.scale))) throw StructuralError("polynomial scale must be finite and nonzero");
        r.check_refs(e.poly);
        r.layers_[t].push_back(e);
      }
    }
    return r;
  }

  std::size_t layer_size(int degree) const {
    return degree >= 0 && degree < static_cast<int>(layers_.size()) ? layers_[static_cast<std::size_t>(degree)].size() : 0;
  }

  void check_refs(const Polynomial& p) const {
    if (const auto* c = std::get_if<Coordinate>(&p.kind)) {
      if (c->index < 0 || c->index >= dim_) throw StructuralError("coordinate index out of range");
      return;
    }
    const auto* comb = std::get_if<Combination>(&p.kind);
    if (!comb) return;
    for (const auto& t : comb->base_terms) {
      const int dl = at(t.left).poly.degree;
      const int dr = t.right ? at(*t.right).poly.degree : 0;
      if (dl + dr != p.degree) throw StructuralError("base term degrees do not sum to polynomial degree");
    }
    for (const auto& t : comb->lower_terms) {
      if (at(t.ref).poly.degree >= p.degree) throw StructuralError("lower term must reference a lower degree");
    }
  }

 private:
  int dim_ = 0;
  std::vector<std::vector<RegistryEntry>> layers_;
};

// ---------------------------------------------------------------------------
// Flat evaluator

/// A set of polynomials compiled against a registry into a topologically
/// ordered node list. Only the dependency closure of the outputs is kept.
/// Immutable after construction; evaluation is read-only.
class Program {
 public:
  Program() = default;

  Program(const PolyRegistry& registry, std::span<const Polynomial> outputs) : dim_(registry.dim()) {
    Builder b;
    outputs_.reserve(outputs.size());
    for (const auto& p : outputs) outputs_.push_back(compile(registry, p, b));
    finish(b);
  }

  Program(const PolyRegistry& registry, std::span<const PolyRef> outputs) : dim_(registry.dim()) {
    Builder b;
    outputs_.reserve(outputs.size());
    for (const auto& r : outputs) outputs_.push_back(compile_ref(registry, r, b));
    finish(b);
  }

  int dim() const noexcept { return dim_; }
  std::size_t num_outputs() const noexcept { return outputs_.size(); }
  std::size_t num_nodes() const noexcept { return nodes_.size(); }

  /// N x |outputs| evaluation matrix.
  Matrix evaluate(const Matrix& points) const {
    if (points.cols() != dim_) throw InputError("evaluation dimension mismatch");
    const Index n = points.rows();
    RowMatrix values(static_cast<Index>(nodes_.size()), n);
    RowMatrix gathered;
    std::size_t k = 0;
    while (k < nodes_.size()) {
      const Node& node = nodes_[k];
      auto row = values.row(static_cast<Index>(k));
      switch (node.kind) {
        case NodeKind::Coordinate: row = points.col(node.a).transpose(); break;
        case NodeKind::Constant: row.setConstant(node.constant); break;
        case NodeKind::Product: row = values.row(node.a).cwiseProduct(values.row(node.b)); break;
        case NodeKind::Block: {
          const Block& blk = blocks_[static_cast<std::size_t>(node.a)];
          gathered.resize(static_cast<Index>(blk.inputs.size()), n);
          for (std::size_t i = 0; i < blk.inputs.size(); ++i) gathered.row(static_cast<Index>(i)) = values.row(blk.inputs[i]);
          auto dst = values.middleRows(static_cast<Index>(k), blk.coefs.rows());
          if (blk.inputs.empty()) {
            dst.setZero();
          } else {
            dst.noalias() = blk.coefs * gathered;
          }
          for (Index r = 0; r < blk.coefs.rows(); ++r) {
            if (blk.scales(r) != 1.0) dst.row(r) /= blk.scales(r);
          }
          k += static_cast<std::size_t>(blk.coefs.rows());
          continue;
        }
      }
      ++k;
    }
    Matrix out(n, static_cast<Index>(outputs_.size()));
    for (std::size_t j = 0; j < outputs_.size(); ++j) out.col(static_cast<Index>(j)) = values.row(outputs_[j]).transpose();
    return out;
  }

  /// Single-point evaluation into `out` (size num_outputs()). `scratch` is
  /// resized as needed so callers can reuse it across calls.
  void evaluate_point(std::span<const double> z, std::span<double> out, std::vector<double>& scratch) const {
    if (static_cast<int>(z.size()) != dim_) throw InputError("evaluation dimension mismatch");
    scratch.resize(nodes_.size() + max_block_inputs_);
    double* values = scratch.data();
    double* gathered = scratch.data() + nodes_.size();
    std::size_t k = 0;
    while (k < nodes_.size()) {
      const Node& node = nodes_[k];
      switch (node.kind) {
        case NodeKind::Coordinate: values[k] = z[static_cast<std::size_t>(node.a)]; break;
        case NodeKind::Constant: values[k] = node.constant; break;
        case NodeKind::Product: values[k] = values[node.a] * values[node.b]; break;
        case NodeKind::Block: {
          const Block& blk = blocks_[static_cast<std::size_t>(node.a)];
          const auto m = static_cast<Index>(blk.inputs.size());
          for (Index i = 0; i < m; ++i) gathered[i] = values[blk.inputs[static_cast<std::size_t>(i)]];
          Eigen::Map<Vector> dst(values + k, blk.coefs.rows());
          if (m == 0) {
            dst.setZero();
          } else {
            dst.noalias() = blk.coefs * Eigen::Map<const Vector>(gathered, m);
          }
          dst.array() /= blk.scales.array();
          k += static_cast<std::size_t>(blk.coefs.rows());
          continue;
        }
      }
      ++k;
    }
    for (std::size_t j = 0; j < outputs_.size(); ++j) out[j] = values[outputs_[j]];
  }

  Vector evaluate_point(const Vector& z) const {
    Vector out(static_cast<Index>(outputs_.size()));
    std::vector<double> scratch;
    evaluate_point(std::span<const double>(z.data(), static_cast<std::size_t>(z.size())),
                   std::span<double>(out.data(), static_cast<std::size_t>(out.size())), scratch);
    return out;
  }

 private:
  using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  // Combinations are lowered to weighted sums over earlier nodes, with every
  // product f*g turned into its own shared node. Consecutive sums over the
  // same inputs (the members of one basis layer) become one dense block.
  enum class NodeKind : std::uint8_t { Coordinate, Constant, Product, Block };
  struct Node {
    NodeKind kind = NodeKind::Constant;
    int a = 0;  // coordinate index, left factor, or block id
    int b = 0;  // right factor
    double constant = 0.0;
  };
  struct Block {
    std::vector<int> inputs;
    RowMatrix coefs;  // members x inputs
    Vector scales;
  };
  struct PendingSum {
    std::vector<int> inputs;
    std::vector<double> coefs;
    double scale = 1.0;
  };
  struct Builder {
    std::map<PolyRef, int> refs;
    std::map<std::pair<int, int>, int> products;
    std::vector<PendingSum> sums;  // per node; empty inputs for non-sum nodes
    std::vector<bool> is_sum;
  };

  int push(Builder& b, Node node, PendingSum sum, bool is_sum) {
    nodes_.push_back(node);
    b.sums.push_back(std::move(sum));
    b.is_sum.push_back(is_sum);
    return static_cast<int>(nodes_.size()) - 1;
  }

  int compile_ref(const PolyRegistry& registry, PolyRef r, Builder& b) {
    if (auto it = b.refs.find(r); it != b.refs.end()) return it->second;
    const int id = compile(registry, registry.poly(r), b);
    b.refs.emplace(r, id);
    return id;
  }

  int product(Builder& b, int l, int r) {
    const auto key = std::minmax(l, r);
    if (auto it = b.products.find(key); it != b.products.end()) return it->second;
    const int id = push(b, Node{NodeKind::Product, key.first, key.second, 0.0}, {}, false);
    b.products.emplace(key, id);
    return id;
  }

  int compile(const PolyRegistry& registry, const Polynomial& p, Builder& b) {
    if (!(p.scale != 0.0 && std::isfinite(p.scale))) throw StructuralError("polynomial scale must be finite and nonzero");
    if (const auto* c = std::get_if<Constant>(&p.kind)) {
      return push(b, Node{NodeKind::Constant, 0, 0, c->value / p.scale}, {}, false);
    }
    if (const auto* x = std::get_if<Coordinate>(&p.kind)) {
      if (x->index < 0 || x->index >= dim_) throw StructuralError("coordinate index out of range");
      if (p.scale == 1.0) return push(b, Node{NodeKind::Coordinate, x->index, 0, 0.0}, {}, false);
      const int raw = push(b, Node{NodeKind::Coordinate, x->index, 0, 0.0}, {}, false);
      PendingSum s{{raw}, {1.0}, p.scale};
      return push(b, Node{NodeKind::Block}, std::move(s), true);
    }
    const auto& comb = std::get<Combination>(p.kind);
    PendingSum s;
    s.scale = p.scale;
    s.inputs.reserve(comb.base_terms.size() + comb.lower_terms.size());
    for (const auto& t : comb.base_terms) {
      const int l = compile_ref(registry, t.left, b);
      s.inputs.push_back(t.right ? product(b, l, compile_ref(registry, *t.right, b)) : l);
      s.coefs.push_back(t.coef);
    }
    for (const auto& t : comb.lower_terms) {
      s.inputs.push_back(compile_ref(registry, t.ref, b));
      s.coefs.push_back(t.coef);
    }
    // An empty combination is the zero polynomial.
    return push(b, Node{NodeKind::Block}, std::move(s), true);
  }

  void finish(Builder& b) {
    std::size_t k = 0;
    while (k < nodes_.size()) {
      if (!b.is_sum[k]) {
        ++k;
        continue;
      }
      const auto first = static_cast<int>(k);
      std::size_t end = k + 1;
      while (end < nodes_.size() && b.is_sum[end] && b.sums[end].inputs == b.sums[k].inputs &&
             std::all_of(b.sums[end].inputs.begin(), b.sums[end].inputs.end(), [&](int i) { return i < first; })) {
        ++end;
      }
      Block blk;
      blk.inputs = b.sums[k].inputs;
      blk.coefs.resize(static_cast<Index>(end - k), static_cast<Index>(blk.inputs.size()));
      blk.scales.resize(static_cast<Index>(end - k));
      for (std::size_t r = k; r < end; ++r) {
        for (std::size_t i = 0; i < blk.inputs.size(); ++i) blk.coefs(static_cast<Index>(r - k), static_cast<Index>(i)) = b.sums[r].coefs[i];
        blk.scales(static_cast<Index>(r - k)) = b.sums[r].scale;
        nodes_[r].a = static_cast<int>(blocks_.size());
      }
      max_block_inputs_ = std::max(max_block_inputs_, blk.inputs.size());
      blocks_.push_back(std::move(blk));
      k = end;
    }
  }

  int dim_ = 0;
  std::vector<Node> nodes_;
  std::vector<Block> blocks_;
  std::vector<int> outputs_;
  std::size_t max_block_inputs_ = 0;
};

/// f(point), recursively through the registry.
inline double evaluate(const Polynomial& poly, const PolyRegistry& registry, const Vector& point) {
  if (point.size() != registry.dim()) throw InputError("point dimension does not match registry");
  const Program prog(registry, std::span<const Polynomial>(&poly, 1));
  return prog.evaluate_point(point)(0);
}

inline double evaluate(PolyRef ref, const PolyRegistry& registry, const Vector& point) {
  return evaluate(registry.poly(ref), registry, point);
}

/// Column j is the evaluation vector of polys[j] on `points`.
inline Matrix evaluate_matrix(std::span<const Polynomial> polys, const PolyRegistry& registry, const Matrix& points) {
  if (polys.empty()) throw InputError("evaluate_matrix needs at least one polynomial");
  if (points.cols() != registry.dim()) throw InputError("point dimension does not match registry");
  return Program(registry, polys).evaluate(points);
}

inline Matrix evaluate_matrix(std::span<const PolyRef> refs, const PolyRegistry& registry, const Matrix& points) {
  if (refs.empty()) throw InputError("evaluate_matrix needs at least one polynomial");
  if (points.cols() != registry.dim()) throw InputError("point dimension does not match registry");
  return Program(registry, refs).evaluate(points);
}

inline Matrix evaluate_matrix(std::span<const Polynomial> polys, const PolyRegistry& registry, const PointSet& points) {
  return evaluate_matrix(polys, registry, points.matrix());
}

inline Matrix evaluate_matrix(std::span<const PolyRef> refs, const PolyRegistry& registry, const PointSet& points) {
  return evaluate_matrix(refs, registry, points.matrix());
}

/// Sum of coef * polys[j] for Combination-kind inputs, merging repeated terms.
/// Products are keyed with their factors in canonical order.
inline Polynomial linear_combination(std::span<const Polynomial> polys, const Vector& coefs, double drop_below = 0.0) {
  if (static_cast<Index>(polys.size()) != coefs.size()) throw InputError("coefficient count mismatch");
  if (polys.empty()) throw InputError("linear_combination of nothing");
  const int degree = polys.front().degree;
  std::map<std::pair<PolyRef, std::optional<PolyRef>>, double> base;
  std::map<PolyRef, double> lower;
  for (std::size_t j = 0; j < polys.size(); ++j) {
    const auto& p = polys[j];
    if (!p.is_combination()) throw InputError("linear_combination expects combination polynomials");
    if (p.degree != degree) throw InputError("linear_combination expects equal degrees");
    const double c = coefs(static_cast<Index>(j)) / p.scale;
    if (c == 0.0) continue;
    for (const auto& t : p.combination().base_terms) {
      auto l = t.left;
      auto r = t.right;
      if (r && *r < l) std::swap(l, *r);
      base[{l, r}] += c * t.coef;
    }
    for (const auto& t : p.combination().lower_terms) lower[t.ref] += c * t.coef;
  }
  Combination out;
  out.base_terms.reserve(base.size());
  for (const auto& [key, c] : base) {
    if (std::abs(c) > drop_below) out.base_terms.push_back({c, key.first, key.second});
  }
  for (const auto& [ref, c] : lower) {
    if (std::abs(c) > drop_below) out.lower_terms.push_back({c, ref});
  }
  return {degree, std::move(out), 1.0};
}

// ---------------------------------------------------------------------------
// Monomial oracle

/// Exponent tuple -> coefficient.
using MonomialMap = std::map<std::vector<int>, double>;

namespace detail {

inline MonomialMap multiply(const MonomialMap& a, const MonomialMap& b) {
  MonomialMap out;
  for (const auto& [ea, ca] : a) {
    for (const auto& [eb, cb] : b) {
      std::vector<int> e(ea.size());
      for (std::size_t k = 0; k < e.size(); ++k) e[k] = ea[k] + eb[k];
      out[e] += ca * cb;
    }
  }
  return out;
}

inline void axpy(MonomialMap& acc, double c, const MonomialMap& m) {
  for (const auto& [e, v] : m) acc[e] += c * v;
}

inline MonomialMap expand(const Polynomial& p, const PolyRegistry& reg, std::map<PolyRef, MonomialMap>& memo) {
  const auto d = static_cast<std::size_t>(reg.dim());
  MonomialMap out;
  auto sub = [&](PolyRef r) -> const MonomialMap& {
    auto it = memo.find(r);
    if (it == memo.end()) it = memo.emplace(r, expand(reg.poly(r), reg, memo)).first;
    return it->second;
  };
  if (const auto* c = std::get_if<Constant>(&p.kind)) {
    out[std::vector<int>(d, 0)] = c->value;
  } else if (const auto* x = std::get_if<Coordinate>(&p.kind)) {
    std::vector<int> e(d, 0);
    e[static_cast<std::size_t>(x->index)] = 1;
    out[e] = 1.0;
  } else {
    const auto& comb = std::get<Combination>(p.kind);
    for (const auto& t : comb.base_terms) {
      if (t.right) {
        axpy(out, t.coef, multiply(sub(t.left), sub(*t.right)));
      } else {
        axpy(out, t.coef, sub(t.left));
      }
    }
    for (const auto& t : comb.lower_terms) axpy(out, t.coef, sub(t.ref));
  }
  if (p.scale != 1.0) {
    for (auto& [e, v] : out) v /= p.scale;
  }
  return out;
}

}  // namespace detail

/// Explicit monomial coefficients of `poly`. Exponential in degree; intended
/// as a test oracle, hence the cap.
inline MonomialMap expand_to_monomials(const Polynomial& poly, const PolyRegistry& registry, int degree_cap = 6) {
  if (poly.degree > degree_cap) {
    throw CapacityError("monomial expansion of degree " + std::to_string(poly.degree) + " exceeds cap " +
                        std::to_string(degree_cap));
  }
  std::map<PolyRef, MonomialMap> memo;
  return detail::expand(poly, registry, memo);
}

inline double evaluate_monomials(const MonomialMap& m, const Vector& point) {
  double s = 0.0;
  for (const auto& [e, c] : m) {
    double v = c;
    for (std::size_t k = 0; k < e.size(); ++k) {
      for (int p = 0; p < e[k]; ++p) v *= point(static_cast<Index>(k));
    }
    s += v;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Spectral split

/// Full SVD of M with the right singular vectors partitioned at `threshold`.
/// singular_values has one entry per column of M; columns beyond the rank
/// dimension carry an implicit zero.
struct SpectralSplit {
  Matrix left_singulars;
  Vector singular_values;
  Matrix right_above;
  Matrix right_below;
  double threshold = 0.0;

  Vector values_above() const { return singular_values.head(right_above.cols()); }
  Vector values_below() const { return singular_values.tail(right_below.cols()); }
};

inline SpectralSplit spectral_split(const Matrix& m, double threshold) {
  if (!(threshold >= 0.0)) throw InputError("spectral_split threshold must be >= 0");
  if (!m.allFinite()) throw InputError("spectral_split input must be finite");
  SpectralSplit out;
  out.threshold = threshold;
  const Index cols = m.cols();
  if (cols == 0 || m.rows() == 0) {
    out.left_singulars = Matrix::Identity(m.rows(), m.rows());
    out.singular_values = Vector::Zero(cols);
    out.right_above = Matrix(cols, 0);
    out.right_below = Matrix::Identity(cols, cols);
    return out;
  }
  Eigen::JacobiSVD<Matrix, Eigen::ColPivHouseholderQRPreconditioner> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  out.left_singulars = svd.matrixU();
  out.singular_values = Vector::Zero(cols);
  const Vector& s = svd.singularValues();
  out.singular_values.head(s.size()) = s;
  Index above = 0;
  while (above < cols && out.singular_values(above) > threshold) ++above;
  const Matrix& v = svd.matrixV();
  out.right_above = v.leftCols(above);
  out.right_below = v.rightCols(cols - above);
  return out;
}

/// Moore-Penrose pseudo-inverse, singular values below 1e-10 * sigma_max are dropped.
inline Matrix pseudo_inverse(const Matrix& a, double relative_cutoff = 1e-10) {
  if (a.size() == 0) return Matrix::Zero(a.cols(), a.rows());
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  const double cut = s.size() > 0 ? relative_cutoff * s(0) : 0.0;
  Vector inv = Vector::Zero(s.size());
  for (Index i = 0; i < s.size(); ++i) {
    if (s(i) > cut && s(i) > 0.0) inv(i) = 1.0 / s(i);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

}  // namespace vanish
