#pragma once

// Model files: the registry layer by layer (kind tag, refs, coefficients,
// rescale factor), the vanishing/nonvanishing ref lists, knots, a config
// echo and fit diagnostics. Doubles are written with round-trip precision,
// so a reloaded model evaluates bit-for-bit like the original.

#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vanish/basis.hpp"
#include "vanish/dataset.hpp"
#include "vanish/pursuit.hpp"

namespace vanish {

using Json = nlohmann::ordered_json;

inline constexpr const char* kModelFormat = "vanish-model";
inline constexpr int kModelVersion = 1;

namespace detail {

inline Json ref_json(PolyRef r) { return Json::array({r.degree, r.position}); }

inline PolyRef ref_from(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw InputError("model JSON: a ref must be [degree, position]");
  return {j.at(0).get<int>(), j.at(1).get<int>()};
}

inline Json refs_json(const std::vector<PolyRef>& refs) {
  Json a = Json::array();
  for (const auto& r : refs) a.push_back(ref_json(r));
  return a;
}

inline std::vector<PolyRef> refs_from(const Json& j) {
  std::vector<PolyRef> out;
  for (const auto& r : j) out.push_back(ref_from(r));
  return out;
}

inline Json matrix_json(const Matrix& m) {
  Json rows = Json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from(const Json& j, Index cols) {
  Matrix m(static_cast<Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].size() != static_cast<std::size_t>(cols)) throw InputError("model JSON: ragged point row");
    for (Index c = 0; c < cols; ++c) m(static_cast<Index>(i), c) = j[i][static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

inline Json vector_json(const Vector& v) {
  Json a = Json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

inline Vector vector_from(const Json& j) {
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Index>(i)) = j[i].get<double>();
  return v;
}

inline Json poly_json(const Polynomial& p, Role role) {
  Json e{{"role", role_name(role)}, {"degree", p.degree}, {"scale", p.scale}};
  if (const auto* c = std::get_if<Constant>(&p.kind)) {
    e["kind"] = "constant";
    e["value"] = c->value;
  } else if (const auto* x = std::get_if<Coordinate>(&p.kind)) {
    e["kind"] = "coordinate";
    e["index"] = x->index;
  } else {
    const auto& comb = std::get<Combination>(p.kind);
    e["kind"] = "combination";
    Json base = Json::array();
    for (const auto& t : comb.base_terms) base.push_back(Json::array({t.coef, ref_json(t.left), t.right ? ref_json(*t.right) : Json()}));
    Json lower = Json::array();
    for (const auto& t : comb.lower_terms) lower.push_back(Json::array({t.coef, ref_json(t.ref)}));
    e["base"] = std::move(base);
    e["lower"] = std::move(lower);
  }
  return e;
}

inline Role role_from(const std::string& s) {
  if (s == "primitive") return Role::Primitive;
  if (s == "nonvanishing") return Role::Nonvanishing;
  if (s == "vanishing") return Role::Vanishing;
  throw InputError("model JSON: unknown role '" + s + "'");
}

inline RegistryEntry entry_from(const Json& e) {
  RegistryEntry out;
  out.role = role_from(e.at("role").get<std::string>());
  out.poly.degree = e.at("degree").get<int>();
  out.poly.scale = e.at("scale").get<double>();
  const std::string kind = e.at("kind").get<std::string>();
  if (kind == "constant") {
    out.poly.kind = Constant{e.at("value").get<double>()};
  } else if (kind == "coordinate") {
    out.poly.kind = Coordinate{e.at("index").get<int>()};
  } else if (kind == "combination") {
    Combination c;
    for (const auto& t : e.at("base")) {
      BaseTerm b;
      b.coef = t.at(0).get<double>();
      b.left = ref_from(t.at(1));
      if (!t.at(2).is_null()) b.right = ref_from(t.at(2));
      c.base_terms.push_back(b);
    }
    for (const auto& t : e.at("lower")) c.lower_terms.push_back({t.at(0).get<double>(), ref_from(t.at(1))});
    out.poly.kind = std::move(c);
  } else {
    throw InputError("model JSON: unknown polynomial kind '" + kind + "'");
  }
  return out;
}

inline Json registry_json(const PolyRegistry& reg) {
  Json layers = Json::array();
  for (int t = 0; t <= reg.max_degree(); ++t) {
    Json layer = Json::array();
    for (const auto& e : reg.layer(t)) layer.push_back(poly_json(e.poly, e.role));
    layers.push_back(std::move(layer));
  }
  return {{"dim", reg.dim()}, {"layers", std::move(layers)}};
}

inline PolyRegistry registry_from(const Json& j) {
  std::vector<std::vector<RegistryEntry>> layers;
  for (const auto& layer : j.at("layers")) {
    layers.emplace_back();
    for (const auto& e : layer) layers.back().push_back(entry_from(e));
  }
  return PolyRegistry::from_layers(j.at("dim").get<int>(), layers);
}

inline Json basis_json(const BasisSet& b) {
  return {{"registry", registry_json(b.registry)},
          {"vanishing", refs_json(b.vanishing)},
          {"nonvanishing", refs_json(b.nonvanishing)}};
}

inline BasisSet basis_from(const Json& j) {
  BasisSet b;
  b.registry = registry_from(j.at("registry"));
  b.vanishing = refs_from(j.at("vanishing"));
  b.nonvanishing = refs_from(j.at("nonvanishing"));
  for (const auto& r : b.vanishing) b.registry.at(r);
  for (const auto& r : b.nonvanishing) b.registry.at(r);
  return b;
}

inline Json config_json(const PursuitConfig& c) {
  return {{"epsilon", c.epsilon},
          {"delta", c.delta_value()},
          {"lambda", c.lambda},
          {"gamma", c.gamma},
          {"eta_floor_snap", c.eta_floor_snap},
          {"max_degree", c.max_degree},
          {"max_resets", c.max_resets},
          {"anchor_to_original", c.anchor_to_original},
          {"squared_norms", c.squared_norms},
          {"optimizer",
           {{"max_iters", c.optimizer.max_iters},
            {"grad_tol", c.optimizer.grad_tol},
            {"step_tol", c.optimizer.step_tol},
            {"fd_step", c.optimizer.fd_step},
            {"max_backtracks", c.optimizer.max_backtracks}}}};
}

inline PursuitConfig config_from(const Json& j) {
  PursuitConfig c;
  c.epsilon = j.at("epsilon").get<double>();
  c.delta = j.at("delta").get<double>();
  c.lambda = j.at("lambda").get<double>();
  c.gamma = j.at("gamma").get<double>();
  c.eta_floor_snap = j.at("eta_floor_snap").get<double>();
  c.max_degree = j.at("max_degree").get<int>();
  c.max_resets = j.at("max_resets").get<int>();
  c.anchor_to_original = j.at("anchor_to_original").get<bool>();
  c.squared_norms = j.at("squared_norms").get<bool>();
  const Json& o = j.at("optimizer");
  c.optimizer.max_iters = o.at("max_iters").get<int>();
  c.optimizer.grad_tol = o.at("grad_tol").get<double>();
  c.optimizer.step_tol = o.at("step_tol").get<double>();
  c.optimizer.fd_step = o.at("fd_step").get<double>();
  c.optimizer.max_backtracks = o.at("max_backtracks").get<int>();
  return c;
}

inline Json diagnostics_json(const PursuitDiagnostics& d) {
  Json resets = Json::array();
  for (const auto& r : d.resets) resets.push_back({{"eta_before", r.eta_before}, {"eta_after", r.eta_after}, {"degree", r.degree}});
  return {{"eta_trace", d.eta_trace},
          {"resets", std::move(resets)},
          {"vanishing_per_degree", d.vanishing_per_degree},
          {"nonvanishing_per_degree", d.nonvanishing_per_degree},
          {"nonvanishing_total_trace", d.nonvanishing_total_trace},
          {"pursuit_iterations", d.pursuit_iterations},
          {"objective_evaluations", d.objective_evaluations},
          {"optimizer_flags", d.optimizer_flags},
          {"max_data_norm", d.max_data_norm},
          {"max_knot_norm", d.max_knot_norm},
          {"truncated", d.truncated},
          {"truncation_reason", d.truncation_reason}};
}

inline PursuitDiagnostics diagnostics_from(const Json& j) {
  PursuitDiagnostics d;
  d.eta_trace = j.at("eta_trace").get<std::vector<double>>();
  for (const auto& r : j.at("resets")) {
    d.resets.push_back({r.at("eta_before").get<double>(), r.at("eta_after").get<double>(), r.at("degree").get<int>()});
  }
  d.vanishing_per_degree = j.at("vanishing_per_degree").get<std::vector<int>>();
  d.nonvanishing_per_degree = j.at("nonvanishing_per_degree").get<std::vector<int>>();
  d.nonvanishing_total_trace = j.at("nonvanishing_total_trace").get<std::vector<int>>();
  d.pursuit_iterations = j.at("pursuit_iterations").get<int>();
  d.objective_evaluations = j.at("objective_evaluations").get<long>();
  d.optimizer_flags = j.at("optimizer_flags").get<int>();
  d.max_data_norm = j.at("max_data_norm").get<double>();
  d.max_knot_norm = j.at("max_knot_norm").get<double>();
  d.truncated = j.at("truncated").get<bool>();
  d.truncation_reason = j.at("truncation_reason").get<std::string>();
  return d;
}

inline Json scaling_json(const MinMaxScaler& s) { return {{"min", vector_json(s.lo)}, {"max", vector_json(s.hi)}}; }

template <typename F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed model JSON: ") + e.what());
  }
}

inline void check_header(const Json& j, const char* method) {
  if (!j.is_object() || j.value("format", "") != kModelFormat) throw InputError("not a model file");
  if (j.at("version").get<int>() != kModelVersion) throw InputError("unsupported model version");
  if (method && j.at("method").get<std::string>() != method) {
    throw InputError(std::string("model JSON holds a '") + j.at("method").get<std::string>() + "' model, expected '" + method + "'");
  }
}

}  // namespace detail

inline Json model_to_json(const KnotModel& m, const std::optional<MinMaxScaler>& scaling = std::nullopt) {
  Json j{{"format", kModelFormat}, {"version", kModelVersion}, {"method", "proposed"}};
  j["basis"] = detail::basis_json(m.basis);
  j["knots"] = detail::matrix_json(m.knots.matrix());
  j["config"] = detail::config_json(m.config);
  j["diagnostics"] = detail::diagnostics_json(m.diagnostics);
  if (scaling) j["scaling"] = detail::scaling_json(*scaling);
  return j;
}

inline Json model_to_json(const VcaResult& v, double epsilon, const std::optional<MinMaxScaler>& scaling = std::nullopt) {
  Json j{{"format", kModelFormat}, {"version", kModelVersion}, {"method", "vca"}};
  j["basis"] = detail::basis_json(v.basis);
  j["config"] = {{"epsilon", epsilon}};
  j["diagnostics"] = {{"vanishing_per_degree", v.vanishing_per_degree},
                      {"nonvanishing_per_degree", v.nonvanishing_per_degree},
                      {"truncated", v.truncated}};
  if (scaling) j["scaling"] = detail::scaling_json(*scaling);
  return j;
}

inline std::string model_method(const Json& j) {
  return detail::guarded([&] {
    detail::check_header(j, nullptr);
    return j.at("method").get<std::string>();
  });
}

inline KnotModel knot_model_from_json(const Json& j) {
  return detail::guarded([&] {
    detail::check_header(j, "proposed");
    KnotModel m;
    m.basis = detail::basis_from(j.at("basis"));
    m.knots = PointSet(detail::matrix_from(j.at("knots"), m.basis.registry.dim()));
    m.config = detail::config_from(j.at("config"));
    m.diagnostics = detail::diagnostics_from(j.at("diagnostics"));
    return m;
  });
}

inline VcaResult vca_from_json(const Json& j) {
  return detail::guarded([&] {
    detail::check_header(j, "vca");
    VcaResult v;
    v.basis = detail::basis_from(j.at("basis"));
    const Json& d = j.at("diagnostics");
    v.vanishing_per_degree = d.at("vanishing_per_degree").get<std::vector<int>>();
    v.nonvanishing_per_degree = d.at("nonvanishing_per_degree").get<std::vector<int>>();
    v.truncated = d.at("truncated").get<bool>();
    return v;
  });
}

/// The basis of either model kind.
inline BasisSet basis_from_json(const Json& j) {
  return detail::guarded([&] {
    detail::check_header(j, nullptr);
    return detail::basis_from(j.at("basis"));
  });
}

/// Knots of a proposed model; empty for VCA models.
inline std::optional<PointSet> knots_from_json(const Json& j) {
  return detail::guarded([&]() -> std::optional<PointSet> {
    detail::check_header(j, nullptr);
    if (!j.contains("knots")) return std::nullopt;
    return PointSet(detail::matrix_from(j.at("knots"), j.at("basis").at("registry").at("dim").get<int>()));
  });
}

inline std::optional<MinMaxScaler> scaling_from_json(const Json& j) {
  return detail::guarded([&]() -> std::optional<MinMaxScaler> {
    if (!j.contains("scaling")) return std::nullopt;
    MinMaxScaler s;
    s.lo = detail::vector_from(j.at("scaling").at("min"));
    s.hi = detail::vector_from(j.at("scaling").at("max"));
    return s;
  });
}

inline void save_json(const std::string& path, const Json& j) {
  std::ofstream f(path);
  if (!f) throw InputError("cannot write " + path);
  f << j.dump(2) << '\n';
  if (!f) throw InputError("write failed for " + path);
}

inline Json load_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open " + path);
  try {
    return Json::parse(f);
  } catch (const nlohmann::json::parse_error& e) {
    throw InputError("cannot parse " + path + ": " + e.what());
  }
}

}  // namespace vanish
