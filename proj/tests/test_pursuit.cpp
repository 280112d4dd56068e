#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "vanish/experiments.hpp"
#include "vanish/generators.hpp"
#include "vanish/pursuit.hpp"
#include "vanish/serialize.hpp"

using namespace vanish;

namespace {

PursuitConfig config(double eps, double lambda, int max_degree = 10) {
  PursuitConfig c;
  c.epsilon = eps;
  c.lambda = lambda;
  c.max_degree = max_degree;
  return c;
}

Vector quadric_vector(const MonomialMap& m) {
  const auto mons = oracle::monomials_upto(2, 2);
  Vector v = Vector::Zero(static_cast<Index>(mons.size()));
  for (std::size_t k = 0; k < mons.size(); ++k) {
    if (auto it = m.find(mons[k]); it != m.end()) v(static_cast<Index>(k)) = it->second;
  }
  return v;
}

// Eq. (2) contract, |F| <= |Z| after every degree, eta never increasing and
// every reset strictly lowering it.
void expect_invariants(const KnotModel& m, const PointSet& x) {
  const auto& d = m.diagnostics;
  const double eps = m.config.epsilon;
  const double delta = m.config.delta_value();
  if (!d.truncated) {
    const Matrix gx = m.basis.evaluate_vanishing(x.matrix());
    const Matrix gz = m.basis.evaluate_vanishing(m.knots.matrix());
    for (Index j = 0; j < gx.cols(); ++j) {
      EXPECT_LE(gx.col(j).norm(), eps + 1e-8);
      EXPECT_LE(gz.col(j).norm(), delta + 1e-8);
    }
  }
  for (int total : d.nonvanishing_total_trace) EXPECT_LE(total, m.knots.size());
  EXPECT_LE(static_cast<Index>(m.basis.nonvanishing.size()), m.knots.size());
  for (std::size_t i = 1; i < d.eta_trace.size(); ++i) EXPECT_LE(d.eta_trace[i], d.eta_trace[i - 1]);
  for (const auto& r : d.resets) EXPECT_LT(r.eta_after, r.eta_before);
}

}  // namespace

TEST(CoolEta, Formula) {
  EXPECT_DOUBLE_EQ(cool_eta(1.0, 0.9, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(cool_eta(1.0, 0.9, 0.95), 0.9);
  EXPECT_DOUBLE_EQ(cool_eta(1.0, 0.9, std::nullopt), 0.9);
}

TEST(CoolEta, ClampsAndSnapsToDelta) {
  EXPECT_DOUBLE_EQ(cool_eta(1.0, 0.9, 0.01, 0.1), 0.1);
  EXPECT_DOUBLE_EQ(cool_eta(0.1 + 1e-13, 0.9999999999999, std::nullopt, 0.1), 0.1);
}

TEST(CoolEta, FromPolynomials) {
  PolyRegistry reg(1, 1);
  Combination c;
  c.base_terms.push_back({1.0, reg.coordinate_ref(0), std::nullopt});
  const std::vector<Polynomial> g{{1, c, 1.0}};
  const PointSet z = PointSet::from_rows({{0.3}, {0.4}});
  EXPECT_DOUBLE_EQ(cool_eta(1.0, 0.9, g, z, reg), 0.5);
}

TEST(Pursuit, EmptyLayerSkipsLoop) {
  const PointSet x = gen_circle(0, 10, 0.05);
  PolyRegistry reg(2, x.size());
  const std::vector<PolyRef> lower{PolyRegistry::constant_ref()};
  const auto cands = coordinate_candidates(reg);
  BasisLayerResult layer = find_basis(cands, lower, x, x, 1e-6, 1e-6, reg);
  ASSERT_TRUE(layer.vanishing.empty());
  const PursuitStep s = exact_vanish_pursuit(reg, lower, cands, layer, x, x, 1e-6, 1, config(1e-6, 0.1));
  EXPECT_EQ(s.iterations, 0);
  EXPECT_EQ(s.knots.matrix(), x.matrix());
  EXPECT_TRUE(s.eta_trace.empty());
}

TEST(Pursuit, ExactCircleBreaksOnFirstCheck) {
  const PointSet x = gen_circle(0, 30, 0.0);
  // Only exactly vanishing polynomials pass eps, so the knots are already done.
  const KnotModel m = fit(x, config(1e-6, 0.01, 20));
  EXPECT_FALSE(m.diagnostics.truncated);
  EXPECT_EQ(m.diagnostics.resets.size(), 0u);
  EXPECT_EQ(m.diagnostics.eta_trace.size(), 1u);  // eta never cooled
  EXPECT_LE((m.knots.matrix() - x.matrix()).cwiseAbs().maxCoeff(), 1e-8);
  expect_invariants(m, x);
}

TEST(Fit, SinglePoint) {
  const PointSet x = PointSet::from_rows({{0.5, -1.0, 2.0}});
  PursuitConfig c = config(0.1, 0.1);
  c.delta = 0.0;
  const KnotModel m = fit(x, c);
  ASSERT_EQ(m.basis.vanishing.size(), 3u);
  EXPECT_EQ(m.diagnostics.vanishing_per_degree.size(), 1u);
  EXPECT_EQ(m.knots.matrix(), x.matrix());
  // Each g is affine and vanishes at p, so g(p + e_j) recovers its gradient.
  Matrix grads(3, 3);
  const Matrix gp = m.basis.evaluate_vanishing(x.matrix());
  EXPECT_LE(gp.cwiseAbs().maxCoeff(), 1e-14);
  for (Index j = 0; j < 3; ++j) {
    Matrix q = x.matrix();
    q(0, j) += 1.0;
    grads.row(j) = m.basis.evaluate_vanishing(q).row(0);
  }
  Eigen::JacobiSVD<Matrix> svd(grads);
  EXPECT_GT(svd.singularValues().minCoeff(), 1e-8);
}

TEST(Fit, NoisyCircleFindsCircle) {
  const PointSet x = gen_circle(0, 30, 0.05);
  const KnotModel m = fit(x, config(0.05, 0.01, 20));
  EXPECT_FALSE(m.diagnostics.truncated);
  expect_invariants(m, x);
  EXPECT_LT(oracle::mean_radial_deviation(m.knots.matrix()), oracle::mean_radial_deviation(x.matrix()));
  bool found = false;
  for (const auto& r : m.basis.vanishing) {
    const Polynomial& p = m.basis.registry.poly(r);
    if (p.degree != 2) continue;
    const Vector q = quadric_vector(expand_to_monomials(p, m.basis.registry));
    if (q.norm() < 1e-6) continue;
    const Vector n = oracle::sign_normalized(q);  // order: 1, y, y^2, x, xy, x^2
    const double lead = 0.5 * (n(2) + n(5));
    EXPECT_NEAR(n(2) / lead, 1.0, 0.1);
    EXPECT_NEAR(n(5) / lead, 1.0, 0.1);
    EXPECT_NEAR(-n(0) / lead, 1.0, 0.1);
    for (Index k : {1, 3, 4}) EXPECT_LT(std::abs(n(k)), 0.1 * lead);
    found = true;
  }
  EXPECT_TRUE(found);
}

TEST(Fit, BlobsCollapseToFewKnots) {
  const PointSet x = gen_blobs(0);
  ASSERT_EQ(x.size(), 60);
  const KnotModel m = fit(x, config(0.3, 0.01));
  EXPECT_FALSE(m.diagnostics.truncated);
  expect_invariants(m, x);
  EXPECT_LE(distinct_points(m.knots.matrix(), 1e-3).rows(), 5);
}

TEST(Fit, InvariantsOnConcentricAndRandom) {
  expect_invariants(fit(gen_concentric(0), config(0.1, 0.01, 20)), gen_concentric(0));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 3; ++trial) {
    Matrix m(20, 3);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = 0.5 * g(rng);
    const PointSet x(m);
    const KnotModel k = fit(x, config(0.3, 0.01));
    EXPECT_FALSE(k.diagnostics.truncated);
    expect_invariants(k, x);
  }
}

TEST(Fit, ResetRebuildsConstantForKnots) {
  // After any run the degree-0 constant is 1/sqrt(|Z|).
  const PointSet x = gen_circle(1, 30, 0.05);
  const KnotModel m = fit(x, config(0.05, 0.01, 20));
  expect_invariants(m, x);
  const auto& c = std::get<Constant>(m.basis.registry.poly(PolyRegistry::constant_ref()).kind);
  EXPECT_DOUBLE_EQ(c.value, 1.0 / std::sqrt(static_cast<double>(m.knots.size())));
}

TEST(Fit, TruncationIsFlaggedNotThrown) {
  const PointSet x = gen_circle(0, 30, 0.05);
  const KnotModel m = fit(x, config(0.05, 0.01, 3));
  EXPECT_TRUE(m.diagnostics.truncated);
  EXPECT_EQ(m.diagnostics.truncation_reason, "max_degree");
}

TEST(Fit, Deterministic) {
  const PointSet x = gen_blobs(4);
  const KnotModel a = fit(x, config(0.3, 0.01));
  const KnotModel b = fit(x, config(0.3, 0.01));
  EXPECT_EQ(model_to_json(a).dump(), model_to_json(b).dump());
}

TEST(Fit, ConfigValidation) {
  const PointSet x = gen_circle(0);
  EXPECT_THROW(fit(x, config(0.0, 0.1)), InputError);
  PursuitConfig c = config(0.1, 0.1);
  c.delta = 0.2;
  EXPECT_THROW(fit(x, c), InputError);
  c = config(0.1, 0.1);
  c.gamma = 1.0;
  EXPECT_THROW(fit(x, c), InputError);
  EXPECT_DOUBLE_EQ(config(0.1, 0.1).delta_value(), 0.001);
}
