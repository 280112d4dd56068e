#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "vanish/basis.hpp"
#include "vanish/generators.hpp"

using namespace vanish;

namespace {

PointSet four_circle_points() { return PointSet::from_rows({{1, 0}, {0, 1}, {-1, 0}, {0, -1}}); }

Matrix random_points(std::mt19937_64& rng, Index n, Index d, double spread = 1.0) {
  std::normal_distribution<double> g(0.0, spread);
  Matrix m(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) m(i, j) = g(rng);
  }
  return m;
}

// Coefficients over monomials_upto(2, 2), read off the explicit expansion.
Vector quadric_vector(const MonomialMap& m) {
  const auto mons = oracle::monomials_upto(2, 2);
  Vector v = Vector::Zero(static_cast<Index>(mons.size()));
  for (std::size_t k = 0; k < mons.size(); ++k) {
    if (auto it = m.find(mons[k]); it != m.end()) v(static_cast<Index>(k)) = it->second;
  }
  return v;
}

Vector circle_vector(double r2 = 1.0) {
  MonomialMap m{{{0, 0}, -r2}, {{2, 0}, 1.0}, {{0, 2}, 1.0}};
  return quadric_vector(m);
}

// Degree-1 layers as the pursuit would build them with Z = X0.
struct DegreeOne {
  PolyRegistry registry;
  std::vector<PolyRef> lower;
  std::vector<PolyRef> f1;
};

DegreeOne build_degree_one(const PointSet& x, double eps) {
  DegreeOne out{PolyRegistry(static_cast<int>(x.dim()), x.size()), {PolyRegistry::constant_ref()}, {}};
  BasisLayerResult l1 = find_basis(coordinate_candidates(out.registry), out.lower, x, x, eps, eps, out.registry);
  for (auto& f : l1.nonvanishing) out.f1.push_back(out.registry.add(std::move(f), Role::Nonvanishing));
  out.lower.insert(out.lower.end(), out.f1.begin(), out.f1.end());
  return out;
}

}  // namespace

TEST(GenerateCandidates, Cardinality) {
  PolyRegistry reg(3, 4);
  std::vector<PolyRef> f1{reg.coordinate_ref(0), reg.coordinate_ref(1)};
  std::vector<PolyRef> fp{reg.coordinate_ref(0), reg.coordinate_ref(1), reg.coordinate_ref(2)};
  const auto c = generate_candidates(f1, fp, reg);
  EXPECT_EQ(c.size(), 6u);
  for (const auto& p : c) EXPECT_EQ(p.degree, 2);
}

TEST(GenerateCandidates, ProductsExpandToAllPairs) {
  PolyRegistry reg(2, 4);
  std::vector<PolyRef> f1{reg.coordinate_ref(0), reg.coordinate_ref(1)};
  const auto c = generate_candidates(f1, f1, reg);
  ASSERT_EQ(c.size(), 4u);
  const std::vector<std::vector<int>> want{{2, 0}, {1, 1}, {1, 1}, {0, 2}};
  for (std::size_t i = 0; i < c.size(); ++i) {
    const MonomialMap m = expand_to_monomials(c[i], reg);
    ASSERT_EQ(m.size(), 1u);
    EXPECT_EQ(m.begin()->first, want[i]);
    EXPECT_DOUBLE_EQ(m.begin()->second, 1.0);
  }
}

TEST(GenerateCandidates, EmptyFactorSignalsNoCandidates) {
  PolyRegistry reg(2, 4);
  std::vector<PolyRef> f1{reg.coordinate_ref(0)};
  EXPECT_TRUE(generate_candidates({}, f1, reg).empty());
  EXPECT_TRUE(generate_candidates(f1, {}, reg).empty());
}

TEST(Residualize, DegreeOneIsMeanCentering) {
  std::mt19937_64 rng(1);
  const PointSet z(random_points(rng, 9, 3, 2.0));
  PolyRegistry reg(3, z.size());
  const std::vector<PolyRef> lower{PolyRegistry::constant_ref()};
  const auto res = residualize(coordinate_candidates(reg), lower, z, reg);
  const Matrix e = evaluate_matrix(res, reg, z);
  const Matrix centered = z.matrix().rowwise() - z.matrix().colwise().mean();
  EXPECT_LE((e - centered).norm(), 1e-12);
  EXPECT_LE(e.colwise().sum().norm(), 1e-12);
}

TEST(Residualize, IdempotentOnOrthogonalCandidates) {
  std::mt19937_64 rng(2);
  const PointSet z(random_points(rng, 10, 2));
  PolyRegistry reg(2, z.size());
  const std::vector<PolyRef> lower{PolyRegistry::constant_ref()};
  const auto once = residualize(coordinate_candidates(reg), lower, z, reg);
  const auto twice = residualize(once, lower, z, reg);
  EXPECT_LE((evaluate_matrix(twice, reg, z) - evaluate_matrix(once, reg, z)).norm(), 1e-8);
}

TEST(Residualize, OrthogonalToLowerLayersOnZ) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const PointSet z(random_points(rng, 15, 3));
    DegreeOne d1 = build_degree_one(z, 1e-3);
    ASSERT_EQ(d1.f1.size(), 3u);
    const auto cands = generate_candidates(d1.f1, d1.f1, d1.registry);
    const auto res = residualize(cands, d1.lower, z, d1.registry);
    const Matrix fz = evaluate_matrix(std::span<const PolyRef>(d1.lower), d1.registry, z);
    const Matrix cz = evaluate_matrix(res, d1.registry, z);
    const Matrix raw = evaluate_matrix(cands, d1.registry, z);
    EXPECT_LE((fz.transpose() * cz).norm(), 1e-8 * std::max(1.0, raw.norm()));
  }
}

TEST(FindBasis, FourPointCircle) {
  const PointSet x = four_circle_points();
  DegreeOne d1 = build_degree_one(x, 0.1);
  ASSERT_EQ(d1.f1.size(), 2u);
  const auto cands = generate_candidates(d1.f1, d1.f1, d1.registry);
  const BasisLayerResult l2 = find_basis(cands, d1.lower, x, x, 0.1, 0.1, d1.registry);
  ASSERT_FALSE(l2.vanishing.empty());

  // Null space of the 4 x 6 monomial evaluation matrix: x^2 + y^2 - 1 and xy.
  const Matrix mono = oracle::monomial_matrix(x.matrix(), oracle::monomials_upto(2, 2));
  Eigen::JacobiSVD<Matrix> svd(mono, Eigen::ComputeFullV);
  const Matrix null = svd.matrixV().rightCols(2);
  EXPECT_LE((mono * null).norm(), 1e-12);

  Matrix g(6, static_cast<Index>(l2.vanishing.size()));
  for (std::size_t k = 0; k < l2.vanishing.size(); ++k) {
    g.col(static_cast<Index>(k)) = quadric_vector(expand_to_monomials(l2.vanishing[k], d1.registry));
    // each expansion lies in the oracle null space
    const Vector col = g.col(static_cast<Index>(k));
    EXPECT_LE((col - null * (null.transpose() * col)).norm(), 1e-8);
  }
  const Vector circle = circle_vector() / circle_vector().norm();
  const Vector coef = g.colPivHouseholderQr().solve(circle);
  EXPECT_LE((g * coef - circle).norm(), 1e-6);
}

TEST(FindBasis, SameSetsReduceToVca) {
  std::mt19937_64 rng(4);
  const PointSet x(random_points(rng, 12, 2));
  const double eps = 0.3;
  const VcaResult v = vca_fit(x, eps, 3);
  DegreeOne d1 = build_degree_one(x, eps);
  EXPECT_EQ(static_cast<int>(d1.f1.size()), v.nonvanishing_per_degree[0]);
  const auto cands = generate_candidates(d1.f1, d1.f1, d1.registry);
  const BasisLayerResult l2 = find_basis(cands, d1.lower, x, x, eps, eps, d1.registry);
  EXPECT_EQ(static_cast<int>(l2.vanishing.size()), v.vanishing_per_degree[1]);
  EXPECT_EQ(static_cast<int>(l2.nonvanishing.size()), v.nonvanishing_per_degree[1]);
  EXPECT_EQ(l2.diagnostics.discarded, 0);
  // Single-SVD reference: the count of data singular values <= eps.
  const Residual res = detail::residualize(cands, d1.lower, x.matrix(), &x.matrix(), d1.registry);
  Eigen::JacobiSVD<Matrix> svd(res.on_data);
  Index below = res.on_data.cols() - svd.singularValues().size();
  for (Index i = 0; i < svd.singularValues().size(); ++i) below += svd.singularValues()(i) <= eps ? 1 : 0;
  EXPECT_EQ(static_cast<Index>(l2.vanishing.size()), below);
}

TEST(FindBasis, RepeatedSinglePoint) {
  const PointSet z = PointSet::from_rows({{0.3, -0.2, 1.0}, {0.3, -0.2, 1.0}, {0.3, -0.2, 1.0}});
  PolyRegistry reg(3, z.size());
  const std::vector<PolyRef> lower{PolyRegistry::constant_ref()};
  const BasisLayerResult l1 = find_basis(coordinate_candidates(reg), lower, z, z, 0.1, 1e-12, reg);
  EXPECT_EQ(l1.vanishing.size(), 3u);
  EXPECT_TRUE(l1.nonvanishing.empty());
  const Matrix e = evaluate_matrix(l1.vanishing, reg, Matrix::Random(4, 3));
  Eigen::JacobiSVD<Matrix> svd(e);
  EXPECT_GT(svd.singularValues().minCoeff(), 1e-6);  // three independent directions
}

TEST(FindBasis, Contracts) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 8; ++trial) {
    const PointSet x(random_points(rng, 20, 2));
    Matrix zm = x.matrix() + 0.05 * random_points(rng, 20, 2);
    const PointSet z(zm);
    const double eps = 0.4;
    const double eta = 0.2;
    PolyRegistry reg(2, z.size());
    std::vector<PolyRef> lower{PolyRegistry::constant_ref()};
    BasisLayerResult l1 = find_basis(coordinate_candidates(reg), lower, z, x, eps, eta, reg);
    std::vector<PolyRef> f1;
    for (auto& f : l1.nonvanishing) f1.push_back(reg.add(std::move(f), Role::Nonvanishing));
    lower.insert(lower.end(), f1.begin(), f1.end());
    const auto cands = generate_candidates(f1, f1, reg);
    const BasisLayerResult l2 = find_basis(cands, lower, z, x, eps, eta, reg);
    for (const auto& g : l2.vanishing) {
      const std::vector<Polynomial> one{g};
      EXPECT_LE(evaluate_matrix(one, reg, x).norm(), eps + 1e-8);
      EXPECT_LE(evaluate_matrix(one, reg, z).norm(), eta + 1e-8);
    }
    for (const auto& f : l2.nonvanishing) {
      const std::vector<Polynomial> one{f};
      EXPECT_NEAR(evaluate_matrix(one, reg, z).norm(), 1.0, 1e-8);
      EXPECT_GT(f.scale, eta);
    }
    // New nonvanishing columns are independent of the old ones on Z.
    if (!l2.nonvanishing.empty()) {
      Matrix all(z.size(), static_cast<Index>(lower.size() + l2.nonvanishing.size()));
      all << evaluate_matrix(std::span<const PolyRef>(lower), reg, z), evaluate_matrix(l2.nonvanishing, reg, z);
      Eigen::JacobiSVD<Matrix> svd(all);
      EXPECT_EQ(static_cast<Index>((svd.singularValues().array() > 1e-8).count()), all.cols());
    }
  }
}

TEST(FindBasis, CoefficientNormIdentity) {
  std::mt19937_64 rng(6);
  const PointSet x(random_points(rng, 10, 2));
  DegreeOne d1 = build_degree_one(x, 1e-3);
  const auto cands = generate_candidates(d1.f1, d1.f1, d1.registry);
  const Residual res = detail::residualize(cands, d1.lower, x.matrix(), &x.matrix(), d1.registry);
  for (int k = 0; k < 5; ++k) {
    Vector v = Vector::Random(static_cast<Index>(cands.size()));
    v.normalize();
    const std::vector<Polynomial> g{linear_combination(res.polys, v)};
    EXPECT_NEAR(evaluate_matrix(g, d1.registry, x).norm(), (res.on_data * v).norm(), 1e-10);
  }
}

TEST(FindBasis, DimensionMismatch) {
  PolyRegistry reg(2, 3);
  const std::vector<PolyRef> lower{PolyRegistry::constant_ref()};
  const PointSet a = PointSet::from_rows({{0, 1}, {1, 0}, {1, 1}});
  const PointSet b = PointSet::from_rows({{0, 1, 2}});
  EXPECT_THROW(find_basis(coordinate_candidates(reg), lower, a, b, 0.1, 0.1, reg), InputError);
}

TEST(Vca, ExactCircleRecovered) {
  const PointSet x = gen_circle(3, 30, 0.0);
  const VcaResult v = vca_fit(x, 1e-6);
  const Vector want = oracle::sign_normalized(oracle::quadric_null_vector(x.matrix()));
  EXPECT_LE((want - oracle::sign_normalized(circle_vector())).norm(), 1e-8);
  bool found = false;
  for (const auto& r : v.basis.vanishing) {
    if (v.basis.registry.poly(r).degree != 2) continue;
    const Vector q = quadric_vector(expand_to_monomials(v.basis.registry.poly(r), v.basis.registry));
    if (q.norm() < 1e-6) continue;  // identically-zero symmetric difference
    EXPECT_LE((oracle::sign_normalized(q) - want).cwiseAbs().maxCoeff(), 1e-4);
    found = true;
  }
  EXPECT_TRUE(found);
  EXPECT_EQ(v.vanishing_per_degree[0], 0);
}

TEST(Vca, LargeEpsilonStopsAtDegreeOne) {
  std::mt19937_64 rng(8);
  const PointSet x(random_points(rng, 10, 3, 0.1));
  const double big = 10.0 * x.matrix().norm();
  const VcaResult v = vca_fit(x, big);
  EXPECT_EQ(v.vanishing_per_degree.size(), 1u);
  EXPECT_EQ(v.vanishing_per_degree[0], 3);
  EXPECT_EQ(v.nonvanishing_per_degree[0], 0);
}

TEST(Vca, ContractAndRank) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 5; ++trial) {
    const PointSet x(random_points(rng, 25, 2));
    const double eps = 0.2;
    const VcaResult v = vca_fit(x, eps);
    EXPECT_FALSE(v.truncated);
    const Matrix g = v.basis.evaluate_vanishing(x.matrix());
    for (Index j = 0; j < g.cols(); ++j) EXPECT_LE(g.col(j).norm(), eps + 1e-8);
    EXPECT_LE(static_cast<Index>(v.basis.nonvanishing.size()), x.size());
  }
}
