#include <gtest/gtest.h>

#include <numeric>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "vanish/experiments.hpp"
#include "vanish/features.hpp"
#include "vanish/generators.hpp"

using namespace vanish;

namespace {

LabeledDataset two_circles(std::uint64_t seed, int per_class) {
  const Matrix a = gen_circle(seed, per_class, 0.0, 0.5).matrix();
  const Matrix b = gen_circle(seed + 100, per_class, 0.0, 1.0).matrix();
  LabeledDataset ds;
  Matrix m(a.rows() + b.rows(), 2);
  m << a, b;
  ds.points = PointSet(m);
  ds.labels.assign(static_cast<std::size_t>(a.rows()), 0);
  ds.labels.insert(ds.labels.end(), static_cast<std::size_t>(b.rows()), 1);
  ds.class_names = {"inner", "outer"};
  return ds;
}

TrainConfig train_cfg(Method m, double eps, double lambda = 0.01, int max_degree = 20) {
  TrainConfig c;
  c.method = m;
  c.pursuit.epsilon = eps;
  c.pursuit.lambda = lambda;
  c.pursuit.max_degree = max_degree;
  c.vca_max_degree = max_degree;
  return c;
}

// A basis whose vanishing polynomials have the given degrees, all powers of x.
BasisSet basis_with_degrees(const std::vector<int>& degrees) {
  BasisSet b;
  b.registry = PolyRegistry(1, 1);
  std::vector<PolyRef> powers{b.registry.coordinate_ref(0)};
  const int top = *std::max_element(degrees.begin(), degrees.end());
  for (int t = 2; t <= top; ++t) {
    Combination c;
    c.base_terms.push_back({1.0, b.registry.coordinate_ref(0), powers.back()});
    powers.push_back(b.registry.add({t, c, 1.0}, Role::Nonvanishing));
  }
  for (int d : degrees) {
    Combination c;
    c.base_terms.push_back({1.0, powers[static_cast<std::size_t>(d - 1)], std::nullopt});
    b.vanishing.push_back(b.registry.add({d, c, 1.0}, Role::Vanishing));
  }
  return b;
}

}  // namespace

// Above degree 2 the vanishing polynomials of 8 exact points interpolate
// those points rather than the circle, so held-out checks stop at degree 2.
TEST(TrainClassModels, TwoCirclesEachFindTheirOwn) {
  const LabeledDataset train = two_circles(1, 8);
  for (Method method : {Method::Proposed, Method::Vca}) {
    EXPECT_EQ(train_class_models(train, train_cfg(method, 1e-4)).num_truncated(), 0);
    const ClassFeatureModel model = train_class_models(train, train_cfg(method, 1e-4, 0.01, 2));
    ASSERT_EQ(model.num_classes(), 2);
    for (int c = 0; c < 2; ++c) {
      const double r = c == 0 ? 0.5 : 1.0;
      const BasisSet& b = model.basis(c);
      bool found = false;
      for (const auto& ref : b.vanishing) {
        if (b.registry.poly(ref).degree != 2) continue;
        // Vanishes on fresh points of its own circle, not on the other one.
        const Matrix own = gen_circle(77, 10, 0.0, r).matrix();
        const Matrix other = gen_circle(78, 10, 0.0, c == 0 ? 1.0 : 0.5).matrix();
        const std::vector<PolyRef> one{ref};
        const double on_own = evaluate_matrix(std::span<const PolyRef>(one), b.registry, own).norm();
        const double on_other = evaluate_matrix(std::span<const PolyRef>(one), b.registry, other).norm();
        if (on_own < 1e-8 && on_other > 1e-3) found = true;
      }
      EXPECT_TRUE(found) << method_name(method) << " class " << c;
    }
    // Held-out points are separated by a linear classifier on the features.
    const LabeledDataset test = two_circles(5, 10);
    const LinearModel clf = train_linear(model.extract(train.points.matrix()), train.labels);
    EXPECT_DOUBLE_EQ(accuracy(predict_linear(clf, model.extract(test.points.matrix())), test.labels), 1.0);
  }
}

TEST(TrainClassModels, SingleClassRejected) {
  LabeledDataset ds = two_circles(1, 5);
  ds.labels.assign(ds.labels.size(), 0);
  ds.class_names = {"only"};
  EXPECT_THROW(train_class_models(ds, train_cfg(Method::Vca, 0.1)), InputError);
}

TEST(ExtractFeatures, OwnBlockVanishesAndMatchesEvaluate) {
  const LabeledDataset train = two_circles(2, 8);
  const ClassFeatureModel model = train_class_models(train, train_cfg(Method::Vca, 1e-4, 0.01, 2));
  const Matrix pts = gen_circle(9, 6, 0.0, 0.5).matrix();
  const Index n0 = static_cast<Index>(model.layout(0).size());
  for (Index i = 0; i < pts.rows(); ++i) {
    const Vector x = pts.row(i).transpose();
    const Vector f = extract_features(x, model);
    ASSERT_EQ(f.size(), static_cast<Index>(model.feature_dim()));
    EXPECT_TRUE((f.array() >= 0.0).all());
    EXPECT_LE(f.head(n0).cwiseAbs().maxCoeff(), 1e-12);
    Index col = 0;
    for (int c = 0; c < 2; ++c) {
      for (const auto& r : model.layout(c)) {
        EXPECT_NEAR(f(col), std::abs(evaluate(r, model.basis(c).registry, x)), 1e-12);
        ++col;
      }
    }
  }
  EXPECT_THROW(extract_features(Vector(Vector::Zero(3)), model), InputError);
}

TEST(Restrict, FractionOneIsIdentity) {
  const ClassFeatureModel m(Method::Vca, {basis_with_degrees({1, 2, 3}), basis_with_degrees({2, 2})}, {std::nullopt, std::nullopt});
  const ClassFeatureModel r = restrict_higher_degrees(m, 1.0);
  for (int c = 0; c < 2; ++c) EXPECT_EQ(r.layout(c), m.layout(c));
}

TEST(Restrict, KeepsHigherDegreeHalf) {
  const ClassFeatureModel m(Method::Vca, {basis_with_degrees({1, 1, 2, 3}), basis_with_degrees({2, 1, 2})},
                            {std::nullopt, std::nullopt});
  const ClassFeatureModel r = restrict_higher_degrees(m, 0.5);
  auto degrees = [&](int c) {
    std::vector<int> out;
    for (const auto& ref : r.layout(c)) out.push_back(r.basis(c).registry.poly(ref).degree);
    return out;
  };
  EXPECT_EQ(degrees(0), (std::vector<int>{2, 3}));
  // ceil(1.5) = 2; the two degree-2 polynomials win, in construction order.
  EXPECT_EQ(r.layout(1), (std::vector<PolyRef>{m.layout(1)[0], m.layout(1)[2]}));
  EXPECT_EQ(r.feature_dim(), 4u);
  EXPECT_THROW(restrict_higher_degrees(m, 0.0), InputError);
}

TEST(Features, CsvExport) {
  const ClassFeatureModel m(Method::Vca, {basis_with_degrees({1, 2}), basis_with_degrees({1})}, {std::nullopt, std::nullopt});
  Matrix pts(2, 1);
  pts << 2.0, -0.5;
  const Matrix f = m.extract(pts);
  std::ostringstream os;
  const std::vector<int> labels{1, 0};
  write_features_csv(os, m, f, &labels);
  EXPECT_EQ(os.str(), "label,c0_g0,c0_g1,c1_g0\n1,2,4,2\n0,0.5,0.25,0.5\n");
}

TEST(Features, AccuracyInvariantUnderRowPermutation) {
  LabeledDataset ds = load_csv(std::string(VANISH_DATA_DIR) + "/iris.csv");
  const TrainTestSplit split = split_train_test(ds, 0.6, 3);
  const MinMaxScaler s = MinMaxScaler::fit(split.train.points.matrix());
  const LabeledDataset train = apply_scaling(split.train, s);
  const LabeledDataset test = apply_scaling(split.test, s);
  std::vector<Index> perm(static_cast<std::size_t>(train.size()));
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(11));
  const LabeledDataset shuffled = train.subset(perm);
  for (Method method : {Method::Vca, Method::Proposed}) {
    TrainConfig cfg = train_cfg(method, 0.3, 0.001);
    cfg.pursuit.max_degree = 10;
    cfg.vca_max_degree = 10;
    const ClassFeatureModel a = train_class_models(train, cfg);
    const ClassFeatureModel b = train_class_models(shuffled, cfg);
    EXPECT_EQ(a.feature_dim(), b.feature_dim());
    EXPECT_DOUBLE_EQ(detail::linear_accuracy(a, train, test, {}), detail::linear_accuracy(b, shuffled, test, {})) << method_name(method);
  }
}
