#pragma once

// Baseline learners for the experiments: one-vs-rest L2 logistic regression,
// nearest neighbour and k-means.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <vector>

#include "vanish/errors.hpp"
#include "vanish/polycore.hpp"

namespace vanish {

struct LinearParams {
  double l2 = 1e-3;
  int max_iters = 3000;
  double tol = 1e-9;  // stop when the gradient norm drops below tol
};

/// One weight vector per class over standardized features.
struct LinearModel {
  Vector mean;
  Vector inv_std;
  Matrix weights;  // features x classes
  Vector bias;     // classes

  int num_classes() const { return static_cast<int>(bias.size()); }

  Matrix scores(const Matrix& features) const {
    const Matrix z = (features.rowwise() - mean.transpose()) * inv_std.asDiagonal();
    return (z * weights).rowwise() + bias.transpose();
  }
};

namespace detail {

inline double sigmoid(double v) {
  return v >= 0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
}

}  // namespace detail

/// Nesterov-accelerated gradient descent on the mean logistic loss plus
/// l2/2 * ||w||^2, one binary problem per class, starting from zero.
inline LinearModel train_linear(const Matrix& features, std::span<const int> labels, const LinearParams& params = {}) {
  const Index n = features.rows();
  if (n == 0 || static_cast<Index>(labels.size()) != n) throw InputError("train_linear: label count mismatch");
  const int k = *std::max_element(labels.begin(), labels.end()) + 1;
  {
    std::vector<bool> seen(static_cast<std::size_t>(k), false);
    for (int l : labels) {
      if (l < 0) throw InputError("train_linear: negative label");
      seen[static_cast<std::size_t>(l)] = true;
    }
    if (std::count(seen.begin(), seen.end(), true) < 2) throw InputError("train_linear: need at least 2 classes");
  }
  const Index p = features.cols();
  LinearModel m;
  m.mean = n ? Vector(features.colwise().mean().transpose()) : Vector::Zero(p);
  m.inv_std = Vector::Ones(p);
  for (Index j = 0; j < p; ++j) {
    const double sd = std::sqrt((features.col(j).array() - m.mean(j)).square().mean());
    m.inv_std(j) = sd > 1e-12 ? 1.0 / sd : 1.0;
  }
  const Matrix z = (features.rowwise() - m.mean.transpose()) * m.inv_std.asDiagonal();
  m.weights = Matrix::Zero(p, k);
  m.bias = Vector::Zero(k);

  // Lipschitz bound of the gradient: ||[Z 1]||_2^2 / (4n) + l2.
  Matrix aug(n, p + 1);
  aug << z, Vector::Ones(n);
  const double smax = p + 1 > 0 ? Eigen::JacobiSVD<Matrix>(aug).singularValues()(0) : 1.0;
  const double lip = smax * smax / (4.0 * static_cast<double>(n)) + params.l2;
  const double step = 1.0 / lip;

  for (int c = 0; c < k; ++c) {
    Vector y(n);
    for (Index i = 0; i < n; ++i) y(i) = labels[static_cast<std::size_t>(i)] == c ? 1.0 : 0.0;
    Vector w = Vector::Zero(p + 1);  // last entry is the bias
    Vector w_prev = w;
    Vector grad(p + 1);
    for (int it = 0; it < params.max_iters; ++it) {
      const double mom = static_cast<double>(it) / (it + 3.0);
      const Vector v = w + mom * (w - w_prev);
      const Vector margin = aug * v;
      Vector r(n);
      for (Index i = 0; i < n; ++i) r(i) = detail::sigmoid(margin(i)) - y(i);
      grad = aug.transpose() * r / static_cast<double>(n);
      grad.head(p) += params.l2 * v.head(p);
      w_prev = w;
      w = v - step * grad;
      if (grad.norm() < params.tol) break;
    }
    m.weights.col(c) = w.head(p);
    m.bias(c) = w(p);
  }
  return m;
}

/// argmax of class scores; ties go to the lowest class id.
inline std::vector<int> predict_linear(const LinearModel& m, const Matrix& features) {
  const Matrix s = m.scores(features);
  std::vector<int> out(static_cast<std::size_t>(s.rows()));
  for (Index i = 0; i < s.rows(); ++i) {
    Index best = 0;
    for (Index c = 1; c < s.cols(); ++c) {
      if (s(i, c) > s(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

inline double accuracy(std::span<const int> predicted, std::span<const int> truth) {
  if (predicted.size() != truth.size() || truth.empty()) throw InputError("accuracy: size mismatch");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hit += predicted[i] == truth[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(truth.size());
}

/// Euclidean k-NN by majority vote; distance ties go to the lower row index and
/// vote ties to the label of the nearest tied neighbour.
inline int knn_predict(const Matrix& train, std::span<const int> labels, const Vector& query, int k = 1) {
  if (train.rows() == 0) throw InputError("knn_predict: empty training set");
  if (static_cast<Index>(labels.size()) != train.rows()) throw InputError("knn_predict: label count mismatch");
  if (query.size() != train.cols()) throw InputError("knn_predict: dimension mismatch");
  if (k < 1) throw InputError("knn_predict: k must be >= 1");
  std::vector<std::pair<double, Index>> d(static_cast<std::size_t>(train.rows()));
  for (Index i = 0; i < train.rows(); ++i) d[static_cast<std::size_t>(i)] = {(train.row(i).transpose() - query).squaredNorm(), i};
  const auto kk = static_cast<std::size_t>(std::min<Index>(k, train.rows()));
  std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(kk), d.end());
  if (kk == 1) return labels[static_cast<std::size_t>(d[0].second)];
  std::map<int, int> votes;
  for (std::size_t i = 0; i < kk; ++i) ++votes[labels[static_cast<std::size_t>(d[i].second)]];
  int best_votes = 0;
  for (const auto& [l, v] : votes) best_votes = std::max(best_votes, v);
  for (std::size_t i = 0; i < kk; ++i) {
    const int l = labels[static_cast<std::size_t>(d[i].second)];
    if (votes[l] == best_votes) return l;
  }
  return labels[static_cast<std::size_t>(d[0].second)];
}

inline std::vector<int> knn_predict(const Matrix& train, std::span<const int> labels, const Matrix& queries, int k = 1) {
  std::vector<int> out(static_cast<std::size_t>(queries.rows()));
  for (Index i = 0; i < queries.rows(); ++i) out[static_cast<std::size_t>(i)] = knn_predict(train, labels, Vector(queries.row(i).transpose()), k);
  return out;
}

struct KMeansParams {
  int max_iters = 100;
  double tol = 1e-8;  // stop when no centroid moves further than this
};

/// Lloyd's algorithm from a k-means++ seeding. Returns k x d centroids.
inline Matrix kmeans(const Matrix& points, int k, std::uint64_t seed, const KMeansParams& params = {}) {
  const Index n = points.rows();
  if (k < 1) throw InputError("kmeans: k must be >= 1");
  if (k > n) throw InputError("kmeans: k exceeds number of points");
  std::mt19937_64 rng(seed);
  Matrix c(k, points.cols());
  std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);
  Index first = static_cast<Index>(std::uniform_int_distribution<Index>(0, n - 1)(rng));
  c.row(0) = points.row(first);
  chosen[static_cast<std::size_t>(first)] = true;
  for (int j = 1; j < k; ++j) {
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
      d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], (points.row(i) - c.row(j - 1)).squaredNorm());
      total += d2[static_cast<std::size_t>(i)];
    }
    Index pick = -1;
    if (total > 0.0) {
      double u = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (Index i = 0; i < n; ++i) {
        u -= d2[static_cast<std::size_t>(i)];
        if (u <= 0.0 && d2[static_cast<std::size_t>(i)] > 0.0) {
          pick = i;
          break;
        }
      }
    }
    if (pick < 0) {
      // Degenerate weights (duplicates or rounding): first unchosen point.
      for (Index i = 0; i < n && pick < 0; ++i) {
        if (!chosen[static_cast<std::size_t>(i)] && d2[static_cast<std::size_t>(i)] > 0.0) pick = i;
      }
      for (Index i = 0; i < n && pick < 0; ++i) {
        if (!chosen[static_cast<std::size_t>(i)]) pick = i;
      }
    }
    c.row(j) = points.row(pick);
    chosen[static_cast<std::size_t>(pick)] = true;
  }

  std::vector<int> assign(static_cast<std::size_t>(n), 0);
  for (int it = 0; it < params.max_iters; ++it) {
    for (Index i = 0; i < n; ++i) {
      Index best = 0;
      double bd = (points.row(i) - c.row(0)).squaredNorm();
      for (Index j = 1; j < k; ++j) {
        const double dd = (points.row(i) - c.row(j)).squaredNorm();
        if (dd < bd) {
          bd = dd;
          best = j;
        }
      }
      assign[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    Matrix next = Matrix::Zero(k, points.cols());
    std::vector<int> count(static_cast<std::size_t>(k), 0);
    for (Index i = 0; i < n; ++i) {
      next.row(assign[static_cast<std::size_t>(i)]) += points.row(i);
      ++count[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
    }
    double moved = 0.0;
    for (Index j = 0; j < k; ++j) {
      if (count[static_cast<std::size_t>(j)] == 0) {
        next.row(j) = c.row(j);  // empty cluster keeps its centroid
      } else {
        next.row(j) /= count[static_cast<std::size_t>(j)];
      }
      moved = std::max(moved, (next.row(j) - c.row(j)).norm());
    }
    c = std::move(next);
    if (moved < params.tol) break;
  }
  return c;
}

}  // namespace vanish
