#pragma once

// Classification experiments: repeated stratified splits, grid search by
// k-fold cross validation, and the feature / nearest-neighbour comparisons.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vanish/classifiers.hpp"
#include "vanish/dataset.hpp"
#include "vanish/features.hpp"

namespace vanish {

struct GridPoint {
  double epsilon = 0.0;
  double lambda = 0.0;
};

struct CvResult {
  GridPoint best;
  std::vector<double> scores;  // mean metric per grid entry, grid order
};

/// Metric over (fold-train, fold-validation, params); larger is better.
using CvMetric = std::function<double(const LabeledDataset&, const LabeledDataset&, const GridPoint&)>;
/// Several metrics from one fit per fold and grid entry.
using CvMultiMetric = std::function<std::vector<double>(const LabeledDataset&, const LabeledDataset&, const GridPoint&)>;

namespace detail {

// Ties resolve to the smallest epsilon, then the smallest lambda.
inline std::size_t select_best(const std::vector<GridPoint>& grid, const std::vector<double>& scores) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const bool better = scores[i] > scores[best];
    const bool tie = scores[i] == scores[best];
    const bool smaller = grid[i].epsilon < grid[best].epsilon ||
                         (grid[i].epsilon == grid[best].epsilon && grid[i].lambda < grid[best].lambda);
    if (better || (tie && smaller)) best = i;
  }
  return best;
}

}  // namespace detail

/// Exhaustive grid search scoring `num_metrics` metrics at once; returns one
/// result per metric.
inline std::vector<CvResult> cross_validate_multi(const LabeledDataset& train, const std::vector<GridPoint>& grid,
                                                  int folds, const CvMultiMetric& metric, std::size_t num_metrics,
                                                  std::uint64_t seed) {
  if (grid.empty()) throw InputError("cross_validate: empty grid");
  if (num_metrics == 0) throw InputError("cross_validate: no metrics");
  std::vector<CvResult> out(num_metrics);
  if (grid.size() == 1) {
    for (auto& r : out) {
      r.best = grid.front();
      r.scores = {std::numeric_limits<double>::quiet_NaN()};
    }
    return out;
  }
  const std::vector<int> fold = stratified_folds(train, folds, seed);
  std::vector<LabeledDataset> fit_parts;
  std::vector<LabeledDataset> val_parts;
  for (int f = 0; f < folds; ++f) {
    std::vector<Index> fit_rows;
    std::vector<Index> val_rows;
    for (std::size_t i = 0; i < fold.size(); ++i) (fold[i] == f ? val_rows : fit_rows).push_back(static_cast<Index>(i));
    fit_parts.push_back(train.subset(fit_rows));
    val_parts.push_back(train.subset(val_rows));
  }
  for (auto& r : out) r.scores.assign(grid.size(), 0.0);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    for (int f = 0; f < folds; ++f) {
      const std::vector<double> m = metric(fit_parts[static_cast<std::size_t>(f)], val_parts[static_cast<std::size_t>(f)], grid[i]);
      if (m.size() != num_metrics) throw InputError("cross_validate: metric count mismatch");
      for (std::size_t k = 0; k < num_metrics; ++k) out[k].scores[i] += m[k];
    }
    for (auto& r : out) r.scores[i] /= folds;
  }
  for (auto& r : out) r.best = grid[detail::select_best(grid, r.scores)];
  return out;
}

/// Exhaustive grid search on a single metric.
inline CvResult cross_validate(const LabeledDataset& train, const std::vector<GridPoint>& grid, int folds,
                               const CvMetric& metric, std::uint64_t seed) {
  auto wrapped = [&metric](const LabeledDataset& a, const LabeledDataset& b, const GridPoint& g) {
    return std::vector<double>{metric(a, b, g)};
  };
  return cross_validate_multi(train, grid, folds, wrapped, 1, seed).front();
}

/// Greedy deduplication: a point joins the first representative within `tol`.
inline Matrix distinct_points(const Matrix& points, double tol = 1e-3) {
  std::vector<Index> reps;
  for (Index i = 0; i < points.rows(); ++i) {
    bool found = false;
    for (Index r : reps) {
      if ((points.row(i) - points.row(r)).norm() <= tol) {
        found = true;
        break;
      }
    }
    if (!found) reps.push_back(i);
  }
  Matrix out(static_cast<Index>(reps.size()), points.cols());
  for (std::size_t i = 0; i < reps.size(); ++i) out.row(static_cast<Index>(i)) = points.row(reps[i]);
  return out;
}

struct ExperimentConfig {
  int runs = 10;
  std::uint64_t seed = 0;
  double train_fraction = 0.6;
  int folds = 3;
  std::vector<double> epsilon_grid{0.3, 0.5, 0.8};
  std::vector<double> lambda_grid{0.001, 0.01};
  double delta_ratio = 0.01;
  double gamma = 0.9;
  double hd_fraction = 0.5;
  double knot_tolerance = 1e-3;
  int max_degree = 10;
  LinearParams linear;
  bool measure_time = true;
  int timing_repeats = 21;  // test runtime is the median over this many repeats

  PursuitConfig pursuit(const GridPoint& g) const {
    PursuitConfig p;
    p.epsilon = g.epsilon;
    p.delta = delta_ratio * g.epsilon;
    p.lambda = g.lambda;
    p.gamma = gamma;
    p.max_degree = max_degree;
    return p;
  }
};

struct RunRecord {
  std::uint64_t seed = 0;
  GridPoint proposed_params;
  GridPoint vca_params;
  GridPoint knot_params;  // proposed parameters chosen for the nearest-neighbour table
  // Table 1
  double acc_proposed = 0, acc_vca = 0, acc_proposed_hd = 0, acc_vca_hd = 0;
  double time_proposed = 0, time_vca = 0;
  double features_proposed = 0, features_vca = 0;
  double degree_proposed = 0, degree_vca = 0;
  // Table 2
  double acc_knots = 0, acc_kmeans = 0, acc_original = 0;
  double knotting_ratio = 0;
  int truncated_fits = 0;
};

struct ExperimentReport {
  std::string dataset;
  ExperimentConfig config;
  std::vector<RunRecord> runs;
  RunRecord mean;  // field-wise average over runs
};

namespace detail {

inline double linear_accuracy(const ClassFeatureModel& model, const LabeledDataset& train, const LabeledDataset& test,
                              const LinearParams& lp, double* seconds = nullptr, int repeats = 1) {
  const LinearModel clf = train_linear(model.extract(train.points.matrix()), train.labels, lp);
  const std::vector<int> pred = predict_linear(clf, model.extract(test.points.matrix()));
  if (seconds) {
    std::vector<double> times;
    for (int r = 0; r < std::max(repeats, 1); ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      const std::vector<int> again = predict_linear(clf, model.extract(test.points.matrix()));
      const auto t1 = std::chrono::steady_clock::now();
      if (again != pred) throw StructuralError("prediction changed between identical calls");
      times.push_back(std::chrono::duration<double>(t1 - t0).count());
    }
    std::nth_element(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(times.size() / 2), times.end());
    *seconds = times[times.size() / 2];
  }
  return accuracy(pred, test.labels);
}

inline TrainConfig train_config(const ExperimentConfig& cfg, Method m, const GridPoint& g) {
  TrainConfig tc;
  tc.method = m;
  tc.pursuit = cfg.pursuit(g);
  tc.vca_max_degree = cfg.max_degree;
  return tc;
}

struct KnotTable {
  double acc_knots = 0.0;
  double acc_kmeans = 0.0;
  double knotting_ratio = 0.0;
};

// 1-NN on each class's distinct knots, and on as many k-means centroids per
// class; `kmeans_seed` < 0 skips the centroid baseline.
inline KnotTable knot_table(const ClassFeatureModel& model, const LabeledDataset& train, const LabeledDataset& test,
                            double tol, long long kmeans_seed) {
  std::vector<Matrix> knot_sets;
  Index total = 0;
  for (int c = 0; c < model.num_classes(); ++c) {
    knot_sets.push_back(distinct_points(model.knots(c)->matrix(), tol));
    total += knot_sets.back().rows();
  }
  Matrix knots(total, train.dim());
  Matrix centroids(total, train.dim());
  std::vector<int> labels;
  Index row = 0;
  for (int c = 0; c < model.num_classes(); ++c) {
    const Index k = knot_sets[static_cast<std::size_t>(c)].rows();
    knots.middleRows(row, k) = knot_sets[static_cast<std::size_t>(c)];
    if (kmeans_seed >= 0) {
      centroids.middleRows(row, k) =
          kmeans(train.class_points(c), static_cast<int>(k), static_cast<std::uint64_t>(kmeans_seed) + static_cast<std::uint64_t>(c));
    }
    labels.insert(labels.end(), static_cast<std::size_t>(k), c);
    row += k;
  }
  KnotTable out;
  out.acc_knots = accuracy(knn_predict(knots, labels, test.points.matrix(), 1), test.labels);
  if (kmeans_seed >= 0) out.acc_kmeans = accuracy(knn_predict(centroids, labels, test.points.matrix(), 1), test.labels);
  out.knotting_ratio = static_cast<double>(total) / static_cast<double>(train.size());
  return out;
}

inline RunRecord average(const std::vector<RunRecord>& runs) {
  RunRecord m;
  if (runs.empty()) return m;
  const double n = static_cast<double>(runs.size());
  for (const auto& r : runs) {
    m.proposed_params.epsilon += r.proposed_params.epsilon / n;
    m.proposed_params.lambda += r.proposed_params.lambda / n;
    m.vca_params.epsilon += r.vca_params.epsilon / n;
    m.knot_params.epsilon += r.knot_params.epsilon / n;
    m.knot_params.lambda += r.knot_params.lambda / n;
    m.acc_proposed += r.acc_proposed / n;
    m.acc_vca += r.acc_vca / n;
    m.acc_proposed_hd += r.acc_proposed_hd / n;
    m.acc_vca_hd += r.acc_vca_hd / n;
    m.time_proposed += r.time_proposed / n;
    m.time_vca += r.time_vca / n;
    m.features_proposed += r.features_proposed / n;
    m.features_vca += r.features_vca / n;
    m.degree_proposed += r.degree_proposed / n;
    m.degree_vca += r.degree_vca / n;
    m.acc_knots += r.acc_knots / n;
    m.acc_kmeans += r.acc_kmeans / n;
    m.acc_original += r.acc_original / n;
    m.knotting_ratio += r.knotting_ratio / n;
    m.truncated_fits += r.truncated_fits;
  }
  return m;
}

}  // namespace detail

/// One split of the full pipeline: both tables' measurements.
inline RunRecord run_single(const LabeledDataset& ds, const ExperimentConfig& cfg, std::uint64_t seed) {
  RunRecord rec;
  rec.seed = seed;
  TrainTestSplit split = split_train_test(ds, cfg.train_fraction, seed);
  const MinMaxScaler scaler = MinMaxScaler::fit(split.train.points.matrix());
  const LabeledDataset train = apply_scaling(split.train, scaler);
  const LabeledDataset test = apply_scaling(split.test, scaler);

  std::vector<GridPoint> proposed_grid;
  for (double e : cfg.epsilon_grid) {
    for (double l : cfg.lambda_grid) proposed_grid.push_back({e, l});
  }
  std::vector<GridPoint> vca_grid;
  for (double e : cfg.epsilon_grid) vca_grid.push_back({e, 0.0});

  // Proposed folds are scored twice from one fit: feature classification
  // accuracy and 1-NN accuracy on the knots.
  auto proposed_metrics = [&cfg](const LabeledDataset& fit_part, const LabeledDataset& val_part, const GridPoint& g) {
    const ClassFeatureModel model = train_class_models(fit_part, detail::train_config(cfg, Method::Proposed, g));
    return std::vector<double>{detail::linear_accuracy(model, fit_part, val_part, cfg.linear),
                               detail::knot_table(model, fit_part, val_part, cfg.knot_tolerance, -1).acc_knots};
  };
  auto vca_metric = [&cfg](const LabeledDataset& fit_part, const LabeledDataset& val_part, const GridPoint& g) {
    const ClassFeatureModel model = train_class_models(fit_part, detail::train_config(cfg, Method::Vca, g));
    return detail::linear_accuracy(model, fit_part, val_part, cfg.linear);
  };
  const std::uint64_t cv_seed = seed * 7919u + 17u;
  const std::vector<CvResult> proposed_cv = cross_validate_multi(train, proposed_grid, cfg.folds, proposed_metrics, 2, cv_seed);
  rec.proposed_params = proposed_cv[0].best;
  rec.knot_params = proposed_cv[1].best;
  rec.vca_params = cross_validate(train, vca_grid, cfg.folds, vca_metric, cv_seed).best;

  const ClassFeatureModel proposed = train_class_models(train, detail::train_config(cfg, Method::Proposed, rec.proposed_params));
  const ClassFeatureModel vca = train_class_models(train, detail::train_config(cfg, Method::Vca, rec.vca_params));

  rec.acc_proposed = detail::linear_accuracy(proposed, train, test, cfg.linear, cfg.measure_time ? &rec.time_proposed : nullptr, cfg.timing_repeats);
  rec.acc_vca = detail::linear_accuracy(vca, train, test, cfg.linear, cfg.measure_time ? &rec.time_vca : nullptr, cfg.timing_repeats);
  rec.acc_proposed_hd = detail::linear_accuracy(proposed.restricted(cfg.hd_fraction), train, test, cfg.linear);
  rec.acc_vca_hd = detail::linear_accuracy(vca.restricted(cfg.hd_fraction), train, test, cfg.linear);
  rec.features_proposed = static_cast<double>(proposed.feature_dim());
  rec.features_vca = static_cast<double>(vca.feature_dim());
  rec.degree_proposed = proposed.mean_degree();
  rec.degree_vca = vca.mean_degree();
  rec.truncated_fits = proposed.num_truncated() + vca.num_truncated();

  // Nearest-neighbour comparison on knots, k-means centroids and raw points.
  const bool same = rec.knot_params.epsilon == rec.proposed_params.epsilon && rec.knot_params.lambda == rec.proposed_params.lambda;
  std::optional<ClassFeatureModel> knot_model;
  if (!same) {
    knot_model = train_class_models(train, detail::train_config(cfg, Method::Proposed, rec.knot_params));
    rec.truncated_fits += knot_model->num_truncated();
  }
  const detail::KnotTable kt = detail::knot_table(same ? proposed : *knot_model, train, test, cfg.knot_tolerance,
                                                  static_cast<long long>(seed));
  rec.acc_knots = kt.acc_knots;
  rec.acc_kmeans = kt.acc_kmeans;
  rec.knotting_ratio = kt.knotting_ratio;
  rec.acc_original = accuracy(knn_predict(train.points.matrix(), train.labels, test.points.matrix(), 1), test.labels);
  return rec;
}

inline ExperimentReport run_experiments(const LabeledDataset& ds, const ExperimentConfig& cfg) {
  if (cfg.runs < 1) throw InputError("runs must be >= 1");
  ExperimentReport rep;
  rep.dataset = ds.name;
  rep.config = cfg;
  for (int r = 0; r < cfg.runs; ++r) rep.runs.push_back(run_single(ds, cfg, cfg.seed + static_cast<std::uint64_t>(r)));
  rep.mean = detail::average(rep.runs);
  return rep;
}

/// Feature-extraction table (accuracy, runtime, feature count, degree).
inline ExperimentReport run_table1(const LabeledDataset& ds, const ExperimentConfig& cfg) { return run_experiments(ds, cfg); }

/// Nearest-neighbour table (knots, centroids, original points, knotting ratio).
inline ExperimentReport run_table2(const LabeledDataset& ds, const ExperimentConfig& cfg) { return run_experiments(ds, cfg); }

// ---------------------------------------------------------------------------
// Report formatting

inline nlohmann::ordered_json config_json(const ExperimentConfig& c) {
  return {{"runs", c.runs},
          {"seed", c.seed},
          {"train_fraction", c.train_fraction},
          {"folds", c.folds},
          {"epsilon_grid", c.epsilon_grid},
          {"lambda_grid", c.lambda_grid},
          {"delta_ratio", c.delta_ratio},
          {"gamma", c.gamma},
          {"hd_fraction", c.hd_fraction},
          {"knot_tolerance", c.knot_tolerance},
          {"max_degree", c.max_degree},
          {"classifier", "one-vs-rest logistic regression (l2=" + std::to_string(c.linear.l2) + ")"}};
}

inline nlohmann::ordered_json run_json(const RunRecord& r, bool include_timing) {
  nlohmann::ordered_json t1{{"accuracy",
                             {{"proposed", r.acc_proposed},
                              {"vca", r.acc_vca},
                              {"proposed_hd", r.acc_proposed_hd},
                              {"vca_hd", r.acc_vca_hd}}},
                            {"features", {{"proposed", r.features_proposed}, {"vca", r.features_vca}}},
                            {"degree", {{"proposed", r.degree_proposed}, {"vca", r.degree_vca}}}};
  if (include_timing) t1["test_runtime_sec"] = {{"proposed", r.time_proposed}, {"vca", r.time_vca}};
  return {{"seed", r.seed},
          {"proposed_params", {{"epsilon", r.proposed_params.epsilon}, {"lambda", r.proposed_params.lambda}}},
          {"knot_params", {{"epsilon", r.knot_params.epsilon}, {"lambda", r.knot_params.lambda}}},
          {"vca_params", {{"epsilon", r.vca_params.epsilon}}},
          {"table1", t1},
          {"table2",
           {{"data_knots", r.acc_knots},
            {"kmeans_centroids", r.acc_kmeans},
            {"original_points", r.acc_original},
            {"knotting_ratio", r.knotting_ratio}}},
          {"truncated_fits", r.truncated_fits}};
}

/// Runtime fields are wall-clock measurements; leave them out for
/// byte-for-byte comparable output.
inline nlohmann::ordered_json report_json(const ExperimentReport& rep, bool include_timing = true) {
  nlohmann::ordered_json runs = nlohmann::ordered_json::array();
  for (const auto& r : rep.runs) runs.push_back(run_json(r, include_timing));
  return {{"dataset", rep.dataset},
          {"config", config_json(rep.config)},
          {"mean", run_json(rep.mean, include_timing)},
          {"runs", runs}};
}

inline std::string table1_text(const std::vector<ExperimentReport>& reps, bool include_timing = true) {
  std::ostringstream os;
  os << std::fixed;
  os << "dataset     | acc proposed  vca  proposed-hd  vca-hd |";
  if (include_timing) os << " runtime proposed       vca |";
  os << " #features proposed      vca | #degree proposed  vca\n";
  for (const auto& r : reps) {
    const auto& m = r.mean;
    os << std::left << std::setw(12) << r.dataset << "|" << std::right << std::setprecision(2) << std::setw(13)
       << m.acc_proposed << std::setw(5) << m.acc_vca << std::setw(13) << m.acc_proposed_hd << std::setw(8)
       << m.acc_vca_hd << " |";
    if (include_timing) {
      os << std::scientific << std::setprecision(1) << std::setw(17) << m.time_proposed << std::setw(10) << m.time_vca
         << " |" << std::fixed;
    }
    os << std::setprecision(1) << std::setw(19) << m.features_proposed << std::setw(9) << m.features_vca << " |"
       << std::setw(17) << m.degree_proposed << std::setw(5) << m.degree_vca << "\n";
  }
  return os.str();
}

inline std::string table2_text(const std::vector<ExperimentReport>& reps) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2);
  os << "dataset     | data knots  k-means centroids  original points | knotting ratio\n";
  for (const auto& r : reps) {
    const auto& m = r.mean;
    os << std::left << std::setw(12) << r.dataset << "|" << std::right << std::setw(11) << m.acc_knots << std::setw(19)
       << m.acc_kmeans << std::setw(17) << m.acc_original << " |" << std::setw(15) << m.knotting_ratio << "\n";
  }
  return os.str();
}

}  // namespace vanish
