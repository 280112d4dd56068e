// Command-line front end: fit/vca models, the 2-d demos, the two
// classification drivers and contour export for saved models.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "vanish/vanish.hpp"

using namespace vanish;

namespace {

struct Common {
  double epsilon = 0.1;
  std::optional<double> delta;
  double lambda = 0.01;
  double gamma = 0.9;
  int max_degree = 10;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "json";
};

void add_pursuit_flags(CLI::App* app, Common& c) {
  app->add_option("--epsilon", c.epsilon, "tolerance on the data")->capture_default_str();
  app->add_option("--delta", c.delta, "tolerance on the knots (default 0.01 * epsilon)");
  app->add_option("--lambda", c.lambda, "knot regularization weight")->capture_default_str();
  app->add_option("--gamma", c.gamma, "eta cooling factor")->capture_default_str();
  app->add_option("--max-degree", c.max_degree, "degree cap")->capture_default_str();
}

PursuitConfig pursuit_config(const Common& c) {
  PursuitConfig p;
  p.epsilon = c.epsilon;
  p.delta = c.delta;
  p.lambda = c.lambda;
  p.gamma = c.gamma;
  p.max_degree = c.max_degree;
  return p;
}

struct DataArgs {
  std::string path;
  std::optional<int> label_column;
  std::string class_name;
  bool header = false;
  bool scale = false;
};

void add_data_flags(CLI::App* app, DataArgs& d) {
  app->add_option("--data", d.path, "CSV of points")->required()->check(CLI::ExistingFile);
  app->add_option("--label-column", d.label_column, "column holding a class label (negative counts from the end)");
  app->add_option("--class", d.class_name, "fit only rows with this label (needs --label-column)");
  app->add_flag("--header", d.header, "first CSV row is a header");
  app->add_flag("--scale", d.scale, "min-max scale every column to [-1, 1] before fitting");
}

std::pair<PointSet, std::optional<MinMaxScaler>> read_points(const DataArgs& d) {
  PointSet pts;
  if (d.label_column) {
    std::ifstream f(d.path);
    const LabeledDataset ds = parse_csv(f, *d.label_column, d.header, d.path);
    if (d.class_name.empty()) {
      pts = ds.points;
    } else {
      const auto it = std::find(ds.class_names.begin(), ds.class_names.end(), d.class_name);
      if (it == ds.class_names.end()) throw InputError("no rows with label '" + d.class_name + "'");
      pts = PointSet(ds.class_points(static_cast<int>(it - ds.class_names.begin())));
    }
  } else {
    if (!d.class_name.empty()) throw InputError("--class needs --label-column");
    pts = load_points_csv(d.path, d.header);
  }
  if (!d.scale) return {pts, std::nullopt};
  const MinMaxScaler s = MinMaxScaler::fit(pts.matrix());
  return {PointSet(s.transform(pts.matrix())), s};
}

void write_or_print(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw InputError("cannot write " + path);
  f << text;
}

void print_fit_summary(const KnotModel& m) {
  const auto& d = m.diagnostics;
  std::cerr << "vanishing " << m.basis.vanishing.size() << ", nonvanishing " << m.basis.nonvanishing.size() << ", distinct knots "
            << distinct_points(m.knots.matrix()).rows() << "/" << m.knots.size() << ", resets " << d.resets.size()
            << ", final eta " << d.eta_trace.back() << (d.truncated ? ", truncated (" + d.truncation_reason + ")" : "") << '\n';
}

GridFormat grid_format(const std::string& f) { return f == "json" ? GridFormat::Json : GridFormat::Csv; }

std::string runs_csv(const ExperimentReport& rep, bool timing) {
  std::ostringstream os;
  os << "seed,eps_proposed,lambda_proposed,eps_vca,eps_knots,lambda_knots,acc_proposed,acc_vca,acc_proposed_hd,acc_vca_hd,"
        "features_proposed,features_vca,degree_proposed,degree_vca,acc_knots,acc_kmeans,acc_original,knotting_ratio";
  if (timing) os << ",time_proposed,time_vca";
  os << '\n';
  os << std::setprecision(10);
  for (const auto& r : rep.runs) {
    os << r.seed << ',' << r.proposed_params.epsilon << ',' << r.proposed_params.lambda << ',' << r.vca_params.epsilon << ','
       << r.knot_params.epsilon << ',' << r.knot_params.lambda << ',' << r.acc_proposed << ',' << r.acc_vca << ','
       << r.acc_proposed_hd << ',' << r.acc_vca_hd << ',' << r.features_proposed << ',' << r.features_vca << ','
       << r.degree_proposed << ',' << r.degree_vca << ',' << r.acc_knots << ',' << r.acc_kmeans << ',' << r.acc_original << ','
       << r.knotting_ratio;
    if (timing) os << ',' << r.time_proposed << ',' << r.time_vca;
    os << '\n';
  }
  return os.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Approximate vanishing polynomials with data knots"};
  app.require_subcommand(1);
  Common c;

  // fit / vca
  DataArgs fit_data;
  auto* fit_cmd = app.add_subcommand("fit", "fit vanishing polynomials and data knots, write model JSON");
  add_data_flags(fit_cmd, fit_data);
  add_pursuit_flags(fit_cmd, c);
  fit_cmd->add_option("--out", c.out, "model JSON path (stdout when omitted)");

  DataArgs vca_data;
  auto* vca_cmd = app.add_subcommand("vca", "fit the VCA baseline, write model JSON");
  add_data_flags(vca_cmd, vca_data);
  vca_cmd->add_option("--epsilon", c.epsilon, "tolerance on the data")->capture_default_str();
  vca_cmd->add_option("--out", c.out, "model JSON path (stdout when omitted)");

  // demo
  std::string demo_name;
  int resolution = 101;
  std::string model_out;
  auto* demo_cmd = app.add_subcommand("demo",
                                      "fit one of the 2-d toy sets and export a contour grid with its knots; unset pursuit "
                                      "flags take per-set defaults (blobs: eps 0.3; circle, concentric: eps 0.05, "
                                      "max degree 20; lambda 0.01 throughout)");
  demo_cmd->add_option("name", demo_name, "blobs, circle or concentric")->required()->check(CLI::IsMember({"blobs", "circle", "concentric"}));
  add_pursuit_flags(demo_cmd, c);
  demo_cmd->add_option("--seed", c.seed, "generator seed")->capture_default_str();
  demo_cmd->add_option("--out", c.out, "grid file path")->required();
  demo_cmd->add_option("--format", c.format, "grid format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  demo_cmd->add_option("--resolution", resolution, "grid points per axis")->capture_default_str();
  demo_cmd->add_option("--model-out", model_out, "also write the fitted model JSON here");

  // classify / knn-eval
  std::string table_path;
  int label_column = -1;
  bool no_header = false;
  int runs = 10;
  std::vector<double> eps_grid;
  std::vector<double> lambda_grid;
  bool no_timing = false;
  auto add_table_flags = [&](CLI::App* cmd) {
    cmd->add_option("--data", table_path, "labeled CSV")->required()->check(CLI::ExistingFile);
    cmd->add_option("--label-column", label_column, "label column (negative counts from the end)")->capture_default_str();
    cmd->add_flag("--no-header", no_header, "the CSV has no header row");
    cmd->add_option("--runs", runs, "independent random splits")->capture_default_str();
    cmd->add_option("--seed", c.seed, "seed of the first run")->capture_default_str();
    cmd->add_option("--epsilon", eps_grid, "epsilon grid for cross-validation");
    cmd->add_option("--lambda", lambda_grid, "lambda grid for cross-validation");
    cmd->add_option("--delta", c.delta, "delta as a fraction of epsilon (default 0.01)");
    cmd->add_option("--gamma", c.gamma, "eta cooling factor")->capture_default_str();
    cmd->add_option("--out", c.out, "report path (stdout when omitted)");
    cmd->add_option("--format", c.format, "report format: json, or csv with one row per run")
        ->check(CLI::IsMember({"csv", "json"}))
        ->capture_default_str();
    cmd->add_flag("--no-timing", no_timing, "leave runtimes out of the report");
  };
  auto* classify_cmd = app.add_subcommand("classify", "classification with vanishing-polynomial features (Table 1 driver)");
  add_table_flags(classify_cmd);
  auto* knn_cmd = app.add_subcommand("knn-eval", "1-NN on data knots, k-means centroids and raw points (Table 2 driver)");
  add_table_flags(knn_cmd);

  // grid
  std::string model_path;
  std::vector<double> bounds{-2.0, 2.0, -2.0, 2.0};
  auto* grid_cmd = app.add_subcommand("grid", "export a contour grid for a saved 2-d model");
  grid_cmd->add_option("--model", model_path, "model JSON")->required()->check(CLI::ExistingFile);
  grid_cmd->add_option("--out", c.out, "grid file path")->required();
  grid_cmd->add_option("--format", c.format, "grid format")->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  grid_cmd->add_option("--resolution", resolution, "grid points per axis")->capture_default_str();
  grid_cmd->add_option("--bounds", bounds, "x_min x_max y_min y_max")->expected(4)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*fit_cmd) {
      const auto [pts, scaling] = read_points(fit_data);
      const KnotModel m = fit(pts, pursuit_config(c));
      print_fit_summary(m);
      write_or_print(c.out, model_to_json(m, scaling).dump(2) + "\n");
    } else if (*vca_cmd) {
      const auto [pts, scaling] = read_points(vca_data);
      const VcaResult v = vca_fit(pts, c.epsilon);
      std::cerr << "vanishing " << v.basis.vanishing.size() << ", nonvanishing " << v.basis.nonvanishing.size()
                << (v.truncated ? ", truncated" : "") << '\n';
      write_or_print(c.out, model_to_json(v, c.epsilon, scaling).dump(2) + "\n");
    } else if (*demo_cmd) {
      if (demo_cmd->get_option("--epsilon")->count() == 0) c.epsilon = demo_name == "blobs" ? 0.3 : 0.05;
      if (demo_cmd->get_option("--lambda")->count() == 0) c.lambda = 0.01;
      if (demo_cmd->get_option("--max-degree")->count() == 0 && demo_name != "blobs") c.max_degree = 20;
      PointSet pts = demo_name == "blobs" ? gen_blobs(c.seed) : demo_name == "circle" ? gen_circle(c.seed) : gen_concentric(c.seed);
      const KnotModel m = fit(pts, pursuit_config(c));
      print_fit_summary(m);
      const Matrix& x = pts.matrix();
      const double pad = 0.5;
      const GridBounds b{x.col(0).minCoeff() - pad, x.col(0).maxCoeff() + pad, x.col(1).minCoeff() - pad, x.col(1).maxCoeff() + pad};
      export_contour_grid(m.basis, m.knots, b, resolution, c.out, grid_format(c.format));
      if (!model_out.empty()) save_json(model_out, model_to_json(m));
    } else if (*classify_cmd || *knn_cmd) {
      std::ifstream f(table_path);
      const LabeledDataset ds = parse_csv(f, label_column, !no_header, std::filesystem::path(table_path).stem().string());
      ExperimentConfig cfg;
      cfg.runs = runs;
      cfg.seed = c.seed;
      cfg.gamma = c.gamma;
      if (c.delta) cfg.delta_ratio = *c.delta;
      if (!eps_grid.empty()) cfg.epsilon_grid = eps_grid;
      if (!lambda_grid.empty()) cfg.lambda_grid = lambda_grid;
      cfg.measure_time = !no_timing;
      const ExperimentReport rep = *classify_cmd ? run_table1(ds, cfg) : run_table2(ds, cfg);
      std::cerr << (*classify_cmd ? table1_text({rep}, !no_timing) : table2_text({rep}));
      write_or_print(c.out, c.format == "json" ? report_json(rep, !no_timing).dump(2) + "\n" : runs_csv(rep, !no_timing));
    } else if (*grid_cmd) {
      const Json j = load_json(model_path);
      export_contour_grid(basis_from_json(j), knots_from_json(j), GridBounds{bounds[0], bounds[1], bounds[2], bounds[3]},
                          resolution, c.out, grid_format(c.format));
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
