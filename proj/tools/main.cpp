#include "gvssb/additive.hpp"
#include "gvssb/cavi.hpp"
#include "gvssb/csv.hpp"
#include "gvssb/preprocess.hpp"
#include "gvssb/report.hpp"
#include "gvssb/simbench.hpp"
#include "gvssb/types.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace {

using namespace gvssb;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNoConvergence = 2;

struct SlabFlags {
  std::string family = "gaussian";
  double nu = 3.0;
  double lambda0 = 1.0;
  double w0 = -1.0;  // sentinel: 1/G
  bool em = true;
  double eps_h = 1e-3;
  double eps_sigma = 1e-3;
  int max_iter = 500;
  double threshold = 0.5;
  std::uint64_t seed = 0;
};

void add_fit_flags(CLI::App* cmd, SlabFlags& f) {
  cmd->add_option("--slab", f.family, "slab family: gaussian|laplacian|t|cauchy")
      ->check(CLI::IsMember({"gaussian", "laplacian", "t", "cauchy"}));
  cmd->add_option("--nu", f.nu, "degrees of freedom for --slab t");
  cmd->add_option("--lambda0", f.lambda0, "initial slab scale");
  cmd->add_option("--w0", f.w0, "initial inclusion probability (default 1/G)");
  cmd->add_flag("--em,!--no-em", f.em, "empirical-Bayes hyperparameter updates");
  cmd->add_option("--eps-h", f.eps_h, "entropy stopping tolerance");
  cmd->add_option("--eps-sigma", f.eps_sigma, "noise-sd stopping tolerance");
  cmd->add_option("--max-iter", f.max_iter, "sweep limit");
  cmd->add_option("--threshold", f.threshold, "selection threshold on gamma");
  cmd->add_option("--seed", f.seed, "random seed");
}

SlabSpec make_slab(const SlabFlags& f) {
  SlabSpec slab;
  slab.family = parse_slab_family(f.family);
  slab.lambda = f.lambda0;
  if (slab.family == SlabFamily::StudentT) slab.nu = f.family == "cauchy" ? 1.0 : f.nu;
  return slab;
}

Hyperparams make_hyper(const SlabFlags& f, Eigen::Index G) {
  Hyperparams h;
  h.lambda = f.lambda0;
  h.w = f.w0 > 0.0 ? f.w0 : 1.0 / static_cast<double>(G);
  return h;
}

FitConfig make_config(const SlabFlags& f) {
  FitConfig c;
  c.eps_H = f.eps_h;
  c.eps_sigma = f.eps_sigma;
  c.max_iter = f.max_iter;
  c.em_enabled = f.em;
  c.selection_threshold = f.threshold;
  c.rng_seed = f.seed;
  return c;
}

// groups CSV: two columns mapping design column name -> group label
std::vector<std::string> load_group_labels(const std::string& path,
                                           const std::vector<std::string>& col_names) {
  const CsvTable t = read_csv(path);
  if (t.ncol() != 2)
    throw std::runtime_error(path + ": expected two columns (column name, group name)");
  std::unordered_map<std::string, std::string> mapping;
  for (const auto& row : t.rows) mapping[row[0]] = row[1];
  std::vector<std::string> labels;
  labels.reserve(col_names.size());
  for (const auto& name : col_names) {
    const auto it = mapping.find(name);
    if (it == mapping.end())
      throw std::runtime_error(path + ": design column \"" + name + "\" has no group entry");
    labels.push_back(it->second);
  }
  return labels;
}

void write_csv_or_stdout(const std::string& out, const std::vector<std::string>& header,
                         const std::vector<std::vector<std::string>>& rows) {
  if (out.empty())
    write_csv(std::cout, header, rows);
  else
    write_csv(out, header, rows);
}

int cmd_fit(const std::string& x_path, const std::string& y_path,
            const std::string& groups_path, const std::string& out_path,
            const SlabFlags& flags) {
  const CsvTable xt = read_csv(x_path);
  const Mat X = csv_to_matrix(xt, x_path);
  const Vec y = csv_to_vector(read_csv(y_path), y_path);
  const std::vector<std::string> labels =
      groups_path.empty() ? xt.header : load_group_labels(groups_path, xt.header);

  const GroupedDesign raw = make_grouped_design(X, labels);
  auto [design, yc, std_info] = standardize(raw, y);

  const SlabSpec slab = make_slab(flags);
  const Hyperparams hyper = make_hyper(flags, design.G);
  const FitConfig config = make_config(flags);

  const auto t0 = std::chrono::steady_clock::now();
  const FitResult result = fit(design, yc, slab, hyper, config);
  const auto t1 = std::chrono::steady_clock::now();
  const double wall = std::chrono::duration<double, std::milli>(t1 - t0).count();

  write_json_file(out_path, make_fit_report(result, design, std_info, slab, hyper, config, wall));
  return result.converged ? kExitOk : kExitNoConvergence;
}

int cmd_additive_fit(const std::string& x_path, const std::string& y_path,
                     const std::string& out_path, int d, const SlabFlags& flags) {
  if (d < 2) throw std::runtime_error("additive-fit: need --d >= 2");
  const Mat X = csv_to_matrix(read_csv(x_path), x_path);
  const Vec y = csv_to_vector(read_csv(y_path), y_path);

  auto [design, info] = expand_additive(X, d);
  StandardizationInfo std_info;
  std_info.y_mean = y.mean();
  std_info.col_means = Vec::Zero(design.total_cols());
  std_info.col_scales = Vec::Ones(design.total_cols());
  const Vec yc = y.array() - std_info.y_mean;

  const SlabSpec slab = make_slab(flags);
  const Hyperparams hyper = make_hyper(flags, design.G);
  const FitConfig config = make_config(flags);

  const auto t0 = std::chrono::steady_clock::now();
  const FitResult result = fit(design, yc, slab, hyper, config);
  const auto t1 = std::chrono::steady_clock::now();
  const double wall = std::chrono::duration<double, std::milli>(t1 - t0).count();

  write_json_file(out_path, make_fit_report(result, design, std_info, slab, hyper, config, wall));
  write_json_file(out_path + ".basis.json", basis_info_to_json(info, std_info.y_mean));
  return result.converged ? kExitOk : kExitNoConvergence;
}

int cmd_predict(const std::string& report_path, std::string sidecar_path,
                const std::string& x_path, const std::string& out_path,
                const std::string& truth_path) {
  if (sidecar_path.empty()) sidecar_path = report_path + ".basis.json";
  if (!std::filesystem::exists(sidecar_path))
    throw std::runtime_error("sidecar not found: " + sidecar_path +
                             " (run additive-fit to produce it)");
  const FitResult fit = fit_from_report(read_json_file(report_path));
  auto [info, y_mean] = basis_info_from_json(read_json_file(sidecar_path));
  StandardizationInfo std_info;
  std_info.y_mean = y_mean;

  const Mat X = csv_to_matrix(read_csv(x_path), x_path);
  const Vec yhat = predict_additive(fit, info, std_info, X);

  std::vector<std::string> header{"y_hat"};
  std::vector<std::vector<std::string>> rows;
  rows.reserve(static_cast<size_t>(yhat.size()));
  std::optional<Vec> truth;
  if (!truth_path.empty()) {
    truth = csv_to_vector(read_csv(truth_path), truth_path);
    if (truth->size() != yhat.size())
      throw std::runtime_error("predict: --truth has " + std::to_string(truth->size()) +
                               " rows, predictions have " + std::to_string(yhat.size()));
    header.push_back("squared_error");
  }
  for (Eigen::Index i = 0; i < yhat.size(); ++i) {
    std::vector<std::string> row{format_double(yhat[i])};
    if (truth) {
      const double e = (*truth)[i] - yhat[i];
      row.push_back(format_double(e * e));
    }
    rows.push_back(std::move(row));
  }
  write_csv_or_stdout(out_path, header, rows);
  if (truth) {
    const double mse = (*truth - yhat).squaredNorm() / static_cast<double>(yhat.size());
    std::cerr << "mean squared prediction error: " << format_double(mse) << "\n";
  }
  return kExitOk;
}

int cmd_simulate(const std::string& preset, int example, SimScenario sc, AdditiveParams ap,
                 int d, Eigen::Index n_test, int reps, int jobs, const std::string& out_path,
                 const SlabFlags& flags) {
  const SlabSpec slab = make_slab(flags);
  const FitConfig config = make_config(flags);

  if (example != 0) {
    ap.seed = flags.seed;
    const Hyperparams hyper = make_hyper(flags, ap.p);
    const auto rows = run_additive_benchmark(example, ap, d, slab, hyper, config, reps,
                                             n_test, jobs);
    write_csv_or_stdout(out_path, additive_csv_header(), additive_csv_rows(example, ap, d, rows));
    return kExitOk;
  }

  if (preset == "supp-table2") {
    sc.n = 200; sc.G = 200; sc.p_i = 5; sc.k = 10;
    sc.within_rho = 0.6; sc.between_rho = 0.2;
    sc.coef = CoefSpec{CoefLaw::Uniform, -0.5, 0.5, 1.0, 3.0};
  } else if (preset == "supp-table3") {
    sc.n = 200; sc.G = 200; sc.p_i = 5; sc.k = 5;
    sc.within_rho = 0.6; sc.between_rho = 0.2;
    sc.coef = CoefSpec{CoefLaw::Uniform, -0.5, 0.5, 1.0, 3.0};
  } else if (!preset.empty()) {
    throw std::runtime_error("unknown preset: " + preset +
                             " (available: supp-table2, supp-table3)");
  }
  sc.seed = flags.seed;
  const Hyperparams hyper = make_hyper(flags, sc.G);
  const auto rows = run_linear_benchmark(sc, slab, hyper, config, reps, jobs);
  write_csv_or_stdout(out_path, linear_csv_header(), linear_csv_rows(sc, rows));
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grouped spike-and-slab variational regression"};
  app.require_subcommand(1);

  SlabFlags flags;
  std::string x_path, y_path, groups_path, out_path;
  std::string report_path, sidecar_path, truth_path;
  std::string preset, coef_law = "uniform";
  int d = 5, example = 0, reps = 50, jobs = 1;
  Eigen::Index n_test = 200;
  SimScenario sc;
  AdditiveParams ap;

  auto* fit_cmd = app.add_subcommand("fit", "fit a grouped linear model");
  fit_cmd->add_option("--x", x_path, "design CSV with header")->required();
  fit_cmd->add_option("--y", y_path, "response CSV, single column")->required();
  fit_cmd->add_option("--groups", groups_path, "CSV mapping column name -> group name");
  fit_cmd->add_option("--out", out_path, "output report path")->required();
  add_fit_flags(fit_cmd, flags);

  auto* add_cmd = app.add_subcommand("additive-fit", "fit a sparse additive model");
  add_cmd->add_option("--x", x_path, "covariate CSV with header")->required();
  add_cmd->add_option("--y", y_path, "response CSV, single column")->required();
  add_cmd->add_option("--d", d, "basis functions per covariate")->required();
  add_cmd->add_option("--out", out_path, "output report path")->required();
  add_fit_flags(add_cmd, flags);

  auto* pred_cmd = app.add_subcommand("predict", "predict from an additive-fit report");
  pred_cmd->add_option("--report", report_path, "fit report path")->required();
  pred_cmd->add_option("--sidecar", sidecar_path, "basis sidecar path (default <report>.basis.json)");
  pred_cmd->add_option("--x", x_path, "covariate CSV with header")->required();
  pred_cmd->add_option("--out", out_path, "predictions CSV path (stdout if omitted)");
  pred_cmd->add_option("--truth", truth_path, "response CSV for error summary");

  auto* sim_cmd = app.add_subcommand("simulate", "run a replication benchmark");
  sim_cmd->add_option("--preset", preset, "supp-table2 | supp-table3");
  sim_cmd->add_option("--example", example, "additive example 1 or 2 (0 = linear)");
  sim_cmd->add_option("--n", sc.n, "sample size");
  sim_cmd->add_option("--G", sc.G, "group count");
  sim_cmd->add_option("--p-i", sc.p_i, "group size");
  sim_cmd->add_option("--k", sc.k, "active groups");
  sim_cmd->add_option("--within-rho", sc.within_rho, "within-group correlation");
  sim_cmd->add_option("--between-rho", sc.between_rho, "between-group correlation");
  sim_cmd->add_option("--snr", sc.snr, "signal-to-noise ratio");
  sim_cmd->add_option("--coef-law", coef_law,
                      "uniform|laplace|gaussian|gaussian-mixture|t");
  sim_cmd->add_option("--p", ap.p, "covariate count (additive)");
  sim_cmd->add_option("--d", d, "basis functions per covariate (additive)");
  sim_cmd->add_option("--rho", ap.rho, "AR parameter, additive example 1");
  sim_cmd->add_option("--t", ap.t, "mixing parameter, additive example 2");
  sim_cmd->add_option("--n-test", n_test, "held-out rows (additive)");
  sim_cmd->add_option("--reps", reps, "replications");
  sim_cmd->add_option("--jobs", jobs, "worker threads over replications");
  sim_cmd->add_option("--out", out_path, "metrics CSV path (stdout if omitted)");
  add_fit_flags(sim_cmd, flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit_cmd->parsed()) return cmd_fit(x_path, y_path, groups_path, out_path, flags);
    if (add_cmd->parsed()) return cmd_additive_fit(x_path, y_path, out_path, d, flags);
    if (pred_cmd->parsed())
      return cmd_predict(report_path, sidecar_path, x_path, out_path, truth_path);
    if (sim_cmd->parsed()) {
      sc.coef.law = parse_coef_law(coef_law);
      if (sim_cmd->count("--n")) ap.n = sc.n;
      if (sim_cmd->count("--snr")) ap.snr = sc.snr;
      return cmd_simulate(preset, example, sc, ap, d, n_test, reps, jobs, out_path, flags);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
