#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gvssb/additive.hpp"
#include "gvssb/cavi.hpp"
#include "gvssb/preprocess.hpp"
#include "gvssb/report.hpp"
#include "gvssb/simbench.hpp"
#include "gvssb/types.hpp"

#include <json.hpp>

#include <chrono>
#include <optional>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace gvssb;

namespace {

struct Options {
  std::string slab = "gaussian";
  double nu = 3.0;
  double lambda0 = 1.0;
  double w0 = -1.0;
  bool em = true;
  double eps_h = 1e-3;
  double eps_sigma = 1e-3;
  int max_iter = 500;
  double threshold = 0.5;
  std::uint64_t seed = 0;
  std::optional<double> fixed_sigma_sq;
};

SlabSpec make_slab(const Options& o) {
  SlabSpec s;
  s.family = parse_slab_family(o.slab);
  s.lambda = o.lambda0;
  if (s.family == SlabFamily::StudentT) s.nu = o.slab == "cauchy" ? 1.0 : o.nu;
  s.validate();
  return s;
}

Hyperparams make_hyper(const Options& o, Eigen::Index G) {
  Hyperparams h;
  h.lambda = o.lambda0;
  h.w = o.w0 > 0.0 ? o.w0 : 1.0 / static_cast<double>(G);
  return h;
}

FitConfig make_config(const Options& o) {
  FitConfig c;
  c.eps_H = o.eps_h;
  c.eps_sigma = o.eps_sigma;
  c.max_iter = o.max_iter;
  c.em_enabled = o.em;
  c.selection_threshold = o.threshold;
  c.rng_seed = o.seed;
  c.fixed_sigma_sq = o.fixed_sigma_sq;
  return c;
}

std::string fit_linear(const Mat& X, const Vec& y, std::vector<std::string> labels,
                       const Options& o) {
  if (labels.empty())
    for (Eigen::Index j = 0; j < X.cols(); ++j)
      labels.push_back("x" + std::to_string(j + 1));
  auto [design, yc, std_info] = standardize(make_grouped_design(X, labels), y);
  const SlabSpec slab = make_slab(o);
  const Hyperparams hyper = make_hyper(o, design.G);
  const FitConfig config = make_config(o);

  const auto t0 = std::chrono::steady_clock::now();
  const FitResult result = fit(design, yc, slab, hyper, config);
  const double wall =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return make_fit_report(result, design, std_info, slab, hyper, config, wall).dump();
}

py::tuple fit_additive_py(const Mat& X, const Vec& y, int d, int degree, const Options& o) {
  auto [design, info] = expand_additive(X, d, degree);
  StandardizationInfo std_info;
  std_info.y_mean = y.mean();
  std_info.col_means = Vec::Zero(design.total_cols());
  std_info.col_scales = Vec::Ones(design.total_cols());
  const Vec yc = y.array() - std_info.y_mean;

  const SlabSpec slab = make_slab(o);
  const Hyperparams hyper = make_hyper(o, design.G);
  const FitConfig config = make_config(o);

  const auto t0 = std::chrono::steady_clock::now();
  const FitResult result = fit(design, yc, slab, hyper, config);
  const double wall =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return py::make_tuple(
      make_fit_report(result, design, std_info, slab, hyper, config, wall).dump(),
      basis_info_to_json(info, std_info.y_mean).dump());
}

Vec predict_additive_py(const std::string& report_json, const std::string& basis_json,
                        const Mat& X_new) {
  const FitResult restored = fit_from_report(nlohmann::json::parse(report_json));
  auto [info, y_mean] = basis_info_from_json(nlohmann::json::parse(basis_json));
  StandardizationInfo std_info;
  std_info.y_mean = y_mean;
  return predict_additive(restored, info, std_info, X_new);
}

}  // namespace

PYBIND11_MODULE(_gvssb, m) {
  m.doc() = "grouped spike-and-slab variational regression (native core)";

  const auto opts = [](const std::string& slab, double nu, double lambda0, double w0, bool em,
                       double eps_h, double eps_sigma, int max_iter, double threshold,
                       std::uint64_t seed, std::optional<double> fixed_sigma_sq) {
    return Options{slab, nu, lambda0, w0, em, eps_h, eps_sigma, max_iter, threshold,
                   seed, fixed_sigma_sq};
  };

  m.def(
      "fit_linear",
      [opts](const Mat& X, const Vec& y, const std::vector<std::string>& groups,
             const std::string& slab, double nu, double lambda0, double w0, bool em,
             double eps_h, double eps_sigma, int max_iter, double threshold,
             std::uint64_t seed, std::optional<double> fixed_sigma_sq) {
        return fit_linear(X, y, groups,
                          opts(slab, nu, lambda0, w0, em, eps_h, eps_sigma, max_iter,
                               threshold, seed, fixed_sigma_sq));
      },
      py::arg("X"), py::arg("y"), py::arg("groups") = std::vector<std::string>{},
      py::arg("slab") = "gaussian", py::arg("nu") = 3.0, py::arg("lambda0") = 1.0,
      py::arg("w0") = -1.0, py::arg("em") = true, py::arg("eps_h") = 1e-3,
      py::arg("eps_sigma") = 1e-3, py::arg("max_iter") = 500, py::arg("threshold") = 0.5,
      py::arg("seed") = 0, py::arg("fixed_sigma_sq") = std::nullopt,
      "Standardize, fit, and return the JSON report as a string. `groups` lists "
      "one label per column; empty means one group per column.");

  m.def(
      "fit_additive",
      [opts](const Mat& X, const Vec& y, int d, int degree, const std::string& slab,
             double nu, double lambda0, double w0, bool em, double eps_h, double eps_sigma,
             int max_iter, double threshold, std::uint64_t seed) {
        return fit_additive_py(X, y, d, degree,
                               opts(slab, nu, lambda0, w0, em, eps_h, eps_sigma, max_iter,
                                    threshold, seed, {}));
      },
      py::arg("X"), py::arg("y"), py::arg("d") = 5, py::arg("degree") = 3,
      py::arg("slab") = "gaussian", py::arg("nu") = 3.0, py::arg("lambda0") = 1.0,
      py::arg("w0") = -1.0, py::arg("em") = true, py::arg("eps_h") = 1e-3,
      py::arg("eps_sigma") = 1e-3, py::arg("max_iter") = 500, py::arg("threshold") = 0.5,
      py::arg("seed") = 0,
      "B-spline expansion of every covariate followed by a grouped fit; returns "
      "(report_json, basis_json).");

  m.def("predict_additive", &predict_additive_py, py::arg("report_json"),
        py::arg("basis_json"), py::arg("X_new"),
        "Predictions for new covariate rows from a serialized additive fit.");

  m.def(
      "simulate_linear",
      [](Eigen::Index n, Eigen::Index G, Eigen::Index p_i, Eigen::Index k,
         double within_rho, double between_rho, double snr, const std::string& coef_law,
         std::uint64_t seed) {
        SimScenario sc;
        sc.n = n;
        sc.G = G;
        sc.p_i = p_i;
        sc.k = k;
        sc.within_rho = within_rho;
        sc.between_rho = between_rho;
        sc.snr = snr;
        sc.coef.law = parse_coef_law(coef_law);
        sc.seed = seed;
        const LinearData data = gen_linear(sc);
        return py::make_tuple(data.X, data.y, data.support, data.sigma_star_sq, data.labels);
      },
      py::arg("n") = 200, py::arg("G") = 200, py::arg("p_i") = 5, py::arg("k") = 10,
      py::arg("within_rho") = 0.6, py::arg("between_rho") = 0.2, py::arg("snr") = 1.0,
      py::arg("coef_law") = "uniform", py::arg("seed") = 0,
      "Draw one grouped regression dataset; returns (X, y, support, sigma2_star, labels).");

  m.def(
      "simulate_additive",
      [](int example, Eigen::Index n, Eigen::Index p, double rho, double t,
         std::optional<double> snr, std::uint64_t seed) {
        AdditiveParams ap;
        ap.n = n;
        ap.p = p;
        ap.rho = rho;
        ap.t = t;
        ap.snr = snr;
        ap.seed = seed;
        const AdditiveData data = gen_additive(example, ap);
        return py::make_tuple(data.X, data.y, data.truth, data.sigma_star_sq);
      },
      py::arg("example"), py::arg("n") = 200, py::arg("p") = 600, py::arg("rho") = 0.5,
      py::arg("t") = 0.5, py::arg("snr") = std::nullopt, py::arg("seed") = 0,
      "Draw one sparse additive dataset; returns (X, y, truth, sigma2_star).");

  m.def(
      "selection_metrics",
      [](const std::vector<Eigen::Index>& selected, const std::vector<Eigen::Index>& truth,
         Eigen::Index G) {
        const SelectionMetrics s = selection_metrics(selected, truth, G);
        return py::make_tuple(s.precision, s.recall, s.mcc);
      },
      py::arg("selected"), py::arg("truth"), py::arg("G"),
      "Precision, recall, and Matthews correlation over group indices.");
}
