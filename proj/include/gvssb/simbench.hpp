#pragma once

#include "gvssb/additive.hpp"
#include "gvssb/cavi.hpp"
#include "gvssb/preprocess.hpp"
#include "gvssb/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace gvssb {

enum class CoefLaw { Uniform, Laplace, Gaussian, GaussianMixture, StudentT };

CoefLaw parse_coef_law(const std::string& name);
std::string to_string(CoefLaw law);

/// Coefficient distribution for the nonzero groups.
struct CoefSpec {
  CoefLaw law = CoefLaw::Uniform;
  double a = -0.5, b = 0.5;  ///< Uniform bounds
  double scale = 1.0;        ///< Laplace/Gaussian scale
  double df = 3.0;           ///< StudentT degrees of freedom
};

/// Grouped linear-regression scenario: k active groups out of G, equicorrelated
/// blocks (within_rho inside a group, between_rho across groups), noise set
/// from the target signal-to-noise ratio.
struct SimScenario {
  Eigen::Index n = 200;
  Eigen::Index G = 200;
  Eigen::Index p_i = 5;
  Eigen::Index k = 10;
  double within_rho = 0.6;
  double between_rho = 0.2;
  double snr = 1.0;
  CoefSpec coef;
  std::uint64_t seed = 0;

  void validate() const;
  Eigen::Index p() const { return G * p_i; }
};

struct LinearData {
  Mat X;  ///< n x G*p_i, raw (unstandardized)
  Vec y;
  Vec theta_star;
  std::vector<Eigen::Index> support;  ///< active group indices, sorted
  double sigma_star_sq = 0.0;
  std::vector<std::string> labels;  ///< group label per column
};

/// Draws one dataset; fully deterministic in sc.seed. sigma_star^2 is set to
/// the empirical variance of X theta_star divided by snr.
LinearData gen_linear(const SimScenario& sc);

struct AdditiveParams {
  Eigen::Index n = 200;
  Eigen::Index p = 600;
  double rho = 0.5;  ///< AR(1) parameter, example 1
  double t = 0.5;    ///< uniform-mixing parameter, example 2
  std::optional<double> snr;  ///< absent: noise sd fixed at 1
  std::uint64_t seed = 0;
};

struct AdditiveData {
  Mat X;
  Vec y;
  std::vector<Eigen::Index> truth;  ///< {0,1,2,3}
  double sigma_star_sq = 0.0;
};

/// Component function j (1-based, 1..4) of the additive benchmarks:
/// example 1 is (5 sin x, 2(x^2-0.5), e^x, 3x); example 2 is (5x, 3(2x-1)^2,
/// 4 sin(2 pi x)/(2-sin(2 pi x)), and the trigonometric polynomial).
double additive_signal(int example, int j, double x);

/// The two sparse-additive benchmark generators: example 1 uses AR(1)
/// Gaussian covariates, example 2 correlated uniforms X = (W + tU)/(1+t);
/// the first four covariates carry the additive_signal components.
AdditiveData gen_additive(int example, const AdditiveParams& params);

struct ConfusionCounts {
  long tp = 0, fp = 0, tn = 0, fn = 0;
};

ConfusionCounts confusion(const std::vector<Eigen::Index>& selected,
                          const std::vector<Eigen::Index>& truth, Eigen::Index G);

struct SelectionMetrics {
  double precision = 0.0, recall = 0.0, mcc = 0.0;
};

/// precision, recall, and Matthews correlation over groups; any zero
/// denominator yields 0 for that metric.
SelectionMetrics selection_metrics(const std::vector<Eigen::Index>& selected,
                                   const std::vector<Eigen::Index>& truth, Eigen::Index G);

struct EstimationMetrics {
  double log_mse = 0.0;        ///< log(||theta_hat - theta_star||^2 / p), floored
  double sigma_rel_err = 0.0;  ///< |sigma_hat^2 / sigma_star^2 - 1|
  std::optional<double> pred_err;  ///< held-out mean squared error
};

/// theta_hat = gamma_j mu_j mapped back to the raw covariate scale through
/// the standardization info. Held-out error is computed when test rows are
/// supplied.
EstimationMetrics estimation_metrics(const FitResult& fit, const GroupedDesign& design,
                                     const StandardizationInfo& std_info,
                                     const Vec& theta_star, double sigma_star_sq,
                                     const Mat* X_test = nullptr, const Vec* y_test = nullptr);

/// One replication row of the linear benchmark.
struct LinearRepMetrics {
  int rep = 0;
  SelectionMetrics sel;
  EstimationMetrics est;
  int iterations = 0;
  bool converged = false;
  double wall_ms = 0.0;
};

/// Runs `reps` independent replications of the scenario (stream seed =
/// (sc.seed, rep)), fitting each with the given slab/config. jobs > 1 runs
/// replications on worker threads; results are ordered by rep either way.
std::vector<LinearRepMetrics> run_linear_benchmark(const SimScenario& sc,
                                                   const SlabSpec& slab,
                                                   const Hyperparams& hyper,
                                                   const FitConfig& config, int reps,
                                                   int jobs = 1);

/// One replication row of the additive benchmark; prediction errors are on
/// `n_test` extra held-out rows, with the train-mean predictor as the null
/// baseline.
struct AdditiveRepMetrics {
  int rep = 0;
  SelectionMetrics sel;
  double pred_err = 0.0;
  double null_err = 0.0;
  int iterations = 0;
  bool converged = false;
  double wall_ms = 0.0;
};

std::vector<AdditiveRepMetrics> run_additive_benchmark(int example,
                                                       const AdditiveParams& params, int d,
                                                       const SlabSpec& slab,
                                                       const Hyperparams& hyper,
                                                       const FitConfig& config, int reps,
                                                       Eigen::Index n_test, int jobs = 1);

/// CSV serialization of benchmark rows: header plus one row per replication
/// and a trailing aggregate row (means and standard errors).
std::vector<std::string> linear_csv_header();
std::vector<std::vector<std::string>> linear_csv_rows(const SimScenario& sc,
                                                      const std::vector<LinearRepMetrics>& reps);
std::vector<std::string> additive_csv_header();
std::vector<std::vector<std::string>> additive_csv_rows(
    int example, const AdditiveParams& params, int d,
    const std::vector<AdditiveRepMetrics>& reps);

}  // namespace gvssb
