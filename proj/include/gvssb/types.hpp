#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gvssb {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Design matrix partitioned into column blocks, one per group, with the
/// per-block Gram matrices cached. Immutable after construction.
struct GroupedDesign {
  Eigen::Index n = 0;  ///< sample count
  Eigen::Index G = 0;  ///< group count
  std::vector<Mat> blocks;                    ///< n x p_i each
  std::vector<std::string> group_names;       ///< ordered by first appearance
  std::vector<Mat> grams;                     ///< p_i x p_i, blocks[i]^T blocks[i]
  std::vector<std::vector<Eigen::Index>> col_indices;  ///< original column of each block column
  std::optional<Vec> op_norm_sq;              ///< largest gram eigenvalue per block

  Eigen::Index group_size(Eigen::Index i) const { return blocks[i].cols(); }
  Eigen::Index total_cols() const {
    Eigen::Index p = 0;
    for (const auto& b : blocks) p += b.cols();
    return p;
  }
  /// Columns reassembled into original order (inverse of the block partition).
  Mat assemble() const;
  /// Scatter a block-ordered coefficient stack back to original column order.
  Vec scatter_to_columns(const std::vector<Vec>& per_block) const;
};

/// Columns grouped by label, blocks ordered by first appearance of each
/// label, column order preserved within a block. No standardization here.
GroupedDesign make_grouped_design(const Mat& X,
                                  const std::vector<std::string>& group_labels,
                                  bool compute_op_norms = false);

enum class SlabFamily { Gaussian, Laplacian, StudentT };

/// Slab family plus its scale hyperparameter. For the Gaussian family
/// `lambda` is the slab precision (the slab is N(0, lambda^{-1} I)); for
/// the Laplacian and Student-t families it is the inverse-scale parameter
/// of the density. Cauchy is stored as StudentT with nu = 1.
struct SlabSpec {
  SlabFamily family = SlabFamily::Gaussian;
  double lambda = 1.0;
  double nu = 1.0;  ///< degrees of freedom, StudentT only

  static SlabSpec gaussian(double lambda = 1.0) { return {SlabFamily::Gaussian, lambda, 1.0}; }
  static SlabSpec laplacian(double lambda = 1.0) { return {SlabFamily::Laplacian, lambda, 1.0}; }
  static SlabSpec student_t(double lambda = 1.0, double nu = 3.0) {
    return {SlabFamily::StudentT, lambda, nu};
  }
  static SlabSpec cauchy(double lambda = 1.0) { return {SlabFamily::StudentT, lambda, 1.0}; }

  bool hierarchical() const { return family != SlabFamily::Gaussian; }
  void validate() const;
};

std::string to_string(SlabFamily f);
/// Parses "gaussian" | "laplacian" | "t" | "cauchy" (cauchy => StudentT, nu=1).
SlabFamily parse_slab_family(const std::string& name);

/// Mixture weight w and the Inverse-Gamma(alpha, beta) prior on sigma^2.
/// alpha = beta = 0 is the noninformative improper prior.
struct Hyperparams {
  double lambda = 1.0;  ///< mirrors SlabSpec::lambda; mutated by EM
  double w = 0.5;       ///< prior inclusion probability, in (0, 1)
  double alpha_sigma = 0.0;
  double beta_sigma = 0.0;

  void validate() const;
};

/// All mean-field parameters of one fit.
struct VariationalState {
  Vec gamma;                   ///< G, inclusion probabilities in [0, 1]
  std::vector<Vec> mu;         ///< p_i each
  std::vector<Mat> sigma_mat;  ///< p_i x p_i, symmetric PD
  Vec kappa;                   ///< G, hierarchical slabs only
  double v = 0.0;              ///< scale of q(sigma^2)
  double sigma_tilde_sq = 1.0; ///< (v/2 + beta) / (n/2 + alpha)
  Vec residual;                ///< n, equals y - sum_j gamma_j X_j mu_j
};

/// Ridge-based initialization policy for mu.
struct InitPolicy {
  int folds = 10;
  std::vector<double> grid;  ///< empty => 50 log-spaced points in [1e-4, 1e4]
};

struct FitConfig {
  double eps_H = 1e-3;
  double eps_sigma = 1e-3;
  int max_iter = 500;
  bool em_enabled = true;
  double selection_threshold = 0.5;
  std::uint64_t rng_seed = 0;
  InitPolicy init;
  bool gate_sigma_update = true;            ///< false: update sigma every sweep
  std::optional<double> fixed_sigma_sq;     ///< hold sigma^2 fixed, skip v updates

  void validate() const;
};

struct FitResult {
  VariationalState state;
  std::vector<Eigen::Index> selected;  ///< groups with gamma_i > threshold
  double sigma_hat_sq = 0.0;           ///< posterior mean of q(sigma^2)
  std::vector<double> elbo_trace;      ///< one entry per sweep
  std::vector<std::pair<double, double>> hyper_trace;  ///< (lambda, w) per EM step
  int iterations = 0;
  bool converged = false;
};

/// Consistency report for a VariationalState against its design and response.
struct StateDiagnostics {
  double residual_drift = 0.0;        ///< max-norm of r minus its recomputation
  double min_sigma_eigenvalue = 0.0;  ///< min over groups of min eigenvalue
  std::vector<Eigen::Index> gamma_violations;  ///< groups with gamma outside [0, 1]
  double sigma_tilde_mismatch = 0.0;  ///< |stored - (v/2+beta)/(n/2+alpha)|
};

StateDiagnostics validate_state(const VariationalState& state,
                                const GroupedDesign& design, const Vec& y,
                                const Hyperparams& hyper = {});

}  // namespace gvssb
