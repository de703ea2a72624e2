#pragma once

#include "gvssb/types.hpp"

#include <vector>

namespace gvssb {

/// Slab-dependent quantities for one group under the current variational
/// parameters; valid for hierarchical families only.
struct SlabMoments {
  double e_alpha_sq = 0.0;       ///< E[alpha^2] under q(alpha^2)
  double log_C = 0.0;            ///< log normalizer of q(alpha^2)
  double gamma_prior_term = 0.0; ///< slab part of the gamma logit argument
};

/// E[alpha^2] under q(alpha^2): lambda/sqrt(kappa) for Laplacian,
/// (nu+p)/(nu lambda^2 + kappa) for StudentT. Gaussian returns the constant
/// slab precision. Laplacian requires kappa > 0.
double expected_alpha_sq(const SlabSpec& slab, double kappa, Eigen::Index p);

/// E[1/alpha^2] under q(alpha^2). Laplacian: sqrt(kappa)/lambda + 1/lambda^2.
/// StudentT: rate/(shape-1), requires nu + p > 2.
double expected_inv_alpha_sq(const SlabSpec& slab, double kappa, Eigen::Index p);

/// log of the q(alpha^2) normalizer: the integral of
/// (alpha^2)^{p/2} exp(-alpha^2 kappa/2) h(alpha^2) over alpha^2, in closed
/// form. Hierarchical families only; Laplacian requires kappa > 0.
double log_norm_const(const SlabSpec& slab, double kappa, Eigen::Index p);

/// Slab-dependent part of the inclusion-probability logit: everything in
/// the logit argument except log(w/(1-w)). quad_form is mu' Sigma^{-1} mu.
double gamma_prior_term(const SlabSpec& slab, double kappa, Eigen::Index p,
                        double logdet_sigma, double quad_form);

/// e_alpha_sq, log_C, and gamma_prior_term in one call (hierarchical only).
SlabMoments slab_moments(const SlabSpec& slab, double kappa, Eigen::Index p,
                         double logdet_sigma, double quad_form);

/// E_{N(mu, Sigma)} log N(theta; 0, rho^{-1} I) with normalizing constants,
/// rho the Gaussian slab precision. Gaussian family only.
double gaussian_expected_log_h(const Vec& mu, const Mat& sigma_mat, const SlabSpec& slab);

/// Per-group sufficient statistics for the EM lambda update.
struct GroupStats {
  Eigen::Index p = 0;         ///< group size
  double trace_second = 0.0;  ///< Tr(Sigma + mu mu'), Gaussian family
  double kappa = 0.0;         ///< mu'mu + Tr(Sigma), hierarchical families
};

/// One EM step for the slab scale. Gaussian: exact maximizer
/// sum gamma_i p_i / sum gamma_i Tr(Sigma_i + mu_i mu_i'). Hierarchical:
/// one fixed-point step with slab.lambda as the previous value. Returns the
/// previous lambda with a warning when the weights (or the denominator)
/// vanish.
double em_lambda_update(const SlabSpec& slab, const Vec& gamma,
                        const std::vector<GroupStats>& stats);

}  // namespace gvssb
