#pragma once

#include "gvssb/types.hpp"

#include <optional>

namespace gvssb {

/// Per-sweep convergence diagnostics.
struct SweepStats {
  double delta_H = 0.0;      ///< max over groups of |H(gamma) - H(gamma_old)|
  double delta_sigma = 0.0;  ///< |sigma_tilde - previous sigma_tilde|
  double elbo = 0.0;
};

/// Binary entropy with the 0 log 0 = 0 convention.
double binary_entropy(double g);

/// E_q ||y - X theta||^2 via the residual identity:
/// ||r||^2 + sum_i gamma_i (1-gamma_i) mu_i' X_i'X_i mu_i
///         + sum_i gamma_i Tr(X_i'X_i Sigma_i).
/// Assumes state.residual is current.
double compute_v(const VariationalState& state, const GroupedDesign& design);

/// One coordinate update of (Sigma_i, mu_i, gamma_i) under the Gaussian slab
/// with precision hyper.lambda; maintains the residual incrementally.
void update_group_gaussian(Eigen::Index i, VariationalState& state,
                           const GroupedDesign& design, const Vec& y,
                           const Hyperparams& hyper);

/// One coordinate update of (Sigma_i, mu_i, gamma_i, kappa_i) under a
/// hierarchical slab; the scale comes from hyper.lambda, the family and nu
/// from slab. gamma_i is computed at the pre-update kappa_i, then kappa_i
/// is refreshed to mu'mu + Tr(Sigma).
void update_group_hierarchical(Eigen::Index i, VariationalState& state,
                               const GroupedDesign& design, const Vec& y,
                               const Hyperparams& hyper, const SlabSpec& slab);

/// Refreshes v via compute_v and sigma_tilde_sq = (v/2+beta)/(n/2+alpha).
void update_v_sigma(VariationalState& state, const GroupedDesign& design, const Vec& y,
                    const Hyperparams& hyper);

/// Evidence lower bound at the current state. With fixed_sigma_sq set the
/// noise variance is treated as a known constant and the q(sigma^2) terms
/// drop out.
double elbo(const VariationalState& state, const GroupedDesign& design, const Vec& y,
            const Hyperparams& hyper, const SlabSpec& slab,
            std::optional<double> fixed_sigma_sq = {});

/// EM step: w = mean(gamma) clamped to [1/(10G), 1-1/(10G)]; lambda via
/// the slab family's update, written to both hyper.lambda and slab.lambda.
void update_hyperparameters(const VariationalState& state, SlabSpec& slab,
                            Hyperparams& hyper);

/// Initial state: gamma = 1/G, mu from cross-validated ridge,
/// Sigma_i = (X_i'X_i / sigma0^2 + I)^{-1}, kappa_i = mu'mu + Tr(Sigma),
/// v = ||y||^2, sigma0^2 = (v/2+beta)/(n/2+alpha).
VariationalState init_state(const GroupedDesign& design, const Vec& y,
                            const Hyperparams& hyper, const FitConfig& config);

/// Full coordinate-ascent fit on standardized inputs. Each sweep reorders
/// groups by descending ||mu_i||, applies the slab-appropriate update per
/// group, then an EM step when enabled; v and sigma are refreshed only once
/// the entropy change falls below eps_H (always, if gating is disabled).
/// Stops when both the entropy and sigma deltas are within tolerance.
FitResult fit(const GroupedDesign& design, const Vec& y, const SlabSpec& slab,
              const Hyperparams& hyper, const FitConfig& config);

}  // namespace gvssb
