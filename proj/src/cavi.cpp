#include "gvssb/cavi.hpp"

#include "gvssb/preprocess.hpp"
#include "gvssb/slab.hpp"

#include <Eigen/Cholesky>
#include <boost/math/special_functions/digamma.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <string>

namespace gvssb {

namespace {

constexpr double kSigmaFloor = 1e-30;  // keeps the y = 0 edge case finite

double logistic(double t) {
  t = std::clamp(t, -700.0, 700.0);
  return 1.0 / (1.0 + std::exp(-t));
}

double log_odds(double w) { return std::log(w) - std::log1p(-w); }

struct GroupUpdate {
  Vec mu;
  Mat sigma;
  double logdet_sigma = 0.0;
  double quad_form = 0.0;  // mu' Sigma^{-1} mu
  Vec r_full;              // residual with group i added back
};

// Solves the (Sigma_i, mu_i) subproblem at a given prior precision.
GroupUpdate solve_group(Eigen::Index i, const VariationalState& state,
                        const GroupedDesign& design, double prior_precision) {
  const Mat& Xi = design.blocks[i];
  const double s2 = state.sigma_tilde_sq;
  GroupUpdate u;
  u.r_full = state.residual + state.gamma[i] * (Xi * state.mu[i]);
  Mat prec = design.grams[i] / s2;
  prec.diagonal().array() += prior_precision;
  Eigen::LLT<Mat> llt(prec);
  if (llt.info() != Eigen::Success)
    throw std::runtime_error("group update: Cholesky failed for group " +
                             design.group_names[i]);
  const Vec b = Xi.transpose() * u.r_full / s2;
  u.mu = llt.solve(b);
  u.sigma = llt.solve(Mat::Identity(Xi.cols(), Xi.cols()));
  u.logdet_sigma = -2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  u.quad_form = std::max(u.mu.dot(b), 0.0);
  return u;
}

void commit_group(Eigen::Index i, VariationalState& state, const GroupedDesign& design,
                  GroupUpdate&& u, double logit_arg) {
  state.gamma[i] = logistic(logit_arg);
  state.residual = u.r_full - state.gamma[i] * (design.blocks[i] * u.mu);
  state.mu[i] = std::move(u.mu);
  state.sigma_mat[i] = std::move(u.sigma);
}

}  // namespace

double binary_entropy(double g) {
  double h = 0.0;
  if (g > 0.0) h -= g * std::log(g);
  if (g < 1.0) h -= (1.0 - g) * std::log1p(-g);
  return h;
}

double compute_v(const VariationalState& state, const GroupedDesign& design) {
  double v = state.residual.squaredNorm();
  for (Eigen::Index i = 0; i < design.G; ++i) {
    const double g = state.gamma[i];
    v += g * (1.0 - g) * state.mu[i].dot(design.grams[i] * state.mu[i]);
    v += g * (design.grams[i] * state.sigma_mat[i]).trace();
  }
  return std::max(v, 0.0);
}

void update_group_gaussian(Eigen::Index i, VariationalState& state,
                           const GroupedDesign& design, const Vec&,
                           const Hyperparams& hyper) {
  const double rho = hyper.lambda;
  GroupUpdate u = solve_group(i, state, design, rho);
  const SlabSpec slab = SlabSpec::gaussian(rho);
  const double term =
      gamma_prior_term(slab, 0.0, design.group_size(i), u.logdet_sigma, u.quad_form);
  commit_group(i, state, design, std::move(u), log_odds(hyper.w) + term);
}

void update_group_hierarchical(Eigen::Index i, VariationalState& state,
                               const GroupedDesign& design, const Vec&,
                               const Hyperparams& hyper, const SlabSpec& slab) {
  SlabSpec eff = slab;
  eff.lambda = hyper.lambda;
  const Eigen::Index p = design.group_size(i);
  const double kappa_old = state.kappa[i];
  GroupUpdate u = solve_group(i, state, design, expected_alpha_sq(eff, kappa_old, p));
  const double term = gamma_prior_term(eff, kappa_old, p, u.logdet_sigma, u.quad_form);
  const double kappa_new = u.mu.squaredNorm() + u.sigma.trace();
  commit_group(i, state, design, std::move(u), log_odds(hyper.w) + term);
  state.kappa[i] = kappa_new;
}

void update_v_sigma(VariationalState& state, const GroupedDesign& design, const Vec&,
                    const Hyperparams& hyper) {
  state.v = compute_v(state, design);
  state.sigma_tilde_sq =
      std::max((state.v / 2.0 + hyper.beta_sigma) /
                   (static_cast<double>(design.n) / 2.0 + hyper.alpha_sigma),
               kSigmaFloor);
}

double elbo(const VariationalState& state, const GroupedDesign& design, const Vec& y,
            const Hyperparams& hyper, const SlabSpec& slab,
            std::optional<double> fixed_sigma_sq) {
  const double n = static_cast<double>(design.n);
  const double v_live = compute_v(state, design);

  double e_inv_sigma, e_log_sigma;
  double sigma_terms = 0.0;
  if (fixed_sigma_sq) {
    e_inv_sigma = 1.0 / *fixed_sigma_sq;
    e_log_sigma = std::log(*fixed_sigma_sq);
  } else {
    const double a_n = hyper.alpha_sigma + n / 2.0;
    const double b_n = std::max(hyper.beta_sigma + state.v / 2.0, kSigmaFloor);
    const double psi_a = boost::math::digamma(a_n);
    e_inv_sigma = a_n / b_n;
    e_log_sigma = std::log(b_n) - psi_a;
    // E_q log g(sigma^2) - E_q log q(sigma^2); improper prior drops its
    // normalizer
    double e_log_g =
        -(hyper.alpha_sigma + 1.0) * e_log_sigma - hyper.beta_sigma * e_inv_sigma;
    if (hyper.alpha_sigma > 0.0 && hyper.beta_sigma > 0.0)
      e_log_g += hyper.alpha_sigma * std::log(hyper.beta_sigma) -
                 std::lgamma(hyper.alpha_sigma);
    const double e_log_q =
        -std::log(b_n) - std::lgamma(a_n) + (a_n + 1.0) * psi_a - a_n;
    sigma_terms = e_log_g - e_log_q;
  }

  const double loglik = -n / 2.0 * std::log(2.0 * std::numbers::pi) -
                        n / 2.0 * e_log_sigma - 0.5 * e_inv_sigma * v_live;

  double bern_kl = 0.0;
  for (Eigen::Index i = 0; i < design.G; ++i) {
    const double g = state.gamma[i];
    if (g > 0.0) bern_kl += g * std::log(g / hyper.w);
    if (g < 1.0) bern_kl += (1.0 - g) * std::log((1.0 - g) / (1.0 - hyper.w));
  }

  SlabSpec eff = slab;
  eff.lambda = hyper.lambda;
  double slab_kl = 0.0;
  for (Eigen::Index i = 0; i < design.G; ++i) {
    const double g = state.gamma[i];
    if (g <= 0.0) continue;
    const Eigen::Index p = design.group_size(i);
    const double second = state.mu[i].squaredNorm() + state.sigma_mat[i].trace();
    const double logdet =
        Eigen::LLT<Mat>(state.sigma_mat[i]).matrixL().toDenseMatrix().diagonal().array().log().sum() * 2.0;
    double d_i;
    if (eff.family == SlabFamily::Gaussian) {
      const double rho = eff.lambda;
      d_i = 0.5 * (rho * second - static_cast<double>(p) - logdet -
                   static_cast<double>(p) * std::log(rho));
    } else {
      const double kap = state.kappa[i];
      d_i = 0.5 * (expected_alpha_sq(eff, kap, p) * (second - kap) -
                   logdet - static_cast<double>(p)) -
            log_norm_const(eff, kap, p);
    }
    slab_kl += g * d_i;
  }

  (void)y;
  return loglik - bern_kl - slab_kl + sigma_terms;
}

void update_hyperparameters(const VariationalState& state, SlabSpec& slab,
                            Hyperparams& hyper) {
  const Eigen::Index G = state.gamma.size();
  const double lo = 1.0 / (10.0 * static_cast<double>(G));
  hyper.w = std::clamp(state.gamma.mean(), lo, 1.0 - lo);

  SlabSpec eff = slab;
  eff.lambda = hyper.lambda;
  std::vector<GroupStats> stats(static_cast<size_t>(G));
  for (Eigen::Index i = 0; i < G; ++i) {
    auto& s = stats[static_cast<size_t>(i)];
    s.p = state.mu[i].size();
    s.trace_second = state.mu[i].squaredNorm() + state.sigma_mat[i].trace();
    s.kappa = slab.hierarchical() ? state.kappa[i] : 0.0;
  }
  hyper.lambda = em_lambda_update(eff, state.gamma, stats);
  slab.lambda = hyper.lambda;
}

VariationalState init_state(const GroupedDesign& design, const Vec& y,
                            const Hyperparams& hyper, const FitConfig& config) {
  VariationalState state;
  const Eigen::Index G = design.G;
  state.gamma = Vec::Constant(G, 1.0 / static_cast<double>(G));
  state.kappa = Vec::Zero(G);
  state.mu.resize(G);
  state.sigma_mat.resize(G);

  const std::vector<double> grid =
      config.init.grid.empty() ? default_ridge_grid() : config.init.grid;
  const Vec mu0 = ridge_init(design, y, config.init.folds, grid, config.rng_seed);

  state.v = y.squaredNorm();
  state.sigma_tilde_sq =
      config.fixed_sigma_sq
          ? *config.fixed_sigma_sq
          : std::max((state.v / 2.0 + hyper.beta_sigma) /
                         (static_cast<double>(design.n) / 2.0 + hyper.alpha_sigma),
                     kSigmaFloor);

  for (Eigen::Index i = 0; i < G; ++i) {
    const Eigen::Index p = design.group_size(i);
    Vec m(p);
    for (Eigen::Index c = 0; c < p; ++c) m[c] = mu0[design.col_indices[i][c]];
    state.mu[i] = std::move(m);
    Mat prec = design.grams[i] / state.sigma_tilde_sq;
    prec.diagonal().array() += 1.0;
    state.sigma_mat[i] = Eigen::LLT<Mat>(prec).solve(Mat::Identity(p, p));
    state.kappa[i] = state.mu[i].squaredNorm() + state.sigma_mat[i].trace();
  }

  state.residual = y;
  for (Eigen::Index i = 0; i < G; ++i)
    state.residual.noalias() -= state.gamma[i] * (design.blocks[i] * state.mu[i]);
  return state;
}

FitResult fit(const GroupedDesign& design, const Vec& y, const SlabSpec& slab,
              const Hyperparams& hyper, const FitConfig& config) {
  config.validate();
  slab.validate();
  hyper.validate();
  if (y.size() != design.n)
    throw std::invalid_argument("fit: y length does not match the design");
  if (design.G == 0) throw std::invalid_argument("fit: no groups");

  SlabSpec sl = slab;
  Hyperparams hp = hyper;
  hp.lambda = sl.lambda;

  FitResult result;
  result.state = init_state(design, y, hp, config);
  VariationalState& state = result.state;

  const auto check_finite = [&](Eigen::Index i, int sweep) {
    if (!state.mu[i].allFinite() || !std::isfinite(state.gamma[i]) ||
        !state.sigma_mat[i].allFinite())
      throw std::runtime_error("fit: non-finite values in group " + design.group_names[i] +
                               " at sweep " + std::to_string(sweep));
  };

  std::vector<Eigen::Index> order(static_cast<size_t>(design.G));
  double delta_H = std::numeric_limits<double>::infinity();
  double delta_sigma = std::numeric_limits<double>::infinity();

  for (int sweep = 1; sweep <= config.max_iter; ++sweep) {
    result.iterations = sweep;
    const Vec gamma_old = state.gamma;

    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
      const double na = state.mu[a].norm(), nb = state.mu[b].norm();
      return na != nb ? na > nb : a < b;
    });

    for (Eigen::Index i : order) {
      if (sl.family == SlabFamily::Gaussian)
        update_group_gaussian(i, state, design, y, hp);
      else
        update_group_hierarchical(i, state, design, y, hp, sl);
      check_finite(i, sweep);
    }

    if (config.em_enabled) {
      update_hyperparameters(state, sl, hp);
      result.hyper_trace.emplace_back(hp.lambda, hp.w);
    }

    delta_H = 0.0;
    for (Eigen::Index i = 0; i < design.G; ++i)
      delta_H = std::max(delta_H,
                         std::abs(binary_entropy(state.gamma[i]) - binary_entropy(gamma_old[i])));

    if (config.fixed_sigma_sq) {
      state.v = compute_v(state, design);
      delta_sigma = 0.0;
    } else if (!config.gate_sigma_update || delta_H <= config.eps_H) {
      const double sigma_old = std::sqrt(state.sigma_tilde_sq);
      update_v_sigma(state, design, y, hp);
      delta_sigma = std::abs(std::sqrt(state.sigma_tilde_sq) - sigma_old);
    }

    result.elbo_trace.push_back(elbo(state, design, y, hp, sl, config.fixed_sigma_sq));

    if (delta_H <= config.eps_H && delta_sigma <= config.eps_sigma) {
      result.converged = true;
      break;
    }
  }

  for (Eigen::Index i = 0; i < design.G; ++i)
    if (state.gamma[i] > config.selection_threshold) result.selected.push_back(i);

  if (config.fixed_sigma_sq) {
    result.sigma_hat_sq = *config.fixed_sigma_sq;
  } else {
    const double a_n = hp.alpha_sigma + static_cast<double>(design.n) / 2.0;
    const double b_n = hp.beta_sigma + state.v / 2.0;
    result.sigma_hat_sq = a_n > 1.0 ? b_n / (a_n - 1.0) : state.sigma_tilde_sq;
  }
  return result;
}

}  // namespace gvssb
