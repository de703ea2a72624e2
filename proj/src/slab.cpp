#include "gvssb/slab.hpp"

#include <cmath>
#include <iostream>
#include <numbers>
#include <stdexcept>

namespace gvssb {

namespace {

double checked_kappa(const SlabSpec& slab, double kappa, const char* where) {
  if (kappa < 0.0) {
    if (kappa < -1e-9) throw std::invalid_argument(std::string(where) + ": negative kappa");
    kappa = 0.0;  // roundoff from mu'mu + Tr(Sigma)
  }
  if (slab.family == SlabFamily::Laplacian && kappa == 0.0)
    throw std::invalid_argument(std::string(where) + ": kappa = 0 is singular for the Laplacian slab");
  return kappa;
}

}  // namespace

double expected_alpha_sq(const SlabSpec& slab, double kappa, Eigen::Index p) {
  slab.validate();
  switch (slab.family) {
    case SlabFamily::Gaussian:
      return slab.lambda;
    case SlabFamily::Laplacian:
      kappa = checked_kappa(slab, kappa, "expected_alpha_sq");
      return slab.lambda / std::sqrt(kappa);
    case SlabFamily::StudentT:
      kappa = checked_kappa(slab, kappa, "expected_alpha_sq");
      return (slab.nu + static_cast<double>(p)) / (slab.nu * slab.lambda * slab.lambda + kappa);
  }
  throw std::logic_error("expected_alpha_sq: unreachable");
}

double expected_inv_alpha_sq(const SlabSpec& slab, double kappa, Eigen::Index p) {
  slab.validate();
  if (slab.family == SlabFamily::Laplacian) {
    kappa = checked_kappa(slab, kappa, "expected_inv_alpha_sq");
    return std::sqrt(kappa) / slab.lambda + 1.0 / (slab.lambda * slab.lambda);
  }
  if (slab.family == SlabFamily::StudentT) {
    kappa = checked_kappa(slab, kappa, "expected_inv_alpha_sq");
    const double shape = (slab.nu + static_cast<double>(p)) / 2.0;
    if (!(shape > 1.0))
      throw std::invalid_argument("expected_inv_alpha_sq: needs nu + p > 2");
    return (slab.nu * slab.lambda * slab.lambda + kappa) / 2.0 / (shape - 1.0);
  }
  throw std::invalid_argument("expected_inv_alpha_sq: Gaussian slab has no augmentation");
}

double log_norm_const(const SlabSpec& slab, double kappa, Eigen::Index p) {
  slab.validate();
  const double lam = slab.lambda;
  const double pd = static_cast<double>(p);
  switch (slab.family) {
    case SlabFamily::Gaussian:
      throw std::invalid_argument("log_norm_const: Gaussian slab has no augmentation");
    case SlabFamily::Laplacian: {
      kappa = checked_kappa(slab, kappa, "log_norm_const");
      const double lam2 = lam * lam;
      return (pd + 1.0) / 2.0 * std::log(lam2 / 2.0) - std::lgamma((pd + 1.0) / 2.0) +
             0.5 * std::log(2.0 * std::numbers::pi) - std::log(lam) - lam * std::sqrt(kappa);
    }
    case SlabFamily::StudentT: {
      kappa = checked_kappa(slab, kappa, "log_norm_const");
      const double nu = slab.nu;
      const double nl2 = nu * lam * lam;
      return nu / 2.0 * std::log(nl2 / 2.0) - std::lgamma(nu / 2.0) +
             std::lgamma((nu + pd) / 2.0) - (nu + pd) / 2.0 * std::log((nl2 + kappa) / 2.0);
    }
  }
  throw std::logic_error("log_norm_const: unreachable");
}

double gamma_prior_term(const SlabSpec& slab, double kappa, Eigen::Index p,
                        double logdet_sigma, double quad_form) {
  slab.validate();
  const double lam = slab.lambda;
  const double pd = static_cast<double>(p);
  switch (slab.family) {
    case SlabFamily::Gaussian:
      // slab precision rho = lambda here
      return 0.5 * logdet_sigma + pd / 2.0 * std::log(lam) + 0.5 * quad_form;
    case SlabFamily::Laplacian: {
      kappa = checked_kappa(slab, std::max(kappa, 0.0), "gamma_prior_term");
      return 0.5 * (logdet_sigma + quad_form - lam * std::sqrt(kappa) +
                    pd * std::log(lam * lam / 2.0) + std::log(std::numbers::pi)) -
             std::lgamma((pd + 1.0) / 2.0);
    }
    case SlabFamily::StudentT: {
      if (kappa < 0.0) kappa = 0.0;
      const double nu = slab.nu;
      const double nl2 = nu * lam * lam;
      return 0.5 * (logdet_sigma + quad_form + kappa * (nu + pd) / (nl2 + kappa) +
                    nu * std::log(nl2 / 2.0) - (nu + pd) * std::log((nl2 + kappa) / 2.0)) +
             std::lgamma((nu + pd) / 2.0) - std::lgamma(nu / 2.0);
    }
  }
  throw std::logic_error("gamma_prior_term: unreachable");
}

SlabMoments slab_moments(const SlabSpec& slab, double kappa, Eigen::Index p,
                         double logdet_sigma, double quad_form) {
  if (!slab.hierarchical())
    throw std::invalid_argument("slab_moments: hierarchical families only");
  SlabMoments m;
  m.e_alpha_sq = expected_alpha_sq(slab, kappa, p);
  m.log_C = log_norm_const(slab, kappa, p);
  m.gamma_prior_term = gamma_prior_term(slab, kappa, p, logdet_sigma, quad_form);
  return m;
}

double gaussian_expected_log_h(const Vec& mu, const Mat& sigma_mat, const SlabSpec& slab) {
  if (slab.family != SlabFamily::Gaussian)
    throw std::invalid_argument("gaussian_expected_log_h: Gaussian slab only");
  slab.validate();
  const double rho = slab.lambda;
  const double pd = static_cast<double>(mu.size());
  const double second_moment = mu.squaredNorm() + sigma_mat.trace();
  return -pd / 2.0 * std::log(2.0 * std::numbers::pi) + pd / 2.0 * std::log(rho) -
         rho / 2.0 * second_moment;
}

double em_lambda_update(const SlabSpec& slab, const Vec& gamma,
                        const std::vector<GroupStats>& stats) {
  slab.validate();
  if (static_cast<size_t>(gamma.size()) != stats.size())
    throw std::invalid_argument("em_lambda_update: gamma/stats length mismatch");
  const double weight = gamma.sum();
  if (!(weight > 0.0)) {
    std::cerr << "em_lambda_update: all inclusion probabilities are zero, keeping lambda\n";
    return slab.lambda;
  }
  double num = 0.0, den = 0.0;
  const double lam = slab.lambda;
  switch (slab.family) {
    case SlabFamily::Gaussian:
      for (size_t i = 0; i < stats.size(); ++i) {
        num += gamma[i] * static_cast<double>(stats[i].p);
        den += gamma[i] * stats[i].trace_second;
      }
      break;
    case SlabFamily::Laplacian:
      for (size_t i = 0; i < stats.size(); ++i) {
        num += gamma[i] * (static_cast<double>(stats[i].p) + 1.0);
        den += gamma[i] * (std::sqrt(std::max(stats[i].kappa, 0.0)) / lam + 1.0 / (lam * lam));
      }
      break;
    case SlabFamily::StudentT:
      for (size_t i = 0; i < stats.size(); ++i) {
        num += gamma[i];
        den += gamma[i] * (slab.nu + static_cast<double>(stats[i].p)) /
               (slab.nu * lam * lam + std::max(stats[i].kappa, 0.0));
      }
      break;
  }
  if (!(den > 0.0) || !std::isfinite(den) || !(num > 0.0)) {
    std::cerr << "em_lambda_update: degenerate statistics, keeping lambda\n";
    return slab.lambda;
  }
  const double ratio = num / den;
  return slab.family == SlabFamily::Gaussian ? ratio : std::sqrt(ratio);
}

}  // namespace gvssb
