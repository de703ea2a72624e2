#include <doctest.h>

#include "gvssb/cavi.hpp"
#include "gvssb/preprocess.hpp"
#include "gvssb/rng.hpp"
#include "gvssb/slab.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>

using namespace gvssb;

namespace {

GroupedDesign random_design(Rng& rng, Eigen::Index n, Eigen::Index G, Eigen::Index p) {
  Mat X(n, G * p);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
  std::vector<std::string> labels;
  for (Eigen::Index g = 0; g < G; ++g)
    for (Eigen::Index c = 0; c < p; ++c) labels.push_back("g" + std::to_string(g));
  return make_grouped_design(X, labels);
}

// A state whose residual matches gamma/mu, with random PD covariances.
VariationalState random_state(Rng& rng, const GroupedDesign& d, const Vec& y) {
  VariationalState s;
  s.gamma = Vec(d.G);
  s.kappa = Vec(d.G);
  s.mu.resize(d.G);
  s.sigma_mat.resize(d.G);
  for (Eigen::Index i = 0; i < d.G; ++i) {
    s.gamma[i] = rng.uniform();
    const Eigen::Index p = d.group_size(i);
    Vec m(p);
    for (Eigen::Index c = 0; c < p; ++c) m[c] = rng.normal();
    Mat A(p, p);
    for (Eigen::Index c = 0; c < A.size(); ++c) A.data()[c] = rng.normal();
    s.sigma_mat[i] = A * A.transpose() + 0.3 * Mat::Identity(p, p);
    s.mu[i] = std::move(m);
    s.kappa[i] = s.mu[i].squaredNorm() + s.sigma_mat[i].trace();
  }
  s.residual = y;
  for (Eigen::Index i = 0; i < d.G; ++i)
    s.residual.noalias() -= s.gamma[i] * (d.blocks[i] * s.mu[i]);
  s.v = compute_v(s, d);
  s.sigma_tilde_sq = (s.v / 2.0) / (static_cast<double>(d.n) / 2.0);
  return s;
}

Vec random_response(Rng& rng, Eigen::Index n) {
  Vec y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = rng.normal();
  return y;
}

}  // namespace

TEST_CASE("binary entropy endpoints and symmetry") {
  CHECK(binary_entropy(0.0) == 0.0);
  CHECK(binary_entropy(1.0) == 0.0);
  CHECK(binary_entropy(0.5) == doctest::Approx(std::log(2.0)));
  CHECK(binary_entropy(0.2) == doctest::Approx(binary_entropy(0.8)));
}

TEST_CASE("residual-based v equals the literal moment expansion") {
  Rng rng(101);
  for (int rep = 0; rep < 50; ++rep) {
    const GroupedDesign d = random_design(rng, 12, 5, 2);
    const Vec y = random_response(rng, 12);
    const VariationalState s = random_state(rng, d, y);
    const double fast = compute_v(s, d);
    const double literal = oracles::literal_v(s, d, y);
    CHECK(fast == doctest::Approx(literal).epsilon(1e-10));
  }
}

TEST_CASE("gaussian group update shrinks the projection by half on an orthonormal block") {
  Rng rng(5);
  Mat A(20, 3);
  for (Eigen::Index i = 0; i < A.size(); ++i) A.data()[i] = rng.normal();
  const Mat Q = Eigen::HouseholderQR<Mat>(A).householderQ() * Mat::Identity(20, 3);
  const GroupedDesign d = make_grouped_design(Q, {"a", "a", "a"});
  const Vec y = random_response(rng, 20);

  VariationalState s;
  s.gamma = Vec::Constant(1, 0.5);
  s.mu = {Vec::Zero(3)};
  s.sigma_mat = {Mat::Identity(3, 3)};
  s.kappa = Vec::Zero(1);
  s.residual = y;
  s.v = y.squaredNorm();
  s.sigma_tilde_sq = 1.0;

  Hyperparams hp;
  hp.lambda = 1.0;  // matches the unit gram at sigma = 1: posterior halves the projection
  hp.w = 0.5;
  update_group_gaussian(0, s, d, y, hp);

  const Vec proj = Q.transpose() * y;
  CHECK((s.mu[0] - 0.5 * proj).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((s.sigma_mat[0] - 0.5 * Mat::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-12);
  const Vec want_res = y - s.gamma[0] * (Q * s.mu[0]);
  CHECK((s.residual - want_res).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("gaussian group mean approaches least squares as the slab flattens") {
  Rng rng(9);
  Mat X(40, 2);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
  const GroupedDesign d = make_grouped_design(X, {"a", "a"});
  const Vec y = random_response(rng, 40);

  VariationalState s;
  s.gamma = Vec::Constant(1, 0.5);
  s.mu = {Vec::Zero(2)};
  s.sigma_mat = {Mat::Identity(2, 2)};
  s.kappa = Vec::Zero(1);
  s.residual = y;
  s.v = y.squaredNorm();
  s.sigma_tilde_sq = 1.0;

  Hyperparams hp;
  hp.lambda = 1e-12;
  update_group_gaussian(0, s, d, y, hp);
  const Vec ols = (X.transpose() * X).ldlt().solve(X.transpose() * y);
  CHECK((s.mu[0] - ols).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("single-group fit with known noise matches the conjugate posterior") {
  Rng rng(33);
  for (int rep = 0; rep < 5; ++rep) {
    const Eigen::Index n = 30, p = 2;
    Mat X(n, p);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
    Vec beta(p);  // small effects so the inclusion probability stays informative
    beta << 0.4 * rng.normal(), 0.4 * rng.normal();
    Vec y = X * beta;
    for (Eigen::Index i = 0; i < n; ++i) y[i] += 1.2 * rng.normal();

    const GroupedDesign d = make_grouped_design(X, {"a", "a"});
    const double sigma_sq = 1.44, rho = 2.0, w = 0.3;

    SlabSpec slab = SlabSpec::gaussian(rho);
    Hyperparams hp;
    hp.lambda = rho;
    hp.w = w;
    FitConfig cfg;
    cfg.em_enabled = false;
    cfg.fixed_sigma_sq = sigma_sq;
    cfg.rng_seed = 77 + rep;

    const FitResult fr = fit(d, y, slab, hp, cfg);
    const auto oracle = oracles::conjugate_posterior(X, y, sigma_sq, rho, w);

    CHECK(fr.converged);
    CHECK((fr.state.mu[0] - oracle.mu).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((fr.state.sigma_mat[0] - oracle.sigma).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(fr.state.gamma[0] == doctest::Approx(oracle.inclusion).epsilon(1e-6));
    CHECK(fr.sigma_hat_sq == doctest::Approx(sigma_sq));
    CHECK(fr.state.sigma_tilde_sq == doctest::Approx(sigma_sq));
  }
}

TEST_CASE("elbo with no groups equals the null-model log marginal") {
  Rng rng(13);
  const Vec y = random_response(rng, 25);

  GroupedDesign d;
  d.n = y.size();
  d.G = 0;

  VariationalState s;
  s.residual = y;
  s.gamma = Vec::Zero(0);
  s.kappa = Vec::Zero(0);
  s.v = y.squaredNorm();

  SUBCASE("improper noise prior, closed form") {
    Hyperparams hp;
    s.sigma_tilde_sq = (s.v / 2.0) / (static_cast<double>(d.n) / 2.0);
    const double bound = elbo(s, d, y, hp, SlabSpec::gaussian());
    CHECK(bound == doctest::Approx(oracles::null_model_log_marginal(y, 0.0, 0.0))
                       .epsilon(1e-12));
  }

  SUBCASE("proper noise prior, closed form and quadrature") {
    Hyperparams hp;
    hp.alpha_sigma = 2.5;
    hp.beta_sigma = 1.7;
    s.sigma_tilde_sq = (s.v / 2.0 + hp.beta_sigma) /
                       (static_cast<double>(d.n) / 2.0 + hp.alpha_sigma);
    const double bound = elbo(s, d, y, hp, SlabSpec::gaussian());
    const double closed = oracles::null_model_log_marginal(y, 2.5, 1.7);
    const double quad = oracles::null_model_log_marginal_quadrature(y, 2.5, 1.7);
    CHECK(bound == doctest::Approx(closed).epsilon(1e-12));
    CHECK(closed == doctest::Approx(quad).epsilon(1e-9));
  }
}

TEST_CASE("bernoulli term of the elbo is a kl divergence in w") {
  Rng rng(21);
  const GroupedDesign d = random_design(rng, 15, 3, 2);
  const Vec y = random_response(rng, 15);
  VariationalState s = random_state(rng, d, y);
  const double g = 0.35;
  s.gamma.setConstant(g);
  s.residual = y;
  for (Eigen::Index i = 0; i < d.G; ++i)
    s.residual.noalias() -= s.gamma[i] * (d.blocks[i] * s.mu[i]);
  s.v = compute_v(s, d);
  s.sigma_tilde_sq = (s.v / 2.0) / (static_cast<double>(d.n) / 2.0);

  Hyperparams matched;
  matched.w = g;
  Hyperparams other;
  other.w = 0.7;
  const SlabSpec slab = SlabSpec::gaussian();
  const double at_match = elbo(s, d, y, matched, slab);
  const double at_other = elbo(s, d, y, other, slab);
  const double kl = 3.0 * (g * std::log(g / 0.7) + (1.0 - g) * std::log((1.0 - g) / 0.3));
  CHECK(at_match - at_other == doctest::Approx(kl).epsilon(1e-10));
  CHECK(at_match > at_other);
}

TEST_CASE("elbo trace is non-decreasing for every family") {
  Rng rng(55);
  const Eigen::Index n = 40, G = 8, p = 2;
  const GroupedDesign raw = random_design(rng, n, G, p);
  Vec theta = Vec::Zero(G * p);
  theta[0] = 2.0;
  theta[1] = -1.5;
  theta[4] = 1.0;
  Vec y = raw.assemble() * theta;
  for (Eigen::Index i = 0; i < n; ++i) y[i] += 0.8 * rng.normal();
  auto [d, yc, info] = standardize(raw, y);

  const auto check_monotone = [&](const SlabSpec& slab, bool em) {
    Hyperparams hp;
    hp.lambda = slab.lambda;
    hp.w = 0.25;
    FitConfig cfg;
    cfg.em_enabled = em;
    cfg.rng_seed = 4;
    cfg.eps_H = 1e-7;
    cfg.eps_sigma = 1e-7;
    const FitResult fr = fit(d, yc, slab, hp, cfg);
    REQUIRE(fr.elbo_trace.size() >= 2);
    for (size_t k = 1; k < fr.elbo_trace.size(); ++k) {
      const double prev = fr.elbo_trace[k - 1], cur = fr.elbo_trace[k];
      CHECK(cur >= prev - 1e-8 * std::max(1.0, std::abs(prev)));
    }
  };

  check_monotone(SlabSpec::gaussian(), false);
  check_monotone(SlabSpec::gaussian(), true);
  check_monotone(SlabSpec::laplacian(), false);
  check_monotone(SlabSpec::laplacian(), true);
  check_monotone(SlabSpec::student_t(1.0, 3.0), true);
  check_monotone(SlabSpec::cauchy(), true);
}

TEST_CASE("fit leaves a self-consistent state") {
  Rng rng(77);
  const Eigen::Index n = 50, G = 6, p = 3;
  const GroupedDesign raw = random_design(rng, n, G, p);
  Vec theta = Vec::Zero(G * p);
  theta.head(3) << 1.5, -1.0, 2.0;
  Vec y = raw.assemble() * theta;
  for (Eigen::Index i = 0; i < n; ++i) y[i] += rng.normal();
  auto [d, yc, info] = standardize(raw, y);

  SlabSpec slab = SlabSpec::laplacian();
  Hyperparams hp;
  FitConfig cfg;
  cfg.rng_seed = 8;
  const FitResult fr = fit(d, yc, slab, hp, cfg);
  REQUIRE(fr.converged);

  const StateDiagnostics diag = validate_state(fr.state, d, yc, hp);
  CHECK(diag.residual_drift < 1e-9);
  CHECK(diag.gamma_violations.empty());
  CHECK(diag.min_sigma_eigenvalue > 0.0);
  CHECK(diag.sigma_tilde_mismatch < 1e-12);

  // kappa tracks the second moment of every group
  for (Eigen::Index i = 0; i < d.G; ++i) {
    const double second = fr.state.mu[i].squaredNorm() + fr.state.sigma_mat[i].trace();
    CHECK(fr.state.kappa[i] == doctest::Approx(second).epsilon(1e-12));
  }

  // v matches its definition at the final state
  CHECK(fr.state.v == doctest::Approx(compute_v(fr.state, d)).epsilon(1e-10));

  // selection is the strict-threshold rule
  for (Eigen::Index i = 0; i < d.G; ++i) {
    const bool in = std::find(fr.selected.begin(), fr.selected.end(), i) !=
                    fr.selected.end();
    CHECK(in == (fr.state.gamma[i] > cfg.selection_threshold));
  }
}

TEST_CASE("hyperparameter step matches the weighted mean and clamps at the edges") {
  Rng rng(91);
  const GroupedDesign d = random_design(rng, 20, 4, 2);
  const Vec y = random_response(rng, 20);
  VariationalState s = random_state(rng, d, y);

  SlabSpec slab = SlabSpec::gaussian(1.0);
  Hyperparams hp;
  s.gamma << 0.2, 0.4, 0.6, 0.8;
  update_hyperparameters(s, slab, hp);
  CHECK(hp.w == doctest::Approx(0.5));
  CHECK(slab.lambda == hp.lambda);

  double num = 0.0, den = 0.0;
  for (Eigen::Index i = 0; i < 4; ++i) {
    num += s.gamma[i] * 2.0;
    den += s.gamma[i] * (s.mu[i].squaredNorm() + s.sigma_mat[i].trace());
  }
  CHECK(hp.lambda == doctest::Approx(num / den));

  s.gamma.setConstant(1.0);
  update_hyperparameters(s, slab, hp);
  CHECK(hp.w == doctest::Approx(1.0 - 1.0 / 40.0));
  s.gamma.setConstant(0.0);
  update_hyperparameters(s, slab, hp);
  CHECK(hp.w == doctest::Approx(1.0 / 40.0));
}

TEST_CASE("all-zero response selects nothing and stays finite") {
  Rng rng(3);
  const GroupedDesign raw = random_design(rng, 25, 4, 2);
  Vec y_raw = Vec::Zero(25);
  auto [d, yc, info] = standardize(raw, y_raw);
  CHECK(yc.cwiseAbs().maxCoeff() == 0.0);

  SlabSpec slab = SlabSpec::gaussian();
  Hyperparams hp;
  FitConfig cfg;
  cfg.rng_seed = 1;
  cfg.em_enabled = false;
  const FitResult fr = fit(d, yc, slab, hp, cfg);
  CHECK(fr.selected.empty());
  CHECK(fr.state.gamma.maxCoeff() < 1e-6);
  for (double e : fr.elbo_trace) CHECK(std::isfinite(e));
  CHECK(std::isfinite(fr.sigma_hat_sq));

  // with hyperparameter updates the scale chases the shrinking
  // coefficients and gamma settles near the inclusion floor instead;
  // selection must still be empty and every trace value finite
  cfg.em_enabled = true;
  const FitResult fe = fit(d, yc, slab, hp, cfg);
  CHECK(fe.selected.empty());
  CHECK(fe.state.gamma.maxCoeff() < 0.1);
  for (double e : fe.elbo_trace) CHECK(std::isfinite(e));
  CHECK(std::isfinite(fe.sigma_hat_sq));
}

TEST_CASE("fits are bit-identical for a fixed seed") {
  Rng rng(44);
  const Eigen::Index n = 35, G = 5, p = 2;
  const GroupedDesign raw = random_design(rng, n, G, p);
  Vec y = random_response(rng, n);
  auto [d, yc, info] = standardize(raw, y);

  SlabSpec slab = SlabSpec::student_t(1.0, 3.0);
  Hyperparams hp;
  FitConfig cfg;
  cfg.rng_seed = 99;
  const FitResult a = fit(d, yc, slab, hp, cfg);
  const FitResult b = fit(d, yc, slab, hp, cfg);
  CHECK((a.state.gamma - b.state.gamma).cwiseAbs().maxCoeff() == 0.0);
  for (Eigen::Index i = 0; i < d.G; ++i)
    CHECK((a.state.mu[i] - b.state.mu[i]).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.elbo_trace == b.elbo_trace);
  CHECK(a.sigma_hat_sq == b.sigma_hat_sq);
}

TEST_CASE("fit validates its inputs") {
  Rng rng(2);
  const GroupedDesign d = random_design(rng, 10, 2, 1);
  const Vec y = random_response(rng, 10);
  SlabSpec slab = SlabSpec::gaussian();
  Hyperparams hp;
  FitConfig cfg;

  Vec short_y = y.head(5);
  CHECK_THROWS(fit(d, short_y, slab, hp, cfg));
  GroupedDesign empty;
  empty.n = 10;
  CHECK_THROWS(fit(empty, y, slab, hp, cfg));
  FitConfig bad = cfg;
  bad.max_iter = 0;
  CHECK_THROWS(fit(d, y, slab, hp, bad));
}

TEST_CASE("max_iter caps the sweep count and reports non-convergence") {
  Rng rng(6);
  const GroupedDesign raw = random_design(rng, 30, 6, 2);
  Vec y = random_response(rng, 30);
  auto [d, yc, info] = standardize(raw, y);
  SlabSpec slab = SlabSpec::gaussian();
  Hyperparams hp;
  FitConfig cfg;
  cfg.max_iter = 1;
  cfg.eps_H = 1e-12;
  cfg.eps_sigma = 1e-12;
  const FitResult fr = fit(d, yc, slab, hp, cfg);
  CHECK(fr.iterations == 1);
  CHECK_FALSE(fr.converged);
}
