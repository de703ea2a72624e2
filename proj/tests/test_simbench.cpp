#include <doctest.h>

#include "gvssb/simbench.hpp"

#include <cmath>
#include <numbers>

using namespace gvssb;

namespace {

double column_corr(const Mat& X, Eigen::Index a, Eigen::Index b) {
  const Vec xa = X.col(a).array() - X.col(a).mean();
  const Vec xb = X.col(b).array() - X.col(b).mean();
  return xa.dot(xb) / std::sqrt(xa.squaredNorm() * xb.squaredNorm());
}

}  // namespace

TEST_CASE("linear generator hits the target block correlations") {
  SimScenario sc;
  sc.n = 4000;
  sc.G = 4;
  sc.p_i = 3;
  sc.k = 2;
  sc.within_rho = 0.6;
  sc.between_rho = 0.2;
  sc.snr = 2.0;
  sc.seed = 31;
  const LinearData data = gen_linear(sc);

  CHECK(data.X.rows() == 4000);
  CHECK(data.X.cols() == 12);
  CHECK(std::abs(column_corr(data.X, 0, 1) - 0.6) < 0.05);
  CHECK(std::abs(column_corr(data.X, 3, 5) - 0.6) < 0.05);
  CHECK(std::abs(column_corr(data.X, 0, 3) - 0.2) < 0.06);
  CHECK(std::abs(data.X.col(0).mean()) < 0.1);
  CHECK(data.X.col(0).squaredNorm() / 4000.0 == doctest::Approx(1.0).epsilon(0.1));
}

TEST_CASE("linear generator noise variance follows the snr definition") {
  SimScenario sc;
  sc.n = 300;
  sc.G = 10;
  sc.p_i = 2;
  sc.k = 4;
  sc.snr = 2.5;
  sc.seed = 7;
  const LinearData data = gen_linear(sc);
  const Vec f = data.X * data.theta_star;
  const double var = (f.array() - f.mean()).square().sum() / 300.0;
  CHECK(data.sigma_star_sq == doctest::Approx(var / 2.5).epsilon(1e-12));

  // support has k sorted entries and theta is zero off support
  REQUIRE(data.support.size() == 4);
  CHECK(std::is_sorted(data.support.begin(), data.support.end()));
  for (Eigen::Index g = 0; g < sc.G; ++g) {
    const bool active = std::find(data.support.begin(), data.support.end(), g) !=
                        data.support.end();
    const double norm = data.theta_star.segment(g * 2, 2).norm();
    CHECK((active ? norm > 0.0 : norm == 0.0));
  }
  CHECK(data.labels[0] == "g1");
  CHECK(data.labels[3] == "g2");
}

TEST_CASE("linear generator is deterministic in the seed") {
  SimScenario sc;
  sc.n = 50;
  sc.G = 6;
  sc.p_i = 2;
  sc.k = 2;
  sc.seed = 12;
  const LinearData a = gen_linear(sc);
  const LinearData b = gen_linear(sc);
  CHECK((a.X - b.X).cwiseAbs().maxCoeff() == 0.0);
  CHECK((a.y - b.y).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.support == b.support);
  sc.seed = 13;
  const LinearData c = gen_linear(sc);
  CHECK((a.X - c.X).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("linear generator dense path handles negative between-correlation") {
  SimScenario sc;
  sc.n = 3000;
  sc.G = 3;
  sc.p_i = 2;
  sc.k = 1;
  sc.within_rho = 0.3;
  sc.between_rho = -0.05;
  sc.seed = 4;
  const LinearData data = gen_linear(sc);
  CHECK(std::abs(column_corr(data.X, 0, 1) - 0.3) < 0.06);
  CHECK(std::abs(column_corr(data.X, 0, 2) + 0.05) < 0.06);
}

TEST_CASE("scenario validation rejects impossible settings") {
  SimScenario sc;
  sc.k = sc.G + 1;
  CHECK_THROWS(sc.validate());
  sc = SimScenario{};
  sc.snr = 0.0;
  CHECK_THROWS(sc.validate());
  sc = SimScenario{};
  sc.within_rho = 1.0;
  CHECK_THROWS(sc.validate());
}

TEST_CASE("coefficient law parsing round-trips") {
  for (const auto* name : {"uniform", "laplace", "gaussian", "gaussian-mixture", "t"})
    CHECK(to_string(parse_coef_law(name)) == name);
  CHECK(parse_coef_law("student-t") == CoefLaw::StudentT);
  CHECK_THROWS(parse_coef_law("beta"));
}

TEST_CASE("additive component functions match their formulas") {
  CHECK(additive_signal(1, 4, 1.0) == doctest::Approx(3.0));
  CHECK(additive_signal(1, 1, std::numbers::pi / 2.0) == doctest::Approx(5.0));
  CHECK(additive_signal(1, 2, 0.5) == doctest::Approx(2.0 * (0.25 - 0.5)));
  CHECK(additive_signal(1, 3, 0.0) == doctest::Approx(1.0));
  CHECK(additive_signal(2, 1, 0.2) == doctest::Approx(1.0));
  CHECK(additive_signal(2, 2, 0.5) == doctest::Approx(0.0));
  CHECK(additive_signal(2, 3, 0.25) == doctest::Approx(4.0));  // sin = 1 there
  CHECK(additive_signal(2, 4, 0.0) == doctest::Approx(6.0 * (0.2 + 0.4)));
  CHECK_THROWS(additive_signal(3, 1, 0.0));
  CHECK_THROWS(additive_signal(1, 5, 0.0));
}

TEST_CASE("additive example 1 covariates follow the autoregression") {
  AdditiveParams params;
  params.n = 5000;
  params.p = 6;
  params.rho = 0.5;
  params.seed = 9;
  const AdditiveData data = gen_additive(1, params);
  CHECK(std::abs(column_corr(data.X, 0, 1) - 0.5) < 0.05);
  CHECK(std::abs(column_corr(data.X, 0, 2) - 0.25) < 0.05);
  CHECK(data.sigma_star_sq == doctest::Approx(1.0));  // no snr given

  params.rho = 0.0;
  const AdditiveData indep = gen_additive(1, params);
  CHECK(std::abs(column_corr(indep.X, 0, 1)) < 0.05);
  CHECK(data.truth == std::vector<Eigen::Index>{0, 1, 2, 3});
}

TEST_CASE("additive example 2 covariates share the mixing correlation") {
  AdditiveParams params;
  params.n = 5000;
  params.p = 5;
  params.t = 1.0;
  params.snr = 0.5;
  params.seed = 21;
  const AdditiveData data = gen_additive(2, params);
  // corr = t^2 / (1 + t^2) = 1/2 at t = 1
  CHECK(std::abs(column_corr(data.X, 0, 4) - 0.5) < 0.05);
  CHECK(data.X.minCoeff() >= 0.0);
  CHECK(data.X.maxCoeff() <= 1.0);

  // sigma follows the snr rule
  Vec f(data.X.rows());
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    f[i] = 0.0;
    for (int j = 1; j <= 4; ++j) f[i] += additive_signal(2, j, data.X(i, j - 1));
  }
  const double var = (f.array() - f.mean()).square().sum() / static_cast<double>(f.size());
  CHECK(data.sigma_star_sq == doctest::Approx(var / 0.5).epsilon(1e-12));
}

TEST_CASE("confusion counts partition the groups") {
  const std::vector<Eigen::Index> sel = {0, 1, 5};
  const std::vector<Eigen::Index> tru = {0, 1, 2, 3, 4};
  const ConfusionCounts c = confusion(sel, tru, 10);
  CHECK(c.tp == 2);
  CHECK(c.fp == 1);
  CHECK(c.fn == 3);
  CHECK(c.tn == 4);
  CHECK(c.tp + c.fp + c.fn + c.tn == 10);
  CHECK_THROWS(confusion({10}, tru, 10));
  CHECK_THROWS(confusion(sel, {-1}, 10));
}

TEST_CASE("selection metrics on a worked example") {
  const SelectionMetrics m = selection_metrics({0, 1, 5}, {0, 1, 2, 3, 4}, 10);
  CHECK(m.precision == doctest::Approx(2.0 / 3.0));
  CHECK(m.recall == doctest::Approx(0.4));
  CHECK(m.mcc == doctest::Approx(5.0 / std::sqrt(525.0)));

  const SelectionMetrics empty = selection_metrics({}, {0}, 5);
  CHECK(empty.precision == 0.0);
  CHECK(empty.recall == 0.0);
  CHECK(empty.mcc == 0.0);

  const SelectionMetrics perfect = selection_metrics({2, 3}, {2, 3}, 6);
  CHECK(perfect.precision == 1.0);
  CHECK(perfect.recall == 1.0);
  CHECK(perfect.mcc == doctest::Approx(1.0));
}

TEST_CASE("estimation metrics rescale coefficients and floor the log") {
  Mat X(6, 2);
  X << 1, 0, 0, 1, 1, 1, -1, 0, 0, -1, 1, -1;
  const GroupedDesign d = make_grouped_design(X, {"a", "a"});

  FitResult fr;
  fr.state.gamma = Vec::Constant(1, 0.8);
  fr.state.mu = {Vec(2)};
  fr.state.mu[0] << 1.0, 2.0;
  fr.state.sigma_mat = {Mat::Identity(2, 2)};
  fr.sigma_hat_sq = 2.0;

  StandardizationInfo info;
  info.y_mean = 3.0;
  info.col_means = Vec::Zero(2);
  info.col_scales = Vec(2);
  info.col_scales << 2.0, 4.0;

  Vec theta_star(2);
  theta_star << 0.4, 0.4;  // exactly gamma * mu / scale
  const EstimationMetrics m = estimation_metrics(fr, d, info, theta_star, 1.6);
  CHECK(m.log_mse == -745.0);
  CHECK(m.sigma_rel_err == doctest::Approx(0.25));
  CHECK_FALSE(m.pred_err.has_value());

  // prediction path applies the intercept
  Mat X_test = Mat::Zero(3, 2);
  Vec y_test = Vec::Constant(3, 3.0);
  const EstimationMetrics with_pred =
      estimation_metrics(fr, d, info, theta_star, 1.6, &X_test, &y_test);
  REQUIRE(with_pred.pred_err.has_value());
  CHECK(*with_pred.pred_err == doctest::Approx(0.0));

  Vec wrong = Vec::Zero(3);
  CHECK_THROWS(estimation_metrics(fr, d, info, wrong, 1.6));
}

TEST_CASE("linear benchmark rows are scheduling-independent and seeded") {
  SimScenario sc;
  sc.n = 60;
  sc.G = 12;
  sc.p_i = 2;
  sc.k = 3;
  sc.snr = 3.0;
  sc.seed = 5;
  SlabSpec slab = SlabSpec::gaussian();
  Hyperparams hp;
  FitConfig cfg;
  cfg.max_iter = 60;

  const auto serial = run_linear_benchmark(sc, slab, hp, cfg, 4, 1);
  const auto parallel = run_linear_benchmark(sc, slab, hp, cfg, 4, 3);
  REQUIRE(serial.size() == 4);
  REQUIRE(parallel.size() == 4);
  for (int r = 0; r < 4; ++r) {
    CHECK(serial[r].rep == r);
    CHECK(serial[r].sel.mcc == parallel[r].sel.mcc);
    CHECK(serial[r].est.log_mse == parallel[r].est.log_mse);
    CHECK(serial[r].iterations == parallel[r].iterations);
  }

  const auto header = linear_csv_header();
  const auto rows = linear_csv_rows(sc, serial);
  REQUIRE(rows.size() == 6);  // 4 reps + mean + se
  for (const auto& row : rows) CHECK(row.size() == header.size());
  CHECK(rows[4][0] == "mean");
  CHECK(rows[5][0] == "se");
  CHECK(rows[5][1] == "");  // scenario cells blank on the spread row

  // identical configuration => identical CSV cells
  const auto rows2 = linear_csv_rows(sc, run_linear_benchmark(sc, slab, hp, cfg, 4, 2));
  CHECK(rows == rows2);
}

TEST_CASE("additive benchmark runs end to end on a small instance") {
  AdditiveParams params;
  params.n = 90;
  params.p = 12;
  params.t = 0.5;
  params.seed = 3;
  SlabSpec slab = SlabSpec::laplacian();
  Hyperparams hp;
  FitConfig cfg;
  cfg.max_iter = 100;

  const auto rows = run_additive_benchmark(2, params, 4, slab, hp, cfg, 2, 40, 2);
  REQUIRE(rows.size() == 2);
  for (const auto& r : rows) {
    CHECK(r.sel.precision >= 0.0);
    CHECK(r.sel.precision <= 1.0);
    CHECK(r.pred_err > 0.0);
    CHECK(r.null_err > 0.0);
    CHECK(r.pred_err < r.null_err);  // the four signal components are strong
  }

  const auto csv = additive_csv_rows(2, params, 4, rows);
  REQUIRE(csv.size() == 4);
  for (const auto& row : csv) CHECK(row.size() == additive_csv_header().size());
  CHECK(csv[2][0] == "mean");
  CHECK(csv[3][6] == "");  // snr cell empty when the noise sd is fixed
}
