#include "gvssb/simbench.hpp"

#include "gvssb/csv.hpp"
#include "gvssb/rng.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numbers>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace gvssb {

namespace {

// splitmix64 finalizer; decouples the per-replication data and fit streams.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t idx) {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (idx + 1);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double draw_coef(Rng& rng, const CoefSpec& c) {
  switch (c.law) {
    case CoefLaw::Uniform: return rng.uniform(c.a, c.b);
    case CoefLaw::Laplace: return rng.laplace(c.scale);
    case CoefLaw::Gaussian: return rng.normal(0.0, c.scale);
    case CoefLaw::GaussianMixture: {
      const double center = rng.uniform() < 0.5 ? -1.0 : 1.0;
      return rng.normal(center, 0.5);
    }
    case CoefLaw::StudentT: return rng.student_t(c.df);
  }
  throw std::logic_error("draw_coef: unreachable");
}

double empirical_var(const Vec& f) {
  const double mean = f.mean();
  return (f.array() - mean).square().sum() / static_cast<double>(f.size());
}

// Worker pool over replications; results land at their own index so the
// output order never depends on scheduling.
template <typename Fn>
void parallel_reps(int reps, int jobs, Fn&& body) {
  jobs = std::max(1, std::min(jobs, reps));
  if (jobs == 1) {
    for (int r = 0; r < reps; ++r) body(r);
    return;
  }
  std::atomic<int> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (;;) {
      const int r = next.fetch_add(1);
      if (r >= reps) return;
      try {
        body(r);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(jobs));
  for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace

CoefLaw parse_coef_law(const std::string& name) {
  if (name == "uniform") return CoefLaw::Uniform;
  if (name == "laplace") return CoefLaw::Laplace;
  if (name == "gaussian") return CoefLaw::Gaussian;
  if (name == "gaussian-mixture") return CoefLaw::GaussianMixture;
  if (name == "t" || name == "student-t") return CoefLaw::StudentT;
  throw std::invalid_argument("unknown coefficient law: " + name);
}

std::string to_string(CoefLaw law) {
  switch (law) {
    case CoefLaw::Uniform: return "uniform";
    case CoefLaw::Laplace: return "laplace";
    case CoefLaw::Gaussian: return "gaussian";
    case CoefLaw::GaussianMixture: return "gaussian-mixture";
    case CoefLaw::StudentT: return "t";
  }
  return "?";
}

void SimScenario::validate() const {
  if (n < 2) throw std::invalid_argument("SimScenario: need n >= 2");
  if (G < 1 || p_i < 1) throw std::invalid_argument("SimScenario: need G >= 1, p_i >= 1");
  if (k < 0 || k > G) throw std::invalid_argument("SimScenario: need 0 <= k <= G");
  if (!(snr > 0.0)) throw std::invalid_argument("SimScenario: snr must be positive");
  if (!(within_rho < 1.0) || !(between_rho < 1.0))
    throw std::invalid_argument("SimScenario: correlations must be below 1");
}

LinearData gen_linear(const SimScenario& sc) {
  sc.validate();
  Rng rng(sc.seed);
  const Eigen::Index n = sc.n, G = sc.G, pi = sc.p_i, p = sc.p();

  LinearData out;
  std::vector<Eigen::Index> idx(static_cast<size_t>(G));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  rng.shuffle(idx);
  out.support.assign(idx.begin(), idx.begin() + sc.k);
  std::sort(out.support.begin(), out.support.end());

  out.theta_star = Vec::Zero(p);
  for (Eigen::Index g : out.support)
    for (Eigen::Index c = 0; c < pi; ++c) out.theta_star[g * pi + c] = draw_coef(rng, sc.coef);

  out.X.resize(n, p);
  const double w = sc.within_rho, b = sc.between_rho;
  if (b >= 0.0 && w >= b && w < 1.0) {
    // three-level decomposition: shared factor + group factor + noise
    const double sb = std::sqrt(b), swb = std::sqrt(w - b), s1w = std::sqrt(1.0 - w);
    Vec zg(G);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double z0 = rng.normal();
      for (Eigen::Index g = 0; g < G; ++g) zg[g] = rng.normal();
      for (Eigen::Index j = 0; j < p; ++j)
        out.X(i, j) = sb * z0 + swb * zg[j / pi] + s1w * rng.normal();
    }
  } else {
    Mat cov(p, p);
    for (Eigen::Index r = 0; r < p; ++r)
      for (Eigen::Index c = 0; c < p; ++c)
        cov(r, c) = r == c ? 1.0 : (r / pi == c / pi ? w : b);
    Eigen::LLT<Mat> llt(cov);
    if (llt.info() != Eigen::Success)
      throw std::invalid_argument("gen_linear: covariance is not positive definite");
    const Mat L = llt.matrixL();
    Vec z(p);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < p; ++j) z[j] = rng.normal();
      out.X.row(i) = (L * z).transpose();
    }
  }

  const Vec f = out.X * out.theta_star;
  const double var = empirical_var(f);
  if (!(var > 0.0)) throw std::runtime_error("gen_linear: zero signal variance");
  out.sigma_star_sq = var / sc.snr;
  const double sd = std::sqrt(out.sigma_star_sq);
  out.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) out.y[i] = f[i] + sd * rng.normal();

  out.labels.resize(static_cast<size_t>(p));
  for (Eigen::Index j = 0; j < p; ++j)
    out.labels[static_cast<size_t>(j)] = "g" + std::to_string(j / pi + 1);
  return out;
}

double additive_signal(int example, int j, double x) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (example == 1) {
    switch (j) {
      case 1: return 5.0 * std::sin(x);
      case 2: return 2.0 * (x * x - 0.5);
      case 3: return std::exp(x);
      case 4: return 3.0 * x;
    }
  } else if (example == 2) {
    switch (j) {
      case 1: return 5.0 * x;
      case 2: return 3.0 * (2.0 * x - 1.0) * (2.0 * x - 1.0);
      case 3: {
        const double s = std::sin(two_pi * x);
        return 4.0 * s / (2.0 - s);
      }
      case 4: {
        const double s = std::sin(two_pi * x), c = std::cos(two_pi * x);
        return 6.0 * (0.1 * s + 0.2 * c + 0.3 * s * s + 0.4 * c * c * c + 0.5 * s * s * s);
      }
    }
  }
  throw std::invalid_argument("additive_signal: example must be 1 or 2, j in 1..4");
}

AdditiveData gen_additive(int example, const AdditiveParams& params) {
  if (example != 1 && example != 2)
    throw std::invalid_argument("gen_additive: example must be 1 or 2");
  if (params.n < 2 || params.p < 4)
    throw std::invalid_argument("gen_additive: need n >= 2 and p >= 4");
  const Eigen::Index n = params.n, p = params.p;
  Rng rng(params.seed);

  AdditiveData out;
  out.X.resize(n, p);
  if (example == 1) {
    const double rho = params.rho;
    if (!(std::abs(rho) < 1.0))
      throw std::invalid_argument("gen_additive: |rho| must be below 1");
    const double s = std::sqrt(1.0 - rho * rho);
    for (Eigen::Index i = 0; i < n; ++i) {
      out.X(i, 0) = rng.normal();
      for (Eigen::Index j = 1; j < p; ++j) out.X(i, j) = rho * out.X(i, j - 1) + s * rng.normal();
    }
  } else {
    const double t = params.t;
    if (t < 0.0) throw std::invalid_argument("gen_additive: t must be nonnegative");
    for (Eigen::Index i = 0; i < n; ++i) {
      const double u = rng.uniform();
      for (Eigen::Index j = 0; j < p; ++j) out.X(i, j) = (rng.uniform() + t * u) / (1.0 + t);
    }
  }

  Vec f(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    f[i] = 0.0;
    for (int j = 1; j <= 4; ++j) f[i] += additive_signal(example, j, out.X(i, j - 1));
  }

  if (params.snr) {
    if (!(*params.snr > 0.0)) throw std::invalid_argument("gen_additive: snr must be positive");
    const double var = empirical_var(f);
    if (!(var > 0.0)) throw std::runtime_error("gen_additive: zero signal variance");
    out.sigma_star_sq = var / *params.snr;
  } else {
    out.sigma_star_sq = 1.0;
  }
  const double sd = std::sqrt(out.sigma_star_sq);
  out.y.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) out.y[i] = f[i] + sd * rng.normal();
  out.truth = {0, 1, 2, 3};
  return out;
}

ConfusionCounts confusion(const std::vector<Eigen::Index>& selected,
                          const std::vector<Eigen::Index>& truth, Eigen::Index G) {
  std::vector<char> sel(static_cast<size_t>(G), 0), tru(static_cast<size_t>(G), 0);
  for (Eigen::Index i : selected) {
    if (i < 0 || i >= G) throw std::invalid_argument("confusion: selected index out of range");
    sel[static_cast<size_t>(i)] = 1;
  }
  for (Eigen::Index i : truth) {
    if (i < 0 || i >= G) throw std::invalid_argument("confusion: truth index out of range");
    tru[static_cast<size_t>(i)] = 1;
  }
  ConfusionCounts c;
  for (Eigen::Index i = 0; i < G; ++i) {
    const bool s = sel[static_cast<size_t>(i)], t = tru[static_cast<size_t>(i)];
    if (s && t) ++c.tp;
    else if (s && !t) ++c.fp;
    else if (!s && t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

SelectionMetrics selection_metrics(const std::vector<Eigen::Index>& selected,
                                   const std::vector<Eigen::Index>& truth, Eigen::Index G) {
  const ConfusionCounts c = confusion(selected, truth, G);
  SelectionMetrics m;
  const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
  const double tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
  m.precision = tp + fp > 0.0 ? tp / (tp + fp) : 0.0;
  m.recall = tp + fn > 0.0 ? tp / (tp + fn) : 0.0;
  const double den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
  m.mcc = den > 0.0 ? (tp * tn - fp * fn) / std::sqrt(den) : 0.0;
  return m;
}

EstimationMetrics estimation_metrics(const FitResult& fit, const GroupedDesign& design,
                                     const StandardizationInfo& std_info,
                                     const Vec& theta_star, double sigma_star_sq,
                                     const Mat* X_test, const Vec* y_test) {
  const Eigen::Index p = design.total_cols();
  if (theta_star.size() != p)
    throw std::invalid_argument("estimation_metrics: theta_star length mismatch");

  Vec theta_hat = Vec::Zero(p);
  for (Eigen::Index i = 0; i < design.G; ++i)
    for (Eigen::Index c = 0; c < design.blocks[i].cols(); ++c) {
      const Eigen::Index orig = design.col_indices[i][c];
      theta_hat[orig] = fit.state.gamma[i] * fit.state.mu[i][c] / std_info.col_scales[orig];
    }

  EstimationMetrics m;
  const double mse = (theta_hat - theta_star).squaredNorm() / static_cast<double>(p);
  m.log_mse = mse > 0.0 ? std::max(std::log(mse), -745.0) : -745.0;
  m.sigma_rel_err = std::abs(fit.sigma_hat_sq / sigma_star_sq - 1.0);

  if (X_test && y_test) {
    if (X_test->cols() != p || X_test->rows() != y_test->size())
      throw std::invalid_argument("estimation_metrics: test data dimension mismatch");
    const double intercept = std_info.y_mean - std_info.col_means.dot(theta_hat);
    const Vec yhat = (*X_test * theta_hat).array() + intercept;
    m.pred_err = (*y_test - yhat).squaredNorm() / static_cast<double>(y_test->size());
  }
  return m;
}

std::vector<LinearRepMetrics> run_linear_benchmark(const SimScenario& sc,
                                                   const SlabSpec& slab,
                                                   const Hyperparams& hyper,
                                                   const FitConfig& config, int reps,
                                                   int jobs) {
  if (reps < 1) throw std::invalid_argument("run_linear_benchmark: need reps >= 1");
  std::vector<LinearRepMetrics> rows(static_cast<size_t>(reps));
  parallel_reps(reps, jobs, [&](int r) {
    SimScenario local = sc;
    local.seed = derive_seed(sc.seed, 2 * static_cast<std::uint64_t>(r));
    const LinearData data = gen_linear(local);
    const GroupedDesign raw = make_grouped_design(data.X, data.labels);
    auto [design, yc, info] = standardize(raw, data.y);
    FitConfig cfg = config;
    cfg.rng_seed = derive_seed(sc.seed, 2 * static_cast<std::uint64_t>(r) + 1);

    const auto t0 = std::chrono::steady_clock::now();
    const FitResult fit_result = fit(design, yc, slab, hyper, cfg);
    const auto t1 = std::chrono::steady_clock::now();

    auto& row = rows[static_cast<size_t>(r)];
    row.rep = r;
    row.sel = selection_metrics(fit_result.selected, data.support, sc.G);
    row.est = estimation_metrics(fit_result, design, info, data.theta_star, data.sigma_star_sq);
    row.iterations = fit_result.iterations;
    row.converged = fit_result.converged;
    row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  });
  return rows;
}

std::vector<AdditiveRepMetrics> run_additive_benchmark(int example,
                                                       const AdditiveParams& params, int d,
                                                       const SlabSpec& slab,
                                                       const Hyperparams& hyper,
                                                       const FitConfig& config, int reps,
                                                       Eigen::Index n_test, int jobs) {
  if (reps < 1) throw std::invalid_argument("run_additive_benchmark: need reps >= 1");
  if (n_test < 1) throw std::invalid_argument("run_additive_benchmark: need n_test >= 1");
  std::vector<AdditiveRepMetrics> rows(static_cast<size_t>(reps));
  parallel_reps(reps, jobs, [&](int r) {
    AdditiveParams local = params;
    local.seed = derive_seed(params.seed, 2 * static_cast<std::uint64_t>(r));
    local.n = params.n + n_test;
    const AdditiveData data = gen_additive(example, local);
    const Mat X_train = data.X.topRows(params.n);
    const Mat X_test = data.X.bottomRows(n_test);
    const Vec y_train = data.y.head(params.n);
    const Vec y_test = data.y.tail(n_test);

    auto [design, info] = expand_additive(X_train, d);
    StandardizationInfo std_info;
    std_info.y_mean = y_train.mean();
    std_info.col_means = Vec::Zero(design.total_cols());
    std_info.col_scales = Vec::Ones(design.total_cols());
    const Vec yc = y_train.array() - std_info.y_mean;

    FitConfig cfg = config;
    cfg.rng_seed = derive_seed(params.seed, 2 * static_cast<std::uint64_t>(r) + 1);

    const auto t0 = std::chrono::steady_clock::now();
    const FitResult fit_result = fit(design, yc, slab, hyper, cfg);
    const auto t1 = std::chrono::steady_clock::now();

    auto& row = rows[static_cast<size_t>(r)];
    row.rep = r;
    row.sel = selection_metrics(fit_result.selected, data.truth, design.G);
    const Vec yhat = predict_additive(fit_result, info, std_info, X_test);
    row.pred_err = (y_test - yhat).squaredNorm() / static_cast<double>(n_test);
    row.null_err =
        (y_test.array() - std_info.y_mean).square().sum() / static_cast<double>(n_test);
    row.iterations = fit_result.iterations;
    row.converged = fit_result.converged;
    row.wall_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  });
  return rows;
}

namespace {

struct Aggregate {
  double mean = 0.0, se = 0.0;
};

Aggregate aggregate(const std::vector<double>& xs) {
  Aggregate a;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) a.mean += x;
  a.mean /= n;
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - a.mean) * (x - a.mean);
    a.se = std::sqrt(ss / (n - 1.0) / n);
  }
  return a;
}

}  // namespace

std::vector<std::string> linear_csv_header() {
  return {"rep", "n", "G", "p_i", "k", "within_rho", "between_rho", "snr", "coef_law",
          "precision", "recall", "mcc", "log_mse", "sigma_rel_err", "iterations",
          "converged"};
}

std::vector<std::vector<std::string>> linear_csv_rows(
    const SimScenario& sc, const std::vector<LinearRepMetrics>& reps) {
  std::vector<std::vector<std::string>> rows;
  const auto scenario_cells = [&]() -> std::vector<std::string> {
    return {format_double(static_cast<double>(sc.n)), format_double(static_cast<double>(sc.G)),
            format_double(static_cast<double>(sc.p_i)), format_double(static_cast<double>(sc.k)),
            format_double(sc.within_rho), format_double(sc.between_rho), format_double(sc.snr),
            to_string(sc.coef.law)};
  };
  std::vector<double> prec, rec, mcc, lmse, srel, iters, conv;
  for (const auto& r : reps) {
    std::vector<std::string> row{std::to_string(r.rep)};
    const auto sc_cells = scenario_cells();
    row.insert(row.end(), sc_cells.begin(), sc_cells.end());
    row.push_back(format_double(r.sel.precision));
    row.push_back(format_double(r.sel.recall));
    row.push_back(format_double(r.sel.mcc));
    row.push_back(format_double(r.est.log_mse));
    row.push_back(format_double(r.est.sigma_rel_err));
    row.push_back(std::to_string(r.iterations));
    row.push_back(r.converged ? "1" : "0");
    rows.push_back(std::move(row));
    prec.push_back(r.sel.precision);
    rec.push_back(r.sel.recall);
    mcc.push_back(r.sel.mcc);
    lmse.push_back(r.est.log_mse);
    srel.push_back(r.est.sigma_rel_err);
    iters.push_back(static_cast<double>(r.iterations));
    conv.push_back(r.converged ? 1.0 : 0.0);
  }
  const auto emit_agg = [&](const std::string& tag, bool means) {
    std::vector<std::string> row{tag};
    if (means) {
      const auto sc_cells = scenario_cells();
      row.insert(row.end(), sc_cells.begin(), sc_cells.end());
    } else {
      row.insert(row.end(), 8, "");
    }
    for (const auto* xs : {&prec, &rec, &mcc, &lmse, &srel, &iters, &conv}) {
      const Aggregate a = aggregate(*xs);
      row.push_back(format_double(means ? a.mean : a.se));
    }
    rows.push_back(std::move(row));
  };
  emit_agg("mean", true);
  emit_agg("se", false);
  return rows;
}

std::vector<std::string> additive_csv_header() {
  return {"rep", "example", "n", "p", "d", "rho_or_t", "snr", "precision", "recall",
          "mcc", "pred_err", "null_err", "iterations", "converged"};
}

std::vector<std::vector<std::string>> additive_csv_rows(
    int example, const AdditiveParams& params, int d,
    const std::vector<AdditiveRepMetrics>& reps) {
  std::vector<std::vector<std::string>> rows;
  const auto scenario_cells = [&]() -> std::vector<std::string> {
    return {std::to_string(example), format_double(static_cast<double>(params.n)),
            format_double(static_cast<double>(params.p)), std::to_string(d),
            format_double(example == 1 ? params.rho : params.t),
            params.snr ? format_double(*params.snr) : std::string("")};
  };
  std::vector<double> prec, rec, mcc, perr, nerr, iters, conv;
  for (const auto& r : reps) {
    std::vector<std::string> row{std::to_string(r.rep)};
    const auto sc_cells = scenario_cells();
    row.insert(row.end(), sc_cells.begin(), sc_cells.end());
    row.push_back(format_double(r.sel.precision));
    row.push_back(format_double(r.sel.recall));
    row.push_back(format_double(r.sel.mcc));
    row.push_back(format_double(r.pred_err));
    row.push_back(format_double(r.null_err));
    row.push_back(std::to_string(r.iterations));
    row.push_back(r.converged ? "1" : "0");
    rows.push_back(std::move(row));
    prec.push_back(r.sel.precision);
    rec.push_back(r.sel.recall);
    mcc.push_back(r.sel.mcc);
    perr.push_back(r.pred_err);
    nerr.push_back(r.null_err);
    iters.push_back(static_cast<double>(r.iterations));
    conv.push_back(r.converged ? 1.0 : 0.0);
  }
  const auto emit_agg = [&](const std::string& tag, bool means) {
    std::vector<std::string> row{tag};
    if (means) {
      const auto sc_cells = scenario_cells();
      row.insert(row.end(), sc_cells.begin(), sc_cells.end());
    } else {
      row.insert(row.end(), 6, "");
    }
    for (const auto* xs : {&prec, &rec, &mcc, &perr, &nerr, &iters, &conv}) {
      const Aggregate a = aggregate(*xs);
      row.push_back(format_double(means ? a.mean : a.se));
    }
    rows.push_back(std::move(row));
  };
  emit_agg("mean", true);
  emit_agg("se", false);
  return rows;
}

}  // namespace gvssb
