#include "gvssb/preprocess.hpp"

#include "gvssb/rng.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gvssb {

std::tuple<GroupedDesign, Vec, StandardizationInfo> standardize(const GroupedDesign& raw,
                                                               const Vec& y) {
  if (y.size() != raw.n)
    throw std::invalid_argument("standardize: y has " + std::to_string(y.size()) +
                                " entries, design has " + std::to_string(raw.n) + " rows");
  const double root_n = std::sqrt(static_cast<double>(raw.n));
  GroupedDesign out = raw;
  StandardizationInfo info;
  info.col_means = Vec::Zero(raw.total_cols());
  info.col_scales = Vec::Ones(raw.total_cols());

  for (Eigen::Index i = 0; i < raw.G; ++i) {
    for (Eigen::Index c = 0; c < raw.blocks[i].cols(); ++c) {
      const Eigen::Index orig = raw.col_indices[i][c];
      const double mean = raw.blocks[i].col(c).mean();
      Vec centered = raw.blocks[i].col(c).array() - mean;
      const double s = centered.norm() / root_n;
      if (!(s > 1e-12 * std::max(1.0, std::abs(mean))))
        throw std::invalid_argument("standardize: constant column " + std::to_string(orig) +
                                    " (group " + raw.group_names[i] + ")");
      out.blocks[i].col(c) = centered / s;
      info.col_means[orig] = mean;
      info.col_scales[orig] = s;
    }
    out.grams[i] = out.blocks[i].transpose() * out.blocks[i];
  }
  if (out.op_norm_sq) {
    for (Eigen::Index i = 0; i < out.G; ++i) {
      Eigen::SelfAdjointEigenSolver<Mat> es(out.grams[i], Eigen::EigenvaluesOnly);
      (*out.op_norm_sq)[i] = es.eigenvalues().maxCoeff();
    }
  }
  info.y_mean = y.mean();
  Vec yc = y.array() - info.y_mean;
  return {std::move(out), std::move(yc), std::move(info)};
}

std::vector<double> default_ridge_grid() {
  std::vector<double> grid(50);
  for (int i = 0; i < 50; ++i) grid[i] = std::pow(10.0, -4.0 + 8.0 * i / 49.0);
  return grid;
}

namespace {

// Ridge paths from one symmetric eigendecomposition: primal (X^T X) when
// p <= rows, dual (X X^T) otherwise. solve(lam) is exact for lam > 0.
struct RidgeSolver {
  bool primal = true;
  Mat basis;  // eigenvectors V (primal) or X^T U (dual)
  Vec evals;
  Vec proj;   // V^T X^T y (primal) or U^T y (dual)

  Vec solve(double lam) const {
    Vec scaled = proj.array() / (evals.array() + lam);
    return basis * scaled;
  }
};

RidgeSolver factor_ridge(const Mat& X, const Vec& y) {
  RidgeSolver s;
  s.primal = X.cols() <= X.rows();
  if (s.primal) {
    Eigen::SelfAdjointEigenSolver<Mat> es(X.transpose() * X);
    s.basis = es.eigenvectors();
    s.evals = es.eigenvalues();
    s.proj = s.basis.transpose() * (X.transpose() * y);
  } else {
    Eigen::SelfAdjointEigenSolver<Mat> es(X * X.transpose());
    s.evals = es.eigenvalues();
    s.proj = es.eigenvectors().transpose() * y;
    s.basis = X.transpose() * es.eigenvectors();
  }
  return s;
}

Mat take_rows(const Mat& X, const std::vector<Eigen::Index>& rows) {
  Mat out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = X.row(rows[r]);
  return out;
}

Vec take(const Vec& y, const std::vector<Eigen::Index>& rows) {
  Vec out(static_cast<Eigen::Index>(rows.size()));
  for (size_t r = 0; r < rows.size(); ++r) out[static_cast<Eigen::Index>(r)] = y[rows[r]];
  return out;
}

}  // namespace

Vec ridge_init(const GroupedDesign& design, const Vec& y, int folds,
               const std::vector<double>& grid, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("ridge_init: need at least 2 folds");
  if (grid.empty()) throw std::invalid_argument("ridge_init: empty penalty grid");
  for (double g : grid)
    if (!(g > 0.0)) throw std::invalid_argument("ridge_init: penalties must be positive");
  if (design.n < folds)
    throw std::invalid_argument("ridge_init: " + std::to_string(design.n) + " rows < " +
                                std::to_string(folds) + " folds");
  if (y.size() != design.n) throw std::invalid_argument("ridge_init: y length mismatch");

  const Mat X = design.assemble();
  const Eigen::Index n = design.n;

  std::vector<Eigen::Index> perm(n);
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  Rng rng(seed);
  rng.shuffle(perm);

  const Eigen::Index base = n / folds, rem = n % folds;
  std::vector<double> cv_err(grid.size(), 0.0);
  Eigen::Index start = 0;
  for (int f = 0; f < folds; ++f) {
    const Eigen::Index len = base + (f < rem ? 1 : 0);
    std::vector<Eigen::Index> test(perm.begin() + start, perm.begin() + start + len);
    std::vector<Eigen::Index> train;
    train.reserve(n - len);
    train.insert(train.end(), perm.begin(), perm.begin() + start);
    train.insert(train.end(), perm.begin() + start + len, perm.end());
    start += len;

    const Mat Xtr = take_rows(X, train), Xte = take_rows(X, test);
    const Vec ytr = take(y, train), yte = take(y, test);
    const RidgeSolver solver = factor_ridge(Xtr, ytr);
    for (size_t g = 0; g < grid.size(); ++g) {
      const Vec mu = solver.solve(grid[g]);
      cv_err[g] += (yte - Xte * mu).squaredNorm();
    }
  }
  const size_t best =
      static_cast<size_t>(std::min_element(cv_err.begin(), cv_err.end()) - cv_err.begin());
  return factor_ridge(X, y).solve(grid[best]);
}

}  // namespace gvssb
