#include "gvssb/additive.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace gvssb {

namespace {

// Full clamped knot vector: boundary repeated degree+1 times around the
// interior knots.
std::vector<double> clamped_knots(const Vec& interior, int degree, double lo, double hi) {
  std::vector<double> t;
  t.reserve(interior.size() + 2 * (degree + 1));
  for (int i = 0; i <= degree; ++i) t.push_back(lo);
  for (Eigen::Index i = 0; i < interior.size(); ++i) t.push_back(interior[i]);
  for (int i = 0; i <= degree; ++i) t.push_back(hi);
  return t;
}

// Last span index k with t[k] <= x < t[k+1]; x at the right boundary maps
// into the final nonempty span.
int find_span(const std::vector<double>& t, int degree, int nbasis, double x) {
  const int last = nbasis - 1;  // index of the last basis function
  if (x >= t[static_cast<size_t>(last + 1)]) return last;
  int lo = degree, hi = last + 1;
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    (x < t[static_cast<size_t>(mid)] ? hi : lo) = mid;
  }
  return lo;
}

}  // namespace

Mat bspline_basis(const Vec& x, int d, int degree, const Vec& interior_knots,
                  double lo, double hi) {
  if (d < 2) throw std::invalid_argument("bspline_basis: need at least 2 basis functions");
  if (degree < 1) throw std::invalid_argument("bspline_basis: degree must be at least 1");
  if (!(hi > lo)) throw std::invalid_argument("bspline_basis: empty boundary interval");
  degree = std::min(degree, d - 1);
  if (interior_knots.size() != d - degree - 1)
    throw std::invalid_argument("bspline_basis: expected " + std::to_string(d - degree - 1) +
                                " interior knots, got " + std::to_string(interior_knots.size()));
  for (Eigen::Index i = 1; i < interior_knots.size(); ++i)
    if (interior_knots[i] < interior_knots[i - 1])
      throw std::invalid_argument("bspline_basis: interior knots must be sorted");

  const std::vector<double> t = clamped_knots(interior_knots, degree, lo, hi);
  Mat B = Mat::Zero(x.size(), d);
  std::vector<double> N(static_cast<size_t>(degree) + 1);
  std::vector<double> left(static_cast<size_t>(degree) + 1), right(static_cast<size_t>(degree) + 1);

  for (Eigen::Index r = 0; r < x.size(); ++r) {
    if (std::isnan(x[r])) throw std::invalid_argument("bspline_basis: NaN at row " + std::to_string(r));
    const double xv = std::clamp(x[r], lo, hi);
    const int k = find_span(t, degree, d, xv);
    N[0] = 1.0;
    for (int j = 1; j <= degree; ++j) {
      left[static_cast<size_t>(j)] = xv - t[static_cast<size_t>(k + 1 - j)];
      right[static_cast<size_t>(j)] = t[static_cast<size_t>(k + j)] - xv;
      double saved = 0.0;
      for (int q = 0; q < j; ++q) {
        const double denom = right[static_cast<size_t>(q + 1)] + left[static_cast<size_t>(j - q)];
        const double temp = N[static_cast<size_t>(q)] / denom;
        N[static_cast<size_t>(q)] = saved + right[static_cast<size_t>(q + 1)] * temp;
        saved = left[static_cast<size_t>(j - q)] * temp;
      }
      N[static_cast<size_t>(j)] = saved;
    }
    for (int j = 0; j <= degree; ++j) B(r, k - degree + j) = N[static_cast<size_t>(j)];
  }
  return B;
}

Vec quantile_knots(const Vec& x, int d, int degree) {
  degree = std::min(degree, d - 1);
  const int n_int = d - degree - 1;
  Vec knots(n_int);
  if (n_int == 0) return knots;
  std::vector<double> sorted(x.data(), x.data() + x.size());
  std::sort(sorted.begin(), sorted.end());
  const double m = static_cast<double>(sorted.size() - 1);
  for (int k = 1; k <= n_int; ++k) {
    const double h = m * static_cast<double>(k) / static_cast<double>(n_int + 1);
    const auto i = static_cast<size_t>(std::floor(h));
    const double frac = h - std::floor(h);
    knots[k - 1] = i + 1 < sorted.size() ? sorted[i] + frac * (sorted[i + 1] - sorted[i])
                                         : sorted[i];
  }
  return knots;
}

std::pair<GroupedDesign, BasisInfo> expand_additive(const Mat& X, int d, int degree) {
  if (d < 2) throw std::invalid_argument("expand_additive: need d >= 2");
  if (X.rows() <= d)
    throw std::invalid_argument("expand_additive: need more rows than basis functions");
  const Eigen::Index n = X.rows(), p = X.cols();
  const int deg = std::min(degree, d - 1);
  const double root_n = std::sqrt(static_cast<double>(n));

  BasisInfo info;
  info.d = d;
  info.degree = deg;
  info.knots.resize(p);
  info.boundary.resize(p);
  info.centering_offsets.resize(p);
  info.col_scales.resize(p);
  info.names.resize(p);

  Mat expanded(n, p * d);
  std::vector<std::string> labels(static_cast<size_t>(p * d));
  for (Eigen::Index j = 0; j < p; ++j) {
    const Vec col = X.col(j);
    std::set<double> distinct(col.data(), col.data() + n);
    info.names[j] = "x" + std::to_string(j + 1);
    if (static_cast<int>(distinct.size()) < d)
      throw std::invalid_argument("expand_additive: covariate " + info.names[j] + " has " +
                                  std::to_string(distinct.size()) +
                                  " distinct values, needs at least " + std::to_string(d));
    const double lo = col.minCoeff(), hi = col.maxCoeff();
    info.boundary[j] = {lo, hi};
    info.knots[j] = quantile_knots(col, d, deg);
    Mat B = bspline_basis(col, d, deg, info.knots[j], lo, hi);

    Vec offsets(d), scales(d);
    for (int c = 0; c < d; ++c) {
      offsets[c] = B.col(c).mean();
      Vec centered = B.col(c).array() - offsets[c];
      const double s = centered.norm() / root_n;
      if (!(s > 1e-12))
        throw std::invalid_argument("expand_additive: basis column " + std::to_string(c + 1) +
                                    " of covariate " + info.names[j] + " is constant");
      scales[c] = s;
      expanded.col(j * d + c) = centered / s;
      labels[static_cast<size_t>(j * d + c)] = info.names[j];
    }
    info.centering_offsets[j] = std::move(offsets);
    info.col_scales[j] = std::move(scales);
  }
  return {make_grouped_design(expanded, labels), std::move(info)};
}

Vec predict_additive(const FitResult& fit, const BasisInfo& info,
                     const StandardizationInfo& std_info, const Mat& X_new) {
  const Eigen::Index p = static_cast<Eigen::Index>(info.knots.size());
  if (X_new.cols() != p)
    throw std::invalid_argument("predict_additive: expected " + std::to_string(p) +
                                " covariates, got " + std::to_string(X_new.cols()));
  if (static_cast<Eigen::Index>(fit.state.mu.size()) != p)
    throw std::invalid_argument("predict_additive: fit has " +
                                std::to_string(fit.state.mu.size()) + " groups, expected " +
                                std::to_string(p));
  const bool compose_std = std_info.col_means.size() == p * info.d;

  Vec yhat = Vec::Constant(X_new.rows(), std_info.y_mean);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double g = fit.state.gamma[j];
    if (g == 0.0) continue;
    Mat B = bspline_basis(X_new.col(j), info.d, info.degree, info.knots[j],
                          info.boundary[j][0], info.boundary[j][1]);
    for (int c = 0; c < info.d; ++c) {
      Vec col = (B.col(c).array() - info.centering_offsets[j][c]) / info.col_scales[j][c];
      if (compose_std) {
        const Eigen::Index k = j * info.d + c;
        col = (col.array() - std_info.col_means[k]) / std_info.col_scales[k];
      }
      yhat.noalias() += g * fit.state.mu[j][c] * col;
    }
  }
  return yhat;
}

}  // namespace gvssb
