#pragma once

#include "gvssb/preprocess.hpp"
#include "gvssb/types.hpp"

#include <array>
#include <string>
#include <vector>

namespace gvssb {

/// Everything needed to rebuild the per-covariate basis expansion at
/// prediction time: spline layout plus the centering/scaling applied to
/// each expanded column.
struct BasisInfo {
  int d = 0;       ///< basis functions per covariate
  int degree = 0;  ///< effective spline degree, min(requested, d-1)
  std::vector<Vec> knots;                      ///< interior knots per covariate
  std::vector<std::array<double, 2>> boundary; ///< training [min, max] per covariate
  std::vector<Vec> centering_offsets;          ///< length-d column means
  std::vector<Vec> col_scales;                 ///< length-d norms / sqrt(n)
  std::vector<std::string> names;              ///< group name per covariate
};

/// Clamped B-spline basis on [lo, hi] with the given interior knots,
/// evaluated by the Cox-de Boor recursion. Rows sum to 1. Inputs are
/// clamped to [lo, hi]; NaN is an error. degree is reduced to d-1 when
/// d < degree + 1.
Mat bspline_basis(const Vec& x, int d, int degree, const Vec& interior_knots,
                  double lo, double hi);

/// Quantile positions for the d - degree - 1 interior knots of one covariate.
Vec quantile_knots(const Vec& x, int d, int degree);

/// Expands every covariate into d spline columns (quantile interior knots),
/// centers each column and rescales it to norm sqrt(n). Returns one group
/// per covariate. Throws naming the covariate when it has fewer than d
/// distinct values.
std::pair<GroupedDesign, BasisInfo> expand_additive(const Mat& X, int d, int degree = 3);

/// y_mean + sum_j gamma_j * basis_j(X_new) * mu_j with inputs clamped to the
/// training boundary. std supplies the stored y mean; when its column
/// transform matches the expanded design it is composed in as well.
Vec predict_additive(const FitResult& fit, const BasisInfo& info,
                     const StandardizationInfo& std_info, const Mat& X_new);

}  // namespace gvssb
