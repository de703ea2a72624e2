#pragma once

#include "gvssb/types.hpp"

#include <cstdint>
#include <tuple>
#include <vector>

namespace gvssb {

/// Per-column affine transform mapping raw covariates to the fitted scale:
/// standardized column = (x_j - col_means[j]) / col_scales[j], which has
/// mean 0 and norm sqrt(n). Indices follow the original column order.
struct StandardizationInfo {
  double y_mean = 0.0;
  Vec col_means;
  Vec col_scales;
};

/// Centers y and rescales every column to mean 0, norm sqrt(n).
/// Throws naming the column if one is constant.
std::tuple<GroupedDesign, Vec, StandardizationInfo> standardize(const GroupedDesign& raw,
                                                               const Vec& y);

/// 50 logarithmically spaced penalties in [1e-4, 1e4].
std::vector<double> default_ridge_grid();

/// Ridge solution at the penalty minimizing K-fold cross-validated squared
/// prediction error. Folds are contiguous slices of a seeded permutation.
/// Returns coefficients in original column order.
Vec ridge_init(const GroupedDesign& design, const Vec& y, int folds,
               const std::vector<double>& grid, std::uint64_t seed);

}  // namespace gvssb
