#include "gvssb/types.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace gvssb {

Mat GroupedDesign::assemble() const {
  Mat X(n, total_cols());
  for (Eigen::Index i = 0; i < G; ++i)
    for (Eigen::Index c = 0; c < blocks[i].cols(); ++c)
      X.col(col_indices[i][c]) = blocks[i].col(c);
  return X;
}

Vec GroupedDesign::scatter_to_columns(const std::vector<Vec>& per_block) const {
  if (static_cast<Eigen::Index>(per_block.size()) != G)
    throw std::invalid_argument("scatter_to_columns: expected one vector per group");
  Vec out = Vec::Zero(total_cols());
  for (Eigen::Index i = 0; i < G; ++i) {
    if (per_block[i].size() != blocks[i].cols())
      throw std::invalid_argument("scatter_to_columns: size mismatch in group " +
                                  group_names[i]);
    for (Eigen::Index c = 0; c < blocks[i].cols(); ++c)
      out[col_indices[i][c]] = per_block[i][c];
  }
  return out;
}

GroupedDesign make_grouped_design(const Mat& X,
                                  const std::vector<std::string>& group_labels,
                                  bool compute_op_norms) {
  if (X.cols() == 0) throw std::invalid_argument("make_grouped_design: X has no columns");
  if (X.rows() < 2) throw std::invalid_argument("make_grouped_design: need at least 2 rows");
  if (static_cast<Eigen::Index>(group_labels.size()) != X.cols())
    throw std::invalid_argument("make_grouped_design: one label per column required, got " +
                                std::to_string(group_labels.size()) + " labels for " +
                                std::to_string(X.cols()) + " columns");

  GroupedDesign d;
  d.n = X.rows();
  std::unordered_map<std::string, Eigen::Index> index_of;
  std::vector<std::vector<Eigen::Index>> cols;
  for (Eigen::Index c = 0; c < X.cols(); ++c) {
    const auto& lab = group_labels[c];
    auto it = index_of.find(lab);
    if (it == index_of.end()) {
      index_of.emplace(lab, static_cast<Eigen::Index>(cols.size()));
      d.group_names.push_back(lab);
      cols.emplace_back();
      it = index_of.find(lab);
    }
    cols[it->second].push_back(c);
  }
  d.G = static_cast<Eigen::Index>(cols.size());
  d.blocks.reserve(d.G);
  d.grams.reserve(d.G);
  d.col_indices = std::move(cols);
  for (Eigen::Index i = 0; i < d.G; ++i) {
    Mat B(d.n, static_cast<Eigen::Index>(d.col_indices[i].size()));
    for (Eigen::Index c = 0; c < B.cols(); ++c) B.col(c) = X.col(d.col_indices[i][c]);
    d.grams.push_back(B.transpose() * B);
    d.blocks.push_back(std::move(B));
  }
  if (compute_op_norms) {
    Vec nm(d.G);
    for (Eigen::Index i = 0; i < d.G; ++i) {
      Eigen::SelfAdjointEigenSolver<Mat> es(d.grams[i], Eigen::EigenvaluesOnly);
      nm[i] = es.eigenvalues().maxCoeff();
    }
    d.op_norm_sq = std::move(nm);
  }
  return d;
}

void SlabSpec::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("SlabSpec: lambda must be positive and finite");
  if (family == SlabFamily::StudentT && (!(nu > 0.0) || !std::isfinite(nu)))
    throw std::invalid_argument("SlabSpec: nu must be positive and finite");
}

std::string to_string(SlabFamily f) {
  switch (f) {
    case SlabFamily::Gaussian: return "gaussian";
    case SlabFamily::Laplacian: return "laplacian";
    case SlabFamily::StudentT: return "t";
  }
  return "?";
}

SlabFamily parse_slab_family(const std::string& name) {
  if (name == "gaussian") return SlabFamily::Gaussian;
  if (name == "laplacian") return SlabFamily::Laplacian;
  if (name == "t" || name == "student-t") return SlabFamily::StudentT;
  if (name == "cauchy") return SlabFamily::StudentT;
  throw std::invalid_argument("unknown slab family: " + name);
}

void Hyperparams::validate() const {
  if (!(lambda > 0.0) || !std::isfinite(lambda))
    throw std::invalid_argument("Hyperparams: lambda must be positive and finite");
  if (!(w > 0.0 && w < 1.0))
    throw std::invalid_argument("Hyperparams: w must lie strictly in (0, 1)");
  if (alpha_sigma < 0.0 || beta_sigma < 0.0)
    throw std::invalid_argument("Hyperparams: alpha, beta must be nonnegative");
}

void FitConfig::validate() const {
  if (!(eps_H > 0.0) || !(eps_sigma > 0.0))
    throw std::invalid_argument("FitConfig: tolerances must be positive");
  if (max_iter < 1) throw std::invalid_argument("FitConfig: max_iter must be at least 1");
  if (!(selection_threshold >= 0.0 && selection_threshold <= 1.0))
    throw std::invalid_argument("FitConfig: selection_threshold must lie in [0, 1]");
  if (init.folds < 2) throw std::invalid_argument("FitConfig: need at least 2 CV folds");
  if (fixed_sigma_sq && !(*fixed_sigma_sq > 0.0))
    throw std::invalid_argument("FitConfig: fixed_sigma_sq must be positive");
}

StateDiagnostics validate_state(const VariationalState& state,
                                const GroupedDesign& design, const Vec& y,
                                const Hyperparams& hyper) {
  StateDiagnostics diag;
  Vec r = y;
  for (Eigen::Index i = 0; i < design.G; ++i)
    r.noalias() -= state.gamma[i] * (design.blocks[i] * state.mu[i]);
  diag.residual_drift = (state.residual - r).cwiseAbs().maxCoeff();

  double min_eig = std::numeric_limits<double>::infinity();
  for (const auto& S : state.sigma_mat) {
    Eigen::SelfAdjointEigenSolver<Mat> es(S, Eigen::EigenvaluesOnly);
    min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
  }
  diag.min_sigma_eigenvalue = min_eig;

  for (Eigen::Index i = 0; i < state.gamma.size(); ++i)
    if (!(state.gamma[i] >= 0.0 && state.gamma[i] <= 1.0))
      diag.gamma_violations.push_back(i);

  const double expected =
      (state.v / 2.0 + hyper.beta_sigma) / (static_cast<double>(design.n) / 2.0 + hyper.alpha_sigma);
  diag.sigma_tilde_mismatch = std::abs(state.sigma_tilde_sq - expected);
  return diag;
}

}  // namespace gvssb
