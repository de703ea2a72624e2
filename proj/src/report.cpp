#include "gvssb/report.hpp"

#include <fstream>
#include <stdexcept>

namespace gvssb {

using nlohmann::json;

json make_fit_report(const FitResult& fit, const GroupedDesign& design,
                     const StandardizationInfo& std_info, const SlabSpec& slab,
                     const Hyperparams& hyper, const FitConfig& config,
                     double wall_time_ms) {
  json gamma = json::object();
  json mu = json::object();
  json names = json::array();
  double intercept = std_info.y_mean;
  for (Eigen::Index i = 0; i < design.G; ++i) {
    const std::string& name = design.group_names[i];
    names.push_back(name);
    gamma[name] = fit.state.gamma[i];
    std::vector<double> coefs(static_cast<size_t>(design.blocks[i].cols()));
    for (Eigen::Index c = 0; c < design.blocks[i].cols(); ++c) {
      const Eigen::Index orig = design.col_indices[i][c];
      coefs[static_cast<size_t>(c)] = fit.state.mu[i][c] / std_info.col_scales[orig];
      intercept -= std_info.col_means[orig] * fit.state.gamma[i] * coefs[static_cast<size_t>(c)];
    }
    mu[name] = coefs;
  }

  json selected = json::array();
  for (Eigen::Index i : fit.selected) selected.push_back(design.group_names[i]);

  json hyper_trace = json::array();
  for (const auto& [lam, w] : fit.hyper_trace) hyper_trace.push_back(json::array({lam, w}));

  json config_echo{{"slab", to_string(slab.family)},
                   {"nu", slab.nu},
                   {"lambda0", slab.lambda},
                   {"w0", hyper.w},
                   {"alpha_sigma", hyper.alpha_sigma},
                   {"beta_sigma", hyper.beta_sigma},
                   {"em", config.em_enabled},
                   {"eps_h", config.eps_H},
                   {"eps_sigma", config.eps_sigma},
                   {"max_iter", config.max_iter},
                   {"threshold", config.selection_threshold},
                   {"seed", config.rng_seed}};
  if (config.fixed_sigma_sq) config_echo["fixed_sigma_sq"] = *config.fixed_sigma_sq;

  return json{{"group_names", std::move(names)},
              {"gamma", std::move(gamma)},
              {"mu", std::move(mu)},
              {"sigma2_hat", fit.sigma_hat_sq},
              {"intercept", intercept},
              {"selected", std::move(selected)},
              {"elbo_trace", fit.elbo_trace},
              {"hyper_trace", std::move(hyper_trace)},
              {"iterations", fit.iterations},
              {"converged", fit.converged},
              {"config", std::move(config_echo)},
              {"wall_time_ms", wall_time_ms}};
}

FitResult fit_from_report(const json& report) {
  FitResult fit;
  const auto& names = report.at("group_names");
  const Eigen::Index G = static_cast<Eigen::Index>(names.size());
  fit.state.gamma = Vec(G);
  fit.state.mu.resize(G);
  for (Eigen::Index i = 0; i < G; ++i) {
    const std::string name = names[static_cast<size_t>(i)].get<std::string>();
    fit.state.gamma[i] = report.at("gamma").at(name).get<double>();
    const auto coefs = report.at("mu").at(name).get<std::vector<double>>();
    fit.state.mu[i] = Eigen::Map<const Vec>(coefs.data(), static_cast<Eigen::Index>(coefs.size()));
  }
  fit.sigma_hat_sq = report.value("sigma2_hat", 0.0);
  fit.converged = report.value("converged", false);
  fit.iterations = report.value("iterations", 0);
  return fit;
}

json basis_info_to_json(const BasisInfo& info, double y_mean) {
  json knots = json::array(), boundary = json::array(), offsets = json::array(),
       scales = json::array();
  for (size_t j = 0; j < info.knots.size(); ++j) {
    knots.push_back(std::vector<double>(info.knots[j].data(),
                                        info.knots[j].data() + info.knots[j].size()));
    boundary.push_back(json::array({info.boundary[j][0], info.boundary[j][1]}));
    offsets.push_back(std::vector<double>(
        info.centering_offsets[j].data(),
        info.centering_offsets[j].data() + info.centering_offsets[j].size()));
    scales.push_back(std::vector<double>(info.col_scales[j].data(),
                                         info.col_scales[j].data() + info.col_scales[j].size()));
  }
  return json{{"d", info.d},
              {"degree", info.degree},
              {"names", info.names},
              {"knots", std::move(knots)},
              {"boundary", std::move(boundary)},
              {"centering_offsets", std::move(offsets)},
              {"col_scales", std::move(scales)},
              {"y_mean", y_mean}};
}

std::pair<BasisInfo, double> basis_info_from_json(const json& doc) {
  BasisInfo info;
  info.d = doc.at("d").get<int>();
  info.degree = doc.at("degree").get<int>();
  info.names = doc.at("names").get<std::vector<std::string>>();
  const size_t p = info.names.size();
  info.knots.resize(p);
  info.boundary.resize(p);
  info.centering_offsets.resize(p);
  info.col_scales.resize(p);
  for (size_t j = 0; j < p; ++j) {
    const auto kn = doc.at("knots")[j].get<std::vector<double>>();
    info.knots[j] = Eigen::Map<const Vec>(kn.data(), static_cast<Eigen::Index>(kn.size()));
    info.boundary[j] = {doc.at("boundary")[j][0].get<double>(),
                        doc.at("boundary")[j][1].get<double>()};
    const auto off = doc.at("centering_offsets")[j].get<std::vector<double>>();
    info.centering_offsets[j] =
        Eigen::Map<const Vec>(off.data(), static_cast<Eigen::Index>(off.size()));
    const auto sc = doc.at("col_scales")[j].get<std::vector<double>>();
    info.col_scales[j] = Eigen::Map<const Vec>(sc.data(), static_cast<Eigen::Index>(sc.size()));
  }
  return {std::move(info), doc.at("y_mean").get<double>()};
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json doc;
  in >> doc;
  return doc;
}

void write_json_file(const std::string& path, const json& doc) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << doc.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace gvssb
