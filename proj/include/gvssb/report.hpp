#pragma once

#include "gvssb/additive.hpp"
#include "gvssb/preprocess.hpp"
#include "gvssb/types.hpp"

#include <json.hpp>

#include <string>
#include <utility>
#include <vector>

namespace gvssb {

/// Structured fit report: inclusion probabilities and de-standardized slab
/// means per group, selection, traces, intercept, and a config echo.
/// Group order is preserved in "group_names". wall_time_ms is the only
/// field expected to differ between identical runs.
nlohmann::json make_fit_report(const FitResult& fit, const GroupedDesign& design,
                               const StandardizationInfo& std_info, const SlabSpec& slab,
                               const Hyperparams& hyper, const FitConfig& config,
                               double wall_time_ms);

/// Rebuilds the minimal state needed for prediction (gamma, mu per group)
/// from a report, ordered as in its "group_names".
FitResult fit_from_report(const nlohmann::json& report);

nlohmann::json basis_info_to_json(const BasisInfo& info, double y_mean);
std::pair<BasisInfo, double> basis_info_from_json(const nlohmann::json& doc);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& doc);

}  // namespace gvssb
