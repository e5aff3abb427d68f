#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mfals/distributions.hpp"
#include "mfals/subsim.hpp"

namespace mfals {

/// Orientation and naming used when writing results in problem units.
struct ReportContext {
  std::string problem;
  double sign = 1.0;  // internal response = sign * original response
  double failure_threshold = 0.0;  // original units
  std::string failure_direction = "above";
};

/// Report body; thresholds are converted back to problem units. Infinite
/// COVs are written as null.
nlohmann::json report_to_json(const EstimateReport& report, const ReportContext& ctx);

/// level,threshold,limit,probability,indicator_probability,cov,cov_uncorrelated,
/// cov_indicator,gamma,hf_calls,lf_calls,n_samples,final
void write_levels_csv(const std::filesystem::path& path, const EstimateReport& report,
                      const ReportContext& ctx);

/// level,chain,step,<inputs>,output,fidelity,u,prob,accepted,hf_calls_cumulative
/// Rows follow evaluation order; inputs are in physical units.
void write_samples_csv(const std::filesystem::path& path, const std::vector<LevelState>& levels,
                       const ParameterSpace& space, const ReportContext& ctx);

}  // namespace mfals
