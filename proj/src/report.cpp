#include "mfals/report.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "mfals/error.hpp"

namespace mfals {

namespace {

nlohmann::json finite_or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

std::string csv_number(double v) {
  if (std::isnan(v)) return "";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

}  // namespace

nlohmann::json report_to_json(const EstimateReport& r, const ReportContext& ctx) {
  nlohmann::json j;
  j["problem"] = ctx.problem;
  j["method"] = std::string(to_string(r.method));
  j["failure_threshold"] = ctx.failure_threshold;
  j["failure_direction"] = ctx.failure_direction;
  j["pf"] = r.pf_indicator;
  j["pf_indicator"] = r.pf_indicator;
  j["pf_weighted"] = r.pf_weighted;
  j["cov"] = finite_or_null(r.cov);
  j["cov_uncorrelated"] = finite_or_null(r.cov_uncorrelated);
  j["cov_indicator"] = finite_or_null(r.cov_indicator);
  j["converged"] = r.converged;
  j["status"] = r.status;
  j["insufficient_sampling"] = r.insufficient_sampling;
  j["n_levels"] = r.levels.size();
  j["calls"] = {
      {"hf_sampling", r.hf_calls},
      {"lf_sampling", r.lf_calls},
      {"hf_correction_init", r.init_hf_calls},
      {"lf_correction_init", r.init_lf_calls},
      {"hf_lf_training", r.lf_training_hf_calls},
      {"hf_exclusive", r.hf_calls},
      {"hf_inclusive", r.hf_calls_inclusive},
  };
  j["correction_gp"] = {{"archive_size", r.correction_archive_size},
                        {"refits", r.gp_refits},
                        {"variance_clamps", r.gp_variance_clamps}};
  auto& levels = j["levels"] = nlohmann::json::array();
  for (const LevelSummary& l : r.levels) {
    levels.push_back({
        {"level", l.index},
        {"threshold", ctx.sign * l.threshold},
        {"limit", finite_or_null(ctx.sign * l.limit)},
        {"probability", l.probability},
        {"indicator_probability", l.indicator_probability},
        {"cov", finite_or_null(l.cov)},
        {"cov_uncorrelated", finite_or_null(l.cov_uncorrelated)},
        {"cov_indicator", finite_or_null(l.cov_indicator)},
        {"gamma", l.gamma},
        {"gamma_indicator", l.gamma_indicator},
        {"rho", l.rho},
        {"rho_indicator", l.rho_indicator},
        {"hf_calls", l.hf_calls},
        {"lf_calls", l.lf_calls},
        {"n_samples", l.n_samples},
        {"n_chains", l.n_chains},
        {"chain_length", l.chain_length},
        {"final", l.final},
        {"degenerate", l.degenerate},
    });
  }
  return j;
}

void write_levels_csv(const std::filesystem::path& path, const EstimateReport& r,
                      const ReportContext& ctx) {
  std::ofstream out = open_csv(path);
  out << "level,threshold,limit,probability,indicator_probability,cov,cov_uncorrelated,"
         "cov_indicator,gamma,hf_calls,lf_calls,n_samples,final\n";
  for (const LevelSummary& l : r.levels) {
    out << l.index << ',' << csv_number(ctx.sign * l.threshold) << ','
        << csv_number(l.index == 1 ? std::nan("") : ctx.sign * l.limit) << ','
        << csv_number(l.probability) << ',' << csv_number(l.indicator_probability) << ','
        << csv_number(l.cov) << ',' << csv_number(l.cov_uncorrelated) << ','
        << csv_number(l.cov_indicator) << ',' << csv_number(l.gamma) << ',' << l.hf_calls << ','
        << l.lf_calls << ',' << l.n_samples << ',' << (l.final ? 1 : 0) << '\n';
  }
}

void write_samples_csv(const std::filesystem::path& path, const std::vector<LevelState>& levels,
                       const ParameterSpace& space, const ReportContext& ctx) {
  std::ofstream out = open_csv(path);
  out << "level,chain,step";
  for (const auto& name : space.names()) out << ',' << name;
  out << ",output,fidelity,u,prob,accepted,hf_calls_cumulative\n";
  for (const LevelState& l : levels) {
    for (std::size_t i = 0; i < l.size(); ++i) {
      const std::size_t chain = i / l.chain_length;
      const std::size_t step = i % l.chain_length + 1;
      out << l.index << ',' << chain << ',' << step;
      const std::vector<double> x = space.to_physical(l.sample(i));
      for (double v : x) out << ',' << csv_number(v);
      out << ',' << csv_number(ctx.sign * l.outputs[i]) << ',' << (l.hf[i] ? "HF" : "LF") << ','
          << csv_number(l.u[i]) << ',' << csv_number(l.prob[i]) << ','
          << static_cast<int>(l.accepted[i]) << ',' << l.hf_cumulative[i] << '\n';
    }
  }
}

}  // namespace mfals
