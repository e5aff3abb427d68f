#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mfals/distributions.hpp"
#include "mfals/estimators.hpp"
#include "mfals/learning.hpp"
#include "mfals/models.hpp"

namespace mfals {

enum class Method { MC, SS, MF_AK_MCS, MF_AL_SS };

std::string_view to_string(Method method);
Method method_from_string(std::string_view name);

struct ProposalConfig {
  /// Random-walk width in units of each marginal's latent standard deviation.
  double scale = 1.0;
  /// Reflect bounded-marginal proposals back into the support; otherwise
  /// out-of-support proposals are rejected.
  bool reflect = true;
};

struct RunConfig {
  double p0 = 0.1;
  std::size_t n_per_level = 20000;
  std::size_t max_levels = 20;
  /// Zero means p0 * n_per_level.
  std::size_t n_chains = 0;
  /// Pins the number of levels; the last one is treated as final.
  std::optional<std::size_t> n_levels;
  std::size_t n_init = 20;
  double failure_threshold = 0.0;
  Method method = Method::MF_AL_SS;
  LearningConfig learning;
  ProposalConfig proposal;
  GammaForm gamma_form = GammaForm::AuBeck;
  std::uint64_t rng_seed = 1;
  /// Written after every completed level when non-empty.
  std::string checkpoint_path;

  void validate() const;
  std::size_t seeds_per_level() const;
  std::size_t chain_count() const;
  std::size_t chain_length() const;
};

/// One subset. Arrays are indexed chain-major (chain * chain_length + step).
struct LevelState {
  std::size_t index = 1;
  std::size_t dimension = 0;
  std::size_t n_chains = 0;
  std::size_t chain_length = 0;

  std::vector<double> samples;  // size() * dimension latent coordinates
  std::vector<double> outputs;
  std::vector<std::uint8_t> hf;        // 1 when the stored output is an HF value
  std::vector<double> stds;            // corrected-LF std, 0 for HF outputs
  std::vector<double> u;               // U at decision time (NaN for HF-only methods)
  std::vector<double> prob;            // exceedance probability at the realized threshold
  std::vector<std::uint8_t> accepted;  // chain moved to a new state at this step
  std::vector<std::uint64_t> order;    // evaluation order within the run
  std::vector<std::uint64_t> hf_cumulative;

  double threshold = 0.0;  // realized (1 - p0) quantile
  double limit = -std::numeric_limits<double>::infinity();  // lower bound from the seeds
  bool final = false;
  std::size_t hf_calls = 0;
  std::size_t lf_calls = 0;

  std::size_t size() const { return outputs.size(); }
  ChainLayout layout() const { return {n_chains, chain_length}; }
  std::span<const double> sample(std::size_t i) const {
    return {samples.data() + i * dimension, dimension};
  }
  std::vector<double> indicators(double threshold_value) const;
};

struct LevelSummary {
  std::size_t index = 0;
  double threshold = 0.0;
  double limit = 0.0;
  double probability = 0.0;           // mean of the probability records
  double indicator_probability = 0.0; // fraction of stored outputs at or above the threshold
  double cov = 0.0;
  double cov_uncorrelated = 0.0;
  double cov_indicator = 0.0;
  double gamma = 0.0;
  double gamma_indicator = 0.0;
  std::vector<double> rho;
  std::vector<double> rho_indicator;
  std::size_t hf_calls = 0;
  std::size_t lf_calls = 0;
  std::size_t n_samples = 0;
  std::size_t n_chains = 0;
  std::size_t chain_length = 0;
  bool final = false;
  bool degenerate = false;
};

struct EstimateReport {
  Method method = Method::MF_AL_SS;
  double pf_indicator = 0.0;
  double pf_weighted = 0.0;
  double cov = 0.0;
  double cov_uncorrelated = 0.0;
  double cov_indicator = 0.0;
  std::vector<LevelSummary> levels;
  std::size_t hf_calls = 0;          // HF calls made while sampling
  std::size_t lf_calls = 0;
  std::size_t init_hf_calls = 0;     // correction training
  std::size_t init_lf_calls = 0;
  std::size_t lf_training_hf_calls = 0;  // building a surrogate LF model
  std::size_t hf_calls_inclusive = 0;
  std::size_t correction_archive_size = 0;
  std::size_t gp_refits = 0;
  std::size_t gp_variance_clamps = 0;
  bool converged = false;
  std::string status;  // "converged", "max_levels", "stalled"
  bool insufficient_sampling = false;
  double failure_threshold = 0.0;
  double elapsed_seconds = 0.0;
};

/// Draws `n_init` points from the space and trains the correction on them.
void initialize_correction(MultifidelityModel& mf, std::size_t n_init, Rng& rng);

struct MoveResult {
  std::vector<double> candidate;
  bool moved = false;
};

/// Component-wise Metropolis step targeting the independent marginals.
/// Consumes exactly two uniforms per component.
MoveResult mmh_propose_accept(std::span<const double> current, const ProposalConfig& proposal,
                              const ParameterSpace& space, Rng& rng);

/// Level-by-level engine. Holds the model, RNG and completed levels.
class SubsetSimulation {
 public:
  SubsetSimulation(RunConfig config, MultifidelityModel& mf);

  /// Trains the correction for the multifidelity methods.
  void initialize();
  /// Restores state written by a previous run's checkpoint.
  void resume(const nlohmann::json& checkpoint);

  LevelState run_first_level();
  LevelState run_conditional_level(const LevelState& prev);

  /// Runs remaining levels and assembles the report.
  EstimateReport run();

  const std::vector<LevelState>& levels() const { return levels_; }
  const RunConfig& config() const { return config_; }
  nlohmann::json checkpoint() const;

  std::size_t lf_training_hf_calls = 0;

 private:
  struct Evaluation {
    double output;
    double std;
    double u;
    bool hf;
  };
  Evaluation evaluate(std::span<const double> z, const QuantileTracker& tracker, bool pinned_final);
  bool learning() const;
  bool pinned_final(std::size_t level_index) const;
  void finish_level(LevelState& level) const;
  void store(LevelState& level, std::size_t slot, std::span<const double> z, const Evaluation& e,
             bool accepted);
  void write_checkpoint() const;

  RunConfig config_;
  MultifidelityModel& mf_;
  Rng rng_;
  Rng init_rng_;
  std::vector<LevelState> levels_;
  std::size_t init_hf_calls_ = 0;
  std::size_t init_lf_calls_ = 0;
  std::size_t hf_base_ = 0;
  std::size_t lf_base_ = 0;
  std::uint64_t eval_order_ = 0;
  bool stalled_ = false;
};

/// Assembles the report from completed levels.
EstimateReport summarize(const RunConfig& config, const std::vector<LevelState>& levels);

/// Convenience wrapper: initialize (for learning methods) then run.
EstimateReport run(const RunConfig& config, MultifidelityModel& mf);

}  // namespace mfals
