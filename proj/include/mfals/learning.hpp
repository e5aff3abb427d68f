#pragma once

#include <cstddef>
#include <functional>
#include <queue>
#include <string_view>
#include <vector>

namespace mfals {

enum class LearningMode {
  SingleFidelitySubsetDependent,
  MultifidelitySubsetIndependent,
  MultifidelitySubsetDependent,
};

std::string_view to_string(LearningMode mode);
LearningMode learning_mode_from_string(std::string_view name);

struct LearningConfig {
  LearningMode mode = LearningMode::MultifidelitySubsetDependent;
  double u_threshold = 2.0;
  double sigma_floor = 1e-12;

  void validate() const;
};

bool subset_dependent(LearningMode mode);

enum class Fidelity { AcceptLF, CallHF };

/// Running upper quantile of a stream: the m-th largest of N values with
/// m = ceil(p0 * N). Returns +inf until ceil(1/p0) values have been seen.
class QuantileTracker {
 public:
  explicit QuantileTracker(double p0);

  void insert(double value);
  void clear();
  std::size_t size() const { return upper_.size() + lower_.size(); }
  double p0() const { return p0_; }
  std::size_t warmup() const { return warmup_; }
  double threshold() const;

 private:
  double p0_;
  std::size_t warmup_;
  // upper_: the m largest values (min at top); lower_: the rest (max at top).
  std::priority_queue<double, std::vector<double>, std::greater<>> upper_;
  std::priority_queue<double> lower_;
};

/// Number of values counted as exceeding the (1 - p0) quantile among n.
std::size_t upper_count(double p0, std::size_t n);

/// m-th largest value of `values`, m = upper_count(p0, size).
double batch_threshold(std::vector<double> values, double p0);

/// Threshold the U-function is measured against. Subset-independent mode
/// always uses the failure threshold; subset-dependent modes use the running
/// level threshold until it reaches the failure threshold or the level is
/// known to be final.
double active_threshold(const LearningConfig& config, double running, double failure,
                        bool final_level);

double u_value(const LearningConfig& config, double mean, double std, double level_threshold,
               double final_threshold, bool is_final_level);

/// |mean - threshold| / std with the configured floor on std.
double u_value(const LearningConfig& config, double mean, double std, double threshold);

Fidelity decide_fidelity(double u, const LearningConfig& config);

/// Probability that the prediction is on the correct side of the threshold.
double sign_probability(double u);

/// Probability that a Gaussian prediction exceeds the threshold; degrades to
/// the indicator when std is below the floor.
double exceedance_probability(double mean, double std, double threshold, double sigma_floor);

}  // namespace mfals
