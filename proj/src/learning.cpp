#include "mfals/learning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mfals/distributions.hpp"
#include "mfals/error.hpp"

namespace mfals {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

std::string_view to_string(LearningMode mode) {
  switch (mode) {
    case LearningMode::SingleFidelitySubsetDependent:
      return "single_fidelity_subset_dependent";
    case LearningMode::MultifidelitySubsetIndependent:
      return "multifidelity_subset_independent";
    case LearningMode::MultifidelitySubsetDependent:
      return "multifidelity_subset_dependent";
  }
  return "unknown";
}

LearningMode learning_mode_from_string(std::string_view name) {
  for (auto m : {LearningMode::SingleFidelitySubsetDependent,
                 LearningMode::MultifidelitySubsetIndependent,
                 LearningMode::MultifidelitySubsetDependent}) {
    if (to_string(m) == name) return m;
  }
  throw ValidationError("unknown learning mode '" + std::string(name) + "'");
}

void LearningConfig::validate() const {
  if (!(u_threshold > 0.0)) throw ValidationError("u_threshold must be positive");
  if (!(sigma_floor > 0.0)) throw ValidationError("sigma_floor must be positive");
}

bool subset_dependent(LearningMode mode) {
  return mode != LearningMode::MultifidelitySubsetIndependent;
}

std::size_t upper_count(double p0, std::size_t n) {
  if (n == 0) return 0;
  const double raw = p0 * static_cast<double>(n);
  const auto m = static_cast<std::size_t>(std::ceil(raw * (1.0 - 1e-12)));
  return std::clamp<std::size_t>(m, 1, n);
}

QuantileTracker::QuantileTracker(double p0) : p0_(p0) {
  if (!(p0 > 0.0 && p0 < 1.0)) throw ValidationError("p0 must lie in (0, 1)");
  warmup_ = static_cast<std::size_t>(std::ceil((1.0 / p0) * (1.0 - 1e-12)));
}

void QuantileTracker::insert(double value) {
  if (!upper_.empty() && value > upper_.top()) {
    upper_.push(value);
  } else {
    lower_.push(value);
  }
  const std::size_t m = upper_count(p0_, size());
  while (upper_.size() > m) {
    lower_.push(upper_.top());
    upper_.pop();
  }
  while (upper_.size() < m) {
    upper_.push(lower_.top());
    lower_.pop();
  }
}

void QuantileTracker::clear() {
  upper_ = {};
  lower_ = {};
}

double QuantileTracker::threshold() const {
  if (size() < warmup_) return kInf;
  return upper_.top();
}

double batch_threshold(std::vector<double> values, double p0) {
  if (values.empty()) throw DomainError("threshold of an empty level");
  const std::size_t m = upper_count(p0, values.size());
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(m - 1),
                   values.end(), std::greater<>());
  return values[m - 1];
}

double active_threshold(const LearningConfig& config, double running, double failure,
                        bool final_level) {
  if (!subset_dependent(config.mode) || final_level) return failure;
  if (std::isfinite(running) && running >= failure) return failure;
  return running;
}

double u_value(const LearningConfig& config, double mean, double std, double threshold) {
  const double gap = std::abs(mean - threshold);
  if (std < config.sigma_floor) return gap > 0.0 ? kInf : 0.0;
  if (std::isinf(gap)) return kInf;
  return gap / std;
}

double u_value(const LearningConfig& config, double mean, double std, double level_threshold,
               double final_threshold, bool is_final_level) {
  const bool use_level = subset_dependent(config.mode) && !is_final_level;
  return u_value(config, mean, std, use_level ? level_threshold : final_threshold);
}

Fidelity decide_fidelity(double u, const LearningConfig& config) {
  return u >= config.u_threshold ? Fidelity::AcceptLF : Fidelity::CallHF;
}

double sign_probability(double u) {
  if (std::isinf(u)) return u > 0 ? 1.0 : 0.0;
  return normal_cdf(u);
}

double exceedance_probability(double mean, double std, double threshold, double sigma_floor) {
  if (std < sigma_floor) return mean >= threshold ? 1.0 : 0.0;
  return normal_cdf((mean - threshold) / std);
}

}  // namespace mfals
