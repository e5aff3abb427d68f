#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mfals {

using Rng = std::mt19937_64;

/// Standard normal CDF.
double normal_cdf(double z);

/// Inverse of the standard normal CDF. Throws DomainError unless 0 < p < 1.
double normal_quantile(double p);

/// Uniform draw on the open interval (0, 1).
double uniform_open01(Rng& rng);

enum class Family { Uniform, Normal, TruncatedNormal };

std::string_view to_string(Family family);

/// Marginal distribution of one input.
///
/// All density, CDF and quantile functions act on the latent coordinate.
/// For a log-space variable the latent coordinate is ln(value) and
/// to_physical() exponentiates it; otherwise the two coincide.
class RandomVariable {
 public:
  static RandomVariable uniform(double lower, double upper, bool log_space = false);
  static RandomVariable normal(double mean, double std, bool log_space = false);
  static RandomVariable truncated_normal(double mean, double std, double lower, double upper,
                                         bool log_space = false);

  Family family() const { return family_; }
  bool log_space() const { return log_space_; }

  // Raw parameters; unused ones are NaN for the family.
  double mean() const { return mean_; }
  double std() const { return std_; }
  double lower() const { return lower_; }
  double upper() const { return upper_; }

  bool bounded() const { return family_ != Family::Normal; }
  bool in_support(double z) const;

  double log_density(double z) const;
  double cdf(double z) const;
  double quantile(double p) const;

  /// Mean and standard deviation of the latent distribution.
  double latent_mean() const;
  double latent_std() const;

  double to_physical(double z) const;

  double sample_latent(Rng& rng) const;
  /// Draw in physical units (exponentiated for log-space variables).
  double sample(Rng& rng) const;

 private:
  RandomVariable(Family family, double mean, double std, double lower, double upper, bool log_space);

  Family family_;
  double mean_;
  double std_;
  double lower_;
  double upper_;
  bool log_space_;
  // Truncated normal: standardized bounds and the truncation mass.
  double alpha_ = 0.0;
  double beta_ = 0.0;
  double log_mass_ = 0.0;
  bool upper_tail_ = false;
};

struct NamedVariable {
  std::string name;
  RandomVariable rv;
};

/// The superset of model inputs with the index subsets that each model reads.
class ParameterSpace {
 public:
  ParameterSpace(std::vector<NamedVariable> variables, std::vector<std::size_t> hf_indices,
                 std::vector<std::size_t> lf_indices);

  /// Both models read every variable.
  static ParameterSpace shared(std::vector<NamedVariable> variables);

  std::size_t dimension() const { return variables_.size(); }
  const std::vector<NamedVariable>& variables() const { return variables_; }
  const RandomVariable& variable(std::size_t i) const { return variables_[i].rv; }
  const std::vector<std::size_t>& hf_indices() const { return hf_indices_; }
  const std::vector<std::size_t>& lf_indices() const { return lf_indices_; }

  std::vector<std::string> names(std::span<const std::size_t> indices) const;
  std::vector<std::string> names() const;
  std::optional<std::size_t> index_of(std::string_view name) const;

  std::vector<double> sample_latent(Rng& rng) const;
  std::vector<double> to_physical(std::span<const double> latent) const;
  /// Physical values of the selected variables, in index order.
  std::vector<double> select_physical(std::span<const double> latent,
                                      std::span<const std::size_t> indices) const;
  double log_density(std::span<const double> latent) const;

 private:
  std::vector<NamedVariable> variables_;
  std::vector<std::size_t> hf_indices_;
  std::vector<std::size_t> lf_indices_;
};

}  // namespace mfals
