#include "mfals/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_set>

#include "mfals/error.hpp"

namespace mfals {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

double normal_sf(double z) { return 0.5 * std::erfc(z / std::numbers::sqrt2); }

// Acklam's rational approximation, relative error below 1.2e-9.
double acklam_quantile(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double p_low = 0.02425;
  if (p < p_low) {
    const double q = std::sqrt(-2.0 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  if (p > 1.0 - p_low) {
    const double q = std::sqrt(-2.0 * std::log1p(-p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  }
  const double q = p - 0.5;
  const double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
}

bool finite(double x) { return std::isfinite(x); }

}  // namespace

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("normal quantile requires 0 < p < 1");
  }
  double x = acklam_quantile(p);
  // One Halley step; the residual is evaluated in the tail that keeps precision.
  const double e = (p < 0.5) ? normal_cdf(x) - p : (1.0 - p) - normal_sf(x);
  const double u = e * std::sqrt(2.0 * std::numbers::pi) * std::exp(0.5 * x * x);
  x -= u / (1.0 + 0.5 * x * u);
  return x;
}

double uniform_open01(Rng& rng) {
  // 53-bit mantissa draw shifted off zero.
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

std::string_view to_string(Family family) {
  switch (family) {
    case Family::Uniform:
      return "uniform";
    case Family::Normal:
      return "normal";
    case Family::TruncatedNormal:
      return "truncated_normal";
  }
  return "unknown";
}

RandomVariable::RandomVariable(Family family, double mean, double std, double lower, double upper,
                               bool log_space)
    : family_(family), mean_(mean), std_(std), lower_(lower), upper_(upper), log_space_(log_space) {
  if (family_ == Family::TruncatedNormal) {
    alpha_ = (lower_ - mean_) / std_;
    beta_ = (upper_ - mean_) / std_;
    upper_tail_ = alpha_ > 0.0;
    const double mass =
        upper_tail_ ? normal_sf(alpha_) - normal_sf(beta_) : normal_cdf(beta_) - normal_cdf(alpha_);
    if (!(mass > 0.0)) {
      throw ValidationError("truncated normal has no probability mass on its support");
    }
    log_mass_ = std::log(mass);
  }
}

RandomVariable RandomVariable::uniform(double lower, double upper, bool log_space) {
  if (!finite(lower) || !finite(upper) || !(lower < upper)) {
    throw ValidationError("uniform requires finite lower < upper");
  }
  return {Family::Uniform, kNaN, kNaN, lower, upper, log_space};
}

RandomVariable RandomVariable::normal(double mean, double std, bool log_space) {
  if (!finite(mean) || !finite(std) || !(std > 0.0)) {
    throw ValidationError("normal requires finite mean and std > 0");
  }
  return {Family::Normal, mean, std, -kInf, kInf, log_space};
}

RandomVariable RandomVariable::truncated_normal(double mean, double std, double lower, double upper,
                                                bool log_space) {
  if (!finite(mean) || !finite(std) || !(std > 0.0)) {
    throw ValidationError("truncated normal requires finite mean and std > 0");
  }
  if (!finite(lower) || !finite(upper) || !(lower < upper)) {
    throw ValidationError("truncated normal requires finite lower < upper");
  }
  return {Family::TruncatedNormal, mean, std, lower, upper, log_space};
}

bool RandomVariable::in_support(double z) const {
  if (!finite(z)) return false;
  return z >= lower_ && z <= upper_;
}

double RandomVariable::log_density(double z) const {
  if (!in_support(z)) return -kInf;
  switch (family_) {
    case Family::Uniform:
      return -std::log(upper_ - lower_);
    case Family::Normal: {
      const double s = (z - mean_) / std_;
      return -0.5 * s * s - std::log(std_) - 0.5 * std::log(2.0 * std::numbers::pi);
    }
    case Family::TruncatedNormal: {
      const double s = (z - mean_) / std_;
      return -0.5 * s * s - std::log(std_) - 0.5 * std::log(2.0 * std::numbers::pi) - log_mass_;
    }
  }
  return -kInf;
}

double RandomVariable::cdf(double z) const {
  if (std::isnan(z)) return kNaN;
  switch (family_) {
    case Family::Uniform:
      return std::clamp((z - lower_) / (upper_ - lower_), 0.0, 1.0);
    case Family::Normal:
      return normal_cdf((z - mean_) / std_);
    case Family::TruncatedNormal: {
      if (z <= lower_) return 0.0;
      if (z >= upper_) return 1.0;
      const double s = (z - mean_) / std_;
      const double mass = std::exp(log_mass_);
      const double v = upper_tail_ ? (normal_sf(alpha_) - normal_sf(s)) / mass
                                   : (normal_cdf(s) - normal_cdf(alpha_)) / mass;
      return std::clamp(v, 0.0, 1.0);
    }
  }
  return kNaN;
}

double RandomVariable::quantile(double p) const {
  if (!(p > 0.0 && p < 1.0)) {
    throw DomainError("quantile requires 0 < p < 1");
  }
  switch (family_) {
    case Family::Uniform:
      return lower_ + p * (upper_ - lower_);
    case Family::Normal:
      return mean_ + std_ * normal_quantile(p);
    case Family::TruncatedNormal: {
      const double mass = std::exp(log_mass_);
      double s;
      if (upper_tail_) {
        const double tail = normal_sf(alpha_) - p * mass;
        s = -normal_quantile(std::clamp(tail, 1e-300, 1.0 - 1e-16));
      } else {
        const double head = normal_cdf(alpha_) + p * mass;
        s = normal_quantile(std::clamp(head, 1e-300, 1.0 - 1e-16));
      }
      return std::clamp(mean_ + std_ * s, lower_, upper_);
    }
  }
  return kNaN;
}

double RandomVariable::latent_mean() const {
  switch (family_) {
    case Family::Uniform:
      return 0.5 * (lower_ + upper_);
    case Family::Normal:
      return mean_;
    case Family::TruncatedNormal: {
      const double mass = std::exp(log_mass_);
      return mean_ + std_ * (normal_pdf(alpha_) - normal_pdf(beta_)) / mass;
    }
  }
  return kNaN;
}

double RandomVariable::latent_std() const {
  switch (family_) {
    case Family::Uniform:
      return (upper_ - lower_) / std::sqrt(12.0);
    case Family::Normal:
      return std_;
    case Family::TruncatedNormal: {
      const double mass = std::exp(log_mass_);
      const double pa = normal_pdf(alpha_);
      const double pb = normal_pdf(beta_);
      const double shift = (pa - pb) / mass;
      const double var = 1.0 + (alpha_ * pa - beta_ * pb) / mass - shift * shift;
      return std_ * std::sqrt(std::max(var, 0.0));
    }
  }
  return kNaN;
}

double RandomVariable::to_physical(double z) const { return log_space_ ? std::exp(z) : z; }

double RandomVariable::sample_latent(Rng& rng) const { return quantile(uniform_open01(rng)); }

double RandomVariable::sample(Rng& rng) const { return to_physical(sample_latent(rng)); }

ParameterSpace::ParameterSpace(std::vector<NamedVariable> variables,
                               std::vector<std::size_t> hf_indices,
                               std::vector<std::size_t> lf_indices)
    : variables_(std::move(variables)),
      hf_indices_(std::move(hf_indices)),
      lf_indices_(std::move(lf_indices)) {
  if (variables_.empty()) throw ValidationError("parameter space has no variables");
  std::unordered_set<std::string> seen;
  for (const auto& v : variables_) {
    if (v.name.empty()) throw ValidationError("variable names must be non-empty");
    if (!seen.insert(v.name).second) {
      throw ValidationError("duplicate variable name '" + v.name + "'");
    }
  }
  std::vector<bool> covered(variables_.size(), false);
  for (const auto* idx : {&hf_indices_, &lf_indices_}) {
    for (std::size_t i : *idx) {
      if (i >= variables_.size()) throw ValidationError("model input index out of range");
      covered[i] = true;
    }
  }
  if (std::find(covered.begin(), covered.end(), false) != covered.end()) {
    throw ValidationError("every variable must be read by the HF or the LF model");
  }
}

ParameterSpace ParameterSpace::shared(std::vector<NamedVariable> variables) {
  std::vector<std::size_t> all(variables.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return ParameterSpace(std::move(variables), all, all);
}

std::vector<std::string> ParameterSpace::names(std::span<const std::size_t> indices) const {
  std::vector<std::string> out;
  out.reserve(indices.size());
  for (std::size_t i : indices) out.push_back(variables_[i].name);
  return out;
}

std::vector<std::string> ParameterSpace::names() const {
  std::vector<std::string> out;
  out.reserve(variables_.size());
  for (const auto& v : variables_) out.push_back(v.name);
  return out;
}

std::optional<std::size_t> ParameterSpace::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    if (variables_[i].name == name) return i;
  }
  return std::nullopt;
}

std::vector<double> ParameterSpace::sample_latent(Rng& rng) const {
  std::vector<double> z(variables_.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = variables_[i].rv.sample_latent(rng);
  return z;
}

std::vector<double> ParameterSpace::to_physical(std::span<const double> latent) const {
  std::vector<double> x(latent.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = variables_[i].rv.to_physical(latent[i]);
  return x;
}

std::vector<double> ParameterSpace::select_physical(std::span<const double> latent,
                                                    std::span<const std::size_t> indices) const {
  std::vector<double> x;
  x.reserve(indices.size());
  for (std::size_t i : indices) x.push_back(variables_[i].rv.to_physical(latent[i]));
  return x;
}

double ParameterSpace::log_density(std::span<const double> latent) const {
  double total = 0.0;
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    total += variables_[i].rv.log_density(latent[i]);
  }
  return total;
}

}  // namespace mfals
