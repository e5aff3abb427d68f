#include "mfals/estimators.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "mfals/error.hpp"

namespace mfals {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_layout(std::span<const double> records, ChainLayout layout) {
  if (layout.size() != records.size() || records.empty()) {
    throw DomainError("records do not match the chain layout");
  }
}
}  // namespace

double level_probability(std::span<const double> records) {
  if (records.empty()) throw DomainError("level has no records");
  return std::accumulate(records.begin(), records.end(), 0.0) / static_cast<double>(records.size());
}

double chain_autocovariance(std::span<const double> records, ChainLayout layout, std::size_t lag) {
  check_layout(records, layout);
  if (lag >= layout.chain_length) throw DomainError("lag exceeds the chain length");
  const double p = level_probability(records);
  if (lag == 0) return p * (1.0 - p);
  const std::size_t len = layout.chain_length;
  double sum = 0.0;
  for (std::size_t i = 0; i < layout.n_chains; ++i) {
    const double* c = records.data() + i * len;
    for (std::size_t l = 0; l + lag < len; ++l) sum += c[l] * c[l + lag];
  }
  const double count = static_cast<double>(layout.n_chains * (len - lag));
  return sum / count - p * p;
}

std::vector<double> chain_autocorrelation(std::span<const double> records, ChainLayout layout) {
  check_layout(records, layout);
  std::vector<double> rho(layout.chain_length, 0.0);
  rho[0] = 1.0;
  const double r0 = chain_autocovariance(records, layout, 0);
  if (!(r0 > 0.0)) return rho;
  for (std::size_t k = 1; k < layout.chain_length; ++k) {
    rho[k] = chain_autocovariance(records, layout, k) / r0;
  }
  return rho;
}

double gamma_factor(std::span<const double> rho, ChainLayout layout, GammaForm form) {
  const double n = static_cast<double>(layout.size());
  const double nc = static_cast<double>(layout.n_chains);
  double g = 0.0;
  for (std::size_t k = 1; k < layout.chain_length && k < rho.size(); ++k) {
    const double w = static_cast<double>(k) * nc / n;
    g += form == GammaForm::AuBeck ? (1.0 - w) * rho[k] : 1.0 - w * rho[k];
  }
  return 2.0 * g;
}

double cov_from(double probability, std::size_t n, double gamma) {
  if (!(probability > 0.0 && probability < 1.0)) return kInf;
  const double inflation = std::max(0.0, 1.0 + gamma);
  return std::sqrt((1.0 - probability) / (static_cast<double>(n) * probability) * inflation);
}

LevelCov level_cov(std::span<const double> records, ChainLayout layout, bool first_level,
                   GammaForm form) {
  check_layout(records, layout);
  const double p = level_probability(records);
  LevelCov out;
  if (!(p > 0.0 && p < 1.0)) {
    out.cov = kInf;
    out.degenerate = true;
    return out;
  }
  if (!first_level && layout.chain_length > 1) {
    out.gamma = gamma_factor(chain_autocorrelation(records, layout), layout, form);
  }
  out.cov = cov_from(p, records.size(), out.gamma);
  return out;
}

double total_cov(std::span<const double> level_covs) {
  double s = 0.0;
  for (double c : level_covs) {
    if (!std::isfinite(c)) return kInf;
    s += c * c;
  }
  return std::sqrt(s);
}

double pf_indicator(double p0, std::size_t n_levels, double final_fraction) {
  if (n_levels == 0) throw DomainError("no levels");
  return std::pow(p0, static_cast<double>(n_levels - 1)) * final_fraction;
}

double pf_weighted(std::span<const double> level_probabilities) {
  double p = 1.0;
  for (double v : level_probabilities) p *= v;
  return p;
}

}  // namespace mfals
