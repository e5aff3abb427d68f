#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mfals {

/// Correlation factor form. AuBeck weights each lag's correlation by
/// (1 - k Nc / N); Literal keeps the correlation inside the parenthesis.
enum class GammaForm { AuBeck, Literal };

/// Records of one level are laid out chain-major: value(i, k) lives at
/// index i * chain_length + k. A first level is N chains of length one.
struct ChainLayout {
  std::size_t n_chains = 0;
  std::size_t chain_length = 0;
  std::size_t size() const { return n_chains * chain_length; }
};

double level_probability(std::span<const double> records);

/// Cross-moment at lag k averaged over chains and offsets, minus P^2.
/// Lag 0 returns P(1 - P).
double chain_autocovariance(std::span<const double> records, ChainLayout layout, std::size_t lag);

/// rho(k) = R(k) / R(0) for k = 0 .. chain_length - 1. All zero (except
/// rho(0) = 1) when the level is degenerate.
std::vector<double> chain_autocorrelation(std::span<const double> records, ChainLayout layout);

double gamma_factor(std::span<const double> rho, ChainLayout layout, GammaForm form = GammaForm::AuBeck);

struct LevelCov {
  double cov = 0.0;
  double gamma = 0.0;
  bool degenerate = false;
};

/// COV of one level's probability estimate. The first level uses the Monte
/// Carlo form; later levels include the chain-correlation factor.
LevelCov level_cov(std::span<const double> records, ChainLayout layout, bool first_level,
                   GammaForm form = GammaForm::AuBeck);

/// COV from a probability, sample count and correlation factor. Infinite
/// when the probability is 0 or 1.
double cov_from(double probability, std::size_t n, double gamma);

/// Root-sum-square of level COVs; infinite if any level is.
double total_cov(std::span<const double> level_covs);

double pf_indicator(double p0, std::size_t n_levels, double final_fraction);
double pf_weighted(std::span<const double> level_probabilities);

}  // namespace mfals
