#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mfals/adapter.hpp"
#include "mfals/distributions.hpp"
#include "mfals/gp.hpp"
#include "mfals/models.hpp"

namespace mfals {

/// "below" problems fail when the response drops to the threshold or
/// under it; they are run internally on the negated response.
enum class FailureDirection { Above, Below };

std::string_view to_string(FailureDirection d);
FailureDirection failure_direction_from_string(std::string_view name);

/// How the low-fidelity model is obtained for a built-in benchmark.
enum class LowFidelityKind {
  GP,        // GP trained on a few HF evaluations, then frozen
  HF,        // the HF function itself (perfect LF)
  None,      // constant zero: the correction models the HF response directly
};

std::string_view to_string(LowFidelityKind k);
LowFidelityKind low_fidelity_kind_from_string(std::string_view name);

struct LowFidelitySettings {
  LowFidelityKind kind = LowFidelityKind::GP;
  std::size_t n_train = 20;
  std::uint64_t seed = 0x5bd1e995ULL;
  GPOptions gp;
};

struct Problem {
  std::string name;
  ParameterSpace space;
  EvaluatorPtr hf;  // internal orientation (exceedance)
  EvaluatorPtr lf;
  double failure_threshold = 0.0;  // original units
  FailureDirection direction = FailureDirection::Above;
  std::size_t lf_training_hf_calls = 0;

  double sign() const { return direction == FailureDirection::Below ? -1.0 : 1.0; }
  double internal_threshold() const { return sign() * failure_threshold; }
};

std::vector<NamedVariable> four_branch_variables();
std::vector<NamedVariable> rastrigin_variables();
/// Borehole inputs; `rw_upper` is the upper end of the borehole-radius range.
std::vector<NamedVariable> borehole_variables(double rw_upper = 0.15);

bool is_builtin_problem(std::string_view name);

struct ProblemDefaults {
  double failure_threshold;
  FailureDirection direction;
};
ProblemDefaults builtin_defaults(std::string_view name);
std::vector<NamedVariable> builtin_variables(std::string_view name);

/// Builds a built-in benchmark over `space` (which must list the benchmark's
/// inputs in its canonical order).
Problem make_builtin_problem(std::string_view name, ParameterSpace space,
                             double failure_threshold, FailureDirection direction,
                             const LowFidelitySettings& lf);

struct ExternalSettings {
  std::string hf_command;
  std::string lf_command;
  AdapterOptions hf_options;
  AdapterOptions lf_options;
};

Problem make_external_problem(ParameterSpace space, double failure_threshold,
                              FailureDirection direction, const ExternalSettings& ext);

/// GP over the latent coordinates of `space` (restricted to `indices`)
/// trained on `n` HF evaluations at points drawn from the space.
EvaluatorPtr train_gp_low_fidelity(const ParameterSpace& space,
                                   const std::vector<std::size_t>& indices,
                                   const std::function<double(std::span<const double>)>& hf,
                                   const std::vector<std::size_t>& hf_indices, std::size_t n,
                                   std::uint64_t seed, const GPOptions& options);

}  // namespace mfals
