#include "mfals/problems.hpp"

#include <cmath>

#include "mfals/error.hpp"

namespace mfals {

std::string_view to_string(FailureDirection d) {
  return d == FailureDirection::Below ? "below" : "above";
}

FailureDirection failure_direction_from_string(std::string_view name) {
  if (name == "above") return FailureDirection::Above;
  if (name == "below") return FailureDirection::Below;
  throw ValidationError("failure direction must be 'above' or 'below'");
}

std::string_view to_string(LowFidelityKind k) {
  switch (k) {
    case LowFidelityKind::GP:
      return "gp";
    case LowFidelityKind::HF:
      return "hf";
    case LowFidelityKind::None:
      return "none";
  }
  return "unknown";
}

LowFidelityKind low_fidelity_kind_from_string(std::string_view name) {
  if (name == "gp") return LowFidelityKind::GP;
  if (name == "hf") return LowFidelityKind::HF;
  if (name == "none") return LowFidelityKind::None;
  throw ValidationError("low-fidelity kind must be 'gp', 'hf' or 'none'");
}

std::vector<NamedVariable> four_branch_variables() {
  return {{"x1", RandomVariable::normal(0.0, 1.0)}, {"x2", RandomVariable::normal(0.0, 1.0)}};
}

std::vector<NamedVariable> rastrigin_variables() { return four_branch_variables(); }

std::vector<NamedVariable> borehole_variables(double rw_upper) {
  return {
      {"rw", RandomVariable::uniform(0.05, rw_upper)},
      {"r", RandomVariable::normal(7.71, 1.0056, true)},
      {"Tu", RandomVariable::uniform(63070.0, 115600.0)},
      {"Hu", RandomVariable::uniform(990.0, 1110.0)},
      {"Tl", RandomVariable::uniform(63.1, 116.0)},
      {"Hl", RandomVariable::uniform(700.0, 820.0)},
      {"L", RandomVariable::uniform(1120.0, 1680.0)},
      {"Kw", RandomVariable::uniform(9855.0, 12045.0)},
  };
}

bool is_builtin_problem(std::string_view name) {
  return name == "four_branch" || name == "rastrigin" || name == "borehole";
}

ProblemDefaults builtin_defaults(std::string_view name) {
  if (name == "four_branch" || name == "rastrigin") return {0.0, FailureDirection::Below};
  if (name == "borehole") return {270.0, FailureDirection::Above};
  throw ValidationError("unknown built-in problem '" + std::string(name) + "'");
}

std::vector<NamedVariable> builtin_variables(std::string_view name) {
  if (name == "four_branch") return four_branch_variables();
  if (name == "rastrigin") return rastrigin_variables();
  if (name == "borehole") return borehole_variables();
  throw ValidationError("unknown built-in problem '" + std::string(name) + "'");
}

namespace {

FunctionEvaluator::Function builtin_function(std::string_view name) {
  if (name == "four_branch") return [](std::span<const double> x) { return four_branch(x); };
  if (name == "rastrigin") return [](std::span<const double> x) { return rastrigin_limit(x); };
  if (name == "borehole") return [](std::span<const double> x) { return borehole(x); };
  throw ValidationError("unknown built-in problem '" + std::string(name) + "'");
}

std::size_t builtin_dimension(std::string_view name) { return name == "borehole" ? 8 : 2; }

EvaluatorPtr oriented(EvaluatorPtr e, FailureDirection d) {
  if (d == FailureDirection::Above) return e;
  return std::make_shared<ScaledEvaluator>(std::move(e), -1.0);
}

}  // namespace

EvaluatorPtr train_gp_low_fidelity(const ParameterSpace& space,
                                   const std::vector<std::size_t>& indices,
                                   const std::function<double(std::span<const double>)>& hf,
                                   const std::vector<std::size_t>& hf_indices, std::size_t n,
                                   std::uint64_t seed, const GPOptions& options) {
  if (n < 2) throw ValidationError("low-fidelity GP needs at least two training points");
  Rng rng(seed);
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(indices.size()));
  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const std::vector<double> z = space.sample_latent(rng);
    for (std::size_t j = 0; j < indices.size(); ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = z[indices[j]];
    }
    y(static_cast<Eigen::Index>(i)) = hf(space.select_physical(z, hf_indices));
  }
  std::vector<bool> log_flags;
  for (std::size_t j : indices) log_flags.push_back(space.variable(j).log_space());
  return std::make_shared<GPEvaluator>(space.names(indices), GPSurrogate::fit(x, y, options),
                                       std::move(log_flags));
}

Problem make_builtin_problem(std::string_view name, ParameterSpace space,
                             double failure_threshold, FailureDirection direction,
                             const LowFidelitySettings& lf) {
  if (space.dimension() != builtin_dimension(name) ||
      space.hf_indices().size() != space.dimension()) {
    throw ValidationError("problem '" + std::string(name) + "' takes " +
                          std::to_string(builtin_dimension(name)) +
                          " variables, all read by the HF model");
  }
  const auto f = builtin_function(name);
  Problem p{std::string(name), space, nullptr, nullptr, failure_threshold, direction, 0};
  p.hf = oriented(std::make_shared<FunctionEvaluator>(space.names(space.hf_indices()), f),
                  direction);
  const auto lf_names = space.names(space.lf_indices());
  switch (lf.kind) {
    case LowFidelityKind::GP:
      p.lf = oriented(train_gp_low_fidelity(space, space.lf_indices(), f, space.hf_indices(),
                                            lf.n_train, lf.seed, lf.gp),
                      direction);
      p.lf_training_hf_calls = lf.n_train;
      break;
    case LowFidelityKind::HF:
      if (space.lf_indices() != space.hf_indices()) {
        throw ValidationError("an HF-identical LF model must read the HF inputs");
      }
      p.lf = oriented(std::make_shared<FunctionEvaluator>(lf_names, f), direction);
      break;
    case LowFidelityKind::None:
      p.lf = std::make_shared<ConstantEvaluator>(lf_names, 0.0);
      break;
  }
  return p;
}

Problem make_external_problem(ParameterSpace space, double failure_threshold,
                              FailureDirection direction, const ExternalSettings& ext) {
  if (ext.hf_command.empty() || ext.lf_command.empty()) {
    throw ValidationError("external problems need both HF and LF adapter commands");
  }
  Problem p{"external", space, nullptr, nullptr, failure_threshold, direction, 0};
  p.hf = oriented(std::make_shared<ExternalEvaluator>(ext.hf_command,
                                                      space.names(space.hf_indices()),
                                                      ext.hf_options),
                  direction);
  p.lf = oriented(std::make_shared<ExternalEvaluator>(ext.lf_command,
                                                      space.names(space.lf_indices()),
                                                      ext.lf_options),
                  direction);
  return p;
}

}  // namespace mfals
