#pragma once

#include <atomic>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfals/distributions.hpp"
#include "mfals/gp.hpp"

namespace mfals {

/// Scalar model over a declared, ordered list of named inputs. evaluate()
/// counts every call exactly once.
class ModelEvaluator {
 public:
  explicit ModelEvaluator(std::vector<std::string> inputs);
  virtual ~ModelEvaluator() = default;
  ModelEvaluator(const ModelEvaluator&) = delete;
  ModelEvaluator& operator=(const ModelEvaluator&) = delete;

  /// `x` holds values in the order of inputs().
  double evaluate(std::span<const double> x);

  const std::vector<std::string>& inputs() const { return inputs_; }
  std::size_t calls() const { return calls_.load(std::memory_order_relaxed); }
  void set_calls(std::size_t n) { calls_.store(n, std::memory_order_relaxed); }

 protected:
  virtual double do_evaluate(std::span<const double> x) = 0;

 private:
  std::vector<std::string> inputs_;
  std::atomic<std::size_t> calls_{0};
};

using EvaluatorPtr = std::shared_ptr<ModelEvaluator>;

class FunctionEvaluator final : public ModelEvaluator {
 public:
  using Function = std::function<double(std::span<const double>)>;
  FunctionEvaluator(std::vector<std::string> inputs, Function f);

 protected:
  double do_evaluate(std::span<const double> x) override;

 private:
  Function f_;
};

/// Frozen GP surrogate used as a model. Inputs flagged in `log_inputs` are
/// passed through ln() before prediction, so the GP can live in the same
/// latent coordinates as the sampler.
class GPEvaluator final : public ModelEvaluator {
 public:
  GPEvaluator(std::vector<std::string> inputs, GPSurrogate gp, std::vector<bool> log_inputs = {});
  const GPSurrogate& surrogate() const { return gp_; }

 protected:
  double do_evaluate(std::span<const double> x) override;

 private:
  GPSurrogate gp_;
  std::vector<bool> log_inputs_;
};

/// factor * inner(x). Used to turn "failure when F <= threshold" problems
/// into exceedance problems via factor = -1.
class ScaledEvaluator final : public ModelEvaluator {
 public:
  ScaledEvaluator(EvaluatorPtr inner, double factor);
  const EvaluatorPtr& inner() const { return inner_; }

 protected:
  double do_evaluate(std::span<const double> x) override;

 private:
  EvaluatorPtr inner_;
  double factor_;
};

/// Constant output; the low-fidelity stand-in for single-fidelity runs.
class ConstantEvaluator final : public ModelEvaluator {
 public:
  ConstantEvaluator(std::vector<std::string> inputs, double value);

 protected:
  double do_evaluate(std::span<const double> x) override;

 private:
  double value_;
};

// Benchmarks.

double four_branch(std::span<const double> x);
double rastrigin_limit(std::span<const double> x);

struct BoreholeParams {
  double rw;  // borehole radius
  double r;   // radius of influence
  double tu;  // upper aquifer transmissivity
  double hu;  // upper aquifer head
  double tl;  // lower aquifer transmissivity
  double hl;  // lower aquifer head
  double l;   // borehole length
  double kw;  // hydraulic conductivity
};

/// Water flow through a borehole. Throws DomainError unless r > rw > 0 and
/// the transmissivities and conductivity are positive.
double borehole(const BoreholeParams& p);
/// Inputs ordered rw, r, Tu, Hu, Tl, Hl, L, Kw.
double borehole(std::span<const double> x);

struct CorrectedPrediction {
  double mean = 0.0;
  double std = 0.0;
  double lf = 0.0;
};

/// Low-fidelity model plus a GP correction trained on HF - LF differences.
/// Points are latent superset vectors of the parameter space; each model
/// receives the physical values of its own inputs.
class MultifidelityModel {
 public:
  MultifidelityModel(ParameterSpace space, EvaluatorPtr hf, EvaluatorPtr lf,
                     GPOptions correction_options = {});

  /// Evaluates both models at the given latent points and fits the correction.
  void initialize(const std::vector<std::vector<double>>& points);
  void set_correction(GPSurrogate gp);
  bool initialized() const { return correction_.has_value(); }

  /// LF value plus correction mean, with the correction std.
  CorrectedPrediction evaluate_lf_corrected(std::span<const double> z);

  /// Calls HF, records the difference against LF (reusing `lf_value` when it
  /// was already computed for this point) and updates the correction.
  double evaluate_hf_and_adapt(std::span<const double> z, std::optional<double> lf_value = {});

  /// HF call without adaptation.
  double evaluate_hf(std::span<const double> z);

  const ParameterSpace& space() const { return space_; }
  const GPSurrogate& correction() const;
  const GPOptions& correction_options() const { return options_; }
  ModelEvaluator& hf() { return *hf_; }
  ModelEvaluator& lf() { return *lf_; }
  std::size_t hf_calls() const { return hf_->calls(); }
  std::size_t lf_calls() const { return lf_->calls(); }

 private:
  std::vector<double> hf_inputs(std::span<const double> z) const;
  std::vector<double> lf_inputs(std::span<const double> z) const;

  ParameterSpace space_;
  EvaluatorPtr hf_;
  EvaluatorPtr lf_;
  GPOptions options_;
  std::optional<GPSurrogate> correction_;
};

}  // namespace mfals
