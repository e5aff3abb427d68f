#include "mfals/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mfals/error.hpp"

namespace mfals {

ModelEvaluator::ModelEvaluator(std::vector<std::string> inputs) : inputs_(std::move(inputs)) {}

double ModelEvaluator::evaluate(std::span<const double> x) {
  if (x.size() != inputs_.size()) {
    throw ValidationError("model expects " + std::to_string(inputs_.size()) + " inputs, got " +
                          std::to_string(x.size()));
  }
  calls_.fetch_add(1, std::memory_order_relaxed);
  return do_evaluate(x);
}

FunctionEvaluator::FunctionEvaluator(std::vector<std::string> inputs, Function f)
    : ModelEvaluator(std::move(inputs)), f_(std::move(f)) {}

double FunctionEvaluator::do_evaluate(std::span<const double> x) { return f_(x); }

GPEvaluator::GPEvaluator(std::vector<std::string> inputs, GPSurrogate gp,
                         std::vector<bool> log_inputs)
    : ModelEvaluator(std::move(inputs)), gp_(std::move(gp)), log_inputs_(std::move(log_inputs)) {
  if (gp_.dimension() != this->inputs().size()) {
    throw ValidationError("GP evaluator dimension does not match its inputs");
  }
  if (log_inputs_.empty()) log_inputs_.assign(this->inputs().size(), false);
  if (log_inputs_.size() != this->inputs().size()) {
    throw ValidationError("GP evaluator log flags do not match its inputs");
  }
}

double GPEvaluator::do_evaluate(std::span<const double> x) {
  std::vector<double> z(x.begin(), x.end());
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (log_inputs_[i]) z[i] = std::log(z[i]);
  }
  return gp_.predict_mean(z);
}

ScaledEvaluator::ScaledEvaluator(EvaluatorPtr inner, double factor)
    : ModelEvaluator(inner->inputs()), inner_(std::move(inner)), factor_(factor) {}

double ScaledEvaluator::do_evaluate(std::span<const double> x) {
  return factor_ * inner_->evaluate(x);
}

ConstantEvaluator::ConstantEvaluator(std::vector<std::string> inputs, double value)
    : ModelEvaluator(std::move(inputs)), value_(value) {}

double ConstantEvaluator::do_evaluate(std::span<const double>) { return value_; }

double four_branch(std::span<const double> x) {
  if (x.size() != 2) throw ValidationError("four_branch takes 2 inputs");
  const double a = x[0];
  const double b = x[1];
  const double s2 = std::numbers::sqrt2;
  const double d = (a - b) * (a - b) / 10.0;
  return std::min({3.0 + d - (a + b) / s2, 3.0 + d + (a + b) / s2, (a - b) + 6.0 / s2,
                   (b - a) + 6.0 / s2});
}

double rastrigin_limit(std::span<const double> x) {
  if (x.size() != 2) throw ValidationError("rastrigin_limit takes 2 inputs");
  double sum = 0.0;
  for (double v : x) sum += v * v - 5.0 * std::cos(2.0 * std::numbers::pi * v);
  return 10.0 - sum;
}

double borehole(const BoreholeParams& p) {
  if (!(p.rw > 0.0) || !(p.r > p.rw)) {
    throw DomainError("borehole requires r > rw > 0");
  }
  if (!(p.tu > 0.0) || !(p.tl > 0.0) || !(p.kw > 0.0) || !(p.l >= 0.0)) {
    throw DomainError("borehole requires positive transmissivities, conductivity and length");
  }
  const double log_ratio = std::log(p.r / p.rw);
  const double denom =
      log_ratio * (1.0 + 2.0 * p.l * p.tu / (log_ratio * p.rw * p.rw * p.kw) + p.tu / p.tl);
  return 2.0 * std::numbers::pi * p.tu * (p.hu - p.hl) / denom;
}

double borehole(std::span<const double> x) {
  if (x.size() != 8) throw ValidationError("borehole takes 8 inputs");
  return borehole(BoreholeParams{x[0], x[1], x[2], x[3], x[4], x[5], x[6], x[7]});
}

MultifidelityModel::MultifidelityModel(ParameterSpace space, EvaluatorPtr hf, EvaluatorPtr lf,
                                       GPOptions correction_options)
    : space_(std::move(space)),
      hf_(std::move(hf)),
      lf_(std::move(lf)),
      options_(correction_options) {
  if (!hf_ || !lf_) throw ValidationError("multifidelity model needs both evaluators");
  if (hf_->inputs().size() != space_.hf_indices().size()) {
    throw ValidationError("HF evaluator inputs do not match the HF parameter subset");
  }
  if (lf_->inputs().size() != space_.lf_indices().size()) {
    throw ValidationError("LF evaluator inputs do not match the LF parameter subset");
  }
}

std::vector<double> MultifidelityModel::hf_inputs(std::span<const double> z) const {
  return space_.select_physical(z, space_.hf_indices());
}

std::vector<double> MultifidelityModel::lf_inputs(std::span<const double> z) const {
  return space_.select_physical(z, space_.lf_indices());
}

void MultifidelityModel::initialize(const std::vector<std::vector<double>>& points) {
  if (points.size() < 2) throw ValidationError("correction needs at least two training points");
  const auto d = static_cast<Eigen::Index>(space_.dimension());
  Eigen::MatrixXd x(static_cast<Eigen::Index>(points.size()), d);
  Eigen::VectorXd y(static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].size() != space_.dimension()) {
      throw ValidationError("training point has wrong dimension");
    }
    const double f_hf = hf_->evaluate(hf_inputs(points[i]));
    const double f_lf = lf_->evaluate(lf_inputs(points[i]));
    for (Eigen::Index j = 0; j < d; ++j) x(static_cast<Eigen::Index>(i), j) = points[i][j];
    y(static_cast<Eigen::Index>(i)) = f_hf - f_lf;
  }
  correction_ = GPSurrogate::fit(x, y, options_);
}

void MultifidelityModel::set_correction(GPSurrogate gp) {
  if (gp.dimension() != space_.dimension()) {
    throw ValidationError("correction GP must span the full parameter superset");
  }
  correction_ = std::move(gp);
}

const GPSurrogate& MultifidelityModel::correction() const {
  if (!correction_) throw ValidationError("correction GP has not been initialized");
  return *correction_;
}

CorrectedPrediction MultifidelityModel::evaluate_lf_corrected(std::span<const double> z) {
  const double f = lf_->evaluate(lf_inputs(z));
  const GPPrediction eps = correction().predict(z);
  return {f + eps.mean, eps.std, f};
}

double MultifidelityModel::evaluate_hf_and_adapt(std::span<const double> z,
                                                 std::optional<double> lf_value) {
  if (!correction_) throw ValidationError("correction GP has not been initialized");
  const double f_hf = hf_->evaluate(hf_inputs(z));
  const double f_lf = lf_value ? *lf_value : lf_->evaluate(lf_inputs(z));
  correction_ = std::move(*correction_).update(z, f_hf - f_lf);
  return f_hf;
}

double MultifidelityModel::evaluate_hf(std::span<const double> z) {
  return hf_->evaluate(hf_inputs(z));
}

}  // namespace mfals
