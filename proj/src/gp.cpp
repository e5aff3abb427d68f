#include "mfals/gp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include <Eigen/Cholesky>
#include <lapacke.h>
#include <nlohmann/json.hpp>

#include "mfals/error.hpp"
#include "mfals/log.hpp"
#include "mfals/optimizer.hpp"

namespace mfals {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kLog2Pi = std::log(2.0 * std::numbers::pi);

// R_ij = exp(-0.5 |a_i - a_j|^2) for the columns of `scaled` (d x n).
Eigen::MatrixXd correlation_matrix(const Eigen::Ref<const Eigen::MatrixXd>& scaled) {
  const Eigen::Index n = scaled.cols();
  const Eigen::VectorXd sq = scaled.colwise().squaredNorm().transpose();
  Eigen::MatrixXd r = scaled.transpose() * scaled;
  for (Eigen::Index j = 0; j < n; ++j) {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double dist = std::max(0.0, sq(i) + sq(j) - 2.0 * r(i, j));
      r(i, j) = std::exp(-0.5 * dist);
    }
    r(j, j) = 1.0;
  }
  return r;
}

void require_finite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError(std::string("non-finite value in ") + what);
  }
}

}  // namespace

namespace gp_detail {

double negative_log_likelihood(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& outputs,
                               const Eigen::VectorXd& log_params, double jitter, double max_jitter,
                               Eigen::VectorXd* gradient, double* jitter_used) {
  const Eigen::Index d = inputs.rows();
  const Eigen::Index n = inputs.cols();
  const double signal = std::exp(log_params(0));
  const Eigen::ArrayXd lengthscales = log_params.tail(d).array().exp();
  const Eigen::MatrixXd scaled = inputs.array().colwise() / lengthscales;
  const Eigen::MatrixXd r = correlation_matrix(scaled);

  const int ni = static_cast<int>(n);
  Eigen::MatrixXd l;
  bool ok = false;
  double j = jitter;
  for (; j <= max_jitter * (1.0 + 1e-9); j *= 10.0) {
    l = signal * r;
    l.diagonal().array() += signal * j;
    if (LAPACKE_dpotrf(LAPACK_COL_MAJOR, 'L', ni, l.data(), ni) == 0) {
      ok = true;
      break;
    }
  }
  if (!ok) return kInf;
  if (jitter_used != nullptr) *jitter_used = j;

  Eigen::VectorXd alpha = outputs;
  LAPACKE_dpotrs(LAPACK_COL_MAJOR, 'L', ni, 1, l.data(), ni, alpha.data(), ni);
  double value = 0.5 * outputs.dot(alpha) + 0.5 * static_cast<double>(n) * kLog2Pi;
  for (Eigen::Index i = 0; i < n; ++i) value += std::log(l(i, i));
  if (!std::isfinite(value)) return kInf;

  if (gradient != nullptr) {
    gradient->resize(d + 1);
    if (LAPACKE_dpotri(LAPACK_COL_MAJOR, 'L', ni, l.data(), ni) != 0) return kInf;
    Eigen::MatrixXd& k_inv = l;
    k_inv.triangularView<Eigen::StrictlyUpper>() = k_inv.transpose();
    const Eigen::MatrixXd w = alpha * alpha.transpose() - k_inv;
    (*gradient)(0) = 0.5 * (static_cast<double>(n) - outputs.dot(alpha));
    const Eigen::MatrixXd m = signal * (w.array() * r.array()).matrix();
    const Eigen::VectorXd row_sums = m.rowwise().sum();
    for (Eigen::Index dim = 0; dim < d; ++dim) {
      const Eigen::VectorXd a = scaled.row(dim).transpose();
      const double quad = a.dot(m * a);
      (*gradient)(dim + 1) = -(a.cwiseAbs2().dot(row_sums) - quad);
    }
  }
  return value;
}

}  // namespace gp_detail

GPSurrogate GPSurrogate::build(std::vector<std::vector<double>> rows, std::vector<double> ys,
                               const GPOptions& options) {
  if (rows.size() != ys.size()) throw ValidationError("GP inputs and outputs differ in length");
  if (rows.empty()) throw ValidationError("GP needs at least two training points");
  const std::size_t d = rows.front().size();
  if (d == 0) throw ValidationError("GP inputs must have at least one dimension");
  for (const auto& row : rows) {
    if (row.size() != d) throw ValidationError("GP input rows differ in dimension");
    require_finite(row, "GP inputs");
  }
  require_finite(ys, "GP outputs");

  GPSurrogate gp;
  gp.options_ = options;
  gp.raw_inputs_ = std::move(rows);
  gp.raw_outputs_ = std::move(ys);
  gp.set_scalers();

  // Near-duplicates (in standardized coordinates) collapse onto the first
  // occurrence and keep the newest output.
  std::vector<std::vector<double>> kept_rows;
  std::vector<double> kept_ys;
  std::vector<Eigen::VectorXd> kept_std;
  for (std::size_t i = 0; i < gp.raw_inputs_.size(); ++i) {
    const Eigen::VectorXd z = gp.standardize_input(gp.raw_inputs_[i]);
    bool merged = false;
    for (std::size_t k = 0; k < kept_std.size(); ++k) {
      if ((kept_std[k] - z).norm() < options.duplicate_tolerance) {
        kept_ys[k] = gp.raw_outputs_[i];
        merged = true;
        break;
      }
    }
    if (!merged) {
      kept_rows.push_back(gp.raw_inputs_[i]);
      kept_ys.push_back(gp.raw_outputs_[i]);
      kept_std.push_back(z);
    }
  }
  if (kept_rows.size() < 2) throw ValidationError("GP needs at least two distinct training points");
  if (kept_rows.size() != gp.raw_inputs_.size()) {
    gp.raw_inputs_ = std::move(kept_rows);
    gp.raw_outputs_ = std::move(kept_ys);
    gp.set_scalers();
  }
  gp.n_ = gp.raw_inputs_.size();
  gp.hyper_.lengthscales.assign(d, 1.0);
  gp.hyper_.jitter = options.initial_jitter;
  return gp;
}

GPSurrogate GPSurrogate::fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& outputs,
                             const GPOptions& options) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(inputs.rows()));
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    rows[i].resize(static_cast<std::size_t>(inputs.cols()));
    for (Eigen::Index j = 0; j < inputs.cols(); ++j) rows[i][j] = inputs(i, j);
  }
  std::vector<double> ys(outputs.data(), outputs.data() + outputs.size());
  GPSurrogate gp = build(std::move(rows), std::move(ys), options);
  gp.optimize(gp.default_starts(), options.max_iterations);
  gp.standardize_archive();
  gp.factorize();
  gp.refit_pending_ = true;
  return gp;
}

GPSurrogate GPSurrogate::with_hyperparameters(const Eigen::MatrixXd& inputs,
                                              const Eigen::VectorXd& outputs,
                                              const KernelHyperparameters& hyper,
                                              const GPOptions& options) {
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(inputs.rows()));
  for (Eigen::Index i = 0; i < inputs.rows(); ++i) {
    rows[i].resize(static_cast<std::size_t>(inputs.cols()));
    for (Eigen::Index j = 0; j < inputs.cols(); ++j) rows[i][j] = inputs(i, j);
  }
  std::vector<double> ys(outputs.data(), outputs.data() + outputs.size());
  GPSurrogate gp = build(std::move(rows), std::move(ys), options);
  if (hyper.lengthscales.size() != gp.dimension()) {
    throw ValidationError("lengthscale count must match the input dimension");
  }
  if (!(hyper.signal_variance > 0.0) || !(hyper.jitter >= 0.0) ||
      std::any_of(hyper.lengthscales.begin(), hyper.lengthscales.end(),
                  [](double l) { return !(l > 0.0); })) {
    throw ValidationError("kernel hyperparameters must be positive");
  }
  gp.hyper_ = hyper;
  gp.standardize_archive();
  gp.factorize();
  return gp;
}

void GPSurrogate::set_scalers() {
  const std::size_t n = raw_inputs_.size();
  const std::size_t d = raw_inputs_.front().size();
  input_scaler_.shift = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  input_scaler_.scale = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(d));
  output_shift_ = 0.0;
  output_scale_ = 1.0;
  if (!options_.standardize) return;

  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0;
    for (const auto& row : raw_inputs_) mean += row[j];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (const auto& row : raw_inputs_) var += (row[j] - mean) * (row[j] - mean);
    const double sd = std::sqrt(var / static_cast<double>(n));
    input_scaler_.shift(j) = mean;
    input_scaler_.scale(j) = sd > 0.0 ? sd : 1.0;
  }
  double mean = 0.0;
  for (double y : raw_outputs_) mean += y;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double y : raw_outputs_) var += (y - mean) * (y - mean);
  output_shift_ = mean;
  output_scale_ = std::sqrt(var / static_cast<double>(n));
  if (output_scale_ <= 1e-300 * std::max(1.0, std::abs(mean))) output_scale_ = 0.0;
}

Eigen::VectorXd GPSurrogate::standardize_input(std::span<const double> x) const {
  Eigen::VectorXd z(static_cast<Eigen::Index>(x.size()));
  for (std::size_t j = 0; j < x.size(); ++j) {
    z(j) = (x[j] - input_scaler_.shift(j)) / input_scaler_.scale(j);
  }
  return z;
}

void GPSurrogate::reserve(std::size_t capacity) {
  const auto d = static_cast<Eigen::Index>(dimension());
  const auto current = static_cast<std::size_t>(scaled_.cols());
  if (capacity <= current && scaled_.rows() == d) return;
  const std::size_t grown = std::max<std::size_t>({capacity, 2 * current, 16});
  const auto g = static_cast<Eigen::Index>(grown);
  scaled_.conservativeResize(d, g);
  chol_.conservativeResize(g, g);
  ys_.conservativeResize(g);
}

void GPSurrogate::standardize_archive() {
  reserve(n_);
  const double out_div = output_scale_ > 0.0 ? output_scale_ : 1.0;
  const Eigen::ArrayXd ls = Eigen::Map<const Eigen::ArrayXd>(
      hyper_.lengthscales.data(), static_cast<Eigen::Index>(hyper_.lengthscales.size()));
  for (std::size_t i = 0; i < n_; ++i) {
    scaled_.col(static_cast<Eigen::Index>(i)) =
        standardize_input(raw_inputs_[i]).array() / ls;
    ys_(static_cast<Eigen::Index>(i)) = (raw_outputs_[i] - output_shift_) / out_div;
  }
}

std::vector<Eigen::VectorXd> GPSurrogate::default_starts() const {
  const auto p = static_cast<Eigen::Index>(dimension() + 1);
  std::vector<Eigen::VectorXd> starts;
  starts.emplace_back(Eigen::VectorXd::Zero(p));
  std::mt19937_64 rng(options_.seed);
  std::uniform_real_distribution<double> u(std::log(options_.start_min),
                                           std::log(options_.start_max));
  for (int s = 1; s < options_.n_starts; ++s) {
    Eigen::VectorXd x(p);
    for (Eigen::Index i = 0; i < p; ++i) x(i) = u(rng);
    starts.push_back(std::move(x));
  }
  return starts;
}

void GPSurrogate::optimize(const std::vector<Eigen::VectorXd>& starts, int max_iterations) {
  const auto d = static_cast<Eigen::Index>(dimension());
  Eigen::MatrixXd xs(d, static_cast<Eigen::Index>(n_));
  for (std::size_t i = 0; i < n_; ++i) {
    xs.col(static_cast<Eigen::Index>(i)) = standardize_input(raw_inputs_[i]);
  }
  const double out_div = output_scale_ > 0.0 ? output_scale_ : 1.0;
  Eigen::VectorXd ys(static_cast<Eigen::Index>(n_));
  for (std::size_t i = 0; i < n_; ++i) ys(i) = (raw_outputs_[i] - output_shift_) / out_div;

  BoxBounds bounds{Eigen::VectorXd(d + 1), Eigen::VectorXd(d + 1)};
  bounds.lower(0) = std::log(options_.min_signal_variance);
  bounds.upper(0) = std::log(options_.max_signal_variance);
  bounds.lower.tail(d).setConstant(std::log(options_.min_lengthscale));
  bounds.upper.tail(d).setConstant(std::log(options_.max_lengthscale));

  const double j0 = options_.initial_jitter;
  const double jmax = options_.max_jitter;

  MinimizeOptions mo;
  mo.max_iterations = max_iterations;
  double best = kInf;
  double best_jitter = j0;
  Eigen::VectorXd best_x;
  for (const auto& start : starts) {
    // The jitter is settled at the start point and then held fixed so the
    // objective stays smooth along the search path.
    const Eigen::VectorXd x0 = start.cwiseMax(bounds.lower).cwiseMin(bounds.upper);
    double jitter = j0;
    const double f0 = gp_detail::negative_log_likelihood(xs, ys, x0, j0, jmax, nullptr, &jitter);
    if (!std::isfinite(f0)) continue;
    const Objective objective = [&](const Eigen::VectorXd& p, Eigen::VectorXd* g) {
      return gp_detail::negative_log_likelihood(xs, ys, p, jitter, jitter, g);
    };
    const MinimizeResult r = minimize_box_bfgs(objective, x0, bounds, mo);
    logging::logger()->trace("GP start: {} iterations, {} evaluations, nll {:.6g}, jitter {:g}",
                             r.iterations, r.evaluations, r.value, jitter);
    if (std::isfinite(r.value) && r.value < best) {
      best = r.value;
      best_x = r.x;
      best_jitter = jitter;
    }
  }
  if (!std::isfinite(best)) {
    throw ConditioningError("GP likelihood could not be evaluated at any start point");
  }
  const double jitter = best_jitter;
  hyper_.signal_variance = std::exp(best_x(0));
  hyper_.lengthscales.resize(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) hyper_.lengthscales[i] = std::exp(best_x(i + 1));
  hyper_.jitter = jitter;
}

void GPSurrogate::factorize() {
  const auto n = static_cast<Eigen::Index>(n_);
  const Eigen::MatrixXd r = correlation_matrix(scaled_.leftCols(n));
  const double signal = hyper_.signal_variance;
  double j = std::max(hyper_.jitter, 0.0);
  if (j == 0.0) j = options_.initial_jitter;
  for (; j <= options_.max_jitter * (1.0 + 1e-9); j *= 10.0) {
    Eigen::MatrixXd k = signal * r;
    k.diagonal().array() += signal * j;
    Eigen::LLT<Eigen::MatrixXd> llt(k);
    if (llt.info() == Eigen::Success) {
      if (j > hyper_.jitter) {
        logging::logger()->debug("GP jitter escalated to {:g} at n = {}", j, n_);
      }
      hyper_.jitter = j;
      chol_.topLeftCorner(n, n) = llt.matrixL();
      refresh_alpha();
      return;
    }
  }
  throw ConditioningError("GP covariance is not positive definite after jitter escalation");
}

void GPSurrogate::refresh_alpha() {
  const auto n = static_cast<Eigen::Index>(n_);
  const auto l = chol_.topLeftCorner(n, n).triangularView<Eigen::Lower>();
  alpha_ = l.solve(ys_.head(n));
  const double quad = alpha_.squaredNorm();
  l.transpose().solveInPlace(alpha_);
  const double eps = hyper_.signal_variance * hyper_.jitter;
  Eigen::VectorXd delta = alpha_;
  for (int step = 0; step < 2; ++step) {
    delta *= eps;
    l.solveInPlace(delta);
    l.transpose().solveInPlace(delta);
    alpha_ += delta;
  }
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) logdet += std::log(chol_(i, i));
  nll_ = 0.5 * quad + logdet + 0.5 * static_cast<double>(n) * kLog2Pi;
}

Eigen::VectorXd GPSurrogate::cross_kernel(std::span<const double> x) const {
  const Eigen::ArrayXd ls = Eigen::Map<const Eigen::ArrayXd>(
      hyper_.lengthscales.data(), static_cast<Eigen::Index>(hyper_.lengthscales.size()));
  const Eigen::VectorXd xl = (standardize_input(x).array() / ls).matrix();
  const auto n = static_cast<Eigen::Index>(n_);
  return hyper_.signal_variance *
         (-0.5 * (scaled_.leftCols(n).colwise() - xl).colwise().squaredNorm().array())
             .exp()
             .matrix()
             .transpose();
}

GPPrediction GPSurrogate::predict(std::span<const double> x) const {
  if (x.size() != dimension()) throw ValidationError("GP prediction input has wrong dimension");
  const Eigen::VectorXd k = cross_kernel(x);
  const auto n = static_cast<Eigen::Index>(n_);
  const double mean_std = k.dot(alpha_);
  Eigen::VectorXd v = k;
  chol_.topLeftCorner(n, n).triangularView<Eigen::Lower>().solveInPlace(v);
  double var = hyper_.signal_variance - v.squaredNorm();
  if (var < 0.0) {
    clamps_.value.fetch_add(1, std::memory_order_relaxed);
    var = 0.0;
  }
  return {output_shift_ + output_scale_ * mean_std, output_scale_ * std::sqrt(var)};
}

double GPSurrogate::predict_mean(std::span<const double> x) const {
  if (x.size() != dimension()) throw ValidationError("GP prediction input has wrong dimension");
  return output_shift_ + output_scale_ * cross_kernel(x).dot(alpha_);
}

double GPSurrogate::prior_std() const {
  return output_scale_ * std::sqrt(hyper_.signal_variance);
}

GPSurrogate GPSurrogate::update(std::span<const double> x, double y) const& {
  GPSurrogate next(*this);
  next.append_in_place(x, y);
  return next;
}

GPSurrogate GPSurrogate::update(std::span<const double> x, double y) && {
  append_in_place(x, y);
  return std::move(*this);
}

void GPSurrogate::append_in_place(std::span<const double> x, double y) {
  if (x.size() != dimension()) throw ValidationError("GP update input has wrong dimension");
  require_finite(x, "GP update input");
  if (!std::isfinite(y)) throw ValidationError("non-finite GP update output");

  const Eigen::ArrayXd ls = Eigen::Map<const Eigen::ArrayXd>(
      hyper_.lengthscales.data(), static_cast<Eigen::Index>(hyper_.lengthscales.size()));
  const Eigen::VectorXd xl = (standardize_input(x).array() / ls).matrix();
  const auto n = static_cast<Eigen::Index>(n_);
  const double out_div = output_scale_ > 0.0 ? output_scale_ : 1.0;
  const double y_std = (y - output_shift_) / out_div;
  const bool breaks_constant = output_scale_ == 0.0 && y != output_shift_;

  Eigen::Index duplicate = -1;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (((scaled_.col(i) - xl).array() * ls).matrix().norm() < options_.duplicate_tolerance) {
      duplicate = i;
      break;
    }
  }

  if (duplicate >= 0) {
    raw_outputs_[static_cast<std::size_t>(duplicate)] = y;
    ys_(duplicate) = y_std;
    refresh_alpha();
  } else {
    raw_inputs_.emplace_back(x.begin(), x.end());
    raw_outputs_.push_back(y);
    reserve(n_ + 1);
    const Eigen::VectorXd k = cross_kernel(x);
    Eigen::VectorXd l = k;
    chol_.topLeftCorner(n, n).triangularView<Eigen::Lower>().solveInPlace(l);
    const double kss = hyper_.signal_variance * (1.0 + hyper_.jitter);
    const double pivot = kss - l.squaredNorm();
    scaled_.col(n) = xl;
    ys_(n) = y_std;
    ++n_;
    if (pivot > 1e-3 * hyper_.signal_variance * hyper_.jitter) {
      chol_.block(n, 0, 1, n) = l.transpose();
      chol_(n, n) = std::sqrt(pivot);
      refresh_alpha();
    } else {
      factorize();
    }
  }

  ++appends_since_refit_;
  const std::size_t every =
      n_ <= options_.refit_small_limit ? options_.refit_every_small : options_.refit_every_large;
  if (refit_pending_ || breaks_constant || (every > 0 && appends_since_refit_ >= every)) {
    refit();
  }
}

void GPSurrogate::refit() {
  const auto t0 = std::chrono::steady_clock::now();
  set_scalers();
  std::vector<Eigen::VectorXd> starts;
  const auto d = static_cast<Eigen::Index>(dimension());
  Eigen::VectorXd warm(d + 1);
  warm(0) = std::log(hyper_.signal_variance);
  for (Eigen::Index i = 0; i < d; ++i) warm(i + 1) = std::log(hyper_.lengthscales[i]);
  starts.push_back(warm);
  if (options_.refit_multistart) {
    for (auto& s : default_starts()) starts.push_back(std::move(s));
  }
  optimize(starts, options_.refit_max_iterations);
  standardize_archive();
  factorize();
  appends_since_refit_ = 0;
  refit_pending_ = false;
  ++refits_;
  logging::logger()->debug(
      "GP refit at n = {}: nll {:.6g}, {:.3f} s", n_, nll_,
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
}

Eigen::MatrixXd GPSurrogate::inputs() const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(n_), static_cast<Eigen::Index>(dimension()));
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = 0; j < dimension(); ++j) m(i, j) = raw_inputs_[i][j];
  }
  return m;
}

Eigen::VectorXd GPSurrogate::outputs() const {
  return Eigen::Map<const Eigen::VectorXd>(raw_outputs_.data(),
                                           static_cast<Eigen::Index>(raw_outputs_.size()));
}

Eigen::MatrixXd GPSurrogate::cholesky_factor() const {
  const auto n = static_cast<Eigen::Index>(n_);
  return chol_.topLeftCorner(n, n).triangularView<Eigen::Lower>();
}

Eigen::MatrixXd GPSurrogate::kernel_matrix() const {
  const auto n = static_cast<Eigen::Index>(n_);
  Eigen::MatrixXd k = hyper_.signal_variance * correlation_matrix(scaled_.leftCols(n));
  k.diagonal().array() += hyper_.signal_variance * hyper_.jitter;
  return k;
}

nlohmann::json GPSurrogate::to_json() const {
  nlohmann::json j;
  j["dimension"] = dimension();
  j["inputs"] = raw_inputs_;
  j["outputs"] = raw_outputs_;
  j["hyperparameters"] = {{"signal_variance", hyper_.signal_variance},
                          {"lengthscales", hyper_.lengthscales},
                          {"jitter", hyper_.jitter}};
  j["input_scaler"] = {
      {"shift", std::vector<double>(input_scaler_.shift.data(),
                                    input_scaler_.shift.data() + input_scaler_.shift.size())},
      {"scale", std::vector<double>(input_scaler_.scale.data(),
                                    input_scaler_.scale.data() + input_scaler_.scale.size())}};
  j["output_scaler"] = {{"shift", output_shift_}, {"scale", output_scale_}};
  j["appends_since_refit"] = appends_since_refit_;
  j["refit_pending"] = refit_pending_;
  return j;
}

GPSurrogate GPSurrogate::from_json(const nlohmann::json& j, const GPOptions& options) {
  GPSurrogate gp;
  gp.options_ = options;
  gp.raw_inputs_ = j.at("inputs").get<std::vector<std::vector<double>>>();
  gp.raw_outputs_ = j.at("outputs").get<std::vector<double>>();
  const auto d = j.at("dimension").get<std::size_t>();
  if (gp.raw_inputs_.size() != gp.raw_outputs_.size() || gp.raw_inputs_.size() < 2) {
    throw ValidationError("GP archive needs matching inputs/outputs with at least two points");
  }
  for (const auto& row : gp.raw_inputs_) {
    if (row.size() != d) throw ValidationError("GP archive row has wrong dimension");
    require_finite(row, "GP archive inputs");
  }
  require_finite(gp.raw_outputs_, "GP archive outputs");
  const auto& h = j.at("hyperparameters");
  gp.hyper_.signal_variance = h.at("signal_variance").get<double>();
  gp.hyper_.lengthscales = h.at("lengthscales").get<std::vector<double>>();
  gp.hyper_.jitter = h.at("jitter").get<double>();
  if (gp.hyper_.lengthscales.size() != d) throw ValidationError("lengthscale count mismatch");
  const auto shift = j.at("input_scaler").at("shift").get<std::vector<double>>();
  const auto scale = j.at("input_scaler").at("scale").get<std::vector<double>>();
  if (shift.size() != d || scale.size() != d) throw ValidationError("input scaler size mismatch");
  gp.input_scaler_.shift = Eigen::Map<const Eigen::VectorXd>(shift.data(), static_cast<Eigen::Index>(d));
  gp.input_scaler_.scale = Eigen::Map<const Eigen::VectorXd>(scale.data(), static_cast<Eigen::Index>(d));
  gp.output_shift_ = j.at("output_scaler").at("shift").get<double>();
  gp.output_scale_ = j.at("output_scaler").at("scale").get<double>();
  gp.appends_since_refit_ = j.value("appends_since_refit", std::size_t{0});
  gp.refit_pending_ = j.value("refit_pending", false);
  gp.n_ = gp.raw_inputs_.size();
  gp.standardize_archive();
  gp.factorize();
  return gp;
}

}  // namespace mfals
