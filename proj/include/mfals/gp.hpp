#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json_fwd.hpp>

namespace mfals {

/// Squared-exponential ARD kernel parameters. `jitter` is relative: the
/// diagonal receives jitter * signal_variance.
struct KernelHyperparameters {
  double signal_variance = 1.0;
  std::vector<double> lengthscales;
  double jitter = 1e-8;
};

struct GPOptions {
  bool standardize = true;

  // Multi-start maximum likelihood.
  int n_starts = 8;
  double start_min = 1e-2;
  double start_max = 1e2;
  double min_signal_variance = 1e-6;
  double max_signal_variance = 1e6;
  double min_lengthscale = 1e-3;
  double max_lengthscale = 1e3;
  int max_iterations = 200;
  std::uint64_t seed = 0x6a09e667f3bcc909ULL;

  double initial_jitter = 1e-8;
  double max_jitter = 1e-4;
  double duplicate_tolerance = 1e-12;

  // Incremental updates: hyperparameters are re-optimized every
  // `refit_every_small` appends while the archive holds at most
  // `refit_small_limit` points, then every `refit_every_large` appends.
  std::size_t refit_small_limit = 200;
  std::size_t refit_every_small = 1;
  std::size_t refit_every_large = 10;
  // Refits start from the current hyperparameters; with this flag they also
  // rerun the full multi-start set used by fit().
  bool refit_multistart = false;
  int refit_max_iterations = 60;
};

struct GPPrediction {
  double mean = 0.0;
  double std = 0.0;
};

struct AffineScaler {
  Eigen::VectorXd shift;
  Eigen::VectorXd scale;
};

/// Zero-mean Gaussian-process regressor on standardized data with a cached
/// Cholesky factor. Values are immutable between updates; update() returns a
/// new surrogate.
class GPSurrogate {
 public:
  /// Rows of `inputs` are training points. Requires n >= 2 after removing
  /// near-duplicates (the newest output wins).
  static GPSurrogate fit(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& outputs,
                         const GPOptions& options = {});

  /// Builds the posterior for fixed hyperparameters without optimization.
  static GPSurrogate with_hyperparameters(const Eigen::MatrixXd& inputs,
                                          const Eigen::VectorXd& outputs,
                                          const KernelHyperparameters& hyper,
                                          const GPOptions& options = {});

  GPPrediction predict(std::span<const double> x) const;
  double predict_mean(std::span<const double> x) const;

  /// Appends one observation, extending the factor by a rank-one step and
  /// re-optimizing hyperparameters on the configured schedule.
  [[nodiscard]] GPSurrogate update(std::span<const double> x, double y) const&;
  [[nodiscard]] GPSurrogate update(std::span<const double> x, double y) &&;

  std::size_t size() const { return n_; }
  std::size_t dimension() const { return static_cast<std::size_t>(input_scaler_.shift.size()); }
  const KernelHyperparameters& hyperparameters() const { return hyper_; }
  const GPOptions& options() const { return options_; }

  /// Negative log marginal likelihood of the standardized archive.
  double negative_log_likelihood() const { return nll_; }

  /// Training archive in original units, one row per point.
  Eigen::MatrixXd inputs() const;
  Eigen::VectorXd outputs() const;

  const AffineScaler& input_scaler() const { return input_scaler_; }
  double output_shift() const { return output_shift_; }
  /// Zero when every training output is identical.
  double output_scale() const { return output_scale_; }

  /// Prior standard deviation in output units.
  double prior_std() const;

  /// Lower Cholesky factor and regularized kernel matrix (standardized units).
  Eigen::MatrixXd cholesky_factor() const;
  Eigen::MatrixXd kernel_matrix() const;

  std::size_t variance_clamps() const { return clamps_.value.load(std::memory_order_relaxed); }
  std::size_t refit_count() const { return refits_; }

  nlohmann::json to_json() const;
  static GPSurrogate from_json(const nlohmann::json& j, const GPOptions& options = {});

 private:
  struct Counter {
    std::atomic<std::size_t> value{0};
    Counter() = default;
    Counter(const Counter& o) : value(o.value.load(std::memory_order_relaxed)) {}
    Counter& operator=(const Counter& o) {
      value.store(o.value.load(std::memory_order_relaxed), std::memory_order_relaxed);
      return *this;
    }
  };

  GPSurrogate() = default;

  static GPSurrogate build(std::vector<std::vector<double>> rows, std::vector<double> ys,
                           const GPOptions& options);
  void set_scalers();
  void standardize_archive();
  void optimize(const std::vector<Eigen::VectorXd>& starts, int max_iterations);
  void factorize();
  void refresh_alpha();
  void refit();
  void append_in_place(std::span<const double> x, double y);
  void reserve(std::size_t capacity);
  Eigen::VectorXd standardize_input(std::span<const double> x) const;
  Eigen::VectorXd cross_kernel(std::span<const double> x) const;
  std::vector<Eigen::VectorXd> default_starts() const;

  GPOptions options_;
  std::vector<std::vector<double>> raw_inputs_;
  std::vector<double> raw_outputs_;

  AffineScaler input_scaler_;
  double output_shift_ = 0.0;
  double output_scale_ = 1.0;

  KernelHyperparameters hyper_;
  std::size_t n_ = 0;
  Eigen::MatrixXd scaled_;  // d x capacity: standardized inputs divided by lengthscales
  Eigen::MatrixXd chol_;    // capacity x capacity, lower factor in the top-left n x n block
  Eigen::VectorXd ys_;      // standardized outputs
  Eigen::VectorXd alpha_;
  double nll_ = 0.0;

  std::size_t appends_since_refit_ = 0;
  bool refit_pending_ = false;
  std::size_t refits_ = 0;
  mutable Counter clamps_;
};

namespace gp_detail {

/// Negative log marginal likelihood of standardized data (`inputs` is d x n)
/// as a function of [ln signal_variance, ln lengthscale_1..d]. The relative
/// jitter is escalated x10 from `jitter` up to `max_jitter` until the factor
/// exists; the value used is written to `jitter_used`. Returns +inf when no
/// jitter succeeds.
double negative_log_likelihood(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& outputs,
                               const Eigen::VectorXd& log_params, double jitter, double max_jitter,
                               Eigen::VectorXd* gradient, double* jitter_used = nullptr);

}  // namespace gp_detail

}  // namespace mfals
