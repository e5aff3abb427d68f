#pragma once

#include <functional>

#include <Eigen/Core>

namespace mfals {

/// Objective returning f(x); fills the gradient when the pointer is non-null.
/// Returning +inf marks an infeasible point and triggers backtracking.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd*)>;

struct BoxBounds {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

struct MinimizeOptions {
  int max_iterations = 200;
  double gradient_tolerance = 1e-6;
  double value_tolerance = 1e-12;
  int max_backtracks = 40;
  /// Stop once an accepted step moves no coordinate by more than this.
  double step_tolerance = 1e-9;
};

struct MinimizeResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Quasi-Newton (BFGS) minimization with projection onto a box. Variables
/// pinned at a bound with an outward gradient are frozen for the step.
MinimizeResult minimize_box_bfgs(const Objective& f, Eigen::VectorXd x0, const BoxBounds& bounds,
                                 const MinimizeOptions& options = {});

}  // namespace mfals
