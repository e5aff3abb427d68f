#include "mfals/optimizer.hpp"

#include <cmath>
#include <limits>

namespace mfals {

namespace {

Eigen::VectorXd project(Eigen::VectorXd x, const BoxBounds& b) {
  return x.cwiseMax(b.lower).cwiseMin(b.upper);
}

// Components whose bound is active and whose descent direction points outward.
Eigen::Array<bool, Eigen::Dynamic, 1> active_set(const Eigen::VectorXd& x,
                                                  const Eigen::VectorXd& g, const BoxBounds& b) {
  Eigen::Array<bool, Eigen::Dynamic, 1> active(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    active(i) = (x(i) <= b.lower(i) && g(i) > 0.0) || (x(i) >= b.upper(i) && g(i) < 0.0);
  }
  return active;
}

double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                               const BoxBounds& b) {
  return (project(x - g, b) - x).lpNorm<Eigen::Infinity>();
}

}  // namespace

MinimizeResult minimize_box_bfgs(const Objective& f, Eigen::VectorXd x0, const BoxBounds& bounds,
                                 const MinimizeOptions& options) {
  const Eigen::Index n = x0.size();
  MinimizeResult result;
  result.x = project(std::move(x0), bounds);
  Eigen::VectorXd g(n);
  result.value = f(result.x, &g);
  result.evaluations = 1;
  if (!std::isfinite(result.value)) return result;

  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  for (int it = 0; it < options.max_iterations; ++it) {
    result.iterations = it + 1;
    if (projected_gradient_norm(result.x, g, bounds) < options.gradient_tolerance) {
      result.converged = true;
      break;
    }
    const auto active = active_set(result.x, g, bounds);
    Eigen::VectorXd dir = -(h * g);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (active(i)) dir(i) = 0.0;
    }
    if (g.dot(dir) >= 0.0) {
      h.setIdentity();
      dir = -g;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (active(i)) dir(i) = 0.0;
      }
    }

    // Armijo backtracking along the projected path.
    double step = 1.0;
    Eigen::VectorXd x_new;
    Eigen::VectorXd g_new(n);
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < options.max_backtracks; ++ls) {
      x_new = project(result.x + step * dir, bounds);
      f_new = f(x_new, &g_new);
      ++result.evaluations;
      if (std::isfinite(f_new) && f_new <= result.value + 1e-4 * g.dot(x_new - result.x)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (!h.isIdentity()) {
        h.setIdentity();
        continue;
      }
      break;
    }

    const Eigen::VectorXd s = x_new - result.x;
    const Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    const double decrease = result.value - f_new;
    result.x = x_new;
    g = g_new;
    result.value = f_new;
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(n, n);
      h = (id - rho * s * y.transpose()) * h * (id - rho * y * s.transpose()) +
          rho * s * s.transpose();
    }
    if (s.lpNorm<Eigen::Infinity>() < options.step_tolerance) {
      result.converged = true;
      break;
    }
    if (decrease < options.value_tolerance * (1.0 + std::abs(f_new)) &&
        projected_gradient_norm(result.x, g, bounds) < std::sqrt(options.gradient_tolerance)) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace mfals
