#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

#include "sagnac/error.hpp"

namespace sagnac {

using ResidualFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;
using ObjectiveFn = std::function<double(const Eigen::VectorXd&)>;

struct LmOptions {
  int max_iterations = 200;
  double gradient_tol = 1e-10;
  double step_tol = 1e-12;
  /// Relative decrease of the cost below which the fit counts as converged.
  double cost_tol = 1e-14;
  double initial_lambda = 1e-3;
};

struct FitResult {
  Eigen::VectorXd x;
  double cost = 0.0;  // 0.5 * |r|^2 for least squares, objective value otherwise
  int iterations = 0;
  bool converged = false;
  std::string reason;
};

/// Optimizer gave up. Carries the best iterate so callers can inspect it.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, FitResult best) : Error(what), best_(std::move(best)) {}
  const FitResult& best() const { return best_; }

 private:
  FitResult best_;
};

/// Damped Gauss-Newton with a central-difference Jacobian. Never accepts a
/// step that increases the cost. Returns with converged == false instead of
/// throwing; callers decide.
FitResult levenberg_marquardt(const ResidualFn& residuals, Eigen::VectorXd x0, const LmOptions& opts = {});

struct NelderMeadOptions {
  int max_iterations = 20000;
  double initial_step = 0.1;
  double f_tol = 1e-12;
  double x_tol = 1e-10;
};

FitResult nelder_mead(const ObjectiveFn& f, const Eigen::VectorXd& x0, const NelderMeadOptions& opts = {});

}  // namespace sagnac
