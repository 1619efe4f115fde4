#include "sagnac/fit.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace sagnac {

namespace {

Eigen::MatrixXd jacobian(const ResidualFn& f, const Eigen::VectorXd& x, Eigen::Index m) {
  Eigen::MatrixXd J(m, x.size());
  Eigen::VectorXd xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(j)));
    xp(j) = x(j) + h;
    const Eigen::VectorXd fp = f(xp);
    xp(j) = x(j) - h;
    const Eigen::VectorXd fm = f(xp);
    xp(j) = x(j);
    J.col(j) = (fp - fm) / (2.0 * h);
  }
  return J;
}

bool finite(const Eigen::VectorXd& v) { return v.allFinite(); }

}  // namespace

FitResult levenberg_marquardt(const ResidualFn& residuals, Eigen::VectorXd x, const LmOptions& opts) {
  FitResult out;
  Eigen::VectorXd r = residuals(x);
  if (!finite(r)) {
    out.x = x;
    out.cost = std::numeric_limits<double>::infinity();
    out.reason = "non-finite residuals at the initial point";
    return out;
  }
  double cost = 0.5 * r.squaredNorm();
  double lambda = opts.initial_lambda;

  for (int it = 0; it < opts.max_iterations; ++it) {
    out.iterations = it + 1;
    const Eigen::MatrixXd J = jacobian(residuals, x, r.size());
    const Eigen::VectorXd g = J.transpose() * r;
    if (g.lpNorm<Eigen::Infinity>() < opts.gradient_tol) {
      out.converged = true;
      out.reason = "gradient";
      break;
    }
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    bool accepted = false;
    for (int inner = 0; inner < 40; ++inner) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal() += lambda * JtJ.diagonal().cwiseMax(1e-12);
      const Eigen::VectorXd step = A.ldlt().solve(-g);
      if (!finite(step)) {
        lambda *= 10.0;
        continue;
      }
      const Eigen::VectorXd x_new = x + step;
      const Eigen::VectorXd r_new = residuals(x_new);
      const double cost_new = finite(r_new) ? 0.5 * r_new.squaredNorm() : std::numeric_limits<double>::infinity();
      if (cost_new < cost) {
        const double decrease = cost - cost_new;
        const double step_norm = step.norm();
        x = x_new;
        r = r_new;
        cost = cost_new;
        lambda = std::max(lambda / 3.0, 1e-15);
        accepted = true;
        if (decrease <= opts.cost_tol * std::max(cost, 1e-300) ||
            step_norm <= opts.step_tol * (x.norm() + opts.step_tol)) {
          out.converged = true;
          out.reason = decrease <= opts.cost_tol * std::max(cost, 1e-300) ? "cost" : "step";
        }
        break;
      }
      lambda *= 4.0;
      if (lambda > 1e16) break;
    }
    if (out.converged) break;
    if (!accepted) {
      // No descent direction left at machine precision: a stationary point.
      out.converged = true;
      out.reason = "no further decrease";
      break;
    }
  }
  if (!out.converged) out.reason = "iteration limit";
  out.x = x;
  out.cost = cost;
  return out;
}

FitResult nelder_mead(const ObjectiveFn& f, const Eigen::VectorXd& x0, const NelderMeadOptions& opts) {
  const Eigen::Index n = x0.size();
  std::vector<Eigen::VectorXd> simplex(n + 1, x0);
  std::vector<double> values(n + 1);
  for (Eigen::Index j = 0; j < n; ++j)
    simplex[j + 1](j) += opts.initial_step * std::max(1.0, std::abs(x0(j)));
  for (Eigen::Index k = 0; k <= n; ++k) values[k] = f(simplex[k]);

  FitResult out;
  std::vector<std::size_t> order(n + 1);
  for (int it = 0; it < opts.max_iterations; ++it) {
    out.iterations = it + 1;
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
    double spread = 0.0;
    for (Eigen::Index k = 0; k <= n; ++k) spread = std::max(spread, (simplex[k] - simplex[best]).lpNorm<Eigen::Infinity>());
    if (std::abs(values[worst] - values[best]) <= opts.f_tol * (std::abs(values[best]) + opts.f_tol) &&
        spread <= opts.x_tol * (simplex[best].lpNorm<Eigen::Infinity>() + opts.x_tol)) {
      out.converged = true;
      out.reason = "simplex collapsed";
      break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (Eigen::Index k = 0; k <= n; ++k)
      if (static_cast<std::size_t>(k) != worst) centroid += simplex[k];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd xr = centroid + (centroid - simplex[worst]);
    const double fr = f(xr);
    if (fr < values[best]) {
      const Eigen::VectorXd xe = centroid + 2.0 * (centroid - simplex[worst]);
      const double fe = f(xe);
      if (fe < fr) {
        simplex[worst] = xe;
        values[worst] = fe;
      } else {
        simplex[worst] = xr;
        values[worst] = fr;
      }
      continue;
    }
    if (fr < values[second]) {
      simplex[worst] = xr;
      values[worst] = fr;
      continue;
    }
    const bool outside = fr < values[worst];
    const Eigen::VectorXd xc = outside ? Eigen::VectorXd(centroid + 0.5 * (xr - centroid))
                                       : Eigen::VectorXd(centroid + 0.5 * (simplex[worst] - centroid));
    const double fc = f(xc);
    if (fc < std::min(fr, values[worst])) {
      simplex[worst] = xc;
      values[worst] = fc;
      continue;
    }
    for (Eigen::Index k = 0; k <= n; ++k) {
      if (static_cast<std::size_t>(k) == best) continue;
      simplex[k] = simplex[best] + 0.5 * (simplex[k] - simplex[best]);
      values[k] = f(simplex[k]);
    }
  }
  if (!out.converged) out.reason = "iteration limit";
  const auto it = std::min_element(values.begin(), values.end());
  out.x = simplex[static_cast<std::size_t>(it - values.begin())];
  out.cost = *it;
  return out;
}

}  // namespace sagnac
