#include "fracopt/optim.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace fracopt {

BoxConstraints::BoxConstraints(Eigen::VectorXd lo, Eigen::VectorXd up)
    : lower(std::move(lo)), upper(std::move(up)) {
  if (lower.size() != upper.size())
    throw std::invalid_argument("BoxConstraints: bound dimensions differ");
  for (Eigen::Index i = 0; i < lower.size(); ++i)
    if (lower(i) > upper(i)) throw std::invalid_argument("BoxConstraints: lower > upper");
}

BoxConstraints BoxConstraints::unbounded(int n) {
  const double inf = std::numeric_limits<double>::infinity();
  return {Eigen::VectorXd::Constant(n, -inf), Eigen::VectorXd::Constant(n, inf)};
}

BoxConstraints BoxConstraints::nonnegative(int n) {
  const double inf = std::numeric_limits<double>::infinity();
  return {Eigen::VectorXd::Zero(n), Eigen::VectorXd::Constant(n, inf)};
}

Eigen::VectorXd project_box(const Eigen::VectorXd& x, const BoxConstraints& box) {
  return x.cwiseMax(box.lower).cwiseMin(box.upper);
}

OptimResult bfgs_minimize(const Objective& objective, const Eigen::VectorXd& x0,
                          const BoxConstraints& box, double tol, int max_iter) {
  const int n = static_cast<int>(x0.size());
  if (box.lower.size() != n) throw std::invalid_argument("bfgs_minimize: box dimension mismatch");

  constexpr double kC1 = 1e-4;
  constexpr int kMaxBacktracks = 50;

  OptimResult res;
  Eigen::VectorXd x = project_box(x0, box);
  Eigen::VectorXd grad(n);
  double J = objective(x, grad);
  Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n);

  for (int it = 0; it < max_iter; ++it) {
    const double pg = (x - project_box(x - grad, box)).norm();
    res.pg_norm_history.push_back(pg);
    res.objective_history.push_back(J);
    if (pg <= tol) {
      res.converged = true;
      break;
    }

    Eigen::VectorXd d = -(H * grad);
    if (d.dot(grad) >= 0.0) d = -grad;  // safeguard: fall back to steepest descent

    double alpha = 1.0;
    Eigen::VectorXd x_new, g_new(n);
    double J_new = J;
    int backtracks = 0;
    bool accepted = false;
    for (; backtracks <= kMaxBacktracks; ++backtracks) {
      x_new = project_box(x + alpha * d, box);
      const Eigen::VectorXd step = x_new - x;
      if (step.norm() == 0.0) break;  // projection collapsed the step
      J_new = objective(x_new, g_new);
      if (J_new <= J + kC1 * grad.dot(step)) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    res.line_search_steps.push_back(backtracks);
    res.iterations = it + 1;

    if (!accepted) {
      res.line_search_failed = true;
      res.iterations = it;
      break;
    }

    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd y = g_new - grad;
    x = x_new;
    J = J_new;
    grad = g_new;

    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      const double rho = 1.0 / sy;
      const Eigen::VectorXd Hy = H * y;
      // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
      H -= rho * (s * Hy.transpose() + Hy * s.transpose());
      H += rho * (rho * y.dot(Hy) + 1.0) * (s * s.transpose());
      H = 0.5 * (H + H.transpose());  // keep symmetric against drift
    }
  }
  res.x = x;
  res.value = J;
  if (res.objective_history.empty()) {
    res.objective_history.push_back(J);
    res.pg_norm_history.push_back((x - project_box(x - grad, box)).norm());
  }
  res.iterations = static_cast<int>(res.objective_history.size());
  return res;
}

double fd_gradient_check(const Objective& objective, const Eigen::VectorXd& x, double h_fd) {
  if (!(h_fd > 0.0)) throw std::invalid_argument("fd_gradient_check: h must be positive");
  const int n = static_cast<int>(x.size());
  Eigen::VectorXd grad(n);
  objective(x, grad);
  double worst = 0.0;
  Eigen::VectorXd tmp(n);
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += h_fd;
    xm(i) -= h_fd;
    const double fp = objective(xp, tmp);
    const double fm = objective(xm, tmp);
    const double fd = (fp - fm) / (2.0 * h_fd);
    const double denom = std::max({std::abs(grad(i)), std::abs(fd), 1e-12});
    worst = std::max(worst, std::abs(fd - grad(i)) / denom);
  }
  return worst;
}

void write_iteration_log_csv(const OptimResult& result, const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("write_iteration_log_csv: cannot open " + path);
  std::fprintf(fp, "iter,J,pg_norm,step\n");
  for (std::size_t i = 0; i < result.objective_history.size(); ++i) {
    const int ls = i < result.line_search_steps.size() ? result.line_search_steps[i] : 0;
    std::fprintf(fp, "%zu,%.17g,%.17g,%d\n", i, result.objective_history[i],
                 result.pg_norm_history[i], ls);
  }
  std::fclose(fp);
}

}  // namespace fracopt
