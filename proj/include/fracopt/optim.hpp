#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

namespace fracopt {

/// Componentwise bounds; +-infinity allowed.
struct BoxConstraints {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  BoxConstraints(Eigen::VectorXd lo, Eigen::VectorXd up);

  static BoxConstraints unbounded(int n);
  static BoxConstraints nonnegative(int n);
};

Eigen::VectorXd project_box(const Eigen::VectorXd& x, const BoxConstraints& box);

/// Objective oracle: returns the value and fills the gradient.
using Objective = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

struct OptimResult {
  Eigen::VectorXd x;
  double value = 0.0;
  int iterations = 0;
  std::vector<double> objective_history;
  std::vector<double> pg_norm_history;
  std::vector<int> line_search_steps;
  bool converged = false;
  bool line_search_failed = false;
};

/// Projected BFGS with Armijo backtracking. The quasi-Newton direction is
/// built on the full space; projection is applied inside the line search
/// (project-then-evaluate) and curvature pairs use the projected iterates.
/// Stops when ||x - P(x - grad)|| <= tol or after max_iter iterations.
/// Line-search parameters: alpha0 = 1, backtrack 0.5, c1 = 1e-4, 50 backtracks.
OptimResult bfgs_minimize(const Objective& objective, const Eigen::VectorXd& x0,
                          const BoxConstraints& box, double tol = 1e-8, int max_iter = 500);

/// Worst relative componentwise error between the oracle gradient and central
/// finite differences with step h_fd.
double fd_gradient_check(const Objective& objective, const Eigen::VectorXd& x, double h_fd);

/// CSV: `iter,J,pg_norm,step`.
void write_iteration_log_csv(const OptimResult& result, const std::string& path);

}  // namespace fracopt
