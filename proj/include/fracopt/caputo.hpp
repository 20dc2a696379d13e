#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "fracopt/types.hpp"

namespace fracopt {

/// Uniform time grid on [0, T] with nodes t_j = j tau, tau = T / n_steps.
struct TimeGrid {
  double T;
  int n_steps;

  TimeGrid(double final_time, int steps) : T(final_time), n_steps(steps) {
    if (!(T > 0.0)) throw std::invalid_argument("TimeGrid: T must be positive");
    if (steps < 1) throw std::invalid_argument("TimeGrid: n_steps must be >= 1");
  }

  double tau() const { return T / n_steps; }
  double node(int j) const { return j * tau(); }
};

/// L1 weights w_m = (m+1)^{1-gamma} - m^{1-gamma}. The stepping scheme uses
/// w_m for m = 1..count (the spec's a_k); the discrete Caputo derivative also
/// uses w_0 = 1.
struct CaputoWeights {
  TimeOrder gamma;
  std::vector<double> w;  // w[m], m = 0..count

  double a(int k) const { return w[static_cast<std::size_t>(k)]; }
};

CaputoWeights l1_weights(TimeOrder gamma, int count);

using RhsFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Time grid plus full state history of a Caputo IVP solve.
struct Trajectory {
  TimeGrid grid;
  int dim;
  std::vector<Eigen::VectorXd> states;  // size n_steps + 1, states[0] = u0

  std::vector<double> component(int d) const;
};

/// Explicit L1 stepping for d_t^gamma u = f(u), u(0) = u0:
///   u_{j+1} = u_j - sum_{k=0}^{j-1} a_{j-k} (u_{k+1} - u_k) + tau^gamma Gamma(2-gamma) f(u_j).
/// Keeps the full history (the scheme needs it). Aborts with numerics_error
/// when any state component exceeds 1e12 in magnitude or turns non-finite.
Trajectory solve_fivp(const RhsFn& rhs, const Eigen::VectorXd& u0, const TimeGrid& grid,
                      TimeOrder gamma);

/// Right Riemann-Liouville fractional integral I^gamma_{t,T} f at every node,
/// computed by piecewise-linear reconstruction of the samples and exact
/// per-subinterval moment integration of (r - t)^{gamma-1}.
std::vector<double> rl_integral_right(const std::vector<double>& f, TimeOrder gamma,
                                      const TimeGrid& grid);

/// Discrete Caputo derivative of sampled data at every node (L1 form; exact
/// for the piecewise-linear interpolant). Value at t_0 is 0.
std::vector<double> caputo_l1_derivative(const std::vector<double>& u, TimeOrder gamma,
                                         const TimeGrid& grid);

/// Residual of the Caputo integration-by-parts identity
///   int_0^T v (cD^gamma u) dt = int_0^T (d^gamma_{t,T} v) u dt + [(I^{1-gamma}_{t,T} v) u]_0^T
/// for scalar trajectories u, v on the same grid. The right-hand side is
/// evaluated in the equivalent form int_0^T (I^{1-gamma}_{t,T} v) u' dt (the
/// boundary bracket absorbed analytically), with rl_integral_right and
/// trapezoidal time quadrature.
double ipf_residual(const std::vector<double>& u, const std::vector<double>& v, TimeOrder gamma,
                    const TimeGrid& grid);

/// CSV export: header `t,u_0,...,u_{dim-1}`, one row per node, 17 significant digits.
void write_trajectory_csv(const Trajectory& traj, const std::string& path);

}  // namespace fracopt
