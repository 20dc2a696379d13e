#include "fracopt/caputo.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "fracopt/specialfn.hpp"

namespace fracopt {

CaputoWeights l1_weights(TimeOrder gamma, int count) {
  if (count < 1) throw std::invalid_argument("l1_weights: count must be >= 1");
  CaputoWeights cw{gamma, std::vector<double>(static_cast<std::size_t>(count) + 1)};
  cw.w[0] = 1.0;
  const double e = 1.0 - gamma.gamma;
  for (int m = 1; m <= count; ++m)
    cw.w[static_cast<std::size_t>(m)] = std::pow(m + 1.0, e) - std::pow(static_cast<double>(m), e);
  return cw;
}

std::vector<double> Trajectory::component(int d) const {
  std::vector<double> out(states.size());
  for (std::size_t j = 0; j < states.size(); ++j) out[j] = states[j](d);
  return out;
}

Trajectory solve_fivp(const RhsFn& rhs, const Eigen::VectorXd& u0, const TimeGrid& grid,
                      TimeOrder gamma) {
  const int n = grid.n_steps;
  const int dim = static_cast<int>(u0.size());
  const double tau = grid.tau();
  // gamma = 1: coefficient is exactly tau and all history weights vanish, so
  // the loop reproduces explicit Euler bitwise.
  const double coef =
      gamma.is_classical() ? tau : std::pow(tau, gamma.gamma) * gamma_fn(2.0 - gamma.gamma);
  const CaputoWeights cw = l1_weights(gamma, n);

  Trajectory traj{grid, dim, {}};
  traj.states.reserve(static_cast<std::size_t>(n) + 1);
  traj.states.push_back(u0);

  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd& uj = traj.states[static_cast<std::size_t>(j)];
    Eigen::VectorXd fj = rhs(uj);
    if (fj.size() != dim) throw std::invalid_argument("solve_fivp: rhs dimension mismatch");
    Eigen::VectorXd next(dim);
    if (gamma.is_classical()) {
      next = uj + coef * fj;
    } else {
      Eigen::VectorXd hist = Eigen::VectorXd::Zero(dim);
      for (int k = 0; k < j; ++k)
        hist += cw.a(j - k) * (traj.states[static_cast<std::size_t>(k) + 1] -
                               traj.states[static_cast<std::size_t>(k)]);
      next = uj - hist + coef * fj;
    }
    if (!next.allFinite() || next.cwiseAbs().maxCoeff() > 1e12)
      throw numerics_error("solve_fivp: state diverged at step " + std::to_string(j + 1));
    traj.states.push_back(std::move(next));
  }
  return traj;
}

std::vector<double> rl_integral_right(const std::vector<double>& f, TimeOrder gamma,
                                      const TimeGrid& grid) {
  const int n = grid.n_steps;
  if (static_cast<int>(f.size()) != n + 1)
    throw std::invalid_argument("rl_integral_right: sample count must equal n_steps + 1");
  const double g = gamma.gamma;
  const double tau = grid.tau();
  const double inv_g1 = 1.0 / gamma_fn(g + 1.0);
  const double inv_g2 = 1.0 / gamma_fn(g + 2.0);
  std::vector<double> out(static_cast<std::size_t>(n) + 1, 0.0);

  // I(t_j) = 1/Gamma(g) sum_{k>=j} int_{t_k}^{t_{k+1}} (r - t_j)^{g-1} (linear f) dr.
  // With d0 = t_k - t_j, d1 = t_{k+1} - t_j and f linear on the cell:
  //   int (r-t)^{g-1} f dr = f_k (d1^g - d0^g)/(g Gamma(g))
  //                        + slope * (d1^{g+1} - d0^{g+1})/(g(g+1)Gamma(g)) - slope*d0*(...)
  // written below via Gamma(g+1), Gamma(g+2) factors.
  for (int j = 0; j <= n; ++j) {
    double acc = 0.0;
    for (int k = j; k < n; ++k) {
      const double d0 = (k - j) * tau;
      const double d1 = (k - j + 1) * tau;
      const double fk = f[static_cast<std::size_t>(k)];
      const double slope = (f[static_cast<std::size_t>(k) + 1] - fk) / tau;
      const double p0 = std::pow(d0, g), p1 = std::pow(d1, g);
      const double q0 = std::pow(d0, g + 1.0), q1 = std::pow(d1, g + 1.0);
      // f(r) = fk + slope (r - t_k) = (fk - slope d0) + slope (r - t_j)  [shifted]
      acc += (fk - slope * d0) * (p1 - p0) * inv_g1 + slope * (q1 - q0) * g * inv_g2;
    }
    out[static_cast<std::size_t>(j)] = acc;
  }
  return out;
}

std::vector<double> caputo_l1_derivative(const std::vector<double>& u, TimeOrder gamma,
                                         const TimeGrid& grid) {
  const int n = grid.n_steps;
  if (static_cast<int>(u.size()) != n + 1)
    throw std::invalid_argument("caputo_l1_derivative: sample count must equal n_steps + 1");
  const double tau = grid.tau();
  const CaputoWeights cw = l1_weights(gamma, n);
  const double scale = gamma.is_classical()
                           ? 1.0 / tau
                           : std::pow(tau, -gamma.gamma) / gamma_fn(2.0 - gamma.gamma);
  std::vector<double> out(static_cast<std::size_t>(n) + 1, 0.0);
  for (int j = 1; j <= n; ++j) {
    double acc = 0.0;
    for (int k = 0; k < j; ++k)
      acc += cw.a(j - k - 1) * (u[static_cast<std::size_t>(k) + 1] - u[static_cast<std::size_t>(k)]);
    out[static_cast<std::size_t>(j)] = scale * acc;
  }
  return out;
}

double ipf_residual(const std::vector<double>& u, const std::vector<double>& v, TimeOrder gamma,
                    const TimeGrid& grid) {
  const int n = grid.n_steps;
  if (u.size() != v.size() || static_cast<int>(u.size()) != n + 1)
    throw std::invalid_argument("ipf_residual: trajectories must share the grid");
  const double tau = grid.tau();

  const std::vector<double> du = caputo_l1_derivative(u, gamma, grid);
  double lhs = 0.0;
  for (int j = 0; j <= n; ++j) {
    const double wq = (j == 0 || j == n) ? 0.5 * tau : tau;
    lhs += wq * v[static_cast<std::size_t>(j)] * du[static_cast<std::size_t>(j)];
  }

  // int_0^T (d^gamma_{t,T} v) u dt + [(I^{1-gamma} v) u]_0^T == int_0^T (I^{1-gamma} v) u' dt
  std::vector<double> I;
  if (gamma.is_classical()) {
    I = v;  // I^0 is the identity
  } else {
    I = rl_integral_right(v, TimeOrder(1.0 - gamma.gamma), grid);
  }
  double rhs = 0.0;
  for (int j = 0; j < n; ++j) {
    const double uprime = u[static_cast<std::size_t>(j) + 1] - u[static_cast<std::size_t>(j)];
    rhs += 0.5 * (I[static_cast<std::size_t>(j)] + I[static_cast<std::size_t>(j) + 1]) * uprime;
  }
  return std::abs(lhs - rhs);
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("write_trajectory_csv: cannot open " + path);
  std::fprintf(fp, "t");
  for (int d = 0; d < traj.dim; ++d) std::fprintf(fp, ",u_%d", d);
  std::fprintf(fp, "\n");
  for (int j = 0; j <= traj.grid.n_steps; ++j) {
    std::fprintf(fp, "%.17g", traj.grid.node(j));
    for (int d = 0; d < traj.dim; ++d)
      std::fprintf(fp, ",%.17g", traj.states[static_cast<std::size_t>(j)](d));
    std::fprintf(fp, "\n");
  }
  std::fclose(fp);
}

}  // namespace fracopt
