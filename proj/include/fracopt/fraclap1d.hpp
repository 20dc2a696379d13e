#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fracopt/types.hpp"

namespace fracopt {

/// Uniform grid on the computational set Omega~ = (collar_lo, collar_hi)
/// containing Omega = (omega_lo, omega_hi). Unknowns ("active" nodes) are the
/// nodes strictly inside Omega~; the trivial extension by zero applies beyond.
/// Nodes at the Omega endpoints a, b belong to the exterior set (data lives on
/// R \ Omega, which is closed).
struct Grid1D {
  double collar_lo, omega_lo, omega_hi, collar_hi;  // A < a < b < B
  double h;
  std::vector<double> nodes;        // active nodes, A + h, ..., B - h
  std::vector<int> interior;        // indices into nodes with a < x < b
  std::vector<int> exterior;        // indices with x <= a or x >= b

  static Grid1D make(double a, double b, double A, double B, double h);
  static Grid1D make_default(double h) { return make(-1.0, 1.0, -2.0, 2.0, h); }

  int n_active() const { return static_cast<int>(nodes.size()); }
  bool is_interior(int k) const {
    return nodes[static_cast<std::size_t>(k)] > omega_lo && nodes[static_cast<std::size_t>(k)] < omega_hi;
  }
};

/// Assembled bilinear form of the integral fractional Laplacian over the
/// active hat functions (trivially extended by zero). The full matrix is the
/// whole-line interaction, so the contribution of R \ Omega~ (the analytic
/// tail) is folded in exactly; `tail` records the per-node tail weight
/// tau(x) = C_{1,s}/(2s) [(B-x)^{-2s} + (x-A)^{-2s}] for diagnostics.
struct NonlocalMatrix {
  FracOrder s;
  Grid1D grid;
  Eigen::MatrixXd full;        // n_active x n_active, symmetric Toeplitz
  std::vector<double> tail;    // tau at active nodes

  Eigen::MatrixXd block_II() const;
  Eigen::MatrixXd block_IE() const;
  Eigen::MatrixXd block_EE() const;
};

NonlocalMatrix assemble_stiffness(const Grid1D& grid, FracOrder s);

/// Exterior-exterior correction E[i][j] = (C/2) iint_{(R\Omega)^2}
/// (phi_i(x)-phi_i(y))(phi_j(x)-phi_j(y)) |x-y|^{-1-2s} dxdy over exterior
/// hats (restricted to R \ Omega). Subtracting it from the full form yields
/// the form restricted to R^2 \ (R\Omega)^2 used by the Robin problem and the
/// nonlocal integration-by-parts identity.
Eigen::MatrixXd exterior_exterior_correction(const Grid1D& grid, FracOrder s);

/// Piecewise-linear field on the active nodes, zero beyond Omega~.
struct DiscreteField {
  Grid1D grid;
  Eigen::VectorXd values;  // at active nodes

  double eval(double x) const;
  Eigen::VectorXd interior_values() const;
};

/// Robin penalization parameters: n kappa (u - z) balances the nonlocal
/// normal derivative on the exterior. kappa is sampled at exterior nodes
/// (piecewise linear, zero at the Omega~ endpoints) and must be positive on
/// at least one exterior element.
struct RobinConfig {
  double n;                      // penalty strength
  Eigen::VectorXd kappa;         // samples at grid.exterior nodes

  static RobinConfig constant(const Grid1D& grid, double n, double kappa_value = 1.0);
};

/// Dirichlet solve: A_II u_I = F - A_IE g. `f_interior` holds load samples at
/// interior nodes (piecewise-linear interpolant, endpoint values at a and b
/// linearly extrapolated so affine loads are reproduced exactly);
/// `g_exterior` holds the exterior data at exterior nodes.
DiscreteField solve_dirichlet(const NonlocalMatrix& mat, const Eigen::VectorXd& f_interior,
                              const Eigen::VectorXd& g_exterior);

/// Cached Robin operator: restricted form + n-weighted exterior kappa mass,
/// factored once. The same factorization serves forward and adjoint solves
/// (the operator is symmetric).
class RobinSystem {
 public:
  RobinSystem(const Grid1D& grid, FracOrder s, const RobinConfig& cfg);

  /// Solve with interior load samples and exterior data z.
  DiscreteField solve(const Eigen::VectorXd& f_interior, const Eigen::VectorXd& z_exterior) const;
  /// Solve for an arbitrary assembled right-hand side over active nodes.
  Eigen::VectorXd solve_raw(const Eigen::VectorXd& rhs) const;

  const Grid1D& grid() const { return grid_; }
  const NonlocalMatrix& matrix() const { return mat_; }
  const Eigen::MatrixXd& restricted_form() const { return restricted_; }
  /// Exterior kappa mass: (kappa phi_i, phi_j) over R \ Omega (collar elements).
  const Eigen::MatrixXd& kappa_mass() const { return kappa_mass_; }
  double penalty() const { return n_; }

 private:
  Grid1D grid_;
  NonlocalMatrix mat_;
  Eigen::MatrixXd restricted_;
  Eigen::MatrixXd kappa_mass_;
  double n_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
};

/// Generalized Robin solve (assembles a RobinSystem once and solves).
DiscreteField solve_robin(const Grid1D& grid, FracOrder s, const RobinConfig& cfg,
                          const Eigen::VectorXd& f_interior, const Eigen::VectorXd& z_exterior);

/// Nonlocal normal derivative N_s u(x) = C_{1,s} int_Omega (u(x)-u(y)) |x-y|^{-1-2s} dy
/// evaluated element-exactly for the piecewise-linear field at points strictly
/// outside the closure of Omega.
std::vector<double> nonlocal_normal_derivative(const DiscreteField& u, FracOrder s,
                                               const std::vector<double>& x_eval);

/// Residual of the nonlocal integration-by-parts identity
///   a_res(u, v) = int_Omega v (-Lap)^s u + int_{R \ Omega} v N_s u
/// for a field u with known (-Lap)^s u on Omega (callable `lap_u`).
double ibp_residual(const DiscreteField& u, const std::function<double(double)>& lap_u,
                    const DiscreteField& v, FracOrder s);

/// Very-weak identity diagnostic: max over probe fields v (vanishing outside
/// Omega) of |int_Omega u (-Lap)^s v - (f, v) + int_{Omega~ \ Omega} g N_s v|.
/// (-Lap)^s v is realized as the interior L2 projection M_II^{-1} (A v)_I;
/// N_s v is evaluated element-exactly, independent of the stiffness matrix.
double very_weak_residual(const DiscreteField& u, const Eigen::VectorXd& f_interior,
                          const Eigen::VectorXd& g_exterior,
                          const std::vector<DiscreteField>& probes, FracOrder s,
                          const NonlocalMatrix& mat);

/// Interior mass matrix (piecewise-linear, tridiagonal) and L2(Omega) norm of
/// interior nodal data.
Eigen::MatrixXd interior_mass(const Grid1D& grid);
double l2_norm_interior(const Grid1D& grid, const Eigen::VectorXd& interior_values);

/// Torsion pair: u(x) = c_s (1 - x^2)_+^s solves (-Lap)^s u = 1 on (-1,1) with
/// zero exterior data, c_s = Gamma(1/2) / (4^s Gamma(s+1/2) Gamma(s+1)).
double torsion_constant(FracOrder s);
std::function<double(double)> torsion_exact(FracOrder s);

struct RateReport {
  std::vector<double> param;   // h or n
  std::vector<double> error;
  double slope = 0.0;          // least-squares slope in log-log
};

double fit_loglog_slope(const std::vector<double>& param, const std::vector<double>& error);

/// Dirichlet torsion refinement study over meshes h = 1/hinv (at least 3 levels).
RateReport dirichlet_torsion_study(FracOrder s, const std::vector<int>& hinvs);

/// Robin -> Dirichlet sweep in n at a fixed mesh (at least 3 values).
RateReport robin_n_study(FracOrder s, int hinv, const std::vector<double>& ns,
                         const std::function<double(double)>& g);

void write_matrix_csv(const Eigen::MatrixXd& m, const std::string& path);
void write_field_csv(const DiscreteField& u, const std::string& path);
void write_rate_csv(const RateReport& r, const std::string& path);

}  // namespace fracopt
