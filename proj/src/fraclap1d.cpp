#include "fracopt/fraclap1d.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "fracopt/detail/gauss.hpp"
#include "fracopt/specialfn.hpp"

namespace fracopt {

namespace {

constexpr double kLogBranchTol = 1e-9;

// Fourth antiderivative of |t|^{-1-2s}:
//   psi_s(d) = d^{3-2s} / [(2s)(2s-1)(2s-2)(2s-3)],
// with the s = 1/2 limit psi(d) = d^2/4 - (d^2/2) log d (the divergent pure-d^2
// part of the limit is annihilated by the assembly stencil).
double psi_kernel(double d, double s) {
  if (d == 0.0) return 0.0;
  if (std::abs(2.0 * s - 1.0) < kLogBranchTol) return 0.25 * d * d - 0.5 * d * d * std::log(d);
  const double den = (2.0 * s) * (2.0 * s - 1.0) * (2.0 * s - 2.0) * (2.0 * s - 3.0);
  return std::pow(d, 3.0 - 2.0 * s) / den;
}

// int_{t0}^{t1} t^e dt with the log branch at e = -1; requires t1 >= t0 >= 0,
// and t0 > 0 whenever e <= -1.
double pow_int(double e, double t0, double t1) {
  if (std::abs(e + 1.0) < kLogBranchTol) return std::log(t1) - std::log(t0);
  const double ep = e + 1.0;
  const double a = t0 == 0.0 ? 0.0 : std::pow(t0, ep);
  const double b = t1 == 0.0 ? 0.0 : std::pow(t1, ep);
  return (b - a) / ep;
}

struct Interval {
  double lo, hi;
};

}  // namespace

Grid1D Grid1D::make(double a, double b, double A, double B, double h) {
  if (!(A < a && a < b && b < B)) throw std::invalid_argument("Grid1D: need A < a < b < B");
  if (!(h > 0.0)) throw std::invalid_argument("Grid1D: h must be positive");
  auto on_grid = [&](double x) {
    const double k = (x - A) / h;
    return std::abs(k - std::round(k)) < 1e-9;
  };
  if (!on_grid(a) || !on_grid(b) || !on_grid(B))
    throw std::invalid_argument("Grid1D: a, b, B must coincide with grid nodes");
  Grid1D g;
  g.collar_lo = A;
  g.omega_lo = a;
  g.omega_hi = b;
  g.collar_hi = B;
  g.h = h;
  const int m = static_cast<int>(std::round((B - A) / h));
  for (int k = 1; k < m; ++k) {
    const double x = A + k * h;
    g.nodes.push_back(x);
    const int idx = static_cast<int>(g.nodes.size()) - 1;
    if (x > a + 1e-12 * h && x < b - 1e-12 * h)
      g.interior.push_back(idx);
    else
      g.exterior.push_back(idx);
  }
  if (g.interior.size() < 4 || g.exterior.size() < 4)
    throw std::invalid_argument("Grid1D: need at least 4 interior and 4 exterior nodes");
  return g;
}

NonlocalMatrix assemble_stiffness(const Grid1D& grid, FracOrder s) {
  const int n = grid.n_active();
  const double h = grid.h;
  const double C = cns_constant(1, s);

  // Whole-line interaction of two hats at lag m, from the quartic stencil of
  // psi_s: a(phi_i, phi_j) = -C/h^2 sum_r c_r psi(|m+r| h), c = (1,-4,6,-4,1).
  std::vector<double> lag(static_cast<std::size_t>(n) + 2, 0.0);
  static constexpr int kOff[5] = {-2, -1, 0, 1, 2};
  static constexpr double kC[5] = {1.0, -4.0, 6.0, -4.0, 1.0};
  for (int m = 0; m < n + 2; ++m) {
    double acc = 0.0;
    for (int r = 0; r < 5; ++r) acc += kC[r] * psi_kernel(std::abs(m + kOff[r]) * h, s.s);
    lag[static_cast<std::size_t>(m)] = -C / (h * h) * acc;
  }

  NonlocalMatrix mat{s, grid, Eigen::MatrixXd(n, n), {}};
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) mat.full(i, j) = lag[static_cast<std::size_t>(std::abs(i - j))];

  mat.tail.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double x = grid.nodes[static_cast<std::size_t>(k)];
    mat.tail[static_cast<std::size_t>(k)] =
        C / (2.0 * s.s) *
        (std::pow(grid.collar_hi - x, -2.0 * s.s) + std::pow(x - grid.collar_lo, -2.0 * s.s));
  }

  // self-validation: finite entries, positive diagonal, off-diagonals negative
  if (!mat.full.allFinite() || lag[0] <= 0.0)
    throw numerics_error("assemble_stiffness: self-validation failed (non-finite or bad diagonal)");
  for (int m = 1; m < n + 2; ++m)
    if (lag[static_cast<std::size_t>(m)] >= 0.0)
      throw numerics_error("assemble_stiffness: self-validation failed (off-diagonal sign)");
  return mat;
}

Eigen::MatrixXd NonlocalMatrix::block_II() const {
  const auto& I = grid.interior;
  Eigen::MatrixXd out(I.size(), I.size());
  for (std::size_t p = 0; p < I.size(); ++p)
    for (std::size_t q = 0; q < I.size(); ++q) out(p, q) = full(I[p], I[q]);
  return out;
}

Eigen::MatrixXd NonlocalMatrix::block_IE() const {
  const auto& I = grid.interior;
  const auto& E = grid.exterior;
  Eigen::MatrixXd out(I.size(), E.size());
  for (std::size_t p = 0; p < I.size(); ++p)
    for (std::size_t q = 0; q < E.size(); ++q) out(p, q) = full(I[p], E[q]);
  return out;
}

Eigen::MatrixXd NonlocalMatrix::block_EE() const {
  const auto& E = grid.exterior;
  Eigen::MatrixXd out(E.size(), E.size());
  for (std::size_t p = 0; p < E.size(); ++p)
    for (std::size_t q = 0; q < E.size(); ++q) out(p, q) = full(E[p], E[q]);
  return out;
}

namespace {

// ---- closed forms for the exterior-exterior (R\Omega)^2 interaction ----
//
// Same-side contributions use the representation
//   iint_{L^2} (f(x)-f(y))(g(x)-g(y)) K dxdy = iint f'(u) g'(v) mu_L(u,v) du dv
// with mu_L(u,v) = [ (c-m)^sig - (M-m)^sig ] / (s sig),  sig = 1-2s,
// m = min(u,v), M = max(u,v), c the collar's inner endpoint, and the log form
// [ log(c-m) - log(M-m) ] / s at s = 1/2.

// iint_{e1 x e2} |u-v|^sig du dv over two grid elements (same or disjoint).
double j2_pair(Interval e1, Interval e2, double sig) {
  const bool log_case = std::abs(sig) < kLogBranchTol;
  if (std::abs(e1.lo - e2.lo) < 1e-14) {  // same element
    const double hh = e1.hi - e1.lo;
    if (log_case) return hh * hh * std::log(hh) - 1.5 * hh * hh;
    return 2.0 * std::pow(hh, sig + 2.0) / ((sig + 1.0) * (sig + 2.0));
  }
  Interval lo = e1, hi = e2;
  if (e1.lo > e2.lo) std::swap(lo, hi);
  auto pp = [&](double t) {
    if (t <= 0.0) return 0.0;
    if (log_case) return t * t * (2.0 * std::log(t) - 3.0) / 4.0;
    return std::pow(t, sig + 2.0) / ((sig + 1.0) * (sig + 2.0));
  };
  return pp(hi.hi - lo.lo) - pp(hi.lo - lo.lo) - pp(hi.hi - lo.hi) + pp(hi.lo - lo.hi);
}

// iint_{e1 x e2} (c - min(u,v))^sig du dv, all coordinates <= c.
double j1_pair(double c, Interval e1, Interval e2, double sig) {
  const bool log_case = std::abs(sig) < kLogBranchTol;
  if (std::abs(e1.lo - e2.lo) < 1e-14) {  // same element
    const double al = e1.lo, be = e1.hi, d = c - be;
    if (log_case) {
      auto G = [&](double t) {
        if (t <= 0.0) return 0.0;
        return t * t * (2.0 * std::log(t) - 1.0) / 4.0 - d * (t * std::log(t) - t);
      };
      return 2.0 * (G(c - al) - G(c - be));
    }
    const double t1 = c - be, t2 = c - al;
    const double i1 = (std::pow(t2, sig + 2.0) - (t1 == 0.0 ? 0.0 : std::pow(t1, sig + 2.0))) / (sig + 2.0);
    const double i0 = (std::pow(t2, sig + 1.0) - (t1 == 0.0 ? 0.0 : std::pow(t1, sig + 1.0))) / (sig + 1.0);
    return 2.0 * (i1 - d * i0);
  }
  Interval left = e1, right = e2;
  if (e1.lo > e2.lo) std::swap(left, right);
  const double w = right.hi - right.lo;
  if (log_case) {
    auto fa = [](double t) { return t > 0.0 ? t * std::log(t) - t : 0.0; };
    return w * (fa(c - left.lo) - fa(c - left.hi));
  }
  const double p1 = std::pow(c - left.lo, sig + 1.0);
  const double p0 = (c - left.hi) == 0.0 ? 0.0 : std::pow(c - left.hi, sig + 1.0);
  return w * (p1 - p0) / (sig + 1.0);
}

struct CollarGeom {
  std::vector<Interval> elems;  // collar elements
  double inner;                 // a (left collar) or b (right collar)
  bool left;
};

CollarGeom collar(const Grid1D& g, bool left) {
  CollarGeom cg;
  cg.left = left;
  cg.inner = left ? g.omega_lo : g.omega_hi;
  const double lo = left ? g.collar_lo : g.omega_hi;
  const double hi = left ? g.omega_lo : g.collar_hi;
  const int m = static_cast<int>(std::round((hi - lo) / g.h));
  for (int k = 0; k < m; ++k) cg.elems.push_back({lo + k * g.h, lo + (k + 1) * g.h});
  return cg;
}

double hat(double x, double c, double h) { return std::max(0.0, 1.0 - std::abs(x - c) / h); }

// slope of the hat at node c on element e (restricted to the collar)
double hat_slope(Interval e, double c, double h) {
  const double mid = 0.5 * (e.lo + e.hi);
  if (std::abs(mid - c) > h) return 0.0;
  return mid < c ? 1.0 / h : -1.0 / h;
}

}  // namespace

Eigen::MatrixXd exterior_exterior_correction(const Grid1D& grid, FracOrder s) {
  const double h = grid.h;
  const double ss = s.s;
  const double sig = 1.0 - 2.0 * ss;
  const double C = cns_constant(1, s);
  const bool log_case = std::abs(sig) < kLogBranchTol;
  const CollarGeom L = collar(grid, true);
  const CollarGeom R = collar(grid, false);

  const auto& ext = grid.exterior;
  const int ne = static_cast<int>(ext.size());
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(ne, ne);

  auto node_x = [&](int eidx) { return grid.nodes[static_cast<std::size_t>(ext[static_cast<std::size_t>(eidx)])]; };
  auto side_of = [&](double x) { return x <= grid.omega_lo + 1e-12 ? 0 : 1; };  // 0 = L, 1 = R

  // same-side singular part via mu closed forms; the right collar is mapped to
  // a left-type picture by reflection u -> -u.
  auto mu_pair = [&](double c, Interval e1, Interval e2) {
    if (log_case) return (j1_pair(c, e1, e2, 0.0) - j2_pair(e1, e2, 0.0)) / ss;
    return (j1_pair(c, e1, e2, sig) - j2_pair(e1, e2, sig)) / (ss * sig);
  };

  for (int I = 0; I < ne; ++I) {
    const double ci = node_x(I);
    for (int J = I; J < ne; ++J) {
      const double cj = node_x(J);
      const int si = side_of(ci), sj = side_of(cj);
      double tot = 0.0;

      if (si == sj) {
        const CollarGeom& cg = si == 0 ? L : R;
        for (const Interval& ep : cg.elems) {
          const double fp = hat_slope(ep, ci, h);
          if (fp == 0.0) continue;
          for (const Interval& eq : cg.elems) {
            const double gq = hat_slope(eq, cj, h);
            if (gq == 0.0) continue;
            Interval e1 = ep, e2 = eq;
            double c = cg.inner;
            if (si == 1) {  // reflect
              e1 = {-ep.hi, -ep.lo};
              e2 = {-eq.hi, -eq.lo};
              c = -cg.inner;
            }
            // reflected slopes flip sign; the product is unchanged
            tot += fp * gq * mu_pair(c, e1, e2);
          }
        }
        // cross-gap: both hats on one side, (f g)(x) against the kernel mass of
        // the opposite unbounded component
        if (std::abs(ci - cj) < 2.0 * h - 1e-12) {
          const CollarGeom& cg = si == 0 ? L : R;
          for (const Interval& e : cg.elems) {
            if (hat(0.5 * (e.lo + e.hi), ci, h) == 0.0 && hat(0.5 * (e.lo + e.hi), cj, h) == 0.0)
              continue;
            auto f = [&](double x) {
              const double rho = si == 0 ? std::pow(grid.omega_hi - x, -2.0 * ss)
                                         : std::pow(x - grid.omega_lo, -2.0 * ss);
              return hat(x, ci, h) * hat(x, cj, h) * rho / (2.0 * ss);
            };
            tot += 2.0 * detail::gauss16(f, e.lo, e.hi);
          }
        }
      } else {
        // opposite sides: -2 iint f(x) g(y) K(x-y) dx dy
        const double cl = si == 0 ? ci : cj;
        const double cr = si == 0 ? cj : ci;
        double cross = 0.0;
        for (const Interval& el : L.elems) {
          if (hat(0.5 * (el.lo + el.hi), cl, h) == 0.0) continue;
          for (const Interval& er : R.elems) {
            if (hat(0.5 * (er.lo + er.hi), cr, h) == 0.0) continue;
            auto outer = [&](double x) {
              auto inner = [&](double y) {
                return hat(x, cl, h) * hat(y, cr, h) * std::pow(y - x, -1.0 - 2.0 * ss);
              };
              return detail::gauss16(inner, er.lo, er.hi);
            };
            cross += detail::gauss16(outer, el.lo, el.hi);
          }
        }
        tot -= 2.0 * cross;
      }

      E(I, J) = E(J, I) = 0.5 * C * tot;
    }
  }
  return E;
}

double DiscreteField::eval(double x) const {
  if (x <= grid.collar_lo || x >= grid.collar_hi) return 0.0;
  const int n_cells = static_cast<int>(grid.nodes.size()) + 1;
  const double t = (x - grid.collar_lo) / grid.h;
  const int cell = std::clamp(static_cast<int>(t), 0, n_cells - 1);
  // full-grid node k is active index k-1; the Omega~ endpoints carry zero
  auto value_at = [&](int full_node) -> double {
    const int act = full_node - 1;
    if (act < 0 || act >= static_cast<int>(values.size())) return 0.0;
    return values(act);
  };
  const double x0 = grid.collar_lo + cell * grid.h;
  const double w = (x - x0) / grid.h;
  return (1.0 - w) * value_at(cell) + w * value_at(cell + 1);
}

Eigen::VectorXd DiscreteField::interior_values() const {
  Eigen::VectorXd out(grid.interior.size());
  for (std::size_t p = 0; p < grid.interior.size(); ++p) out(p) = values(grid.interior[p]);
  return out;
}

namespace {

// Load vector over all active hats from interior samples: piecewise-linear f
// on Omega with endpoint values linearly extrapolated (exact for affine f).
Eigen::VectorXd omega_load(const Grid1D& grid, const Eigen::VectorXd& f_interior) {
  const int ni = static_cast<int>(grid.interior.size());
  if (f_interior.size() != ni) throw std::invalid_argument("load: interior sample count mismatch");
  const double h = grid.h;
  const int n_omega = static_cast<int>(std::round((grid.omega_hi - grid.omega_lo) / h));
  // Omega node values: index 0..n_omega maps a..b
  std::vector<double> fv(static_cast<std::size_t>(n_omega) + 1);
  for (int k = 1; k < n_omega; ++k) fv[static_cast<std::size_t>(k)] = f_interior(k - 1);
  fv[0] = 2.0 * fv[1] - fv[2];
  fv[static_cast<std::size_t>(n_omega)] =
      2.0 * fv[static_cast<std::size_t>(n_omega) - 1] - fv[static_cast<std::size_t>(n_omega) - 2];

  Eigen::VectorXd F = Eigen::VectorXd::Zero(grid.n_active());
  for (int e = 0; e < n_omega; ++e) {
    const double x0 = grid.omega_lo + e * h, x1 = x0 + h;
    const double fl = fv[static_cast<std::size_t>(e)], fr = fv[static_cast<std::size_t>(e) + 1];
    for (int k = 0; k < grid.n_active(); ++k) {
      const double xk = grid.nodes[static_cast<std::size_t>(k)];
      if (xk <= x0 - h || xk >= x1 + h) continue;
      auto integrand = [&](double x) {
        const double f = fl + (fr - fl) * (x - x0) / h;
        return f * hat(x, xk, h);
      };
      F(k) += detail::gauss2(integrand, x0, x1);
    }
  }
  return F;
}

}  // namespace

DiscreteField solve_dirichlet(const NonlocalMatrix& mat, const Eigen::VectorXd& f_interior,
                              const Eigen::VectorXd& g_exterior) {
  const Grid1D& grid = mat.grid;
  const int ni = static_cast<int>(grid.interior.size());
  const int ne = static_cast<int>(grid.exterior.size());
  if (g_exterior.size() != ne) throw std::invalid_argument("solve_dirichlet: exterior data size");

  const Eigen::MatrixXd AII = mat.block_II();
  const Eigen::MatrixXd AIE = mat.block_IE();
  const Eigen::VectorXd F = omega_load(grid, f_interior);
  Eigen::VectorXd FI(ni);
  for (int p = 0; p < ni; ++p) FI(p) = F(grid.interior[static_cast<std::size_t>(p)]);
  const Eigen::VectorXd rhs = FI - AIE * g_exterior;

  Eigen::LLT<Eigen::MatrixXd> llt(AII);
  if (llt.info() != Eigen::Success)
    throw numerics_error("solve_dirichlet: Cholesky factorization failed (matrix not SPD)");
  Eigen::VectorXd uI = llt.solve(rhs);
  uI += llt.solve(rhs - AII * uI);  // one refinement step
  const double res = (AII * uI - rhs).norm();
  if (res > 1e-10 * std::max(rhs.norm(), 1e-300))
    throw numerics_error("solve_dirichlet: residual too large");

  DiscreteField u{grid, Eigen::VectorXd::Zero(grid.n_active())};
  for (int p = 0; p < ni; ++p) u.values(grid.interior[static_cast<std::size_t>(p)]) = uI(p);
  for (int q = 0; q < ne; ++q) u.values(grid.exterior[static_cast<std::size_t>(q)]) = g_exterior(q);
  return u;
}

RobinConfig RobinConfig::constant(const Grid1D& grid, double n, double kappa_value) {
  return RobinConfig{n, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(grid.exterior.size()),
                                                  kappa_value)};
}

RobinSystem::RobinSystem(const Grid1D& grid, FracOrder s, const RobinConfig& cfg)
    : grid_(grid), mat_(assemble_stiffness(grid, s)), n_(cfg.n) {
  const int ne = static_cast<int>(grid.exterior.size());
  if (cfg.kappa.size() != ne) throw std::invalid_argument("RobinSystem: kappa sample count");
  if (cfg.kappa.minCoeff() < 0.0)
    throw std::invalid_argument("RobinSystem: kappa must be nonnegative");
  if (!(cfg.n > 0.0)) throw std::invalid_argument("RobinSystem: penalty n must be positive");

  // kappa > 0 on at least one exterior element (piecewise-linear interpolant,
  // zero at the Omega~ endpoints)
  if (cfg.kappa.maxCoeff() <= 0.0)
    throw numerics_error("RobinSystem: kappa vanishes identically (penalty term is singular)");

  restricted_ = mat_.full;
  const Eigen::MatrixXd E = exterior_exterior_correction(grid, s);
  for (int p = 0; p < ne; ++p)
    for (int q = 0; q < ne; ++q)
      restricted_(grid.exterior[static_cast<std::size_t>(p)],
                  grid.exterior[static_cast<std::size_t>(q)]) -= E(p, q);

  // exterior mass with piecewise-linear kappa; the per-element integrand is
  // cubic, so Gauss-2 is exact
  const int n = grid.n_active();
  kappa_mass_ = Eigen::MatrixXd::Zero(n, n);
  auto kappa_at = [&](double x) -> double {
    // piecewise-linear through exterior samples, zero at collar endpoints and on Omega
    double acc = 0.0;
    for (int q = 0; q < ne; ++q)
      acc += cfg.kappa(q) * hat(x, grid.nodes[static_cast<std::size_t>(grid.exterior[static_cast<std::size_t>(q)])], grid.h);
    return acc;
  };
  for (bool left : {true, false}) {
    const CollarGeom cg = collar(grid, left);
    for (const Interval& e : cg.elems) {
      for (int p = 0; p < n; ++p) {
        const double xp = grid.nodes[static_cast<std::size_t>(p)];
        if (xp <= e.lo - grid.h || xp >= e.hi + grid.h) continue;
        for (int q = p; q < n; ++q) {
          const double xq = grid.nodes[static_cast<std::size_t>(q)];
          if (xq <= e.lo - grid.h || xq >= e.hi + grid.h) continue;
          auto integrand = [&](double x) {
            return kappa_at(x) * hat(x, xp, grid.h) * hat(x, xq, grid.h);
          };
          const double v = detail::gauss2(integrand, e.lo, e.hi);
          kappa_mass_(p, q) += v;
          if (q != p) kappa_mass_(q, p) += v;
        }
      }
    }
  }

  const Eigen::MatrixXd K = restricted_ + n_ * kappa_mass_;
  llt_.compute(K);
  if (llt_.info() != Eigen::Success)
    throw numerics_error("RobinSystem: factorization failed (system singular?)");
}

Eigen::VectorXd RobinSystem::solve_raw(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd u = llt_.solve(rhs);
  const Eigen::MatrixXd K = restricted_ + n_ * kappa_mass_;
  u += llt_.solve(rhs - K * u);
  return u;
}

DiscreteField RobinSystem::solve(const Eigen::VectorXd& f_interior,
                                 const Eigen::VectorXd& z_exterior) const {
  const int ne = static_cast<int>(grid_.exterior.size());
  if (z_exterior.size() != ne) throw std::invalid_argument("RobinSystem::solve: z sample count");
  Eigen::VectorXd z_full = Eigen::VectorXd::Zero(grid_.n_active());
  for (int q = 0; q < ne; ++q) z_full(grid_.exterior[static_cast<std::size_t>(q)]) = z_exterior(q);
  const Eigen::VectorXd rhs = omega_load(grid_, f_interior) + n_ * (kappa_mass_ * z_full);
  return DiscreteField{grid_, solve_raw(rhs)};
}

DiscreteField solve_robin(const Grid1D& grid, FracOrder s, const RobinConfig& cfg,
                          const Eigen::VectorXd& f_interior, const Eigen::VectorXd& z_exterior) {
  return RobinSystem(grid, s, cfg).solve(f_interior, z_exterior);
}

std::vector<double> nonlocal_normal_derivative(const DiscreteField& u, FracOrder s,
                                               const std::vector<double>& x_eval) {
  const Grid1D& g = u.grid;
  const double ss = s.s;
  const double C = cns_constant(1, s);
  const double h = g.h;
  const int n_omega = static_cast<int>(std::round((g.omega_hi - g.omega_lo) / h));

  std::vector<double> out;
  out.reserve(x_eval.size());
  for (double x : x_eval) {
    if (x >= g.omega_lo - 1e-14 && x <= g.omega_hi + 1e-14)
      throw std::domain_error("nonlocal_normal_derivative: evaluation point inside closure of Omega");
    const double ux = u.eval(x);
    double acc = 0.0;
    for (int e = 0; e < n_omega; ++e) {
      const double y0 = g.omega_lo + e * h, y1 = y0 + h;
      const double u0 = u.eval(y0), u1 = u.eval(y1);
      const double slope = (u1 - u0) / h;
      // int_{y0}^{y1} (ux - u(y)) |x-y|^{-1-2s} dy, linear u, x outside [y0,y1]
      if (x > y1) {
        // t = x - y in [x-y1, x-y0]; u(y) = u0 + slope (x - t - y0)
        const double A = ux - u0 - slope * (x - y0);
        const double t0 = x - y1, t1 = x - y0;
        acc += A * pow_int(-1.0 - 2.0 * ss, t0, t1) + slope * pow_int(-2.0 * ss, t0, t1);
      } else {
        // t = y - x in [y0-x, y1-x]; u(y) = u0 + slope (x + t - y0)
        const double A = ux - u0 - slope * (x - y0);
        const double t0 = y0 - x, t1 = y1 - x;
        acc += A * pow_int(-1.0 - 2.0 * ss, t0, t1) - slope * pow_int(-2.0 * ss, t0, t1);
      }
    }
    out.push_back(C * acc);
  }
  return out;
}

namespace {

// integrate f over a collar element with geometric refinement toward a
// singular endpoint (N_s-type integrands behave like dist^{1-2s} there)
template <typename F>
double graded_gauss(F&& f, double x0, double x1, bool singular_at_left) {
  constexpr int kLevels = 10;
  double acc = 0.0;
  double len = x1 - x0;
  if (singular_at_left) {
    double hi = x1;
    for (int l = 0; l < kLevels; ++l) {
      const double lo = (l + 1 == kLevels) ? x0 : x0 + len * std::pow(0.5, l + 1);
      acc += detail::gauss6(f, lo, hi);
      hi = lo;
    }
  } else {
    double lo = x0;
    for (int l = 0; l < kLevels; ++l) {
      const double hi = (l + 1 == kLevels) ? x1 : x1 - len * std::pow(0.5, l + 1);
      acc += detail::gauss6(f, lo, hi);
      lo = hi;
    }
  }
  return acc;
}

// int_{Omega~ \ Omega} w(x) N_s u(x) dx with w a piecewise-linear field given
// by a callable; the elements adjacent to a and b are graded.
double collar_pairing_with_ns(const DiscreteField& u, FracOrder s,
                              const std::function<double(double)>& w) {
  const Grid1D& g = u.grid;
  double acc = 0.0;
  for (bool left : {true, false}) {
    const CollarGeom cg = collar(g, left);
    for (const Interval& e : cg.elems) {
      auto f = [&](double x) {
        return w(x) * nonlocal_normal_derivative(u, s, {x})[0];
      };
      const bool sing_left = !left && std::abs(e.lo - g.omega_hi) < 1e-12;
      const bool sing_right = left && std::abs(e.hi - g.omega_lo) < 1e-12;
      if (sing_left || sing_right)
        acc += graded_gauss(f, e.lo, e.hi, sing_left);
      else
        acc += detail::gauss6(f, e.lo, e.hi);
    }
  }
  return acc;
}

}  // namespace

double ibp_residual(const DiscreteField& u, const std::function<double(double)>& lap_u,
                    const DiscreteField& v, FracOrder s) {
  const Grid1D& g = u.grid;
  // a_res(u, v)
  const NonlocalMatrix mat = assemble_stiffness(g, s);
  Eigen::MatrixXd restricted = mat.full;
  const Eigen::MatrixXd E = exterior_exterior_correction(g, s);
  const auto& ext = g.exterior;
  for (std::size_t p = 0; p < ext.size(); ++p)
    for (std::size_t q = 0; q < ext.size(); ++q) restricted(ext[p], ext[q]) -= E(p, q);
  const double lhs = u.values.dot(restricted * v.values);

  // int_Omega v lap_u
  const double h = g.h;
  const int n_omega = static_cast<int>(std::round((g.omega_hi - g.omega_lo) / h));
  double volume = 0.0;
  for (int e = 0; e < n_omega; ++e) {
    const double x0 = g.omega_lo + e * h;
    volume += detail::gauss4([&](double x) { return v.eval(x) * lap_u(x); }, x0, x0 + h);
  }

  // int_{R \ Omega} v N_s u (v vanishes outside Omega~)
  const double flux = collar_pairing_with_ns(u, s, [&](double x) { return v.eval(x); });

  return std::abs(lhs - volume - flux);
}

double very_weak_residual(const DiscreteField& u, const Eigen::VectorXd& f_interior,
                          const Eigen::VectorXd& g_exterior,
                          const std::vector<DiscreteField>& probes, FracOrder s,
                          const NonlocalMatrix& mat) {
  const Grid1D& grid = u.grid;
  const int ni = static_cast<int>(grid.interior.size());
  const Eigen::MatrixXd MII = interior_mass(grid);
  const Eigen::LLT<Eigen::MatrixXd> mass_llt(MII);
  const Eigen::VectorXd F = omega_load(grid, f_interior);

  // full Omega-mass between all active hats and interior hats
  const double h = grid.h;
  const int n_omega = static_cast<int>(std::round((grid.omega_hi - grid.omega_lo) / h));
  Eigen::MatrixXd Momega = Eigen::MatrixXd::Zero(grid.n_active(), ni);
  for (int e = 0; e < n_omega; ++e) {
    const double x0 = grid.omega_lo + e * h, x1 = x0 + h;
    for (int k = 0; k < grid.n_active(); ++k) {
      const double xk = grid.nodes[static_cast<std::size_t>(k)];
      if (xk <= x0 - h || xk >= x1 + h) continue;
      for (int p = 0; p < ni; ++p) {
        const double xp = grid.nodes[static_cast<std::size_t>(grid.interior[static_cast<std::size_t>(p)])];
        if (xp <= x0 - h || xp >= x1 + h) continue;
        Momega(k, p) += detail::gauss2(
            [&](double x) { return hat(x, xk, h) * hat(x, xp, h); }, x0, x1);
      }
    }
  }

  // piecewise-linear g on the collars from exterior samples
  auto g_fn = [&](double x) -> double {
    double acc = 0.0;
    for (std::size_t q = 0; q < grid.exterior.size(); ++q)
      acc += g_exterior(static_cast<Eigen::Index>(q)) *
             hat(x, grid.nodes[static_cast<std::size_t>(grid.exterior[q])], h);
    return acc;
  };

  double worst = 0.0;
  for (const DiscreteField& v : probes) {
    for (int q : grid.exterior)
      if (v.values(q) != 0.0)
        throw std::invalid_argument("very_weak_residual: probe must vanish outside Omega");
    // interior L2 representation of (-Lap)^s v
    Eigen::VectorXd Av = mat.full * v.values;
    Eigen::VectorXd AvI(ni);
    for (int p = 0; p < ni; ++p) AvI(p) = Av(grid.interior[static_cast<std::size_t>(p)]);
    const Eigen::VectorXd w = mass_llt.solve(AvI);
    const double term1 = u.values.dot(Momega * w);
    Eigen::VectorXd vI = v.interior_values();
    double term2 = 0.0;
    for (int p = 0; p < ni; ++p) term2 += F(grid.interior[static_cast<std::size_t>(p)]) * vI(p);
    const double term3 = collar_pairing_with_ns(v, s, g_fn);
    worst = std::max(worst, std::abs(term1 - term2 + term3));
  }
  return worst;
}

Eigen::MatrixXd interior_mass(const Grid1D& grid) {
  const int ni = static_cast<int>(grid.interior.size());
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(ni, ni);
  const double h = grid.h;
  for (int p = 0; p < ni; ++p) {
    M(p, p) = 2.0 * h / 3.0;
    if (p + 1 < ni) M(p, p + 1) = M(p + 1, p) = h / 6.0;
  }
  return M;
}

double l2_norm_interior(const Grid1D& grid, const Eigen::VectorXd& interior_values) {
  const Eigen::MatrixXd M = interior_mass(grid);
  return std::sqrt(interior_values.dot(M * interior_values));
}

double torsion_constant(FracOrder s) {
  return gamma_fn(0.5) /
         (std::pow(2.0, 2.0 * s.s) * gamma_fn(s.s + 0.5) * gamma_fn(s.s + 1.0));
}

std::function<double(double)> torsion_exact(FracOrder s) {
  const double c = torsion_constant(s);
  const double ss = s.s;
  return [c, ss](double x) {
    const double t = 1.0 - x * x;
    return t > 0.0 ? c * std::pow(t, ss) : 0.0;
  };
}

double fit_loglog_slope(const std::vector<double>& param, const std::vector<double>& error) {
  if (param.size() != error.size() || param.size() < 2)
    throw std::invalid_argument("fit_loglog_slope: need matching series of length >= 2");
  const std::size_t n = param.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(param[i]);
    const double y = std::log(error[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

RateReport dirichlet_torsion_study(FracOrder s, const std::vector<int>& hinvs) {
  if (hinvs.size() < 3) throw std::invalid_argument("dirichlet_torsion_study: need >= 3 levels");
  RateReport rep;
  const auto exact = torsion_exact(s);
  for (int hinv : hinvs) {
    const Grid1D grid = Grid1D::make_default(1.0 / hinv);
    const NonlocalMatrix mat = assemble_stiffness(grid, s);
    const Eigen::VectorXd f = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(grid.interior.size()));
    const Eigen::VectorXd g = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.exterior.size()));
    const DiscreteField u = solve_dirichlet(mat, f, g);
    // L2(Omega) error against the exact torsion profile
    const double h = grid.h;
    const int n_omega = static_cast<int>(std::round((grid.omega_hi - grid.omega_lo) / h));
    double err2 = 0.0;
    for (int e = 0; e < n_omega; ++e) {
      const double x0 = grid.omega_lo + e * h;
      err2 += detail::gauss6(
          [&](double x) {
            const double d = u.eval(x) - exact(x);
            return d * d;
          },
          x0, x0 + h);
    }
    rep.param.push_back(1.0 / hinv);
    rep.error.push_back(std::sqrt(err2));
  }
  rep.slope = fit_loglog_slope(rep.param, rep.error);
  return rep;
}

RateReport robin_n_study(FracOrder s, int hinv, const std::vector<double>& ns,
                         const std::function<double(double)>& g) {
  if (ns.size() < 3) throw std::invalid_argument("robin_n_study: need >= 3 penalty values");
  RateReport rep;
  const Grid1D grid = Grid1D::make_default(1.0 / hinv);
  const NonlocalMatrix mat = assemble_stiffness(grid, s);
  const int ne = static_cast<int>(grid.exterior.size());
  Eigen::VectorXd gE(ne);
  for (int q = 0; q < ne; ++q) gE(q) = g(grid.nodes[static_cast<std::size_t>(grid.exterior[static_cast<std::size_t>(q)])]);
  const Eigen::VectorXd f0 = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.interior.size()));
  const DiscreteField uD = solve_dirichlet(mat, f0, gE);
  for (double n : ns) {
    const RobinConfig cfg = RobinConfig::constant(grid, n);
    const DiscreteField un = solve_robin(grid, s, cfg, f0, gE);
    const Eigen::VectorXd d = un.interior_values() - uD.interior_values();
    rep.param.push_back(n);
    rep.error.push_back(l2_norm_interior(grid, d));
  }
  rep.slope = fit_loglog_slope(rep.param, rep.error);
  return rep;
}

void write_matrix_csv(const Eigen::MatrixXd& m, const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("write_matrix_csv: cannot open " + path);
  std::fprintf(fp, "i,j,value\n");
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      std::fprintf(fp, "%lld,%lld,%.17g\n", static_cast<long long>(i), static_cast<long long>(j),
                   m(i, j));
  std::fclose(fp);
}

void write_field_csv(const DiscreteField& u, const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("write_field_csv: cannot open " + path);
  std::fprintf(fp, "x,u\n");
  for (int k = 0; k < u.grid.n_active(); ++k)
    std::fprintf(fp, "%.17g,%.17g\n", u.grid.nodes[static_cast<std::size_t>(k)], u.values(k));
  std::fclose(fp);
}

void write_rate_csv(const RateReport& r, const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw std::runtime_error("write_rate_csv: cannot open " + path);
  std::fprintf(fp, "level,param,error,slope\n");
  for (std::size_t i = 0; i < r.param.size(); ++i)
    std::fprintf(fp, "%zu,%.17g,%.17g,%.17g\n", i, r.param[i], r.error[i], r.slope);
  std::fclose(fp);
}

}  // namespace fracopt
