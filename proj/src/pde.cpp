#include "slowsep/pde.hpp"

#include <cmath>
#include <stdexcept>

namespace slowsep {

const char* bc_name(BCTag bc) {
  switch (bc) {
    case BCTag::Periodic: return "periodic";
    case BCTag::Robin: return "robin";
    case BCTag::Neumann: return "neumann";
  }
  return "?";
}

double GridSolution::mass(int k) const {
  const double h = 1.0 / M;
  double s = 0.5 * (values(k, 0) + values(k, M));
  for (int j = 1; j < M; ++j) s += values(k, j);
  return s * h;
}

int GridSolution::level_at(double t) const {
  const int k = static_cast<int>(std::lround(t / dt));
  if (k < 0 || k > steps() || std::abs(k * dt - t) > 1e-9 * std::max(1.0, T))
    throw std::invalid_argument("time does not sit on the grid");
  return k;
}

CornerTridiagonalSolver::CornerTridiagonalSolver(Eigen::VectorXd diag, Eigen::VectorXd lower,
                                                 Eigen::VectorXd upper, double corner_top_right,
                                                 double corner_bottom_left)
    : diag_(std::move(diag)), lower_(std::move(lower)), upper_(std::move(upper)),
      corner_tr_(corner_top_right), corner_bl_(corner_bottom_left) {
  const auto m = diag_.size();
  if (lower_.size() != m - 1 || upper_.size() != m - 1)
    throw std::invalid_argument("band size mismatch");
  has_corners_ = corner_tr_ != 0.0 || corner_bl_ != 0.0;
  if (has_corners_) {
    gamma_ = -diag_[0];
    diag_[0] -= gamma_;
    diag_[m - 1] -= corner_bl_ * corner_tr_ / gamma_;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(m);
    u[0] = gamma_;
    u[m - 1] = corner_bl_;
    z_ = thomas(u);
    vz_ = z_[0] + corner_tr_ / gamma_ * z_[m - 1];
  }
}

Eigen::VectorXd CornerTridiagonalSolver::thomas(const Eigen::VectorXd& rhs) const {
  const auto m = diag_.size();
  Eigen::VectorXd c(m - 1), d(m), x(m);
  c[0] = upper_[0] / diag_[0];
  d[0] = rhs[0] / diag_[0];
  for (Eigen::Index i = 1; i < m; ++i) {
    const double denom = diag_[i] - lower_[i - 1] * c[i - 1];
    if (i < m - 1) c[i] = upper_[i] / denom;
    d[i] = (rhs[i] - lower_[i - 1] * d[i - 1]) / denom;
  }
  x[m - 1] = d[m - 1];
  for (Eigen::Index i = m - 2; i >= 0; --i) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

Eigen::VectorXd CornerTridiagonalSolver::solve(const Eigen::VectorXd& rhs) const {
  Eigen::VectorXd y = thomas(rhs);
  if (!has_corners_) return y;
  const auto m = diag_.size();
  const double vy = y[0] + corner_tr_ / gamma_ * y[m - 1];
  return y - z_ * (vy / (1.0 + vz_));
}

namespace {

// Discrete Laplacian with the boundary treatment baked in. For periodic
// runs the unknowns are j = 0..M-1; for Robin/Neumann they are j = 0..M
// with ghost nodes eliminated through the centered flux condition, which
// couples node 0 to node M when alpha > 0.
struct SpatialOperator {
  BCTag bc;
  int M;
  double h;
  double alpha;

  int unknowns() const { return bc == BCTag::Periodic ? M : M + 1; }

  Eigen::VectorXd apply(const Eigen::VectorXd& rho) const {
    const int m = unknowns();
    Eigen::VectorXd out(m);
    const double ih2 = 1.0 / (h * h);
    if (bc == BCTag::Periodic) {
      for (int j = 0; j < m; ++j) {
        const double lft = rho[j == 0 ? m - 1 : j - 1];
        const double rgt = rho[j == m - 1 ? 0 : j + 1];
        out[j] = (lft - 2.0 * rho[j] + rgt) * ih2;
      }
    } else {
      const double jump = alpha * (rho[0] - rho[M]);
      out[0] = 2.0 * (rho[1] - rho[0]) * ih2 - 2.0 * jump / h;
      for (int j = 1; j < M; ++j)
        out[j] = (rho[j - 1] - 2.0 * rho[j] + rho[j + 1]) * ih2;
      out[M] = 2.0 * (rho[M - 1] - rho[M]) * ih2 + 2.0 * jump / h;
    }
    return out;
  }

  // Solver for (I - r * A).
  CornerTridiagonalSolver implicit_solver(double r) const {
    const int m = unknowns();
    const double ih2 = 1.0 / (h * h);
    Eigen::VectorXd diag(m), lower(m - 1), upper(m - 1);
    double ctr = 0.0, cbl = 0.0;
    if (bc == BCTag::Periodic) {
      diag.setConstant(1.0 + 2.0 * r * ih2);
      lower.setConstant(-r * ih2);
      upper.setConstant(-r * ih2);
      ctr = -r * ih2;  // entries (0, m-1) and (m-1, 0) of the wrap
      cbl = -r * ih2;
    } else {
      diag.setConstant(1.0 + 2.0 * r * ih2);
      lower.setConstant(-r * ih2);
      upper.setConstant(-r * ih2);
      diag[0] = 1.0 + 2.0 * r * ih2 + 2.0 * r * alpha / h;
      diag[M] = 1.0 + 2.0 * r * ih2 + 2.0 * r * alpha / h;
      upper[0] = -2.0 * r * ih2;
      lower[M - 1] = -2.0 * r * ih2;
      if (alpha != 0.0) {
        ctr = -2.0 * r * alpha / h;
        cbl = -2.0 * r * alpha / h;
      }
    }
    return CornerTridiagonalSolver(std::move(diag), std::move(lower), std::move(upper), ctr, cbl);
  }
};

GridSolution solve_heat(const DensityProfile& rho0, BCTag bc, double alpha, int M, double T,
                        double dt, Scheme scheme) {
  if (M < 4) throw std::invalid_argument("M too small");
  if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("need T > 0 and dt > 0");
  if (bc == BCTag::Robin && !(alpha > 0.0))
    throw std::invalid_argument("Robin boundary requires alpha > 0");
  const int steps = static_cast<int>(std::lround(T / dt));
  if (std::abs(steps * dt - T) > 1e-9 * T)
    throw std::invalid_argument("T must be an integer number of time steps");

  const SpatialOperator op{bc, M, 1.0 / M, bc == BCTag::Robin ? alpha : 0.0};
  const int m = op.unknowns();

  if (scheme == Scheme::ExplicitEuler && dt > 0.5 * op.h * op.h)
    throw std::invalid_argument("explicit scheme unstable: need dt <= (1/M)^2 / 2");

  GridSolution sol;
  sol.bc = bc;
  sol.alpha = op.alpha;
  sol.M = M;
  sol.dt = dt;
  sol.T = T;
  sol.ugrid = Eigen::VectorXd::LinSpaced(M + 1, 0.0, 1.0);
  sol.values.resize(steps + 1, M + 1);

  Eigen::VectorXd rho(m);
  for (int j = 0; j < m; ++j) rho[j] = rho0(static_cast<double>(j) / M);

  auto record = [&](int k, const Eigen::VectorXd& r) {
    for (int j = 0; j < m; ++j) sol.values(k, j) = r[j];
    if (bc == BCTag::Periodic) sol.values(k, M) = r[0];
  };
  record(0, rho);

  if (scheme == Scheme::ExplicitEuler) {
    for (int k = 1; k <= steps; ++k) {
      rho += dt * op.apply(rho);
      record(k, rho);
    }
    return sol;
  }

  // Crank-Nicolson with Rannacher startup: the first two steps are taken as
  // four backward-Euler half-steps, damping the modes excited by rough
  // initial data. Both stages share the (I - dt/2 A) factorization.
  const CornerTridiagonalSolver half = op.implicit_solver(0.5 * dt);
  const int rannacher_steps = std::min(2, steps);
  for (int k = 1; k <= rannacher_steps; ++k) {
    rho = half.solve(rho);
    rho = half.solve(rho);
    record(k, rho);
  }
  for (int k = rannacher_steps + 1; k <= steps; ++k) {
    Eigen::VectorXd rhs = rho + 0.5 * dt * op.apply(rho);
    rho = half.solve(rhs);
    record(k, rho);
  }
  return sol;
}

double space_integral(const GridSolution& sol, int k, const std::function<double(double)>& f) {
  const double h = 1.0 / sol.M;
  double s = 0.5 * (sol.values(k, 0) * f(0.0) + sol.values(k, sol.M) * f(1.0));
  for (int j = 1; j < sol.M; ++j) s += sol.values(k, j) * f(sol.ugrid[j]);
  return s * h;
}

}  // namespace

GridSolution solve_periodic(const DensityProfile& rho0, int M, double T, double dt,
                            Scheme scheme) {
  return solve_heat(rho0, BCTag::Periodic, 0.0, M, T, dt, scheme);
}

GridSolution solve_robin(const DensityProfile& rho0, double alpha, int M, double T, double dt,
                         Scheme scheme) {
  return solve_heat(rho0, BCTag::Robin, alpha, M, T, dt, scheme);
}

GridSolution solve_neumann(const DensityProfile& rho0, int M, double T, double dt, Scheme scheme) {
  return solve_heat(rho0, BCTag::Neumann, 0.0, M, T, dt, scheme);
}

double weak_residual(const GridSolution& sol, const TestFunctionCT& H, double t) {
  const int kt = sol.level_at(t);

  auto at = [&](int k, const std::function<double(double, double)>& f) {
    const double s = sol.time(k);
    return space_integral(sol, k, [&](double u) { return f(s, u); });
  };

  const double boundary_term = [&] {
    if (sol.bc == BCTag::Periodic) return 0.0;
    // Trapezoid in time of the flux and Robin coupling terms.
    auto integrand = [&](int k) {
      const double s = sol.time(k);
      const double r0 = sol.values(k, 0), r1 = sol.values(k, sol.M);
      double v = r0 * H.Hu(s, 0.0) - r1 * H.Hu(s, 1.0);
      if (sol.bc == BCTag::Robin)
        v -= sol.alpha * (r0 - r1) * (H.H(s, 0.0) - H.H(s, 1.0));
      return v;
    };
    double acc = 0.5 * (integrand(0) + integrand(kt));
    for (int k = 1; k < kt; ++k) acc += integrand(k);
    return acc * sol.dt;
  }();

  auto bulk = [&](int k) {
    const double s = sol.time(k);
    return space_integral(sol, k,
                          [&](double u) { return H.Ht(s, u) + H.Huu(s, u); });
  };
  double bulk_term = kt > 0 ? 0.5 * (bulk(0) + bulk(kt)) : 0.0;
  for (int k = 1; k < kt; ++k) bulk_term += bulk(k);
  bulk_term *= sol.dt;

  const double res = at(kt, H.H) - at(0, H.H) - bulk_term - boundary_term;
  return std::abs(res);
}

double l2_spacetime_distance(const GridSolution& a, const GridSolution& b) {
  if (a.M != b.M || a.steps() != b.steps() || std::abs(a.dt - b.dt) > 1e-15)
    throw std::invalid_argument("grid mismatch");
  const double h = 1.0 / a.M;
  auto space = [&](int k) {
    double s = 0.0;
    for (int j = 0; j <= a.M; ++j) {
      const double d = a.values(k, j) - b.values(k, j);
      const double w = (j == 0 || j == a.M) ? 0.5 : 1.0;
      s += w * d * d;
    }
    return s * h;
  };
  const int K = a.steps();
  double acc = 0.5 * (space(0) + space(K));
  for (int k = 1; k < K; ++k) acc += space(k);
  return std::sqrt(acc * a.dt);
}

std::vector<PhaseTransitionRow> phase_transition_curve(const DensityProfile& rho0,
                                                       const std::vector<double>& alphas, int M,
                                                       double T, double dt) {
  const GridSolution neumann = solve_neumann(rho0, M, T, dt);
  const GridSolution periodic = solve_periodic(rho0, M, T, dt);
  std::vector<PhaseTransitionRow> rows;
  rows.reserve(alphas.size());
  for (double a : alphas) {
    if (!(a > 0.0)) throw std::invalid_argument("alphas must be positive");
    const GridSolution robin = solve_robin(rho0, a, M, T, dt);
    rows.push_back({a, l2_spacetime_distance(robin, neumann),
                    l2_spacetime_distance(robin, periodic)});
  }
  return rows;
}

}  // namespace slowsep
