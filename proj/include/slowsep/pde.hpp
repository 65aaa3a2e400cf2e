#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "slowsep/profile.hpp"

namespace slowsep {

enum class BCTag { Periodic, Robin, Neumann };
enum class Scheme { CrankNicolson, ExplicitEuler };

const char* bc_name(BCTag bc);

// Space-time field rho(t_k, u_j) on [0,T] x [0,1]. The spatial grid always
// carries M+1 points u_j = j/M; for periodic runs column M mirrors column 0.
struct GridSolution {
  BCTag bc = BCTag::Periodic;
  double alpha = 0.0;  // Robin coupling, when bc == Robin
  int M = 0;
  double dt = 0.0;
  double T = 0.0;
  Eigen::VectorXd ugrid;   // M+1 points
  Eigen::MatrixXd values;  // (steps+1) x (M+1), row k at time k*dt

  int steps() const { return static_cast<int>(values.rows()) - 1; }
  double time(int k) const { return k * dt; }
  // Trapezoidal mass int_0^1 rho(t_k, u) du.
  double mass(int k) const;
  // Row index of the last time level <= t (t must sit on the grid within
  // rounding).
  int level_at(double t) const;
};

// C^{1,2} test function of (t,u) with evaluable derivatives.
struct TestFunctionCT {
  std::function<double(double, double)> H, Ht, Hu, Huu;
};

GridSolution solve_periodic(const DensityProfile& rho0, int M, double T, double dt,
                            Scheme scheme = Scheme::CrankNicolson);
GridSolution solve_robin(const DensityProfile& rho0, double alpha, int M, double T, double dt,
                         Scheme scheme = Scheme::CrankNicolson);
GridSolution solve_neumann(const DensityProfile& rho0, int M, double T, double dt,
                           Scheme scheme = Scheme::CrankNicolson);

// Absolute residual of the weak formulation at time t, including the
// boundary terms of the Robin/Neumann definitions; trapezoid in space and
// time.
double weak_residual(const GridSolution& sol, const TestFunctionCT& H, double t);

// sqrt( int_0^T int_0^1 (a-b)^2 du dt ) on identical grids.
double l2_spacetime_distance(const GridSolution& a, const GridSolution& b);

struct PhaseTransitionRow {
  double alpha;
  double dist_to_neumann;
  double dist_to_periodic;
};

std::vector<PhaseTransitionRow> phase_transition_curve(const DensityProfile& rho0,
                                                       const std::vector<double>& alphas, int M,
                                                       double T, double dt);

// Tridiagonal system with additional corner entries (0,M) and (M,0), solved
// by the Thomas algorithm plus a Sherman-Morrison rank-1 correction.
class CornerTridiagonalSolver {
 public:
  CornerTridiagonalSolver(Eigen::VectorXd diag, Eigen::VectorXd lower, Eigen::VectorXd upper,
                          double corner_top_right, double corner_bottom_left);
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs) const;

 private:
  Eigen::VectorXd thomas(const Eigen::VectorXd& rhs) const;

  Eigen::VectorXd diag_, lower_, upper_;  // diag has the rank-1 shift applied
  double corner_tr_, corner_bl_, gamma_;
  Eigen::VectorXd z_;  // T^{-1} u of the Sherman-Morrison pair
  double vz_;
  bool has_corners_;
};

}  // namespace slowsep
