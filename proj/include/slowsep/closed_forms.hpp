#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "slowsep/params.hpp"

namespace slowsep {

// Static compressibility chi(rho) = rho(1-rho).
double chi(double rho);

// Scaled complementary error function exp(z^2) erfc(z), overflow-free.
double erfcx(double z);

// Gaussian upper tail Phi_{2t}(x) = int_x^inf exp(-v^2/4t)/sqrt(4 pi t) dv
// = erfc(x / (2 sqrt(t))) / 2.
double phi(double t, double x);

// Limit variance of the rescaled current J^n_u(t)/sqrt(n), per regime.
// alpha enters only in the critical regime; the critical branch evaluates
// Phi_{2t}(2u+4at) e^{4au+4a^2 t} through erfcx so that large alpha does
// not overflow.
double current_variance(Regime regime, double rho, double u, double t, double alpha = 1.0);

// Limit variance of the rescaled tagged-particle position, via the in-law
// identity X_u(t) = J_u(t)/rho.
double tagged_variance(Regime regime, double rho, double u, double t, double alpha = 1.0);

// The critical-regime tagged variance exactly as printed in the source
// display (which omits the -Phi_{2t}(2u) term and so disagrees with the
// in-law identity). Kept evaluable for side-by-side comparison.
double tagged_variance_printed_critical(double rho, double u, double t, double alpha);

// Test function in S_beta(R): a cubic on each side of the origin under a
// Gaussian envelope exp(-(u/scale)^2). One-sided values and derivatives at 0
// are exact; Taylor coefficients of orders 1..3 agree across the origin and
// the regime's boundary condition at 0 holds (checked at construction).
class SBetaFunction {
 public:
  SBetaFunction(Regime regime, double alpha, Eigen::Vector4d left, Eigen::Vector4d right,
                double scale, std::string name);

  // Right-continuous value, matching the convention H(0) = H(0+).
  double operator()(double u) const { return value(u, u >= 0.0); }
  // k-th derivative, one-sided from the right at u = 0 (k in {0,1,2}).
  double deriv(double u, int k) const;
  // One-sided limits at the origin: side = -1 for 0-, +1 for 0+.
  double limit_at_zero(int k, int side) const;

  Regime regime() const { return regime_; }
  double alpha() const { return alpha_; }
  double scale() const { return scale_; }
  const std::string& name() const { return name_; }

  // L2 norms over R, by adaptive quadrature.
  double l2_sq() const;
  double deriv_l2_sq() const;

 private:
  double value(double u, bool right_side) const;
  double deriv_side(double u, int k, bool right_side) const;

  Regime regime_;
  double alpha_;
  Eigen::Vector4d left_, right_;
  double scale_;
  std::string name_;
};

// chi(rho) * ||H||_2^2, the variance of the initial fluctuation field
// paired with H.
double y0_variance(const SBetaFunction& H, double rho);

// chi(rho) * int G H, the initial covariance of the field on a pair.
double y0_covariance(const SBetaFunction& G, const SBetaFunction& H, double rho);

// ||H||_{2,beta}^2 = ||H||_2^2 + H(0+)^2 when critical.
double norm_2beta_sq(const SBetaFunction& H, Regime regime);

// ||nabla_beta H||_{2,beta}^2, the quadratic-variation density in the
// martingale characterization.
double grad_norm_2beta_sq(const SBetaFunction& H, Regime regime);

// Pointwise-evaluable nabla_beta H and Delta_beta H (one-sided from the
// right at the origin).
std::function<double(double)> nabla_beta(const SBetaFunction& H);
std::function<double(double)> delta_beta(const SBetaFunction& H);

// At least three linearly independent members of S_beta for the regime.
// alpha is required for the critical regime; scale sets the Gaussian
// envelope width.
std::vector<SBetaFunction> make_test_family(Regime regime, double alpha = 1.0, double scale = 1.0);

}  // namespace slowsep
