#include "slowsep/closed_forms.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <utility>

#include "slowsep/quadrature.hpp"

namespace slowsep {

double chi(double rho) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("rho must lie in [0,1]");
  return rho * (1.0 - rho);
}

double erfcx(double z) {
  if (z < 0.0) return 2.0 * std::exp(z * z) - erfcx(-z);
  if (z < 25.0) return std::exp(z * z) * std::erfc(z);
  // Asymptotic series; at z >= 25 the truncation error is far below 1e-16.
  const double inv2z2 = 1.0 / (2.0 * z * z);
  double term = 1.0, sum = 1.0;
  for (int m = 1; m <= 6; ++m) {
    term *= -(2.0 * m - 1.0) * inv2z2;
    sum += term;
  }
  return sum * std::numbers::inv_sqrtpi / z;
}

double phi(double t, double x) {
  if (!(t > 0.0)) throw std::invalid_argument("phi: t must be > 0");
  return 0.5 * std::erfc(x / (2.0 * std::sqrt(t)));
}

namespace {

// Phi_{2t}(2u + 4 alpha t) * exp(4 alpha u + 4 alpha^2 t) without overflow.
// With z = (u + 2 alpha t)/sqrt(t) the exponent equals z^2 - u^2/t, so for
// z >= 0 the product is erfcx(z) exp(-u^2/t) / 2; for z < 0 the exponent is
// negative and the direct evaluation is safe.
double phi_exp_product(double u, double t, double alpha) {
  const double z = (u + 2.0 * alpha * t) / std::sqrt(t);
  if (z >= 0.0) return 0.5 * erfcx(z) * std::exp(-u * u / t);
  return 0.5 * std::erfc(z) * std::exp(4.0 * alpha * u + 4.0 * alpha * alpha * t);
}

double sub_variance(double rho, double t) {
  return 2.0 * chi(rho) * std::sqrt(t / std::numbers::pi);
}

double super_variance(double rho, double u, double t) {
  const double bulk = std::sqrt(t / std::numbers::pi) * (1.0 - std::exp(-u * u / t));
  return 2.0 * chi(rho) * (bulk + 2.0 * u * phi(t, 2.0 * u));
}

double critical_variance(double rho, double u, double t, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("critical regime requires alpha > 0");
  const double boundary = (phi_exp_product(u, t, alpha) - phi(t, 2.0 * u)) / (2.0 * alpha);
  return 2.0 * chi(rho) * (std::sqrt(t / std::numbers::pi) + boundary);
}

}  // namespace

double current_variance(Regime regime, double rho, double u, double t, double alpha) {
  if (!(t > 0.0)) throw std::invalid_argument("current_variance: t must be > 0");
  // The closed forms below are stated for u >= 0; the dynamics are invariant
  // under reflection through the slow bond, so the variance is even in u.
  u = std::abs(u);
  switch (regime) {
    case Regime::Sub: return sub_variance(rho, t);
    case Regime::Critical: return critical_variance(rho, u, t, alpha);
    case Regime::Super: return super_variance(rho, u, t);
  }
  throw std::logic_error("unreachable");
}

double tagged_variance(Regime regime, double rho, double u, double t, double alpha) {
  if (!(rho > 0.0 && rho < 1.0))
    throw std::invalid_argument("tagged_variance: rho must lie in (0,1)");
  return current_variance(regime, rho, u, t, alpha) / (rho * rho);
}

double tagged_variance_printed_critical(double rho, double u, double t, double alpha) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (0,1)");
  if (!(alpha > 0.0 && t > 0.0)) throw std::invalid_argument("need alpha > 0, t > 0");
  const double boundary = phi_exp_product(u, t, alpha) / (2.0 * alpha);
  return 2.0 * chi(rho) / (rho * rho) * (std::sqrt(t / std::numbers::pi) + boundary);
}

SBetaFunction::SBetaFunction(Regime regime, double alpha, Eigen::Vector4d left,
                             Eigen::Vector4d right, double scale, std::string name)
    : regime_(regime), alpha_(alpha), left_(std::move(left)), right_(std::move(right)),
      scale_(scale), name_(std::move(name)) {
  if (!(scale_ > 0.0)) throw std::invalid_argument("scale must be > 0");
  constexpr double tol = 1e-10;
  const double s2 = scale_ * scale_;
  // Taylor coefficients of Q(u) exp(-(u/s)^2) at 0, orders 1..3, must agree
  // across the origin: q1; q2 - q0/s^2; q3 - q1/s^2.
  const double m1 = left_[1] - right_[1];
  const double m2 = (left_[2] - left_[0] / s2) - (right_[2] - right_[0] / s2);
  const double m3 = (left_[3] - left_[1] / s2) - (right_[3] - right_[1] / s2);
  if (std::abs(m1) > tol || std::abs(m2) > tol || std::abs(m3) > tol)
    throw std::invalid_argument("S_beta construction: derivative matching at 0 fails");
  const double h0m = left_[0], h0p = right_[0];
  const double h1m = left_[1], h1p = right_[1];
  switch (regime_) {
    case Regime::Sub:
      if (std::abs(h0m - h0p) > tol)
        throw std::invalid_argument("sub regime requires continuity at 0");
      break;
    case Regime::Critical:
      if (!(alpha_ > 0.0)) throw std::invalid_argument("critical regime requires alpha > 0");
      if (std::abs(h1p - alpha_ * (h0p - h0m)) > tol ||
          std::abs(h1m - alpha_ * (h0p - h0m)) > tol)
        throw std::invalid_argument("critical regime boundary condition fails");
      break;
    case Regime::Super:
      if (std::abs(h1p) > tol || std::abs(h1m) > tol)
        throw std::invalid_argument("super regime requires vanishing derivative at 0");
      break;
  }
}

double SBetaFunction::value(double u, bool right_side) const {
  const Eigen::Vector4d& q = right_side ? right_ : left_;
  const double poly = ((q[3] * u + q[2]) * u + q[1]) * u + q[0];
  return poly * std::exp(-(u * u) / (scale_ * scale_));
}

double SBetaFunction::deriv_side(double u, int k, bool right_side) const {
  const Eigen::Vector4d& q = right_side ? right_ : left_;
  const double s2 = scale_ * scale_;
  const double g = std::exp(-(u * u) / s2);
  const double Q = ((q[3] * u + q[2]) * u + q[1]) * u + q[0];
  const double Qp = (3.0 * q[3] * u + 2.0 * q[2]) * u + q[1];
  const double Qpp = 6.0 * q[3] * u + 2.0 * q[2];
  switch (k) {
    case 0: return Q * g;
    case 1: return (Qp - 2.0 * u / s2 * Q) * g;
    case 2:
      return (Qpp - 4.0 * u / s2 * Qp + (4.0 * u * u / (s2 * s2) - 2.0 / s2) * Q) * g;
    default: throw std::invalid_argument("deriv order must be 0, 1 or 2");
  }
}

double SBetaFunction::deriv(double u, int k) const { return deriv_side(u, k, u >= 0.0); }

double SBetaFunction::limit_at_zero(int k, int side) const {
  return deriv_side(0.0, k, side > 0);
}

namespace {

double two_sided_integral(const std::function<double(double)>& f, double scale) {
  const double L = 9.0 * scale;
  return integrate(f, -L, 0.0, 1e-13) + integrate(f, 0.0, L, 1e-13);
}

}  // namespace

double SBetaFunction::l2_sq() const {
  auto f = [this](double u) {
    const double v = value(u, u > 0.0 || (u == 0.0));
    return v * v;
  };
  return two_sided_integral(f, scale_);
}

double SBetaFunction::deriv_l2_sq() const {
  auto f = [this](double u) {
    const double v = deriv_side(u, 1, u >= 0.0);
    return v * v;
  };
  return two_sided_integral(f, scale_);
}

double y0_variance(const SBetaFunction& H, double rho) { return chi(rho) * H.l2_sq(); }

double y0_covariance(const SBetaFunction& G, const SBetaFunction& H, double rho) {
  const double scale = std::max(G.scale(), H.scale());
  auto f = [&](double u) { return G(u) * H(u); };
  return chi(rho) * two_sided_integral(f, scale);
}

double norm_2beta_sq(const SBetaFunction& H, Regime regime) {
  const double h0 = H.limit_at_zero(0, +1);
  return H.l2_sq() + (regime == Regime::Critical ? h0 * h0 : 0.0);
}

double grad_norm_2beta_sq(const SBetaFunction& H, Regime regime) {
  const double g0 = H.limit_at_zero(1, +1);
  return H.deriv_l2_sq() + (regime == Regime::Critical ? g0 * g0 : 0.0);
}

std::function<double(double)> nabla_beta(const SBetaFunction& H) {
  return [H](double u) { return H.deriv(u, 1); };
}

std::function<double(double)> delta_beta(const SBetaFunction& H) {
  return [H](double u) { return H.deriv(u, 2); };
}

std::vector<SBetaFunction> make_test_family(Regime regime, double alpha, double scale) {
  using V = Eigen::Vector4d;
  const double s2 = scale * scale;
  std::vector<SBetaFunction> family;
  switch (regime) {
    case Regime::Sub:
      family.emplace_back(regime, alpha, V{1, 0, 0, 0}, V{1, 0, 0, 0}, scale, "gauss");
      family.emplace_back(regime, alpha, V{0, 1, 0, 0}, V{0, 1, 0, 0}, scale, "u_gauss");
      family.emplace_back(regime, alpha, V{0, 0, 1, 0}, V{0, 0, 1, 0}, scale, "u2_gauss");
      break;
    case Regime::Super:
      family.emplace_back(regime, alpha, V{1, 0, 0, 0}, V{1, 0, 0, 0}, scale, "gauss");
      family.emplace_back(regime, alpha, V{0, 0, 0, 1}, V{0, 0, 0, 1}, scale, "u3_gauss");
      // Jump at 0 with flat derivative: supported on the right half-line.
      family.emplace_back(regime, alpha, V{0, 0, 0, 0}, V{1, 0, 1.0 / s2, 0}, scale,
                          "right_step");
      break;
    case Regime::Critical: {
      if (!(alpha > 0.0)) throw std::invalid_argument("critical family requires alpha > 0");
      family.emplace_back(regime, alpha, V{1, 0, 0, 0}, V{1, 0, 0, 0}, scale, "gauss");
      family.emplace_back(regime, alpha, V{0, alpha, 0, 0}, V{1, alpha, 1.0 / s2, 0}, scale,
                          "robin_step");
      const double j = 1.0 / (2.0 * alpha);
      family.emplace_back(regime, alpha, V{-j, 1, -j / s2, 0}, V{j, 1, j / s2, 0}, scale,
                          "robin_odd");
      break;
    }
  }
  return family;
}

}  // namespace slowsep
