#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>

namespace slowsep {

// The three qualitative ranges of the slowness exponent beta.
enum class Regime { Sub, Critical, Super };

inline Regime regime_of(double beta) {
  if (beta < 0.0 || std::isnan(beta)) throw std::invalid_argument("beta must be >= 0 or inf");
  if (beta < 1.0) return Regime::Sub;
  if (beta == 1.0) return Regime::Critical;
  return Regime::Super;  // beta in (1, inf]
}

inline const char* regime_name(Regime r) {
  switch (r) {
    case Regime::Sub: return "sub";
    case Regime::Critical: return "critical";
    case Regime::Super: return "super";
  }
  return "?";
}

// Parameters of the exclusion process with one slow bond: n sites on the
// discrete torus, all swap rates 1 except the bond (n-1, 0) which runs at
// alpha * n^(-beta). beta = +inf is a first-class value (rate exactly 0).
struct SlowBondParams {
  int n = 2;
  double alpha = 1.0;
  double beta = 0.0;

  SlowBondParams() = default;
  SlowBondParams(int n_, double alpha_, double beta_) : n(n_), alpha(alpha_), beta(beta_) {
    validate();
  }

  void validate() const {
    if (n < 2) throw std::invalid_argument("n must be >= 2");
    if (!(alpha > 0.0)) throw std::invalid_argument("alpha must be > 0");
    if (std::isnan(beta) || beta < 0.0) throw std::invalid_argument("beta must be >= 0 or inf");
  }

  Regime regime() const { return regime_of(beta); }

  int slow_bond() const { return n - 1; }

  double slow_rate() const {
    if (std::isinf(beta)) return 0.0;
    return alpha * std::pow(static_cast<double>(n), -beta);
  }

  // Sum of all bond rates; constant in the configuration.
  double total_rate() const { return static_cast<double>(n - 1) + slow_rate(); }
};

// Rate of the exponential clock at a given bond. Bond b connects sites
// (b, b+1 mod n); bond n-1 is the slow one.
inline double swap_rate(const SlowBondParams& p, int bond_index) {
  if (bond_index < 0 || bond_index >= p.n) throw std::out_of_range("bond index out of range");
  return bond_index == p.slow_bond() ? p.slow_rate() : 1.0;
}

// Macroscopic coordinates of the lattice: site x sits at x/n in [0,1),
// and the slow bond is the cut at 0 == 1.
struct SiteMap {
  int n;
  explicit SiteMap(int n_) : n(n_) {}
  double macro(int site) const { return static_cast<double>(site) / n; }
  // Signed coordinate with the slow bond at macroscopic 0: sites past the
  // midpoint wrap to negative positions.
  double macro_centered(int site) const {
    const int x = (site <= n / 2) ? site : site - n;
    return static_cast<double>(x) / n;
  }
};

}  // namespace slowsep
