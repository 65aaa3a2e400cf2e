#include "slowsep/config.hpp"

#include <stdexcept>
#include <utility>

#include "slowsep/rng.hpp"

namespace slowsep {

void apply_swap(Configuration& config, int bond_index) {
  const int n = config.size();
  if (bond_index < 0 || bond_index >= n) throw std::out_of_range("bond index out of range");
  const int x = bond_index;
  const int y = (bond_index + 1 == n) ? 0 : bond_index + 1;
  std::swap(config[x], config[y]);
}

Configuration swapped(const Configuration& config, int bond_index) {
  Configuration out = config;
  apply_swap(out, bond_index);
  return out;
}

Configuration sample_bernoulli_product(const DensityProfile& profile, int n, std::uint64_t seed) {
  Configuration config(n);
  Xoshiro256pp rng(seed);
  for (int x = 0; x < n; ++x) {
    const double rho = profile(static_cast<double>(x) / n);
    if (!(rho >= 0.0 && rho <= 1.0)) throw std::invalid_argument("profile value outside [0,1]");
    config[x] = rng.bernoulli(rho) ? 1 : 0;
  }
  return config;
}

Configuration sample_conditioned(double rho, int n, int tagged_site, std::uint64_t seed) {
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in (0,1)");
  if (tagged_site < 0 || tagged_site >= n) throw std::out_of_range("tagged site out of range");
  Configuration config(n);
  Xoshiro256pp rng(seed);
  for (int x = 0; x < n; ++x) config[x] = rng.bernoulli(rho) ? 1 : 0;
  config[tagged_site] = 1;
  return config;
}

double empirical_pairing(const Configuration& config, const std::function<double(double)>& H) {
  const int n = config.size();
  double acc = 0.0;
  for (int x = 0; x < n; ++x)
    if (config[x]) acc += H(static_cast<double>(x) / n);
  return acc / n;
}

}  // namespace slowsep
