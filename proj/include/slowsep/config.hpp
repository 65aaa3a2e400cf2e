#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "slowsep/profile.hpp"

namespace slowsep {

// Occupancy configuration on the discrete torus, one byte per site.
struct Configuration {
  std::vector<std::uint8_t> occ;

  Configuration() = default;
  explicit Configuration(int n) : occ(static_cast<std::size_t>(n), 0) {}

  int size() const { return static_cast<int>(occ.size()); }
  std::uint8_t operator[](int x) const { return occ[static_cast<std::size_t>(x)]; }
  std::uint8_t& operator[](int x) { return occ[static_cast<std::size_t>(x)]; }

  long long particle_count() const {
    long long c = 0;
    for (auto v : occ) c += v;
    return c;
  }

  bool operator==(const Configuration& other) const { return occ == other.occ; }
};

// Exchange the occupancies across bond (b, b+1 mod n), in place.
void apply_swap(Configuration& config, int bond_index);

// Same, returning the swapped copy eta^{x,x+1}.
Configuration swapped(const Configuration& config, int bond_index);

// Bernoulli product measure with marginal P[eta(x)=1] = rho0(x/n).
Configuration sample_bernoulli_product(const DensityProfile& profile, int n, std::uint64_t seed);

// nu_rho conditioned on a particle at tagged_site.
Configuration sample_conditioned(double rho, int n, int tagged_site, std::uint64_t seed);

// (1/n) * sum_x H(x/n) * eta(x).
double empirical_pairing(const Configuration& config, const std::function<double(double)>& H);

}  // namespace slowsep
