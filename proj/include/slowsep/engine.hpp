#pragma once

#include <cstdint>
#include <vector>

#include "slowsep/config.hpp"
#include "slowsep/params.hpp"

namespace slowsep {

// Which observables to track along a trajectory. Bond indices refer to the
// simulated lattice; the current at bond b counts signed effective particle
// jumps b -> b+1 (mod lattice size).
struct ObserverSpec {
  std::vector<int> watched_bonds;
  int tagged_site = -1;  // < 0 disables the tagged observer
};

struct Snapshot {
  double macro_time = 0.0;
  Configuration config;
  std::vector<long long> currents;  // one entry per watched bond
  int tagged_pos = -1;
  long long tagged_disp = 0;
};

struct TrajectoryRecord {
  std::vector<Snapshot> snapshots;  // at the requested macro times, sorted
  std::uint64_t clock_rings = 0;    // total exponential-clock events
  std::uint64_t effective_jumps = 0;
};

struct SimulateOptions {
  // Snapshot times in macro units, sorted, within [0, macro_horizon]. The
  // final state at macro_horizon is always appended if not requested.
  std::vector<double> snapshot_macro_times;
  // Simulated torus size; defaults to params.n. Larger values approximate
  // the infinite-lattice dynamics while rates and the diffusive clock keep
  // using the scaling parameter params.n.
  int lattice_size = 0;
};

// Exact continuous-time simulation of the slow-bond exclusion process up to
// micro time macro_horizon * n^2. All clocks are exponential with constant
// total rate, so the event times form a Poisson process and events are laid
// down segment-by-segment between snapshots; bond selection is a single
// uniform draw per event. Deterministic given the seed.
TrajectoryRecord simulate(const SlowBondParams& params, const Configuration& init,
                          double macro_horizon, std::uint64_t seed, const ObserverSpec& observers,
                          const SimulateOptions& options = {});

// Current count for a watched bond in a snapshot.
long long current_at(const Snapshot& snap, const ObserverSpec& spec, int bond);
// count / sqrt(n), the CLT scaling.
double rescaled_current(const Snapshot& snap, const ObserverSpec& spec, int bond, int n);

// Microscopic bond associated to macroscopic point u: vertices
// (floor(u n) - 1, floor(u n)), reduced to the simulated torus.
int bond_for_macro_point(double u, int n, int lattice_size);
// Site floor(u n) on the simulated torus.
int site_for_macro_point(double u, int n, int lattice_size);

}  // namespace slowsep
