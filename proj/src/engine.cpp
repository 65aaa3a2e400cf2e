#include "slowsep/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "slowsep/rng.hpp"

namespace slowsep {

namespace {

struct ObserverState {
  // Watched bonds, padded access kept out of the hot loop by scanning a
  // short array.
  const int* bonds = nullptr;
  int num_bonds = 0;
  long long counts[8] = {0};
  int tagged_pos = -1;
  long long tagged_disp = 0;
};

}  // namespace

TrajectoryRecord simulate(const SlowBondParams& params, const Configuration& init,
                          double macro_horizon, std::uint64_t seed, const ObserverSpec& observers,
                          const SimulateOptions& options) {
  params.validate();
  if (macro_horizon < 0.0) throw std::invalid_argument("macro_horizon must be >= 0");
  const int N = options.lattice_size > 0 ? options.lattice_size : params.n;
  if (N < params.n) throw std::invalid_argument("lattice_size must be >= n");
  if (init.size() != N) throw std::invalid_argument("initial configuration size mismatch");
  if (observers.watched_bonds.size() > 8)
    throw std::invalid_argument("at most 8 watched bonds supported");
  for (int b : observers.watched_bonds)
    if (b < 0 || b >= N) throw std::invalid_argument("watched bond out of range");
  if (observers.tagged_site >= N) throw std::invalid_argument("tagged site out of range");
  if (observers.tagged_site >= 0 && !init[observers.tagged_site])
    throw std::invalid_argument("tagged site must hold a particle");

  // Rates use the scaling parameter n; the lattice may be larger.
  const double slow = params.slow_rate();
  const double total_rate = static_cast<double>(N - 1) + slow;
  const double p_slow = slow / total_rate;
  // Maps the remaining probability mass uniformly onto bonds 0..N-2.
  const double rest_scale = static_cast<double>(N - 1) / (1.0 - p_slow);
  const int slow_bond = N - 1;
  const double n2 = static_cast<double>(params.n) * static_cast<double>(params.n);

  std::vector<double> snap_times = options.snapshot_macro_times;
  std::sort(snap_times.begin(), snap_times.end());
  for (double t : snap_times)
    if (t < 0.0 || t > macro_horizon + 1e-12)
      throw std::invalid_argument("snapshot time outside [0, macro_horizon]");
  if (snap_times.empty() || snap_times.back() < macro_horizon)
    snap_times.push_back(macro_horizon);

  Configuration config = init;
  std::uint8_t* occ = config.occ.data();

  ObserverState obs;
  obs.bonds = observers.watched_bonds.data();
  obs.num_bonds = static_cast<int>(observers.watched_bonds.size());
  obs.tagged_pos = observers.tagged_site;
  const bool track_tagged = observers.tagged_site >= 0;
  // Bond index -> 1 + position in the watched list (0: unwatched), so the
  // hot loop pays one byte load per event instead of a scan.
  std::vector<std::uint8_t> watch_map(static_cast<std::size_t>(N), 0);
  int canonical[8] = {0};  // first watched index for each bond, so duplicate
                           // entries in the watch list share one counter
  for (int i = 0; i < obs.num_bonds; ++i) {
    const auto b = static_cast<std::size_t>(obs.bonds[i]);
    if (watch_map[b] == 0) watch_map[b] = static_cast<std::uint8_t>(i + 1);
    canonical[i] = watch_map[b] - 1;
  }
  const std::uint8_t* watch = watch_map.data();

  Xoshiro256pp rng(seed);
  TrajectoryRecord record;
  record.snapshots.reserve(snap_times.size());

  auto take_snapshot = [&](double macro_t) {
    Snapshot s;
    s.macro_time = macro_t;
    s.config = config;
    s.currents.resize(static_cast<std::size_t>(obs.num_bonds));
    for (int i = 0; i < obs.num_bonds; ++i)
      s.currents[static_cast<std::size_t>(i)] = obs.counts[canonical[i]];
    s.tagged_pos = obs.tagged_pos;
    s.tagged_disp = obs.tagged_disp;
    record.snapshots.push_back(std::move(s));
  };

  double prev_micro = 0.0;
  for (double macro_t : snap_times) {
    const double micro_t = macro_t * n2;
    const double dmicro = micro_t - prev_micro;
    prev_micro = micro_t;
    if (dmicro > 0.0) {
      const double mean_events = total_rate * dmicro;
      if (mean_events > 9e15) throw std::overflow_error("event count would overflow");
      std::poisson_distribution<long long> poisson(mean_events);
      long long K = poisson(rng);
      record.clock_rings += static_cast<std::uint64_t>(K);
      // Branch-free inner loop: random-data branches (occupied-or-not, which
      // neighbor moved) mispredict half the time, so occupancies are written
      // unconditionally and the observers update through arithmetic masks.
      for (long long e = 0; e < K; ++e) {
        const double u = rng.u01();
        int b;
        if (u < p_slow) {
          b = slow_bond;
        } else {
          b = static_cast<int>((u - p_slow) * rest_scale);
          if (b > N - 2) b = N - 2;  // guards the open upper edge of u
        }
        const int x = b;
        const int y = (b == N - 1) ? 0 : b + 1;
        const std::uint8_t ox = occ[x];
        const std::uint8_t oy = occ[y];
        occ[x] = oy;
        occ[y] = ox;
        const long long dir = static_cast<long long>(ox) - static_cast<long long>(oy);
        record.effective_jumps += static_cast<std::uint64_t>(dir & 1);
        // Watched bonds and the tagged site are rare hits, so these branches
        // stay well predicted.
        const std::uint8_t wi = watch[b];
        if (wi != 0) obs.counts[wi - 1] += dir;
        if (track_tagged && (obs.tagged_pos == x || obs.tagged_pos == y)) {
          if (obs.tagged_pos == x && ox && !oy) {
            obs.tagged_pos = y;
            obs.tagged_disp += 1;
          } else if (obs.tagged_pos == y && oy && !ox) {
            obs.tagged_pos = x;
            obs.tagged_disp -= 1;
          }
        }
      }
    }
    take_snapshot(macro_t);
  }
  return record;
}

long long current_at(const Snapshot& snap, const ObserverSpec& spec, int bond) {
  for (std::size_t i = 0; i < spec.watched_bonds.size(); ++i)
    if (spec.watched_bonds[i] == bond) return snap.currents[i];
  throw std::invalid_argument("bond is not watched");
}

double rescaled_current(const Snapshot& snap, const ObserverSpec& spec, int bond, int n) {
  return static_cast<double>(current_at(snap, spec, bond)) / std::sqrt(static_cast<double>(n));
}

int bond_for_macro_point(double u, int n, int lattice_size) {
  const int N = lattice_size > 0 ? lattice_size : n;
  const long long site = static_cast<long long>(std::floor(u * n));
  const long long b = ((site - 1) % N + N) % N;
  return static_cast<int>(b);
}

int site_for_macro_point(double u, int n, int lattice_size) {
  const int N = lattice_size > 0 ? lattice_size : n;
  const long long site = static_cast<long long>(std::floor(u * n));
  return static_cast<int>((site % N + N) % N);
}

}  // namespace slowsep
