#include "slowsep/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace slowsep {

EnsembleSummary summarize(const std::vector<double>& xs) {
  const long long m = static_cast<long long>(xs.size());
  if (m < 2) throw std::invalid_argument("ensemble needs at least two trajectories");
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(m);
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  EnsembleSummary s;
  s.m = m;
  s.mean = mean;
  s.variance = ss / static_cast<double>(m - 1);
  s.std_error = std::sqrt(s.variance / static_cast<double>(m));
  s.variance_std_error = s.variance * std::sqrt(2.0 / static_cast<double>(m - 1));
  return s;
}

void parallel_trajectories(long long m, int workers, const std::function<void(long long)>& f) {
  if (workers <= 1) {
    for (long long i = 0; i < m; ++i) f(i);
    return;
  }
  std::atomic<long long> next{0};
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const long long i = next.fetch_add(1);
        if (i >= m || failed.load()) break;
        try {
          f(i);
        } catch (...) {
          failed.store(true);
          break;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failed.load()) throw std::runtime_error("trajectory worker failed");
}

GridSolution hydrodynamic_solution(double alpha, double beta, const DensityProfile& rho0, int M,
                                   double T, double dt) {
  switch (regime_of(beta)) {
    case Regime::Sub: return solve_periodic(rho0, M, T, dt);
    case Regime::Critical: return solve_robin(rho0, alpha, M, T, dt);
    case Regime::Super: return solve_neumann(rho0, M, T, dt);
  }
  throw std::logic_error("unreachable");
}

namespace {

// Each trajectory consumes two seeds: one for the initial sample, one for
// the dynamics.
std::uint64_t sampling_seed(std::uint64_t base, long long i) {
  return base + 2 * static_cast<std::uint64_t>(i);
}
std::uint64_t dynamics_seed(std::uint64_t base, long long i) {
  return base + 2 * static_cast<std::uint64_t>(i) + 1;
}

double trapz_integral_of_solution(const GridSolution& sol, int level,
                                  const std::function<double(double)>& H) {
  const double h = 1.0 / sol.M;
  double s = 0.5 * (sol.values(level, 0) * H(0.0) + sol.values(level, sol.M) * H(1.0));
  for (int j = 1; j < sol.M; ++j) s += sol.values(level, j) * H(sol.ugrid[j]);
  return s * h;
}

// Site weights of a fluctuation-field test function on the simulated torus,
// with the slow bond at macroscopic 0. Only sites where H is nonnegligible
// are kept.
struct FieldWeights {
  std::vector<int> sites;
  std::vector<double> w;

  template <class Eval>
  FieldWeights(int lattice_size, int n, Eval&& eval) {
    for (int i = 0; i < lattice_size; ++i) {
      const int x = (i <= lattice_size / 2) ? i : i - lattice_size;
      const double value = eval(static_cast<double>(x) / n);
      if (std::abs(value) > 1e-15) {
        sites.push_back(i);
        w.push_back(value);
      }
    }
  }

  double pair(const Configuration& config, double rho, int n) const {
    double acc = 0.0;
    for (std::size_t k = 0; k < sites.size(); ++k)
      acc += w[k] * (static_cast<double>(config[sites[k]]) - rho);
    return acc / std::sqrt(static_cast<double>(n));
  }
};

}  // namespace

double fluctuation_field(const Configuration& config, const SBetaFunction& H, double rho, int n) {
  const FieldWeights weights(config.size(), n, [&](double u) { return H(u); });
  return weights.pair(config, rho, n);
}

std::vector<LlnRow> lln_experiment(const LlnSpec& spec,
                                   const std::vector<NamedTestFunction>& H_list) {
  if (spec.m < 2) throw std::invalid_argument("m must be >= 2");
  if (H_list.empty()) throw std::invalid_argument("need at least one test function");
  std::vector<LlnRow> rows;
  for (int n : spec.n_list) {
    const SlowBondParams params(n, spec.alpha, spec.beta);
    const double dt = spec.t / spec.grid_steps;
    const GridSolution sol =
        hydrodynamic_solution(spec.alpha, spec.beta, spec.rho0, spec.grid_M, spec.t, dt);
    const int level = sol.level_at(spec.t);
    std::vector<double> targets;
    targets.reserve(H_list.size());
    for (const auto& [name, H] : H_list) {
      (void)name;
      targets.push_back(trapz_integral_of_solution(sol, level, H));
    }

    std::vector<std::vector<double>> abs_errors(H_list.size(),
                                                std::vector<double>(spec.m, 0.0));
    parallel_trajectories(spec.m, spec.workers, [&](long long i) {
      const Configuration init =
          sample_bernoulli_product(spec.rho0, n, sampling_seed(spec.base_seed, i));
      SimulateOptions opt;
      opt.snapshot_macro_times = {spec.t};
      const TrajectoryRecord rec =
          simulate(params, init, spec.t, dynamics_seed(spec.base_seed, i), {}, opt);
      const Configuration& final_config = rec.snapshots.back().config;
      for (std::size_t h = 0; h < H_list.size(); ++h) {
        const double pairing = empirical_pairing(final_config, H_list[h].second);
        abs_errors[h][static_cast<std::size_t>(i)] = std::abs(pairing - targets[h]);
      }
    });

    for (std::size_t h = 0; h < H_list.size(); ++h) {
      const EnsembleSummary s = summarize(abs_errors[h]);
      rows.push_back({n, H_list[h].first, s.mean, s.std_error});
    }
  }
  return rows;
}

std::vector<CurrentCltCell> current_clt_experiment(const CurrentCltSpec& spec) {
  spec.params.validate();
  if (spec.m < 2) throw std::invalid_argument("m must be >= 2");
  const int n = spec.params.n;
  const int N = spec.lattice_size > 0 ? spec.lattice_size : n;

  ObserverSpec obs;
  for (double u : spec.u_list) obs.watched_bonds.push_back(bond_for_macro_point(u, n, N));

  const std::size_t cells = spec.u_list.size() * spec.t_list.size();
  std::vector<std::vector<double>> samples(cells,
                                           std::vector<double>(static_cast<std::size_t>(spec.m)));
  const DensityProfile flat = DensityProfile::constant(spec.rho);

  parallel_trajectories(spec.m, spec.workers, [&](long long i) {
    const Configuration init = sample_bernoulli_product(flat, N, sampling_seed(spec.base_seed, i));
    SimulateOptions opt;
    opt.snapshot_macro_times = spec.t_list;
    opt.lattice_size = N;
    const double horizon = spec.t_list.back();
    const TrajectoryRecord rec =
        simulate(spec.params, init, horizon, dynamics_seed(spec.base_seed, i), obs, opt);
    for (std::size_t ti = 0; ti < spec.t_list.size(); ++ti) {
      const Snapshot& snap = rec.snapshots[ti];
      for (std::size_t ui = 0; ui < spec.u_list.size(); ++ui) {
        const double j = static_cast<double>(snap.currents[ui]) / std::sqrt(static_cast<double>(n));
        samples[ui * spec.t_list.size() + ti][static_cast<std::size_t>(i)] = j;
      }
    }
  });

  std::vector<CurrentCltCell> out;
  for (std::size_t ui = 0; ui < spec.u_list.size(); ++ui) {
    for (std::size_t ti = 0; ti < spec.t_list.size(); ++ti) {
      CurrentCltCell cell;
      cell.u = spec.u_list[ui];
      cell.t = spec.t_list[ti];
      cell.rescaled_current = summarize(samples[ui * spec.t_list.size() + ti]);
      cell.theory_variance = current_variance(spec.params.regime(), spec.rho, cell.u, cell.t,
                                              spec.params.alpha);
      const auto& s = cell.rescaled_current;
      cell.variance_z = s.variance_std_error > 0.0
                            ? (s.variance - cell.theory_variance) / s.variance_std_error
                            : 0.0;
      cell.mean_z = s.std_error > 0.0 ? s.mean / s.std_error : 0.0;
      out.push_back(cell);
    }
  }
  return out;
}

TaggedCltResult tagged_clt_experiment(const TaggedCltSpec& spec) {
  spec.params.validate();
  if (spec.m < 2) throw std::invalid_argument("m must be >= 2");
  if (!(spec.rho > 0.0 && spec.rho < 1.0))
    throw std::invalid_argument("tagged experiment requires rho in (0,1)");
  const int n = spec.params.n;
  const int N = spec.lattice_size > 0 ? spec.lattice_size : n;
  const int start_site = site_for_macro_point(spec.u, n, N);
  const int bond = bond_for_macro_point(spec.u, n, N);

  ObserverSpec obs;
  obs.watched_bonds = {bond};
  obs.tagged_site = start_site;

  std::vector<std::vector<double>> samples(spec.t_list.size(),
                                           std::vector<double>(static_cast<std::size_t>(spec.m)));
  std::atomic<long long> checks{0}, violations{0};

  parallel_trajectories(spec.m, spec.workers, [&](long long i) {
    const Configuration init =
        sample_conditioned(spec.rho, N, start_site, sampling_seed(spec.base_seed, i));
    SimulateOptions opt;
    opt.snapshot_macro_times = spec.t_list;
    opt.lattice_size = N;
    const TrajectoryRecord rec = simulate(spec.params, init, spec.t_list.back(),
                                          dynamics_seed(spec.base_seed, i), obs, opt);
    long long local_checks = 0, local_violations = 0;
    for (std::size_t ti = 0; ti < spec.t_list.size(); ++ti) {
      const Snapshot& snap = rec.snapshots[ti];
      if (!snap.config[snap.tagged_pos])
        throw std::logic_error("tagged particle lost");
      samples[ti][static_cast<std::size_t>(i)] =
          static_cast<double>(snap.tagged_disp) / std::sqrt(static_cast<double>(n));
      // Order preservation ties the tagged displacement to the current:
      // {X >= k} iff {J >= sum of eta over the k sites from the start site}.
      long long occupancy_sum = 0;
      for (int k = 1; k <= spec.identity_max_k; ++k) {
        occupancy_sum += snap.config[(start_site + k - 1) % N];
        const bool lhs = snap.tagged_disp >= k;
        const bool rhs = snap.currents[0] >= occupancy_sum;
        ++local_checks;
        if (lhs != rhs) ++local_violations;
      }
    }
    checks.fetch_add(local_checks);
    violations.fetch_add(local_violations);
  });

  TaggedCltResult result;
  result.pathwise_identity_checks = checks.load();
  result.pathwise_identity_violations = violations.load();
  for (std::size_t ti = 0; ti < spec.t_list.size(); ++ti) {
    TaggedCltCell cell;
    cell.u = spec.u;
    cell.t = spec.t_list[ti];
    cell.rescaled_displacement = summarize(samples[ti]);
    cell.theory_variance =
        tagged_variance(spec.params.regime(), spec.rho, spec.u, cell.t, spec.params.alpha);
    const auto& s = cell.rescaled_displacement;
    cell.variance_z = s.variance_std_error > 0.0
                          ? (s.variance - cell.theory_variance) / s.variance_std_error
                          : 0.0;
    result.cells.push_back(cell);
  }
  return result;
}

FieldResult field_experiment(const FieldSpec& spec, const std::vector<SBetaFunction>& H_list) {
  spec.params.validate();
  if (spec.m < 2) throw std::invalid_argument("m must be >= 2");
  if (H_list.empty()) throw std::invalid_argument("need at least one test function");
  const int n = spec.params.n;
  const int N = spec.lattice_size > 0 ? spec.lattice_size : n;
  const DensityProfile flat = DensityProfile::constant(spec.rho);

  std::vector<FieldWeights> weights;
  weights.reserve(H_list.size());
  for (const auto& H : H_list)
    weights.emplace_back(N, n, [&](double u) { return H(u); });

  const std::size_t nh = H_list.size();
  const std::size_t nt = spec.t_list.size();
  std::vector<std::vector<double>> samples(nh * nt,
                                           std::vector<double>(static_cast<std::size_t>(spec.m)));

  parallel_trajectories(spec.m, spec.workers, [&](long long i) {
    const Configuration init = sample_bernoulli_product(flat, N, sampling_seed(spec.base_seed, i));
    SimulateOptions opt;
    opt.snapshot_macro_times = spec.t_list;
    opt.lattice_size = N;
    const TrajectoryRecord rec = simulate(spec.params, init, spec.t_list.back(),
                                          dynamics_seed(spec.base_seed, i), {}, opt);
    for (std::size_t ti = 0; ti < nt; ++ti) {
      const Configuration& config = rec.snapshots[ti].config;
      for (std::size_t h = 0; h < nh; ++h)
        samples[h * nt + ti][static_cast<std::size_t>(i)] =
            weights[h].pair(config, spec.rho, n);
    }
  });

  FieldResult result;
  for (std::size_t h = 0; h < nh; ++h) {
    for (std::size_t ti = 0; ti < nt; ++ti) {
      FieldCell cell;
      cell.t = spec.t_list[ti];
      cell.H_name = H_list[h].name();
      cell.field_value = summarize(samples[h * nt + ti]);
      cell.theory_variance = y0_variance(H_list[h], spec.rho);
      const auto& s = cell.field_value;
      cell.variance_z = (s.variance - cell.theory_variance) / s.variance_std_error;
      cell.mean_z = s.mean / s.std_error;
      result.cells.push_back(cell);
    }
  }
  for (std::size_t a = 0; a < nh; ++a) {
    for (std::size_t b = a + 1; b < nh; ++b) {
      for (std::size_t ti = 0; ti < nt; ++ti) {
        const auto& xs = samples[a * nt + ti];
        const auto& ys = samples[b * nt + ti];
        const EnsembleSummary sa = summarize(xs);
        const EnsembleSummary sb = summarize(ys);
        double cov = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i)
          cov += (xs[i] - sa.mean) * (ys[i] - sb.mean);
        cov /= static_cast<double>(xs.size() - 1);
        FieldCovariance fc;
        fc.t = spec.t_list[ti];
        fc.G_name = H_list[a].name();
        fc.H_name = H_list[b].name();
        fc.empirical = cov;
        fc.theory = y0_covariance(H_list[a], H_list[b], spec.rho);
        fc.std_error =
            std::sqrt((sa.variance * sb.variance + cov * cov) / static_cast<double>(xs.size()));
        result.covariances.push_back(fc);
      }
    }
  }
  return result;
}

MartingaleReport martingale_check(const MartingaleSpec& spec, const SBetaFunction& H) {
  spec.params.validate();
  if (spec.m < 2) throw std::invalid_argument("m must be >= 2");
  if (!(spec.t > 0.0)) throw std::invalid_argument("t must be > 0");
  const int n = spec.params.n;
  const int N = spec.lattice_size > 0 ? spec.lattice_size : n;
  const DensityProfile flat = DensityProfile::constant(spec.rho);

  const int S = std::max(spec.min_snapshots,
                         static_cast<int>(std::ceil(spec.snapshots_per_unit_time * spec.t)));
  std::vector<double> snap_times(static_cast<std::size_t>(S) + 1);
  for (int j = 0; j <= S; ++j) snap_times[static_cast<std::size_t>(j)] = spec.t * j / S;
  const double ds = spec.t / S;

  const FieldWeights wH(N, n, [&](double u) { return H(u); });
  const FieldWeights wLap(N, n, [&](double u) { return H.deriv(u, 2); });

  std::vector<double> samples(static_cast<std::size_t>(spec.m));
  parallel_trajectories(spec.m, spec.workers, [&](long long i) {
    const Configuration init = sample_bernoulli_product(flat, N, sampling_seed(spec.base_seed, i));
    SimulateOptions opt;
    opt.snapshot_macro_times = snap_times;
    opt.lattice_size = N;
    const TrajectoryRecord rec =
        simulate(spec.params, init, spec.t, dynamics_seed(spec.base_seed, i), {}, opt);
    double integral = 0.0;
    for (int j = 0; j <= S; ++j) {
      const double y = wLap.pair(rec.snapshots[static_cast<std::size_t>(j)].config, spec.rho, n);
      integral += (j == 0 || j == S) ? 0.5 * y : y;
    }
    integral *= ds;
    const double y0 = wH.pair(rec.snapshots.front().config, spec.rho, n);
    const double yt = wH.pair(rec.snapshots.back().config, spec.rho, n);
    samples[static_cast<std::size_t>(i)] = yt - y0 - integral;
  });

  MartingaleReport report;
  report.H_name = H.name();
  report.t = spec.t;
  report.snapshots = S;
  report.martingale = summarize(samples);
  report.theory_variance =
      2.0 * chi(spec.rho) * spec.t * grad_norm_2beta_sq(H, spec.params.regime());
  const auto& s = report.martingale;
  report.mean_z = s.mean / s.std_error;
  report.variance_z = (s.variance - report.theory_variance) / s.variance_std_error;
  return report;
}

}  // namespace slowsep
