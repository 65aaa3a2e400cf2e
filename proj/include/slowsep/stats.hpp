#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "slowsep/closed_forms.hpp"
#include "slowsep/config.hpp"
#include "slowsep/engine.hpp"
#include "slowsep/params.hpp"
#include "slowsep/pde.hpp"
#include "slowsep/profile.hpp"

namespace slowsep {

// Mean / sample variance / standard error of an observable across an
// ensemble.
struct EnsembleSummary {
  long long m = 0;
  double mean = 0.0;
  double variance = 0.0;   // unbiased sample variance
  double std_error = 0.0;  // sqrt(variance / m), the error of the mean
  // Standard error of the variance estimate itself (Gaussian approximation
  // sqrt(2/(m-1)) * variance), used for variance-vs-theory z-scores.
  double variance_std_error = 0.0;
};

EnsembleSummary summarize(const std::vector<double>& xs);

// Runs f(i) for i in [0, m) across `workers` threads. Each index owns its
// seed and its output slot, so results are independent of the worker count
// and of scheduling.
void parallel_trajectories(long long m, int workers, const std::function<void(long long)>& f);

// ---------------------------------------------------------------------------
// Hydrodynamic law of large numbers.

struct LlnRow {
  int n = 0;
  std::string H_name;
  double mean_abs_error = 0.0;  // ensemble mean of |pairing - int H rho(t)|
  double std_error = 0.0;
};

struct LlnSpec {
  double alpha = 1.0;
  double beta = 0.0;
  DensityProfile rho0 = DensityProfile::constant(0.5);
  double t = 0.1;
  std::vector<int> n_list;
  int m = 100;
  std::uint64_t base_seed = 1;
  int grid_M = 512;
  int grid_steps = 4096;  // dt = t / grid_steps
  int workers = 1;
};

using NamedTestFunction = std::pair<std::string, std::function<double(double)>>;

std::vector<LlnRow> lln_experiment(const LlnSpec& spec,
                                   const std::vector<NamedTestFunction>& H_list);

// The regime-matching PDE solution for the spec's (alpha, beta).
GridSolution hydrodynamic_solution(double alpha, double beta, const DensityProfile& rho0,
                                   int M, double T, double dt);

// ---------------------------------------------------------------------------
// Current CLT.

struct CurrentCltCell {
  double u = 0.0;
  double t = 0.0;
  EnsembleSummary rescaled_current;  // J^n_u(t)/sqrt(n)
  double theory_variance = 0.0;
  double variance_z = 0.0;  // (empirical - theory) / variance_std_error
  double mean_z = 0.0;      // mean / std_error
};

struct CurrentCltSpec {
  SlowBondParams params;
  double rho = 0.5;
  std::vector<double> u_list;
  std::vector<double> t_list;
  long long m = 1000;
  std::uint64_t base_seed = 1;
  int lattice_size = 0;  // 0: use params.n
  int workers = 1;
};

std::vector<CurrentCltCell> current_clt_experiment(const CurrentCltSpec& spec);

// ---------------------------------------------------------------------------
// Tagged-particle CLT (one starting point u per run, since the initial
// measure is conditioned at floor(u n)).

struct TaggedCltCell {
  double u = 0.0;
  double t = 0.0;
  EnsembleSummary rescaled_displacement;  // X^n_u(t)/sqrt(n)
  double theory_variance = 0.0;
  double variance_z = 0.0;
};

struct TaggedCltResult {
  std::vector<TaggedCltCell> cells;
  long long pathwise_identity_checks = 0;
  long long pathwise_identity_violations = 0;
};

struct TaggedCltSpec {
  SlowBondParams params;
  double rho = 0.5;
  double u = 0.0;
  std::vector<double> t_list;
  long long m = 1000;
  std::uint64_t base_seed = 1;
  int lattice_size = 0;
  int workers = 1;
  int identity_max_k = 10;
};

TaggedCltResult tagged_clt_experiment(const TaggedCltSpec& spec);

// ---------------------------------------------------------------------------
// Density fluctuation field.

struct FieldCell {
  double t = 0.0;
  std::string H_name;
  EnsembleSummary field_value;  // Y^n_t(H)
  double theory_variance = 0.0;
  double variance_z = 0.0;
  double mean_z = 0.0;
};

struct FieldCovariance {
  double t = 0.0;
  std::string G_name, H_name;
  double empirical = 0.0;
  double theory = 0.0;
  double std_error = 0.0;
};

struct FieldResult {
  std::vector<FieldCell> cells;
  std::vector<FieldCovariance> covariances;
};

struct FieldSpec {
  SlowBondParams params;
  double rho = 0.5;
  std::vector<double> t_list;
  long long m = 1000;
  std::uint64_t base_seed = 1;
  int lattice_size = 0;
  int workers = 1;
};

FieldResult field_experiment(const FieldSpec& spec, const std::vector<SBetaFunction>& H_list);

// Evaluation of Y^n_t(H) on a configuration, with the slow bond mapped to
// macroscopic 0 (centered coordinates) and scaling parameter n.
double fluctuation_field(const Configuration& config, const SBetaFunction& H, double rho, int n);

// ---------------------------------------------------------------------------
// Martingale characterization of the limit field.

struct MartingaleReport {
  std::string H_name;
  double t = 0.0;
  EnsembleSummary martingale;  // M^n_t(H)
  double theory_variance = 0.0;
  double mean_z = 0.0;
  double variance_z = 0.0;
  int snapshots = 0;
};

struct MartingaleSpec {
  SlowBondParams params;
  double rho = 0.5;
  double t = 0.1;
  long long m = 1000;
  std::uint64_t base_seed = 1;
  int lattice_size = 0;
  int workers = 1;
  // The integrand Y_s(Delta_beta H) is rough (martingale-driven), so the
  // trapezoid rule needs a much finer grid than a smooth path would:
  // S = 16 inflates Var(M_t) by ~25% at desk scale, S = 64 is within ~2%.
  int snapshots_per_unit_time = 640;
  int min_snapshots = 64;
};

MartingaleReport martingale_check(const MartingaleSpec& spec, const SBetaFunction& H);

}  // namespace slowsep
