// Acceptance gate: one pass/fail line per criterion, exit 0 only if all
// pass. The later criteria run large ensembles and take many hours on one
// core; progress goes to stderr.
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "slowsep/closed_forms.hpp"
#include "slowsep/config.hpp"
#include "slowsep/engine.hpp"
#include "slowsep/generator.hpp"
#include "slowsep/params.hpp"
#include "slowsep/pde.hpp"
#include "slowsep/profile.hpp"
#include "slowsep/quadrature.hpp"
#include "slowsep/stats.hpp"

namespace fs = std::filesystem;
using namespace slowsep;

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kInf = std::numeric_limits<double>::infinity();

int g_failures = 0;
std::chrono::steady_clock::time_point g_start = std::chrono::steady_clock::now();

void report(int criterion, bool pass, const std::string& detail) {
  if (!pass) ++g_failures;
  std::printf("%s criterion %2d: %s\n", pass ? "PASS" : "FAIL", criterion, detail.c_str());
  std::fflush(stdout);
}

void progress(const std::string& what) {
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - g_start).count();
  std::fprintf(stderr, "[%8.1f s] %s\n", s, what.c_str());
  std::fflush(stderr);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

// ---------------------------------------------------------------- criterion 1
void criterion_1() {
  progress("criterion 1: stationarity residuals");
  double worst = 0.0;
  for (int n : {3, 4, 5})
    for (double rho : {0.3, 0.5, 0.7})
      for (double beta : {0.0, 1.0, kInf})
        for (double alpha : {0.5, 2.0}) {
          const auto gen = build_generator(SlowBondParams(n, alpha, beta));
          worst = std::max(worst, stationarity_residual(gen, rho));
        }
  report(1, worst <= 1e-12,
         "max stationarity residual over 54 parameter points = " + fmt(worst) + " (gate 1e-12)");
}

// ---------------------------------------------------------------- criterion 2
void criterion_2() {
  progress("criterion 2: simulator vs exact law, 1e5 trajectories");
  const int n = 4;
  const SlowBondParams params(n, 2.0, 1.0);
  const long long m = 100000;
  const double micro_t = 1.0;
  const double macro_t = micro_t / (n * n);
  std::vector<long long> counts(16, 0);
  for (long long i = 0; i < m; ++i) {
    const auto init = sample_bernoulli_product(DensityProfile::constant(0.3), n,
                                               2001 + 2 * static_cast<std::uint64_t>(i));
    const auto rec =
        simulate(params, init, macro_t, 2002 + 2 * static_cast<std::uint64_t>(i), {});
    int idx = 0;
    const auto& c = rec.snapshots.back().config;
    for (int x = 0; x < n; ++x) idx |= c[x] << x;
    counts[static_cast<std::size_t>(idx)] += 1;
  }
  const auto exact =
      exact_distribution(build_generator(params), bernoulli_state_vector(n, 0.3), micro_t);
  double tv = 0.0;
  for (int s = 0; s < 16; ++s)
    tv += std::abs(static_cast<double>(counts[s]) / static_cast<double>(m) - exact[s]);
  tv *= 0.5;
  report(2, tv <= 0.01, "TV(empirical law, exact law) = " + fmt(tv) + " (gate 0.01)");
}

// ---------------------------------------------------------------- criterion 3
void criterion_3() {
  progress("criterion 3: PDE convergence order");
  const double T = 0.1;
  bool pass = true;
  std::string detail;
  for (int which = 0; which < 2; ++which) {
    std::vector<double> errors;
    for (int M : {128, 256, 512}) {
      const double dt = T * 128.0 / (4.0 * 128.0 * M);  // dt halves with 1/M
      GridSolution sol;
      double decay;
      if (which == 0) {
        sol = solve_periodic(
            DensityProfile::from_callable(
                [](double u) { return 0.5 + 0.4 * std::cos(2.0 * kPi * u); }),
            M, T, dt);
        decay = std::exp(-4.0 * kPi * kPi * T);
      } else {
        sol = solve_neumann(DensityProfile::from_callable(
                                [](double u) { return 0.5 + 0.4 * std::cos(kPi * u); }),
                            M, T, dt);
        decay = std::exp(-kPi * kPi * T);
      }
      const int level = sol.level_at(T);
      double err = 0.0;
      for (int j = 0; j <= M; ++j) {
        const double mode = which == 0 ? std::cos(2.0 * kPi * sol.ugrid[j])
                                       : std::cos(kPi * sol.ugrid[j]);
        err = std::max(err, std::abs(sol.values(level, j) - (0.5 + 0.4 * decay * mode)));
      }
      errors.push_back(err);
    }
    const double r1 = errors[0] / errors[1];
    const double r2 = errors[1] / errors[2];
    pass = pass && r1 >= 3.5 && r2 >= 3.5;
    detail += std::string(which == 0 ? "periodic" : " neumann") + " ratios " + fmt(r1) + ", " +
              fmt(r2) + ";";
  }
  report(3, pass, detail + " (gate >= 3.5 per halving)");
}

// ---------------------------------------------------------------- criterion 4
void criterion_4() {
  progress("criterion 4: hydrodynamic law of large numbers");
  const std::vector<NamedTestFunction> hs = {
      {"one", [](double) { return 1.0; }},
      {"cos2pi", [](double u) { return std::cos(2.0 * kPi * u); }},
      {"bump",
       [](double u) {
         const double z = (u - 0.5) / 0.25;
         return std::abs(z) < 1.0 ? std::exp(-1.0 / (1.0 - z * z)) : 0.0;
       }}};
  struct RegimeSpec {
    double alpha, beta;
    const char* name;
  };
  bool pass = true;
  std::string detail;
  for (const RegimeSpec r : {RegimeSpec{1.0, 0.0, "sub"}, RegimeSpec{1.0, 1.0, "critical"},
                             RegimeSpec{1.0, kInf, "super"}}) {
    LlnSpec spec;
    spec.alpha = r.alpha;
    spec.beta = r.beta;
    spec.rho0 = DensityProfile::step(0.8, 0.2);
    spec.t = 0.1;
    spec.n_list = {200, 400};
    spec.m = 50;
    spec.base_seed = 4001;
    spec.grid_M = 512;
    spec.grid_steps = 4096;
    const auto rows = lln_experiment(spec, hs);
    double worst_400 = 0.0;
    bool shrinking = true;
    for (const auto& h : hs) {
      double e200 = 0.0, e400 = 0.0;
      for (const auto& row : rows) {
        if (row.H_name != h.first) continue;
        (row.n == 200 ? e200 : e400) = row.mean_abs_error;
      }
      worst_400 = std::max(worst_400, e400);
      shrinking = shrinking && e400 <= e200;
    }
    pass = pass && worst_400 <= 0.05 && shrinking;
    detail += std::string(r.name) + " max err(n=400) " + fmt(worst_400) +
              (shrinking ? " (<= n=200); " : " (NOT <= n=200); ");
  }
  report(4, pass, detail + "(gate 0.05)");
}

// ---------------------------------------------------------------- criterion 5
void criterion_5() {
  progress("criterion 5: macroscopic phase transition in alpha");
  const std::vector<double> alphas = {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3};
  const int M = 512;
  const double T = 0.5;
  const auto rows =
      phase_transition_curve(DensityProfile::step(0.8, 0.2), alphas, M, T, T / (8.0 * M));
  bool mono = true;
  for (std::size_t i = 1; i < rows.size(); ++i)
    mono = mono && rows[i].dist_to_neumann >= rows[i - 1].dist_to_neumann - 1e-12 &&
           rows[i].dist_to_periodic <= rows[i - 1].dist_to_periodic + 1e-12;
  const double d_per = rows.back().dist_to_periodic;   // alpha = 1e3
  const double d_neu = rows.front().dist_to_neumann;   // alpha = 1e-3
  report(5, d_per <= 0.02 && d_neu <= 0.02 && mono,
         "dist_to_periodic(1e3) = " + fmt(d_per) + ", dist_to_neumann(1e-3) = " + fmt(d_neu) +
             (mono ? ", monotone" : ", NOT monotone") + " (gates 0.02)");
}

// ---------------------------------------------------------------- criterion 6
void criterion_6() {
  progress("criterion 6: Gaussian-tail kernel vs quadrature");
  double worst = 0.0;
  for (double t : {0.1, 1.0, 10.0})
    for (int x = -5; x <= 5; ++x) {
      const double upper = x + 60.0 * std::sqrt(t);
      const double q = integrate(
          [t](double v) { return std::exp(-v * v / (4.0 * t)) / std::sqrt(4.0 * kPi * t); }, x,
          upper, 1e-13);
      worst = std::max(worst, std::abs(phi(t, x) - q));
    }
  report(6, worst <= 1e-10, "max |phi - quadrature| = " + fmt(worst) + " (gate 1e-10)");
}

// ---------------------------------------------------------------- criterion 7
void criterion_7() {
  progress("criterion 7: critical formula interpolates sub and super");
  double worst_sub = 0.0, worst_super = 0.0;
  for (double u : {0.0, 0.3}) {
    worst_sub = std::max(worst_sub,
                         std::abs(current_variance(Regime::Critical, 0.4, u, 0.5, 1e4) -
                                  current_variance(Regime::Sub, 0.4, u, 0.5)));
    worst_super = std::max(worst_super,
                           std::abs(current_variance(Regime::Critical, 0.4, u, 0.5, 1e-4) -
                                    current_variance(Regime::Super, 0.4, u, 0.5)));
  }
  report(7, worst_sub <= 1e-3 && worst_super <= 1e-3,
         "|critical(1e4) - sub| = " + fmt(worst_sub) + ", |critical(1e-4) - super| = " +
             fmt(worst_super) + " (gates 1e-3)");
}

// --------------------------------------------------------------- criterion 10
void criterion_10() {
  progress("criterion 10a: initial fluctuation-field variances (m = 1e4)");
  bool pass = true;
  std::string detail;
  {
    FieldSpec spec;
    spec.params = SlowBondParams(500, 1.0, 1.0);
    spec.rho = 0.5;
    spec.t_list = {0.0};
    spec.m = 10000;
    spec.base_seed = 10001;
    const auto family = make_test_family(Regime::Critical, 1.0, 0.1);
    const auto result = field_experiment(spec, family);
    for (const auto& c : result.cells) {
      const double rel = std::abs(c.field_value.variance - c.theory_variance) / c.theory_variance;
      pass = pass && rel <= 0.10;
      detail += "Var(Y_0(" + c.H_name + ")) rel err " + fmt(rel) + "; ";
    }
  }
  struct RegimeSpec {
    double beta;
    Regime regime;
    const char* H;
  };
  for (const RegimeSpec r : {RegimeSpec{0.0, Regime::Sub, "gauss"},
                             RegimeSpec{1.0, Regime::Critical, "robin_step"},
                             RegimeSpec{kInf, Regime::Super, "right_step"}}) {
    progress(std::string("criterion 10b: martingale check, H = ") + r.H);
    MartingaleSpec spec;
    spec.params = SlowBondParams(500, 1.0, r.beta);
    spec.rho = 0.5;
    spec.t = 0.1;
    spec.m = 10000;
    spec.base_seed = 10101;
    const auto family = make_test_family(r.regime, 1.0, 0.1);
    const SBetaFunction* H = nullptr;
    for (const auto& f : family)
      if (f.name() == r.H) H = &f;
    const auto rep = martingale_check(spec, *H);
    const double rel = std::abs(rep.martingale.variance - rep.theory_variance) / rep.theory_variance;
    const bool ok = std::abs(rep.mean_z) <= 3.0 && rel <= 0.15;
    pass = pass && ok;
    detail += std::string("M(") + r.H + ") |mean z| " + fmt(std::abs(rep.mean_z)) +
              ", var rel err " + fmt(rel) + "; ";
  }
  report(10, pass, detail + "(gates 10%, |z|<=3, 15%)");
}

// ---------------------------------------------------------------- criterion 8
// The limit formulas are for the infinite lattice; at t = 0.5 a torus of n
// sites biases the variance upward by ~45%, so the dynamics run on 3n sites
// (measured residual bias ~0.3%, well inside the statistical gates) while
// rates and the diffusive clock keep the scaling parameter n.
constexpr int kCltLatticeFactor = 3;

void criterion_8() {
  bool pass = true;
  std::string detail;
  struct RegimeSpec {
    double beta;
    const char* name;
  };
  for (const RegimeSpec r :
       {RegimeSpec{0.0, "sub"}, RegimeSpec{1.0, "crit"}, RegimeSpec{kInf, "super"}}) {
    progress(std::string("criterion 8: current ensemble, beta regime ") + r.name +
             " (1e4 trajectories, hours)");
    CurrentCltSpec spec;
    spec.params = SlowBondParams(500, 1.0, r.beta);
    spec.rho = 0.5;
    spec.u_list = {0.0, 0.2};
    spec.t_list = {0.5};
    spec.m = 10000;
    spec.base_seed = 8001;
    spec.lattice_size = kCltLatticeFactor * 500;
    const auto cells = current_clt_experiment(spec);
    for (const auto& c : cells) {
      const std::string tag = std::string(r.name) + " u=" + fmt(c.u);
      if (c.theory_variance == 0.0) {
        const bool ok = c.rescaled_current.variance == 0.0 && c.rescaled_current.mean == 0.0;
        pass = pass && ok;
        detail += tag + " current identically 0: " + (ok ? "yes" : "NO") + "; ";
        continue;
      }
      const double rel = std::abs(c.rescaled_current.variance - c.theory_variance) / c.theory_variance;
      const bool ok = std::abs(c.variance_z) <= 3.0 && rel <= 0.10;
      pass = pass && ok;
      detail += tag + " |z| " + fmt(std::abs(c.variance_z)) + " rel " + fmt(rel) + "; ";
    }
  }
  report(8, pass, detail + "(gates |z|<=3 and 10%)");
}

// ---------------------------------------------------------------- criterion 9
void criterion_9() {
  bool pass = true;
  std::string detail;
  long long checks = 0, violations = 0;
  struct RegimeSpec {
    double beta;
    const char* name;
  };
  for (const RegimeSpec r :
       {RegimeSpec{0.0, "sub"}, RegimeSpec{1.0, "crit"}, RegimeSpec{kInf, "super"}}) {
    for (double u : {0.0, 0.2}) {
      progress(std::string("criterion 9: tagged ensemble, ") + r.name + " u=" + fmt(u) +
               " (1e4 trajectories, hours)");
      TaggedCltSpec spec;
      spec.params = SlowBondParams(500, 1.0, r.beta);
      spec.rho = 0.5;
      spec.u = u;
      spec.t_list = {0.5};
      spec.m = 10000;
      spec.base_seed = 9001;
      spec.lattice_size = kCltLatticeFactor * 500;
      spec.identity_max_k = 10;
      const auto result = tagged_clt_experiment(spec);
      checks += result.pathwise_identity_checks;
      violations += result.pathwise_identity_violations;
      const auto& c = result.cells.front();
      const std::string tag = std::string(r.name) + " u=" + fmt(u);
      if (c.theory_variance == 0.0) {
        // Fully blocked bond, tagged particle at the wall: the limit variance
        // vanishes and a z-score gate degenerates, so gate the finite-n
        // variance (empirically ~2(1-rho)/(rho^2 n) ~ 4e-3) absolutely.
        const bool ok = c.rescaled_displacement.variance <= 0.01;
        pass = pass && ok;
        detail += tag + " var " + fmt(c.rescaled_displacement.variance) + " (abs gate 0.01); ";
        continue;
      }
      const bool ok = std::abs(c.variance_z) <= 3.0;
      pass = pass && ok;
      detail += tag + " |z| " + fmt(std::abs(c.variance_z)) + "; ";
    }
  }
  pass = pass && violations == 0;
  report(9, pass, detail + "pathwise identity " + std::to_string(violations) + "/" +
                      std::to_string(checks) + " violations (gates |z|<=3, 0 violations)");
}

// --------------------------------------------------------------- criterion 11
int run_cli(const std::string& cli, const std::string& args) {
  const std::string cmd = cli + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void criterion_11(const std::string& cli) {
  progress("criterion 11: manifest reruns are byte-identical");
  if (cli.empty()) {
    report(11, false, "command-line binary path not supplied");
    return;
  }
  const fs::path tmp = fs::temp_directory_path() / ("slowsep_accept_" + std::to_string(::getpid()));
  fs::remove_all(tmp);
  fs::create_directories(tmp);
  bool pass = true;
  std::string detail;
  const std::vector<std::pair<std::string, std::string>> experiments = {
      {"current-clt",
       "current-clt --n 48 --alpha 1 --beta 1 --rho 0.5 --u-list 0,0.2 --t-list 0.1 "
       "--m 80 --seed 1101 --lattice-factor 2"},
      {"field",
       "field --n 48 --alpha 2 --beta 1 --rho 0.4 --t-list 0,0.05 --m 60 --seed 1102 "
       "--scale 0.1"},
      {"lln",
       "lln --alpha 1 --beta 0 --profile step:0.8,0.2 --t 0.05 --n-list 40,80 --m 20 "
       "--seed 1103 --grid-M 128 --grid-steps 256"}};
  for (const auto& [name, args] : experiments) {
    const fs::path a = tmp / (name + "_a"), b = tmp / (name + "_b");
    const int ca = run_cli(cli, args + " --workers 2 --out " + a.string());
    const int cb =
        run_cli(cli, name + " --config " + (a / "manifest.json").string() +
                         " --workers 5 --out " + b.string());
    const bool ran = ca != 2 && ca != -1 && cb != 2 && cb != -1;
    const bool identical = ran && slurp(a / "results.csv") == slurp(b / "results.csv") &&
                           !slurp(a / "results.csv").empty();
    pass = pass && identical;
    detail += name + (identical ? " identical; " : " DIFFERS; ");
  }
  fs::remove_all(tmp);
  report(11, pass, detail + "(workers 2 vs 5, rerun from manifest)");
}

}  // namespace

int main(int argc, char** argv) {
  const std::string cli = argc > 1 ? argv[1] : "";
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_4();
  criterion_11(cli);
  criterion_10();
  criterion_8();
  criterion_9();
  if (g_failures == 0)
    std::printf("ACCEPTANCE: all 11 criteria pass\n");
  else
    std::printf("ACCEPTANCE: %d criterion/criteria FAILED\n", g_failures);
  return g_failures == 0 ? 0 : 1;
}
