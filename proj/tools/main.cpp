// Command-line front end: every experiment writes results.csv, manifest.json
// and summary.txt under --out. Re-running a subcommand with
// --config <manifest.json> reproduces the CSV byte-for-byte, independent of
// the worker count.
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "slowsep/closed_forms.hpp"
#include "slowsep/config.hpp"
#include "slowsep/csvio.hpp"
#include "slowsep/engine.hpp"
#include "slowsep/generator.hpp"
#include "slowsep/params.hpp"
#include "slowsep/pde.hpp"
#include "slowsep/profile.hpp"
#include "slowsep/quadrature.hpp"
#include "slowsep/stats.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace slowsep;

namespace {

constexpr double kPi = 3.14159265358979323846;

double parse_beta(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  std::size_t pos = 0;
  const double v = std::stod(s, &pos);
  if (pos != s.size()) throw CLI::ValidationError("--beta", "expected a number or 'inf'");
  if (v < 0.0) throw CLI::ValidationError("--beta", "must be >= 0");
  return v;
}

std::string join_doubles(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ',';
    s += format_double(xs[i]);
  }
  return s;
}

// A gate is one pass/fail line of summary.txt.
struct Gate {
  bool pass;
  std::string text;
};

// Per-subcommand bookkeeping: effective config for the manifest plus the
// gates accumulated while running.
struct RunContext {
  std::string subcommand;
  std::string out_dir;
  std::map<std::string, std::string> config;  // manifest payload, CLI spelling
  std::vector<Gate> gates;
  std::vector<std::string> outputs;

  void gate(bool pass, const std::string& text) { gates.push_back({pass, text}); }

  std::string path(const std::string& name) {
    outputs.push_back(name);
    return (fs::path(out_dir) / name).string();
  }

  int finish() {
    json manifest;
    manifest["subcommand"] = subcommand;
    manifest["config"] = config;
    std::string payload = subcommand;
    for (const auto& [k, v] : config) payload += "|" + k + "=" + v;
    manifest["config_hash"] = content_hash(payload);
    manifest["outputs"] = outputs;
    {
      std::ofstream m(fs::path(out_dir) / "manifest.json", std::ios::binary);
      m << manifest.dump(2) << "\n";
    }
    bool all_pass = true;
    std::ofstream s(fs::path(out_dir) / "summary.txt", std::ios::binary);
    for (const auto& g : gates) {
      all_pass = all_pass && g.pass;
      s << (g.pass ? "PASS " : "FAIL ") << g.text << "\n";
      std::cout << (g.pass ? "PASS " : "FAIL ") << g.text << "\n";
    }
    if (gates.empty()) s << "PASS (no gates)\n";
    return all_pass ? 0 : 1;
  }
};

// Registers an option that remembers its effective value for the manifest.
// TakeLast lets explicit CLI flags override --config-injected values.
class OptionSet {
 public:
  OptionSet(CLI::App* cmd, RunContext* ctx) : cmd_(cmd), ctx_(ctx) {}

  CLI::Option* add(const std::string& name, int& ref, const std::string& desc) {
    return record(cmd_->add_option("--" + name, ref, desc), name,
                  [&ref] { return std::to_string(ref); });
  }
  CLI::Option* add(const std::string& name, long long& ref, const std::string& desc) {
    return record(cmd_->add_option("--" + name, ref, desc), name,
                  [&ref] { return std::to_string(ref); });
  }
  CLI::Option* add(const std::string& name, double& ref, const std::string& desc) {
    return record(cmd_->add_option("--" + name, ref, desc), name,
                  [&ref] { return format_double(ref); });
  }
  CLI::Option* add(const std::string& name, std::string& ref, const std::string& desc) {
    return record(cmd_->add_option("--" + name, ref, desc), name, [&ref] { return ref; });
  }
  CLI::Option* add(const std::string& name, std::uint64_t& ref, const std::string& desc) {
    return record(cmd_->add_option("--" + name, ref, desc), name,
                  [&ref] { return std::to_string(ref); });
  }
  // Comma-separated list in one token, so config round-trips stay exact.
  CLI::Option* add_list(const std::string& name, std::vector<double>& ref,
                        const std::string& desc) {
    auto* opt = cmd_->add_option_function<std::string>(
        "--" + name,
        [&ref, name](const std::string& s) {
          ref.clear();
          std::stringstream ss(s);
          std::string tok;
          while (std::getline(ss, tok, ',')) ref.push_back(std::stod(tok));
          if (ref.empty()) throw CLI::ValidationError(name, "empty list");
        },
        desc);
    return record(opt, name, [&ref] { return join_doubles(ref); });
  }

  // Runs after parsing: snapshot every registered value into the manifest.
  void snapshot() {
    for (const auto& [name, get] : getters_) ctx_->config[name] = get();
  }

 private:
  CLI::Option* record(CLI::Option* opt, const std::string& name,
                      std::function<std::string()> getter) {
    opt->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    getters_.emplace_back(name, std::move(getter));
    return opt;
  }

  CLI::App* cmd_;
  RunContext* ctx_;
  std::vector<std::pair<std::string, std::function<std::string()>>> getters_;
};

std::vector<NamedTestFunction> lln_test_functions() {
  return {
      {"one", [](double) { return 1.0; }},
      {"cos2pi", [](double u) { return std::cos(2.0 * kPi * u); }},
      {"bump",
       [](double u) {
         const double z = (u - 0.5) / 0.25;
         return std::abs(z) < 1.0 ? std::exp(-1.0 / (1.0 - z * z)) : 0.0;
       }},
  };
}

// Shared numeric-parameter block for the stochastic experiments.
struct StochasticArgs {
  int n = 500;
  double alpha = 1.0;
  std::string beta_str = "0";
  double rho = 0.5;
  long long m = 1000;
  std::uint64_t seed = 0;
  int workers = 1;
  int lattice_factor = 1;

  double beta() const { return parse_beta(beta_str); }
  SlowBondParams params() const { return SlowBondParams(n, alpha, beta()); }
  int lattice_size() const { return n * lattice_factor; }
};

void add_stochastic(OptionSet& opts, StochasticArgs& a, CLI::App* cmd) {
  opts.add("n", a.n, "number of sites (scaling parameter)");
  opts.add("alpha", a.alpha, "slow-bond strength");
  opts.add("beta", a.beta_str, "slowness exponent (number or 'inf')");
  opts.add("rho", a.rho, "density of the stationary start");
  opts.add("m", a.m, "ensemble size");
  opts.add("seed", a.seed, "base seed")->required();
  opts.add("lattice-factor", a.lattice_factor,
           "simulated torus size as a multiple of n (approximates the infinite lattice)");
  cmd->add_option("--workers", a.workers, "thread count (does not affect results)")
      ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
}

void write_summary_row(CsvWriter& csv, const std::string& kind, double u, double t,
                       const EnsembleSummary& s, double theory, double mean_z, double variance_z) {
  csv.write_row({kind, format_double(u), format_double(t), std::to_string(s.m),
                 format_double(s.mean), format_double(s.std_error), format_double(s.variance),
                 format_double(s.variance_std_error), format_double(theory),
                 format_double(mean_z), format_double(variance_z)});
}

// --config accepts either a bare config object or a manifest produced by an
// earlier run; injects the values as CLI tokens before the explicit flags.
std::vector<std::string> expand_config(const std::vector<std::string>& raw) {
  std::string config_path;
  std::vector<std::string> args;
  args.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    if (raw[i] == "--config") {
      if (i + 1 >= raw.size()) throw CLI::ValidationError("--config", "missing file name");
      config_path = raw[++i];
    } else if (raw[i].rfind("--config=", 0) == 0) {
      config_path = raw[i].substr(9);
    } else {
      args.push_back(raw[i]);
    }
  }
  if (config_path.empty()) return args;
  if (args.empty()) throw CLI::ValidationError("--config", "a subcommand must come first");
  std::ifstream in(config_path);
  if (!in) throw CLI::ValidationError("--config", "cannot read " + config_path);
  json j = json::parse(in);
  if (j.contains("config")) {  // manifest form
    if (j.contains("subcommand") && j["subcommand"] != args.front())
      throw CLI::ValidationError("--config",
                                 "manifest belongs to subcommand '" +
                                     j["subcommand"].get<std::string>() + "'");
    j = j["config"];
  }
  std::vector<std::string> merged;
  merged.push_back(args.front());
  for (const auto& [key, value] : j.items()) {
    merged.push_back("--" + key);
    if (value.is_string())
      merged.push_back(value.get<std::string>());
    else
      merged.push_back(value.dump());
  }
  merged.insert(merged.end(), args.begin() + 1, args.end());
  return merged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Slow-bond exclusion process laboratory"};
  app.require_subcommand(1);

  // Shared state across lambdas; each subcommand fills ctx and runs.
  RunContext ctx;
  int exit_code = 0;
  auto out_option = [&](CLI::App* cmd) {
    cmd->add_option("--out", ctx.out_dir, "output directory")
        ->required()
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  };
  auto begin_run = [&](const char* name, OptionSet& opts) {
    ctx.subcommand = name;
    fs::create_directories(ctx.out_dir);
    opts.snapshot();
  };

  // ---------------------------------------------------------------- simulate
  {
    auto* cmd = app.add_subcommand("simulate", "single trajectory trace");
    auto opts = std::make_shared<OptionSet>(cmd, &ctx);
    auto a = std::make_shared<StochasticArgs>();
    auto profile = std::make_shared<std::string>("constant:0.5");
    auto horizon = std::make_shared<double>(0.1);
    auto snapshots = std::make_shared<std::vector<double>>();
    auto watch = std::make_shared<std::string>();
    auto tag_site = std::make_shared<int>(-1);
    add_stochastic(*opts, *a, cmd);
    opts->add("profile", *profile, "initial profile, e.g. constant:0.5 or step:0.8,0.2");
    opts->add("t", *horizon, "macro horizon");
    opts->add_list("snapshots", *snapshots, "macro snapshot times");
    opts->add("watch-bonds", *watch, "comma-separated bond indices to track");
    opts->add("tag-site", *tag_site, "site of the tagged particle (-1: none)");
    out_option(cmd);
    cmd->callback([&, opts, a, profile, horizon, snapshots, watch, tag_site] {
      begin_run("simulate", *opts);
      const auto params = a->params();
      const int N = a->lattice_size();
      ObserverSpec obs;
      if (!watch->empty()) {
        std::stringstream ss(*watch);
        std::string tok;
        while (std::getline(ss, tok, ',')) obs.watched_bonds.push_back(std::stoi(tok));
      }
      obs.tagged_site = *tag_site;
      Configuration init =
          sample_bernoulli_product(DensityProfile::parse(*profile), N, a->seed);
      if (obs.tagged_site >= 0 && obs.tagged_site < N) init[obs.tagged_site] = 1;
      SimulateOptions opt;
      opt.snapshot_macro_times = *snapshots;
      opt.lattice_size = N;
      const auto rec = simulate(params, init, *horizon, a->seed + 1, obs, opt);
      CsvWriter csv(ctx.path("results.csv"));
      csv.write_row({"macro_time", "kind", "index", "value"});
      for (const auto& snap : rec.snapshots) {
        for (int x = 0; x < N; ++x)
          csv.write_row({format_double(snap.macro_time), "occupancy", std::to_string(x),
                         std::to_string(static_cast<int>(snap.config[x]))});
        for (std::size_t b = 0; b < obs.watched_bonds.size(); ++b)
          csv.write_row({format_double(snap.macro_time), "current",
                         std::to_string(obs.watched_bonds[b]),
                         std::to_string(snap.currents[b])});
        if (obs.tagged_site >= 0) {
          csv.write_row({format_double(snap.macro_time), "tagged_pos", "0",
                         std::to_string(snap.tagged_pos)});
          csv.write_row({format_double(snap.macro_time), "tagged_disp", "0",
                         std::to_string(snap.tagged_disp)});
        }
      }
      ctx.gate(true, "trajectory written (" + std::to_string(rec.clock_rings) +
                         " clock rings, " + std::to_string(rec.effective_jumps) + " jumps)");
      exit_code = ctx.finish();
    });
  }

  // ------------------------------------------------------------ oracle-check
  {
    auto* cmd = app.add_subcommand("oracle-check",
                                   "stationarity residual and simulator-vs-exact law");
    auto opts = std::make_shared<OptionSet>(cmd, &ctx);
    auto n = std::make_shared<int>(4);
    auto alpha = std::make_shared<double>(1.0);
    auto beta_str = std::make_shared<std::string>("1");
    auto rho = std::make_shared<double>(0.5);
    auto m = std::make_shared<long long>(0);
    auto micro_t = std::make_shared<double>(1.0);
    auto seed = std::make_shared<std::uint64_t>(0);
    auto tv_tol = std::make_shared<double>(0.01);
    opts->add("n", *n, "number of sites (<= 12)");
    opts->add("alpha", *alpha, "slow-bond strength");
    opts->add("beta", *beta_str, "slowness exponent (number or 'inf')");
    opts->add("rho", *rho, "Bernoulli density");
    opts->add("m", *m, "trajectories for the empirical law (0: skip)");
    opts->add("micro-t", *micro_t, "micro time of the law comparison");
    opts->add("seed", *seed, "base seed")->required();
    opts->add("tv-tol", *tv_tol, "total-variation gate");
    out_option(cmd);
    cmd->callback([&, opts, n, alpha, beta_str, rho, m, micro_t, seed, tv_tol] {
      begin_run("oracle-check", *opts);
      const SlowBondParams params(*n, *alpha, parse_beta(*beta_str));
      const auto gen = build_generator(params);
      const double residual = stationarity_residual(gen, *rho);
      CsvWriter csv(ctx.path("results.csv"));
      csv.write_row({"metric", "value"});
      csv.write_row({"stationarity_residual", format_double(residual)});
      ctx.gate(residual <= 1e-12,
               "stationarity residual " + format_double(residual) + " <= 1e-12");
      if (*m > 0) {
        const double macro_t = *micro_t / (static_cast<double>(*n) * *n);
        std::vector<long long> counts(static_cast<std::size_t>(1) << *n, 0);
        for (long long i = 0; i < *m; ++i) {
          const auto init = sample_bernoulli_product(
              DensityProfile::constant(*rho), *n, *seed + 2 * static_cast<std::uint64_t>(i));
          const auto rec = simulate(params, init, macro_t,
                                    *seed + 2 * static_cast<std::uint64_t>(i) + 1, {});
          int idx = 0;
          const auto& c = rec.snapshots.back().config;
          for (int x = 0; x < *n; ++x) idx |= c[x] << x;
          counts[static_cast<std::size_t>(idx)] += 1;
        }
        const auto exact =
            exact_distribution(gen, bernoulli_state_vector(*n, *rho), *micro_t);
        double tv = 0.0;
        for (std::size_t s = 0; s < counts.size(); ++s)
          tv += std::abs(static_cast<double>(counts[s]) / static_cast<double>(*m) -
                         exact[static_cast<Eigen::Index>(s)]);
        tv *= 0.5;
        csv.write_row({"tv_distance", format_double(tv)});
        ctx.gate(tv <= *tv_tol, "TV(empirical, exact) " + format_double(tv) +
                                    " <= " + format_double(*tv_tol));
      }
      exit_code = ctx.finish();
    });
  }

  // --------------------------------------------------------------------- pde
  {
    auto* cmd = app.add_subcommand("pde", "heat equation solver");
    auto opts = std::make_shared<OptionSet>(cmd, &ctx);
    auto bc = std::make_shared<std::string>("periodic");
    auto alpha = std::make_shared<double>(1.0);
    auto profile = std::make_shared<std::string>("constant:0.5");
    auto T = std::make_shared<double>(0.1);
    auto M = std::make_shared<int>(256);
    auto dt = std::make_shared<double>(0.0);
    auto scheme = std::make_shared<std::string>("crank-nicolson");
    auto stride = std::make_shared<int>(16);
    // Discontinuous initial data makes the weak-form residual O(1/M) near
    // the jump, so the default gate is deliberately loose; tighten it for
    // smooth profiles or fine grids.
    auto residual_tol = std::make_shared<double>(0.1);
    opts->add("bc", *bc, "periodic | robin | neumann");
    opts->add("alpha", *alpha, "Robin coupling strength");
    opts->add("profile", *profile, "initial profile");
    opts->add("T", *T, "final time");
    opts->add("M", *M, "grid intervals");
    opts->add("dt", *dt, "time step (0: T/(8M))");
    opts->add("scheme", *scheme, "crank-nicolson | explicit-euler");
    opts->add("stride", *stride, "write every k-th time level");
    opts->add("residual-tol", *residual_tol, "weak-form residual gate");
    out_option(cmd);
    cmd->callback([&, opts, bc, alpha, profile, T, M, dt, scheme, stride, residual_tol] {
      begin_run("pde", *opts);
      const double step = *dt > 0.0 ? *dt : *T / (8.0 * *M);
      const auto rho0 = DensityProfile::parse(*profile);
      const Scheme sch = *scheme == "explicit-euler" ? Scheme::ExplicitEuler
                         : *scheme == "crank-nicolson"
                             ? Scheme::CrankNicolson
                             : throw CLI::ValidationError("--scheme", "unknown scheme");
      GridSolution sol;
      if (*bc == "periodic")
        sol = solve_periodic(rho0, *M, *T, step, sch);
      else if (*bc == "robin")
        sol = solve_robin(rho0, *alpha, *M, *T, step, sch);
      else if (*bc == "neumann")
        sol = solve_neumann(rho0, *M, *T, step, sch);
      else
        throw CLI::ValidationError("--bc", "unknown boundary condition");

      CsvWriter csv(ctx.path("results.csv"));
      csv.write_row({"t", "u", "rho"});
      for (int k = 0; k <= sol.steps(); k += std::max(1, *stride))
        for (int j = 0; j <= sol.M; ++j)
          csv.write_row({format_double(sol.time(k)), format_double(sol.ugrid[j]),
                         format_double(sol.values(k, j))});

      double drift = 0.0;
      for (int k = 0; k <= sol.steps(); ++k)
        drift = std::max(drift, std::abs(sol.mass(k) - sol.mass(0)));
      ctx.gate(drift <= 1e-12, "mass drift " + format_double(drift) + " <= 1e-12");
      const double lo = sol.values.minCoeff(), hi = sol.values.maxCoeff();
      ctx.gate(lo > -1e-9 && hi < 1.0 + 1e-9,
               "range [" + format_double(lo) + ", " + format_double(hi) + "] within [0,1]");
      const TestFunctionCT H{
          [](double t, double u) { return (1.0 + t) * std::cos(kPi * u); },
          [](double, double u) { return std::cos(kPi * u); },
          [](double t, double u) { return -(1.0 + t) * kPi * std::sin(kPi * u); },
          [](double t, double u) { return -(1.0 + t) * kPi * kPi * std::cos(kPi * u); }};
      const double res = weak_residual(sol, H, *T);
      ctx.gate(res <= *residual_tol, "weak-form residual " + format_double(res) +
                                         " <= " + format_double(*residual_tol));
      exit_code = ctx.finish();
    });
  }

  // -------------------------------------------------------- phase-transition
  {
    auto* cmd = app.add_subcommand("phase-transition",
                                   "Robin solutions between Neumann and periodic");
    auto opts = std::make_shared<OptionSet>(cmd, &ctx);
    auto profile = std::make_shared<std::string>("step:0.8,0.2");
    auto T = std::make_shared<double>(0.5);
    auto M = std::make_shared<int>(512);
    auto dt = std::make_shared<double>(0.0);
    auto alphas = std::make_shared<std::vector<double>>(
        std::vector<double>{1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0});
    opts->add("profile", *profile, "initial profile");
    opts->add("T", *T, "final time");
    opts->add("M", *M, "grid intervals");
    opts->add("dt", *dt, "time step (0: T/(8M))");
    opts->add_list("alphas", *alphas, "Robin strengths");
    out_option(cmd);
    cmd->callback([&, opts, profile, T, M, dt, alphas] {
      begin_run("phase-transition", *opts);
      const double step = *dt > 0.0 ? *dt : *T / (8.0 * *M);
      const auto rows =
          phase_transition_curve(DensityProfile::parse(*profile), *alphas, *M, *T, step);
      CsvWriter csv(ctx.path("results.csv"));
      csv.write_row({"alpha", "dist_to_neumann", "dist_to_periodic"});
      bool mono = true;
      for (std::size_t i = 0; i < rows.size(); ++i) {
        csv.write_row({format_double(rows[i].alpha), format_double(rows[i].dist_to_neumann),
                       format_double(rows[i].dist_to_periodic)});
        if (i > 0)
          mono = mono && rows[i].dist_to_neumann >= rows[i - 1].dist_to_neumann - 1e-12 &&
                 rows[i].dist_to_periodic <= rows[i - 1].dist_to_periodic + 1e-12;
      }
      ctx.gate(mono, "distance columns monotone in alpha");
      exit_code = ctx.finish();
    });
  }

  // --------------------------------------------------------------------- lln
  {
    auto* cmd = app.add_subcommand("lln", "hydrodynamic law of large numbers");
    auto opts = std::make_shared<OptionSet>(cmd, &ctx);
    auto a = std::make_shared<StochasticArgs>();
    auto profile = std::make_shared<std::string>("step:0.8,0.2");
    auto t = std::make_shared<double>(0.1);
    auto n_list = std::make_shared<std::vector<double>>(std::vector<double>{200, 400});
    auto M = std::make_shared<int>(512);
    auto steps = std::make_shared<int>(4096);
    auto tol = std::make_shared<double>(0.05);
    add_stochastic(*opts, *a, cmd);
    opts->add("profile", *profile, "initial profile");
    opts->add("t", *t, "macro observation time");
    opts->add_list("n-list", *n_list, "lattice sizes, increasing");
    opts->add("grid-M", *M, "PDE grid intervals");
    opts->add("grid-steps", *steps, "PDE time steps");
    opts->add("tol", *tol, "mean-error gate at the largest n");
    out_option(cmd);
    cmd->callback([&, opts, a, profile, t, n_list, M, steps, tol] {
      begin_run("lln", *opts);
      LlnSpec spec;
      spec.alpha = a->alpha;
      spec.beta = a->beta();
      spec.rho0 = DensityProfile::parse(*profile);
      spec.t = *t;
      for (double n : *n_list) spec.n_list.push_back(static_cast<int>(n));
      spec.m = static_cast<int>(a->m);
      spec.base_seed = a->seed;
      spec.grid_M = *M;
      spec.grid_steps = *steps;
      spec.workers = a->workers;
      const auto rows = lln_experiment(spec, lln_test_functions());
      CsvWriter csv(ctx.path("results.csv"));
      csv.write_row({"n", "H", "mean_abs_error", "std_error"});
      for (const auto& r : rows)
        csv.write_row({std::to_string(r.n), r.H_name, format_double(r.mean_abs_error),
                       format_double(r.std_error)});
      const int n_small = spec.n_list.front(), n_large = spec.n_list.back();
      for (const auto& name : {"one", "cos2pi", "bump"}) {
        double small_err = 0.0, large_err = 0.0;
        for (const auto& r : rows) {
          if (r.H_name != name) continue;
          if (r.n == n_small) small_err = r.mean_abs_error;
          if (r.n == n_large) large_err = r.mean_abs_error;
        }
        ctx.gate(large_err <= *tol, std::string(name) + ": error at n=" +
                                        std::to_string(n_large) + " is " +
                                        format_double(large_err) + " <= " + format_double(*tol));
        ctx.gate(large_err <= small_err,
                 std::string(name) + ": error shrinks from n=" + std::to_string(n_small) +
                     " (" + format_double(small_err) + ") to n=" + std::to_string(n_large) +
                     " (" + format_double(large_err) + ")");
      }
      exit_code = ctx.finish();
    });
  }

  // ------------------------------------------------------------------- field
  {
    auto* cmd = app.add_subcommand("field", "density fluctuation field statistics");
    auto opts = std::make_shared<OptionSet>(cmd, &ctx);
    auto a = std::make_shared<StochasticArgs>();
    auto t_list = std::make_shared<std::vector<double>>(std::vector<double>{0.0});
    auto scale = std::make_shared<double>(0.1);
    add_stochastic(*opts, *a, cmd);
    opts->add_list("t-list", *t_list, "macro observation times");
    opts->add("scale", *scale, "Gaussian envelope width of the test functions");
    out_option(cmd);
    cmd->callback([&, opts, a, t_list, scale] {
      begin_run("field", *opts);
      FieldSpec spec;
      spec.params = a->params();
      spec.rho = a->rho;
      spec.t_list = *t_list;
      spec.m = a->m;
      spec.base_seed = a->seed;
      spec.lattice_size = a->lattice_size();
      spec.workers = a->workers;
      const auto family = make_test_family(spec.params.regime(), a->alpha, *scale);
      const auto result = field_experiment(spec, family);
      CsvWriter csv(ctx.path("results.csv"));
      csv.write_row({"kind", "t", "G", "H", "m", "mean", "std_error", "variance",
                     "variance_std_error", "theory_variance", "mean_z", "variance_z"});
      for (const auto& c : result.cells) {
        const auto& s = c.field_value;
        csv.write_row({"cell", format_double(c.t), "", c.H_name, std::to_string(s.m),
                       format_double(s.mean), format_double(s.std_error),
                       format_double(s.variance), format_double(s.variance_std_error),
                       format_double(c.theory_variance), format_double(c.mean_z),
                       format_double(c.variance_z)});
        ctx.gate(std::abs(c.mean_z) <= 3.0, "mean of Y_t(" + c.H_name + ") at t=" +
                                                format_double(c.t) + ": |z| = " +
                                                format_double(std::abs(c.mean_z)) + " <= 3");
        ctx.gate(std::abs(c.variance_z) <= 3.0,
                 "variance of Y_t(" + c.H_name + ") at t=" + format_double(c.t) +
                     ": |z| = " + format_double(std::abs(c.variance_z)) + " <= 3");
      }
      for (const auto& c : result.covariances) {
        csv.write_row({"covariance", format_double(c.t), c.G_name, c.H_name, "",
                       format_double(c.empirical), format_double(c.std_error), "", "",
                       format_double(c.theory), "", ""});
        const double z = (c.empirical - c.theory) / c.std_error;
        ctx.gate(std::abs(z) <= 3.0, "covariance (" + c.G_name + ", " + c.H_name + ") at t=" +
                                         format_double(c.t) + ": |z| = " +
                                         format_double(std::abs(z)) + " <= 3");
      }
      exit_code = ctx.finish();
    });
  }

  // -------------------------------------------------------------- martingale
  {
    auto* cmd = app.add_subcommand("martingale", "Dynkin martingale of the field");
    auto opts = std::make_shared<OptionSet>(cmd, &ctx);
    auto a = std::make_shared<StochasticArgs>();
    auto t = std::make_shared<double>(0.1);
    auto scale = std::make_shared<double>(0.1);
    auto H_name = std::make_shared<std::string>("gauss");
    auto var_tol = std::make_shared<double>(0.15);
    add_stochastic(*opts, *a, cmd);
    opts->add("t", *t, "macro horizon");
    opts->add("scale", *scale, "Gaussian envelope width");
    opts->add("H", *H_name, "test function name within the regime family");
    opts->add("var-tol", *var_tol, "relative variance gate");
    out_option(cmd);
    cmd->callback([&, opts, a, t, scale, H_name, var_tol] {
      begin_run("martingale", *opts);
      MartingaleSpec spec;
      spec.params = a->params();
      spec.rho = a->rho;
      spec.t = *t;
      spec.m = a->m;
      spec.base_seed = a->seed;
      spec.lattice_size = a->lattice_size();
      spec.workers = a->workers;
      const auto family = make_test_family(spec.params.regime(), a->alpha, *scale);
      const SBetaFunction* H = nullptr;
      for (const auto& f : family)
        if (f.name() == *H_name) H = &f;
      if (!H) throw CLI::ValidationError("--H", "unknown test function for this regime");
      const auto report = martingale_check(spec, *H);
      CsvWriter csv(ctx.path("results.csv"));
      csv.write_row({"kind", "t", "G", "H", "m", "mean", "std_error", "variance",
                     "variance_std_error", "theory_variance", "mean_z", "variance_z"});
      const auto& s = report.martingale;
      csv.write_row({"martingale", format_double(report.t), "", report.H_name,
                     std::to_string(s.m), format_double(s.mean), format_double(s.std_error),
                     format_double(s.variance), format_double(s.variance_std_error),
                     format_double(report.theory_variance), format_double(report.mean_z),
                     format_double(report.variance_z)});
      ctx.gate(std::abs(report.mean_z) <= 3.0,
               "martingale mean |z| = " + format_double(std::abs(report.mean_z)) + " <= 3");
      const double rel =
          std::abs(s.variance - report.theory_variance) / report.theory_variance;
      ctx.gate(rel <= *var_tol, "martingale variance relative error " + format_double(rel) +
                                    " <= " + format_double(*var_tol));
      exit_code = ctx.finish();
    });
  }

  // ------------------------------------------------------------- current-clt
  {
    auto* cmd = app.add_subcommand("current-clt", "rescaled current fluctuations");
    auto opts = std::make_shared<OptionSet>(cmd, &ctx);
    auto a = std::make_shared<StochasticArgs>();
    auto u_list = std::make_shared<std::vector<double>>(std::vector<double>{0.0, 0.2});
    auto t_list = std::make_shared<std::vector<double>>(std::vector<double>{0.5});
    add_stochastic(*opts, *a, cmd);
    opts->add_list("u-list", *u_list, "macroscopic observation points");
    opts->add_list("t-list", *t_list, "macro observation times, increasing");
    out_option(cmd);
    cmd->callback([&, opts, a, u_list, t_list] {
      begin_run("current-clt", *opts);
      CurrentCltSpec spec;
      spec.params = a->params();
      spec.rho = a->rho;
      spec.u_list = *u_list;
      spec.t_list = *t_list;
      spec.m = a->m;
      spec.base_seed = a->seed;
      spec.lattice_size = a->lattice_size();
      spec.workers = a->workers;
      const auto cells = current_clt_experiment(spec);
      CsvWriter csv(ctx.path("results.csv"));
      csv.write_row({"kind", "u", "t", "m", "mean", "std_error", "variance",
                     "variance_std_error", "theory_variance", "mean_z", "variance_z"});
      for (const auto& c : cells) {
        write_summary_row(csv, "current", c.u, c.t, c.rescaled_current, c.theory_variance,
                          c.mean_z, c.variance_z);
        const std::string where =
            "(u=" + format_double(c.u) + ", t=" + format_double(c.t) + ")";
        if (c.theory_variance == 0.0) {
          // A fully blocked slow bond carries no current at all.
          ctx.gate(c.rescaled_current.variance == 0.0,
                   "current variance at " + where + " exactly 0");
          continue;
        }
        ctx.gate(std::abs(c.mean_z) <= 3.0,
                 "current mean at " + where + ": |z| = " +
                     format_double(std::abs(c.mean_z)) + " <= 3");
        ctx.gate(std::abs(c.variance_z) <= 3.0,
                 "current variance at " + where + ": |z| = " +
                     format_double(std::abs(c.variance_z)) + " <= 3");
        const double rel =
            std::abs(c.rescaled_current.variance - c.theory_variance) / c.theory_variance;
        ctx.gate(rel <= 0.10, "current variance at " + where + ": relative error " +
                                  format_double(rel) + " <= 0.1");
      }
      exit_code = ctx.finish();
    });
  }

  // -------------------------------------------------------------- tagged-clt
  {
    auto* cmd = app.add_subcommand("tagged-clt", "tagged-particle fluctuations");
    auto opts = std::make_shared<OptionSet>(cmd, &ctx);
    auto a = std::make_shared<StochasticArgs>();
    auto u = std::make_shared<double>(0.0);
    auto t_list = std::make_shared<std::vector<double>>(std::vector<double>{0.5});
    auto max_k = std::make_shared<int>(10);
    auto zero_tol = std::make_shared<double>(0.01);
    add_stochastic(*opts, *a, cmd);
    opts->add("u", *u, "macroscopic start point of the tagged particle");
    opts->add_list("t-list", *t_list, "macro observation times, increasing");
    opts->add("max-k", *max_k, "pathwise identity depth");
    opts->add("zero-tol", *zero_tol,
              "absolute variance gate where the limit variance vanishes");
    out_option(cmd);
    cmd->callback([&, opts, a, u, t_list, max_k, zero_tol] {
      begin_run("tagged-clt", *opts);
      TaggedCltSpec spec;
      spec.params = a->params();
      spec.rho = a->rho;
      spec.u = *u;
      spec.t_list = *t_list;
      spec.m = a->m;
      spec.base_seed = a->seed;
      spec.lattice_size = a->lattice_size();
      spec.workers = a->workers;
      spec.identity_max_k = *max_k;
      const auto result = tagged_clt_experiment(spec);
      CsvWriter csv(ctx.path("results.csv"));
      csv.write_row({"kind", "u", "t", "m", "mean", "std_error", "variance",
                     "variance_std_error", "theory_variance", "mean_z", "variance_z"});
      for (const auto& c : result.cells) {
        const auto& s = c.rescaled_displacement;
        write_summary_row(csv, "tagged", c.u, c.t, s, c.theory_variance,
                          s.std_error > 0 ? s.mean / s.std_error : 0.0, c.variance_z);
        const std::string where =
            "(u=" + format_double(c.u) + ", t=" + format_double(c.t) + ")";
        if (c.theory_variance == 0.0) {
          // The limit variance vanishes, so the z-score degenerates; gate the
          // empirical variance by an absolute finite-n tolerance instead.
          ctx.gate(s.variance <= *zero_tol,
                   "tagged variance at " + where + " (limit 0): " +
                       format_double(s.variance) + " <= " + format_double(*zero_tol));
          continue;
        }
        ctx.gate(std::abs(c.variance_z) <= 3.0,
                 "tagged variance at " + where + ": |z| = " +
                     format_double(std::abs(c.variance_z)) + " <= 3");
      }
      csv.write_row({"identity_checks", "", "", std::to_string(result.pathwise_identity_checks),
                     "", "", "", "", "", "", ""});
      csv.write_row({"identity_violations", "", "",
                     std::to_string(result.pathwise_identity_violations), "", "", "", "", "",
                     "", ""});
      ctx.gate(result.pathwise_identity_violations == 0,
               "pathwise identity: " + std::to_string(result.pathwise_identity_violations) +
                   " violations in " + std::to_string(result.pathwise_identity_checks) +
                   " checks");
      exit_code = ctx.finish();
    });
  }

  // ---------------------------------------------------------------- formulas
  {
    auto* cmd = app.add_subcommand("formulas", "closed-form limit variances");
    auto opts = std::make_shared<OptionSet>(cmd, &ctx);
    auto regime_name_s = std::make_shared<std::string>("sub");
    auto alpha = std::make_shared<double>(1.0);
    auto rho = std::make_shared<double>(0.5);
    auto u = std::make_shared<double>(0.0);
    auto t = std::make_shared<double>(1.0);
    opts->add("regime", *regime_name_s, "sub | critical | super");
    opts->add("alpha", *alpha, "slow-bond strength (critical regime)");
    opts->add("rho", *rho, "density");
    opts->add("u", *u, "macroscopic point");
    opts->add("t", *t, "macro time");
    cmd->add_option("--out", ctx.out_dir, "optional output directory")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    cmd->callback([&, opts, regime_name_s, alpha, rho, u, t] {
      Regime regime;
      if (*regime_name_s == "sub")
        regime = Regime::Sub;
      else if (*regime_name_s == "critical")
        regime = Regime::Critical;
      else if (*regime_name_s == "super")
        regime = Regime::Super;
      else
        throw CLI::ValidationError("--regime", "unknown regime");
      const double jv = current_variance(regime, *rho, *u, *t, *alpha);
      const double xv = tagged_variance(regime, *rho, *u, *t, *alpha);
      // Independent check of the Gaussian-tail building block.
      double max_gap = 0.0;
      for (double tt : {0.1, 1.0, 10.0}) {
        for (int x = -5; x <= 5; ++x) {
          const double upper = x + 60.0 * std::sqrt(tt);
          const double q = integrate(
              [tt](double v) {
                return std::exp(-v * v / (4.0 * tt)) / std::sqrt(4.0 * kPi * tt);
              },
              x, upper, 1e-13);
          max_gap = std::max(max_gap, std::abs(phi(tt, x) - q));
        }
      }
      std::cout << "current_variance = " << format_double(jv) << "\n";
      std::cout << "tagged_variance = " << format_double(xv) << "\n";
      std::cout << "phi_quadrature_max_gap = " << format_double(max_gap) << "\n";
      const bool pass = max_gap <= 1e-10;
      if (!ctx.out_dir.empty()) {
        ctx.subcommand = "formulas";
        fs::create_directories(ctx.out_dir);
        opts->snapshot();
        CsvWriter csv(ctx.path("results.csv"));
        csv.write_row({"metric", "value"});
        csv.write_row({"current_variance", format_double(jv)});
        csv.write_row({"tagged_variance", format_double(xv)});
        csv.write_row({"phi_quadrature_max_gap", format_double(max_gap)});
        ctx.gate(pass, "phi matches its defining integral within 1e-10");
        exit_code = ctx.finish();
      } else {
        std::cout << (pass ? "PASS" : "FAIL")
                  << " phi matches its defining integral within 1e-10\n";
        exit_code = pass ? 0 : 1;
      }
    });
  }

  try {
    const std::vector<std::string> args = expand_config({argv + 1, argv + argc});
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    app.exit(e);  // prints the message
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return exit_code;
}
