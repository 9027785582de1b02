#include <chrono>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "svmcast/scenario_io.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitNumeric = 4;

using namespace svmcast;

AllocationProblem to_problem(const Scenario& sc) {
  return AllocationProblem{sc.layers, sc.classes, sc.n_max, sc.code};
}

void print_allocation(const std::string& label, const Allocation& a) {
  std::printf("%s:\n", label.c_str());
  if (!a.feasible) {
    std::printf("  infeasible (layer %d); base layer alone needs N_max >= %lld\n",
                a.first_infeasible_layer + 1, static_cast<long long>(a.min_feasible_n_max));
    return;
  }
  std::int64_t total = 0;
  for (std::size_t l = 0; l < a.deltas.size(); ++l) {
    std::printf("  layer %zu: delta = %.6f, symbols = %lld\n", l + 1, a.deltas[l],
                static_cast<long long>(a.symbols[l]));
    total += a.symbols[l];
  }
  std::printf("  total symbols = %lld, utility = %.6f, loss = %.6f\n",
              static_cast<long long>(total), a.utility, a.loss);
}

void write_allocation_csv(const std::string& path, const Allocation& a) {
  std::vector<std::vector<std::string>> rows;
  for (std::size_t l = 0; l < a.deltas.size(); ++l) {
    rows.push_back({std::to_string(l + 1), format_double(a.deltas[l]),
                    std::to_string(a.symbols[l])});
  }
  rows.push_back({"utility", format_double(a.utility), ""});
  write_csv(path, {"layer", "delta", "symbols"}, rows);
}

int cmd_optimize(const std::string& scenario_path, const std::string& solver,
                 const std::string& out_path, int grid_override, double lambda_override,
                 const std::vector<double>& prev) {
  ParsedScenario parsed = load_scenario(scenario_path);
  Scenario& sc = parsed.scenario;
  if (grid_override > 0) sc.grid_d = grid_override;
  ensure_fitted(sc.classes);
  AllocationProblem prob = to_problem(sc);

  Allocation a;
  if (solver == "exhaustive") {
    a = solve_exhaustive(prob, sc.grid_d);
  } else if (solver == "convex") {
    a = solve_convex(prob);
  } else if (solver == "gd") {
    Allocation init = solve_convex(prob);
    if (!init.feasible) {
      a = init;
    } else {
      a = solve_simplified_gd(prob, init.deltas);
    }
  } else if (solver == "eep") {
    a = eep_allocation(prob);
  } else if (solver == "dynamic") {
    const double lambda = lambda_override >= 0.0 ? lambda_override : sc.lambda;
    std::vector<double> prev_deltas = prev;
    if (prev_deltas.empty()) prev_deltas.assign(sc.layers.size(), 1.0);
    if (prev_deltas.size() != sc.layers.size()) {
      std::fprintf(stderr, "error: --prev needs one delta per layer\n");
      return kExitConfig;
    }
    a = solve_dynamic(prob, prev_deltas, lambda);
  } else {
    std::fprintf(stderr, "error: unknown solver '%s'\n", solver.c_str());
    return kExitConfig;
  }

  print_allocation(sc.name + " [" + solver + "]", a);
  if (!a.feasible) return kExitInfeasible;
  if (!out_path.empty()) write_allocation_csv(out_path, a);
  return kExitOk;
}

std::string manifest_path(const std::string& dir) { return dir + "/manifest.csv"; }

void write_manifest(const std::string& dir, const ParsedScenario& parsed,
                    const std::string& study, double runtime_s,
                    const std::vector<std::string>& outputs) {
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(parsed.config_hash));
  std::vector<std::vector<std::string>> rows = {
      {"scenario", parsed.scenario.name},
      {"study", study},
      {"config_hash", hash},
      {"seed", std::to_string(parsed.scenario.seed)},
      {"runtime_s", format_double(runtime_s)},
  };
  for (const auto& o : outputs) rows.push_back({"output", o});
  write_csv(manifest_path(dir), {"key", "value"}, rows);
}

int cmd_study(const std::string& scenario_path, const std::string& out_dir,
              std::uint64_t seed_override, bool has_seed) {
  ParsedScenario parsed = load_scenario(scenario_path);
  Scenario& sc = parsed.scenario;
  if (has_seed) sc.seed = seed_override;
  if (parsed.study.empty()) {
    std::fprintf(stderr, "error: scenario has no study section\n");
    return kExitConfig;
  }
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> outputs;

  if (parsed.study == "static") {
    std::vector<std::int64_t> budgets = sc.n_max_sweep;
    if (budgets.empty()) budgets.push_back(sc.n_max);
    std::vector<std::vector<std::string>> rows;
    for (std::int64_t n : budgets) {
      Scenario point = sc;
      point.n_max = n;
      StaticResult r = run_static(point);
      if (!r.feasible) {
        std::fprintf(stderr, "error: n_max = %lld infeasible\n", static_cast<long long>(n));
        return kExitInfeasible;
      }
      rows.push_back({std::to_string(n), format_double(r.u_eep), format_double(r.u_cv),
                      format_double(r.u_gd), format_double(r.u_opt), format_double(r.eta_cv),
                      format_double(r.eta_gd), format_double(r.eps_cv), format_double(r.eps_gd)});
    }
    const std::string path = out_dir + "/static.csv";
    write_csv(path, {"n_max", "u_eep", "u_cv", "u_gd", "u_opt", "eta_cv_pct", "eta_gd_pct",
                     "eps_cv_pct", "eps_gd_pct"},
              rows);
    outputs.push_back(path);
  } else if (parsed.study == "feedback") {
    auto sweep = sc.csfr_sweep;
    if (sweep.empty()) sweep = {0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0};
    auto points = run_reduced_feedback(sc, sweep);
    std::vector<std::vector<std::string>> rows;
    for (const auto& p : points) {
      rows.push_back({format_double(p.csfr), format_double(p.mean_eff_cv),
                      format_double(p.mean_eff_gd), format_double(p.std_eff_gd),
                      std::to_string(p.repetitions)});
    }
    const std::string path = out_dir + "/feedback.csv";
    write_csv(path, {"csfr", "mean_eff_cv_pct", "mean_eff_gd_pct", "std_eff_gd_pct", "reps"},
              rows);
    outputs.push_back(path);
  } else if (parsed.study == "crs") {
    auto sweep = sc.gamma_sweep;
    if (sweep.empty()) sweep = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    auto points = run_crs_study(sc, sweep);
    std::vector<std::vector<std::string>> rows;
    for (const auto& p : points) {
      rows.push_back(
          {format_double(p.gamma_max), format_double(p.mrr), format_double(p.eps_crs)});
    }
    const std::string path = out_dir + "/crs.csv";
    write_csv(path, {"gamma_max", "mrr", "eps_crs_pct"}, rows);
    outputs.push_back(path);
  } else if (parsed.study == "smoothing") {
    auto lambdas = sc.lambda_sweep;
    if (lambdas.empty()) lambdas = {sc.lambda};
    std::vector<std::int64_t> budgets = sc.n_max_sweep;
    if (budgets.empty()) budgets.push_back(sc.n_max);
    std::vector<std::vector<std::string>> rows;
    SmoothingResult last;
    for (std::int64_t n : budgets) {
      for (double lam : lambdas) {
        SmoothingResult r = run_smoothing(sc, lam, n);
        rows.push_back({format_double(lam), std::to_string(n), format_double(r.d_bar),
                        format_double(r.z), format_double(r.d_bar_eep), format_double(r.z_eep)});
        last = r;
      }
    }
    const std::string path = out_dir + "/smoothing.csv";
    write_csv(path, {"lambda", "n_max", "d_bar_pct", "z_pct", "d_bar_eep_pct", "z_eep_pct"},
              rows);
    outputs.push_back(path);
    {
      std::vector<std::vector<std::string>> trace;
      for (std::size_t k = 0; k < last.delta1_trace.size(); ++k) {
        trace.push_back({std::to_string(k + 1), format_double(last.delta1_trace[k]),
                         format_double(last.delta1_trace_eep[k])});
      }
      const std::string tpath = out_dir + "/smoothing_trace.csv";
      write_csv(tpath, {"segment", "delta1", "delta1_eep"}, trace);
      outputs.push_back(tpath);
    }
    if (!sc.sigma_sweep.empty()) {
      auto ffr = run_ffr(last.delta1_trace, sc.ffr_client_mean, sc.sigma_sweep, sc.ffr_trials,
                         derive_seed(sc.seed, 7));
      std::vector<std::vector<std::string>> frows;
      for (const auto& p : ffr) {
        frows.push_back({format_double(p.sigma), format_double(p.ffr)});
      }
      const std::string fpath = out_dir + "/ffr.csv";
      write_csv(fpath, {"sigma", "ffr_pct"}, frows);
      outputs.push_back(fpath);
    }
  } else {
    std::fprintf(stderr, "error: unknown study type '%s'\n", parsed.study.c_str());
    return kExitConfig;
  }

  const double runtime =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_manifest(out_dir, parsed, parsed.study, runtime, outputs);
  for (const auto& o : outputs) std::printf("wrote %s\n", o.c_str());
  std::printf("wrote %s (%.2fs)\n", manifest_path(out_dir).c_str(), runtime);
  return kExitOk;
}

int cmd_fit_cdf(const std::string& preset, const std::string& out_path) {
  RcDistribution dist = preset_distribution(preset);
  FittedCdf fit = fit_parametric_cdf(dist);
  std::printf("%s: c = %.10f, p = %.10f, max_error = %.3e%s\n", preset.c_str(), fit.c, fit.p,
              fit.max_error, fit.converged ? "" : " (not converged)");
  if (!out_path.empty()) {
    std::vector<std::vector<std::string>> rows;
    for (int i = 1; i < 200; ++i) {
      const double d = i / 200.0;
      rows.push_back({format_double(d), format_double(dist.cdf(d)), format_double(fit.eval(d))});
    }
    write_csv(out_path, {"delta", "cdf", "fitted"}, rows);
    std::printf("wrote %s\n", out_path.c_str());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Layered multicast bandwidth allocator"};
  app.require_subcommand(1);

  std::string scenario_path, out_path, out_dir = ".", solver = "convex", preset;
  int grid = 0;
  double lambda = -1.0;
  std::uint64_t seed = 0;
  std::vector<double> prev;

  auto* opt = app.add_subcommand("optimize", "Solve a single allocation");
  opt->add_option("scenario", scenario_path, "scenario JSON file")->required();
  opt->add_option("--solver", solver, "exhaustive|convex|gd|eep|dynamic")
      ->check(CLI::IsMember({"exhaustive", "convex", "gd", "eep", "dynamic"}));
  opt->add_option("--out", out_path, "allocation CSV output");
  opt->add_option("--grid", grid, "grid resolution for the exhaustive solver");
  opt->add_option("--lambda", lambda, "smoothing weight (dynamic solver)");
  opt->add_option("--prev", prev, "previous-segment deltas (dynamic solver)");

  auto* study = app.add_subcommand("study", "Run the study described by the scenario");
  study->add_option("scenario", scenario_path, "scenario JSON file")->required();
  study->add_option("--out-dir", out_dir, "output directory (must exist)");
  auto* seed_opt = study->add_option("--seed", seed, "override the scenario seed");

  auto* fit = app.add_subcommand("fit-cdf", "Fit the parametric CDF of a preset distribution");
  fit->add_option("preset", preset, "distribution preset name")->required();
  fit->add_option("--out", out_path, "fit-grid CSV output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (opt->parsed()) return cmd_optimize(scenario_path, solver, out_path, grid, lambda, prev);
    if (study->parsed()) return cmd_study(scenario_path, out_dir, seed, seed_opt->count() > 0);
    if (fit->parsed()) return cmd_fit_cdf(preset, out_path);
  } catch (const std::overflow_error& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kExitNumeric;
  } catch (const std::domain_error& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
  return kExitConfig;
}
