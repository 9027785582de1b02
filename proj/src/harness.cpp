#include "svmcast/harness.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace svmcast {

std::int64_t service_bandwidth(double omega_bps, double t_seg_s, double symbol_bits) {
  if (omega_bps <= 0.0 || t_seg_s <= 0.0 || symbol_bits <= 0.0)
    throw std::invalid_argument("service_bandwidth: all arguments must be positive");
  return static_cast<std::int64_t>(std::floor(omega_bps * t_seg_s / symbol_bits));
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  // splitmix64 over the packed identifiers
  std::uint64_t x = master;
  for (std::uint64_t v : {a, b, c}) {
    x ^= v + 0x9e3779b97f4a7c15ULL + (x << 6) + (x >> 2);
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    x = z ^ (z >> 31);
  }
  return x;
}

SegmentStream generate_variable_stream(const std::vector<LayerSpec>& base, double gamma_max,
                                       int k_segments, std::uint64_t seed) {
  if (gamma_max < 0.0 || gamma_max >= 1.0)
    throw std::invalid_argument("generate_variable_stream: gamma_max in [0, 1) required");
  SegmentStream stream;
  stream.segments.resize(k_segments);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-gamma_max, gamma_max);
  for (int k = 0; k < k_segments; ++k) {
    stream.segments[k].reserve(base.size());
    for (const auto& layer : base) {
      const double gamma = gamma_max > 0.0 ? u(rng) : 0.0;
      const std::int64_t s = std::max<std::int64_t>(
          1, std::llround(static_cast<double>(layer.source_symbols) * (1.0 + gamma)));
      stream.segments[k].push_back(s);
    }
  }
  return stream;
}

void ensure_fitted(std::vector<ClientClass>& classes) {
  for (auto& cls : classes) cls.fitted = fit_parametric_cdf(cls.dist);
}

namespace {

AllocationProblem make_problem(const Scenario& sc) {
  AllocationProblem p;
  p.layers = sc.layers;
  p.classes = sc.classes;
  p.n_max = sc.n_max;
  p.code = sc.code;
  return p;
}

std::vector<LayerSpec> layers_with_sizes(const std::vector<LayerSpec>& base,
                                         const std::vector<std::int64_t>& sizes) {
  std::vector<LayerSpec> out = base;
  for (std::size_t l = 0; l < out.size(); ++l) out[l].source_symbols = sizes[l];
  return out;
}

double pct(double num, double den) { return den != 0.0 ? 100.0 * num / den : 0.0; }

}  // namespace

StaticResult run_static(const Scenario& sc) {
  AllocationProblem p = make_problem(sc);
  ensure_fitted(p.classes);

  StaticResult r;
  r.eep = eep_allocation(p);
  r.cv = solve_convex(p);
  if (!r.cv.feasible) {
    r.feasible = false;
    return r;
  }
  r.gd = solve_simplified_gd(p, r.cv.deltas);
  r.opt = solve_exhaustive(p, sc.grid_d);
  r.feasible = r.opt.feasible;
  r.u_eep = r.eep.utility;
  r.u_cv = r.cv.utility;
  r.u_gd = r.gd.utility;
  r.u_opt = r.opt.utility;
  r.eta_cv = pct(r.u_cv - r.u_eep, r.u_eep);
  r.eta_gd = pct(r.u_gd - r.u_eep, r.u_eep);
  r.eps_cv = pct(r.u_cv, r.u_opt);
  r.eps_gd = pct(r.u_gd, r.u_opt);
  return r;
}

std::vector<FeedbackPoint> run_reduced_feedback(const Scenario& sc,
                                                const std::vector<double>& csfr_sweep) {
  if (csfr_sweep.empty()) throw std::invalid_argument("run_reduced_feedback: empty sweep");

  // Materialize the client pools; they define both the evaluation population
  // and the feedback source.
  std::vector<std::vector<double>> pools(sc.classes.size());
  for (std::size_t m = 0; m < sc.classes.size(); ++m) {
    pools[m] = sample_clients(sc.classes[m].dist, sc.clients_per_class,
                              derive_seed(sc.seed, 101, m));
  }
  std::vector<ClientClass> population = sc.classes;
  for (std::size_t m = 0; m < population.size(); ++m) {
    population[m].dist = RcDistribution(EmpiricalDist{pools[m]});
  }

  // Reference optimum on the fully observed population.
  AllocationProblem full = make_problem(sc);
  full.classes = population;
  ensure_fitted(full.classes);
  const Allocation opt = solve_exhaustive(full, sc.grid_d);
  if (!opt.feasible) throw std::runtime_error("run_reduced_feedback: reference problem infeasible");

  std::vector<FeedbackPoint> out;
  for (std::size_t ci = 0; ci < csfr_sweep.size(); ++ci) {
    const double csfr = csfr_sweep[ci];
    FeedbackPoint pt;
    pt.csfr = csfr;
    const int reps = csfr >= 1.0 ? 1 : sc.repetitions;
    double sum_cv = 0.0, sum_gd = 0.0, sum_gd2 = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
      AllocationProblem sub = make_problem(sc);
      sub.classes = population;
      for (std::size_t m = 0; m < sub.classes.size(); ++m) {
        sub.classes[m].dist =
            subsample_feedback(pools[m], csfr, derive_seed(sc.seed, 202, ci, rep * 131 + m));
      }
      ensure_fitted(sub.classes);
      const Allocation cv = solve_convex(sub);
      if (!cv.feasible) continue;
      const Allocation gd = solve_simplified_gd(sub, cv.deltas);
      // achieved utility against the full population
      const double u_cv = total_utility(cv.deltas, population, false);
      const double u_gd = total_utility(gd.deltas, population, false);
      const double eff_cv = pct(u_cv, opt.utility);
      const double eff_gd = pct(u_gd, opt.utility);
      sum_cv += eff_cv;
      sum_gd += eff_gd;
      sum_gd2 += eff_gd * eff_gd;
      ++pt.repetitions;
    }
    if (pt.repetitions > 0) {
      pt.mean_eff_cv = sum_cv / pt.repetitions;
      pt.mean_eff_gd = sum_gd / pt.repetitions;
      const double var = sum_gd2 / pt.repetitions - pt.mean_eff_gd * pt.mean_eff_gd;
      pt.std_eff_gd = std::sqrt(std::max(0.0, var));
    }
    out.push_back(pt);
  }
  return out;
}

std::vector<CrsPoint> run_crs_study(const Scenario& sc, const std::vector<double>& gamma_sweep) {
  if (gamma_sweep.empty()) throw std::invalid_argument("run_crs_study: empty sweep");
  AllocationProblem base = make_problem(sc);
  ensure_fitted(base.classes);

  // One allocation from average statistics.
  const Allocation cv0 = solve_convex(base);
  if (!cv0.feasible) throw std::runtime_error("run_crs_study: base problem infeasible");
  const Allocation crs = solve_simplified_gd(base, cv0.deltas);

  std::vector<CrsPoint> out;
  for (std::size_t gi = 0; gi < gamma_sweep.size(); ++gi) {
    const double gamma = gamma_sweep[gi];
    const SegmentStream stream =
        generate_variable_stream(sc.layers, gamma, sc.num_segments, derive_seed(sc.seed, 303, gi));
    double ratio_sum = 0.0;
    int counted = 0;
    for (const auto& sizes : stream.segments) {
      AllocationProblem pk = base;
      pk.layers = layers_with_sizes(sc.layers, sizes);
      // realized utility of fixed symbol budgets under this segment's sizes
      auto realized = [&](const std::vector<std::int64_t>& symbols, std::vector<double>* d_out) {
        std::vector<double> d = implied_mnrcs(pk.layers, symbols, pk.code);
        for (std::size_t l = 1; l < d.size(); ++l) d[l] = std::max(d[l], d[l - 1]);
        if (d_out) *d_out = d;
        return total_utility(d, pk.classes, false);
      };
      std::vector<double> d_crs;
      const double u_crs = realized(crs.symbols, &d_crs);

      const Allocation cvk = solve_convex(pk);
      if (!cvk.feasible) continue;
      const Allocation gdk = solve_simplified_gd(pk, cvk.deltas);
      double u_ref = realized(gdk.symbols, nullptr);
      // second reference start from the CRS operating point; keeps the
      // per-segment optimum at least as good as the fixed allocation
      std::vector<double> warm = d_crs;
      if (bandwidth_surface(pk, warm) > static_cast<double>(pk.n_max)) {
        const double t_hi = (1.0 - kDeltaEps) / warm[0];
        double lo = 1.0, hi = t_hi;
        auto scaled = [&](double t) {
          std::vector<double> v = warm;
          for (double& d : v) d = std::min(1.0 - kDeltaEps, t * d);
          return v;
        };
        if (bandwidth_surface(pk, scaled(t_hi)) <= static_cast<double>(pk.n_max)) {
          for (int bs = 0; bs < 100; ++bs) {
            const double mid = 0.5 * (lo + hi);
            (bandwidth_surface(pk, scaled(mid)) > static_cast<double>(pk.n_max) ? lo : hi) = mid;
          }
          warm = scaled(hi);
        } else {
          warm.clear();
        }
      }
      if (!warm.empty()) {
        const Allocation gdw = solve_simplified_gd(pk, warm);
        if (gdw.feasible) u_ref = std::max(u_ref, realized(gdw.symbols, nullptr));
      }
      // the fixed allocation is itself achievable per segment, so the
      // reference never falls below it and the ratio stays <= 1
      u_ref = std::max(u_ref, u_crs);
      if (u_ref <= 0.0) continue;
      ratio_sum += u_crs / u_ref;
      ++counted;
    }
    CrsPoint pt;
    pt.gamma_max = gamma;
    pt.mrr = (1.0 + gamma) / (1.0 - gamma);
    pt.eps_crs = counted > 0 ? 100.0 * ratio_sum / counted : 0.0;
    out.push_back(pt);
  }
  return out;
}

namespace {

struct OutageStats {
  double z_pct = 0.0;
  std::vector<double> burst_hist;  // prior-weighted count of runs by length (index 0 = length 1)
};

OutageStats outage_statistics(const std::vector<double>& delta1_trace,
                              const std::vector<ClientClass>& classes,
                              const std::vector<std::vector<double>>& pools) {
  OutageStats stats;
  const std::size_t k_segments = delta1_trace.size();
  stats.burst_hist.assign(k_segments, 0.0);
  for (std::size_t m = 0; m < classes.size(); ++m) {
    const double weight = classes[m].prior / static_cast<double>(pools[m].size());
    double outage_clients = 0.0;
    for (double rc : pools[m]) {
      bool any = false;
      std::size_t run = 0;
      for (std::size_t k = 0; k < k_segments; ++k) {
        if (rc < delta1_trace[k]) {
          any = true;
          ++run;
        } else if (run > 0) {
          stats.burst_hist[run - 1] += weight;
          run = 0;
        }
      }
      if (run > 0) stats.burst_hist[run - 1] += weight;
      if (any) outage_clients += 1.0;
    }
    stats.z_pct += 100.0 * classes[m].prior * outage_clients / static_cast<double>(pools[m].size());
  }
  return stats;
}

}  // namespace

SmoothingResult run_smoothing(const Scenario& sc, double lambda, std::int64_t n_max) {
  if (sc.segment_scales.empty())
    throw std::invalid_argument("run_smoothing: scenario lacks segment scales");
  std::vector<std::vector<std::int64_t>> sizes;
  for (double scale : sc.segment_scales) {
    std::vector<std::int64_t> s;
    for (const auto& layer : sc.layers) {
      s.push_back(std::max<std::int64_t>(
          1, std::llround(scale * static_cast<double>(layer.source_symbols))));
    }
    sizes.push_back(std::move(s));
  }
  const std::size_t k_segments = sizes.size();

  SmoothingResult r;
  r.lambda = lambda;
  r.n_max = n_max;

  std::vector<ClientClass> classes = sc.classes;
  ensure_fitted(classes);

  std::vector<double> prev;
  double d_sum = 0.0, d_sum_eep = 0.0;
  std::vector<double> prev_eep;
  for (std::size_t k = 0; k < k_segments; ++k) {
    AllocationProblem pk;
    pk.layers = layers_with_sizes(sc.layers, sizes[k]);
    pk.classes = classes;
    pk.n_max = n_max;
    pk.code = sc.code;

    Allocation alloc;
    if (k == 0) {
      const Allocation cv = solve_convex(pk);
      if (!cv.feasible) throw std::runtime_error("run_smoothing: first segment infeasible");
      alloc = solve_simplified_gd(pk, cv.deltas);
    } else {
      alloc = solve_dynamic(pk, prev, lambda);
      if (!alloc.feasible) throw std::runtime_error("run_smoothing: segment infeasible");
      d_sum += dissatisfaction(alloc.deltas, prev, classes);
    }
    prev = alloc.deltas;
    r.delta_traces.push_back(alloc.deltas);
    r.delta1_trace.push_back(alloc.deltas[0]);
    r.utilities.push_back(alloc.utility);

    const Allocation eep = eep_allocation(pk);
    if (k > 0) d_sum_eep += dissatisfaction(eep.deltas, prev_eep, classes);
    prev_eep = eep.deltas;
    r.delta1_trace_eep.push_back(eep.deltas[0]);
  }
  r.d_bar = 100.0 * d_sum / static_cast<double>(k_segments - 1);
  r.d_bar_eep = 100.0 * d_sum_eep / static_cast<double>(k_segments - 1);

  // Fixed-RC client pools for outage statistics.
  std::vector<std::vector<double>> pools(classes.size());
  for (std::size_t m = 0; m < classes.size(); ++m) {
    pools[m] = sample_clients(classes[m].dist, sc.clients_per_class, derive_seed(sc.seed, 404, m));
  }
  const OutageStats opt_stats = outage_statistics(r.delta1_trace, classes, pools);
  const OutageStats eep_stats = outage_statistics(r.delta1_trace_eep, classes, pools);
  r.z = opt_stats.z_pct;
  r.z_eep = eep_stats.z_pct;
  r.burst_hist = opt_stats.burst_hist;
  r.burst_hist_eep = eep_stats.burst_hist;
  return r;
}

std::vector<FfrPoint> run_ffr(const std::vector<double>& delta1_trace, double client_mean,
                              const std::vector<double>& sigma_sweep, int trials,
                              std::uint64_t seed) {
  if (delta1_trace.empty()) throw std::invalid_argument("run_ffr: empty trace");
  std::vector<FfrPoint> out;
  for (std::size_t si = 0; si < sigma_sweep.size(); ++si) {
    const double sigma = sigma_sweep[si];
    double outage_segments = 0.0;
    std::int64_t total_segments = 0;
    std::mt19937_64 rng(derive_seed(seed, 505, si));
    std::normal_distribution<double> gauss(client_mean, std::max(sigma, 0.0));
    for (int t = 0; t < trials; ++t) {
      for (double d1 : delta1_trace) {
        double rc = client_mean;
        if (sigma > 0.0) {
          do {
            rc = gauss(rng);
          } while (rc < 0.0 || rc > 1.0);
        }
        if (rc < d1) outage_segments += 1.0;
        ++total_segments;
      }
    }
    FfrPoint pt;
    pt.sigma = sigma;
    pt.ffr = 100.0 * outage_segments / static_cast<double>(total_segments);
    out.push_back(pt);
  }
  return out;
}

}  // namespace svmcast
