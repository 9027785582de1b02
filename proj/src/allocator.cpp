#include "svmcast/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace svmcast {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct CostTerm {
  double alpha_hat;
  const ClientClass* cls;
};

// Per-layer cost terms: layer l collects alpha_hat_{m,l} for every class with h_m >= l+1.
std::vector<std::vector<CostTerm>> layer_terms(const AllocationProblem& p) {
  std::vector<std::vector<CostTerm>> terms(p.layers.size());
  for (const auto& cls : p.classes) {
    const int h = std::min<int>(cls.highest_layer, static_cast<int>(p.layers.size()));
    for (int l = 0; l < h; ++l) {
      terms[l].push_back({cls.prior * cls.alphas[l], &cls});
    }
  }
  return terms;
}

double actual_layer_cost(const std::vector<CostTerm>& terms, double delta) {
  double c = 0.0;
  for (const auto& t : terms) c += t.alpha_hat * t.cls->dist.cdf(delta);
  return c;
}

double smooth_layer_cost(const std::vector<CostTerm>& terms, double delta) {
  double c = 0.0;
  for (const auto& t : terms) c += t.alpha_hat * t.cls->dist.cdf_linear(delta);
  return c;
}

double smooth_layer_grad(const std::vector<CostTerm>& terms, double delta) {
  double g = 0.0;
  for (const auto& t : terms) g += t.alpha_hat * t.cls->dist.density(delta);
  return g;
}

void finalize_metrics(const AllocationProblem& p, Allocation& a) {
  const UtilityTable table = build_utility_table(p.classes);
  if (!a.deltas.empty()) {
    a.loss = utility_loss(a.deltas, p.classes, false);
    a.utility = table.u_max - a.loss;
  } else {
    a.loss = table.u_max;
    a.utility = 0.0;
  }
}

void fill_infeasibility_info(const AllocationProblem& p, Allocation& a) {
  a.min_feasible_n_max =
      required_symbols_full(p.layers[0].source_symbols, 1.0 - kDeltaEps, p.layers[0].p_out, p.code);
}

void validate_problem(const AllocationProblem& p) {
  if (p.layers.empty()) throw std::invalid_argument("allocator: no layers");
  for (const auto& l : p.layers) {
    if (l.source_symbols < 1 || l.p_out <= 0.0 || l.p_out > 0.5)
      throw std::invalid_argument("allocator: invalid layer spec");
  }
  if (!p.code.valid()) throw std::invalid_argument("allocator: invalid code params");
}

}  // namespace

std::vector<double> isotonic_non_decreasing(std::vector<double> v) {
  const std::size_t n = v.size();
  std::vector<double> level(n);
  std::vector<double> weight(n);
  std::vector<std::size_t> len(n);
  std::size_t top = 0;
  for (std::size_t i = 0; i < n; ++i) {
    level[top] = v[i];
    weight[top] = 1.0;
    len[top] = 1;
    while (top > 0 && level[top - 1] > level[top]) {
      const double w = weight[top - 1] + weight[top];
      level[top - 1] = (weight[top - 1] * level[top - 1] + weight[top] * level[top]) / w;
      weight[top - 1] = w;
      len[top - 1] += len[top];
      --top;
    }
    ++top;
  }
  std::size_t idx = 0;
  for (std::size_t b = 0; b < top; ++b) {
    for (std::size_t k = 0; k < len[b]; ++k) v[idx++] = level[b];
  }
  return v;
}

double bandwidth_surface(const AllocationProblem& p, const std::vector<double>& deltas) {
  double total = 0.0;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const double d = clamp_delta(deltas[l]);
    const double s = static_cast<double>(p.layers[l].source_symbols);
    total += s / d + tau(p.layers[l].source_symbols, p.layers[l].p_out, p.code) *
                         std::pow((1.0 - d) / d, 1.0 / p.code.H);
  }
  return total;
}

double dissatisfaction(const std::vector<double>& deltas, const std::vector<double>& prev,
                       const std::vector<ClientClass>& classes) {
  double d_total = 0.0;
  for (const auto& cls : classes) {
    const int h = std::min<int>(cls.highest_layer, static_cast<int>(deltas.size()));
    for (int l = 0; l < h && l < static_cast<int>(cls.betas.size()); ++l) {
      const double df = cls.dist.cdf(deltas[l]) - cls.dist.cdf(prev[l]);
      if (df > 0.0) d_total += cls.prior * cls.betas[l] * df;
    }
  }
  return d_total;
}

// ---------------------------------------------------------------------------
// Exhaustive search (Problem 1 semantics)
// ---------------------------------------------------------------------------

Allocation solve_exhaustive(const AllocationProblem& p, int grid_d) {
  validate_problem(p);
  if (grid_d < 2) throw std::invalid_argument("solve_exhaustive: grid_d >= 2 required");
  const std::size_t num_layers = p.layers.size();
  const auto terms = layer_terms(p);

  std::vector<double> grid(grid_d);
  for (int i = 0; i < grid_d; ++i) {
    grid[i] = kDeltaEps + (1.0 - 2.0 * kDeltaEps) * static_cast<double>(i) / (grid_d - 1);
  }

  // Per-layer cost at each grid value; non-decreasing in the grid index.
  std::vector<std::vector<double>> cost(num_layers, std::vector<double>(grid_d));
  for (std::size_t l = 0; l < num_layers; ++l) {
    for (int i = 0; i < grid_d; ++i) cost[l][i] = actual_layer_cost(terms[l], grid[i]);
  }
  // Suffix cost lower bound at index i: each per-layer cost is minimal at the
  // smallest admissible index, which for depth l+1.. is the current index.
  std::vector<std::vector<double>> suffix(num_layers + 1, std::vector<double>(grid_d, 0.0));
  for (std::size_t l = num_layers; l-- > 0;) {
    for (int i = 0; i < grid_d; ++i) suffix[l][i] = cost[l][i] + suffix[l + 1][i];
  }

  double best_cost = kInf;
  std::vector<int> best_idx;
  std::vector<int> idx(num_layers, 0);
  std::vector<std::int64_t> symbols(num_layers, 0);
  std::vector<std::int64_t> partial_sum(num_layers + 1, 0);
  std::vector<double> partial_cost(num_layers + 1, 0.0);
  std::int64_t visited = 0;

  std::function<void(std::size_t, int)> recurse = [&](std::size_t l, int min_i) {
    for (int i = min_i; i < grid_d; ++i) {
      if (partial_cost[l] + suffix[l][i] >= best_cost) {
        // cost is non-decreasing in i, nothing better deeper on this branch
        break;
      }
      ++visited;
      const double delta_l = grid[i];
      // nested assurance target given the shallower budgets
      double cum_success = 1.0;
      for (std::size_t j = 0; j < l; ++j) {
        cum_success *= 1.0 - outage_model_extended(p.layers[j].source_symbols,
                                                   static_cast<double>(symbols[j]), delta_l, p.code);
      }
      if (cum_success <= 0.0) continue;
      const double target = 1.0 - (1.0 - p.layers[l].p_out) / cum_success;
      if (target <= 0.0) continue;
      symbols[l] = required_symbols_full(p.layers[l].source_symbols, delta_l, target, p.code);
      const std::int64_t used = partial_sum[l] + symbols[l];
      if (used > p.n_max) continue;  // larger delta_l may still fit
      idx[l] = i;
      if (l + 1 == num_layers) {
        const double c = partial_cost[l] + cost[l][i];
        if (c < best_cost) {
          best_cost = c;
          best_idx = idx;
        }
      } else {
        partial_sum[l + 1] = used;
        partial_cost[l + 1] = partial_cost[l] + cost[l][i];
        recurse(l + 1, i);
      }
    }
  };
  recurse(0, 0);

  Allocation a;
  a.diag.grid_points = visited;
  if (best_idx.empty()) {
    a.feasible = false;
    a.first_infeasible_layer = 0;
    fill_infeasibility_info(p, a);
    finalize_metrics(p, a);
    return a;
  }
  a.deltas.resize(num_layers);
  for (std::size_t l = 0; l < num_layers; ++l) a.deltas[l] = grid[best_idx[l]];
  a.symbols = forward_layer_allocation(p.layers, a.deltas, p.code);
  a.feasible = true;
  finalize_metrics(p, a);
  return a;
}

// ---------------------------------------------------------------------------
// Convex formulation (Problem 3 semantics)
// ---------------------------------------------------------------------------

namespace {

struct ConvexSetup {
  std::vector<double> w;                        // S_l + log_b(p_l / a)
  std::vector<std::vector<CostTerm>> terms;     // per-layer fitted-cost terms
  double sum_w = 0.0;
};

ConvexSetup convex_setup(const AllocationProblem& p) {
  ConvexSetup s;
  s.terms = layer_terms(p);
  s.w.reserve(p.layers.size());
  const double log_b = std::log(p.code.b);
  for (const auto& layer : p.layers) {
    if (layer.p_out > p.code.a)
      throw std::domain_error("solve_convex: layer outage target above model range");
    const double w = static_cast<double>(layer.source_symbols) +
                     std::log(layer.p_out / p.code.a) / log_b;
    s.w.push_back(w);
    s.sum_w += w;
  }
  return s;
}

double fitted_cost_theta(const ConvexSetup& s, const std::vector<double>& thetas) {
  double c = 0.0;
  for (std::size_t l = 0; l < thetas.size(); ++l) {
    for (const auto& t : s.terms[l]) {
      const auto& fit = t.cls->fitted;
      c += t.alpha_hat * (fit.c * std::pow(thetas[l], -fit.p) + 1.0 - fit.c);
    }
  }
  return c;
}

double fitted_cost_grad_l(const ConvexSetup& s, std::size_t l, double theta) {
  double g = 0.0;
  for (const auto& t : s.terms[l]) {
    const auto& fit = t.cls->fitted;
    g += t.alpha_hat * fit.c * (-fit.p) * std::pow(theta, -fit.p - 1.0);
  }
  return g;
}

// argmin over theta >= 1 of sum_{l in block} g_l(theta) + mu_w * theta.
double block_minimizer(const ConvexSetup& s, std::size_t l0, std::size_t l1, double mu_w) {
  auto dphi = [&](double theta) {
    double g = mu_w;
    for (std::size_t l = l0; l < l1; ++l) g += fitted_cost_grad_l(s, l, theta);
    return g;
  };
  if (dphi(1.0) >= 0.0) return 1.0;
  double lo = 1.0;
  double hi = 2.0;
  while (dphi(hi) < 0.0 && hi < 1e12) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (dphi(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Chain-constrained (theta_1 >= ... >= theta_L >= 1) separable minimization
// of sum_l g_l(theta_l) + mu * w_l * theta_l via pooling.
std::vector<double> chain_solve(const ConvexSetup& s, double mu) {
  const std::size_t n = s.w.size();
  struct Block {
    std::size_t l0, l1;
    double theta;
  };
  std::vector<Block> blocks;
  for (std::size_t l = 0; l < n; ++l) {
    Block b{l, l + 1, block_minimizer(s, l, l + 1, mu * s.w[l])};
    blocks.push_back(b);
    while (blocks.size() >= 2 && blocks.back().theta > blocks[blocks.size() - 2].theta) {
      Block merged{blocks[blocks.size() - 2].l0, blocks.back().l1, 0.0};
      double mu_w = 0.0;
      for (std::size_t j = merged.l0; j < merged.l1; ++j) mu_w += mu * s.w[j];
      merged.theta = block_minimizer(s, merged.l0, merged.l1, mu_w);
      blocks.pop_back();
      blocks.back() = merged;
    }
  }
  std::vector<double> thetas(n);
  for (const auto& b : blocks) {
    for (std::size_t l = b.l0; l < b.l1; ++l) thetas[l] = b.theta;
  }
  return thetas;
}

Allocation infeasible_allocation(const AllocationProblem& p, int first_layer) {
  Allocation a;
  a.feasible = false;
  a.first_infeasible_layer = first_layer;
  fill_infeasibility_info(p, a);
  finalize_metrics(p, a);
  return a;
}

// Re-derive budgets with the full outage model at the solved deltas; scale
// deltas up by a common multiplier when the re-pricing exceeds the budget.
bool reprice_full_model(const AllocationProblem& p, std::vector<double>& deltas,
                        std::vector<std::int64_t>& symbols) {
  auto budgets_at = [&](double t) {
    std::vector<double> d(deltas.size());
    for (std::size_t l = 0; l < deltas.size(); ++l) {
      d[l] = std::min(1.0 - kDeltaEps, t * deltas[l]);
    }
    return forward_layer_allocation(p.layers, d, p.code);
  };
  auto total = [](const std::vector<std::int64_t>& n) {
    if (n.empty()) return std::numeric_limits<std::int64_t>::max();
    std::int64_t s = 0;
    for (auto v : n) s += v;
    return s;
  };
  symbols = budgets_at(1.0);
  if (!symbols.empty() && total(symbols) <= p.n_max) return true;
  double t_hi = (1.0 - kDeltaEps) / deltas[0];
  if (total(budgets_at(t_hi)) > p.n_max) return false;
  double t_lo = 1.0;
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (t_lo + t_hi);
    (total(budgets_at(mid)) > p.n_max ? t_lo : t_hi) = mid;
  }
  for (std::size_t l = 0; l < deltas.size(); ++l) {
    deltas[l] = std::min(1.0 - kDeltaEps, t_hi * deltas[l]);
  }
  symbols = budgets_at(1.0);
  return !symbols.empty() && total(symbols) <= p.n_max;
}

Allocation allocation_from_thetas(const AllocationProblem& p, std::vector<double> thetas,
                                  SolverDiagnostics diag) {
  Allocation a;
  a.deltas.resize(thetas.size());
  for (std::size_t l = 0; l < thetas.size(); ++l) {
    a.deltas[l] = clamp_delta(1.0 / thetas[l]);
  }
  // thetas non-increasing => deltas non-decreasing; settle FP noise
  for (std::size_t l = 1; l < a.deltas.size(); ++l) {
    a.deltas[l] = std::max(a.deltas[l], a.deltas[l - 1]);
  }
  if (!reprice_full_model(p, a.deltas, a.symbols)) {
    Allocation inf = infeasible_allocation(p, 0);
    inf.diag = diag;
    return inf;
  }
  a.feasible = true;
  a.diag = diag;
  finalize_metrics(p, a);
  return a;
}

}  // namespace

Allocation solve_convex(const AllocationProblem& p) {
  validate_problem(p);
  const ConvexSetup s = convex_setup(p);
  if (s.sum_w > static_cast<double>(p.n_max)) {
    // even theta = 1 everywhere violates the linear budget
    double acc = 0.0;
    int first = 0;
    for (std::size_t l = 0; l < s.w.size(); ++l) {
      acc += s.w[l];
      if (acc > static_cast<double>(p.n_max)) {
        first = static_cast<int>(l);
        break;
      }
    }
    return infeasible_allocation(p, first);
  }

  SolverDiagnostics diag;
  // Bracket the bandwidth multiplier: budget usage decreases with mu.
  auto usage = [&](double mu) {
    const auto thetas = chain_solve(s, mu);
    double u = 0.0;
    for (std::size_t l = 0; l < thetas.size(); ++l) u += s.w[l] * thetas[l];
    return u;
  };
  const double n_max = static_cast<double>(p.n_max);
  double mu_hi = 1.0;
  while (usage(mu_hi) > n_max) mu_hi *= 2.0;
  double mu_lo = mu_hi;
  while (mu_lo > 1e-280 && usage(mu_lo * 0.5) <= n_max) mu_lo *= 0.5;
  if (mu_lo <= 1e-280) {
    // degenerate cost (all weights zero): unconstrained optimum at theta = 1
    diag.converged = true;
    return allocation_from_thetas(p, chain_solve(s, mu_hi), diag);
  }
  mu_lo *= 0.5;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (mu_lo + mu_hi);
    (usage(mid) > n_max ? mu_lo : mu_hi) = mid;
    diag.iterations = it + 1;
  }
  diag.converged = true;
  return allocation_from_thetas(p, chain_solve(s, mu_hi), diag);
}

Allocation solve_convex_from(const AllocationProblem& p, const std::vector<double>& start_thetas) {
  validate_problem(p);
  const ConvexSetup s = convex_setup(p);
  if (s.sum_w > static_cast<double>(p.n_max)) return infeasible_allocation(p, 0);
  if (start_thetas.size() != p.layers.size())
    throw std::invalid_argument("solve_convex_from: start size mismatch");

  const double n_max = static_cast<double>(p.n_max);
  double w2 = 0.0;
  for (double w : s.w) w2 += w * w;

  auto project = [&](std::vector<double> x) {
    // Dykstra between the ordered cone (with floor 1) and the budget halfspace.
    std::vector<double> q1(x.size(), 0.0);
    std::vector<double> q2(x.size(), 0.0);
    for (int it = 0; it < 400; ++it) {
      std::vector<double> y = x;
      for (std::size_t l = 0; l < y.size(); ++l) y[l] += q1[l];
      // projection onto non-increasing sequences bounded below by 1
      std::vector<double> neg(y.rbegin(), y.rend());
      neg = isotonic_non_decreasing(std::move(neg));
      std::vector<double> z(neg.rbegin(), neg.rend());
      for (double& v : z) v = std::max(v, 1.0);
      for (std::size_t l = 0; l < y.size(); ++l) q1[l] = y[l] - z[l];

      for (std::size_t l = 0; l < z.size(); ++l) z[l] += q2[l];
      double u = 0.0;
      for (std::size_t l = 0; l < z.size(); ++l) u += s.w[l] * z[l];
      std::vector<double> x_new = z;
      if (u > n_max) {
        const double scale = (u - n_max) / w2;
        for (std::size_t l = 0; l < x_new.size(); ++l) x_new[l] -= scale * s.w[l];
      }
      for (std::size_t l = 0; l < z.size(); ++l) q2[l] = z[l] - x_new[l];
      double move = 0.0;
      for (std::size_t l = 0; l < x.size(); ++l) move += std::fabs(x_new[l] - x[l]);
      x = std::move(x_new);
      if (move < 1e-14) break;
    }
    return x;
  };

  // Gradient Lipschitz bound on theta >= 1.
  double lips = 0.0;
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    double h = 0.0;
    for (const auto& t : s.terms[l]) {
      const auto& fit = t.cls->fitted;
      h += t.alpha_hat * fit.c * fit.p * (fit.p + 1.0);
    }
    lips = std::max(lips, h);
  }
  const double step = lips > 0.0 ? 1.0 / lips : 1.0;

  std::vector<double> x = project(start_thetas);
  double prev_cost = fitted_cost_theta(s, x);
  SolverDiagnostics diag;
  int stable = 0;
  constexpr int kMaxIter = 200000;
  int it = 0;
  for (; it < kMaxIter; ++it) {
    std::vector<double> g(x.size());
    for (std::size_t l = 0; l < x.size(); ++l) g[l] = fitted_cost_grad_l(s, l, x[l]);
    std::vector<double> y = x;
    for (std::size_t l = 0; l < x.size(); ++l) y[l] -= step * g[l];
    y = project(std::move(y));
    // the cost is second-order flat at the optimum; stop on iterate movement
    double move = 0.0;
    for (std::size_t l = 0; l < x.size(); ++l) move = std::max(move, std::fabs(y[l] - x[l]));
    x = std::move(y);
    prev_cost = fitted_cost_theta(s, x);
    stable = move < 1e-12 ? stable + 1 : 0;
    if (stable >= 10) break;
  }
  diag.iterations = it;
  diag.converged = it < kMaxIter;
  return allocation_from_thetas(p, x, diag);
}

// ---------------------------------------------------------------------------
// Gradient descent (Problems 2 and 4 semantics)
// ---------------------------------------------------------------------------

namespace {

struct GdObjective {
  const AllocationProblem* p;
  const std::vector<std::vector<CostTerm>>* terms;
  double lambda = 1.0;
  const std::vector<double>* prev = nullptr;  // hinge reference (dynamic mode)

  double smooth(const std::vector<double>& d) const {
    double c = 0.0;
    for (std::size_t l = 0; l < d.size(); ++l) c += smooth_layer_cost((*terms)[l], d[l]);
    if (!prev) return c;
    double hinge = 0.0;
    for (const auto& cls : p->classes) {
      const int h = std::min<int>(cls.highest_layer, static_cast<int>(d.size()));
      for (int l = 0; l < h && l < static_cast<int>(cls.betas.size()); ++l) {
        const double df = cls.dist.cdf_linear(d[l]) - cls.dist.cdf_linear((*prev)[l]);
        if (df > 0.0) hinge += cls.prior * cls.betas[l] * df;
      }
    }
    return lambda * c + (1.0 - lambda) * hinge;
  }

  std::vector<double> gradient(const std::vector<double>& d) const {
    std::vector<double> g(d.size(), 0.0);
    for (std::size_t l = 0; l < d.size(); ++l) {
      g[l] = (prev ? lambda : 1.0) * smooth_layer_grad((*terms)[l], d[l]);
    }
    if (prev) {
      for (const auto& cls : p->classes) {
        const int h = std::min<int>(cls.highest_layer, static_cast<int>(d.size()));
        for (int l = 0; l < h && l < static_cast<int>(cls.betas.size()); ++l) {
          if (cls.dist.cdf_linear(d[l]) > cls.dist.cdf_linear((*prev)[l])) {
            g[l] += (1.0 - lambda) * cls.prior * cls.betas[l] * cls.dist.density(d[l]);
          }
        }
      }
    }
    return g;
  }

  // True (non-surrogate) objective used to pick the returned iterate.
  double actual(const std::vector<double>& d) const {
    double c = 0.0;
    for (std::size_t l = 0; l < d.size(); ++l) c += actual_layer_cost((*terms)[l], d[l]);
    if (!prev) return c;
    return lambda * c + (1.0 - lambda) * dissatisfaction(d, *prev, p->classes);
  }
};

Allocation gd_descend(const AllocationProblem& p, const std::vector<double>& init,
                      const GdObjective& obj) {
  const double n_max = static_cast<double>(p.n_max);
  if (bandwidth_surface(p, init) > n_max)
    throw std::invalid_argument("solve_simplified_gd: initialize from convex solution or EEP");
  for (std::size_t l = 1; l < init.size(); ++l) {
    if (init[l] < init[l - 1])
      throw std::invalid_argument("solve_simplified_gd: init violates UEP ordering");
  }

  auto clamp_all = [](std::vector<double> v) {
    for (double& d : v) d = clamp_delta(d);
    return v;
  };

  std::vector<double> x = clamp_all(init);
  std::vector<double> best = x;
  double best_actual = obj.actual(x);
  double cost = obj.smooth(x);
  double eta = 0.05;
  SolverDiagnostics diag;
  int stable = 0;
  constexpr int kMaxIter = 10000;
  int it = 0;
  for (; it < kMaxIter; ++it) {
    const std::vector<double> g = obj.gradient(x);
    std::vector<double> cand(x.size());
    bool accepted = false;
    while (eta >= 1e-12) {
      for (std::size_t l = 0; l < x.size(); ++l) cand[l] = x[l] - eta * g[l];
      cand = clamp_all(isotonic_non_decreasing(std::move(cand)));
      if (bandwidth_surface(p, cand) > n_max) {
        // repair along the ray t * cand: scaling every delta up cheapens the
        // budget while keeping the step's direction along the boundary
        auto scaled = [&](double t) {
          std::vector<double> v(cand.size());
          for (std::size_t l = 0; l < cand.size(); ++l) {
            v[l] = std::min(1.0 - kDeltaEps, t * cand[l]);
          }
          return v;
        };
        const double t_max = (1.0 - kDeltaEps) / cand[0];
        if (bandwidth_surface(p, scaled(t_max)) <= n_max) {
          double lo = 1.0;
          double hi = t_max;
          for (int bs = 0; bs < 60; ++bs) {
            const double mid = 0.5 * (lo + hi);
            (bandwidth_surface(p, scaled(mid)) > n_max ? lo : hi) = mid;
          }
          cand = scaled(hi);
        } else {
          // degenerate geometry: retreat toward the feasible iterate instead
          double lo = 0.0;
          double hi = 1.0;
          for (int bs = 0; bs < 60; ++bs) {
            const double mid = 0.5 * (lo + hi);
            std::vector<double> probe(x.size());
            for (std::size_t l = 0; l < x.size(); ++l) probe[l] = x[l] + mid * (cand[l] - x[l]);
            (bandwidth_surface(p, probe) > n_max ? hi : lo) = mid;
          }
          for (std::size_t l = 0; l < x.size(); ++l) cand[l] = x[l] + lo * (cand[l] - x[l]);
        }
      }
      const double cand_cost = obj.smooth(cand);
      if (cand_cost < cost) {
        const double rel = (cost - cand_cost) / std::max(1e-300, std::fabs(cost));
        stable = rel < 1e-8 ? stable + 1 : 0;
        x = cand;
        cost = cand_cost;
        eta = std::min(eta * 1.5, 0.5);
        accepted = true;
        break;
      }
      eta *= 0.5;
    }
    if (accepted) {
      const double act = obj.actual(x);
      if (act < best_actual) {
        best_actual = act;
        best = x;
      }
    }
    if (!accepted || stable >= 10) {
      diag.converged = true;
      break;
    }
  }
  diag.iterations = it;

  // Re-pricing can move a candidate; keep whichever of {init, best} ends up
  // with the lower true objective after its budgets are re-derived.
  auto finish = [&](const std::vector<double>& deltas) {
    Allocation a;
    a.deltas = deltas;
    if (!reprice_full_model(p, a.deltas, a.symbols)) {
      a = infeasible_allocation(p, 0);
    } else {
      a.feasible = true;
      finalize_metrics(p, a);
    }
    a.diag = diag;
    return a;
  };
  Allocation a = finish(best);
  Allocation from_init = finish(clamp_all(init));
  if (from_init.feasible && (!a.feasible || obj.actual(from_init.deltas) < obj.actual(a.deltas))) {
    return from_init;
  }
  return a;
}

}  // namespace

Allocation solve_simplified_gd(const AllocationProblem& p, const std::vector<double>& init) {
  validate_problem(p);
  const auto terms = layer_terms(p);
  GdObjective obj{&p, &terms, 1.0, nullptr};
  return gd_descend(p, init, obj);
}

Allocation solve_dynamic(const AllocationProblem& p, const std::vector<double>& prev,
                         double lambda) {
  validate_problem(p);
  if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("solve_dynamic: lambda in [0,1]");
  for (std::size_t l = 1; l < prev.size(); ++l) {
    if (prev[l] < prev[l - 1])
      throw std::invalid_argument("solve_dynamic: prev violates UEP ordering");
  }
  const auto terms = layer_terms(p);

  Allocation cv = solve_convex(p);
  if (!cv.feasible) return cv;
  if (lambda == 1.0) {
    GdObjective obj{&p, &terms, 1.0, nullptr};
    Allocation a = gd_descend(p, cv.deltas, obj);
    a.dissatisfaction = dissatisfaction(a.deltas, prev, p.classes);
    return a;
  }

  GdObjective obj{&p, &terms, lambda, &prev};
  Allocation best = gd_descend(p, cv.deltas, obj);
  double best_obj = lambda * best.loss + (1.0 - lambda) * dissatisfaction(best.deltas, prev, p.classes);

  // Second start: prev pulled into the current segment's feasible region.
  std::vector<double> alt = prev;
  for (double& d : alt) d = clamp_delta(d);
  if (bandwidth_surface(p, alt) > static_cast<double>(p.n_max)) {
    double t_lo = 1.0;
    double t_hi = (1.0 - kDeltaEps) / alt[0];
    auto scaled = [&](double t) {
      std::vector<double> v = alt;
      for (double& d : v) d = std::min(1.0 - kDeltaEps, t * d);
      return v;
    };
    if (bandwidth_surface(p, scaled(t_hi)) <= static_cast<double>(p.n_max)) {
      for (int bs = 0; bs < 100; ++bs) {
        const double mid = 0.5 * (t_lo + t_hi);
        (bandwidth_surface(p, scaled(mid)) > static_cast<double>(p.n_max) ? t_lo : t_hi) = mid;
      }
      alt = scaled(t_hi);
    } else {
      alt.clear();
    }
  }
  if (!alt.empty()) {
    Allocation from_prev = gd_descend(p, alt, obj);
    const double o =
        lambda * from_prev.loss + (1.0 - lambda) * dissatisfaction(from_prev.deltas, prev, p.classes);
    if (o < best_obj) {
      best = from_prev;
      best_obj = o;
    }
  }
  best.dissatisfaction = dissatisfaction(best.deltas, prev, p.classes);
  return best;
}

// ---------------------------------------------------------------------------
// EEP baseline
// ---------------------------------------------------------------------------

Allocation eep_allocation(const AllocationProblem& p) {
  validate_problem(p);
  const std::size_t num_layers = p.layers.size();
  double total_s = 0.0;
  for (const auto& l : p.layers) total_s += static_cast<double>(l.source_symbols);

  Allocation a;
  a.symbols.resize(num_layers);
  std::int64_t used = 0;
  for (std::size_t l = 1; l < num_layers; ++l) {
    a.symbols[l] = static_cast<std::int64_t>(
        std::llround(static_cast<double>(p.n_max) * p.layers[l].source_symbols / total_s));
    used += a.symbols[l];
  }
  a.symbols[0] = std::max<std::int64_t>(0, p.n_max - used);

  a.deltas = implied_mnrcs(p.layers, a.symbols, p.code);
  for (std::size_t l = 1; l < num_layers; ++l) {
    a.deltas[l] = std::max(a.deltas[l], a.deltas[l - 1]);
  }
  a.feasible = true;
  finalize_metrics(p, a);
  return a;
}

// ---------------------------------------------------------------------------
// Convexity verification
// ---------------------------------------------------------------------------

ConvexityReport verify_convexity(const AllocationProblem& p,
                                 const std::vector<double>& probe_thetas) {
  validate_problem(p);
  const ConvexSetup s = convex_setup(p);
  const std::size_t n = probe_thetas.size();
  auto cost_at = [&](const std::vector<double>& th) { return fitted_cost_theta(s, th); };

  ConvexityReport report;
  report.analytic_diag.resize(n);
  report.numeric_diag.resize(n);
  report.min_numeric_diag = kInf;
  const double f0 = cost_at(probe_thetas);
  for (std::size_t j = 0; j < n; ++j) {
    double h_jj = 0.0;
    for (const auto& t : s.terms[j]) {
      const auto& fit = t.cls->fitted;
      h_jj += t.alpha_hat * fit.c * fit.p * (fit.p + 1.0) * std::pow(probe_thetas[j], -(fit.p + 2.0));
    }
    report.analytic_diag[j] = h_jj;

    const double h = 1e-3 * probe_thetas[j];
    std::vector<double> up = probe_thetas;
    std::vector<double> dn = probe_thetas;
    up[j] += h;
    dn[j] -= h;
    const double num = (cost_at(up) - 2.0 * f0 + cost_at(dn)) / (h * h);
    report.numeric_diag[j] = num;
    report.min_numeric_diag = std::min(report.min_numeric_diag, num);
    if (h_jj != 0.0) {
      report.max_diag_rel_err =
          std::max(report.max_diag_rel_err, std::fabs(num - h_jj) / std::fabs(h_jj));
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = j + 1; k < n; ++k) {
      const double hj = 1e-3 * probe_thetas[j];
      const double hk = 1e-3 * probe_thetas[k];
      auto shifted = [&](double sj, double sk) {
        std::vector<double> th = probe_thetas;
        th[j] += sj;
        th[k] += sk;
        return cost_at(th);
      };
      const double cross = (shifted(hj, hk) - shifted(hj, -hk) - shifted(-hj, hk) +
                            shifted(-hj, -hk)) /
                           (4.0 * hj * hk);
      report.max_offdiag_abs = std::max(report.max_offdiag_abs, std::fabs(cross));
    }
  }
  return report;
}

}  // namespace svmcast
