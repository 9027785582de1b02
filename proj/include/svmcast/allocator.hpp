#ifndef SVMCAST_ALLOCATOR_HPP_
#define SVMCAST_ALLOCATOR_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "svmcast/outage.hpp"
#include "svmcast/population.hpp"
#include "svmcast/utility.hpp"

namespace svmcast {

struct AllocationProblem {
  std::vector<LayerSpec> layers;
  std::vector<ClientClass> classes;
  std::int64_t n_max = 0;
  CodeParams code;
};

struct SolverDiagnostics {
  int iterations = 0;
  std::int64_t grid_points = 0;
  bool converged = true;
};

struct Allocation {
  std::vector<double> deltas;        // MNRC vector, non-decreasing
  std::vector<std::int64_t> symbols; // per-layer budgets
  double utility = 0.0;
  double loss = 0.0;
  double dissatisfaction = 0.0;      // hinge penalty at the solution (dynamic mode)
  bool feasible = false;
  int first_infeasible_layer = -1;             // 0-based, -1 when feasible
  std::int64_t min_feasible_n_max = 0;         // base-layer budget at delta = 1 - eps
  SolverDiagnostics diag;
};

// Grid search over non-decreasing MNRC tuples; budgets from the nested
// forward allocation; lexicographically smallest argmin among ties.
Allocation solve_exhaustive(const AllocationProblem& p, int grid_d = 200);

// Dual bisection on the bandwidth multiplier with a pool-adjacent-violators
// chain solve; globally optimal for the parametric-CDF cost. Budgets are
// re-derived with the full outage model and the deltas rescaled upward when
// the re-pricing overshoots the bandwidth.
Allocation solve_convex(const AllocationProblem& p);

// Same objective solved by projected gradient from an explicit starting
// point (thetas = 1/delta, non-increasing, >= 1). Used to cross-check that
// the problem has a single optimum.
Allocation solve_convex_from(const AllocationProblem& p, const std::vector<double>& start_thetas);

// Projected gradient descent on the smooth bandwidth surface, isotonic
// projection for the UEP ordering, feasibility restored by backtracking
// toward the previous iterate. init must be feasible.
Allocation solve_simplified_gd(const AllocationProblem& p, const std::vector<double>& init);

// Static loss plus the hinge penalty on per-layer CDF increases relative to
// prev, weighted (1 - lambda) : lambda. lambda = 1 reduces to the static GD.
Allocation solve_dynamic(const AllocationProblem& p, const std::vector<double>& prev,
                         double lambda);

// Budget split proportional to layer sizes, remainder to the base layer;
// deltas implied by the nested assurance semantics at the fixed budgets.
Allocation eep_allocation(const AllocationProblem& p);

struct ConvexityReport {
  std::vector<double> analytic_diag;
  std::vector<double> numeric_diag;
  double max_diag_rel_err = 0.0;
  double max_offdiag_abs = 0.0;
  double min_numeric_diag = 0.0;
};

// Central second differences of the convex cost at a probe point vs the
// analytic Hessian diagonal; off-diagonals should vanish (separable cost).
ConvexityReport verify_convexity(const AllocationProblem& p, const std::vector<double>& probe_thetas);

// Smooth bandwidth surface: sum_l S_l/delta_l + tau_l*((1-d)/d)^(1/H).
double bandwidth_surface(const AllocationProblem& p, const std::vector<double>& deltas);

// Hinge dissatisfaction sum_m sum_l beta_hat * max(0, F_m(d_l) - F_m(prev_l)).
double dissatisfaction(const std::vector<double>& deltas, const std::vector<double>& prev,
                       const std::vector<ClientClass>& classes);

// Euclidean projection onto non-decreasing sequences (pool adjacent violators).
std::vector<double> isotonic_non_decreasing(std::vector<double> v);

}  // namespace svmcast

#endif  // SVMCAST_ALLOCATOR_HPP_
