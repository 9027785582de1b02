#ifndef SVMCAST_OUTAGE_HPP_
#define SVMCAST_OUTAGE_HPP_

#include <cstdint>
#include <vector>

namespace svmcast {

// Rateless-code failure model constants. P_f(S,K) = 1 for K <= S, else a*b^(K-S).
// H is the exponent of the closed-form outage approximation.
struct CodeParams {
  double a = 0.85;
  double b = 0.567;
  double H = 1.8;

  bool valid() const { return a > 0.0 && a <= 1.0 && b > 0.0 && b < 1.0 && H > 1.0; }
};

struct LayerSpec {
  std::int64_t source_symbols = 0;  // S_l
  double p_out = 0.0;               // per-layer outage target
};

// Reception coefficients are clamped to [kDeltaEps, 1 - kDeltaEps] before
// model evaluation; the closed form divides by delta and by (1 - delta).
inline constexpr double kDeltaEps = 1e-6;

double clamp_delta(double delta);

// P_f(S,K): probability a rateless decoder fails with K received symbols.
double decoding_failure_prob(std::int64_t s, std::int64_t k, const CodeParams& params);

// Exact outage over a memoryless erasure channel: expectation of P_f over
// K ~ Binomial(N, delta). Computed in log space; stable for N up to ~1e6.
double outage_exact(std::int64_t s, std::int64_t n, double delta, const CodeParams& params);

// Closed-form outage approximation 0.5*exp(-delta*(N - S/delta)^H / (S*(1-delta))).
// Throws std::domain_error for N < S/delta.
double outage_model(std::int64_t s, double n, double delta, const CodeParams& params);

// Extended model: 1 below the waterline N < S/delta, closed form above it.
double outage_model_extended(std::int64_t s, double n, double delta, const CodeParams& params);

// tau = (-S * ln(2 p))^(1/H); requires 0 < p <= 0.5.
double tau(std::int64_t s, double p_out, const CodeParams& params);

// Smallest integer N whose modeled outage is <= p_out at the given delta.
std::int64_t required_symbols_full(std::int64_t s, double delta, double p_out,
                                   const CodeParams& params);

// Linear-model inverse: ceil((S + log_b(p/a)) / delta); requires p <= a.
std::int64_t required_symbols_linear(std::int64_t s, double delta, double p_out,
                                     const CodeParams& params);

// Per-layer budgets for a non-decreasing MNRC vector, sized so that the
// cumulative success probability at delta_l meets 1 - P_out^l for every l.
// Returns empty vector when a nested target is non-positive (infeasible point).
std::vector<std::int64_t> forward_layer_allocation(const std::vector<LayerSpec>& layers,
                                                   const std::vector<double>& deltas,
                                                   const CodeParams& params);

// Smallest delta at which the nested per-layer assurance holds for fixed
// budgets. Extended-model semantics: below the waterline the layer fails.
// Returns 1.0 when no delta in (0, 1 - kDeltaEps] meets the target.
std::vector<double> implied_mnrcs(const std::vector<LayerSpec>& layers,
                                  const std::vector<std::int64_t>& symbols,
                                  const CodeParams& params);

}  // namespace svmcast

#endif  // SVMCAST_OUTAGE_HPP_
