#ifndef SVMCAST_POPULATION_HPP_
#define SVMCAST_POPULATION_HPP_

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

namespace svmcast {

struct UniformDist {
  double lo = 0.0;
  double hi = 1.0;
};

struct GaussianComponent {
  double weight = 1.0;
  double mean = 0.5;
  double stddev = 0.1;
};

// Gaussian mixture with each component truncated to [0,1].
struct TruncatedGaussianMixture {
  std::vector<GaussianComponent> components;
};

struct EmpiricalDist {
  std::vector<double> samples;  // kept sorted
};

// F(delta) = c * delta^p + 1 - c: the parametric family used by the convex
// solver, taken as an exact population (atom of mass 1 - c at zero).
struct ParametricDist {
  double c = 1.0;
  double p = 1.0;
};

// Seed-independent description of a reception-coefficient distribution.
class RcDistribution {
 public:
  RcDistribution() : value_(UniformDist{}) {}
  explicit RcDistribution(UniformDist u);
  explicit RcDistribution(TruncatedGaussianMixture m);
  explicit RcDistribution(EmpiricalDist e);
  explicit RcDistribution(ParametricDist p);

  // Non-decreasing on [0,1] with cdf(1) = 1. Empirical distributions use a
  // right-continuous step function.
  double cdf(double delta) const;

  // Empirical distributions interpolated piecewise-linearly (for gradients);
  // identical to cdf() for the analytic kinds.
  double cdf_linear(double delta) const;

  // Density matching cdf_linear (piecewise-constant for empirical samples).
  double density(double delta) const;

  bool is_empirical() const { return std::holds_alternative<EmpiricalDist>(value_); }
  const std::vector<double>& samples() const;

  const std::variant<UniformDist, TruncatedGaussianMixture, EmpiricalDist, ParametricDist>& value()
      const {
    return value_;
  }

 private:
  std::variant<UniformDist, TruncatedGaussianMixture, EmpiricalDist, ParametricDist> value_;
};

// F~(delta) = c * delta^p + 1 - c.
struct FittedCdf {
  double c = 1.0;
  double p = 1.0;
  double max_error = 0.0;  // max |F~ - F| over the fit grid
  bool converged = true;

  double eval(double delta) const;
  double derivative(double delta) const;
};

struct ClientClass {
  int highest_layer = 1;  // h_m
  double prior = 1.0;     // pi_m
  RcDistribution dist;
  FittedCdf fitted;
  std::vector<double> alphas;  // incremental utilities per layer, size h_m
  std::vector<double> betas;   // dissatisfaction coefficients per layer
  std::vector<double> prefs;   // preference weights W_{m,l}
};

double eval_cdf(const RcDistribution& dist, double delta);

// Least-squares fit of the parametric CDF over the grid i/200, i=1..199.
// Log-spaced sweep on p refined by golden section, closed-form c per p.
FittedCdf fit_parametric_cdf(const RcDistribution& dist);

// Deterministic sampling: identical (dist, n, seed) gives identical vectors.
std::vector<double> sample_clients(const RcDistribution& dist, std::int64_t n, std::uint64_t seed);

// Empirical distribution over ceil(csfr * n) clients drawn without replacement.
RcDistribution subsample_feedback(const std::vector<double>& samples, double csfr,
                                  std::uint64_t seed);

// Prototype RC distributions: "uniform", "bimodal-high", "low-heavy", "mid-heavy".
// The mixture parameters are repo constants approximating the population
// archetypes (broad, mid/high bimodal, poor-channel heavy, mid heavy).
RcDistribution preset_distribution(const std::string& name);
std::vector<std::string> preset_distribution_names();

}  // namespace svmcast

#endif  // SVMCAST_POPULATION_HPP_
