#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "svmcast/population.hpp"

using namespace svmcast;

namespace {

// Trapezoid integration of the mixture density; independent of the analytic
// CDF path.
double integrate_density(const RcDistribution& dist, double upto, int steps = 20000) {
  double total = 0.0;
  double prev = dist.density(0.0);
  for (int i = 1; i <= steps; ++i) {
    const double x = upto * i / steps;
    const double cur = dist.density(x);
    total += 0.5 * (prev + cur) * (upto / steps);
    prev = cur;
  }
  return total;
}

// Tie-aware two-sided KS distance (atoms compare the left limit of F against
// the empirical mass below the tie group).
double ks_statistic(std::vector<double> samples, const RcDistribution& dist) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double ks = 0.0;
  std::size_t i = 0;
  while (i < samples.size()) {
    std::size_t j = i;
    while (j < samples.size() && samples[j] == samples[i]) ++j;
    const double x = samples[i];
    const double f = dist.cdf(x);
    const double f_minus = dist.cdf(std::nextafter(x, -1.0));
    ks = std::max(ks, std::fabs(f - static_cast<double>(j) / n));
    ks = std::max(ks, std::fabs(f_minus - static_cast<double>(i) / n));
    i = j;
  }
  return ks;
}

}  // namespace

TEST_CASE("cdf basics") {
  RcDistribution uni(UniformDist{0.0, 1.0});
  CHECK(uni.cdf(0.3) == doctest::Approx(0.3));
  CHECK(uni.cdf(0.0) == 0.0);
  CHECK(uni.cdf(1.0) == 1.0);

  RcDistribution emp(EmpiricalDist{{0.8, 0.2, 0.6, 0.4}});  // sorted internally
  CHECK(emp.cdf(0.5) == doctest::Approx(0.5));
  CHECK(emp.cdf(0.1) == 0.0);
  CHECK(emp.cdf(1.0) == 1.0);
  CHECK(emp.cdf(0.2) == doctest::Approx(0.25));  // right-continuous step

  RcDistribution par(ParametricDist{0.8, 2.0});
  CHECK(par.cdf(0.5) == doctest::Approx(0.8 * 0.25 + 0.2));
  CHECK(par.cdf(1.0) == 1.0);
  CHECK(par.cdf(0.0) == doctest::Approx(0.2));  // atom at zero
  double prev = 0.0;
  for (int i = 0; i <= 1000; ++i) {
    const double v = par.cdf(i / 1000.0);
    CHECK(v >= prev - 1e-15);
    prev = v;
  }
}

TEST_CASE("cdf is monotone with unit endpoints for every kind") {
  const std::vector<RcDistribution> dists = {
      preset_distribution("uniform"),
      preset_distribution("bimodal-high"),
      preset_distribution("low-heavy"),
      preset_distribution("mid-heavy"),
      RcDistribution(EmpiricalDist{sample_clients(preset_distribution("mid-heavy"), 500, 3)}),
  };
  for (const auto& d : dists) {
    CHECK(d.cdf(0.0) == 0.0);
    CHECK(d.cdf(1.0) == 1.0);
    double prev = -1.0;
    for (int i = 0; i <= 1000; ++i) {
      const double v = d.cdf(i / 1000.0);
      CHECK(v >= prev - 1e-15);
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
      prev = v;
    }
  }
}

TEST_CASE("mixture cdf equals the integral of its density") {
  const auto mix = preset_distribution("bimodal-high");
  for (int i = 1; i <= 20; ++i) {
    const double delta = i / 21.0;
    CHECK(mix.cdf(delta) == doctest::Approx(integrate_density(mix, delta)).epsilon(1e-4));
  }
  const auto low = preset_distribution("low-heavy");
  for (int i = 1; i <= 20; ++i) {
    const double delta = i / 21.0;
    CHECK(low.cdf(delta) == doctest::Approx(integrate_density(low, delta)).epsilon(1e-4));
  }
}

TEST_CASE("parametric cdf fit") {
  SUBCASE("uniform is in-family") {
    const auto fit = fit_parametric_cdf(RcDistribution(UniformDist{0.0, 1.0}));
    CHECK(fit.c == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(fit.p == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(fit.max_error < 1e-8);
  }
  SUBCASE("delta squared synthetic is in-family") {
    const auto fit = fit_parametric_cdf(RcDistribution(ParametricDist{1.0, 2.0}));
    CHECK(fit.c == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(fit.p == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(fit.max_error < 1e-8);
  }
  SUBCASE("atom plus power is in-family") {
    const auto fit = fit_parametric_cdf(RcDistribution(ParametricDist{0.6, 0.8}));
    CHECK(fit.c == doctest::Approx(0.6).epsilon(1e-5));
    CHECK(fit.p == doctest::Approx(0.8).epsilon(1e-5));
  }
  SUBCASE("low-heavy preset fits well") {
    const auto fit = fit_parametric_cdf(preset_distribution("low-heavy"));
    CHECK(fit.max_error < 0.05);
    CHECK(fit.converged);
  }
  SUBCASE("fitted invariants") {
    for (const auto& name : preset_distribution_names()) {
      const auto fit = fit_parametric_cdf(preset_distribution(name));
      CHECK(fit.c > 0.0);
      CHECK(fit.c <= 1.0);
      CHECK(fit.p > 0.0);
      CHECK(fit.eval(1.0) == doctest::Approx(1.0));
      CHECK(fit.eval(0.0) == doctest::Approx(1.0 - fit.c));
    }
  }
}

TEST_CASE("sampling") {
  SUBCASE("determinism") {
    const auto a = sample_clients(preset_distribution("mid-heavy"), 1000, 42);
    const auto b = sample_clients(preset_distribution("mid-heavy"), 1000, 42);
    CHECK(a == b);
    const auto c = sample_clients(preset_distribution("mid-heavy"), 1000, 43);
    CHECK(a != c);
  }
  SUBCASE("uniform mean by the law of large numbers") {
    const auto s = sample_clients(RcDistribution(UniformDist{0.0, 1.0}), 100000, 1);
    double mean = 0.0;
    for (double v : s) mean += v;
    mean /= static_cast<double>(s.size());
    CHECK(mean == doctest::Approx(0.5).epsilon(0.02));
  }
  SUBCASE("samples stay in range") {
    for (const auto& name : preset_distribution_names()) {
      for (double v : sample_clients(preset_distribution(name), 5000, 7)) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
    }
  }
  SUBCASE("Kolmogorov-Smirnov against the analytic CDF") {
    for (const auto& name : preset_distribution_names()) {
      const auto dist = preset_distribution(name);
      const auto s = sample_clients(dist, 100000, 11);
      CHECK(ks_statistic(s, dist) < 0.01);
    }
    const RcDistribution par(ParametricDist{0.85, 1.7});
    CHECK(ks_statistic(sample_clients(par, 100000, 13), par) < 0.01);
  }
}

TEST_CASE("feedback subsampling") {
  const auto pool = sample_clients(preset_distribution("bimodal-high"), 1000, 5);

  SUBCASE("csfr = 1 is the identity") {
    const auto sub = subsample_feedback(pool, 1.0, 9);
    auto sorted = pool;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sub.samples() == sorted);
    CHECK(fit_parametric_cdf(sub).c ==
          fit_parametric_cdf(RcDistribution(EmpiricalDist{pool})).c);
  }
  SUBCASE("csfr = 0.05 keeps 50 of 1000") {
    const auto sub = subsample_feedback(pool, 0.05, 9);
    CHECK(sub.samples().size() == 50);
    for (double v : sub.samples()) {
      CHECK(std::find(pool.begin(), pool.end(), v) != pool.end());
    }
  }
  SUBCASE("fit dispersion tightens as csfr grows") {
    auto spread = [&](double csfr) {
      double lo = 1e9;
      double hi = -1e9;
      for (int rep = 0; rep < 100; ++rep) {
        const auto f = fit_parametric_cdf(subsample_feedback(pool, csfr, 100 + rep));
        lo = std::min(lo, f.p);
        hi = std::max(hi, f.p);
      }
      return hi - lo;
    };
    CHECK(spread(0.05) > spread(0.5));
  }
  SUBCASE("bad csfr rejected") {
    CHECK_THROWS_AS(subsample_feedback(pool, 0.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(subsample_feedback(pool, 1.5, 1), std::invalid_argument);
  }
}

TEST_CASE("validation") {
  CHECK_THROWS_AS(RcDistribution(UniformDist{0.5, 0.2}), std::invalid_argument);
  CHECK_THROWS_AS(RcDistribution(EmpiricalDist{{}}), std::invalid_argument);
  CHECK_THROWS_AS(RcDistribution(EmpiricalDist{{1.5}}), std::invalid_argument);
  CHECK_THROWS_AS(RcDistribution(TruncatedGaussianMixture{{{1.0, 0.5, -0.1}}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(RcDistribution(ParametricDist{0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(preset_distribution("nope"), std::invalid_argument);
}
