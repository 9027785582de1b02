#include "svmcast/population.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace svmcast {

namespace {

double std_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Acklam's rational approximation refined by one Halley step.
double std_normal_quantile(double q) {
  if (q <= 0.0) return -std::numeric_limits<double>::infinity();
  if (q >= 1.0) return std::numeric_limits<double>::infinity();
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  constexpr double lo_break = 0.02425;
  double x;
  if (q < lo_break) {
    const double t = std::sqrt(-2.0 * std::log(q));
    x = (((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5]) /
        ((((d[0] * t + d[1]) * t + d[2]) * t + d[3]) * t + 1.0);
  } else if (q > 1.0 - lo_break) {
    const double t = std::sqrt(-2.0 * std::log(1.0 - q));
    x = -(((((c[0] * t + c[1]) * t + c[2]) * t + c[3]) * t + c[4]) * t + c[5]) /
        ((((d[0] * t + d[1]) * t + d[2]) * t + d[3]) * t + 1.0);
  } else {
    const double t = q - 0.5;
    const double r = t * t;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * t /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  const double e = std_normal_cdf(x) - q;
  const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
  return x - u / (1.0 + 0.5 * x * u);
}

// CDF of a normal(mean, sd) truncated to [0,1].
double truncated_normal_cdf(double x, double mean, double sd, double& cached_mass) {
  const double lo = std_normal_cdf((0.0 - mean) / sd);
  const double hi = std_normal_cdf((1.0 - mean) / sd);
  cached_mass = hi - lo;
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  return (std_normal_cdf((x - mean) / sd) - lo) / (hi - lo);
}

double mixture_cdf(const TruncatedGaussianMixture& mix, double x) {
  double total_w = 0.0;
  for (const auto& c : mix.components) total_w += c.weight;
  double f = 0.0;
  for (const auto& c : mix.components) {
    double mass = 0.0;
    f += (c.weight / total_w) * truncated_normal_cdf(x, c.mean, c.stddev, mass);
  }
  return f;
}

double step_cdf(const std::vector<double>& sorted, double x) {
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
  return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

// Piecewise-linear interpolation between the midpoints of the CDF steps.
double linear_cdf(const std::vector<double>& sorted, double x) {
  const std::size_t n = sorted.size();
  if (n == 1) return x < sorted[0] ? 0.0 : 1.0;
  if (x <= sorted.front()) {
    return x < sorted.front() ? 0.0 : 1.0 / static_cast<double>(n);
  }
  if (x >= sorted.back()) return 1.0;
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
  const std::size_t i = static_cast<std::size_t>(it - sorted.begin());  // sorted[i-1] <= x < sorted[i]
  const double f0 = static_cast<double>(i) / static_cast<double>(n);
  const double f1 = static_cast<double>(i + 1) / static_cast<double>(n);
  const double x0 = sorted[i - 1];
  const double x1 = sorted[i];
  if (x1 == x0) return f1;
  return f0 + (f1 - f0) * (x - x0) / (x1 - x0);
}

}  // namespace

RcDistribution::RcDistribution(UniformDist u) : value_(u) {
  if (!(u.lo >= 0.0 && u.hi <= 1.0 && u.lo < u.hi))
    throw std::invalid_argument("RcDistribution: uniform support must satisfy 0 <= lo < hi <= 1");
}

RcDistribution::RcDistribution(TruncatedGaussianMixture m) : value_(std::move(m)) {
  const auto& mix = std::get<TruncatedGaussianMixture>(value_);
  if (mix.components.empty())
    throw std::invalid_argument("RcDistribution: mixture needs at least one component");
  for (const auto& c : mix.components) {
    if (c.weight <= 0.0 || c.stddev <= 0.0)
      throw std::invalid_argument("RcDistribution: component weights and stddevs must be positive");
  }
}

RcDistribution::RcDistribution(EmpiricalDist e) : value_(std::move(e)) {
  auto& emp = std::get<EmpiricalDist>(value_);
  if (emp.samples.empty()) throw std::invalid_argument("RcDistribution: empty empirical sample");
  for (double s : emp.samples) {
    if (s < 0.0 || s > 1.0)
      throw std::invalid_argument("RcDistribution: empirical samples must lie in [0,1]");
  }
  std::sort(emp.samples.begin(), emp.samples.end());
}

RcDistribution::RcDistribution(ParametricDist p) : value_(p) {
  if (!(p.c > 0.0 && p.c <= 1.0 && p.p > 0.0))
    throw std::invalid_argument("RcDistribution: parametric needs 0 < c <= 1 and p > 0");
}

double RcDistribution::cdf(double delta) const {
  if (delta <= 0.0) {
    // right-continuous: the parametric kind carries an atom of mass 1-c at 0
    if (const auto* par = std::get_if<ParametricDist>(&value_)) {
      return delta == 0.0 ? 1.0 - par->c : 0.0;
    }
    return 0.0;
  }
  if (delta >= 1.0) return 1.0;
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, UniformDist>) {
          if (delta <= d.lo) return 0.0;
          if (delta >= d.hi) return 1.0;
          return (delta - d.lo) / (d.hi - d.lo);
        } else if constexpr (std::is_same_v<T, TruncatedGaussianMixture>) {
          return mixture_cdf(d, delta);
        } else if constexpr (std::is_same_v<T, ParametricDist>) {
          return d.c * std::pow(delta, d.p) + 1.0 - d.c;
        } else {
          return step_cdf(d.samples, delta);
        }
      },
      value_);
}

double RcDistribution::cdf_linear(double delta) const {
  if (const auto* emp = std::get_if<EmpiricalDist>(&value_)) {
    if (delta <= 0.0) return 0.0;
    if (delta >= 1.0) return 1.0;
    return linear_cdf(emp->samples, delta);
  }
  return cdf(delta);
}

double RcDistribution::density(double delta) const {
  if (delta < 0.0 || delta > 1.0) return 0.0;
  return std::visit(
      [&](const auto& d) -> double {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, UniformDist>) {
          return (delta >= d.lo && delta <= d.hi) ? 1.0 / (d.hi - d.lo) : 0.0;
        } else if constexpr (std::is_same_v<T, TruncatedGaussianMixture>) {
          double total_w = 0.0;
          for (const auto& c : d.components) total_w += c.weight;
          double pdf = 0.0;
          for (const auto& c : d.components) {
            const double mass = std_normal_cdf((1.0 - c.mean) / c.stddev) -
                                std_normal_cdf((0.0 - c.mean) / c.stddev);
            const double z = (delta - c.mean) / c.stddev;
            pdf += (c.weight / total_w) * std::exp(-0.5 * z * z) /
                   (c.stddev * std::sqrt(2.0 * M_PI) * mass);
          }
          return pdf;
        } else if constexpr (std::is_same_v<T, ParametricDist>) {
          if (delta <= 0.0 && d.p < 1.0) return 0.0;
          return d.c * d.p * std::pow(delta, d.p - 1.0);
        } else {
          // slope of the piecewise-linear CDF
          const double h = 1e-6;
          const double lo = std::max(0.0, delta - h);
          const double hi = std::min(1.0, delta + h);
          return (linear_cdf(d.samples, hi) - linear_cdf(d.samples, lo)) / (hi - lo);
        }
      },
      value_);
}

const std::vector<double>& RcDistribution::samples() const {
  const auto* emp = std::get_if<EmpiricalDist>(&value_);
  if (!emp) throw std::logic_error("RcDistribution: samples() on non-empirical distribution");
  return emp->samples;
}

double eval_cdf(const RcDistribution& dist, double delta) { return dist.cdf(delta); }

double FittedCdf::eval(double delta) const {
  const double d = std::clamp(delta, 0.0, 1.0);
  return c * std::pow(d, p) + 1.0 - c;
}

double FittedCdf::derivative(double delta) const {
  const double d = std::clamp(delta, 0.0, 1.0);
  if (d == 0.0 && p < 1.0) return 0.0;  // avoid the integrable singularity
  return c * p * std::pow(d, p - 1.0);
}

namespace {

constexpr int kFitGrid = 200;

// SSE of the parametric model at exponent p, with the closed-form optimal c
// clamped to (0, 1]. Residual form: c*(delta^p - 1) - (F - 1).
double fit_sse(const std::vector<double>& grid, const std::vector<double>& f, double p,
               double& c_out) {
  double uu = 0.0;
  double uv = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double u = std::pow(grid[i], p) - 1.0;
    const double v = f[i] - 1.0;
    uu += u * u;
    uv += u * v;
  }
  double c = uu > 0.0 ? uv / uu : 1.0;
  c = std::clamp(c, 1e-12, 1.0);
  double sse = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = c * (std::pow(grid[i], p) - 1.0) - (f[i] - 1.0);
    sse += r * r;
  }
  c_out = c;
  return sse;
}

}  // namespace

FittedCdf fit_parametric_cdf(const RcDistribution& dist) {
  std::vector<double> grid;
  std::vector<double> f;
  grid.reserve(kFitGrid - 1);
  f.reserve(kFitGrid - 1);
  for (int i = 1; i < kFitGrid; ++i) {
    const double d = static_cast<double>(i) / kFitGrid;
    grid.push_back(d);
    f.push_back(dist.cdf(d));
  }
  if (f.back() <= f.front())
    throw std::invalid_argument("fit_parametric_cdf: degenerate distribution");

  // Log-spaced sweep on the exponent, then golden-section refinement.
  constexpr int kSweep = 160;
  const double lp_lo = std::log(0.02);
  const double lp_hi = std::log(64.0);
  int best_i = 0;
  double best_sse = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kSweep; ++i) {
    const double p = std::exp(lp_lo + (lp_hi - lp_lo) * i / (kSweep - 1));
    double c = 1.0;
    const double sse = fit_sse(grid, f, p, c);
    if (sse < best_sse) {
      best_sse = sse;
      best_i = i;
    }
  }
  auto lp_at = [&](int i) { return lp_lo + (lp_hi - lp_lo) * std::clamp(i, 0, kSweep - 1) / (kSweep - 1); };
  double a = lp_at(best_i - 1);
  double b = lp_at(best_i + 1);
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - gr * (b - a);
  double x2 = a + gr * (b - a);
  double c_tmp = 1.0;
  double f1 = fit_sse(grid, f, std::exp(x1), c_tmp);
  double f2 = fit_sse(grid, f, std::exp(x2), c_tmp);
  constexpr int kMaxIter = 200;
  int iter = 0;
  for (; iter < kMaxIter && b - a > 1e-12; ++iter) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - gr * (b - a);
      f1 = fit_sse(grid, f, std::exp(x1), c_tmp);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + gr * (b - a);
      f2 = fit_sse(grid, f, std::exp(x2), c_tmp);
    }
  }
  FittedCdf fit;
  fit.p = std::exp(0.5 * (a + b));
  fit_sse(grid, f, fit.p, fit.c);
  fit.converged = iter < kMaxIter;
  fit.max_error = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    fit.max_error = std::max(fit.max_error, std::fabs(fit.eval(grid[i]) - f[i]));
  }
  return fit;
}

std::vector<double> sample_clients(const RcDistribution& dist, std::int64_t n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_clients: n >= 1 required");
  std::mt19937_64 rng(seed);
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(n));
  std::visit(
      [&](const auto& d) {
        using T = std::decay_t<decltype(d)>;
        if constexpr (std::is_same_v<T, UniformDist>) {
          std::uniform_real_distribution<double> u(d.lo, d.hi);
          for (std::int64_t i = 0; i < n; ++i) out.push_back(u(rng));
        } else if constexpr (std::is_same_v<T, TruncatedGaussianMixture>) {
          double total_w = 0.0;
          for (const auto& c : d.components) total_w += c.weight;
          std::uniform_real_distribution<double> u(0.0, total_w);
          std::uniform_real_distribution<double> q(0.0, 1.0);
          for (std::int64_t i = 0; i < n; ++i) {
            double pick = u(rng);
            std::size_t ci = 0;
            for (; ci + 1 < d.components.size(); ++ci) {
              pick -= d.components[ci].weight;
              if (pick < 0.0) break;
            }
            const auto& comp = d.components[ci];
            // inverse transform restricted to the [0,1] truncation window
            const double lo = std_normal_cdf((0.0 - comp.mean) / comp.stddev);
            const double hi = std_normal_cdf((1.0 - comp.mean) / comp.stddev);
            const double z = std_normal_quantile(lo + q(rng) * (hi - lo));
            out.push_back(std::clamp(comp.mean + comp.stddev * z, 0.0, 1.0));
          }
        } else if constexpr (std::is_same_v<T, ParametricDist>) {
          std::uniform_real_distribution<double> u(0.0, 1.0);
          for (std::int64_t i = 0; i < n; ++i) {
            const double v = u(rng);
            out.push_back(v < 1.0 - d.c ? 0.0 : std::pow((v - (1.0 - d.c)) / d.c, 1.0 / d.p));
          }
        } else {
          std::uniform_int_distribution<std::size_t> pick(0, d.samples.size() - 1);
          for (std::int64_t i = 0; i < n; ++i) out.push_back(d.samples[pick(rng)]);
        }
      },
      dist.value());
  return out;
}

RcDistribution subsample_feedback(const std::vector<double>& samples, double csfr,
                                  std::uint64_t seed) {
  if (csfr <= 0.0 || csfr > 1.0)
    throw std::invalid_argument("subsample_feedback: csfr in (0, 1] required");
  if (samples.empty()) throw std::invalid_argument("subsample_feedback: empty sample pool");
  const std::size_t k = static_cast<std::size_t>(
      std::ceil(csfr * static_cast<double>(samples.size())));
  if (k == samples.size()) return RcDistribution(EmpiricalDist{samples});

  std::mt19937_64 rng(seed);
  std::vector<double> pool = samples;
  for (std::size_t i = 0; i < k; ++i) {  // partial Fisher-Yates
    std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
    std::swap(pool[i], pool[pick(rng)]);
  }
  pool.resize(k);
  return RcDistribution(EmpiricalDist{std::move(pool)});
}

RcDistribution preset_distribution(const std::string& name) {
  if (name == "uniform") return RcDistribution(UniformDist{0.0, 1.0});
  if (name == "bimodal-high") {
    return RcDistribution(TruncatedGaussianMixture{
        {{0.5, 0.50, 0.06}, {0.5, 0.80, 0.05}}});
  }
  if (name == "low-heavy") {
    // left tails of two off-support gaussians; most mass below delta = 0.4
    return RcDistribution(TruncatedGaussianMixture{
        {{0.12, -1.55, 0.22}, {0.88, -1.30, 1.50}}});
  }
  if (name == "mid-heavy") {
    return RcDistribution(TruncatedGaussianMixture{
        {{0.6, 0.45, 0.08}, {0.4, 0.75, 0.06}}});
  }
  throw std::invalid_argument("preset_distribution: unknown preset '" + name + "'");
}

std::vector<std::string> preset_distribution_names() {
  return {"uniform", "bimodal-high", "low-heavy", "mid-heavy"};
}

}  // namespace svmcast
