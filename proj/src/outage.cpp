#include "svmcast/outage.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace svmcast {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Continued fraction for the regularized incomplete beta (Lentz's method).
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 3e-14;
  constexpr double kFpMin = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

double reg_inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double lbeta = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
  const double front = std::exp(lbeta + a * std::log(x) + b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * betacf(a, b, x) / a;
  }
  return 1.0 - std::exp(lbeta + b * std::log1p(-x) + a * std::log(x)) * betacf(b, a, 1.0 - x) / b;
}

// P(K <= s) for K ~ Binomial(n, p).
double binomial_cdf(std::int64_t s, std::int64_t n, double p) {
  if (s < 0) return 0.0;
  if (s >= n) return 1.0;
  // Bin_{n,p}(s) = I_{1-p}(n - s, s + 1)
  return reg_inc_beta(static_cast<double>(n - s), static_cast<double>(s + 1), 1.0 - p);
}

double log_binom_pmf(std::int64_t n, std::int64_t k, double log_p, double log_q) {
  return std::lgamma(static_cast<double>(n + 1)) - std::lgamma(static_cast<double>(k + 1)) -
         std::lgamma(static_cast<double>(n - k + 1)) + k * log_p + (n - k) * log_q;
}

double logsumexp2(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

}  // namespace

double clamp_delta(double delta) {
  return std::clamp(delta, kDeltaEps, 1.0 - kDeltaEps);
}

double decoding_failure_prob(std::int64_t s, std::int64_t k, const CodeParams& params) {
  if (s < 1 || k < 0) throw std::invalid_argument("decoding_failure_prob: S >= 1, K >= 0 required");
  if (k <= s) return 1.0;
  return params.a * std::pow(params.b, static_cast<double>(k - s));
}

double outage_exact(std::int64_t s, std::int64_t n, double delta, const CodeParams& params) {
  if (s < 1 || n < 0) throw std::invalid_argument("outage_exact: S >= 1, N >= 0 required");
  if (delta <= 0.0 || delta > 1.0) throw std::invalid_argument("outage_exact: delta in (0,1]");
  if (n > 2'000'000) throw std::overflow_error("outage_exact: N too large, use model approximation");
  if (n <= s) return 1.0;
  if (delta == 1.0) return decoding_failure_prob(s, n, params);

  const double log_p = std::log(delta);
  const double log_q = std::log1p(-delta);
  const double log_b = std::log(params.b);
  const double log_ratio = log_p - log_q + log_b;  // k-independent part of term ratio

  // Tail sum over k = s+1..n of pmf(k) * a * b^(k-s), accumulated in log space.
  double log_sum = -kInf;
  double log_term = log_binom_pmf(n, s + 1, log_p, log_q) + std::log(params.a) + log_b;
  for (std::int64_t k = s + 1; k <= n; ++k) {
    log_sum = logsumexp2(log_sum, log_term);
    if (k == n) break;
    const double step =
        std::log(static_cast<double>(n - k)) - std::log(static_cast<double>(k + 1)) + log_ratio;
    log_term += step;
    // Terms are unimodal in k; once decaying and negligible, stop.
    if (step < 0.0 && log_term < log_sum - 45.0) break;
  }
  const double tail = std::exp(log_sum);
  const double head = binomial_cdf(s, n, delta);
  return std::min(1.0, head + tail);
}

double outage_model(std::int64_t s, double n, double delta, const CodeParams& params) {
  if (s < 1) throw std::invalid_argument("outage_model: S >= 1 required");
  const double d = clamp_delta(delta);
  const double waterline = static_cast<double>(s) / d;
  if (n < waterline) throw std::domain_error("outage_model: undefined below waterline N < S/delta");
  const double excess = n - waterline;
  return 0.5 * std::exp(-d * std::pow(excess, params.H) / (static_cast<double>(s) * (1.0 - d)));
}

double outage_model_extended(std::int64_t s, double n, double delta, const CodeParams& params) {
  const double d = clamp_delta(delta);
  if (n < static_cast<double>(s) / d) return 1.0;
  return outage_model(s, n, d, params);
}

double tau(std::int64_t s, double p_out, const CodeParams& params) {
  if (p_out <= 0.0 || p_out > 0.5) throw std::domain_error("tau: p_out in (0, 0.5] required");
  return std::pow(-static_cast<double>(s) * std::log(2.0 * p_out), 1.0 / params.H);
}

std::int64_t required_symbols_full(std::int64_t s, double delta, double p_out,
                                   const CodeParams& params) {
  const double d = clamp_delta(delta);
  const double waterline = static_cast<double>(s) / d;
  const double n_real = waterline + tau(s, p_out, params) * std::pow((1.0 - d) / d, 1.0 / params.H);
  std::int64_t n = static_cast<std::int64_t>(std::ceil(n_real));
  // The closed form is exact up to FP noise; settle the integer boundary so
  // that model(n) <= p_out < model(n - 1).
  while (static_cast<double>(n - 1) >= waterline &&
         outage_model(s, static_cast<double>(n - 1), d, params) <= p_out) {
    --n;
  }
  while (outage_model_extended(s, static_cast<double>(n), d, params) > p_out) {
    ++n;
  }
  return n;
}

std::int64_t required_symbols_linear(std::int64_t s, double delta, double p_out,
                                     const CodeParams& params) {
  if (p_out <= 0.0 || p_out > params.a)
    throw std::domain_error("required_symbols_linear: p_out in (0, a] required");
  const double d = clamp_delta(delta);
  const double overhead = std::log(p_out / params.a) / std::log(params.b);
  return static_cast<std::int64_t>(std::ceil((static_cast<double>(s) + overhead) / d));
}

std::vector<std::int64_t> forward_layer_allocation(const std::vector<LayerSpec>& layers,
                                                   const std::vector<double>& deltas,
                                                   const CodeParams& params) {
  if (layers.size() != deltas.size())
    throw std::invalid_argument("forward_layer_allocation: size mismatch");
  for (std::size_t l = 1; l < deltas.size(); ++l) {
    if (deltas[l] < deltas[l - 1])
      throw std::invalid_argument("forward_layer_allocation: deltas must be non-decreasing");
  }
  std::vector<std::int64_t> symbols;
  symbols.reserve(layers.size());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    double cum_success = 1.0;
    for (std::size_t j = 0; j < l; ++j) {
      cum_success *= 1.0 - outage_model_extended(layers[j].source_symbols,
                                                 static_cast<double>(symbols[j]), deltas[l], params);
    }
    if (cum_success <= 0.0) return {};
    const double target = 1.0 - (1.0 - layers[l].p_out) / cum_success;
    if (target <= 0.0) return {};  // preceding layers already violate layer-l assurance
    symbols.push_back(required_symbols_full(layers[l].source_symbols, deltas[l], target, params));
  }
  return symbols;
}

std::vector<double> implied_mnrcs(const std::vector<LayerSpec>& layers,
                                  const std::vector<std::int64_t>& symbols,
                                  const CodeParams& params) {
  if (layers.size() != symbols.size()) throw std::invalid_argument("implied_mnrcs: size mismatch");
  std::vector<double> deltas(layers.size(), 1.0);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto meets = [&](double d) {
      double cum_success = 1.0;
      for (std::size_t j = 0; j <= l; ++j) {
        cum_success *= 1.0 - outage_model_extended(layers[j].source_symbols,
                                                   static_cast<double>(symbols[j]), d, params);
      }
      return cum_success >= 1.0 - layers[l].p_out;
    };
    double hi = 1.0 - kDeltaEps;
    if (!meets(hi)) {
      deltas[l] = 1.0;  // unattainable with these budgets
      continue;
    }
    double lo = kDeltaEps;
    if (meets(lo)) {
      deltas[l] = lo;
      continue;
    }
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      (meets(mid) ? hi : lo) = mid;
    }
    deltas[l] = hi;
  }
  return deltas;
}

}  // namespace svmcast
