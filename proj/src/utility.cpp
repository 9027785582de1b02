#include "svmcast/utility.hpp"

#include <cmath>
#include <stdexcept>

namespace svmcast {

double nmos(const LayerPlayback& pb, const NmosParams& params) {
  if (pb.pixels <= 0 || pb.frame_rate <= 0)
    throw std::invalid_argument("nmos: pixels and frame rate must be positive");
  if (params.b_s <= 0 || params.b_f <= 0 || params.s_max <= 0 || params.f_max <= 0)
    throw std::invalid_argument("nmos: invalid parameters");
  const double spatial =
      (1.0 - std::exp(-params.b_s * pb.pixels / params.s_max)) / (1.0 - std::exp(-params.b_s));
  const double temporal =
      (1.0 - std::exp(-params.b_f * pb.frame_rate / params.f_max)) / (1.0 - std::exp(-params.b_f));
  const double amplitude = 1.0 - 1.0 / (1.0 + std::exp(0.34 * (pb.psnr_db - params.b_p)));
  return spatial * temporal * amplitude;
}

double utility_rate(const ClientClass& cls, int l, double nmos_ml) {
  if (l < 1 || l > cls.highest_layer)
    throw std::domain_error("utility_rate: layer beyond class capability");
  const double w = static_cast<std::size_t>(l) <= cls.prefs.size() ? cls.prefs[l - 1] : 1.0;
  return w * nmos_ml;
}

std::vector<double> marginal_utilities(const std::vector<double>& utilities) {
  std::vector<double> alphas;
  alphas.reserve(utilities.size());
  double prev = 0.0;
  for (double u : utilities) {
    if (u < prev) throw std::invalid_argument("marginal_utilities: utility-rate must be non-decreasing");
    alphas.push_back(u - prev);
    prev = u;
  }
  return alphas;
}

UtilityTable build_utility_table(const std::vector<ClientClass>& classes) {
  UtilityTable table;
  table.alpha_hat.reserve(classes.size());
  table.beta_hat.reserve(classes.size());
  for (const auto& cls : classes) {
    if (static_cast<int>(cls.alphas.size()) < cls.highest_layer)
      throw std::invalid_argument("build_utility_table: alphas shorter than h_m");
    std::vector<double> ah(cls.alphas.begin(), cls.alphas.begin() + cls.highest_layer);
    for (double& a : ah) a *= cls.prior;
    std::vector<double> bh(cls.highest_layer, 0.0);
    for (int l = 0; l < cls.highest_layer && l < static_cast<int>(cls.betas.size()); ++l) {
      bh[l] = cls.prior * cls.betas[l];
    }
    for (double a : ah) table.u_max += a;
    table.alpha_hat.push_back(std::move(ah));
    table.beta_hat.push_back(std::move(bh));
  }
  return table;
}

namespace {

void check_ordering(const std::vector<double>& deltas) {
  for (std::size_t l = 1; l < deltas.size(); ++l) {
    if (deltas[l] < deltas[l - 1])
      throw std::domain_error("total_utility: deltas must be non-decreasing");
  }
}

}  // namespace

double utility_loss(const std::vector<double>& deltas, const std::vector<ClientClass>& classes,
                    bool use_fitted) {
  check_ordering(deltas);
  double loss = 0.0;
  for (const auto& cls : classes) {
    const int h = std::min<int>(cls.highest_layer, static_cast<int>(deltas.size()));
    for (int l = 0; l < h; ++l) {
      const double f = use_fitted ? cls.fitted.eval(deltas[l]) : cls.dist.cdf(deltas[l]);
      loss += cls.prior * cls.alphas[l] * f;
    }
  }
  return loss;
}

double total_utility(const std::vector<double>& deltas, const std::vector<ClientClass>& classes,
                     bool use_fitted) {
  const UtilityTable table = build_utility_table(classes);
  return table.u_max - utility_loss(deltas, classes, use_fitted);
}

}  // namespace svmcast
