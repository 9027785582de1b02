#ifndef SVMCAST_UTILITY_HPP_
#define SVMCAST_UTILITY_HPP_

#include <vector>

#include "svmcast/population.hpp"

namespace svmcast {

// Content-dependent parameters of the perceptual quality score.
struct NmosParams {
  double b_s = 3.49;       // spatial sensitivity
  double b_f = 7.23;       // temporal sensitivity
  double b_p = 29.68;      // PSNR midpoint (dB)
  double s_max = 101376;   // max pixel count (per client class)
  double f_max = 30;       // max frame rate
};

struct LayerPlayback {
  double pixels = 0;
  double frame_rate = 0;
  double psnr_db = 0;
};

// Normalized mean opinion score in [0, 1): product of spatial, temporal and
// PSNR factors; non-decreasing in each argument.
double nmos(const LayerPlayback& pb, const NmosParams& params);

// W_{m,l} * NMOS_{m,l}; throws std::domain_error for l beyond the class's
// highest decodable layer. l is 1-based.
double utility_rate(const ClientClass& cls, int l, double nmos_ml);

// alpha_{m,l} = U_m(R_l) - U_m(R_{l-1}) from a non-decreasing utility-rate
// sequence; throws std::invalid_argument on a decreasing sequence.
std::vector<double> marginal_utilities(const std::vector<double>& utilities);

// Prior-weighted marginal utilities and their total.
struct UtilityTable {
  // alpha_hat[m][l] = pi_m * alpha_{m,l}, l = 0..h_m-1
  std::vector<std::vector<double>> alpha_hat;
  std::vector<std::vector<double>> beta_hat;
  double u_max = 0.0;
};

UtilityTable build_utility_table(const std::vector<ClientClass>& classes);

// U_max - sum_m sum_{l<=h_m} alpha_hat[m][l] * F_m(delta_l).
// Throws std::domain_error when deltas violate the non-decreasing ordering.
// When use_fitted is set the classes' parametric CDFs are used instead of the
// underlying distributions.
double total_utility(const std::vector<double>& deltas, const std::vector<ClientClass>& classes,
                     bool use_fitted = false);

// The loss term alone: sum_m sum_l alpha_hat[m][l] * F_m(delta_l).
double utility_loss(const std::vector<double>& deltas, const std::vector<ClientClass>& classes,
                    bool use_fitted = false);

}  // namespace svmcast

#endif  // SVMCAST_UTILITY_HPP_
