#ifndef SVMCAST_HARNESS_HPP_
#define SVMCAST_HARNESS_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "svmcast/allocator.hpp"

namespace svmcast {

// Fully resolved experiment description (built from a scenario file or
// directly in tests).
struct Scenario {
  std::string name;
  std::vector<LayerSpec> layers;
  std::vector<ClientClass> classes;
  CodeParams code;
  std::int64_t n_max = 0;
  int grid_d = 200;
  std::uint64_t seed = 1;

  // study knobs
  int repetitions = 100;
  int clients_per_class = 1000;
  int num_segments = 100;
  double gamma_max = 0.0;
  double lambda = 1.0;
  std::vector<double> lambda_sweep;
  std::vector<double> csfr_sweep;
  std::vector<double> gamma_sweep;
  std::vector<std::int64_t> n_max_sweep;
  std::vector<double> sigma_sweep;
  std::vector<double> segment_scales;  // per-segment rate multipliers (smoothing study)
  double ffr_client_mean = 0.2;
  int frames_per_segment = 32;
  int ffr_trials = 1000;
};

struct SegmentStream {
  std::vector<std::vector<std::int64_t>> segments;  // [k][l] source symbols
};

struct StaticResult {
  bool feasible = false;
  double u_eep = 0.0, u_cv = 0.0, u_gd = 0.0, u_opt = 0.0;
  double eta_cv = 0.0, eta_gd = 0.0;  // gain over EEP, percent
  double eps_cv = 0.0, eps_gd = 0.0;  // efficiency vs exhaustive, percent
  Allocation eep, cv, gd, opt;
};

struct FeedbackPoint {
  double csfr = 0.0;
  double mean_eff_cv = 0.0, mean_eff_gd = 0.0;
  double std_eff_gd = 0.0;
  int repetitions = 0;
};

struct CrsPoint {
  double gamma_max = 0.0;
  double mrr = 1.0;
  double eps_crs = 0.0;  // percent
};

struct SmoothingResult {
  double lambda = 1.0;
  std::int64_t n_max = 0;
  double d_bar = 0.0;      // mean hinge dissatisfaction, percent
  double z = 0.0;          // clients in base-layer outage at least once, percent
  double d_bar_eep = 0.0;
  double z_eep = 0.0;
  std::vector<double> delta1_trace;
  std::vector<double> delta1_trace_eep;
  std::vector<std::vector<double>> delta_traces;  // [k][l]
  std::vector<double> utilities;                  // per segment
  std::vector<double> burst_hist;                 // weighted count of outage runs by length
  std::vector<double> burst_hist_eep;
};

struct FfrPoint {
  double sigma = 0.0;
  double ffr = 0.0;  // percent of frames frozen
};

// floor(omega * t_seg / symbol_bits)
std::int64_t service_bandwidth(double omega_bps, double t_seg_s, double symbol_bits);

// S_l^(k) = round(S_l * (1 + gamma)), gamma ~ U[-gamma_max, gamma_max] i.i.d.
// per layer per segment.
SegmentStream generate_variable_stream(const std::vector<LayerSpec>& base, double gamma_max,
                                       int k_segments, std::uint64_t seed);

// Deterministic seed derivation for independent sub-jobs.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

// Fit the parametric CDF of every class in place.
void ensure_fitted(std::vector<ClientClass>& classes);

StaticResult run_static(const Scenario& sc);

std::vector<FeedbackPoint> run_reduced_feedback(const Scenario& sc,
                                                const std::vector<double>& csfr_sweep);

std::vector<CrsPoint> run_crs_study(const Scenario& sc, const std::vector<double>& gamma_sweep);

SmoothingResult run_smoothing(const Scenario& sc, double lambda, std::int64_t n_max);

std::vector<FfrPoint> run_ffr(const std::vector<double>& delta1_trace, double client_mean,
                              const std::vector<double>& sigma_sweep, int trials,
                              std::uint64_t seed);

}  // namespace svmcast

#endif  // SVMCAST_HARNESS_HPP_
