#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spsim/model.hpp"

namespace spsim::fitkit {

// Two-sided exponential decay (A/(2 tau)) exp(-|t-t0|/tau) convolved with a
// unit-area Gaussian of width sigma. Integrates to A over the real line.
double emg_peak(double t, double t0, double area, double tau_ps, double sigma_ps);
// One-sided variant (decay curves).
double emg_decay(double t, double t0, double area, double tau_ps, double sigma_ps);

struct EmgDerivs {
  double f = 0.0;
  double d_t0 = 0.0;
  double d_area = 0.0;
  double d_tau = 0.0;
  double d_sigma = 0.0;
};
EmgDerivs emg_peak_derivs(double t, double t0, double area, double tau_ps, double sigma_ps);
EmgDerivs emg_decay_derivs(double t, double t0, double area, double tau_ps, double sigma_ps);

// Peak-train model: one EMG peak per center, all peaks share tau and sigma.
struct PeakModel {
  std::vector<double> centers_ps;
  std::vector<double> area_seeds;  // optional; auto-seeded by window sums when empty
  double tau_ps = 100.0;
  double sigma_ps = 100.0;
  bool fix_tau = true;
  bool fix_sigma = true;
};

struct PeakTrainFit {
  std::vector<double> areas;
  std::vector<double> area_errs;
  std::vector<std::vector<double>> area_cov;
  ValueWithError tau_ps;    // err = 0 when fixed
  ValueWithError sigma_ps;
  double chi_square = 0.0;
  std::size_t n_bins = 0;
  int iterations = 0;
  bool converged = false;
  double grad_inf_initial = 0.0;
  double grad_inf_final = 0.0;
};

// Poisson-weighted damped least squares (variance max(counts, 1) per bin).
PeakTrainFit fit_peak_train(const std::vector<double>& bin_centers,
                            const std::vector<double>& counts, double bin_width_ps,
                            const PeakModel& model);
// Histogram overload; the fit window [lo, hi] selects bins by center.
PeakTrainFit fit_peak_train(const Histogram& hist, const PeakModel& model,
                            double window_lo_ps, double window_hi_ps);

enum class DecayShape { kSingleExp, kBiExp };

struct DecayFit {
  ValueWithError t1_ps;
  ValueWithError t_slow_ps;  // bi-exponential only
  ValueWithError f_slow;     // bi-exponential only
  ValueWithError t0_ps;
  ValueWithError area;
  bool f_slow_consistent_with_zero = false;
  double chi_square = 0.0;
  int iterations = 0;
  bool converged = false;
};

DecayFit fit_decay(const std::vector<double>& bin_centers, const std::vector<double>& counts,
                   double bin_width_ps, DecayShape shape, double irf_sigma_ps);
DecayFit fit_decay(const Histogram& hist, DecayShape shape, double irf_sigma_ps);

// --- derived-quantity extractors -------------------------------------------

struct Extraction {
  ValueWithError value;
  std::optional<std::string> error;  // set when the input made the ratio undefined
};

// g2(0) = central area / mean(side areas), errors from the fitted covariance.
Extraction extract_g2(const PeakTrainFit& fit, std::size_t central_index,
                      const std::vector<std::size_t>& side_indices);

// nu_raw = 1 - A_parallel(0) / A_orthogonal(0).
Extraction extract_visibility(const ValueWithError& a_parallel,
                              const ValueWithError& a_orthogonal);

struct CorrectedVisibility {
  ValueWithError nu_corr;
  double kappa = 0.0;
  std::string formula;  // recorded verbatim in reports
};

// nu_corr = (nu_raw + 2 g* kappa) (R^2+T^2) / (2 R T (1-eps)^2), kappa = nu_raw/2:
// the interfering-channel two-photon contamination scales the central peak by
// (1+g*), so the correction multiplies nu_raw by (1+g*) before the apparatus term.
CorrectedVisibility correct_visibility(const ValueWithError& nu_raw, double r_reflect,
                                       double t_transmit, double one_minus_eps,
                                       const ValueWithError& g_star);

struct Purcell {
  ValueWithError f_p;
  bool swapped_lifetimes = false;  // warning: T_on > T_off
};
Purcell purcell_from_lifetimes(const ValueWithError& t_on_ps, const ValueWithError& t_off_ps);

// F_P,max = 3 Q (lambda/n)^3 / (4 pi^2 V_M).
double purcell_theoretical_max(const CavityParams& cavity);

struct Efficiency {
  ValueWithError eta;
  bool inconsistent = false;  // eta > 1
};
Efficiency device_efficiency(double count_rate_hz, double rep_rate_hz,
                             const ValueWithError& eta_setup);

}  // namespace spsim::fitkit
