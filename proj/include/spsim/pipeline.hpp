#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spsim/config.hpp"
#include "spsim/correlate.hpp"
#include "spsim/fitkit.hpp"
#include "spsim/model.hpp"
#include "spsim/optics.hpp"

namespace spsim::pipeline {

struct SimResult {
  std::vector<ClickRecord> clicks;
  optics::BenchStats stats;
  std::int64_t n_periods = 0;
  std::int64_t n_pulses = 0;
  double duration_s = 0.0;
  double count_rate_hz = 0.0;
};

// Emission plus the bench selected by config.mode. Deterministic in (config, seed).
SimResult run_sim(const cfg::Config& c, std::uint64_t seed);

// Correlation-comb analysis (HBT): histogram, peak-train fit, g2 extraction.
struct CombAnalysis {
  Histogram hist;
  std::vector<double> centers;
  fitkit::PeakTrainFit fit;
  std::size_t central_index = 0;
  std::vector<std::size_t> side_indices;
  fitkit::Extraction g2;
  double window_lo = 0.0, window_hi = 0.0;
};
CombAnalysis analyze_hbt(const std::vector<ClickRecord>& clicks, const cfg::Config& c,
                         double lifetime_ps);

// Central five-peak cluster analysis (interference runs).
struct HomAnalysis {
  Histogram hist;
  std::vector<double> centers;  // {-2dt, -dt, 0, +dt, +2dt}
  fitkit::PeakTrainFit fit;
  double window_lo = 0.0, window_hi = 0.0;
  ValueWithError central_area() const {
    return {fit.areas[2], fit.area_errs[2]};
  }
};
HomAnalysis analyze_hom(const std::vector<ClickRecord>& clicks, const cfg::Config& c,
                        double lifetime_ps);

// Folded lifetime histogram and exponential fit.
struct DecayAnalysis {
  Histogram hist;
  fitkit::DecayFit fit;
};
DecayAnalysis analyze_decay(const std::vector<ClickRecord>& clicks, const cfg::Config& c);

// Standard assumption strings recorded in every report.
std::vector<std::string> standard_assumptions(const cfg::Config& c);

// Analysis of one clicks stream according to config.mode; fills a FitReport.
FitReport analyze_mode(const std::vector<ClickRecord>& clicks, const cfg::Config& c,
                       Histogram* hist_out = nullptr,
                       std::vector<double>* model_curve_out = nullptr,
                       std::vector<std::size_t>* model_bins_out = nullptr);

struct Summary {
  ValueWithError g2_zero, nu_raw, nu_corr, f_purcell, eta_device;
  ValueWithError t_on_ps, t_off_ps;
  double kappa = 0.0;
  std::vector<std::string> assumptions;
  std::vector<std::string> warnings;
  bool all_converged = true;
};

// End to end: decay on/off resonance, HBT, both interference polarizations;
// optional per-leg artifacts under out_dir.
Summary run_pipeline(const cfg::Config& c, std::uint64_t seed,
                     const std::optional<std::string>& out_dir);

// fit.json / summary.json serialization (fixed field names).
std::string fit_report_json_text(const FitReport& r);
FitReport fit_report_from_json_text(const std::string& text);
std::string summary_json_text(const Summary& s);

}  // namespace spsim::pipeline
