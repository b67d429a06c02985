#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "spsim/model.hpp"

namespace spsim::cfg {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class RunMode { kHbt, kHomParallel, kHomOrthogonal, kDecay };

std::string to_string(RunMode mode);
RunMode run_mode_from_string(const std::string& s);

// Flat key=value sections mirroring the typed fields; unknown keys are errors.
struct Config {
  EmitterDevice device;
  CavityParams cavity;
  BenchConfig bench;

  // [run]
  RunMode mode = RunMode::kHbt;
  double pulse_area_pi = 1.0;       // theta / pi
  double hom_pulse_area_pi = 0.25;  // theta / pi for the interference legs
  std::int64_t n_periods = 1000000;
  std::int64_t decay_periods = 2000000;
  std::int64_t bin_width_ps = 64;
  std::int64_t max_delay_ps = 0;  // 0 = auto, 6 * T_rep rounded to a bin multiple
  double decay_irf_ps = 50.0;
  std::int64_t decay_bin_ps = 8;
  double off_resonance_detuning_mev = -2.7;
  bool start_stop = false;
  bool fit_free_tau = false;
  bool fit_free_sigma = false;

  std::int64_t max_delay_effective_ps() const {
    if (max_delay_ps > 0) return max_delay_ps;
    auto k = static_cast<std::int64_t>(
        std::ceil(6.0 * bench.t_rep_ps() / static_cast<double>(bin_width_ps)));
    return k * bin_width_ps;
  }
  double pulse_area_rad() const { return pulse_area_pi * 3.141592653589793; }
  double hom_pulse_area_rad() const { return hom_pulse_area_pi * 3.141592653589793; }
};

// Parses the section/key format; throws ConfigError with line diagnostics.
Config parse_config(const std::string& text);
Config load_config(const std::string& path);

// Fully-resolved key=value text (defaults materialized); parse round-trips.
std::string to_text(const Config& c);

// Run-level validation on top of model::validate.
ValidationReport validate_config(const Config& c);

}  // namespace spsim::cfg
