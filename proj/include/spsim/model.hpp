#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace spsim {

// hc in eV*um (CODATA).
inline constexpr double kHcEvUm = 1.2398419843320026;

struct ValueWithError {
  double value = 0.0;
  double err = 0.0;
};

enum class ModeVolumeUnit { kLambdaOverNCubed, kCubicMicron };

// Micropillar cavity.
struct CavityParams {
  double quality_factor = 5930.0;
  double mode_linewidth_uev = 232.0;    // gamma_C
  double wavelength_um = 0.9;
  double refractive_index = 3.6;
  double mode_volume = 76.377186;       // in the unit below
  ModeVolumeUnit mode_volume_unit = ModeVolumeUnit::kLambdaOverNCubed;

  double photon_energy_ev() const { return kHcEvUm / wavelength_um; }
  double mode_volume_um3() const {
    if (mode_volume_unit == ModeVolumeUnit::kCubicMicron) return mode_volume;
    double lon = wavelength_um / refractive_index;
    return mode_volume * lon * lon * lon;
  }
};

// Quantum dot + coupling knobs. Lifetimes in ps, detuning in meV.
struct EmitterDevice {
  double t_on_ps = 168.0;          // lifetime on resonance
  double t_off_ps = 1140.0;        // lifetime far detuned
  double detuning_mev = 0.0;       // E_X - E_C
  double f_slow = 0.0;             // slow component weight of the biexponential
  double t_slow_ps = 0.0;          // slow lifetime, required when f_slow > 0
  double p_mp = 0.0;               // second-emission probability per pi pulse
  double beta_per_rad2 = 0.0;      // visibility loss per pulse-area^2
  double nu0 = 1.0;                // zero-power indistinguishability
  double eta = 1.0;                // extraction efficiency
};

enum class PolarizationMode { kParallel, kOrthogonal };

// Optical bench: excitation comb, interferometer and detection chain.
struct BenchConfig {
  double rep_rate_mhz = 82.0;
  double pulse_length_ps = 1.3;
  double pulse_pair_delay_ps = 2000.0;   // 0 = single pulse per period
  double r_reflect = 0.5;                // second splitter, R + T = 1
  double one_minus_eps = 1.0;            // interferometer contrast
  double sigma_det_ps = -1.0;            // per-detector jitter; <0 = t_res/sqrt(2)
  double t_res_ps = 520.0;               // pair resolution (Gaussian sigma)
  double eta_setup = 1.0;
  PolarizationMode polarization = PolarizationMode::kParallel;
  double coalescence_window_ps = 0.0;    // 0 = auto (pulse_pair_delay)
  double dead_time_ps = 0.0;
  double dark_rate_hz = 0.0;

  double t_rep_ps() const { return 1.0e6 / rep_rate_mhz; }
  double t_transmit() const { return 1.0 - r_reflect; }
  double sigma_det_effective_ps() const {
    return sigma_det_ps >= 0.0 ? sigma_det_ps : t_res_ps / 1.4142135623730951;
  }
  double coalescence_window_effective_ps() const {
    return coalescence_window_ps > 0.0 ? coalescence_window_ps
                                       : pulse_pair_delay_ps;
  }
};

enum class Slot : std::uint8_t { kOnly = 0, kEarly = 1, kLate = 2 };
enum class Polarization : std::uint8_t { kH = 0, kV = 1 };

struct PhotonRecord {
  std::int64_t period = 0;
  Slot slot = Slot::kOnly;
  Polarization polarization = Polarization::kH;
  bool is_extra = false;
  double emission_time_ps = 0.0;  // relative to its pulse
  double nu_pair = 0.0;           // wavepacket overlap with the partner slot

  bool operator==(const PhotonRecord&) const = default;
};

struct ClickRecord {
  std::int64_t time_ps = 0;
  std::uint8_t channel = 1;  // 1 or 2

  bool operator==(const ClickRecord&) const = default;
  bool operator<(const ClickRecord& o) const {
    if (time_ps != o.time_ps) return time_ps < o.time_ps;
    return channel < o.channel;
  }
};

struct Histogram {
  std::int64_t bin_width_ps = 1;
  double origin_ps = 0.0;  // left edge of bin 0
  std::vector<std::int64_t> counts;
  std::int64_t total_coincidences = 0;

  std::size_t n_bins() const { return counts.size(); }
  double bin_center(std::size_t i) const {
    return origin_ps + (static_cast<double>(i) + 0.5) * bin_width_ps;
  }
  bool operator==(const Histogram&) const = default;
};

inline constexpr double kUnset = std::numeric_limits<double>::quiet_NaN();

struct FitPeak {
  double center_ps = 0.0;
  double area = 0.0;         // counts * ps
  double area_err = 0.0;
  double decay_time_ps = 0.0;
  double gaussian_sigma_ps = 0.0;
};

// Fit output plus the derived quantities a full analysis attaches.
// NaN value/err means "not produced by this analysis".
struct FitReport {
  std::vector<FitPeak> peaks;
  ValueWithError g2_zero{kUnset, kUnset};
  ValueWithError nu_raw{kUnset, kUnset};
  ValueWithError nu_corr{kUnset, kUnset};
  ValueWithError f_purcell{kUnset, kUnset};
  ValueWithError eta_device{kUnset, kUnset};
  ValueWithError lifetime_ps{kUnset, kUnset};
  double chi_square = 0.0;
  int iteration_count = 0;
  bool converged = true;
  std::vector<std::string> assumptions;
};

struct ValidationReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const { return errors.empty(); }
};

ValidationReport validate(const EmitterDevice& device, const CavityParams& cavity,
                          const BenchConfig& bench);

}  // namespace spsim
