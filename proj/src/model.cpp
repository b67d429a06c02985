#include "spsim/model.hpp"

#include <cmath>
#include <sstream>

namespace spsim {

namespace {

void check(bool ok, std::vector<std::string>& sink, const std::string& msg) {
  if (!ok) sink.push_back(msg);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

ValidationReport validate(const EmitterDevice& device, const CavityParams& cavity,
                          const BenchConfig& bench) {
  ValidationReport r;

  check(cavity.quality_factor > 0.0, r.errors, "cavity: Q must be positive");
  check(cavity.mode_linewidth_uev > 0.0, r.errors, "cavity: gamma_C must be positive");
  check(cavity.wavelength_um > 0.0, r.errors, "cavity: wavelength must be positive");
  check(cavity.refractive_index >= 1.0, r.errors, "cavity: refractive index must be >= 1");
  check(cavity.mode_volume > 0.0, r.errors, "cavity: mode volume must be positive");
  if (cavity.quality_factor > 0.0 && cavity.mode_linewidth_uev > 0.0 &&
      cavity.wavelength_um > 0.0) {
    double q_from_linewidth = cavity.photon_energy_ev() * 1.0e6 / cavity.mode_linewidth_uev;
    double rel = std::abs(cavity.quality_factor - q_from_linewidth) / cavity.quality_factor;
    if (rel > 0.05) {
      r.warnings.push_back("cavity: Q=" + fmt(cavity.quality_factor) +
                           " differs from E_photon/gamma_C=" + fmt(q_from_linewidth) +
                           " by more than 5%");
    }
  }

  check(device.t_on_ps > 0.0, r.errors, "device: T_on must be positive");
  check(device.t_off_ps > device.t_on_ps, r.errors, "device: T_off must exceed T_on");
  check(device.f_slow >= 0.0 && device.f_slow < 1.0, r.errors,
        "device: f_slow must be in [0, 1)");
  if (device.f_slow > 0.0)
    check(device.t_slow_ps > 0.0, r.errors, "device: T_slow must be positive when f_slow > 0");
  check(device.p_mp >= 0.0 && device.p_mp <= 1.0, r.errors, "device: p_mp must be in [0, 1]");
  check(device.nu0 >= 0.0 && device.nu0 <= 1.0, r.errors, "device: nu0 must be in [0, 1]");
  check(device.eta >= 0.0 && device.eta <= 1.0, r.errors, "device: eta must be in [0, 1]");
  check(device.beta_per_rad2 >= 0.0, r.errors, "device: beta must be non-negative");

  check(bench.rep_rate_mhz > 0.0, r.errors, "bench: rep_rate must be positive");
  check(bench.r_reflect > 0.0 && bench.r_reflect < 1.0, r.errors,
        "bench: beamsplitter R must be in (0, 1)");
  check(bench.one_minus_eps > 0.0 && bench.one_minus_eps <= 1.0, r.errors,
        "bench: interferometer contrast must be in (0, 1]");
  check(bench.eta_setup >= 0.0 && bench.eta_setup <= 1.0, r.errors,
        "bench: eta_setup must be in [0, 1]");
  check(bench.pulse_pair_delay_ps >= 0.0, r.errors,
        "bench: pulse_pair_delay must be non-negative");
  if (bench.rep_rate_mhz > 0.0 && bench.pulse_pair_delay_ps > 0.0) {
    check(bench.pulse_pair_delay_ps < 0.5 * bench.t_rep_ps(), r.errors,
          "bench: pulse_pair_delay must be below half the repetition period");
    if (4.0 * bench.pulse_pair_delay_ps > bench.t_rep_ps()) {
      r.warnings.push_back(
          "bench: pulse pair delay above T_rep/4, correlation clusters overlap");
    }
  }
  check(bench.t_res_ps >= 0.0, r.errors, "bench: pair resolution must be non-negative");
  check(bench.pulse_length_ps > 0.0, r.errors, "bench: pulse length must be positive");
  check(bench.dead_time_ps >= 0.0, r.errors, "bench: dead time must be non-negative");
  check(bench.dark_rate_hz >= 0.0, r.errors, "bench: dark rate must be non-negative");
  if (device.t_on_ps > 0.0 && bench.pulse_length_ps > 0.1 * device.t_on_ps) {
    r.warnings.push_back(
        "bench: pulse length is not small against T_on; instantaneous-pulse "
        "approximation becomes questionable");
  }

  return r;
}

}  // namespace spsim
