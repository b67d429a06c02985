#include "spsim/cli.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>

#include "spsim/config.hpp"
#include "spsim/fitkit.hpp"
#include "spsim/io.hpp"
#include "spsim/pipeline.hpp"

#include "json.hpp"

namespace spsim::cli {

namespace {

using nlohmann::ordered_json;

cfg::Config load_and_override(const std::string& config_path, const RunOverrides& ov) {
  cfg::Config c = cfg::load_config(config_path);
  if (ov.mode) c.mode = cfg::run_mode_from_string(*ov.mode);
  if (ov.n_periods) {
    c.n_periods = *ov.n_periods;
    c.decay_periods = *ov.n_periods;
  }
  auto report = cfg::validate_config(c);
  if (!report.ok()) {
    std::string msg = "invalid configuration (" + config_path + "):";
    for (const auto& e : report.errors) msg += "\n  " + e;
    throw cfg::ConfigError(msg);
  }
  return c;
}

ordered_json config_to_json(const cfg::Config& c) {
  ordered_json j;
  j["device"] = {{"t_on_ps", c.device.t_on_ps},
                 {"t_off_ps", c.device.t_off_ps},
                 {"detuning_mev", c.device.detuning_mev},
                 {"f_slow", c.device.f_slow},
                 {"t_slow_ps", c.device.t_slow_ps},
                 {"p_mp", c.device.p_mp},
                 {"beta_per_rad2", c.device.beta_per_rad2},
                 {"nu0", c.device.nu0},
                 {"eta", c.device.eta}};
  j["cavity"] = {{"q", c.cavity.quality_factor},
                 {"gamma_c_uev", c.cavity.mode_linewidth_uev},
                 {"wavelength_um", c.cavity.wavelength_um},
                 {"refractive_index", c.cavity.refractive_index},
                 {"mode_volume", c.cavity.mode_volume},
                 {"mode_volume_unit",
                  c.cavity.mode_volume_unit == ModeVolumeUnit::kCubicMicron
                      ? "um3"
                      : "lambda_over_n_cubed"}};
  j["bench"] = {{"rep_rate_mhz", c.bench.rep_rate_mhz},
                {"pulse_length_ps", c.bench.pulse_length_ps},
                {"pulse_pair_delay_ps", c.bench.pulse_pair_delay_ps},
                {"r_reflect", c.bench.r_reflect},
                {"t_transmit", c.bench.t_transmit()},
                {"contrast", c.bench.one_minus_eps},
                {"t_res_ps", c.bench.t_res_ps},
                {"sigma_det_ps", c.bench.sigma_det_effective_ps()},
                {"eta_setup", c.bench.eta_setup},
                {"coalescence_window_ps", c.bench.coalescence_window_effective_ps()},
                {"dead_time_ps", c.bench.dead_time_ps},
                {"dark_rate_hz", c.bench.dark_rate_hz}};
  j["run"] = {{"mode", cfg::to_string(c.mode)},
              {"pulse_area_pi", c.pulse_area_pi},
              {"hom_pulse_area_pi", c.hom_pulse_area_pi},
              {"n_periods", c.n_periods},
              {"decay_periods", c.decay_periods},
              {"bin_width_ps", c.bin_width_ps},
              {"max_delay_ps", c.max_delay_effective_ps()},
              {"decay_irf_ps", c.decay_irf_ps},
              {"decay_bin_ps", c.decay_bin_ps},
              {"off_resonance_detuning_mev", c.off_resonance_detuning_mev},
              {"start_stop", c.start_stop},
              {"fit_free_tau", c.fit_free_tau},
              {"fit_free_sigma", c.fit_free_sigma}};
  return j;
}

void write_run_json(const std::string& out_dir, const cfg::Config& c, std::uint64_t seed) {
  ordered_json j;
  j["seed"] = seed;
  j["config"] = config_to_json(c);
  io::write_text_file(out_dir + "/run.json", j.dump(2) + "\n");
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io::IoError("cannot create output directory '" + dir + "': " + ec.message());
}

int guarded(std::ostream& diag, const std::function<int()>& body) {
  try {
    return body();
  } catch (const cfg::ConfigError& e) {
    diag << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const io::IoError& e) {
    diag << "io error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    diag << "error: " << e.what() << "\n";
    return kExitFit;
  }
}

}  // namespace

int cmd_sim(const std::string& config_path, std::uint64_t seed, const std::string& out_dir,
            const RunOverrides& overrides, std::ostream& diag) {
  return guarded(diag, [&] {
    cfg::Config c = load_and_override(config_path, overrides);
    ensure_dir(out_dir);
    pipeline::SimResult res = pipeline::run_sim(c, seed);
    io::write_clicks_csv(out_dir + "/clicks.csv", res.clicks);
    write_run_json(out_dir, c, seed);
    diag << "periods=" << res.n_periods << " pulses=" << res.n_pulses
         << " photons=" << res.stats.n_input << " clicks=" << res.clicks.size()
         << " rate_hz=" << res.count_rate_hz << "\n";
    return kExitOk;
  });
}

int cmd_analyze(const std::string& config_path, const std::string& clicks_path,
                const std::string& out_dir, const RunOverrides& overrides, std::ostream& diag) {
  return guarded(diag, [&] {
    cfg::Config c = load_and_override(config_path, overrides);
    ensure_dir(out_dir);
    auto clicks = io::read_clicks_csv(clicks_path);

    Histogram hist;
    std::vector<double> model_curve;
    std::vector<std::size_t> model_bins;
    FitReport report = pipeline::analyze_mode(clicks, c, &hist, &model_curve, &model_bins);

    io::write_histogram_csv(out_dir + "/histogram.csv", hist);
    io::write_text_file(out_dir + "/fit.json", pipeline::fit_report_json_text(report));

    std::FILE* f = std::fopen((out_dir + "/peaks.csv").c_str(), "w");
    if (!f) throw io::IoError("cannot open peaks.csv for writing");
    std::fprintf(f, "bin_center_ps,counts,model\n");
    for (std::size_t k = 0; k < model_bins.size(); ++k) {
      std::size_t i = model_bins[k];
      std::fprintf(f, "%.17g,%lld,%.17g\n", hist.bin_center(i),
                   static_cast<long long>(hist.counts[i]), model_curve[k]);
    }
    std::fclose(f);

    bool g2_missing = c.mode == cfg::RunMode::kHbt && std::isnan(report.g2_zero.value);
    if (!report.converged || g2_missing) {
      diag << "fit did not converge cleanly; reports carry best-so-far parameters\n";
      return kExitFit;
    }
    return kExitOk;
  });
}

int cmd_pipeline(const std::string& config_path, std::uint64_t seed,
                 const std::string& out_dir, const RunOverrides& overrides,
                 std::ostream& diag) {
  return guarded(diag, [&] {
    cfg::Config c = load_and_override(config_path, overrides);
    ensure_dir(out_dir);
    write_run_json(out_dir, c, seed);
    pipeline::Summary s = pipeline::run_pipeline(c, seed, out_dir);
    diag << pipeline::summary_json_text(s);
    bool headline_ok = !std::isnan(s.g2_zero.value) && !std::isnan(s.nu_raw.value) &&
                       !std::isnan(s.nu_corr.value) && !std::isnan(s.f_purcell.value) &&
                       !std::isnan(s.eta_device.value);
    return s.all_converged && headline_ok ? kExitOk : kExitFit;
  });
}

int cmd_calc_purcell(const ValueWithError& t_on_ps, const ValueWithError& t_off_ps,
                     std::ostream& out) {
  auto p = fitkit::purcell_from_lifetimes(t_on_ps, t_off_ps);
  out << "F_P = " << p.f_p.value << " +- " << p.f_p.err;
  if (p.swapped_lifetimes) out << "  (warning: T_on exceeds T_off)";
  out << "\n";
  return kExitOk;
}

int cmd_calc_purcell_max(double q, double wavelength_um, double refractive_index,
                         double mode_volume, const std::string& unit, std::ostream& out) {
  CavityParams cav;
  cav.quality_factor = q;
  cav.wavelength_um = wavelength_um;
  cav.refractive_index = refractive_index;
  cav.mode_volume = mode_volume;
  if (unit == "um3")
    cav.mode_volume_unit = ModeVolumeUnit::kCubicMicron;
  else if (unit == "lambda_over_n_cubed")
    cav.mode_volume_unit = ModeVolumeUnit::kLambdaOverNCubed;
  else
    throw cfg::ConfigError("unit must be lambda_over_n_cubed or um3");
  out << "F_P_max = " << fitkit::purcell_theoretical_max(cav) << "\n";
  return kExitOk;
}

int cmd_calc_efficiency(double count_rate_hz, double rep_rate_hz,
                        const ValueWithError& eta_setup, std::ostream& out) {
  auto e = fitkit::device_efficiency(count_rate_hz, rep_rate_hz, eta_setup);
  out << "eta = " << e.eta.value << " +- " << e.eta.err;
  if (e.inconsistent) out << "  (warning: above one, calibration inconsistency)";
  out << "\n";
  return kExitOk;
}

}  // namespace spsim::cli
