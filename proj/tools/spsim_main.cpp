#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "spsim/cli.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

void apply_threads(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pulsed single-photon source simulator and correlation analysis"};
  app.require_subcommand(1);

  std::string config_path, out_dir = ".", clicks_path, mode_override;
  std::uint64_t seed = 1;
  std::int64_t periods = 0;
  int threads = 0;

  auto add_common = [&](CLI::App* sub, bool with_seed) {
    sub->add_option("-c,--config", config_path, "configuration file")->required();
    sub->add_option("-o,--out", out_dir, "output directory");
    if (with_seed) sub->add_option("-s,--seed", seed, "random seed");
    sub->add_option("--periods", periods, "override the period count");
    sub->add_option("--threads", threads, "worker threads (default: all cores)");
    sub->add_option("--mode", mode_override,
                    "override run mode (hbt|hom-parallel|hom-orthogonal|decay)");
  };

  CLI::App* sim = app.add_subcommand("sim", "simulate a photon stream into clicks.csv");
  add_common(sim, true);

  CLI::App* analyze = app.add_subcommand("analyze", "correlate and fit a clicks.csv file");
  add_common(analyze, false);
  analyze->add_option("--clicks", clicks_path, "clicks.csv produced by sim")->required();

  CLI::App* pipe = app.add_subcommand("pipeline", "full reproduction run with summary.json");
  add_common(pipe, true);

  CLI::App* calc = app.add_subcommand("calc", "closed-form calculators");
  calc->require_subcommand(1);

  double t_on = 0.0, t_on_err = 0.0, t_off = 0.0, t_off_err = 0.0;
  CLI::App* purcell = calc->add_subcommand("purcell", "F_P = T_off/T_on - 1");
  purcell->add_option("--t-on", t_on, "on-resonance lifetime (ps)")->required();
  purcell->add_option("--t-on-err", t_on_err, "its standard error");
  purcell->add_option("--t-off", t_off, "detuned lifetime (ps)")->required();
  purcell->add_option("--t-off-err", t_off_err, "its standard error");

  double q = 0.0, wavelength = 0.9, n_index = 3.6, volume = 0.0;
  std::string unit = "lambda_over_n_cubed";
  CLI::App* pmax = calc->add_subcommand("purcell-max", "3 Q (lambda/n)^3 / (4 pi^2 V_M)");
  pmax->add_option("--q", q, "quality factor")->required();
  pmax->add_option("--wavelength-um", wavelength, "wavelength (um)");
  pmax->add_option("--refractive-index", n_index, "refractive index");
  pmax->add_option("--mode-volume", volume, "mode volume")->required();
  pmax->add_option("--unit", unit, "lambda_over_n_cubed|um3");

  double count_rate = 0.0, rep_rate = 0.0, eta_setup = 0.0, eta_setup_err = 0.0;
  CLI::App* eff = calc->add_subcommand("efficiency", "count_rate / (rep_rate * eta_setup)");
  eff->add_option("--count-rate", count_rate, "detected rate (Hz)")->required();
  eff->add_option("--rep-rate", rep_rate, "pulse rate (Hz)")->required();
  eff->add_option("--eta-setup", eta_setup, "setup efficiency")->required();
  eff->add_option("--eta-setup-err", eta_setup_err, "its standard error");

  CLI11_PARSE(app, argc, argv);
  apply_threads(threads);

  spsim::cli::RunOverrides overrides;
  if (periods > 0) overrides.n_periods = periods;
  if (!mode_override.empty()) overrides.mode = mode_override;

  try {
    if (sim->parsed())
      return spsim::cli::cmd_sim(config_path, seed, out_dir, overrides, std::cerr);
    if (analyze->parsed())
      return spsim::cli::cmd_analyze(config_path, clicks_path, out_dir, overrides, std::cerr);
    if (pipe->parsed())
      return spsim::cli::cmd_pipeline(config_path, seed, out_dir, overrides, std::cerr);
    if (purcell->parsed())
      return spsim::cli::cmd_calc_purcell({t_on, t_on_err}, {t_off, t_off_err}, std::cout);
    if (pmax->parsed())
      return spsim::cli::cmd_calc_purcell_max(q, wavelength, n_index, volume, unit, std::cout);
    if (eff->parsed())
      return spsim::cli::cmd_calc_efficiency(count_rate, rep_rate, {eta_setup, eta_setup_err},
                                             std::cout);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
