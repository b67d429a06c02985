#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>

#include "spsim/model.hpp"

namespace spsim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitFit = 3;
inline constexpr int kExitIo = 4;

struct RunOverrides {
  std::optional<std::int64_t> n_periods;
  std::optional<std::string> mode;
};

// sim: clicks.csv + run.json under out_dir. Byte-identical for equal (config, seed).
int cmd_sim(const std::string& config_path, std::uint64_t seed, const std::string& out_dir,
            const RunOverrides& overrides, std::ostream& diag);

// analyze: histogram.csv + fit.json + peaks.csv under out_dir.
int cmd_analyze(const std::string& config_path, const std::string& clicks_path,
                const std::string& out_dir, const RunOverrides& overrides, std::ostream& diag);

// pipeline: per-leg artifacts + summary.json + run.json under out_dir.
int cmd_pipeline(const std::string& config_path, std::uint64_t seed,
                 const std::string& out_dir, const RunOverrides& overrides, std::ostream& diag);

int cmd_calc_purcell(const ValueWithError& t_on_ps, const ValueWithError& t_off_ps,
                     std::ostream& out);
int cmd_calc_purcell_max(double q, double wavelength_um, double refractive_index,
                         double mode_volume, const std::string& unit, std::ostream& out);
int cmd_calc_efficiency(double count_rate_hz, double rep_rate_hz,
                        const ValueWithError& eta_setup, std::ostream& out);

}  // namespace spsim::cli
