#include "spsim/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace spsim::cfg {

std::string to_string(RunMode mode) {
  switch (mode) {
    case RunMode::kHbt: return "hbt";
    case RunMode::kHomParallel: return "hom-parallel";
    case RunMode::kHomOrthogonal: return "hom-orthogonal";
    case RunMode::kDecay: return "decay";
  }
  return "hbt";
}

RunMode run_mode_from_string(const std::string& s) {
  if (s == "hbt") return RunMode::kHbt;
  if (s == "hom-parallel") return RunMode::kHomParallel;
  if (s == "hom-orthogonal") return RunMode::kHomOrthogonal;
  if (s == "decay") return RunMode::kDecay;
  throw ConfigError("unknown mode '" + s + "' (hbt|hom-parallel|hom-orthogonal|decay)");
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line) + ": expected a number, got '" + v + "'");
  }
}

std::int64_t parse_int(const std::string& v, int line) {
  double d = parse_double(v, line);
  if (d != std::floor(d) || std::abs(d) > 9.0e15)
    throw ConfigError("line " + std::to_string(line) + ": expected an integer, got '" + v + "'");
  return static_cast<std::int64_t>(d);
}

bool parse_bool(const std::string& v, int line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("line " + std::to_string(line) + ": expected true/false, got '" + v + "'");
}

}  // namespace

Config parse_config(const std::string& text) {
  Config c;
  bool r_from_ratio_seen = false;

  using Setter = std::function<void(const std::string&, int)>;
  std::map<std::string, std::map<std::string, Setter>> keys;

  auto dbl = [](double& field) {
    return [&field](const std::string& v, int line) { field = parse_double(v, line); };
  };
  auto i64 = [](std::int64_t& field) {
    return [&field](const std::string& v, int line) { field = parse_int(v, line); };
  };
  auto bl = [](bool& field) {
    return [&field](const std::string& v, int line) { field = parse_bool(v, line); };
  };

  keys["device"] = {
      {"t_on_ps", dbl(c.device.t_on_ps)},
      {"t_off_ps", dbl(c.device.t_off_ps)},
      {"detuning_mev", dbl(c.device.detuning_mev)},
      {"f_slow", dbl(c.device.f_slow)},
      {"t_slow_ps", dbl(c.device.t_slow_ps)},
      {"p_mp", dbl(c.device.p_mp)},
      {"beta_per_rad2", dbl(c.device.beta_per_rad2)},
      {"nu0", dbl(c.device.nu0)},
      {"eta", dbl(c.device.eta)},
  };
  keys["cavity"] = {
      {"q", dbl(c.cavity.quality_factor)},
      {"gamma_c_uev", dbl(c.cavity.mode_linewidth_uev)},
      {"wavelength_um", dbl(c.cavity.wavelength_um)},
      {"refractive_index", dbl(c.cavity.refractive_index)},
      {"mode_volume", dbl(c.cavity.mode_volume)},
      {"mode_volume_unit",
       [&c](const std::string& v, int line) {
         if (v == "lambda_over_n_cubed")
           c.cavity.mode_volume_unit = ModeVolumeUnit::kLambdaOverNCubed;
         else if (v == "um3")
           c.cavity.mode_volume_unit = ModeVolumeUnit::kCubicMicron;
         else
           throw ConfigError("line " + std::to_string(line) +
                             ": mode_volume_unit must be lambda_over_n_cubed or um3");
       }},
  };
  keys["bench"] = {
      {"rep_rate_mhz", dbl(c.bench.rep_rate_mhz)},
      {"pulse_length_ps", dbl(c.bench.pulse_length_ps)},
      {"pulse_pair_delay_ps", dbl(c.bench.pulse_pair_delay_ps)},
      {"r_over_t",
       [&c, &r_from_ratio_seen](const std::string& v, int line) {
         double ratio = parse_double(v, line);
         if (ratio <= 0.0)
           throw ConfigError("line " + std::to_string(line) + ": r_over_t must be positive");
         c.bench.r_reflect = ratio / (1.0 + ratio);
         r_from_ratio_seen = true;
       }},
      {"contrast", dbl(c.bench.one_minus_eps)},
      {"t_res_ps", dbl(c.bench.t_res_ps)},
      {"sigma_det_ps", dbl(c.bench.sigma_det_ps)},
      {"eta_setup", dbl(c.bench.eta_setup)},
      {"coalescence_window_ps", dbl(c.bench.coalescence_window_ps)},
      {"dead_time_ps", dbl(c.bench.dead_time_ps)},
      {"dark_rate_hz", dbl(c.bench.dark_rate_hz)},
  };
  keys["run"] = {
      {"mode",
       [&c](const std::string& v, int line) {
         try {
           c.mode = run_mode_from_string(v);
         } catch (const ConfigError& e) {
           throw ConfigError("line " + std::to_string(line) + ": " + e.what());
         }
       }},
      {"pulse_area_pi", dbl(c.pulse_area_pi)},
      {"hom_pulse_area_pi", dbl(c.hom_pulse_area_pi)},
      {"n_periods", i64(c.n_periods)},
      {"decay_periods", i64(c.decay_periods)},
      {"bin_width_ps", i64(c.bin_width_ps)},
      {"max_delay_ps", i64(c.max_delay_ps)},
      {"decay_irf_ps", dbl(c.decay_irf_ps)},
      {"decay_bin_ps", i64(c.decay_bin_ps)},
      {"off_resonance_detuning_mev", dbl(c.off_resonance_detuning_mev)},
      {"start_stop", bl(c.start_stop)},
      {"fit_free_tau", bl(c.fit_free_tau)},
      {"fit_free_sigma", bl(c.fit_free_sigma)},
  };

  std::istringstream in(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      section = trim(line.substr(1, line.size() - 2));
      if (keys.find(section) == keys.end())
        throw ConfigError("line " + std::to_string(lineno) + ": unknown section [" + section + "]");
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key=value");
    if (section.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    auto& sec = keys[section];
    auto it = sec.find(key);
    if (it == sec.end())
      throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key +
                        "' in section [" + section + "]");
    it->second(value, lineno);
  }
  (void)r_from_ratio_seen;
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

namespace {

std::string num(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

std::string to_text(const Config& c) {
  std::ostringstream os;
  os << "[device]\n";
  os << "t_on_ps = " << num(c.device.t_on_ps) << "\n";
  os << "t_off_ps = " << num(c.device.t_off_ps) << "\n";
  os << "detuning_mev = " << num(c.device.detuning_mev) << "\n";
  os << "f_slow = " << num(c.device.f_slow) << "\n";
  os << "t_slow_ps = " << num(c.device.t_slow_ps) << "\n";
  os << "p_mp = " << num(c.device.p_mp) << "\n";
  os << "beta_per_rad2 = " << num(c.device.beta_per_rad2) << "\n";
  os << "nu0 = " << num(c.device.nu0) << "\n";
  os << "eta = " << num(c.device.eta) << "\n";
  os << "\n[cavity]\n";
  os << "q = " << num(c.cavity.quality_factor) << "\n";
  os << "gamma_c_uev = " << num(c.cavity.mode_linewidth_uev) << "\n";
  os << "wavelength_um = " << num(c.cavity.wavelength_um) << "\n";
  os << "refractive_index = " << num(c.cavity.refractive_index) << "\n";
  os << "mode_volume = " << num(c.cavity.mode_volume) << "\n";
  os << "mode_volume_unit = "
     << (c.cavity.mode_volume_unit == ModeVolumeUnit::kCubicMicron ? "um3"
                                                                   : "lambda_over_n_cubed")
     << "\n";
  os << "\n[bench]\n";
  os << "rep_rate_mhz = " << num(c.bench.rep_rate_mhz) << "\n";
  os << "pulse_length_ps = " << num(c.bench.pulse_length_ps) << "\n";
  os << "pulse_pair_delay_ps = " << num(c.bench.pulse_pair_delay_ps) << "\n";
  os << "r_over_t = " << num(c.bench.r_reflect / (1.0 - c.bench.r_reflect)) << "\n";
  os << "contrast = " << num(c.bench.one_minus_eps) << "\n";
  os << "t_res_ps = " << num(c.bench.t_res_ps) << "\n";
  os << "sigma_det_ps = " << num(c.bench.sigma_det_ps) << "\n";
  os << "eta_setup = " << num(c.bench.eta_setup) << "\n";
  os << "coalescence_window_ps = " << num(c.bench.coalescence_window_ps) << "\n";
  os << "dead_time_ps = " << num(c.bench.dead_time_ps) << "\n";
  os << "dark_rate_hz = " << num(c.bench.dark_rate_hz) << "\n";
  os << "\n[run]\n";
  os << "mode = " << to_string(c.mode) << "\n";
  os << "pulse_area_pi = " << num(c.pulse_area_pi) << "\n";
  os << "hom_pulse_area_pi = " << num(c.hom_pulse_area_pi) << "\n";
  os << "n_periods = " << c.n_periods << "\n";
  os << "decay_periods = " << c.decay_periods << "\n";
  os << "bin_width_ps = " << c.bin_width_ps << "\n";
  os << "max_delay_ps = " << c.max_delay_ps << "\n";
  os << "decay_irf_ps = " << num(c.decay_irf_ps) << "\n";
  os << "decay_bin_ps = " << c.decay_bin_ps << "\n";
  os << "off_resonance_detuning_mev = " << num(c.off_resonance_detuning_mev) << "\n";
  os << "start_stop = " << (c.start_stop ? "true" : "false") << "\n";
  os << "fit_free_tau = " << (c.fit_free_tau ? "true" : "false") << "\n";
  os << "fit_free_sigma = " << (c.fit_free_sigma ? "true" : "false") << "\n";
  return os.str();
}

ValidationReport validate_config(const Config& c) {
  ValidationReport r = validate(c.device, c.cavity, c.bench);
  if (c.n_periods < 1) r.errors.push_back("run: n_periods must be >= 1");
  if (c.decay_periods < 1) r.errors.push_back("run: decay_periods must be >= 1");
  if (c.pulse_area_pi < 0.0) r.errors.push_back("run: pulse_area_pi must be >= 0");
  if (c.hom_pulse_area_pi < 0.0) r.errors.push_back("run: hom_pulse_area_pi must be >= 0");
  if (c.bin_width_ps <= 0) r.errors.push_back("run: bin_width_ps must be positive");
  if (c.decay_bin_ps <= 0) r.errors.push_back("run: decay_bin_ps must be positive");
  if (c.max_delay_ps < 0) r.errors.push_back("run: max_delay_ps must be >= 0");
  if (c.max_delay_ps > 0 && c.max_delay_ps % c.bin_width_ps != 0)
    r.errors.push_back("run: max_delay_ps must be a multiple of bin_width_ps");
  if (c.decay_irf_ps <= 0.0) r.errors.push_back("run: decay_irf_ps must be positive");
  if ((c.mode == RunMode::kHomParallel || c.mode == RunMode::kHomOrthogonal) &&
      c.bench.pulse_pair_delay_ps <= 0.0)
    r.errors.push_back("run: interference modes need a nonzero pulse_pair_delay_ps");
  return r;
}

}  // namespace spsim::cfg
