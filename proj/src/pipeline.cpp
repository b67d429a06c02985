#include "spsim/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "spsim/dynamics.hpp"
#include "spsim/io.hpp"
#include "spsim/rng.hpp"

#include "json.hpp"

namespace spsim::pipeline {

namespace {

using nlohmann::ordered_json;

dynamics::PulseTrain train_for(const cfg::Config& c) {
  dynamics::PulseTrain t;
  t.n_periods = c.mode == cfg::RunMode::kDecay ? c.decay_periods : c.n_periods;
  t.pair_mode = c.mode != cfg::RunMode::kDecay && c.bench.pulse_pair_delay_ps > 0.0;
  bool hom = c.mode == cfg::RunMode::kHomParallel || c.mode == cfg::RunMode::kHomOrthogonal;
  t.pulse_area_rad = hom ? c.hom_pulse_area_rad() : c.pulse_area_rad();
  return t;
}

std::uint64_t leg_seed(std::uint64_t seed, int leg) {
  return splitmix64(seed ^ (0xA5A5A5A5ULL + static_cast<std::uint64_t>(leg) * 0x10001ULL));
}

ordered_json value_json(const ValueWithError& v) {
  ordered_json j;
  j["value"] = std::isnan(v.value) ? ordered_json(nullptr) : ordered_json(v.value);
  j["err"] = std::isnan(v.err) ? ordered_json(nullptr) : ordered_json(v.err);
  return j;
}

ordered_json fit_report_to_json(const FitReport& r) {
  ordered_json j;
  j["peaks"] = ordered_json::array();
  for (const auto& p : r.peaks) {
    ordered_json pj;
    pj["center_ps"] = p.center_ps;
    pj["area"] = p.area;
    pj["area_err"] = std::isnan(p.area_err) ? ordered_json(nullptr) : ordered_json(p.area_err);
    pj["decay_time_ps"] = p.decay_time_ps;
    pj["gaussian_sigma_ps"] = p.gaussian_sigma_ps;
    j["peaks"].push_back(pj);
  }
  auto put = [&](const std::string& key, const ValueWithError& v) {
    j[key] = std::isnan(v.value) ? ordered_json(nullptr) : ordered_json(v.value);
    j[key + "_err"] = std::isnan(v.err) ? ordered_json(nullptr) : ordered_json(v.err);
  };
  put("g2_zero", r.g2_zero);
  put("nu_raw", r.nu_raw);
  put("nu_corr", r.nu_corr);
  put("f_purcell", r.f_purcell);
  put("eta_device", r.eta_device);
  put("lifetime_ps", r.lifetime_ps);
  j["chi_square"] = r.chi_square;
  j["iteration_count"] = r.iteration_count;
  j["converged"] = r.converged;
  j["assumptions"] = r.assumptions;
  return j;
}

void write_leg_files(const std::string& out_dir, const std::string& prefix,
                     const Histogram& hist, const FitReport& report) {
  io::write_histogram_csv(out_dir + "/" + prefix + ".histogram.csv", hist);
  io::write_text_file(out_dir + "/" + prefix + ".fit.json",
                      fit_report_to_json(report).dump(2) + "\n");
}

}  // namespace

SimResult run_sim(const cfg::Config& c, std::uint64_t seed) {
  auto report = cfg::validate_config(c);
  if (!report.ok()) {
    std::string msg = "invalid configuration:";
    for (const auto& e : report.errors) msg += "\n  " + e;
    throw cfg::ConfigError(msg);
  }

  dynamics::PulseTrain train = train_for(c);
  BenchConfig bench = c.bench;
  if (c.mode == cfg::RunMode::kHomParallel) bench.polarization = PolarizationMode::kParallel;
  if (c.mode == cfg::RunMode::kHomOrthogonal)
    bench.polarization = PolarizationMode::kOrthogonal;

  auto photons = dynamics::emit(c.device, c.cavity, bench, train, seed);

  SimResult res;
  res.n_periods = train.n_periods;
  res.n_pulses = train.n_periods * (train.pair_mode ? 2 : 1);
  res.duration_s = static_cast<double>(train.n_periods) * bench.t_rep_ps() * 1.0e-12;

  switch (c.mode) {
    case cfg::RunMode::kHbt:
      res.clicks = optics::hbt_bench(photons, bench, seed, train.n_periods, &res.stats);
      break;
    case cfg::RunMode::kHomParallel:
    case cfg::RunMode::kHomOrthogonal:
      res.clicks = optics::hom_bench(photons, bench, seed, train.n_periods, &res.stats);
      break;
    case cfg::RunMode::kDecay:
      res.clicks =
          optics::decay_bench(photons, bench, c.decay_irf_ps, seed, train.n_periods, &res.stats);
      break;
  }
  res.count_rate_hz =
      res.duration_s > 0.0 ? static_cast<double>(res.clicks.size()) / res.duration_s : 0.0;
  return res;
}

CombAnalysis analyze_hbt(const std::vector<ClickRecord>& clicks, const cfg::Config& c,
                         double lifetime_ps) {
  CombAnalysis a;
  std::int64_t max_delay = c.max_delay_effective_ps();
  a.hist = correlate::correlate(clicks, c.bin_width_ps, max_delay, c.start_stop);

  double t_rep = c.bench.t_rep_ps();
  double dt = c.bench.pulse_pair_delay_ps;
  a.window_lo = -5.5 * t_rep;
  a.window_hi = 5.5 * t_rep;

  struct Tagged {
    double center;
    int kind;  // 0 central, 1 repetition side, 2 pulse-pair satellite
  };
  std::vector<Tagged> tagged;
  for (int k = -5; k <= 5; ++k) {
    double ck = k * t_rep;
    tagged.push_back({ck, k == 0 ? 0 : 1});
    if (dt > 0.0) {
      tagged.push_back({ck - dt, 2});
      tagged.push_back({ck + dt, 2});
    }
  }
  std::sort(tagged.begin(), tagged.end(),
            [](const Tagged& x, const Tagged& y) { return x.center < y.center; });

  fitkit::PeakModel model;
  for (std::size_t i = 0; i < tagged.size(); ++i) {
    model.centers_ps.push_back(tagged[i].center);
    if (tagged[i].kind == 0) a.central_index = i;
    if (tagged[i].kind == 1) a.side_indices.push_back(i);
  }
  model.tau_ps = lifetime_ps;
  model.sigma_ps = c.bench.t_res_ps;
  model.fix_tau = !c.fit_free_tau;
  model.fix_sigma = !c.fit_free_sigma;

  a.centers = model.centers_ps;
  a.fit = fitkit::fit_peak_train(a.hist, model, a.window_lo, a.window_hi);
  a.g2 = fitkit::extract_g2(a.fit, a.central_index, a.side_indices);
  return a;
}

HomAnalysis analyze_hom(const std::vector<ClickRecord>& clicks, const cfg::Config& c,
                        double lifetime_ps) {
  HomAnalysis a;
  double dt = c.bench.pulse_pair_delay_ps;
  double t_rep = c.bench.t_rep_ps();
  std::int64_t max_delay = c.max_delay_effective_ps();
  a.hist = correlate::correlate(clicks, c.bin_width_ps, max_delay, c.start_stop);

  double gap = std::max(t_rep - 4.0 * dt, 0.0);
  a.window_lo = -(2.0 * dt + 0.5 * gap);
  a.window_hi = 2.0 * dt + 0.5 * gap;

  fitkit::PeakModel model;
  model.centers_ps = {-2.0 * dt, -dt, 0.0, dt, 2.0 * dt};
  model.tau_ps = lifetime_ps;
  model.sigma_ps = c.bench.t_res_ps;
  model.fix_tau = !c.fit_free_tau;
  model.fix_sigma = !c.fit_free_sigma;

  a.centers = model.centers_ps;
  a.fit = fitkit::fit_peak_train(a.hist, model, a.window_lo, a.window_hi);
  return a;
}

DecayAnalysis analyze_decay(const std::vector<ClickRecord>& clicks, const cfg::Config& c) {
  DecayAnalysis a;
  double t_rep = c.bench.t_rep_ps();
  double lo = -std::min(4.0 * c.decay_irf_ps + 100.0, 0.2 * t_rep);
  double hi = 0.8 * t_rep;
  std::int64_t bw = c.decay_bin_ps;
  std::size_t n_bins = static_cast<std::size_t>(std::ceil((hi - lo) / static_cast<double>(bw)));

  a.hist.bin_width_ps = bw;
  a.hist.origin_ps = lo;
  a.hist.counts.assign(n_bins, 0);
  for (const auto& click : clicks) {
    double tau = std::fmod(static_cast<double>(click.time_ps), t_rep);
    if (tau < 0.0) tau += t_rep;
    if (tau > hi && tau - t_rep >= lo) tau -= t_rep;
    auto bin = static_cast<std::int64_t>(std::floor((tau - lo) / static_cast<double>(bw)));
    if (bin >= 0 && bin < static_cast<std::int64_t>(n_bins)) {
      ++a.hist.counts[static_cast<std::size_t>(bin)];
      ++a.hist.total_coincidences;
    }
  }

  auto shape = c.device.f_slow > 0.0 ? fitkit::DecayShape::kBiExp : fitkit::DecayShape::kSingleExp;
  a.fit = fitkit::fit_decay(a.hist, shape, c.decay_irf_ps);
  return a;
}

std::vector<std::string> standard_assumptions(const cfg::Config& c) {
  std::vector<std::string> out;
  out.push_back("pair resolution t_res interpreted as Gaussian sigma; per-detector jitter "
                "sigma = t_res/sqrt(2)");
  out.push_back("coalescence window defaults to the pulse-pair delay (arrival-slot "
                "discrimination)");
  (void)c;
  return out;
}

FitReport analyze_mode(const std::vector<ClickRecord>& clicks, const cfg::Config& c,
                       Histogram* hist_out, std::vector<double>* model_curve_out,
                       std::vector<std::size_t>* model_bins_out) {
  FitReport report;
  report.assumptions = standard_assumptions(c);
  double lifetime = dynamics::effective_lifetime_ps(c.device, c.cavity, c.device.detuning_mev);

  auto fill_peaks = [&](const fitkit::PeakTrainFit& fit, const std::vector<double>& centers) {
    for (std::size_t i = 0; i < centers.size(); ++i)
      report.peaks.push_back({centers[i], fit.areas[i], fit.area_errs[i], fit.tau_ps.value,
                              fit.sigma_ps.value});
    report.chi_square = fit.chi_square;
    report.iteration_count = fit.iterations;
    report.converged = fit.converged;
  };
  auto fill_model = [&](const Histogram& hist, const std::vector<double>& centers,
                        const fitkit::PeakTrainFit& fit, double lo, double hi) {
    if (!model_curve_out || !model_bins_out) return;
    for (std::size_t i = 0; i < hist.n_bins(); ++i) {
      double bc = hist.bin_center(i);
      if (bc < lo || bc > hi) continue;
      double m = 0.0;
      for (std::size_t pk = 0; pk < centers.size(); ++pk)
        m += fitkit::emg_peak(bc, centers[pk], fit.areas[pk], fit.tau_ps.value,
                              fit.sigma_ps.value);
      model_curve_out->push_back(m * static_cast<double>(hist.bin_width_ps));
      model_bins_out->push_back(i);
    }
  };

  switch (c.mode) {
    case cfg::RunMode::kHbt: {
      CombAnalysis a = analyze_hbt(clicks, c, lifetime);
      fill_peaks(a.fit, a.centers);
      if (a.g2.error)
        report.assumptions.push_back("g2 extraction failed: " + *a.g2.error);
      else
        report.g2_zero = a.g2.value;
      if (hist_out) *hist_out = a.hist;
      fill_model(a.hist, a.centers, a.fit, a.window_lo, a.window_hi);
      break;
    }
    case cfg::RunMode::kHomParallel:
    case cfg::RunMode::kHomOrthogonal: {
      HomAnalysis a = analyze_hom(clicks, c, lifetime);
      fill_peaks(a.fit, a.centers);
      if (hist_out) *hist_out = a.hist;
      fill_model(a.hist, a.centers, a.fit, a.window_lo, a.window_hi);
      break;
    }
    case cfg::RunMode::kDecay: {
      DecayAnalysis a = analyze_decay(clicks, c);
      report.lifetime_ps = a.fit.t1_ps;
      report.chi_square = a.fit.chi_square;
      report.iteration_count = a.fit.iterations;
      report.converged = a.fit.converged;
      if (hist_out) *hist_out = a.hist;
      if (model_curve_out && model_bins_out) {
        for (std::size_t i = 0; i < a.hist.n_bins(); ++i) {
          double bc = a.hist.bin_center(i);
          double m = fitkit::emg_decay(bc, a.fit.t0_ps.value, a.fit.area.value,
                                       a.fit.t1_ps.value, c.decay_irf_ps);
          if (c.device.f_slow > 0.0 && a.fit.t_slow_ps.value > 0.0) {
            m = (1.0 - a.fit.f_slow.value) * m +
                a.fit.f_slow.value *
                    fitkit::emg_decay(bc, a.fit.t0_ps.value, a.fit.area.value,
                                      a.fit.t_slow_ps.value, c.decay_irf_ps);
          }
          model_curve_out->push_back(m * static_cast<double>(a.hist.bin_width_ps));
          model_bins_out->push_back(i);
        }
      }
      break;
    }
  }
  return report;
}

Summary run_pipeline(const cfg::Config& c, std::uint64_t seed,
                     const std::optional<std::string>& out_dir) {
  Summary s;
  s.assumptions = standard_assumptions(c);

  // Lifetimes first: the comb fits keep the decay constant fixed to the
  // measured on-resonance lifetime.
  cfg::Config cd_on = c;
  cd_on.mode = cfg::RunMode::kDecay;
  SimResult decay_on = run_sim(cd_on, leg_seed(seed, 1));
  DecayAnalysis da_on = analyze_decay(decay_on.clicks, cd_on);
  s.t_on_ps = da_on.fit.t1_ps;
  s.all_converged &= da_on.fit.converged;

  cfg::Config cd_off = cd_on;
  cd_off.device.detuning_mev = c.off_resonance_detuning_mev;
  SimResult decay_off = run_sim(cd_off, leg_seed(seed, 2));
  DecayAnalysis da_off = analyze_decay(decay_off.clicks, cd_off);
  s.t_off_ps = da_off.fit.t1_ps;
  s.all_converged &= da_off.fit.converged;

  auto purcell = fitkit::purcell_from_lifetimes(s.t_on_ps, s.t_off_ps);
  s.f_purcell = purcell.f_p;
  if (purcell.swapped_lifetimes) s.warnings.push_back("purcell: fitted T_on exceeds T_off");

  cfg::Config ch = c;
  ch.mode = cfg::RunMode::kHbt;
  SimResult hbt = run_sim(ch, leg_seed(seed, 3));
  CombAnalysis comb = analyze_hbt(hbt.clicks, ch, s.t_on_ps.value);
  s.all_converged &= comb.fit.converged;
  if (comb.g2.error)
    s.warnings.push_back(*comb.g2.error);
  else
    s.g2_zero = comb.g2.value;

  double pulse_rate_hz =
      c.bench.rep_rate_mhz * 1.0e6 * (c.bench.pulse_pair_delay_ps > 0.0 ? 2.0 : 1.0);
  auto eff =
      fitkit::device_efficiency(hbt.count_rate_hz, pulse_rate_hz, {c.bench.eta_setup, 0.0});
  s.eta_device = eff.eta;
  if (eff.inconsistent) s.warnings.push_back("efficiency above one: calibration inconsistency");

  cfg::Config cp = c;
  cp.mode = cfg::RunMode::kHomParallel;
  SimResult hom_par = run_sim(cp, leg_seed(seed, 4));
  HomAnalysis ha_par = analyze_hom(hom_par.clicks, cp, s.t_on_ps.value);
  s.all_converged &= ha_par.fit.converged;

  cfg::Config co = c;
  co.mode = cfg::RunMode::kHomOrthogonal;
  SimResult hom_orth = run_sim(co, leg_seed(seed, 5));
  HomAnalysis ha_orth = analyze_hom(hom_orth.clicks, co, s.t_on_ps.value);
  s.all_converged &= ha_orth.fit.converged;

  auto vis = fitkit::extract_visibility(ha_par.central_area(), ha_orth.central_area());
  if (vis.error) {
    s.warnings.push_back(*vis.error);
  } else {
    s.nu_raw = vis.value;
    ValueWithError g_for_corr = comb.g2.error ? ValueWithError{0.0, 0.0} : s.g2_zero;
    auto corr = fitkit::correct_visibility(s.nu_raw, c.bench.r_reflect, c.bench.t_transmit(),
                                           c.bench.one_minus_eps, g_for_corr);
    s.nu_corr = corr.nu_corr;
    s.kappa = corr.kappa;
    s.assumptions.push_back(corr.formula);
  }

  if (out_dir) {
    FitReport r_on;
    r_on.lifetime_ps = s.t_on_ps;
    r_on.chi_square = da_on.fit.chi_square;
    r_on.iteration_count = da_on.fit.iterations;
    r_on.converged = da_on.fit.converged;
    r_on.assumptions = s.assumptions;
    write_leg_files(*out_dir, "decay_on", da_on.hist, r_on);

    FitReport r_off;
    r_off.lifetime_ps = s.t_off_ps;
    r_off.chi_square = da_off.fit.chi_square;
    r_off.iteration_count = da_off.fit.iterations;
    r_off.converged = da_off.fit.converged;
    r_off.assumptions = s.assumptions;
    write_leg_files(*out_dir, "decay_off", da_off.hist, r_off);

    FitReport r_hbt;
    for (std::size_t i = 0; i < comb.centers.size(); ++i)
      r_hbt.peaks.push_back({comb.centers[i], comb.fit.areas[i], comb.fit.area_errs[i],
                             comb.fit.tau_ps.value, comb.fit.sigma_ps.value});
    r_hbt.g2_zero = s.g2_zero;
    r_hbt.chi_square = comb.fit.chi_square;
    r_hbt.iteration_count = comb.fit.iterations;
    r_hbt.converged = comb.fit.converged;
    r_hbt.assumptions = s.assumptions;
    write_leg_files(*out_dir, "hbt", comb.hist, r_hbt);

    auto hom_report = [&](const HomAnalysis& ha) {
      FitReport r;
      for (std::size_t i = 0; i < ha.centers.size(); ++i)
        r.peaks.push_back({ha.centers[i], ha.fit.areas[i], ha.fit.area_errs[i],
                           ha.fit.tau_ps.value, ha.fit.sigma_ps.value});
      r.chi_square = ha.fit.chi_square;
      r.iteration_count = ha.fit.iterations;
      r.converged = ha.fit.converged;
      r.assumptions = s.assumptions;
      return r;
    };
    write_leg_files(*out_dir, "hom_parallel", ha_par.hist, hom_report(ha_par));
    write_leg_files(*out_dir, "hom_orthogonal", ha_orth.hist, hom_report(ha_orth));

    io::write_text_file(*out_dir + "/summary.json", summary_json_text(s));
  }
  return s;
}

std::string fit_report_json_text(const FitReport& r) {
  return fit_report_to_json(r).dump(2) + "\n";
}

FitReport fit_report_from_json_text(const std::string& text) {
  ordered_json j = ordered_json::parse(text);
  FitReport r;
  for (const auto& pj : j.at("peaks")) {
    FitPeak p;
    p.center_ps = pj.at("center_ps").get<double>();
    p.area = pj.at("area").get<double>();
    p.area_err = pj.at("area_err").is_null() ? kUnset : pj.at("area_err").get<double>();
    p.decay_time_ps = pj.at("decay_time_ps").get<double>();
    p.gaussian_sigma_ps = pj.at("gaussian_sigma_ps").get<double>();
    r.peaks.push_back(p);
  }
  auto get = [&](const std::string& key) {
    ValueWithError v{kUnset, kUnset};
    if (!j.at(key).is_null()) v.value = j.at(key).get<double>();
    if (!j.at(key + "_err").is_null()) v.err = j.at(key + "_err").get<double>();
    return v;
  };
  r.g2_zero = get("g2_zero");
  r.nu_raw = get("nu_raw");
  r.nu_corr = get("nu_corr");
  r.f_purcell = get("f_purcell");
  r.eta_device = get("eta_device");
  r.lifetime_ps = get("lifetime_ps");
  r.chi_square = j.at("chi_square").get<double>();
  r.iteration_count = j.at("iteration_count").get<int>();
  r.converged = j.at("converged").get<bool>();
  for (const auto& a : j.at("assumptions")) r.assumptions.push_back(a.get<std::string>());
  return r;
}

std::string summary_json_text(const Summary& s) {
  ordered_json j;
  j["g2_zero"] = value_json(s.g2_zero);
  j["nu_raw"] = value_json(s.nu_raw);
  j["nu_corr"] = value_json(s.nu_corr);
  j["f_purcell"] = value_json(s.f_purcell);
  j["eta_device"] = value_json(s.eta_device);
  j["t_on_ps"] = value_json(s.t_on_ps);
  j["t_off_ps"] = value_json(s.t_off_ps);
  j["kappa"] = s.kappa;
  j["assumptions"] = s.assumptions;
  j["warnings"] = s.warnings;
  j["all_converged"] = s.all_converged;
  return j.dump(2) + "\n";
}

}  // namespace spsim::pipeline
