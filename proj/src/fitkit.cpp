#include "spsim/fitkit.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spsim/levmar.hpp"
#include "spsim/mathfn.hpp"

namespace spsim::fitkit {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kSqrt2OverPi = 0.7978845608028654;  // sqrt(2/pi)

// G(u) = exp(sigma^2/(2 tau^2) - u/tau) * erfc(sigma/(sqrt2 tau) - u/(sqrt2 sigma)),
// the right-decaying half kernel of the exponential (x) Gaussian convolution,
// evaluated through erfcx so the exp*erfc product never overflows.
struct Branch {
  double g;
  double dg_du;
  double dg_dtau;
  double dg_dsigma;
};

Branch branch(double u, double tau, double sigma) {
  double z = sigma / (kSqrt2 * tau) - u / (kSqrt2 * sigma);
  double eg = std::exp(-u * u / (2.0 * sigma * sigma));
  double g;
  if (z >= 0.0) {
    g = eg * erfcx_pos(z);
  } else {
    double e1 = sigma * sigma / (2.0 * tau * tau) - u / tau;  // <= 0 whenever z < 0
    g = 2.0 * std::exp(e1) - eg * erfcx_pos(-z);
  }
  Branch b;
  b.g = g;
  b.dg_du = -g / tau + kSqrt2OverPi / sigma * eg;
  b.dg_dtau = g * (u / (tau * tau) - sigma * sigma / (tau * tau * tau)) +
              kSqrt2OverPi * sigma / (tau * tau) * eg;
  b.dg_dsigma = g * sigma / (tau * tau) - kSqrt2OverPi * (1.0 / tau + u / (sigma * sigma)) * eg;
  return b;
}

void require_positive(double tau, double sigma) {
  if (tau <= 0.0) throw std::invalid_argument("emg: tau must be positive");
  if (sigma <= 0.0) throw std::invalid_argument("emg: sigma must be positive");
}

}  // namespace

double emg_peak(double t, double t0, double area, double tau_ps, double sigma_ps) {
  require_positive(tau_ps, sigma_ps);
  double u = t - t0;
  return area / (4.0 * tau_ps) * (branch(u, tau_ps, sigma_ps).g + branch(-u, tau_ps, sigma_ps).g);
}

double emg_decay(double t, double t0, double area, double tau_ps, double sigma_ps) {
  require_positive(tau_ps, sigma_ps);
  double u = t - t0;
  return area / (2.0 * tau_ps) * branch(u, tau_ps, sigma_ps).g;
}

EmgDerivs emg_peak_derivs(double t, double t0, double area, double tau_ps, double sigma_ps) {
  require_positive(tau_ps, sigma_ps);
  double u = t - t0;
  Branch p = branch(u, tau_ps, sigma_ps);
  Branch m = branch(-u, tau_ps, sigma_ps);
  double pref = area / (4.0 * tau_ps);
  EmgDerivs d;
  d.f = pref * (p.g + m.g);
  d.d_area = d.f / area;
  d.d_t0 = pref * (-p.dg_du + m.dg_du);
  d.d_tau = -d.f / tau_ps + pref * (p.dg_dtau + m.dg_dtau);
  d.d_sigma = pref * (p.dg_dsigma + m.dg_dsigma);
  return d;
}

EmgDerivs emg_decay_derivs(double t, double t0, double area, double tau_ps, double sigma_ps) {
  require_positive(tau_ps, sigma_ps);
  double u = t - t0;
  Branch p = branch(u, tau_ps, sigma_ps);
  double pref = area / (2.0 * tau_ps);
  EmgDerivs d;
  d.f = pref * p.g;
  d.d_area = d.f / area;
  d.d_t0 = -pref * p.dg_du;
  d.d_tau = -d.f / tau_ps + pref * p.dg_dtau;
  d.d_sigma = pref * p.dg_dsigma;
  return d;
}

// ---------------------------------------------------------------------------
// Peak-train fit

PeakTrainFit fit_peak_train(const std::vector<double>& bin_centers,
                            const std::vector<double>& counts, double bin_width_ps,
                            const PeakModel& model) {
  if (bin_centers.size() != counts.size())
    throw std::invalid_argument("fit_peak_train: centers/counts size mismatch");
  if (model.centers_ps.empty())
    throw std::invalid_argument("fit_peak_train: no peaks in the model");
  const std::size_t k = model.centers_ps.size();
  const std::size_t n = bin_centers.size();

  // Auto-seed areas from window sums around each center.
  std::vector<double> seeds = model.area_seeds;
  if (seeds.empty()) {
    double spacing = 1e18;
    std::vector<double> sorted = model.centers_ps;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 1; i < sorted.size(); ++i)
      spacing = std::min(spacing, sorted[i] - sorted[i - 1]);
    if (k == 1) spacing = 2.0 * (bin_centers.back() - bin_centers.front());
    seeds.assign(k, 0.0);
    for (std::size_t pk = 0; pk < k; ++pk) {
      double c = model.centers_ps[pk];
      for (std::size_t i = 0; i < n; ++i)
        if (std::abs(bin_centers[i] - c) <= 0.5 * spacing) seeds[pk] += counts[i];
      seeds[pk] *= bin_width_ps;
    }
  }
  double floor_area = 0.5 * bin_width_ps;  // half a count
  for (auto& s : seeds) s = std::max(s, floor_area);

  // Parameters: log areas, then optionally log tau, log sigma.
  std::size_t p = k;
  std::ptrdiff_t i_tau = -1, i_sigma = -1;
  if (!model.fix_tau) i_tau = static_cast<std::ptrdiff_t>(p++);
  if (!model.fix_sigma) i_sigma = static_cast<std::ptrdiff_t>(p++);

  std::vector<double> theta0(p);
  for (std::size_t pk = 0; pk < k; ++pk) theta0[pk] = std::log(seeds[pk]);
  if (i_tau >= 0) theta0[static_cast<std::size_t>(i_tau)] = std::log(model.tau_ps);
  if (i_sigma >= 0) theta0[static_cast<std::size_t>(i_sigma)] = std::log(model.sigma_ps);

  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / std::max(counts[i], 1.0);

  auto eval = [&](const std::vector<double>& th, std::vector<double>& m,
                  std::vector<double>& jac) {
    m.assign(n, 0.0);
    jac.assign(n * p, 0.0);
    double tau = i_tau >= 0 ? std::exp(th[static_cast<std::size_t>(i_tau)]) : model.tau_ps;
    double sigma =
        i_sigma >= 0 ? std::exp(th[static_cast<std::size_t>(i_sigma)]) : model.sigma_ps;
    for (std::size_t pk = 0; pk < k; ++pk) {
      double area = std::exp(th[pk]);
      for (std::size_t i = 0; i < n; ++i) {
        EmgDerivs d =
            emg_peak_derivs(bin_centers[i], model.centers_ps[pk], area, tau, sigma);
        m[i] += d.f * bin_width_ps;
        jac[i * p + pk] += d.d_area * area * bin_width_ps;  // d/d log(area)
        if (i_tau >= 0)
          jac[i * p + static_cast<std::size_t>(i_tau)] += d.d_tau * tau * bin_width_ps;
        if (i_sigma >= 0)
          jac[i * p + static_cast<std::size_t>(i_sigma)] += d.d_sigma * sigma * bin_width_ps;
      }
    }
  };

  LevMarResult lm = lev_mar(counts, w, theta0, eval);

  PeakTrainFit fit;
  fit.n_bins = n;
  fit.chi_square = lm.chi_square;
  fit.iterations = lm.iterations;
  fit.converged = lm.converged && !lm.singular;
  fit.grad_inf_initial = lm.grad_inf_initial;
  fit.grad_inf_final = lm.grad_inf_final;
  fit.areas.resize(k);
  fit.area_errs.resize(k);
  fit.area_cov.assign(k, std::vector<double>(k, 0.0));
  for (std::size_t pk = 0; pk < k; ++pk) fit.areas[pk] = std::exp(lm.theta[pk]);
  bool cov_ok = !lm.covariance.empty() && std::isfinite(lm.covariance[0][0]);
  for (std::size_t a = 0; a < k; ++a) {
    for (std::size_t b = 0; b < k; ++b)
      fit.area_cov[a][b] =
          cov_ok ? fit.areas[a] * fit.areas[b] * lm.covariance[a][b] : std::nan("");
    fit.area_errs[a] = cov_ok && fit.area_cov[a][a] >= 0.0 ? std::sqrt(fit.area_cov[a][a])
                                                           : std::nan("");
  }
  if (i_tau >= 0) {
    std::size_t it = static_cast<std::size_t>(i_tau);
    fit.tau_ps.value = std::exp(lm.theta[it]);
    fit.tau_ps.err = cov_ok ? fit.tau_ps.value * std::sqrt(std::max(lm.covariance[it][it], 0.0))
                            : std::nan("");
  } else {
    fit.tau_ps = {model.tau_ps, 0.0};
  }
  if (i_sigma >= 0) {
    std::size_t is = static_cast<std::size_t>(i_sigma);
    fit.sigma_ps.value = std::exp(lm.theta[is]);
    fit.sigma_ps.err =
        cov_ok ? fit.sigma_ps.value * std::sqrt(std::max(lm.covariance[is][is], 0.0))
               : std::nan("");
  } else {
    fit.sigma_ps = {model.sigma_ps, 0.0};
  }
  return fit;
}

PeakTrainFit fit_peak_train(const Histogram& hist, const PeakModel& model,
                            double window_lo_ps, double window_hi_ps) {
  std::vector<double> centers, counts;
  for (std::size_t i = 0; i < hist.n_bins(); ++i) {
    double c = hist.bin_center(i);
    if (c < window_lo_ps || c > window_hi_ps) continue;
    centers.push_back(c);
    counts.push_back(static_cast<double>(hist.counts[i]));
  }
  return fit_peak_train(centers, counts, static_cast<double>(hist.bin_width_ps), model);
}

// ---------------------------------------------------------------------------
// Decay fit

DecayFit fit_decay(const std::vector<double>& bin_centers, const std::vector<double>& counts,
                   double bin_width_ps, DecayShape shape, double irf_sigma_ps) {
  if (irf_sigma_ps <= 0.0) throw std::invalid_argument("fit_decay: IRF sigma must be positive");
  if (bin_centers.size() != counts.size())
    throw std::invalid_argument("fit_decay: centers/counts size mismatch");
  const std::size_t n = counts.size();
  const std::vector<double>& t = bin_centers;
  std::vector<double> y(n), w(n);
  double total = 0.0, mean_t = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    y[i] = counts[i];
    w[i] = 1.0 / std::max(y[i], 1.0);
    total += y[i];
    mean_t += y[i] * t[i];
  }
  if (total <= 0.0) throw std::invalid_argument("fit_decay: empty histogram");
  mean_t /= total;
  double bw = bin_width_ps;

  // Mean of the one-sided EMG is t0 + tau; seed with t0 = 0.
  double tau_seed = std::max(mean_t, bw);
  bool bi = shape == DecayShape::kBiExp;

  // Parameters: t0, log A, log T1 [, log Ts, logit fs].
  std::size_t p = bi ? 5 : 3;
  std::vector<double> theta0(p);
  theta0[0] = 0.0;
  theta0[1] = std::log(std::max(total * bw, 1e-6));
  theta0[2] = std::log(tau_seed);
  if (bi) {
    theta0[2] = std::log(tau_seed * 0.8);
    theta0[3] = std::log(tau_seed * 3.0);
    theta0[4] = std::log(0.1 / 0.9);  // fs = 0.1
  }

  auto eval = [&](const std::vector<double>& th, std::vector<double>& m,
                  std::vector<double>& jac) {
    m.assign(n, 0.0);
    jac.assign(n * p, 0.0);
    double t0 = th[0];
    double area = std::exp(th[1]);
    double t1 = std::exp(th[2]);
    double ts = bi ? std::exp(th[3]) : 0.0;
    double fs = bi ? 1.0 / (1.0 + std::exp(-th[4])) : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      EmgDerivs d1 = emg_decay_derivs(t[i], t0, area, t1, irf_sigma_ps);
      if (!bi) {
        m[i] = d1.f * bw;
        jac[i * p + 0] = d1.d_t0 * bw;
        jac[i * p + 1] = d1.d_area * area * bw;
        jac[i * p + 2] = d1.d_tau * t1 * bw;
      } else {
        EmgDerivs d2 = emg_decay_derivs(t[i], t0, area, ts, irf_sigma_ps);
        m[i] = ((1.0 - fs) * d1.f + fs * d2.f) * bw;
        jac[i * p + 0] = ((1.0 - fs) * d1.d_t0 + fs * d2.d_t0) * bw;
        jac[i * p + 1] = ((1.0 - fs) * d1.d_area + fs * d2.d_area) * area * bw;
        jac[i * p + 2] = (1.0 - fs) * d1.d_tau * t1 * bw;
        jac[i * p + 3] = fs * d2.d_tau * ts * bw;
        jac[i * p + 4] = (d2.f - d1.f) * fs * (1.0 - fs) * bw;
      }
    }
  };

  LevMarResult lm = lev_mar(y, w, theta0, eval);
  DecayFit fit;
  fit.chi_square = lm.chi_square;
  fit.iterations = lm.iterations;
  fit.converged = lm.converged && !lm.singular;
  bool cov_ok = !lm.covariance.empty() && std::isfinite(lm.covariance[0][0]);
  auto err_of = [&](std::size_t i, double scale) {
    return cov_ok ? scale * std::sqrt(std::max(lm.covariance[i][i], 0.0)) : std::nan("");
  };
  fit.t0_ps = {lm.theta[0], err_of(0, 1.0)};
  fit.area = {std::exp(lm.theta[1]), err_of(1, std::exp(lm.theta[1]))};
  fit.t1_ps = {std::exp(lm.theta[2]), err_of(2, std::exp(lm.theta[2]))};
  if (bi) {
    double fs = 1.0 / (1.0 + std::exp(-lm.theta[4]));
    fit.t_slow_ps = {std::exp(lm.theta[3]), err_of(3, std::exp(lm.theta[3]))};
    fit.f_slow = {fs, err_of(4, fs * (1.0 - fs))};
    fit.f_slow_consistent_with_zero = fit.f_slow.value <= 2.0 * fit.f_slow.err;
    // Keep T1 as the fast component.
    if (fit.t_slow_ps.value < fit.t1_ps.value) {
      std::swap(fit.t1_ps, fit.t_slow_ps);
      fit.f_slow.value = 1.0 - fit.f_slow.value;
    }
  }
  return fit;
}

DecayFit fit_decay(const Histogram& hist, DecayShape shape, double irf_sigma_ps) {
  std::vector<double> centers(hist.n_bins()), counts(hist.n_bins());
  for (std::size_t i = 0; i < hist.n_bins(); ++i) {
    centers[i] = hist.bin_center(i);
    counts[i] = static_cast<double>(hist.counts[i]);
  }
  return fit_decay(centers, counts, static_cast<double>(hist.bin_width_ps), shape,
                   irf_sigma_ps);
}

// ---------------------------------------------------------------------------
// Extractors and calculators

Extraction extract_g2(const PeakTrainFit& fit, std::size_t central_index,
                      const std::vector<std::size_t>& side_indices) {
  Extraction ex;
  if (side_indices.size() < 2) {
    ex.error = "extract_g2: need at least two side peaks";
    return ex;
  }
  double mean_side = 0.0;
  for (auto i : side_indices) mean_side += fit.areas[i];
  mean_side /= static_cast<double>(side_indices.size());
  if (!(mean_side > 0.0)) {
    ex.error = "extract_g2: side-peak area is zero";
    return ex;
  }
  double a0 = fit.areas[central_index];
  double g = a0 / mean_side;

  // Gradient of g over the involved areas, contracted with the covariance.
  double kk = static_cast<double>(side_indices.size());
  std::vector<std::pair<std::size_t, double>> grad;
  grad.emplace_back(central_index, 1.0 / mean_side);
  for (auto i : side_indices) grad.emplace_back(i, -a0 / (kk * mean_side * mean_side));
  double var = 0.0;
  for (const auto& [ia, ga] : grad)
    for (const auto& [ib, gb] : grad) var += ga * gb * fit.area_cov[ia][ib];
  ex.value = {g, var > 0.0 ? std::sqrt(var) : 0.0};
  return ex;
}

Extraction extract_visibility(const ValueWithError& a_parallel,
                              const ValueWithError& a_orthogonal) {
  Extraction ex;
  if (!(a_orthogonal.value > 0.0)) {
    ex.error = "extract_visibility: orthogonal central area is zero";
    return ex;
  }
  double nu = 1.0 - a_parallel.value / a_orthogonal.value;
  double var = std::pow(a_parallel.err / a_orthogonal.value, 2) +
               std::pow(a_parallel.value * a_orthogonal.err /
                            (a_orthogonal.value * a_orthogonal.value),
                        2);
  ex.value = {nu, std::sqrt(var)};
  return ex;
}

CorrectedVisibility correct_visibility(const ValueWithError& nu_raw, double r_reflect,
                                       double t_transmit, double one_minus_eps,
                                       const ValueWithError& g_star) {
  if (std::abs(r_reflect + t_transmit - 1.0) > 1e-9)
    throw std::invalid_argument("correct_visibility: R + T must equal 1");
  if (!(r_reflect > 0.0) || !(t_transmit > 0.0))
    throw std::invalid_argument("correct_visibility: R*T must be positive");
  if (!(one_minus_eps > 0.0 && one_minus_eps <= 1.0))
    throw std::invalid_argument("correct_visibility: contrast must be in (0, 1]");
  if (!(g_star.value >= 0.0 && g_star.value < 1.0))
    throw std::invalid_argument("correct_visibility: g* must be in [0, 1)");

  double c0 = r_reflect * r_reflect + t_transmit * t_transmit;
  double apparatus =
      c0 / (2.0 * r_reflect * t_transmit * one_minus_eps * one_minus_eps);
  CorrectedVisibility out;
  out.kappa = 0.5 * nu_raw.value;
  double nu = (nu_raw.value + 2.0 * g_star.value * out.kappa) * apparatus;
  double d_nuraw = (1.0 + g_star.value) * apparatus;
  double d_g = nu_raw.value * apparatus;
  out.nu_corr = {nu, std::sqrt(std::pow(d_nuraw * nu_raw.err, 2) +
                               std::pow(d_g * g_star.err, 2))};
  out.formula =
      "nu_corr = (nu_raw + 2*g_star*kappa) * (R^2+T^2) / (2*R*T*(1-eps)^2), "
      "kappa = nu_raw/2";
  return out;
}

Purcell purcell_from_lifetimes(const ValueWithError& t_on_ps, const ValueWithError& t_off_ps) {
  if (!(t_on_ps.value > 0.0) || !(t_off_ps.value > 0.0))
    throw std::invalid_argument("purcell_from_lifetimes: lifetimes must be positive");
  Purcell p;
  p.swapped_lifetimes = t_on_ps.value > t_off_ps.value;
  double f = t_off_ps.value / t_on_ps.value - 1.0;
  double d_on = t_off_ps.value / (t_on_ps.value * t_on_ps.value) * t_on_ps.err;
  double d_off = t_off_ps.err / t_on_ps.value;
  p.f_p = {f, std::sqrt(d_on * d_on + d_off * d_off)};
  return p;
}

double purcell_theoretical_max(const CavityParams& cavity) {
  double lon = cavity.wavelength_um / cavity.refractive_index;
  double pi2 = 9.869604401089358;  // pi^2
  return 3.0 * cavity.quality_factor * lon * lon * lon /
         (4.0 * pi2 * cavity.mode_volume_um3());
}

Efficiency device_efficiency(double count_rate_hz, double rep_rate_hz,
                             const ValueWithError& eta_setup) {
  if (!(count_rate_hz >= 0.0) || !(rep_rate_hz > 0.0) || !(eta_setup.value > 0.0))
    throw std::invalid_argument("device_efficiency: rates and eta_setup must be positive");
  Efficiency e;
  double eta = count_rate_hz / (rep_rate_hz * eta_setup.value);
  e.eta = {eta, eta * eta_setup.err / eta_setup.value};
  e.inconsistent = eta > 1.0;
  return e;
}

}  // namespace spsim::fitkit
