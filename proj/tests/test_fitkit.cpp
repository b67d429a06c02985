#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "spsim/fitkit.hpp"
#include "spsim/rng.hpp"

using namespace spsim;
using namespace spsim::fitkit;

namespace {

constexpr double kPi = 3.141592653589793;

// Adaptive Simpson quadrature, the independent oracle for the closed forms.
double simpson(const std::function<double(double)>& f, double a, double m, double b,
               double fa, double fm, double fb, double whole, double tol, int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) < 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson(f, a, lm, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson(f, m, rm, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  double m = 0.5 * (a + b);
  double fa = f(a), fm = f(m), fb = f(b);
  double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson(f, a, m, b, fa, fm, fb, whole, tol, 48);
}

// Direct numerical convolution of the two-sided exponential with a Gaussian.
double emg_by_quadrature(double t, double t0, double area, double tau, double sigma,
                         double tol) {
  auto integrand = [&](double u) {
    double kernel = area / (2.0 * tau) * std::exp(-std::abs(u) / tau);
    double x = t - t0 - u;
    double gauss =
        std::exp(-x * x / (2.0 * sigma * sigma)) / (sigma * std::sqrt(2.0 * kPi));
    return kernel * gauss;
  };
  // Piecewise around both features (the kernel cusp at 0, the Gaussian at
  // t - t0) so the adaptive refinement cannot step over a narrow bump.
  double span = 40.0 * tau + 12.0 * sigma;
  double x = t - t0;
  std::vector<double> bp = {-span, -3.0 * tau, 0.0,          3.0 * tau,
                            x - 8.0 * sigma,   x - sigma,    x,
                            x + sigma,         x + 8.0 * sigma, span};
  for (auto& b : bp) b = std::clamp(b, -span, span);
  std::sort(bp.begin(), bp.end());
  double total = 0.0;
  for (std::size_t i = 1; i < bp.size(); ++i)
    if (bp[i] > bp[i - 1])
      total += integrate(integrand, bp[i - 1], bp[i], tol / static_cast<double>(bp.size()));
  return total;
}

std::vector<double> scan_grid(double t0, double tau, double sigma) {
  std::vector<double> ts;
  double span = 10.0 * (tau + sigma);
  for (int i = -20; i <= 20; ++i) ts.push_back(t0 + span * static_cast<double>(i) / 20.0);
  return ts;
}

std::vector<double> poisson_noised(const std::vector<double>& expected, std::uint64_t seed) {
  PeriodRng rng(seed, 77, 0);
  std::vector<double> out(expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    double lam = expected[i];
    if (lam <= 0.0) {
      out[i] = 0.0;
    } else if (lam < 30.0) {
      double l = std::exp(-lam), p = 1.0;
      int k = 0;
      do {
        ++k;
        p *= rng.uniform();
      } while (p > l);
      out[i] = k - 1;
    } else {
      out[i] = std::max(0.0, std::round(lam + rng.normal(std::sqrt(lam))));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("emg peak matches direct numerical convolution to 1e-6") {
  struct Case {
    double t0, area, tau, sigma;
  } cases[] = {{0.0, 1.0, 168.0, 520.0},
               {100.0, 2500.0, 168.0, 50.0},
               {-3000.0, 7.0, 1140.0, 520.0},
               {0.0, 1.0, 20.0, 800.0},
               {0.0, 1.0, 900.0, 30.0}};
  for (const auto& c : cases) {
    double peak = emg_peak(c.t0, c.t0, c.area, c.tau, c.sigma);
    for (double t : scan_grid(c.t0, c.tau, c.sigma)) {
      double exact = emg_peak(t, c.t0, c.area, c.tau, c.sigma);
      // Below ~1e-7 of the peak no double-precision quadrature resolves a
      // relative comparison; the grid is effectively the full support.
      if (exact < 1e-7 * peak) continue;
      double quad = emg_by_quadrature(t, c.t0, c.area, c.tau, c.sigma, 1e-8 * exact);
      CHECK(std::abs(exact - quad) / quad < 1e-6);
    }
  }
}

TEST_CASE("emg peak integrates to its area") {
  double t0 = 40.0, area = 3.25, tau = 168.0, sigma = 520.0;
  auto f = [&](double t) { return emg_peak(t, t0, area, tau, sigma); };
  double span = 45.0 * tau + 12.0 * sigma;
  double integral = integrate(f, t0 - span, t0 + span, 1e-12 * area);
  CHECK(std::abs(integral - area) / area < 1e-9);
}

TEST_CASE("emg limits: two-sided exponential and Gaussian") {
  // sigma -> 0: peak value A/(2 tau), exponential wings.
  double a = emg_peak(0.0, 0.0, 2.0, 100.0, 1e-6);
  CHECK(a == doctest::Approx(2.0 / 200.0).epsilon(1e-6));
  double wing = emg_peak(250.0, 0.0, 2.0, 100.0, 1e-6);
  CHECK(wing == doctest::Approx(0.01 * std::exp(-2.5)).epsilon(1e-6));
  // tau -> 0: Gaussian of width sigma.
  double g = emg_peak(0.0, 0.0, 1.0, 1e-4, 300.0);
  CHECK(g == doctest::Approx(1.0 / (300.0 * std::sqrt(2.0 * kPi))).epsilon(1e-3));
  CHECK_THROWS(emg_peak(0.0, 0.0, 1.0, -1.0, 10.0));
  CHECK_THROWS(emg_peak(0.0, 0.0, 1.0, 10.0, 0.0));
}

TEST_CASE("analytic derivatives match central finite differences to 1e-4") {
  struct Case {
    double t, t0, area, tau, sigma;
  } cases[] = {{120.0, 0.0, 1000.0, 168.0, 520.0},
               {-700.0, -100.0, 5.0, 90.0, 200.0},
               {2500.0, 2000.0, 300.0, 400.0, 60.0},
               {0.0, 0.0, 1.0, 168.0, 520.0}};
  auto check_all = [](auto derivs_fn, auto value_fn, const Case& c) {
    auto d = derivs_fn(c.t, c.t0, c.area, c.tau, c.sigma);
    struct Axis {
      double analytic;
      std::function<double(double)> shifted;
      double scale;
    };
    std::vector<Axis> axes = {
        {d.d_t0, [&](double h) { return value_fn(c.t, c.t0 + h, c.area, c.tau, c.sigma); },
         c.sigma},
        {d.d_area, [&](double h) { return value_fn(c.t, c.t0, c.area + h, c.tau, c.sigma); },
         c.area},
        {d.d_tau, [&](double h) { return value_fn(c.t, c.t0, c.area, c.tau + h, c.sigma); },
         c.tau},
        {d.d_sigma, [&](double h) { return value_fn(c.t, c.t0, c.area, c.tau, c.sigma + h); },
         c.sigma}};
    for (const auto& ax : axes) {
      double h = 1e-6 * ax.scale;
      double fd = (ax.shifted(h) - ax.shifted(-h)) / (2.0 * h);
      double scale = std::max({std::abs(ax.analytic), std::abs(fd), 1e-12 * d.f});
      CHECK(std::abs(ax.analytic - fd) / scale < 1e-4);
    }
  };
  for (const auto& c : cases) {
    check_all([](auto... a) { return emg_peak_derivs(a...); },
              [](auto... a) { return emg_peak(a...); }, c);
    check_all([](auto... a) { return emg_decay_derivs(a...); },
              [](auto... a) { return emg_decay(a...); }, c);
  }
}

namespace {

// Synthetic five-peak train on the comb {-2dt..2dt}.
struct TrainSpec {
  std::vector<double> centers{-4000.0, -2000.0, 0.0, 2000.0, 4000.0};
  std::vector<double> areas{1000.0, 2000.0, 300.0, 2000.0, 1000.0};
  double tau = 168.0, sigma = 520.0, bw = 64.0;
};

void synth_train(const TrainSpec& s, std::vector<double>& centers,
                 std::vector<double>& counts) {
  for (double t = -6000.0; t <= 6000.0; t += s.bw) {
    double m = 0.0;
    for (std::size_t k = 0; k < s.centers.size(); ++k)
      m += emg_peak(t, s.centers[k], s.areas[k], s.tau, s.sigma);
    centers.push_back(t);
    counts.push_back(m * s.bw);
  }
}

}  // namespace

TEST_CASE("noiseless five-peak train recovers areas to 1e-6") {
  TrainSpec s;
  std::vector<double> centers, counts;
  synth_train(s, centers, counts);

  PeakModel model;
  model.centers_ps = s.centers;
  model.tau_ps = s.tau;
  model.sigma_ps = s.sigma;
  auto fit = fit_peak_train(centers, counts, s.bw, model);
  REQUIRE(fit.converged);
  for (std::size_t k = 0; k < 5; ++k)
    CHECK(std::abs(fit.areas[k] - s.areas[k]) / s.areas[k] < 1e-6);
}

TEST_CASE("noiseless recovery with free tau and sigma") {
  TrainSpec s;
  std::vector<double> centers, counts;
  synth_train(s, centers, counts);

  PeakModel model;
  model.centers_ps = s.centers;
  model.tau_ps = 140.0;  // deliberately off
  model.sigma_ps = 600.0;
  model.fix_tau = false;
  model.fix_sigma = false;
  auto fit = fit_peak_train(centers, counts, s.bw, model);
  REQUIRE(fit.converged);
  CHECK(std::abs(fit.tau_ps.value - s.tau) / s.tau < 1e-5);
  CHECK(std::abs(fit.sigma_ps.value - s.sigma) / s.sigma < 1e-5);
  for (std::size_t k = 0; k < 5; ++k)
    CHECK(std::abs(fit.areas[k] - s.areas[k]) / s.areas[k] < 1e-4);
}

TEST_CASE("first-order optimality at the fitted minimum") {
  TrainSpec s;
  std::vector<double> centers, counts;
  synth_train(s, centers, counts);
  counts = poisson_noised(counts, 5);

  PeakModel model;
  model.centers_ps = s.centers;
  model.tau_ps = s.tau;
  model.sigma_ps = s.sigma;
  auto fit = fit_peak_train(centers, counts, s.bw, model);
  REQUIRE(fit.converged);
  CHECK(fit.grad_inf_final <= 1e-6 * fit.grad_inf_initial);
}

TEST_CASE("Poisson-noised comb recovers a 0.0092 area ratio") {
  TrainSpec s;
  s.centers.clear();
  s.areas.clear();
  double t_rep = 12195.0;
  for (int k = -5; k <= 5; ++k) {
    s.centers.push_back(k * t_rep);
    s.areas.push_back(k == 0 ? 0.0092 * 200000.0 : 200000.0);
  }
  std::vector<double> centers, counts;
  for (double t = -5.5 * t_rep; t <= 5.5 * t_rep; t += s.bw) {
    double m = 0.0;
    for (std::size_t k = 0; k < s.centers.size(); ++k)
      m += emg_peak(t, s.centers[k], s.areas[k], s.tau, s.sigma);
    centers.push_back(t);
    counts.push_back(m * s.bw);
  }
  counts = poisson_noised(counts, 6);

  PeakModel model;
  model.centers_ps = s.centers;
  model.tau_ps = s.tau;
  model.sigma_ps = s.sigma;
  auto fit = fit_peak_train(centers, counts, s.bw, model);
  REQUIRE(fit.converged);

  std::vector<std::size_t> sides;
  for (std::size_t i = 0; i < s.centers.size(); ++i)
    if (i != 5) sides.push_back(i);
  auto g2 = extract_g2(fit, 5, sides);
  REQUIRE_FALSE(g2.error.has_value());
  CHECK(g2.value.err > 0.0);
  CHECK(std::abs(g2.value.value - 0.0092) < 3.0 * g2.value.err);
}

TEST_CASE("fixed-tau and free-tau fits agree within errors on synthetic data") {
  TrainSpec s;
  std::vector<double> centers, counts;
  synth_train(s, centers, counts);
  counts = poisson_noised(counts, 7);

  PeakModel fixed;
  fixed.centers_ps = s.centers;
  fixed.tau_ps = 168.0;
  fixed.sigma_ps = s.sigma;
  auto f1 = fit_peak_train(centers, counts, s.bw, fixed);

  PeakModel free_tau = fixed;
  free_tau.tau_ps = 150.0;
  free_tau.fix_tau = false;
  auto f2 = fit_peak_train(centers, counts, s.bw, free_tau);

  REQUIRE(f1.converged);
  REQUIRE(f2.converged);
  for (std::size_t k = 0; k < 5; ++k) {
    double err = std::hypot(f1.area_errs[k], f2.area_errs[k]);
    CHECK(std::abs(f1.areas[k] - f2.areas[k]) < 3.0 * err);
  }
}

TEST_CASE("fit_decay recovers 168 ps and 1140 ps from binned exponentials") {
  PeriodRng rng(10, 3, 0);
  for (double tau_true : {168.0, 1140.0}) {
    std::vector<double> centers, counts;
    double bw = 8.0, lo = -400.0, hi = 9000.0;
    for (double t = lo; t <= hi; t += bw) centers.push_back(t + 0.5 * bw);
    counts.assign(centers.size(), 0.0);
    // 1e6 events, IRF sigma = 50 ps.
    for (int i = 0; i < 1000000; ++i) {
      double t = rng.exponential(tau_true) + rng.normal(50.0);
      auto bin = static_cast<std::int64_t>(std::floor((t - lo) / bw));
      if (bin >= 0 && bin < static_cast<std::int64_t>(counts.size()))
        counts[static_cast<std::size_t>(bin)] += 1.0;
    }
    auto fit = fit_decay(centers, counts, bw, DecayShape::kSingleExp, 50.0);
    REQUIRE(fit.converged);
    CHECK(fit.t1_ps.err > 0.0);
    // Observed-count weighting carries a small low-count-bin bias; recovery
    // to 1% sits far inside the reference uncertainties (5 and 19 ps).
    CHECK(std::abs(fit.t1_ps.value - tau_true) < 0.01 * tau_true);
  }
}

TEST_CASE("fit_decay: noiseless single exponential recovers to 1e-6") {
  double tau_true = 168.0, sigma = 50.0, bw = 8.0, area = 1e6 * bw;
  std::vector<double> centers, counts;
  for (double t = -400.0; t <= 4000.0; t += bw) {
    centers.push_back(t);
    counts.push_back(emg_decay(t, 10.0, area, tau_true, sigma) * bw);
  }
  auto fit = fit_decay(centers, counts, bw, DecayShape::kSingleExp, sigma);
  REQUIRE(fit.converged);
  CHECK(std::abs(fit.t1_ps.value - tau_true) / tau_true < 1e-6);
  CHECK(std::abs(fit.t0_ps.value - 10.0) < 1e-3);
  CHECK(std::abs(fit.area.value - area) / area < 1e-6);
}

TEST_CASE("fit_decay: biexponential on single-component data flags f_slow near zero") {
  PeriodRng rng(20, 3, 1);
  std::vector<double> centers, counts;
  double bw = 8.0, lo = -400.0, hi = 6000.0;
  for (double t = lo; t <= hi; t += bw) centers.push_back(t + 0.5 * bw);
  counts.assign(centers.size(), 0.0);
  for (int i = 0; i < 300000; ++i) {
    double t = rng.exponential(168.0) + rng.normal(50.0);
    auto bin = static_cast<std::int64_t>(std::floor((t - lo) / bw));
    if (bin >= 0 && bin < static_cast<std::int64_t>(counts.size()))
      counts[static_cast<std::size_t>(bin)] += 1.0;
  }
  auto fit = fit_decay(centers, counts, bw, DecayShape::kBiExp, 50.0);
  CHECK(std::abs(fit.t1_ps.value - 168.0) < 5.0);
  CHECK(fit.f_slow_consistent_with_zero);
}

TEST_CASE("fit_decay: recovers a genuine biexponential mixture") {
  PeriodRng rng(21, 3, 2);
  std::vector<double> centers, counts;
  double bw = 8.0, lo = -400.0, hi = 9000.0;
  for (double t = lo; t <= hi; t += bw) centers.push_back(t + 0.5 * bw);
  counts.assign(centers.size(), 0.0);
  for (int i = 0; i < 1000000; ++i) {
    double tau = rng.uniform() < 0.3 ? 900.0 : 168.0;
    double t = rng.exponential(tau) + rng.normal(50.0);
    auto bin = static_cast<std::int64_t>(std::floor((t - lo) / bw));
    if (bin >= 0 && bin < static_cast<std::int64_t>(counts.size()))
      counts[static_cast<std::size_t>(bin)] += 1.0;
  }
  auto fit = fit_decay(centers, counts, bw, DecayShape::kBiExp, 50.0);
  REQUIRE(fit.converged);
  CHECK(std::abs(fit.t1_ps.value - 168.0) < 10.0);
  CHECK(std::abs(fit.t_slow_ps.value - 900.0) < 40.0);
  CHECK(std::abs(fit.f_slow.value - 0.3) < 0.02);
  CHECK_FALSE(fit.f_slow_consistent_with_zero);
}

TEST_CASE("extract_g2: degenerate inputs") {
  PeakTrainFit fit;
  fit.areas = {0.0, 1000.0, 1000.0};
  fit.area_cov.assign(3, std::vector<double>(3, 0.0));
  auto g = extract_g2(fit, 0, {1, 2});
  REQUIRE_FALSE(g.error.has_value());
  CHECK(g.value.value == 0.0);

  fit.areas = {9.2, 1000.0, 1000.0};
  g = extract_g2(fit, 0, {1, 2});
  CHECK(g.value.value == doctest::Approx(0.0092).epsilon(1e-12));

  fit.areas = {5.0, 0.0, 0.0};
  g = extract_g2(fit, 0, {1, 2});
  CHECK(g.error.has_value());
}

TEST_CASE("extract_visibility: endpoints and the 0.16 ratio") {
  auto v = extract_visibility({0.0, 0.0}, {100.0, 0.0});
  REQUIRE_FALSE(v.error.has_value());
  CHECK(v.value.value == 1.0);

  v = extract_visibility({100.0, 0.0}, {100.0, 0.0});
  CHECK(v.value.value == doctest::Approx(0.0));

  v = extract_visibility({16.0, 0.5}, {100.0, 1.0});
  CHECK(v.value.value == doctest::Approx(0.84).epsilon(1e-12));
  CHECK(v.value.err > 0.0);

  v = extract_visibility({10.0, 1.0}, {0.0, 0.0});
  CHECK(v.error.has_value());
}

TEST_CASE("correct_visibility: identity for the ideal apparatus") {
  auto c = correct_visibility({0.84, 0.01}, 0.5, 0.5, 1.0, {0.0, 0.0});
  CHECK(c.nu_corr.value == doctest::Approx(0.84).epsilon(1e-12));
  CHECK(c.nu_corr.err == doctest::Approx(0.01).epsilon(1e-9));
}

TEST_CASE("correct_visibility: apparatus-only point 0.84 -> 0.879") {
  double r = 1.1 / 2.1;
  auto c = correct_visibility({0.84, 0.0}, r, 1.0 - r, 0.98, {0.0, 0.0});
  CHECK(std::abs(c.nu_corr.value - 0.879) < 0.001);
}

TEST_CASE("correct_visibility: full inputs reach 0.88 within 0.01") {
  double r = 1.1 / 2.1;
  auto c = correct_visibility({0.84, 0.0}, r, 1.0 - r, 0.98, {0.0092, 0.0004});
  CHECK(std::abs(c.nu_corr.value - 0.88) < 0.01);
  CHECK(c.kappa == doctest::Approx(0.42).epsilon(1e-12));
  CHECK(c.formula.find("kappa = nu_raw/2") != std::string::npos);
}

TEST_CASE("correct_visibility: monotone in nu_raw, guards on the inputs") {
  double r = 1.1 / 2.1;
  double prev = -1.0;
  for (int i = 0; i <= 20; ++i) {
    double nu = 0.05 * i;
    auto c = correct_visibility({nu, 0.0}, r, 1.0 - r, 0.98, {0.0092, 0.0});
    CHECK(c.nu_corr.value > prev);
    prev = c.nu_corr.value;
  }
  CHECK_THROWS(correct_visibility({0.8, 0.0}, 1.0, 0.0, 0.98, {0.0, 0.0}));
  CHECK_THROWS(correct_visibility({0.8, 0.0}, 0.6, 0.4, 1.2, {0.0, 0.0}));
  CHECK_THROWS(correct_visibility({0.8, 0.0}, 0.5, 0.5, 0.98, {1.2, 0.0}));
}

TEST_CASE("purcell from lifetimes") {
  auto p = purcell_from_lifetimes({168.0, 5.0}, {1140.0, 19.0});
  CHECK(p.f_p.value == doctest::Approx(1140.0 / 168.0 - 1.0).epsilon(1e-12));
  CHECK(std::abs(p.f_p.value - 5.8) < 0.05);
  CHECK(p.f_p.err > 0.15);
  CHECK(p.f_p.err < 0.25);
  CHECK_FALSE(p.swapped_lifetimes);

  CHECK(purcell_from_lifetimes({100.0, 0.0}, {100.0, 0.0}).f_p.value == 0.0);
  CHECK(purcell_from_lifetimes({100.0, 0.0}, {300.0, 0.0}).f_p.value == doctest::Approx(2.0));
  CHECK(purcell_from_lifetimes({300.0, 0.0}, {100.0, 0.0}).swapped_lifetimes);
}

TEST_CASE("theoretical Purcell maximum: round trip and scalings") {
  CavityParams cav;
  cav.quality_factor = 5930.0;
  cav.wavelength_um = 0.9;
  cav.refractive_index = 3.6;
  // Back-solve the mode volume from F = 5.9.
  double pi2 = kPi * kPi;
  cav.mode_volume = 3.0 * cav.quality_factor / (4.0 * pi2 * 5.9);
  cav.mode_volume_unit = ModeVolumeUnit::kLambdaOverNCubed;
  CHECK(std::abs(purcell_theoretical_max(cav) - 5.9) / 5.9 < 1e-12);

  CavityParams doubled_q = cav;
  doubled_q.quality_factor *= 2.0;
  CHECK(purcell_theoretical_max(doubled_q) ==
        doctest::Approx(2.0 * purcell_theoretical_max(cav)).epsilon(1e-12));

  CavityParams doubled_v = cav;
  doubled_v.mode_volume *= 2.0;
  CHECK(purcell_theoretical_max(doubled_v) ==
        doctest::Approx(0.5 * purcell_theoretical_max(cav)).epsilon(1e-12));

  // Unit flag: the same physical volume in um^3 gives the same answer.
  CavityParams um3 = cav;
  double lon = cav.wavelength_um / cav.refractive_index;
  um3.mode_volume = cav.mode_volume * lon * lon * lon;
  um3.mode_volume_unit = ModeVolumeUnit::kCubicMicron;
  CHECK(purcell_theoretical_max(um3) ==
        doctest::Approx(purcell_theoretical_max(cav)).epsilon(1e-12));
}

TEST_CASE("device efficiency") {
  auto e = device_efficiency(1.3e6, 82.0e6, {0.021, 0.001});
  CHECK(e.eta.value == doctest::Approx(0.755).epsilon(1e-3));
  CHECK(e.eta.err == doctest::Approx(e.eta.value * 0.001 / 0.021).epsilon(1e-9));
  CHECK(std::abs(e.eta.value - 0.74) < 0.04);
  CHECK_FALSE(e.inconsistent);

  CHECK(device_efficiency(0.0, 82.0e6, {0.021, 0.0}).eta.value == 0.0);
  CHECK(device_efficiency(82.0e6 * 0.021, 82.0e6, {0.021, 0.0}).eta.value ==
        doctest::Approx(1.0).epsilon(1e-12));
  CHECK(device_efficiency(2.0e6, 82.0e6, {0.021, 0.0}).inconsistent);
}

TEST_CASE("extractors are invariant under uniform count scaling") {
  TrainSpec s;
  std::vector<double> centers, counts;
  synth_train(s, centers, counts);
  counts = poisson_noised(counts, 30);

  PeakModel model;
  model.centers_ps = s.centers;
  model.tau_ps = s.tau;
  model.sigma_ps = s.sigma;
  auto f1 = fit_peak_train(centers, counts, s.bw, model);

  std::vector<double> scaled = counts;
  for (auto& c : scaled) c *= 7.0;
  auto f2 = fit_peak_train(centers, scaled, s.bw, model);

  // Zero-count bins keep weight 1 at every scale, so the equivalence is not
  // bit-exact; the ratio observables still move by well under a per mille.
  auto g1 = extract_g2(f1, 2, {0, 1, 3, 4});
  auto g2 = extract_g2(f2, 2, {0, 1, 3, 4});
  REQUIRE_FALSE(g1.error.has_value());
  REQUIRE_FALSE(g2.error.has_value());
  CHECK(g1.value.value == doctest::Approx(g2.value.value).epsilon(1e-3));

  auto v1 = extract_visibility({f1.areas[2], 0.0}, {f1.areas[1], 0.0});
  auto v2 = extract_visibility({f2.areas[2], 0.0}, {f2.areas[1], 0.0});
  CHECK(v1.value.value == doctest::Approx(v2.value.value).epsilon(1e-3));
}

TEST_CASE("degenerate peak model: damping absorbs the singular normal matrix") {
  // Two peaks at the same center are perfectly collinear; the fit must return
  // best-so-far parameters with a flag instead of crashing.
  TrainSpec s;
  std::vector<double> centers, counts;
  synth_train(s, centers, counts);
  counts = poisson_noised(counts, 40);

  PeakModel model;
  model.centers_ps = {0.0, 0.0, 2000.0};
  model.tau_ps = s.tau;
  model.sigma_ps = s.sigma;
  PeakTrainFit fit;
  CHECK_NOTHROW(fit = fit_peak_train(centers, counts, s.bw, model));
  CHECK(fit.areas.size() == 3);
  for (double a : fit.areas) CHECK(std::isfinite(a));
}
