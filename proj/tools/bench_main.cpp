// Timing comparison of the serial reference kernels against the OpenMP ones.
#include <chrono>
#include <cstdio>
#include <string>

#include "spsim/correlate.hpp"
#include "spsim/dynamics.hpp"
#include "spsim/optics.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(const char* name, double t_serial, double t_parallel) {
  std::printf("%-14s serial %8.3f s   parallel %8.3f s   speedup %5.2fx\n", name, t_serial,
              t_parallel, t_parallel > 0.0 ? t_serial / t_parallel : 0.0);
}

}  // namespace

int main(int argc, char** argv) {
  std::int64_t periods = argc > 1 ? std::stoll(argv[1]) : 2000000;
#ifdef _OPENMP
  std::printf("threads: %d, periods: %lld\n", omp_get_max_threads(),
              static_cast<long long>(periods));
#else
  std::printf("built without OpenMP, periods: %lld\n", static_cast<long long>(periods));
#endif

  spsim::EmitterDevice device;
  device.eta = 0.74;
  device.p_mp = 0.0034357;
  device.nu0 = 0.89;
  device.beta_per_rad2 = 0.0162114;
  spsim::CavityParams cavity;
  spsim::BenchConfig bench;
  spsim::dynamics::PulseTrain train{3.141592653589793, periods, true};

  auto t0 = Clock::now();
  auto photons_s = spsim::dynamics::emit_serial(device, cavity, bench, train, 7);
  double emit_serial = seconds_since(t0);
  t0 = Clock::now();
  auto photons = spsim::dynamics::emit(device, cavity, bench, train, 7);
  double emit_par = seconds_since(t0);
  report("emit", emit_serial, emit_par);
  std::printf("  photons: %zu (streams identical: %s)\n", photons.size(),
              photons == photons_s ? "yes" : "NO");

  t0 = Clock::now();
  auto clicks_s = spsim::optics::hom_bench_serial(photons, bench, 7, periods);
  double hom_serial = seconds_since(t0);
  t0 = Clock::now();
  auto clicks = spsim::optics::hom_bench(photons, bench, 7, periods);
  double hom_par = seconds_since(t0);
  report("hom_bench", hom_serial, hom_par);
  std::printf("  clicks: %zu (streams identical: %s)\n", clicks.size(),
              clicks == clicks_s ? "yes" : "NO");

  std::int64_t max_delay = 64 * ((6 * 12196) / 64);
  t0 = Clock::now();
  auto hist_s = spsim::correlate::correlate_serial(clicks, 64, max_delay);
  double corr_serial = seconds_since(t0);
  t0 = Clock::now();
  auto hist = spsim::correlate::correlate(clicks, 64, max_delay);
  double corr_par = seconds_since(t0);
  report("correlate", corr_serial, corr_par);
  std::printf("  coincidences: %lld (histograms identical: %s)\n",
              static_cast<long long>(hist.total_coincidences),
              hist == hist_s ? "yes" : "NO");
  return 0;
}
