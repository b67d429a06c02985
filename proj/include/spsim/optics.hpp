#pragma once

#include <cstdint>
#include <vector>

#include "spsim/model.hpp"

namespace spsim::optics {

struct BenchStats {
  std::int64_t n_input = 0;
  std::int64_t n_survived = 0;
  std::int64_t n_clicks = 0;  // after dark counts and dead time
};

// Hanbury Brown-Twiss: setup thinning, 50/50 routing, detector jitter.
// Returns clicks sorted by time. Deterministic given seed, for any thread count.
std::vector<ClickRecord> hbt_bench(const std::vector<PhotonRecord>& photons,
                                   const BenchConfig& bench, std::uint64_t seed,
                                   std::int64_t n_periods = 0,
                                   BenchStats* stats = nullptr);
std::vector<ClickRecord> hbt_bench_serial(const std::vector<PhotonRecord>& photons,
                                          const BenchConfig& bench, std::uint64_t seed,
                                          std::int64_t n_periods = 0,
                                          BenchStats* stats = nullptr);

// Unbalanced Mach-Zehnder whose long arm compensates the pulse-pair delay.
// Photons pick an arm 50/50; two photons meeting at opposite input ports of
// the second splitter within the coalescence window follow the two-photon
// coincidence rule R^2+T^2 - 2RT(1-eps)^2*nu; everything else routes
// independently (port A -> D1 with T, port B -> D1 with R).
std::vector<ClickRecord> hom_bench(const std::vector<PhotonRecord>& photons,
                                   const BenchConfig& bench, std::uint64_t seed,
                                   std::int64_t n_periods = 0,
                                   BenchStats* stats = nullptr);
std::vector<ClickRecord> hom_bench_serial(const std::vector<PhotonRecord>& photons,
                                          const BenchConfig& bench, std::uint64_t seed,
                                          std::int64_t n_periods = 0,
                                          BenchStats* stats = nullptr);

// Time-resolved decay measurement: one detector, its own instrument response.
std::vector<ClickRecord> decay_bench(const std::vector<PhotonRecord>& photons,
                                     const BenchConfig& bench, double irf_sigma_ps,
                                     std::uint64_t seed, std::int64_t n_periods = 0,
                                     BenchStats* stats = nullptr);

}  // namespace spsim::optics
