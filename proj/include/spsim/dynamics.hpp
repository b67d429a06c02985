#pragma once

#include <cstdint>
#include <vector>

#include "spsim/model.hpp"

namespace spsim::dynamics {

struct PulseTrain {
  double pulse_area_rad = 3.141592653589793;  // pi = full inversion
  std::int64_t n_periods = 1;
  bool pair_mode = false;
};

// Rabi oscillation of a resonantly driven two-level system: sin^2(theta/2).
double excitation_probability(double pulse_area_rad);

// Lifetime versus detuning: rates interpolate with a Lorentzian weight of
// width gamma_C, so T(0) = T_on and T(inf) = T_off.
double effective_lifetime_ps(const EmitterDevice& device, const CavityParams& cavity,
                             double detuning_mev);

// Power-dependent wavepacket overlap, max(0, nu0 - beta * theta^2).
double indistinguishability(const EmitterDevice& device, double pulse_area_rad);

// Emits photons for periods [period_begin, period_end); appends to `out`.
// Deterministic per period given (seed), independent of the sharding.
void emit_range(const EmitterDevice& device, const CavityParams& cavity,
                const BenchConfig& bench, const PulseTrain& train, std::uint64_t seed,
                std::int64_t period_begin, std::int64_t period_end,
                std::vector<PhotonRecord>& out);

// Full streams. The parallel version shards periods over OpenMP threads and
// produces bit-identical output for every thread count.
std::vector<PhotonRecord> emit_serial(const EmitterDevice& device,
                                      const CavityParams& cavity,
                                      const BenchConfig& bench, const PulseTrain& train,
                                      std::uint64_t seed);
std::vector<PhotonRecord> emit(const EmitterDevice& device, const CavityParams& cavity,
                               const BenchConfig& bench, const PulseTrain& train,
                               std::uint64_t seed);

}  // namespace spsim::dynamics
