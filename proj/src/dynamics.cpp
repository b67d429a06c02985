#include "spsim/dynamics.hpp"

#include <cmath>
#include <stdexcept>

#include "spsim/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spsim::dynamics {

double excitation_probability(double pulse_area_rad) {
  if (pulse_area_rad < 0.0)
    throw std::invalid_argument("excitation_probability: pulse area must be >= 0");
  double s = std::sin(0.5 * pulse_area_rad);
  return s * s;
}

double effective_lifetime_ps(const EmitterDevice& device, const CavityParams& cavity,
                             double detuning_mev) {
  if (cavity.mode_linewidth_uev <= 0.0)
    throw std::invalid_argument("effective_lifetime: gamma_C must be positive");
  double gamma_mev = cavity.mode_linewidth_uev * 1.0e-3;
  double x = 2.0 * detuning_mev / gamma_mev;
  double lorentz = 1.0 / (1.0 + x * x);
  double rate_off = 1.0 / device.t_off_ps;
  double rate_on = 1.0 / device.t_on_ps;
  double rate = rate_off + (rate_on - rate_off) * lorentz;
  return 1.0 / rate;
}

double indistinguishability(const EmitterDevice& device, double pulse_area_rad) {
  if (pulse_area_rad < 0.0)
    throw std::invalid_argument("indistinguishability: pulse area must be >= 0");
  double nu = device.nu0 - device.beta_per_rad2 * pulse_area_rad * pulse_area_rad;
  return nu > 0.0 ? nu : 0.0;
}

namespace {

struct EmitContext {
  double p_primary;   // per slot
  double p_extra;     // per slot
  double t_eff_ps;
  double t_slow_ps;
  double f_slow;
  double nu_pair;
  int n_slots;
  Slot slots[2];
};

EmitContext make_context(const EmitterDevice& device, const CavityParams& cavity,
                         const PulseTrain& train) {
  double p_exc = excitation_probability(train.pulse_area_rad);
  EmitContext ctx;
  ctx.p_primary = p_exc * device.eta;
  ctx.p_extra = device.p_mp * p_exc;
  ctx.t_eff_ps = effective_lifetime_ps(device, cavity, device.detuning_mev);
  ctx.t_slow_ps = device.t_slow_ps;
  ctx.f_slow = device.f_slow;
  ctx.nu_pair = indistinguishability(device, train.pulse_area_rad);
  if (train.pair_mode) {
    ctx.n_slots = 2;
    ctx.slots[0] = Slot::kEarly;
    ctx.slots[1] = Slot::kLate;
  } else {
    ctx.n_slots = 1;
    ctx.slots[0] = Slot::kOnly;
  }
  return ctx;
}

void emit_period(const EmitContext& ctx, std::uint64_t seed, std::int64_t period,
                 std::vector<PhotonRecord>& out) {
  PeriodRng rng(seed, rngstream::kEmit, static_cast<std::uint64_t>(period));
  for (int s = 0; s < ctx.n_slots; ++s) {
    if (rng.bernoulli(ctx.p_primary)) {
      double t;
      if (ctx.f_slow > 0.0 && rng.bernoulli(ctx.f_slow))
        t = rng.exponential(ctx.t_slow_ps);
      else
        t = rng.exponential(ctx.t_eff_ps);
      out.push_back({period, ctx.slots[s], Polarization::kH, false, t, ctx.nu_pair});
    }
    if (ctx.p_extra > 0.0 && rng.bernoulli(ctx.p_extra)) {
      double t = rng.exponential(ctx.t_eff_ps);
      out.push_back({period, ctx.slots[s], Polarization::kH, true, t, 0.0});
    }
  }
}

constexpr std::int64_t kChunkPeriods = 1 << 15;

}  // namespace

void emit_range(const EmitterDevice& device, const CavityParams& cavity,
                const BenchConfig& bench, const PulseTrain& train, std::uint64_t seed,
                std::int64_t period_begin, std::int64_t period_end,
                std::vector<PhotonRecord>& out) {
  (void)bench;  // pulse timing enters only downstream, via slot offsets
  if (train.n_periods <= 0)
    throw std::invalid_argument("emit: n_periods must be >= 1");
  EmitContext ctx = make_context(device, cavity, train);
  for (std::int64_t p = period_begin; p < period_end; ++p) emit_period(ctx, seed, p, out);
}

std::vector<PhotonRecord> emit_serial(const EmitterDevice& device,
                                      const CavityParams& cavity,
                                      const BenchConfig& bench, const PulseTrain& train,
                                      std::uint64_t seed) {
  std::vector<PhotonRecord> out;
  out.reserve(static_cast<std::size_t>(
      train.n_periods * (train.pair_mode ? 2 : 1) * (device.eta + device.p_mp) * 1.1 + 64));
  emit_range(device, cavity, bench, train, seed, 0, train.n_periods, out);
  return out;
}

std::vector<PhotonRecord> emit(const EmitterDevice& device, const CavityParams& cavity,
                               const BenchConfig& bench, const PulseTrain& train,
                               std::uint64_t seed) {
  if (train.n_periods <= 0)
    throw std::invalid_argument("emit: n_periods must be >= 1");
  std::int64_t n_chunks = (train.n_periods + kChunkPeriods - 1) / kChunkPeriods;
  std::vector<std::vector<PhotonRecord>> chunks(static_cast<std::size_t>(n_chunks));

  double exc = excitation_probability(train.pulse_area_rad);
  double per_period = (train.pair_mode ? 2.0 : 1.0) * exc * (device.eta + device.p_mp);
  std::size_t chunk_reserve =
      static_cast<std::size_t>(per_period * kChunkPeriods * 1.05) + 64;

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (std::int64_t c = 0; c < n_chunks; ++c) {
    std::int64_t p0 = c * kChunkPeriods;
    std::int64_t p1 = std::min(p0 + kChunkPeriods, train.n_periods);
    auto& chunk = chunks[static_cast<std::size_t>(c)];
    chunk.reserve(chunk_reserve);
    emit_range(device, cavity, bench, train, seed, p0, p1, chunk);
  }

  std::size_t total = 0;
  for (const auto& ch : chunks) total += ch.size();
  std::vector<PhotonRecord> out;
  out.reserve(total);
  for (const auto& ch : chunks) out.insert(out.end(), ch.begin(), ch.end());
  return out;
}

}  // namespace spsim::dynamics
