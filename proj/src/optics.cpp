#include "spsim/optics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spsim/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spsim::optics {

namespace {

struct PeriodGroup {
  std::size_t begin;
  std::size_t end;
};

std::vector<PeriodGroup> group_by_period(const std::vector<PhotonRecord>& photons) {
  std::vector<PeriodGroup> groups;
  std::size_t i = 0;
  while (i < photons.size()) {
    std::size_t j = i + 1;
    while (j < photons.size() && photons[j].period == photons[i].period) ++j;
    groups.push_back({i, j});
    i = j;
  }
  return groups;
}

double slot_offset_ps(Slot slot, double pair_delay_ps) {
  return slot == Slot::kLate ? pair_delay_ps : 0.0;
}

// Dark counts, sorting and dead time, shared by all benches.
void finalize_clicks(std::vector<ClickRecord>& clicks, const BenchConfig& bench,
                     std::int64_t n_periods, std::uint64_t seed, BenchStats* stats,
                     bool presorted = false) {
  if (stats) stats->n_survived = static_cast<std::int64_t>(clicks.size());

  bool dark_added = false;
  if (bench.dark_rate_hz > 0.0 && n_periods > 0) {
    double t_rep = bench.t_rep_ps();
    double p_dark = bench.dark_rate_hz * t_rep * 1.0e-12;
    for (std::int64_t p = 0; p < n_periods; ++p) {
      PeriodRng rng(seed, rngstream::kDark, static_cast<std::uint64_t>(p));
      for (std::uint8_t ch = 1; ch <= 2; ++ch) {
        if (rng.bernoulli(p_dark)) {
          double t = (static_cast<double>(p) + rng.uniform()) * t_rep;
          clicks.push_back({static_cast<std::int64_t>(std::llround(t)), ch});
          dark_added = true;
        }
      }
    }
  }

  if (!presorted || dark_added) std::sort(clicks.begin(), clicks.end());

  if (bench.dead_time_ps > 0.0) {
    std::int64_t dead = static_cast<std::int64_t>(std::llround(bench.dead_time_ps));
    std::int64_t last[3] = {0, 0, 0};
    bool seen[3] = {false, false, false};
    std::size_t w = 0;
    for (std::size_t i = 0; i < clicks.size(); ++i) {
      const auto& c = clicks[i];
      if (seen[c.channel] && c.time_ps - last[c.channel] < dead) continue;
      seen[c.channel] = true;
      last[c.channel] = c.time_ps;
      clicks[w++] = c;
    }
    clicks.resize(w);
  }

  if (stats) stats->n_clicks = static_cast<std::int64_t>(clicks.size());
}

std::int64_t infer_n_periods(const std::vector<PhotonRecord>& photons,
                             std::int64_t n_periods) {
  if (n_periods > 0) return n_periods;
  return photons.empty() ? 0 : photons.back().period + 1;
}

// ---------------------------------------------------------------------------
// HBT

void hbt_period(const std::vector<PhotonRecord>& photons, const PeriodGroup& g,
                const BenchConfig& bench, std::uint64_t seed,
                std::vector<ClickRecord>& out) {
  PeriodRng rng(seed, rngstream::kHbt,
                static_cast<std::uint64_t>(photons[g.begin].period));
  double t_rep = bench.t_rep_ps();
  double dt = bench.pulse_pair_delay_ps;
  double sigma = bench.sigma_det_effective_ps();
  for (std::size_t i = g.begin; i < g.end; ++i) {
    const auto& ph = photons[i];
    if (!rng.bernoulli(bench.eta_setup)) continue;
    std::uint8_t ch = rng.bernoulli(0.5) ? 1 : 2;
    double t = static_cast<double>(ph.period) * t_rep + slot_offset_ps(ph.slot, dt) +
               ph.emission_time_ps + rng.normal(sigma);
    out.push_back({static_cast<std::int64_t>(std::llround(t)), ch});
  }
}

// ---------------------------------------------------------------------------
// HOM

struct HomCtx {
  double t_rep, dt, wc, sigma, eta_setup;
  double R, T, contrast_sq;
  bool orthogonal;
};

struct HomPhoton {
  double arrival;
  std::uint8_t port;  // 0 = short arm input, 1 = long arm input
  Polarization pol;
  bool is_extra;
  double nu_pair;
  std::int8_t detector;  // 0 = undecided
};

struct Candidate {
  double diff;
  std::uint32_t i, j;
};

void hom_period(const std::vector<PhotonRecord>& photons, const PeriodGroup& g,
                const HomCtx& ctx, std::uint64_t seed, std::vector<HomPhoton>& buf,
                std::vector<Candidate>& cand, std::vector<ClickRecord>& out) {
  PeriodRng rng(seed, rngstream::kHom,
                static_cast<std::uint64_t>(photons[g.begin].period));
  buf.clear();

  double base = static_cast<double>(photons[g.begin].period) * ctx.t_rep;
  for (std::size_t i = g.begin; i < g.end; ++i) {
    const auto& ph = photons[i];
    if (!rng.bernoulli(ctx.eta_setup)) continue;
    bool long_arm = rng.bernoulli(0.5);
    double arrival = base + slot_offset_ps(ph.slot, ctx.dt) + ph.emission_time_ps +
                     (long_arm ? ctx.dt : 0.0);
    Polarization pol = ph.polarization;
    if (ctx.orthogonal && long_arm)
      pol = pol == Polarization::kH ? Polarization::kV : Polarization::kH;
    buf.push_back({arrival, static_cast<std::uint8_t>(long_arm ? 1 : 0), pol,
                   ph.is_extra, ph.nu_pair, 0});
  }

  // Opposite-port arrivals inside the coalescence window form interference
  // pairs; nearest arrivals first, each photon in at most one pair.
  cand.clear();
  for (std::uint32_t i = 0; i < buf.size(); ++i)
    for (std::uint32_t j = i + 1; j < buf.size(); ++j) {
      if (buf[i].port == buf[j].port) continue;
      double d = std::abs(buf[i].arrival - buf[j].arrival);
      if (d < ctx.wc) cand.push_back({d, i, j});
    }
  std::sort(cand.begin(), cand.end(), [](const Candidate& a, const Candidate& b) {
    if (a.diff != b.diff) return a.diff < b.diff;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });

  double rr = ctx.R * ctx.R, tt = ctx.T * ctx.T, rt = ctx.R * ctx.T;
  for (const auto& c : cand) {
    if (buf[c.i].detector != 0 || buf[c.j].detector != 0) continue;
    HomPhoton& a = buf[c.i];
    HomPhoton& b = buf[c.j];
    double nu_eff = 0.0;
    if (!a.is_extra && !b.is_extra && a.pol == b.pol)
      nu_eff = std::sqrt(a.nu_pair * b.nu_pair);
    double nut = nu_eff * ctx.contrast_sq;
    double p_coinc = rr + tt - 2.0 * rt * nut;
    HomPhoton& at_a = a.port == 0 ? a : b;  // photon at input port A
    HomPhoton& at_b = a.port == 0 ? b : a;
    if (rng.uniform() < p_coinc) {
      double w_a1 = std::max(tt - rt * nut, 0.0);  // A transmits, B transmits
      double w_a2 = std::max(rr - rt * nut, 0.0);  // both reflect
      bool a_to_d1 = rng.uniform() * (w_a1 + w_a2) < w_a1;
      at_a.detector = a_to_d1 ? 1 : 2;
      at_b.detector = a_to_d1 ? 2 : 1;
    } else {
      std::int8_t d = rng.bernoulli(0.5) ? 1 : 2;
      at_a.detector = d;
      at_b.detector = d;
    }
  }

  for (auto& p : buf) {
    if (p.detector != 0) continue;
    double p_d1 = p.port == 0 ? ctx.T : ctx.R;  // transmission convention
    p.detector = rng.bernoulli(p_d1) ? 1 : 2;
  }

  for (const auto& p : buf) {
    double t = p.arrival + rng.normal(ctx.sigma);
    out.push_back({static_cast<std::int64_t>(std::llround(t)),
                   static_cast<std::uint8_t>(p.detector)});
  }
}

// ---------------------------------------------------------------------------
// Decay

void decay_period(const std::vector<PhotonRecord>& photons, const PeriodGroup& g,
                  const BenchConfig& bench, double irf_sigma_ps, std::uint64_t seed,
                  std::vector<ClickRecord>& out) {
  PeriodRng rng(seed, rngstream::kDecay,
                static_cast<std::uint64_t>(photons[g.begin].period));
  double t_rep = bench.t_rep_ps();
  double dt = bench.pulse_pair_delay_ps;
  for (std::size_t i = g.begin; i < g.end; ++i) {
    const auto& ph = photons[i];
    if (!rng.bernoulli(bench.eta_setup)) continue;
    double t = static_cast<double>(ph.period) * t_rep + slot_offset_ps(ph.slot, dt) +
               ph.emission_time_ps + rng.normal(irf_sigma_ps);
    out.push_back({static_cast<std::int64_t>(std::llround(t)), 1});
  }
}

constexpr std::size_t kGroupChunk = 1 << 14;

// Concatenation of per-chunk sorted click runs. Jitter only reorders clicks
// locally (far below a chunk's time span), so an insertion walk across each
// boundary finishes the ordering; a full sort backs it up if the input ever
// violates that assumption.
std::vector<ClickRecord> merge_sorted_parts(std::vector<std::vector<ClickRecord>>& parts) {
  std::size_t total = 0;
  for (const auto& p : parts) total += p.size();
  std::vector<ClickRecord> clicks;
  clicks.reserve(total);
  std::size_t fixups = 0;
  for (const auto& p : parts) {
    std::size_t boundary = clicks.size();
    clicks.insert(clicks.end(), p.begin(), p.end());
    for (std::size_t i = boundary; i < clicks.size(); ++i) {
      if (i == 0 || !(clicks[i] < clicks[i - 1])) break;
      std::size_t j = i;
      while (j > 0 && clicks[j] < clicks[j - 1]) {
        std::swap(clicks[j], clicks[j - 1]);
        --j;
        ++fixups;
      }
    }
    if (fixups > total / 4 + 64) {  // pathological overlap
      std::sort(clicks.begin(), clicks.end());
      fixups = 0;
    }
  }
  return clicks;
}

template <typename PerGroup>
std::vector<ClickRecord> run_parallel(const std::vector<PhotonRecord>& photons,
                                      PerGroup per_group) {
  std::vector<PeriodGroup> groups = group_by_period(photons);
  std::size_t n_chunks = (groups.size() + kGroupChunk - 1) / kGroupChunk;
  std::vector<std::vector<ClickRecord>> parts(n_chunks);

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (std::int64_t c = 0; c < static_cast<std::int64_t>(n_chunks); ++c) {
    std::size_t g0 = static_cast<std::size_t>(c) * kGroupChunk;
    std::size_t g1 = std::min(g0 + kGroupChunk, groups.size());
    auto& part = parts[static_cast<std::size_t>(c)];
    part.reserve(g1 > g0 ? groups[g1 - 1].end - groups[g0].begin : 0);
    per_group(groups, g0, g1, part);
    std::sort(part.begin(), part.end());
  }

  return merge_sorted_parts(parts);
}

}  // namespace

std::vector<ClickRecord> hbt_bench_serial(const std::vector<PhotonRecord>& photons,
                                          const BenchConfig& bench, std::uint64_t seed,
                                          std::int64_t n_periods, BenchStats* stats) {
  if (stats) *stats = {static_cast<std::int64_t>(photons.size()), 0, 0};
  std::vector<ClickRecord> clicks;
  for (const auto& g : group_by_period(photons)) hbt_period(photons, g, bench, seed, clicks);
  finalize_clicks(clicks, bench, infer_n_periods(photons, n_periods), seed, stats);
  return clicks;
}

std::vector<ClickRecord> hbt_bench(const std::vector<PhotonRecord>& photons,
                                   const BenchConfig& bench, std::uint64_t seed,
                                   std::int64_t n_periods, BenchStats* stats) {
  if (stats) *stats = {static_cast<std::int64_t>(photons.size()), 0, 0};
  auto clicks = run_parallel(
      photons, [&](const std::vector<PeriodGroup>& groups, std::size_t g0, std::size_t g1,
                   std::vector<ClickRecord>& out) {
        for (std::size_t g = g0; g < g1; ++g) hbt_period(photons, groups[g], bench, seed, out);
      });
  finalize_clicks(clicks, bench, infer_n_periods(photons, n_periods), seed, stats, true);
  return clicks;
}

std::vector<ClickRecord> hom_bench_serial(const std::vector<PhotonRecord>& photons,
                                          const BenchConfig& bench, std::uint64_t seed,
                                          std::int64_t n_periods, BenchStats* stats) {
  if (bench.pulse_pair_delay_ps <= 0.0)
    throw std::invalid_argument("hom_bench: pulse_pair_delay must be positive");
  if (stats) *stats = {static_cast<std::int64_t>(photons.size()), 0, 0};
  HomCtx ctx{bench.t_rep_ps(),
             bench.pulse_pair_delay_ps,
             bench.coalescence_window_effective_ps(),
             bench.sigma_det_effective_ps(),
             bench.eta_setup,
             bench.r_reflect,
             bench.t_transmit(),
             bench.one_minus_eps * bench.one_minus_eps,
             bench.polarization == PolarizationMode::kOrthogonal};
  std::vector<ClickRecord> clicks;
  std::vector<HomPhoton> buf;
  std::vector<Candidate> cand;
  for (const auto& g : group_by_period(photons))
    hom_period(photons, g, ctx, seed, buf, cand, clicks);
  finalize_clicks(clicks, bench, infer_n_periods(photons, n_periods), seed, stats);
  return clicks;
}

std::vector<ClickRecord> hom_bench(const std::vector<PhotonRecord>& photons,
                                   const BenchConfig& bench, std::uint64_t seed,
                                   std::int64_t n_periods, BenchStats* stats) {
  if (bench.pulse_pair_delay_ps <= 0.0)
    throw std::invalid_argument("hom_bench: pulse_pair_delay must be positive");
  if (stats) *stats = {static_cast<std::int64_t>(photons.size()), 0, 0};
  HomCtx ctx{bench.t_rep_ps(),
             bench.pulse_pair_delay_ps,
             bench.coalescence_window_effective_ps(),
             bench.sigma_det_effective_ps(),
             bench.eta_setup,
             bench.r_reflect,
             bench.t_transmit(),
             bench.one_minus_eps * bench.one_minus_eps,
             bench.polarization == PolarizationMode::kOrthogonal};
  auto clicks = run_parallel(
      photons, [&](const std::vector<PeriodGroup>& groups, std::size_t g0, std::size_t g1,
                   std::vector<ClickRecord>& out) {
        std::vector<HomPhoton> buf;
        std::vector<Candidate> cand;
        for (std::size_t g = g0; g < g1; ++g)
          hom_period(photons, groups[g], ctx, seed, buf, cand, out);
      });
  finalize_clicks(clicks, bench, infer_n_periods(photons, n_periods), seed, stats, true);
  return clicks;
}

std::vector<ClickRecord> decay_bench(const std::vector<PhotonRecord>& photons,
                                     const BenchConfig& bench, double irf_sigma_ps,
                                     std::uint64_t seed, std::int64_t n_periods,
                                     BenchStats* stats) {
  if (stats) *stats = {static_cast<std::int64_t>(photons.size()), 0, 0};
  auto clicks = run_parallel(
      photons, [&](const std::vector<PeriodGroup>& groups, std::size_t g0, std::size_t g1,
                   std::vector<ClickRecord>& out) {
        for (std::size_t g = g0; g < g1; ++g)
          decay_period(photons, groups[g], bench, irf_sigma_ps, seed, out);
      });
  finalize_clicks(clicks, bench, infer_n_periods(photons, n_periods), seed, stats, true);
  return clicks;
}

}  // namespace spsim::optics
