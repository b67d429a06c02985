#include "spsim/correlate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace spsim::correlate {

namespace {

void split_channels(const std::vector<ClickRecord>& clicks, std::vector<std::int64_t>& d1,
                    std::vector<std::int64_t>& d2) {
  for (const auto& c : clicks) {
    if (c.channel == 1)
      d1.push_back(c.time_ps);
    else
      d2.push_back(c.time_ps);
  }
}

Histogram make_hist(std::int64_t bin_width_ps, std::int64_t max_delay_ps) {
  if (bin_width_ps <= 0) throw std::invalid_argument("correlate: bin_width must be positive");
  if (max_delay_ps <= 0 || max_delay_ps % bin_width_ps != 0)
    throw std::invalid_argument("correlate: max_delay must be a positive multiple of bin_width");
  std::int64_t k = max_delay_ps / bin_width_ps;
  Histogram h;
  h.bin_width_ps = bin_width_ps;
  h.origin_ps = -static_cast<double>(max_delay_ps) - 0.5 * static_cast<double>(bin_width_ps);
  h.counts.assign(static_cast<std::size_t>(2 * k + 1), 0);
  return h;
}

inline std::size_t bin_of(std::int64_t tau, std::int64_t w, std::int64_t k) {
  std::int64_t b = std::llround(static_cast<double>(tau) / static_cast<double>(w)) + k;
  if (b < 0) b = 0;
  if (b > 2 * k) b = 2 * k;
  return static_cast<std::size_t>(b);
}

void accumulate(const std::vector<std::int64_t>& d1, const std::vector<std::int64_t>& d2,
                std::size_t i0, std::size_t i1, std::int64_t w, std::int64_t max,
                bool start_stop, std::vector<std::int64_t>& counts) {
  std::int64_t k = max / w;
  std::size_t lo = i0 < d1.size()
                       ? static_cast<std::size_t>(
                             std::lower_bound(d2.begin(), d2.end(), d1[i0] - max) - d2.begin())
                       : d2.size();
  for (std::size_t i = i0; i < i1; ++i) {
    std::int64_t t1 = d1[i];
    while (lo < d2.size() && d2[lo] < t1 - max) ++lo;
    if (start_stop) {
      auto it = std::lower_bound(d2.begin() + static_cast<std::ptrdiff_t>(lo), d2.end(), t1);
      if (it != d2.end() && *it - t1 <= max) ++counts[bin_of(*it - t1, w, k)];
      continue;
    }
    for (std::size_t j = lo; j < d2.size() && d2[j] - t1 <= max; ++j)
      ++counts[bin_of(d2[j] - t1, w, k)];
  }
}

}  // namespace

Histogram correlate_serial(const std::vector<ClickRecord>& clicks, std::int64_t bin_width_ps,
                           std::int64_t max_delay_ps, bool start_stop) {
  Histogram h = make_hist(bin_width_ps, max_delay_ps);
  std::vector<std::int64_t> d1, d2;
  split_channels(clicks, d1, d2);
  accumulate(d1, d2, 0, d1.size(), bin_width_ps, max_delay_ps, start_stop, h.counts);
  for (auto c : h.counts) h.total_coincidences += c;
  return h;
}

Histogram correlate(const std::vector<ClickRecord>& clicks, std::int64_t bin_width_ps,
                    std::int64_t max_delay_ps, bool start_stop) {
  Histogram h = make_hist(bin_width_ps, max_delay_ps);
  std::vector<std::int64_t> d1, d2;
  split_channels(clicks, d1, d2);

  constexpr std::size_t kChunk = 1 << 16;
  std::size_t n_chunks = (d1.size() + kChunk - 1) / kChunk;

#ifdef _OPENMP
#pragma omp parallel if (n_chunks > 1)
  {
    std::vector<std::int64_t> local(h.counts.size(), 0);
#pragma omp for schedule(dynamic)
    for (std::int64_t c = 0; c < static_cast<std::int64_t>(n_chunks); ++c) {
      std::size_t i0 = static_cast<std::size_t>(c) * kChunk;
      std::size_t i1 = std::min(i0 + kChunk, d1.size());
      accumulate(d1, d2, i0, i1, bin_width_ps, max_delay_ps, start_stop, local);
    }
#pragma omp critical
    for (std::size_t b = 0; b < local.size(); ++b) h.counts[b] += local[b];
  }
#else
  accumulate(d1, d2, 0, d1.size(), bin_width_ps, max_delay_ps, start_stop, h.counts);
#endif

  for (auto c : h.counts) h.total_coincidences += c;
  return h;
}

std::vector<PeakArea> peak_areas(const Histogram& hist, const std::vector<double>& centers,
                                 double half_window_ps) {
  if (half_window_ps <= 0.0)
    throw std::invalid_argument("peak_areas: half_window must be positive");
  std::vector<double> sorted = centers;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i] - sorted[i - 1] < 2.0 * half_window_ps)
      throw std::invalid_argument("peak_areas: windows overlap");

  std::vector<PeakArea> out;
  out.reserve(centers.size());
  for (double c : centers) {
    PeakArea pa{c, 0};
    for (std::size_t i = 0; i < hist.n_bins(); ++i) {
      double bc = hist.bin_center(i);
      if (bc >= c - half_window_ps && bc <= c + half_window_ps) pa.area += hist.counts[i];
    }
    out.push_back(pa);
  }
  return out;
}

}  // namespace spsim::correlate
