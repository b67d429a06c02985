#pragma once

#include <cstdint>
#include <vector>

#include "spsim/model.hpp"

namespace spsim::correlate {

// Cross-correlation histogram of D1 x D2 click pairs with |t2 - t1| <= max_delay,
// tau = t2 - t1. Bins are centered on multiples of bin_width (odd bin count,
// tau = 0 falls on a bin center). Inputs must be time-sorted.
// start_stop = true restricts each D1 click to its first following D2 click.
Histogram correlate(const std::vector<ClickRecord>& clicks, std::int64_t bin_width_ps,
                    std::int64_t max_delay_ps, bool start_stop = false);
Histogram correlate_serial(const std::vector<ClickRecord>& clicks,
                           std::int64_t bin_width_ps, std::int64_t max_delay_ps,
                           bool start_stop = false);

struct PeakArea {
  double center_ps = 0.0;
  std::int64_t area = 0;  // exact integer count sum
};

// Windowed integration: counts of bins whose centers lie in [center - hw, center + hw].
// Windows must be disjoint.
std::vector<PeakArea> peak_areas(const Histogram& hist, const std::vector<double>& centers,
                                 double half_window_ps);

}  // namespace spsim::correlate
