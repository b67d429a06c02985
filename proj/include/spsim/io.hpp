#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "spsim/model.hpp"

namespace spsim::io {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// clicks.csv: header "channel,time_ps", rows sorted by time.
void write_clicks_csv(const std::string& path, const std::vector<ClickRecord>& clicks);
std::vector<ClickRecord> read_clicks_csv(const std::string& path);

// histogram.csv: "# bin_width_ps=... origin_ps=..." then bin_center_ps,counts.
void write_histogram_csv(const std::string& path, const Histogram& hist);
Histogram read_histogram_csv(const std::string& path);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace spsim::io
