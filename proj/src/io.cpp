#include "spsim/io.hpp"

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace spsim::io {

void write_clicks_csv(const std::string& path, const std::vector<ClickRecord>& clicks) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  std::fprintf(f, "channel,time_ps\n");
  for (const auto& c : clicks)
    std::fprintf(f, "%u,%" PRId64 "\n", static_cast<unsigned>(c.channel), c.time_ps);
  if (std::fclose(f) != 0) throw IoError("write failed for '" + path + "'");
}

std::vector<ClickRecord> read_clicks_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::vector<ClickRecord> clicks;
  std::string line;
  bool first = true;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line == "channel,time_ps") continue;
    }
    unsigned ch = 0;
    long long t = 0;
    if (std::sscanf(line.c_str(), "%u,%lld", &ch, &t) != 2 || (ch != 1 && ch != 2))
      throw IoError(path + ": malformed click row at line " + std::to_string(lineno));
    clicks.push_back({static_cast<std::int64_t>(t), static_cast<std::uint8_t>(ch)});
  }
  std::sort(clicks.begin(), clicks.end());
  return clicks;
}

void write_histogram_csv(const std::string& path, const Histogram& hist) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  std::fprintf(f, "# bin_width_ps=%" PRId64 " origin_ps=%.17g\n", hist.bin_width_ps,
               hist.origin_ps);
  std::fprintf(f, "bin_center_ps,counts\n");
  for (std::size_t i = 0; i < hist.n_bins(); ++i)
    std::fprintf(f, "%.17g,%" PRId64 "\n", hist.bin_center(i), hist.counts[i]);
  if (std::fclose(f) != 0) throw IoError("write failed for '" + path + "'");
}

Histogram read_histogram_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  Histogram h;
  std::string line;
  if (!std::getline(in, line)) throw IoError(path + ": empty histogram file");
  long long bw = 0;
  double origin = 0.0;
  if (std::sscanf(line.c_str(), "# bin_width_ps=%lld origin_ps=%lg", &bw, &origin) != 2)
    throw IoError(path + ": malformed histogram header");
  h.bin_width_ps = bw;
  h.origin_ps = origin;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "bin_center_ps,counts") continue;
    double center = 0.0;
    long long counts = 0;
    if (std::sscanf(line.c_str(), "%lg,%lld", &center, &counts) != 2)
      throw IoError(path + ": malformed histogram row at line " + std::to_string(lineno));
    h.counts.push_back(counts);
    h.total_coincidences += counts;
  }
  return h;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw IoError("write failed for '" + path + "'");
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace spsim::io
