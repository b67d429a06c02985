#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "spsim/cli.hpp"
#include "spsim/config.hpp"
#include "spsim/io.hpp"
#include "spsim/pipeline.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace spsim;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str() const { return path.string(); }
};

std::string small_config(const std::string& mode, std::int64_t periods) {
  std::ostringstream os;
  os << "[device]\np_mp = 0.0034357\nnu0 = 0.89\nbeta_per_rad2 = 0.0162114\neta = 0.74\n";
  os << "[bench]\neta_setup = 0.5\n";
  os << "[run]\nmode = " << mode << "\nn_periods = " << periods << "\n";
  os << "decay_periods = " << periods << "\n";
  return os.str();
}

std::string write_config(const TempDir& dir, const std::string& text,
                         const std::string& name = "config.toml") {
  auto p = (dir.path / name).string();
  io::write_text_file(p, text);
  return p;
}

}  // namespace

TEST_CASE("cmd_sim writes clicks and a resolved run.json; reruns are byte-identical") {
  TempDir dir("spsim_cli_sim");
  auto cfg_path = write_config(dir, small_config("hom-parallel", 20000));
  std::ostringstream diag;

  auto out1 = dir.path / "a";
  auto out2 = dir.path / "b";
  REQUIRE(cli::cmd_sim(cfg_path, 9, out1.string(), {}, diag) == cli::kExitOk);
  REQUIRE(cli::cmd_sim(cfg_path, 9, out2.string(), {}, diag) == cli::kExitOk);

  auto clicks1 = io::read_text_file((out1 / "clicks.csv").string());
  auto clicks2 = io::read_text_file((out2 / "clicks.csv").string());
  CHECK(clicks1 == clicks2);
  CHECK(io::read_text_file((out1 / "run.json").string()) ==
        io::read_text_file((out2 / "run.json").string()));

  auto out3 = dir.path / "c";
  REQUIRE(cli::cmd_sim(cfg_path, 10, out3.string(), {}, diag) == cli::kExitOk);
  CHECK(clicks1 != io::read_text_file((out3 / "clicks.csv").string()));
}

#ifdef _OPENMP
TEST_CASE("cmd_sim output is independent of the thread count") {
  TempDir dir("spsim_cli_threads");
  auto cfg_path = write_config(dir, small_config("hbt", 30000));
  std::ostringstream diag;
  int saved = omp_get_max_threads();

  omp_set_num_threads(1);
  REQUIRE(cli::cmd_sim(cfg_path, 4, (dir.path / "one").string(), {}, diag) == cli::kExitOk);
  omp_set_num_threads(4);
  REQUIRE(cli::cmd_sim(cfg_path, 4, (dir.path / "four").string(), {}, diag) == cli::kExitOk);
  omp_set_num_threads(saved);

  CHECK(io::read_text_file((dir.path / "one" / "clicks.csv").string()) ==
        io::read_text_file((dir.path / "four" / "clicks.csv").string()));
}
#endif

TEST_CASE("invalid configuration exits with the config code and diagnostics") {
  TempDir dir("spsim_cli_badcfg");
  auto cfg_path = write_config(dir, "[run]\nn_periods = 0\n");
  std::ostringstream diag;
  CHECK(cli::cmd_sim(cfg_path, 1, dir.str(), {}, diag) == cli::kExitConfig);
  CHECK(diag.str().find("n_periods") != std::string::npos);

  auto bad_key = write_config(dir, "[device]\nt_onn = 7\n");
  std::ostringstream diag2;
  CHECK(cli::cmd_sim(bad_key, 1, dir.str(), {}, diag2) == cli::kExitConfig);
  CHECK(diag2.str().find("line 2") != std::string::npos);
}

TEST_CASE("analyze over sim files equals the in-memory pipeline") {
  TempDir dir("spsim_cli_roundtrip");
  auto cfg_path = write_config(dir, small_config("hbt", 150000));
  std::ostringstream diag;
  REQUIRE(cli::cmd_sim(cfg_path, 21, dir.str(), {}, diag) == cli::kExitOk);
  REQUIRE(cli::cmd_analyze(cfg_path, (dir.path / "clicks.csv").string(), dir.str(), {},
                           diag) == cli::kExitOk);

  // In-memory reference.
  cfg::Config c = cfg::load_config(cfg_path);
  auto sim = pipeline::run_sim(c, 21);
  FitReport report = pipeline::analyze_mode(sim.clicks, c);

  auto fit_text = io::read_text_file((dir.path / "fit.json").string());
  CHECK(fit_text == pipeline::fit_report_json_text(report));

  auto hist_file = io::read_histogram_csv((dir.path / "histogram.csv").string());
  Histogram hist_mem;
  pipeline::analyze_mode(sim.clicks, c, &hist_mem);
  CHECK(hist_file == hist_mem);
}

TEST_CASE("analyze writes a plot-ready peaks.csv") {
  TempDir dir("spsim_cli_peaks");
  auto cfg_path = write_config(dir, small_config("hom-orthogonal", 100000));
  std::ostringstream diag;
  REQUIRE(cli::cmd_sim(cfg_path, 3, dir.str(), {}, diag) == cli::kExitOk);
  REQUIRE(cli::cmd_analyze(cfg_path, (dir.path / "clicks.csv").string(), dir.str(), {},
                           diag) == cli::kExitOk);
  std::ifstream peaks(dir.path / "peaks.csv");
  std::string header;
  std::getline(peaks, header);
  CHECK(header == "bin_center_ps,counts,model");
  int rows = 0;
  std::string line;
  while (std::getline(peaks, line)) ++rows;
  CHECK(rows > 100);
}

TEST_CASE("tiny pipeline run reports wide errors without crashing") {
  TempDir dir("spsim_cli_tiny");
  auto cfg_path = write_config(dir, small_config("hbt", 100));
  std::ostringstream diag;
  int rc = cli::cmd_pipeline(cfg_path, 5, dir.str(), {}, diag);
  CHECK((rc == cli::kExitOk || rc == cli::kExitFit));
  CHECK(fs::exists(dir.path / "summary.json"));
  auto text = io::read_text_file((dir.path / "summary.json").string());
  CHECK(text.find("g2_zero") != std::string::npos);
}

TEST_CASE("calc subcommands print value and error") {
  std::ostringstream out;
  cli::cmd_calc_purcell({168.0, 5.0}, {1140.0, 19.0}, out);
  CHECK(out.str().find("F_P = 5.785") != std::string::npos);

  std::ostringstream out2;
  cli::cmd_calc_efficiency(1.3e6, 82.0e6, {0.021, 0.001}, out2);
  CHECK(out2.str().find("eta = 0.754") != std::string::npos);

  std::ostringstream out3;
  cli::cmd_calc_purcell_max(5930.0, 0.9, 3.6, 76.377186, "lambda_over_n_cubed", out3);
  CHECK(out3.str().find("F_P_max = 5.9") != std::string::npos);
}

TEST_CASE("the installed binary wires the exit codes") {
  TempDir dir("spsim_cli_bin");
  auto cfg_path = write_config(dir, small_config("hbt", 5000));
  std::string bin = SPSIM_BIN;

  auto run = [&](const std::string& args) {
    std::string cmd = bin + " " + args + " > /dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
  };

  CHECK(run("sim -c " + cfg_path + " -o " + dir.str() + "/out --seed 3") == 0);
  CHECK(run("calc purcell --t-on 168 --t-off 1140") == 0);
  auto bad = write_config(dir, "[device]\nbogus = 1\n", "bad.toml");
  CHECK(run("sim -c " + bad + " -o " + dir.str() + "/bad") == cli::kExitConfig);
  CHECK(run("analyze -c " + cfg_path + " --clicks /nonexistent.csv -o " + dir.str()) ==
        cli::kExitIo);
}

TEST_CASE("fit.json round-trips through parse") {
  FitReport r;
  r.peaks.push_back({-2000.0, 150.5, 3.2, 168.0, 520.0});
  r.peaks.push_back({0.0, 1.75, 0.6, 168.0, 520.0});
  r.g2_zero = {0.0092, 0.0004};
  r.lifetime_ps = {168.2, 0.4};
  r.chi_square = 187.5;
  r.iteration_count = 12;
  r.converged = true;
  r.assumptions = {"pair resolution t_res interpreted as Gaussian sigma"};

  auto text = pipeline::fit_report_json_text(r);
  FitReport back = pipeline::fit_report_from_json_text(text);
  CHECK(pipeline::fit_report_json_text(back) == text);
  CHECK(back.peaks.size() == 2);
  CHECK(back.g2_zero.value == r.g2_zero.value);
  CHECK(std::isnan(back.nu_raw.value));  // absent fields stay unset
}

TEST_CASE("pipeline: a seed change moves results within statistical tolerance") {
  TempDir dir("spsim_cli_stationary");
  auto cfg_path = write_config(dir, small_config("hbt", 300000));
  cfg::Config c = cfg::load_config(cfg_path);
  c.bench.eta_setup = 1.0;

  auto s1 = pipeline::run_pipeline(c, 111, std::nullopt);
  auto s2 = pipeline::run_pipeline(c, 222, std::nullopt);
  REQUIRE_FALSE(std::isnan(s1.g2_zero.value));
  REQUIRE_FALSE(std::isnan(s2.g2_zero.value));
  double err = std::hypot(s1.g2_zero.err, s2.g2_zero.err);
  CHECK(std::abs(s1.g2_zero.value - s2.g2_zero.value) < 6.0 * err);
  double verr = std::hypot(s1.nu_raw.err, s2.nu_raw.err);
  CHECK(std::abs(s1.nu_raw.value - s2.nu_raw.value) < 6.0 * verr);
}
