#include "hrmix/experiments.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace hrmix;

namespace {

std::string slurp(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string tmp_dir(const std::string& tag)
{
  std::string d = (std::filesystem::temp_directory_path() / ("hrmix_" + tag)).string();
  std::filesystem::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("delta serialization matches the data-file filters")
{
  CHECK(format_delta(10.0) == "10.0");
  CHECK(format_delta(1e3) == "1000.0");
  CHECK(format_delta(1e5) == "100000.0");
}

TEST_CASE("shortest round-trip float formatting")
{
  for (double v : {0.1, 1.0 / 3.0, 6.25e-14, 83.81568798442349}) {
    CHECK(std::stod(format_shortest(v)) == v);
  }
  CHECK(format_shortest(0.5) == "0.5");
}

TEST_CASE("convergence CSV: schema lock and row counts")
{
  std::string dir = tmp_dir("conv");
  ExperimentConfig cfg;
  cfg.case_name = "rigid_body_motion";
  cfg.schemes = {"jm", "afw_1"};
  cfg.deltas = {10.0, 1e3, 1e5};
  cfg.levels = 2;
  cfg.n = 2;
  auto files = run_convergence(cfg, dir);
  REQUIRE(files.size() == 2);
  CHECK(files[0].name == "rigid_body_motion_jm_1.csv");
  CHECK(files[0].rows == 6);  // 3 deltas x 2 levels

  std::string text = slurp(dir + "/rigid_body_motion_jm_1.csv");
  CHECK(text.rfind("ref,Bnd,sigma_error,displacement_error,omega_err\n", 0) == 0);
  CHECK(text.back() == '\n');
  // strong scheme: omega column empty
  std::istringstream ss(text);
  std::string line;
  std::getline(ss, line);
  std::getline(ss, line);
  CHECK(line.back() == ',');
  CHECK(line.find(",10.0,") != std::string::npos);

  std::string weak = slurp(dir + "/rigid_body_motion_afw_1.csv");
  std::istringstream ws(weak);
  std::getline(ws, line);
  std::getline(ws, line);
  CHECK(line.back() != ',');
}

TEST_CASE("stokes CSV schema lock")
{
  std::string dir = tmp_dir("stokes");
  ExperimentConfig cfg;
  cfg.case_name = "no_flow";
  cfg.schemes = {"sv", "ht"};
  cfg.deltas = {10.0};
  cfg.levels = 1;
  cfg.n = 2;
  auto files = run_stokes(cfg, dir);
  CHECK(files[0].name == "no_flow_sv.csv");
  CHECK(slurp(dir + "/no_flow_sv.csv")
            .rfind("ref,Ra,velocity_error,pressure_error,divergence_error\n", 0) == 0);
  CHECK(slurp(dir + "/no_flow_ht.csv")
            .rfind("ref,Ra,velocity_error,pressure_error,divergence_error\n", 0) == 0);
}

TEST_CASE("incompatible pairs are rejected")
{
  ExperimentConfig cfg;
  cfg.case_name = "no_flow";
  cfg.schemes = {"jm"};
  CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);
  cfg.case_name = "polar";
  cfg.schemes = {"sv"};
  CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);
  cfg.schemes = {"afw_2"};
  cfg.mode = "transient";
  CHECK_THROWS_AS(validate_config(cfg), std::invalid_argument);
}

TEST_CASE("rate table: halving, quartering and floored columns")
{
  std::string dir = tmp_dir("rates");
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir + "/synthetic.csv", std::ios::binary);
    out << "ref,Bnd,sigma_error,displacement_error,omega_err\n";
    out << "0,10.0,8.0,16.0,1e-15\n";
    out << "1,10.0,4.0,4.0,1.1e-15\n";
    out << "2,10.0,2.0,1.0,0.9e-15\n";
  }
  std::string md = rate_table(dir + "/synthetic.csv");
  CHECK(md.find("| 10.0 | 0->1 | 1.00 | 2.00 | floor |") != std::string::npos);
  CHECK(md.find("| 10.0 | 1->2 | 1.00 | 2.00 | floor |") != std::string::npos);

  CHECK_THROWS(rate_table(dir + "/missing.csv"));
  {
    std::ofstream out(dir + "/short.csv", std::ios::binary);
    out << "ref,Bnd,sigma_error\n0,10.0,1.0\n";
  }
  CHECK_THROWS(rate_table(dir + "/short.csv"));
}

TEST_CASE("config file parsing")
{
  std::string dir = tmp_dir("cfg");
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir + "/exp.cfg");
    out << "# comment\n[first]\nmode = convergence\ncase = transverse_isotropic\n"
        << "schemes = jm, afw_1\ndeltas = 10, 1000\nlevels = 2\nn = 4\njitter = 0.15\nseed = 7\n"
        << "\n[second]\nmode = stokes\ncase = no_flow\nschemes = sv\ndeltas = 10\nlevels = 1\n";
  }
  auto configs = parse_config_file(dir + "/exp.cfg");
  REQUIRE(configs.size() == 2);
  CHECK(configs[0].case_name == "transverse_isotropic");
  CHECK(configs[0].schemes == std::vector<std::string>{"jm", "afw_1"});
  CHECK(configs[0].deltas == std::vector<double>{10.0, 1000.0});
  CHECK(configs[0].seed == 7);
  CHECK(configs[1].mode == "stokes");

  {
    std::ofstream out(dir + "/bad.cfg");
    out << "[x]\nnonsense\n";
  }
  CHECK_THROWS(parse_config_file(dir + "/bad.cfg"));
}

TEST_CASE("roster determinism: byte-identical reruns")
{
  RosterOptions opts;
  opts.base_n = 2;
  opts.polar_n = 2;
  opts.transient_n = 3;
  opts.max_levels = 1;
  opts.dt = 0.05;
  opts.t_end = 0.1;
  std::string d1 = tmp_dir("roster_a"), d2 = tmp_dir("roster_b");
  auto f1 = run_all_paper_experiments(d1, opts);
  auto f2 = run_all_paper_experiments(d2, opts);
  REQUIRE(f1.size() == f2.size());
  for (std::size_t i = 0; i < f1.size(); ++i) {
    CHECK(f1[i].name == f2[i].name);
    CHECK(slurp(d1 + "/" + f1[i].name) == slurp(d2 + "/" + f2[i].name));
  }
  // manifest covers every produced file
  std::string manifest = slurp(d1 + "/manifest.txt");
  for (const auto& f : f1)
    if (f.name != "manifest.txt") CHECK(manifest.find(f.name) != std::string::npos);
  CHECK(manifest.find("polar_hz_3.csv absent") != std::string::npos);
}
