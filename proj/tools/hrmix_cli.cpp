#include "hrmix/experiments.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

using namespace hrmix;

namespace {

// Keep BLAS deterministic regardless of the host's core count.
void pin_threads()
{
  setenv("OPENBLAS_NUM_THREADS", "1", 0);
  setenv("OMP_NUM_THREADS", "1", 0);
}

void report(const std::vector<CsvFile>& files, const std::string& out_dir)
{
  for (const CsvFile& f : files)
    std::cout << out_dir << "/" << f.name << " (" << f.rows << " rows)\n";
}

}  // namespace

int main(int argc, char** argv)
{
  pin_threads();
  CLI::App app{"Mixed stress-element benchmark driver"};
  app.require_subcommand(1);

  // gen-mesh
  auto* gen = app.add_subcommand("gen-mesh", "write a node/element file for a unit-square mesh");
  int gm_n = 8;
  double gm_jitter = 0.0;
  std::uint64_t gm_seed = 0;
  std::string gm_out = "mesh.txt";
  int gm_levels = 1;
  gen->add_option("--n", gm_n, "cells per side");
  gen->add_option("--jitter", gm_jitter, "interior jitter fraction in [0, 0.3]");
  gen->add_option("--seed", gm_seed, "jitter seed");
  gen->add_option("--levels", gm_levels, "uniform refinements applied after generation");
  gen->add_option("--out", gm_out, "output path");

  // converge
  auto* conv = app.add_subcommand("converge", "manufactured-solution convergence sweep");
  ExperimentConfig cc;
  std::string conv_out = "data";
  std::string conv_config;
  conv->add_option("--case", cc.case_name, "case name");
  conv->add_option("--scheme", cc.schemes, "schemes (jm, peers, afw_1..afw_3)");
  conv->add_option("--delta", cc.deltas, "scaling parameters");
  conv->add_option("--levels", cc.levels, "number of refinement levels");
  conv->add_option("--n", cc.n, "base cells per side");
  conv->add_option("--jitter", cc.jitter, "mesh jitter");
  conv->add_option("--seed", cc.seed, "jitter seed");
  conv->add_option("--out", conv_out, "output directory");
  conv->add_option("--config", conv_config, "experiment config file (sections override flags)");

  // robustness
  auto* rob = app.add_subcommand("robustness", "invariance/kernel/inf-sup reports");
  ExperimentConfig rc;
  rc.schemes = {"jm", "peers", "afw_1", "afw_3"};
  rc.levels = 2;
  rc.n = 3;
  std::string rob_out = "data";
  rob->add_option("--scheme", rc.schemes, "schemes");
  rob->add_option("--levels", rc.levels, "levels (coarse only)");
  rob->add_option("--n", rc.n, "base cells per side");
  rob->add_option("--jitter", rc.jitter, "mesh jitter");
  rob->add_option("--seed", rc.seed, "jitter seed");
  rob->add_option("--out", rob_out, "output directory");

  // transient
  auto* tr = app.add_subcommand("transient", "transient polar fluid time series");
  ExperimentConfig tc;
  tc.mode = "transient";
  tc.schemes = {"jm", "afw_1"};
  tc.deltas = {1e3};
  tc.n = 20;
  std::string tr_out = "data";
  tr->add_option("--scheme", tc.schemes, "schemes (jm, afw_1)");
  tr->add_option("--delta", tc.deltas, "forcing scale (first value used)");
  tr->add_option("--dt", tc.dt, "time step");
  tr->add_option("--T", tc.t_end, "final time");
  tr->add_option("--n", tc.n, "cells per side");
  tr->add_option("--jitter", tc.jitter, "mesh jitter");
  tr->add_option("--seed", tc.seed, "jitter seed");
  tr->add_option("--out", tr_out, "output directory");

  // stokes
  auto* st = app.add_subcommand("stokes", "pressure-robustness benchmark");
  ExperimentConfig sc;
  sc.case_name = "no_flow";
  sc.schemes = {"sv", "ht"};
  sc.levels = 4;
  std::string st_out = "data";
  st->add_option("--scheme", sc.schemes, "schemes (sv, ht)");
  st->add_option("--delta", sc.deltas, "Ra values");
  st->add_option("--levels", sc.levels, "number of refinement levels");
  st->add_option("--n", sc.n, "base cells per side");
  st->add_option("--jitter", sc.jitter, "mesh jitter");
  st->add_option("--seed", sc.seed, "jitter seed");
  st->add_option("--out", st_out, "output directory");

  // all
  auto* all = app.add_subcommand("all", "full benchmark roster plus manifest");
  RosterOptions ro;
  std::string all_out = "data";
  all->add_option("--n", ro.base_n, "base cells per side");
  all->add_option("--polar-n", ro.polar_n, "polar strong-scheme base resolution");
  all->add_option("--transient-n", ro.transient_n, "transient resolution");
  all->add_option("--levels", ro.max_levels, "cap on refinement levels");
  all->add_option("--jitter", ro.jitter, "mesh jitter");
  all->add_option("--seed", ro.seed, "jitter seed");
  all->add_option("--out", all_out, "output directory");

  // rates
  auto* rt = app.add_subcommand("rates", "observed convergence rates from a CSV");
  std::string rates_csv;
  rt->add_option("csv", rates_csv, "convergence CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      Mesh m = generate_unit_square(gm_n, gm_jitter, gm_seed);
      for (int l = 1; l < gm_levels; ++l) m = refine_uniform(m);
      dump_mesh(m, gm_out);
      std::cout << gm_out << " (" << m.num_vertices() << " vertices, " << m.num_cells()
                << " cells)\n";
    } else if (conv->parsed()) {
      if (!conv_config.empty()) {
        for (const ExperimentConfig& cfg : parse_config_file(conv_config)) {
          if (cfg.mode == "convergence") report(run_convergence(cfg, conv_out), conv_out);
          else if (cfg.mode == "stokes") report(run_stokes(cfg, conv_out), conv_out);
          else if (cfg.mode == "transient") report(run_transient_series(cfg, conv_out), conv_out);
          else if (cfg.mode == "robustness") report(run_robustness(cfg, conv_out), conv_out);
          else throw std::invalid_argument("unknown mode '" + cfg.mode + "'");
        }
      } else {
        report(run_convergence(cc, conv_out), conv_out);
      }
    } else if (rob->parsed()) {
      report(run_robustness(rc, rob_out), rob_out);
    } else if (tr->parsed()) {
      report(run_transient_series(tc, tr_out), tr_out);
    } else if (st->parsed()) {
      if (sc.deltas.empty()) sc.deltas = {10.0, 1e3, 1e5};
      report(run_stokes(sc, st_out), st_out);
    } else if (all->parsed()) {
      report(run_all_paper_experiments(all_out, ro), all_out);
    } else if (rt->parsed()) {
      std::cout << rate_table(rates_csv);
    }
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
