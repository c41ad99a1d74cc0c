#include "hrmix/experiments.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace hrmix {

namespace {

std::string scheme_file_token(const SchemeConfig& cfg)
{
  switch (cfg.scheme) {
    case Scheme::JMK: return "jm_1";
    case Scheme::PEERS: return "peers_1";
    case Scheme::AFW: return "afw_" + std::to_string(cfg.k);
    case Scheme::TaylorHood: return "ht";
    case Scheme::ScottVogelius: return "sv";
  }
  return "?";
}

// Elasticity chains refine one base mesh; the Stokes chain regenerates each
// level independently, since uniform refinement re-creates locally parallel
// edge patterns that superconverge past the nominal rates.
std::vector<std::shared_ptr<const Mesh>> mesh_chain(int n, double jitter, std::uint64_t seed,
                                                    int levels, bool independent = false)
{
  std::vector<std::shared_ptr<const Mesh>> chain;
  if (independent) {
    for (int l = 0; l < levels; ++l)
      chain.push_back(std::make_shared<Mesh>(generate_unit_square(n << l, jitter, seed + l)));
    return chain;
  }
  Mesh m = generate_unit_square(n, jitter, seed);
  for (int l = 0; l < levels; ++l) {
    chain.push_back(std::make_shared<Mesh>(m));
    if (l + 1 < levels) m = refine_uniform(m);
  }
  return chain;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  for (const auto& line : lines) out << line << "\n";
}

std::string trim(const std::string& s)
{
  auto b = s.find_first_not_of(" \t\r\n");
  auto e = s.find_last_not_of(" \t\r\n");
  return (b == std::string::npos) ? std::string() : s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s)
{
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

std::string format_shortest(double v)
{
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_delta(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

void validate_config(const ExperimentConfig& config)
{
  if (config.levels < 1) throw std::invalid_argument("config: need at least one level");
  if (config.n < 1) throw std::invalid_argument("config: n must be >= 1");
  for (double d : config.deltas)
    if (d <= 0.0) throw std::invalid_argument("config: deltas must be positive");
  bool stokes_case = (config.case_name == "no_flow");
  for (const auto& s : config.schemes) {
    SchemeConfig sc = parse_scheme(s);
    if (config.mode == "transient") {
      if (!(sc.scheme == Scheme::JMK || (sc.scheme == Scheme::AFW && sc.k == 1)))
        throw std::invalid_argument("config: transient mode supports jm and afw_1");
      continue;
    }
    if (sc.is_stokes() != stokes_case)
      throw std::invalid_argument("config: case '" + config.case_name +
                                  "' is incompatible with scheme '" + s + "'");
  }
  if (config.mode != "transient")
    case_by_name(config.case_name, config.deltas.empty() ? 1.0 : config.deltas.front());
}

std::vector<ExperimentConfig> parse_config_file(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::vector<ExperimentConfig> configs;
  ExperimentConfig current;
  bool open_section = false;
  std::string line;
  auto flush = [&]() {
    if (open_section) {
      validate_config(current);
      configs.push_back(current);
    }
  };
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    if (line.front() == '[' && line.back() == ']') {
      flush();
      current = ExperimentConfig{};
      open_section = true;
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::runtime_error("config: malformed line '" + line + "'");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key == "mode") current.mode = value;
    else if (key == "case") current.case_name = value;
    else if (key == "schemes") current.schemes = split_list(value);
    else if (key == "deltas") {
      current.deltas.clear();
      for (const auto& d : split_list(value)) current.deltas.push_back(std::stod(d));
    } else if (key == "levels") current.levels = std::stoi(value);
    else if (key == "n") current.n = std::stoi(value);
    else if (key == "jitter") current.jitter = std::stod(value);
    else if (key == "seed") current.seed = std::stoull(value);
    else if (key == "dt") current.dt = std::stod(value);
    else if (key == "t_end") current.t_end = std::stod(value);
    else throw std::runtime_error("config: unknown key '" + key + "'");
  }
  flush();
  return configs;
}

std::vector<CsvFile> run_convergence(const ExperimentConfig& config, const std::string& out_dir)
{
  validate_config(config);
  std::filesystem::create_directories(out_dir);
  auto chain = mesh_chain(config.n, config.jitter, config.seed, config.levels);

  std::vector<CsvFile> files;
  for (const auto& scheme_name : config.schemes) {
    SchemeConfig scheme = parse_scheme(scheme_name);
    const int nd = static_cast<int>(config.deltas.size());
    std::vector<std::vector<ErrorReport>> reports(nd);

    for (int level = 0; level < config.levels; ++level) {
      SchemeSpaces s = build_scheme(chain[level], scheme);
      ManufacturedCase c0 = case_by_name(config.case_name, config.deltas.front());
      SaddlePointSystem sys =
          assemble_saddle(s, c0.params, rhs_data(c0, s.quad_degree), c0.trace_target);
      SaddleSolver solver(sys);
      for (int di = 0; di < nd; ++di) {
        ManufacturedCase c = case_by_name(config.case_name, config.deltas[di]);
        if (level == 0) validate_case(c);
        VecX gs, gu, gx;
        assemble_rhs(s, rhs_data(c, s.quad_degree), gs, gu, gx);
        Solution sol = solver.solve(gs, gu, gx);
        if (c.params.incompressible()) {
          sys.trace_target = c.trace_target;
          sol = postprocess_trace(sol, sys);
        }
        ErrorReport rep = compute_errors(sol, c, s);
        rep.ref = level;
        reports[di].push_back(rep);
      }
    }

    std::vector<std::string> lines = {"ref,Bnd,sigma_error,displacement_error,omega_err"};
    for (int di = 0; di < nd; ++di) {
      for (const ErrorReport& r : reports[di]) {
        std::string omega = (r.omega_err < 0.0) ? "" : format_shortest(r.omega_err);
        lines.push_back(std::to_string(r.ref) + "," + format_delta(config.deltas[di]) + "," +
                        format_shortest(r.sigma_error) + "," +
                        format_shortest(r.displacement_error) + "," + omega);
      }
    }
    std::string name = config.case_name + "_" + scheme_file_token(scheme) + ".csv";
    write_lines(out_dir + "/" + name, lines);
    files.push_back({name, static_cast<int>(lines.size()) - 1});
  }
  return files;
}

std::vector<CsvFile> run_stokes(const ExperimentConfig& config, const std::string& out_dir)
{
  validate_config(config);
  std::filesystem::create_directories(out_dir);
  auto chain = mesh_chain(config.n, config.jitter, config.seed, config.levels, true);

  std::vector<CsvFile> files;
  for (const auto& scheme_name : config.schemes) {
    SchemeConfig scheme = parse_scheme(scheme_name);
    const int nd = static_cast<int>(config.deltas.size());
    std::vector<std::vector<ErrorReport>> reports(nd);
    for (int level = 0; level < config.levels; ++level) {
      StokesSpaces s = build_stokes(chain[level], scheme);
      StokesSystem sys = assemble_stokes(s, case_stokes_noflow(config.deltas.front()));
      StokesSolver solver(s, sys);
      for (int di = 0; di < nd; ++di) {
        ManufacturedCase c = case_stokes_noflow(config.deltas[di]);
        if (level == 0) validate_case(c);
        StokesSolution sol = solver.solve(assemble_stokes_forcing(s, c));
        ErrorReport rep = compute_stokes_errors(sol, c, s);
        rep.ref = level;
        reports[di].push_back(rep);
      }
    }
    std::vector<std::string> lines = {"ref,Ra,velocity_error,pressure_error,divergence_error"};
    for (int di = 0; di < nd; ++di) {
      for (const ErrorReport& r : reports[di]) {
        lines.push_back(std::to_string(r.ref) + "," + format_delta(config.deltas[di]) + "," +
                        format_shortest(r.velocity_error) + "," +
                        format_shortest(r.pressure_error) + "," +
                        format_shortest(r.divergence_error));
      }
    }
    std::string name = config.case_name + "_" + scheme_file_token(scheme) + ".csv";
    write_lines(out_dir + "/" + name, lines);
    files.push_back({name, static_cast<int>(lines.size()) - 1});
  }
  return files;
}

std::vector<CsvFile> run_robustness(const ExperimentConfig& config, const std::string& out_dir)
{
  std::filesystem::create_directories(out_dir);
  auto chain = mesh_chain(config.n, config.jitter, config.seed, config.levels);

  std::vector<RobustnessReport> reports;
  for (const auto& scheme_name : config.schemes) {
    SchemeConfig scheme = parse_scheme(scheme_name);
    for (int level = 0; level < config.levels; ++level) {
      SchemeSpaces s = build_scheme(chain[level], scheme);
      ManufacturedCase shift_case = case_example2(10.0);
      RobustnessReport rep;
      rep.scheme = scheme_file_token(scheme);
      rep.level = level;
      rep.invariance_defect =
          shift_invariance_test(s, shift_case, shift_case.u, shift_case.grad_u).sigma_defect;
      rep.kernel_violation = kernel_inclusion_probe(s, 20, 17).violation();
      rep.beta_h = infsup_estimate(s);
      rep.alpha_h = kernel_coercivity_estimate(s, MaterialParams{1e-4, kInfLambda});
      if (!s.rotation) rep.c_phi = phi_operator_norm_estimate(s, 10, 11);
      reports.push_back(std::move(rep));
    }
  }

  std::vector<std::string> lines = {
      "scheme,level,invariance_defect,kernel_violation,beta_h,alpha_h,c_phi"};
  for (const RobustnessReport& r : reports)
    lines.push_back(r.scheme + "," + std::to_string(r.level) + "," +
                    format_shortest(r.invariance_defect) + "," +
                    format_shortest(r.kernel_violation) + "," + format_shortest(r.beta_h) + "," +
                    format_shortest(r.alpha_h) + "," +
                    (r.c_phi < 0.0 ? "" : format_shortest(r.c_phi)));
  write_lines(out_dir + "/robustness.csv", lines);
  return {{"robustness.csv", static_cast<int>(reports.size())}};
}

std::vector<CsvFile> run_transient_series(const ExperimentConfig& config,
                                          const std::string& out_dir)
{
  validate_config(config);
  std::filesystem::create_directories(out_dir);
  auto mesh = std::make_shared<Mesh>(generate_unit_square(config.n, config.jitter, config.seed));

  const std::vector<double> snap_times = {0.5, 1.0, 1.5};
  std::vector<CsvFile> files;
  for (const auto& scheme_name : config.schemes) {
    SchemeConfig scheme = parse_scheme(scheme_name);
    SchemeSpaces s = build_scheme(mesh, scheme);
    double delta = config.deltas.empty() ? 1e3 : config.deltas.front();
    TransientResult r = run_transient(s, delta, config.dt, config.t_end, snap_times);

    std::vector<std::string> lines = {"t,sigma_l2"};
    for (std::size_t i = 0; i < r.t.size(); ++i)
      lines.push_back(format_shortest(r.t[i]) + "," + format_shortest(r.sigma_l2[i]));
    std::string name = "transient_" + scheme_file_token(scheme) + ".csv";
    write_lines(out_dir + "/" + name, lines);
    files.push_back({name, static_cast<int>(lines.size()) - 1});

    for (const TransientSnapshot& snap : r.snapshots) {
      std::vector<std::string> rows;
      for (std::size_t i = 0; i < snap.centroids.size(); ++i)
        rows.push_back(format_shortest(snap.centroids[i].x()) + " " +
                       format_shortest(snap.centroids[i].y()) + " " +
                       format_shortest(snap.magnitude[i]));
      char tbuf[16];
      std::snprintf(tbuf, sizeof(tbuf), "%.1f", snap.t);
      std::string sname = "transient_" + scheme_file_token(scheme) + "_snapshot_" + tbuf + ".txt";
      write_lines(out_dir + "/" + sname, rows);
      files.push_back({sname, static_cast<int>(rows.size())});
    }
  }
  return files;
}

std::string rate_table(const std::string& csv_path)
{
  std::ifstream in(csv_path);
  if (!in) throw std::runtime_error("rate_table: cannot open " + csv_path);
  std::string header;
  if (!std::getline(in, header)) throw std::runtime_error("rate_table: empty file");
  std::vector<std::string> cols = split_list(header);
  if (cols.size() < 3) throw std::runtime_error("rate_table: malformed header");

  struct Row {
    int ref;
    std::string group;
    std::vector<double> values;  // NaN for blank
  };
  std::vector<Row> rows;
  std::string line;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    std::vector<std::string> parts;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(trim(item));
    while (parts.size() < cols.size()) parts.push_back("");
    Row r;
    r.ref = std::stoi(parts[0]);
    r.group = parts[1];
    for (std::size_t i = 2; i < cols.size(); ++i)
      r.values.push_back(parts[i].empty() ? std::nan("") : std::stod(parts[i]));
    rows.push_back(std::move(r));
  }
  if (rows.size() < 2) throw std::runtime_error("rate_table: need at least two levels");

  // Roundoff-floor flag: a column sitting many orders below the group's
  // largest error is noise, not a convergence signal. The group-wide maximum
  // stands in for the data scale.
  std::map<std::string, double> group_scale;
  for (const Row& r : rows)
    for (double v : r.values)
      if (!std::isnan(v)) group_scale[r.group] = std::max(group_scale[r.group], std::abs(v));
  const double eps = std::numeric_limits<double>::epsilon();

  std::vector<std::string> groups;
  for (const Row& r : rows)
    if (std::find(groups.begin(), groups.end(), r.group) == groups.end())
      groups.push_back(r.group);

  std::ostringstream md;
  md << "| " << cols[1] << " | levels |";
  for (std::size_t i = 2; i < cols.size(); ++i) md << " " << cols[i] << " |";
  md << "\n|---|---|";
  for (std::size_t i = 2; i < cols.size(); ++i) md << "---|";
  md << "\n";
  for (const std::string& g : groups) {
    std::vector<const Row*> level_rows;
    for (const Row& r : rows)
      if (r.group == g) level_rows.push_back(&r);
    std::sort(level_rows.begin(), level_rows.end(),
              [](const Row* a, const Row* b) { return a->ref < b->ref; });
    for (std::size_t l = 0; l + 1 < level_rows.size(); ++l) {
      md << "| " << g << " | " << level_rows[l]->ref << "->" << level_rows[l + 1]->ref << " |";
      for (std::size_t i = 0; i + 2 < cols.size(); ++i) {
        double e0 = level_rows[l]->values[i], e1 = level_rows[l + 1]->values[i];
        if (std::isnan(e0) || std::isnan(e1)) {
          md << "  |";
        } else if (e0 <= 1e3 * eps * group_scale[g] || e1 <= 1e3 * eps * group_scale[g]) {
          md << " floor |";
        } else {
          char buf[32];
          std::snprintf(buf, sizeof(buf), "%.2f", std::log2(e0 / e1));
          md << " " << buf << " |";
        }
      }
      md << "\n";
    }
  }
  return md.str();
}

std::vector<CsvFile> run_all_paper_experiments(const std::string& out_dir,
                                               const RosterOptions& opts)
{
  std::filesystem::create_directories(out_dir);
  std::vector<CsvFile> files;
  auto add = [&files](const std::vector<CsvFile>& more) {
    files.insert(files.end(), more.begin(), more.end());
  };
  auto conv = [&](const std::string& case_name, std::vector<std::string> schemes, int levels,
                  int n) {
    ExperimentConfig cfg;
    cfg.case_name = case_name;
    cfg.schemes = std::move(schemes);
    cfg.levels = std::min(levels, opts.max_levels);
    cfg.n = n;
    cfg.jitter = opts.jitter;
    cfg.seed = opts.seed;
    add(run_convergence(cfg, out_dir));
  };

  conv("rigid_body_motion", {"jm", "peers", "afw_1"}, 4, opts.base_n);
  conv("transverse_isotropic", {"jm", "peers", "afw_1"}, 4, opts.base_n);
  conv("transverse_isotropic", {"afw_2", "afw_3"}, 3, opts.base_n);
  conv("polar", {"jm"}, 3, opts.polar_n);
  conv("polar", {"afw_3"}, 3, opts.base_n);
  conv("polar_extra", {"jm"}, 4, opts.base_n);
  conv("polar_extra", {"afw_3"}, 3, opts.base_n);

  {
    ExperimentConfig cfg;
    cfg.case_name = "no_flow";
    cfg.schemes = {"sv", "ht"};
    cfg.levels = std::min(4, opts.max_levels);
    cfg.n = opts.base_n;
    cfg.jitter = opts.jitter;
    cfg.seed = opts.seed;
    add(run_stokes(cfg, out_dir));
  }
  {
    ExperimentConfig cfg;
    cfg.mode = "transient";
    cfg.schemes = {"jm", "afw_1"};
    cfg.deltas = {1e3};
    cfg.n = opts.transient_n;
    cfg.jitter = opts.jitter;
    cfg.seed = opts.seed;
    cfg.dt = opts.dt;
    cfg.t_end = opts.t_end;
    add(run_transient_series(cfg, out_dir));
  }

  std::vector<std::string> manifest;
  for (const CsvFile& f : files)
    manifest.push_back(f.name + " " + std::to_string(f.rows));
  manifest.push_back("polar_hz_3.csv absent: Hu-Zhang scheme not implemented");
  manifest.push_back("polar_extra_hz_3.csv absent: Hu-Zhang scheme not implemented");
  write_lines(out_dir + "/manifest.txt", manifest);
  files.push_back({"manifest.txt", static_cast<int>(manifest.size())});
  return files;
}

}  // namespace hrmix
