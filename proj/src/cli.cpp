#include "graphnls/cli.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "graphnls/bifurcation.hpp"
#include "graphnls/dynamics.hpp"
#include "graphnls/spectral.hpp"

namespace graphnls::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }
json nullable(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

/// Parameters shared by the graph-based subcommands.
struct RunConfig {
  std::string graph;
  std::string out = ".";
  double h = 0.05;
  double tol = 1e-8;
  double mu = 1.0;
  std::optional<double> r;
  double mass = 1.0;
  std::size_t max_iters = 20000;
  std::optional<double> runaway_radius;
  double step = 1.0;
  // continue
  double omega_max = 0.0;
  std::size_t steps = 20;
  double delta_min = 1e-4;
  // evolve
  double dt = 1e-3;
  double T = 1.0;
  std::string scheme = "strang";
  std::string initial = "ground-state";
  std::size_t snapshot_stride = 100;
  // sweep
  std::vector<double> masses;
  double mass_min = 0.0, mass_max = 0.0;
  std::size_t mass_count = 0;
  std::optional<std::size_t> threads;
  bool json_output = false;
};

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream o(p, std::ios::binary);
  if (!o) throw UsageError("cannot write '" + p.string() + "'");
  o << content;
}

void write_json(const fs::path& p, const json& j) { write_file(p, j.dump(2) + "\n"); }

std::string profile_csv(const GraphFunction& f, bool complex_values) {
  std::ostringstream os;
  os << (complex_values ? "edge,x,re,im,abs\n" : "edge,x,value\n");
  const Mesh& mesh = *f.mesh;
  for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
    for (std::size_t j = 0; j <= mesh.edge(e).intervals; ++j) {
      const Complex v = f.at(e, j);
      os << e << ',' << num(mesh.node_x(e, j)) << ',';
      if (complex_values) os << num(v.real()) << ',' << num(v.imag()) << ',' << num(std::abs(v)) << '\n';
      else os << num(v.real()) << '\n';
    }
  }
  return os.str();
}

GraphFunction read_profile_csv(const std::string& path, const MeshPtr& mesh) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open initial profile '" + path + "'");
  std::string line;
  std::getline(in, line);
  std::vector<std::string> cols;
  {
    std::stringstream hs(line);
    std::string c;
    while (std::getline(hs, c, ',')) cols.push_back(c);
  }
  auto col = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < cols.size(); ++i)
      if (cols[i] == name) return i;
    return std::nullopt;
  };
  const auto ce = col("edge"), cx = col("x");
  const auto cre = col("re") ? col("re") : col("value");
  const auto cim = col("im");
  if (!ce || !cx || !cre) throw UsageError("profile CSV needs edge, x and re (or value) columns");
  GraphFunction f = GraphFunction::zero(mesh);
  std::vector<char> seen(mesh->num_dofs(), 0);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cells.push_back(c);
    try {
      const auto e = static_cast<std::size_t>(std::stoul(cells.at(*ce)));
      const double x = std::stod(cells.at(*cx));
      const double re = std::stod(cells.at(*cre));
      const double im = cim ? std::stod(cells.at(*cim)) : 0.0;
      if (e >= mesh->num_edges()) throw UsageError("edge index out of range");
      const EdgeMesh& em = mesh->edge(e);
      const double pos = x / em.h;
      const auto j = static_cast<long>(std::llround(pos));
      if (j < 0 || j > static_cast<long>(em.intervals) || std::abs(pos - static_cast<double>(j)) > 1e-6)
        throw UsageError("x does not match a mesh node (use the same --h as the profile)");
      const long dof = em.dofs[static_cast<std::size_t>(j)];
      if (dof < 0) continue;
      f.values[dof] = Complex(re, im);
      seen[static_cast<std::size_t>(dof)] = 1;
    } catch (const UsageError& ex) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": " + ex.what());
    } catch (const std::exception&) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": malformed row");
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end())
    throw UsageError("profile '" + path + "' does not cover every mesh node");
  return f;
}

struct Problem {
  MeshPtr mesh;
  LinearForm form;
};

Problem load_problem(const RunConfig& cfg) {
  if (cfg.graph.empty()) throw UsageError("--graph is required");
  MetricGraph g = load_graph(cfg.graph);
  MeshPtr mesh = make_mesh(g, cfg.h);
  LinearForm form = assemble(mesh);
  return {mesh, std::move(form)};
}

NlsParams nls_params(const RunConfig& cfg) {
  NlsParams p;
  p.mu = cfg.mu;
  p.mass = cfg.mass;
  p.tol = cfg.tol;
  p.max_iters = cfg.max_iters;
  p.runaway_radius = cfg.runaway_radius;
  p.step = cfg.step;
  p.validate();
  return p;
}

fs::path out_dir(const RunConfig& cfg) {
  fs::path dir(cfg.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw UsageError("cannot create output directory '" + cfg.out + "'");
  return dir;
}

int cmd_spectrum(const RunConfig& cfg, std::ostream& out) {
  Problem prob = load_problem(cfg);
  const double tol = std::min(cfg.tol, 1e-10);
  SpectralResult res;
  try {
    res = linear_ground_state(prob.form, tol);
  } catch (const SpectralError& ex) {
    throw SolverFailure(ex.what());
  }
  const auto pots = graph_potentials(prob.mesh->graph());
  const double r = cfg.r.value_or(1.0 + 1.0 / cfg.mu);
  const auto rep = potential_report(*prob.mesh, pots, r);
  json j = {
      {"E0", res.E0},
      {"gap", res.gap},
      {"residual", res.residual},
      {"lambda2", res.lambda2},
      {"converged", res.converged},
      {"bound_state", res.bound_state()},
      {"degenerate", res.degenerate(tol)},
      {"admits_bifurcation", res.admits_bifurcation(tol)},
      {"iterations", res.iterations},
      {"dofs", prob.mesh->num_dofs()},
      {"h", prob.mesh->max_h()},
      {"truncation", prob.mesh->graph().truncation()},
      {"potential",
       {{"positive_l1", rep.positive_l1},
        {"negative_lr", rep.negative_lr},
        {"negative_lr_tail", rep.negative_lr_tail},
        {"negative_lr_suspect", rep.negative_lr_suspect()},
        {"r", r}}},
  };
  const fs::path dir = out_dir(cfg);
  write_json(dir / "spectrum.json", j);
  write_file(dir / "phi0.csv", profile_csv(res.phi0, false));
  out << j.dump(2) << "\n";
  return kExitOk;
}

json ground_state_json(const GroundStateResult& r, double m) {
  return {{"mass", m},
          {"energy", r.energy},
          {"omega", r.omega},
          {"residual", r.residual},
          {"status", std::string(to_string(r.status))},
          {"runaway_fraction", r.runaway_fraction},
          {"runaway_edge", nullable(r.runaway_edge)},
          {"iterations", r.iterations}};
}

int cmd_ground_state(const RunConfig& cfg, std::ostream& out) {
  Problem prob = load_problem(cfg);
  const NlsParams params = nls_params(cfg);
  const GroundStateResult r = minimize_ground_state(prob.form, params);
  const json j = ground_state_json(r, params.mass);
  const fs::path dir = out_dir(cfg);
  write_json(dir / "ground_state.json", j);
  write_file(dir / "ground_state.csv", profile_csv(r.psi, true));
  out << j.dump(2) << "\n";
  return r.status == GroundStateStatus::MaxIters ? kExitSolver : kExitOk;
}

int cmd_continue(const RunConfig& cfg, std::ostream& out) {
  Problem prob = load_problem(cfg);
  if (!(cfg.mu > 0.0 && cfg.mu < 2.0)) throw UsageError("--mu must lie in (0, 2)");
  const double tol = std::min(cfg.tol, 1e-10);
  SpectralResult spec;
  try {
    spec = linear_ground_state(prob.form, tol);
  } catch (const SpectralError& ex) {
    throw SolverFailure(ex.what());
  }
  if (!spec.admits_bifurcation(tol))
    throw SolverFailure("linear ground state does not admit a bifurcation (E0=" + num(spec.E0) +
                        ", gap=" + num(spec.gap) + ")");
  ContinuationOptions opts;
  opts.tol = tol;
  opts.delta_min = cfg.delta_min;
  const double omega_max = cfg.omega_max > 0.0 ? cfg.omega_max : spec.E0 + 0.1;
  Branch branch;
  try {
    branch = continue_branch(prob.form, spec, cfg.mu, omega_max, cfg.steps, opts);
  } catch (const BifurcationError& ex) {
    throw UsageError(ex.what());
  }
  std::ostringstream csv;
  csv << "omega,mass,energy,amplitude,residual\n";
  for (const auto& p : branch.points)
    csv << num(p.omega) << ',' << num(p.mass) << ',' << num(p.energy) << ',' << num(p.amplitude) << ','
        << num(p.residual) << '\n';
  json j = {{"E0", spec.E0},
            {"phi0_norm", phi0_nonlinear_norm(spec, cfg.mu)},
            {"points", branch.points.size()},
            {"truncated", branch.truncated ? json(*branch.truncated) : json(nullptr)}};
  if (branch.points.size() >= 5) {
    const AsymptoticFit fit = fit_asymptotics(branch);
    j["fit"] = {{"exponent", fit.exponent},
                {"expected_exponent", 1.0 / cfg.mu},
                {"prefactor", fit.prefactor},
                {"phi0_norm", fit.phi0_norm},
                {"energy_intercept", fit.energy_intercept},
                {"energy_slope", fit.energy_slope},
                {"fitted_E0", fit.fitted_E0}};
  } else {
    j["fit"] = nullptr;
  }
  const fs::path dir = out_dir(cfg);
  write_file(dir / "branch.csv", csv.str());
  write_json(dir / "asymptotics.json", j);
  out << j.dump(2) << "\n";
  return branch.truncated && branch.points.empty() ? kExitSolver : kExitOk;
}

int cmd_threshold(const RunConfig& cfg, std::ostream& out) {
  double value = 0.0;
  try {
    value = runaway_threshold(cfg.mu, cfg.mass);
  } catch (const BifurcationError& ex) {
    throw UsageError(ex.what());
  }
  if (cfg.json_output) {
    out << json{{"mu", cfg.mu},
                {"mass", cfg.mass},
                {"gamma", soliton_energy_constant(cfg.mu)},
                {"omega", soliton_frequency(cfg.mu, cfg.mass)},
                {"threshold", value}}
               .dump(2)
        << "\n";
  } else {
    out << num(value) << "\n";
  }
  return kExitOk;
}

int cmd_evolve(const RunConfig& cfg, std::ostream& out) {
  Problem prob = load_problem(cfg);
  EvolveOptions opts;
  opts.mu = cfg.mu;
  opts.dt = cfg.dt;
  opts.T = cfg.T;
  opts.snapshot_stride = cfg.snapshot_stride;
  opts.runaway_radius = cfg.runaway_radius;
  try {
    opts.scheme = scheme_from_string(cfg.scheme);
  } catch (const DynamicsError& ex) {
    throw UsageError(ex.what());
  }
  GraphFunction f0;
  if (cfg.initial == "ground-state") {
    const GroundStateResult gs = minimize_ground_state(prob.form, nls_params(cfg));
    if (gs.status != GroundStateStatus::Converged)
      throw SolverFailure("ground state did not converge (status " + std::string(to_string(gs.status)) + ")");
    f0 = gs.psi;
  } else if (cfg.initial.rfind("branch:", 0) == 0) {
    double omega = 0.0;
    try {
      omega = std::stod(cfg.initial.substr(7));
    } catch (const std::exception&) {
      throw UsageError("--initial branch:<omega> needs a number");
    }
    const SpectralResult spec = linear_ground_state(prob.form, 1e-10);
    if (!spec.admits_bifurcation(1e-10)) throw SolverFailure("no bifurcation from the linear ground state");
    if (!(omega > spec.E0)) throw UsageError("branch frequency must exceed E0=" + num(spec.E0));
    ContinuationOptions copts;
    copts.tol = 1e-11;
    copts.delta_min = std::min(1e-3, 0.5 * (omega - spec.E0));
    const Branch br = continue_branch(prob.form, spec, cfg.mu, omega, 12, copts);
    if (br.points.empty() || std::abs(br.points.back().omega - omega) > 1e-12 * std::max(1.0, omega))
      throw SolverFailure("continuation did not reach omega=" + num(omega) +
                          (br.truncated ? ": " + *br.truncated : std::string()));
    f0 = br.points.back().phi;
  } else {
    f0 = read_profile_csv(cfg.initial, prob.mesh);
  }
  Trajectory traj;
  try {
    traj = evolve(f0, prob.form, opts);
  } catch (const DynamicsError& ex) {
    throw SolverFailure(ex.what());
  }
  const ConservationReport rep = conservation_report(traj);
  const auto dist = orbital_distance(traj, f0);
  json snaps = json::array();
  const fs::path dir = out_dir(cfg);
  for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
    const Snapshot& s = traj.snapshots[k];
    char name[40];
    std::snprintf(name, sizeof name, "snapshot_%05zu.csv", k);
    write_file(dir / name, profile_csv(s.psi, true));
    snaps.push_back({{"t", s.t},
                     {"file", name},
                     {"mass", s.mass},
                     {"energy", s.energy},
                     {"runaway_fraction", s.runaway_fraction},
                     {"orbital_distance", dist[k]}});
  }
  json j = {{"scheme", std::string(to_string(traj.scheme))},
            {"dt", traj.dt},
            {"T", cfg.T},
            {"mass_drift", rep.mass_drift},
            {"energy_drift", rep.energy_drift},
            {"max_orbital_distance", *std::max_element(dist.begin(), dist.end())},
            {"snapshots", snaps}};
  write_json(dir / "conservation.json", j);
  out << json{{"mass_drift", rep.mass_drift}, {"energy_drift", rep.energy_drift}}.dump(2) << "\n";
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg, std::ostream& out) {
  std::vector<double> masses = cfg.masses;
  if (masses.empty() && cfg.mass_count > 0) {
    if (!(cfg.mass_min > 0.0) || !(cfg.mass_max >= cfg.mass_min))
      throw UsageError("mass range must satisfy 0 < mass-min <= mass-max");
    for (std::size_t k = 0; k < cfg.mass_count; ++k) {
      const double s = cfg.mass_count == 1 ? 0.0 : static_cast<double>(k) / static_cast<double>(cfg.mass_count - 1);
      masses.push_back(cfg.mass_min + s * (cfg.mass_max - cfg.mass_min));
    }
  }
  if (masses.empty()) throw UsageError("empty mass grid (use --masses or --mass-min/--mass-max/--mass-count)");
  Problem prob = load_problem(cfg);
  NlsParams base = nls_params(cfg);
  const std::size_t threads = cfg.threads.value_or(thread_cap());
  const SweepTable table = sweep(prob.form, base, masses, threads);
  std::ostringstream csv;
  csv << "mass,status,energy,omega,residual,runaway_fraction,runaway_edge,iterations\n";
  json rows = json::array();
  for (const auto& r : table.rows) {
    csv << num(r.mass) << ',' << to_string(r.status) << ',' << num(r.energy) << ',' << num(r.omega) << ','
        << num(r.residual) << ',' << num(r.runaway_fraction) << ','
        << (r.runaway_edge ? std::to_string(*r.runaway_edge) : std::string()) << ',' << r.iterations << '\n';
  }
  json j = {{"points", table.rows.size()},
            {"largest_converged_mass", nullable(table.largest_converged)},
            {"smallest_runaway_mass", nullable(table.smallest_runaway)}};
  const fs::path dir = out_dir(cfg);
  write_file(dir / "sweep.csv", csv.str());
  write_json(dir / "sweep.json", j);
  out << csv.str();
  return kExitOk;
}

}  // namespace

std::size_t thread_cap() {
  std::size_t cap = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("GRAPHNLS_THREADS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) cap = static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return cap;
}

SweepTable sweep(const LinearForm& form, const NlsParams& base, std::vector<double> masses, std::size_t threads) {
  if (masses.empty()) throw NlsError("empty mass grid");
  std::sort(masses.begin(), masses.end());
  masses.erase(std::unique(masses.begin(), masses.end()), masses.end());
  for (double m : masses)
    if (!(m > 0.0)) throw NlsError("sweep masses must be positive");
  const GraphFunction shape = auto_initial(form, 1.0);
  std::vector<SweepRow> rows(masses.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < masses.size(); k = next++) {
      NlsParams p = base;
      p.mass = masses[k];
      const GroundStateResult r = minimize_ground_state(form, p, shape);
      rows[k] = {masses[k], r.status, r.energy, r.omega, r.residual, r.runaway_fraction, r.runaway_edge,
                 r.iterations};
    }
  };
  const std::size_t n = std::clamp<std::size_t>(threads, 1, masses.size());
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  SweepTable table;
  table.rows = std::move(rows);
  for (const auto& r : table.rows) {
    if (r.status == GroundStateStatus::Converged) table.largest_converged = r.mass;
    if (r.status == GroundStateStatus::Runaway && !table.smallest_runaway) table.smallest_runaway = r.mass;
  }
  return table;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Ground states, bifurcation branches and dynamics of the focusing NLS on starlike metric graphs",
               "graphnls"};
  app.require_subcommand(1);
  app.set_help_flag("--help", "print this help and exit");  // -h is the mesh size
  RunConfig cfg;

  auto graph_opts = [&](CLI::App* sub) {
    sub->add_option("--graph", cfg.graph, "graph description (JSON)")->required();
    sub->add_option("--h", cfg.h, "target mesh size")->capture_default_str();
    sub->add_option("--out", cfg.out, "output directory")->capture_default_str();
    sub->add_option("--tol", cfg.tol, "residual tolerance")->capture_default_str();
  };
  auto flow_opts = [&](CLI::App* sub) {
    sub->add_option("--mu", cfg.mu, "nonlinearity power, 0 < mu < 2")->capture_default_str();
    sub->add_option("--max-iters", cfg.max_iters, "flow iteration cap")->capture_default_str();
    sub->add_option("--runaway-radius", cfg.runaway_radius, "coordinate beyond which external mass counts as escaped");
    sub->add_option("--step", cfg.step, "initial flow step")->capture_default_str();
  };

  auto* spectrum = app.add_subcommand("spectrum", "linear ground state and spectral gap");
  graph_opts(spectrum);
  spectrum->add_option("--mu", cfg.mu, "power used for the W- integrability report")->capture_default_str();
  spectrum->add_option("--r", cfg.r, "exponent for the W- integral (default 1 + 1/mu)")->check(CLI::PositiveNumber);

  auto* gs = app.add_subcommand("ground-state", "mass-constrained energy minimiser");
  graph_opts(gs);
  flow_opts(gs);
  gs->add_option("--mass", cfg.mass, "mass constraint")->capture_default_str();

  auto* cont = app.add_subcommand("continue", "continue the nonlinear branch from the linear ground state");
  graph_opts(cont);
  cont->add_option("--mu", cfg.mu, "nonlinearity power")->capture_default_str();
  cont->add_option("--omega-max", cfg.omega_max, "last frequency (default E0 + 0.1)");
  cont->add_option("--steps", cfg.steps, "number of branch points")->capture_default_str();
  cont->add_option("--delta-min", cfg.delta_min, "first offset omega - E0")->capture_default_str();

  auto* thr = app.add_subcommand("threshold", "energy of the escaping line soliton");
  thr->add_option("--mu", cfg.mu, "nonlinearity power")->required();
  thr->add_option("--mass", cfg.mass, "mass")->required();
  thr->add_flag("--json", cfg.json_output, "print a JSON summary");

  auto* ev = app.add_subcommand("evolve", "time evolution with conservation monitoring");
  graph_opts(ev);
  flow_opts(ev);
  ev->add_option("--mass", cfg.mass, "mass of the ground-state initial datum")->capture_default_str();
  ev->add_option("--dt", cfg.dt, "time step")->capture_default_str();
  ev->add_option("--T", cfg.T, "final time")->capture_default_str();
  ev->add_option("--scheme", cfg.scheme, "strang or cn")->capture_default_str();
  ev->add_option("--initial", cfg.initial, "<csv file> | ground-state | branch:<omega>")->capture_default_str();
  ev->add_option("--snapshot-stride", cfg.snapshot_stride, "steps between snapshots")->capture_default_str();

  auto* sw = app.add_subcommand("sweep", "converged/runaway table over a mass grid");
  graph_opts(sw);
  flow_opts(sw);
  sw->add_option("--masses", cfg.masses, "explicit masses")->delimiter(',');
  sw->add_option("--mass-min", cfg.mass_min, "first mass of a uniform grid");
  sw->add_option("--mass-max", cfg.mass_max, "last mass of a uniform grid");
  sw->add_option("--mass-count", cfg.mass_count, "number of grid masses");
  sw->add_option("--threads", cfg.threads, "worker count (default GRAPHNLS_THREADS or all cores)");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (spectrum->parsed()) return cmd_spectrum(cfg, out);
    if (gs->parsed()) return cmd_ground_state(cfg, out);
    if (cont->parsed()) return cmd_continue(cfg, out);
    if (thr->parsed()) return cmd_threshold(cfg, out);
    if (ev->parsed()) return cmd_evolve(cfg, out);
    if (sw->parsed()) return cmd_sweep(cfg, out);
  } catch (const SolverFailure& ex) {
    err << "graphnls: solver failure: " << ex.what() << "\n";
    return kExitSolver;
  } catch (const SpectralError& ex) {
    err << "graphnls: solver failure: " << ex.what() << "\n";
    return kExitSolver;
  } catch (const DynamicsError& ex) {
    err << "graphnls: solver failure: " << ex.what() << "\n";
    return kExitSolver;
  } catch (const ParseError& ex) {
    err << "graphnls: potential: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "graphnls: " << ex.what() << "\n";
    return kExitUsage;
  }
  err << app.help();
  return kExitUsage;
}

int run(int argc, char** argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace graphnls::cli
