// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "graphnls/bifurcation.hpp"
#include "graphnls/dynamics.hpp"
#include "graphnls/nls.hpp"
#include "graphnls/potential.hpp"
#include "graphnls/spectral.hpp"
#include "support/fixtures.hpp"
#include "support/parser_cases.hpp"
#include "support/reference_eval.hpp"

using namespace graphnls;
namespace ts = testing_support;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += " FAILED[" + what + "]";
    }
  }
  void note(const char* fmt, double v) {
    char buf[96];
    std::snprintf(buf, sizeof buf, fmt, v);
    detail += " ";
    detail += buf;
  }
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

double star_E0(std::size_t arms, double alpha, double h) {
  return linear_ground_state(assemble(make_mesh(make_star(arms, alpha, 40.0), h))).E0;
}

// Line soliton of mass m on the Kirchhoff line, moving with speed v.
GraphFunction moving_soliton(const MeshPtr& mesh, double m, double v) {
  const double w = soliton_frequency(1.0, m);
  return GraphFunction::sample(mesh, [&](std::size_t e, double x) {
    const double s = e == 0 ? x : -x;
    return soliton_profile(1.0, w, s) * std::polar(1.0, 0.5 * v * s);
  });
}

struct DeltaBranch {
  LinearForm form;
  SpectralResult spec;
  Branch branch;
};

const DeltaBranch& delta_branch() {
  static const DeltaBranch b = [] {
    LinearForm form = assemble(make_mesh(make_star(3, -3.0, 40.0), 0.01));
    SpectralResult spec = linear_ground_state(form, 1e-11);
    std::vector<double> omegas;
    const int n = 15;
    for (int k = 0; k < n; ++k) omegas.push_back(spec.E0 + 1e-3 * std::pow(100.0, double(k) / (n - 1)));
    Branch br = continue_branch(form, spec, 1.0, omegas, {1e-3, 1e-11, 50});
    return DeltaBranch{std::move(form), std::move(spec), std::move(br)};
  }();
  return b;
}

Outcome criterion1() {
  Outcome o;
  const auto t0 = Clock::now();
  const double e01 = star_E0(2, -2.0, 0.01);
  const double e02 = star_E0(2, -2.0, 0.02);
  const double e04 = star_E0(2, -2.0, 0.04);
  const double err = rel(e01, 1.0);
  const double p1 = std::log2(std::abs(e04 - 1.0) / std::abs(e02 - 1.0));
  const double p2 = std::log2(std::abs(e02 - 1.0) / std::abs(e01 - 1.0));
  const double t = seconds_since(t0);
  o.note("E0=%.10f", e01);
  o.note("relerr=%.2e", err);
  o.note("order(0.04->0.02)=%.3f", p1);
  o.note("order(0.02->0.01)=%.3f", p2);
  o.note("time=%.2fs", t);
  o.require(err < 1e-3, "E0 within 1e-3");
  o.require(std::abs(p1 - 2.0) < 0.2 && std::abs(p2 - 2.0) < 0.2, "second order");
  o.require(t < 5.0, "runtime < 5 s");
  return o;
}

Outcome criterion2() {
  Outcome o;
  const auto t0 = Clock::now();
  for (std::size_t n : {3u, 4u, 5u}) {
    const double e = star_E0(n, -double(n), 0.01);
    const double err = rel(e, 1.0);
    o.note(("N=" + std::to_string(n) + " relerr=%.2e").c_str(), err);
    o.require(err < 1e-3, "N=" + std::to_string(n));
  }
  const double t = seconds_since(t0);
  o.note("time=%.2fs", t);
  o.require(t < 20.0, "runtime < 20 s");
  return o;
}

Outcome criterion3() {
  Outcome o;
  const DeltaBranch& d = delta_branch();
  o.require(!d.branch.truncated && d.branch.points.size() == 15, "complete branch");
  const AsymptoticFit fit = fit_asymptotics(d.branch);
  o.note("exponent=%.5f", fit.exponent);
  o.note("prefactor=%.5f", fit.prefactor);
  o.note("oracle=%.5f", 9.0 / 3.0);
  o.require(std::abs(fit.exponent - 1.0) <= 0.05, "exponent 1 +- 0.05");
  o.require(rel(fit.prefactor, 3.0) <= 0.05, "prefactor within 5%");
  return o;
}

Outcome criterion4() {
  Outcome o;
  const AsymptoticFit fit = fit_asymptotics(delta_branch().branch);
  o.note("intercept=%.6f", fit.energy_intercept);
  o.require(rel(fit.energy_intercept, -1.0) <= 0.05, "intercept -1 within 5%");
  return o;
}

Outcome criterion5() {
  Outcome o;
  const auto t0 = Clock::now();
  const double gamma = soliton_energy_constant(1.0);
  o.note("gamma1-1/48=%.2e", gamma - 1.0 / 48.0);
  o.require(std::abs(gamma - 1.0 / 48.0) <= 1e-10, "gamma1 to 1e-10");
  const LinearForm form = assemble(make_mesh(make_star(2, 0.0, 40.0), 0.01));
  NlsParams p;
  p.mass = 2.0;
  const GroundStateResult r = minimize_ground_state(form, p);
  const double t = seconds_since(t0);
  o.note("energy=%.8f", r.energy);
  o.note("relerr=%.2e", rel(r.energy, -1.0 / 6.0));
  o.note("time=%.2fs", t);
  o.require(r.status == GroundStateStatus::Converged, "minimizer converged");
  o.require(rel(r.energy, -1.0 / 6.0) <= 0.01, "energy within 1%");
  o.require(t < 60.0, "runtime < 60 s");
  return o;
}

Outcome criterion6() {
  Outcome o;
  {
    const LinearForm form = assemble(make_mesh(make_star(3, 0.0, 40.0), 0.02));
    NlsParams p;
    p.mass = 1.0;
    const GroundStateResult r = minimize_ground_state(form, p);
    o.detail += " kirchhoff:" + std::string(to_string(r.status));
    o.note("edge=%.0f", r.runaway_edge ? double(*r.runaway_edge) : -1.0);
    o.note("fraction=%.3f", r.runaway_fraction);
    o.require(r.status == GroundStateStatus::Runaway && r.runaway_edge.has_value(), "runaway with edge");
  }
  {
    const LinearForm form = assemble(make_mesh(make_star(3, -3.0, 40.0), 0.01));
    NlsParams p;
    p.mass = 0.2;
    const GroundStateResult r = minimize_ground_state(form, p);
    o.detail += " delta:" + std::string(to_string(r.status));
    o.note("residual=%.2e", r.residual);
    o.require(r.status == GroundStateStatus::Converged && r.residual <= 1e-8, "converged, residual <= 1e-8");
  }
  return o;
}

Outcome criterion7() {
  Outcome o;
  const VerdictReport v = existence_verdict(delta_branch().branch, 1.0, 0.1);
  o.note("E(0.1)=%.6f", v.branch_energy);
  o.note("threshold=%.3e", v.threshold);
  o.require(v.branch_energy < v.threshold && v.verdict == Verdict::ExpectedExistence, "strictly below threshold");
  return o;
}

Outcome criterion8() {
  Outcome o;
  const MeshPtr mesh = make_mesh(make_star(2, 0.0, 40.0), 0.05);
  const LinearForm form = assemble(mesh);
  NlsParams p;
  p.mass = 2.0;
  p.tol = 1e-10;
  const GroundStateResult gs = minimize_ground_state(form, p);
  o.require(gs.status == GroundStateStatus::Converged, "ground state");

  EvolveOptions opts;
  opts.T = 10.0;
  opts.snapshot_stride = 1000;
  auto drift = [&](const GraphFunction& f, double dt) {
    opts.dt = dt;
    return conservation_report(evolve(f, form, opts));
  };
  const ConservationReport s1 = drift(gs.psi, 1e-3);
  const ConservationReport s2 = drift(gs.psi, 5e-4);
  o.note("mass=%.2e", s1.mass_drift);
  o.note("energy=%.2e", s1.energy_drift);
  o.note("standing ratio=%.2f", s1.energy_drift / s2.energy_drift);
  o.require(s1.mass_drift < 1e-6 && s1.energy_drift < 1e-6, "drift < 1e-6");

  // The standing soliton's splitting error sits below rounding, so the
  // dt-ratio is measured on the same soliton moving at speed 1/2.
  const GraphFunction moving = moving_soliton(mesh, 2.0, 0.5);
  const ConservationReport m1 = drift(moving, 1e-3);
  const ConservationReport m2 = drift(moving, 5e-4);
  const double ratio = m1.energy_drift / m2.energy_drift;
  o.note("moving energy=%.2e", m1.energy_drift);
  o.note("ratio=%.3f", ratio);
  o.require(m1.mass_drift < 1e-6 && m1.energy_drift < 1e-6, "moving drift < 1e-6");
  o.require(ratio >= 3.5 && ratio <= 4.5, "halving ratio in [3.5, 4.5]");
  return o;
}

Outcome criterion9() {
  Outcome o;
  const double levels[2][2] = {{0.04, 0.02}, {0.02, 0.01}};
  double sups[2] = {0.0, 0.0};
  for (int l = 0; l < 2; ++l) {
    const double h = levels[l][0], dt = levels[l][1];
    const LinearForm form = assemble(make_mesh(make_star(3, -3.0, 30.0), h));
    const SpectralResult spec = linear_ground_state(form, 1e-11);
    const double omega = spec.E0 + 0.5;
    const Branch b = continue_branch(form, spec, 1.0, omega, 8, {1e-2, 1e-12, 50});
    EvolveOptions opts;
    opts.dt = dt;
    opts.T = 10.0;
    opts.snapshot_stride = 10;
    const auto dist = orbital_distance(evolve(b.points.back().phi, form, opts), b.points.back().phi);
    for (double d : dist) sups[l] = std::max(sups[l], d);
    const double bound = 5.0 * (h * h + dt * dt);
    o.note(l == 0 ? "coarse sup=%.2e" : "fine sup=%.2e", sups[l]);
    o.note("bound=%.2e", bound);
    o.require(sups[l] <= bound, l == 0 ? "coarse level" : "fine level");
  }
  return o;
}

Outcome criterion10() {
  Outcome o;
  const MeshPtr mesh = make_mesh(ts::tadpole_graph(2.0, 20.0), 0.05);
  const double diam = mesh->graph().truncated_diameter();
  std::vector<double> radii{0.0};
  for (int k = 1; k <= 12; ++k) radii.push_back(diam * k / 10.0);
  std::mt19937_64 rng(1001);
  int zero = 0, mono = 0, limit = 0, dic1 = 0, dic2 = 0;
  for (int n = 0; n < 200; ++n) {
    const GraphFunction f = ts::random_function(mesh, rng);
    const auto rho = concentration_profile(f, radii);
    zero += rho.front() == 0.0;
    bool up = true;
    for (std::size_t i = 1; i < rho.size(); ++i) up = up && rho[i] >= rho[i - 1];
    mono += up;
    limit += std::abs(rho.back() - mass(f)) <= 1e-13 * mass(f);
    const DichotomySplit d = dichotomy_split(f, ts::random_point(mesh->graph(), rng),
                                             std::uniform_real_distribution<double>(0.2, 8.0)(rng));
    bool disjoint = true, bounded = true;
    for (Eigen::Index i = 0; i < f.values.size(); ++i) {
      disjoint = disjoint && (d.R.values[i] == Complex(0.0) || d.S.values[i] == Complex(0.0));
      bounded = bounded && std::abs(d.R.values[i]) + std::abs(d.S.values[i]) <= std::abs(f.values[i]);
    }
    dic1 += disjoint;
    dic2 += bounded;
  }
  o.note("rho0=%.0f/200", zero);
  o.note("monotone=%.0f/200", mono);
  o.note("limit=%.0f/200", limit);
  o.note("dic1=%.0f/200", dic1);
  o.note("dic2=%.0f/200", dic2);
  o.require(zero == 200 && mono == 200 && limit == 200, "concentration function");
  o.require(dic1 == 200 && dic2 == 200, "dichotomy split");
  return o;
}

Outcome criterion11() {
  Outcome o;
  const MetricGraph g = ts::mixed_graph();
  std::mt19937_64 rng(1101);
  int sym = 0, tri = 0, oracle = 0;
  for (int k = 0; k < 1000; ++k) {
    const GraphPoint p = ts::random_point(g, rng), q = ts::random_point(g, rng), r = ts::random_point(g, rng);
    const double pq = g.distance(p, q);
    sym += std::abs(pq - g.distance(q, p)) <= 1e-14 * std::max(1.0, pq);
    tri += pq <= g.distance(p, r) + g.distance(r, q) + 1e-12;
    oracle += std::abs(pq - ts::oracle_distance(g, p, q)) <= 1e-12 * std::max(1.0, pq);
  }
  const double edges = double(g.num_edges());
  int vol = 0;
  std::uniform_real_distribution<double> ut(0.0, 10.0);
  for (int k = 0; k < 500; ++k) {
    const double t = ut(rng);
    vol += g.ball_volume(ts::random_point(g, rng), t) <= 2.0 * edges * t + 1e-12;
  }
  o.note("symmetric=%.0f/1000", sym);
  o.note("triangle=%.0f/1000", tri);
  o.note("oracle=%.0f/1000", oracle);
  o.note("volume=%.0f/500", vol);
  o.require(sym == 1000 && tri == 1000 && oracle == 1000, "metric");
  o.require(vol == 500, "ball volume bound");
  return o;
}

Outcome criterion12() {
  Outcome o;
  int cases = 0, ok = 0;
  for (const auto& c : ts::golden_value_cases()) {
    ++cases;
    try {
      ok += std::abs(parse_potential(c.src)(c.x) - c.expected) <= 1e-15 * std::max(1.0, std::abs(c.expected));
    } catch (const std::exception&) {
    }
  }
  for (const auto& c : ts::golden_error_cases()) {
    ++cases;
    try {
      parse_potential(c.src);
    } catch (const ParseError& e) {
      ok += e.offset() == c.offset;
    }
  }
  std::mt19937_64 rng(1201);
  std::uniform_real_distribution<double> ux(0.05, 5.0);
  double worst = 0.0;
  int compared = 0;
  for (const auto& c : ts::golden_value_cases()) {
    const PotentialExpr e = parse_potential(c.src);
    for (int k = 0; k < 40; ++k) {
      const double x = ux(rng);
      double a, b;
      try {
        a = e(x);
      } catch (const EvalError&) {
        continue;
      }
      b = ts::reference_eval(c.src, x);
      worst = std::max(worst, std::abs(a - b) / std::max(1.0, std::abs(b)));
      ++compared;
    }
  }
  o.note("golden=%.0f", ok);
  o.note("of %.0f", cases);
  o.note("differential max=%.2e", worst);
  o.note("points=%.0f", compared);
  o.require(cases == 50 && ok == 50, "golden suite");
  o.require(worst <= 1e-14, "differential agreement 1e-14");
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"delta-on-line spectrum", criterion1},
      {"N-star spectrum", criterion2},
      {"bifurcation slope", criterion3},
      {"energy asymptotics", criterion4},
      {"soliton threshold", criterion5},
      {"runaway detection", criterion6},
      {"existence verdict", criterion7},
      {"conservation", criterion8},
      {"standing wave", criterion9},
      {"concentration-compactness properties", criterion10},
      {"geometry properties", criterion11},
      {"parser", criterion12},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string(" exception: ") + e.what();
    }
    failed += !o.pass;
    std::printf("%s %2zu %s:%s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
