#include "graphnls/nls.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/SparseCholesky>

namespace graphnls {

void NlsParams::validate() const {
  if (!(mu > 0.0 && mu < 2.0)) throw NlsError("mu must lie in (0, 2)");
  if (!(mass > 0.0) || !std::isfinite(mass)) throw NlsError("mass must be positive");
  if (!(tol > 0.0)) throw NlsError("tolerance must be positive");
  if (!(step > 0.0)) throw NlsError("flow step must be positive");
  if (runaway_radius && !(*runaway_radius > 0.0)) throw NlsError("runaway radius must be positive");
}

std::string_view to_string(GroundStateStatus s) {
  switch (s) {
    case GroundStateStatus::Converged: return "converged";
    case GroundStateStatus::Runaway: return "runaway";
    case GroundStateStatus::MaxIters: return "max-iters";
  }
  return "unknown";
}

double mass(const GraphFunction& f) {
  return f.mesh->weights().dot(f.values.cwiseAbs2());
}

ComplexVector nonlinear_term(const GraphFunction& f, double mu) {
  const RealVector& w = f.mesh->weights();
  ComplexVector out(f.values.size());
  for (Eigen::Index i = 0; i < out.size(); ++i)
    out[i] = w[i] * std::pow(std::abs(f.values[i]), 2.0 * mu) * f.values[i];
  return out;
}

double energy(const GraphFunction& f, const LinearForm& form, double mu) {
  const double p = 2.0 * mu + 2.0;
  const RealVector& w = f.mesh->weights();
  double nl = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) nl += w[i] * std::pow(std::abs(f.values[i]), p);
  return quadratic(form.A, f.values) - nl / (mu + 1.0);
}

namespace {

ComplexVector gradient(const GraphFunction& f, const LinearForm& form, double mu) {
  return apply(form.A, f.values) - nonlinear_term(f, mu);
}

double dual_norm(const RealVector& w, const ComplexVector& r) {
  return std::sqrt(r.cwiseAbs2().cwiseQuotient(w).sum());
}

double default_radius(const Mesh& mesh) { return 0.25 * mesh.graph().truncation(); }

}  // namespace

double lagrange_frequency(const GraphFunction& f, const LinearForm& form, double mu) {
  const double m = mass(f);
  if (m <= 0.0) return 0.0;
  return -f.values.dot(gradient(f, form, mu)).real() / m;
}

double stationary_residual(const GraphFunction& f, double omega, const LinearForm& form, double mu) {
  ComplexVector r = gradient(f, form, mu);
  r += omega * form.mass_diag.cwiseProduct(f.values.real()).cast<Complex>();
  r += Complex(0.0, omega) * form.mass_diag.cwiseProduct(f.values.imag()).cast<Complex>();
  return dual_norm(form.mass_diag, r);
}

GraphFunction auto_initial(const LinearForm& form, double m) {
  std::optional<SpectralResult> spec;
  try {
    spec = linear_ground_state(form);
  } catch (const SpectralError&) {
  }
  GraphFunction f;
  if (spec && spec->bound_state()) {
    f = spec->phi0;
  } else {
    const MetricGraph& g = form.mesh->graph();
    // Off-vertex centre on a half-line: a symmetric bump can stall at a
    // symmetric saddle of the constrained energy.
    std::size_t ext = 0;
    while (!g.edge(ext).external()) ++ext;
    DistanceField field(g, GraphPoint{ext, 1.0});
    f = GraphFunction::sample(form.mesh, [&](std::size_t e, double x) {
      const double d = field(e, x);
      return Complex(std::exp(-d * d), 0.0);
    });
  }
  return std::sqrt(m / mass(f)) * f;
}

GroundStateResult minimize_ground_state(const LinearForm& form, const NlsParams& params,
                                        std::optional<GraphFunction> initial) {
  params.validate();
  const double mu = params.mu;
  const double m = params.mass;
  const RealVector& w = form.mass_diag;
  const double radius = params.runaway_radius.value_or(default_radius(*form.mesh));
  if (radius >= form.mesh->graph().truncation())
    throw NlsError("runaway radius must be below the truncation length");

  GraphFunction f = initial ? *initial : auto_initial(form, m);
  if (f.mesh != form.mesh) throw NlsError("initial state lives on a different mesh");
  const double m0 = mass(f);
  if (!(m0 > 0.0)) throw NlsError("initial state has zero mass");
  f.values *= std::sqrt(m / m0);

  // Preconditioner K = A + cM with c large enough for K to be positive definite.
  double c = 1.0;
  while (count_eigenvalues_below(form, -c) > 0) c *= 2.0;
  c += 1.0;
  SparseMatrix precond = form.A;
  for (Eigen::Index i = 0; i < precond.rows(); ++i) precond.coeffRef(i, i) += c * w[i];
  Eigen::SimplicialLDLT<SparseMatrix> solver(precond);
  if (solver.info() != Eigen::Success) throw NlsError("preconditioner factorisation failed");

  auto normalise = [&](ComplexVector v) {
    const double mv = w.dot(v.cwiseAbs2());
    return ComplexVector(v * std::sqrt(m / mv));
  };

  GroundStateResult out;
  double e_cur = energy(f, form, mu);
  double tau = params.step;
  const double tau_max = 4.0 * params.step;
  out.energy_trace.push_back(e_cur);
  out.max_h1_norm = h1_norm(f);

  auto finish = [&](GroundStateStatus status, std::size_t its) {
    out.psi = f;
    out.energy = e_cur;
    out.omega = lagrange_frequency(f, form, mu);
    out.residual = stationary_residual(f, out.omega, form, mu);
    const auto run = runaway_indicator(f, radius);
    out.runaway_fraction = run.fraction;
    out.runaway_edge = run.edge;
    out.status = status;
    out.iterations = its;
    return out;
  };

  auto residual_of = [&](const ComplexVector& v, ComplexVector* out_r) {
    GraphFunction tmp(f.mesh, v);
    ComplexVector g = gradient(tmp, form, mu);
    const double omega = -v.dot(g).real() / m;
    for (Eigen::Index i = 0; i < g.size(); ++i) g[i] += omega * w[i] * v[i];
    const double n = dual_norm(w, g);
    if (out_r) *out_r = std::move(g);
    return n;
  };

  ComplexVector r;
  double res_cur = residual_of(f.values, &r);
  for (std::size_t it = 0; it < params.max_iters; ++it) {
    if (res_cur <= params.tol) return finish(GroundStateStatus::Converged, it);
    if (runaway_indicator(f, radius).fraction > params.runaway_fraction)
      return finish(GroundStateStatus::Runaway, it);

    ComplexVector dir(r.size());
    dir.real() = -solver.solve(RealVector(r.real()));
    dir.imag() = -solver.solve(RealVector(r.imag()));

    // Backtracking on the energy. Once energy differences drop to rounding
    // level the energy cannot rank trial points, so the residual decides.
    const double slack = 1e-13 * std::max(1.0, std::abs(e_cur));
    bool accepted = false;
    while (tau >= 1e-12) {
      ComplexVector trial = normalise(f.values + tau * dir);
      const double e_try = energy(GraphFunction(f.mesh, trial), form, mu);
      bool ok = e_try < e_cur - slack;
      ComplexVector r_try;
      double res_try = 0.0;
      if (!ok && e_try <= e_cur + slack) {
        res_try = residual_of(trial, &r_try);
        ok = res_try < res_cur;
      } else if (ok) {
        res_try = residual_of(trial, &r_try);
      }
      if (ok) {
        f.values = std::move(trial);
        e_cur = e_try;
        r = std::move(r_try);
        res_cur = res_try;
        accepted = true;
        tau = std::min(tau * 1.5, tau_max);
        break;
      }
      tau *= 0.5;
    }
    if (!accepted) return finish(GroundStateStatus::MaxIters, it);
    out.energy_trace.push_back(e_cur);
    out.max_h1_norm = std::max(out.max_h1_norm, h1_norm(f));
  }
  GroundStateResult res = finish(GroundStateStatus::MaxIters, params.max_iters);
  if (res.residual <= params.tol) res.status = GroundStateStatus::Converged;
  return res;
}

namespace {

std::vector<GraphPoint> candidate_centres(const Mesh& mesh, CenterSampling centers, std::size_t stride) {
  const auto& pts = mesh.dof_points();
  if (centers == CenterSampling::AllNodes) return pts;
  std::vector<GraphPoint> out(pts.begin(), pts.begin() + static_cast<long>(mesh.graph().num_vertices()));
  const std::size_t step = std::max<std::size_t>(1, stride);
  for (std::size_t i = mesh.graph().num_vertices(); i < pts.size(); i += step) out.push_back(pts[i]);
  return out;
}

RealVector node_distances(const Mesh& mesh, const GraphPoint& y) {
  DistanceField field(mesh.graph(), y);
  const auto& pts = mesh.dof_points();
  RealVector d(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) d[static_cast<Eigen::Index>(i)] = field(pts[i]);
  return d;
}

}  // namespace

double ball_mass(const GraphFunction& f, const GraphPoint& y, double t) {
  const RealVector d = node_distances(*f.mesh, y);
  const RealVector& w = f.mesh->weights();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < d.size(); ++i)
    if (d[i] < t) acc += w[i] * std::norm(f.values[i]);
  return acc;
}

std::vector<double> concentration_profile(const GraphFunction& f, std::span<const double> radii,
                                          CenterSampling centers, std::size_t stride) {
  for (double t : radii)
    if (!(t >= 0.0)) throw NlsError("concentration radius must be nonnegative");
  const Mesh& mesh = *f.mesh;
  const RealVector& w = mesh.weights();
  std::vector<double> best(radii.size(), 0.0);
  const auto n = static_cast<std::size_t>(w.size());
  std::vector<std::size_t> order(n);
  std::vector<double> prefix(n + 1);
  std::vector<double> sorted(n);
  for (const GraphPoint& y : candidate_centres(mesh, centers, stride)) {
    const RealVector d = node_distances(mesh, y);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d[static_cast<Eigen::Index>(a)] < d[static_cast<Eigen::Index>(b)]; });
    prefix[0] = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const auto i = static_cast<Eigen::Index>(order[k]);
      sorted[k] = d[i];
      prefix[k + 1] = prefix[k] + w[i] * std::norm(f.values[i]);
    }
    for (std::size_t r = 0; r < radii.size(); ++r) {
      // nodes with d < t form the prefix before lower_bound(t)
      const auto k = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), radii[r]) - sorted.begin());
      best[r] = std::max(best[r], prefix[k]);
    }
  }
  return best;
}

double concentration_function(const GraphFunction& f, double t, CenterSampling centers, std::size_t stride) {
  const double radii[] = {t};
  return concentration_profile(f, radii, centers, stride).front();
}

namespace {
double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}
}  // namespace

double inner_cutoff(double s) {
  if (s <= 0.5) return 1.0;
  if (s >= 0.75) return 0.0;
  return 1.0 - smoothstep((s - 0.5) / 0.25);
}

double outer_cutoff(double s) {
  if (s <= 0.75) return 0.0;
  if (s >= 1.0) return 1.0;
  return smoothstep((s - 0.75) / 0.25);
}

DichotomySplit dichotomy_split(const GraphFunction& f, const GraphPoint& y, double t) {
  if (!(t > 0.0)) throw NlsError("dichotomy radius must be positive");
  f.mesh->graph().check_point(y);
  const RealVector d = node_distances(*f.mesh, y);
  ComplexVector r(f.values.size()), s(f.values.size());
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    r[i] = inner_cutoff(d[i] / t) * f.values[i];
    s[i] = outer_cutoff(d[i] / t) * f.values[i];
  }
  GraphFunction R(f.mesh, r), S(f.mesh, s);
  GraphFunction Z(f.mesh, f.values - r - s);
  return {std::move(R), std::move(S), std::move(Z)};
}

RunawayIndicator runaway_indicator(const GraphFunction& f, double radius) {
  const Mesh& mesh = *f.mesh;
  if (!(radius > 0.0) || radius >= mesh.graph().truncation())
    throw NlsError("runaway radius must lie in (0, truncation)");
  const double total = mass(f);
  RunawayIndicator out;
  if (total <= 0.0) return out;
  const RealVector& w = mesh.weights();
  for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
    if (!mesh.graph().edge(e).external()) continue;
    const EdgeMesh& em = mesh.edge(e);
    double beyond = 0.0;
    for (std::size_t j = 1; j < em.intervals; ++j) {
      if (mesh.node_x(e, j) <= radius) continue;
      const long dof = em.dofs[j];
      beyond += w[dof] * std::norm(f.values[dof]);
    }
    const double frac = beyond / total;
    if (!out.edge || frac > out.fraction) {
      out.fraction = frac;
      out.edge = e;
    }
  }
  return out;
}

}  // namespace graphnls
