#include "graphnls/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SparseLU>

#include "graphnls/nls.hpp"

namespace graphnls {

namespace {

using ComplexSparse = Eigen::SparseMatrix<Complex>;

// (M + i dt/2 A)^{-1} (M - i dt/2 A), factored once.
class CrankNicolsonStep {
 public:
  CrankNicolsonStep(const LinearForm& form, double dt) : form_(form), half_(0.0, 0.5 * dt) {
    ComplexSparse lhs = form.A.cast<Complex>() * half_;
    for (Eigen::Index i = 0; i < lhs.rows(); ++i) lhs.coeffRef(i, i) += form.mass_diag[i];
    lhs.makeCompressed();
    lhs_ = lhs;
    lu_.compute(lhs_);
    if (lu_.info() != Eigen::Success) throw DynamicsError("Crank-Nicolson matrix factorisation failed");
  }

  ComplexVector rhs(const ComplexVector& f) const {
    ComplexVector r = -half_ * apply(form_.A, f);
    for (Eigen::Index i = 0; i < r.size(); ++i) r[i] += form_.mass_diag[i] * f[i];
    return r;
  }

  // (M + iB)^{-1}(M - iB) f = 2 (M + iB)^{-1} M f - f
  ComplexVector cayley(const ComplexVector& f) {
    ComplexVector mf = f;
    for (Eigen::Index i = 0; i < f.size(); ++i) mf[i] *= form_.mass_diag[i];
    return 2.0 * solve(mf) - f;
  }

  // One step of iterative refinement keeps rounding from drifting the mass
  // over many thousands of steps.
  ComplexVector solve(const ComplexVector& b) {
    ComplexVector x = lu_.solve(b);
    if (lu_.info() != Eigen::Success) throw DynamicsError("Crank-Nicolson solve failed");
    const ComplexVector r = b - lhs_ * x;
    x += lu_.solve(r);
    return x;
  }

 private:
  const LinearForm& form_;
  Complex half_;
  ComplexSparse lhs_;
  Eigen::SparseLU<ComplexSparse> lu_;
};

void rotate_phase(ComplexVector& f, double mu, double coeff) {
  for (Eigen::Index i = 0; i < f.size(); ++i)
    f[i] *= std::polar(1.0, coeff * std::pow(std::abs(f[i]), 2.0 * mu));
}

}  // namespace

std::string_view to_string(Scheme s) { return s == Scheme::Strang ? "strang" : "cn"; }

Scheme scheme_from_string(std::string_view s) {
  if (s == "strang") return Scheme::Strang;
  if (s == "cn") return Scheme::CrankNicolson;
  throw DynamicsError("unknown scheme '" + std::string(s) + "' (expected strang or cn)");
}

GraphFunction phase_step(const GraphFunction& f, double mu, double duration) {
  GraphFunction out = f;
  rotate_phase(out.values, mu, duration);
  return out;
}

double evolution_energy(const GraphFunction& f, const LinearForm& form, double mu, double nonlinearity) {
  const double p = 2.0 * mu + 2.0;
  const RealVector& w = form.mass_diag;
  double nl = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) nl += w[i] * std::pow(std::abs(f.values[i]), p);
  return quadratic(form.A, f.values) - nonlinearity * nl / (mu + 1.0);
}

Trajectory evolve(const GraphFunction& f0, const LinearForm& form, const EvolveOptions& opts) {
  if (!(opts.dt > 0.0)) throw DynamicsError("time step must be positive");
  if (!(opts.T >= opts.dt)) throw DynamicsError("final time must be at least one time step");
  if (!(opts.mu > 0.0)) throw DynamicsError("mu must be positive");
  if (f0.mesh != form.mesh) throw DynamicsError("initial state lives on a different mesh");
  if (!f0.values.allFinite()) throw DynamicsError("initial state is not finite");
  const auto steps = static_cast<std::size_t>(std::llround(opts.T / opts.dt));
  const std::size_t stride = std::max<std::size_t>(1, opts.snapshot_stride);
  const double radius = opts.runaway_radius.value_or(0.25 * form.mesh->graph().truncation());
  const double kappa = opts.nonlinearity;
  const double dt = opts.dt;
  const RealVector& w = form.mass_diag;

  CrankNicolsonStep cn(form, dt);
  Trajectory traj;
  traj.dt = dt;
  traj.scheme = opts.scheme;

  GraphFunction f = f0;
  auto record = [&](std::size_t step) {
    const double t = static_cast<double>(step) * dt;
    const double m = mass(f);
    const double e = evolution_energy(f, form, opts.mu, kappa);
    traj.times.push_back(t);
    traj.masses.push_back(m);
    traj.energies.push_back(e);
    if (step % stride == 0 || step == steps) {
      Snapshot s;
      s.t = t;
      s.psi = f;
      s.mass = m;
      s.energy = e;
      s.runaway_fraction = runaway_indicator(f, radius).fraction;
      traj.snapshots.push_back(std::move(s));
    }
  };
  record(0);

  for (std::size_t step = 1; step <= steps; ++step) {
    ComplexVector& v = f.values;
    if (opts.scheme == Scheme::Strang) {
      if (kappa != 0.0) rotate_phase(v, opts.mu, 0.5 * dt * kappa);
      v = cn.cayley(v);
      if (kappa != 0.0) rotate_phase(v, opts.mu, 0.5 * dt * kappa);
    } else {
      const ComplexVector base = cn.rhs(v);
      ComplexVector next = v;
      bool done = kappa == 0.0;
      if (done) next = cn.solve(base);
      for (std::size_t k = 0; !done && k < opts.max_fixed_point; ++k) {
        ComplexVector mid = 0.5 * (v + next);
        ComplexVector b = base;
        for (Eigen::Index i = 0; i < b.size(); ++i)
          b[i] += Complex(0.0, dt * kappa) * w[i] * std::pow(std::abs(mid[i]), 2.0 * opts.mu) * mid[i];
        ComplexVector updated = cn.solve(b);
        const double change = (updated - next).norm();
        next = std::move(updated);
        if (change <= opts.fixed_point_tol * std::max(1e-300, next.norm())) done = true;
      }
      if (!done)
        throw DynamicsError("fixed-point iteration did not converge at t=" +
                            std::to_string(static_cast<double>(step) * dt));
      v = std::move(next);
    }
    if (!v.allFinite()) throw DynamicsError("solution blew up at t=" + std::to_string(static_cast<double>(step) * dt));
    record(step);
  }
  return traj;
}

ConservationReport conservation_report(const Trajectory& traj, double energy_floor) {
  if (traj.snapshots.size() < 2 || traj.masses.empty()) throw DynamicsError("trajectory has fewer than two snapshots");
  const double m0 = traj.masses.front();
  const double e0 = traj.energies.front();
  ConservationReport rep{0.0, 0.0};
  const double mden = m0 > 0.0 ? m0 : 1.0;
  const double eden = std::max(std::abs(e0), energy_floor);
  for (std::size_t k = 0; k < traj.masses.size(); ++k) {
    rep.mass_drift = std::max(rep.mass_drift, std::abs(traj.masses[k] - m0) / mden);
    rep.energy_drift = std::max(rep.energy_drift, std::abs(traj.energies[k] - e0) / eden);
  }
  return rep;
}

Complex h1_inner(const GraphFunction& u, const GraphFunction& v) {
  if (u.mesh != v.mesh) throw DynamicsError("functions live on different meshes");
  Complex acc = inner(u.mesh->weights(), u.values, v.values);
  for (std::size_t e = 0; e < u.mesh->num_edges(); ++e) {
    const EdgeMesh& em = u.mesh->edge(e);
    for (std::size_t j = 0; j < em.intervals; ++j)
      acc += std::conj(u.at(e, j + 1) - u.at(e, j)) * (v.at(e, j + 1) - v.at(e, j)) / em.h;
  }
  return acc;
}

std::vector<double> orbital_distance(const Trajectory& traj, const GraphFunction& ref) {
  std::vector<double> out;
  out.reserve(traj.snapshots.size());
  for (const auto& s : traj.snapshots) {
    if (s.psi.mesh != ref.mesh) throw DynamicsError("reference and trajectory use different meshes");
    const Complex overlap = h1_inner(ref, s.psi);
    const Complex phase = std::abs(overlap) > 0.0 ? overlap / std::abs(overlap) : Complex(1.0, 0.0);
    out.push_back(h1_norm(s.psi - phase * ref));
  }
  return out;
}

}  // namespace graphnls
