#include "graphnls/bifurcation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/SparseCholesky>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "graphnls/nls.hpp"

namespace graphnls {

namespace {

void check_mu(double mu) {
  if (!(mu > 0.0 && mu < 2.0)) throw BifurcationError("mu must lie in (0, 2)");
}

struct NewtonOutcome {
  RealVector phi;
  double residual = INFINITY;
  std::size_t iterations = 0;
  bool ok = false;
  std::string failure;
};

NewtonOutcome newton(const LinearForm& form, double mu, double omega, RealVector phi, const ContinuationOptions& opts) {
  const RealVector& w = form.mass_diag;
  const auto n = phi.size();
  SparseMatrix base = form.A;
  for (Eigen::Index i = 0; i < n; ++i) base.coeffRef(i, i) += omega * w[i];
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  ldlt.analyzePattern(base);

  auto residual_vec = [&](const RealVector& p) {
    RealVector r = base * p;
    for (Eigen::Index i = 0; i < n; ++i) r[i] -= w[i] * std::pow(std::abs(p[i]), 2.0 * mu) * p[i];
    return r;
  };
  auto dual = [&](const RealVector& r) { return std::sqrt(r.cwiseAbs2().cwiseQuotient(w).sum()); };

  NewtonOutcome out;
  RealVector r = residual_vec(phi);
  double res = dual(r);
  const double first = res;
  for (std::size_t it = 0; it <= opts.max_newton; ++it) {
    out.iterations = it;
    if (!std::isfinite(res) || res > 1e6 * std::max(first, 1.0)) {
      out.failure = "Newton diverged at omega=" + std::to_string(omega);
      return out;
    }
    if (res <= opts.tol) {
      out.phi = std::move(phi);
      out.residual = res;
      out.ok = true;
      return out;
    }
    if (it == opts.max_newton) break;
    SparseMatrix jac = base;
    for (Eigen::Index i = 0; i < n; ++i)
      jac.coeffRef(i, i) -= (2.0 * mu + 1.0) * w[i] * std::pow(std::abs(phi[i]), 2.0 * mu);
    ldlt.factorize(jac);
    if (ldlt.info() != Eigen::Success) {
      out.failure = "singular Jacobian at omega=" + std::to_string(omega);
      return out;
    }
    const RealVector delta = ldlt.solve(r);
    if (!delta.allFinite()) {
      out.failure = "singular Jacobian at omega=" + std::to_string(omega);
      return out;
    }
    phi -= delta;
    r = residual_vec(phi);
    res = dual(r);
  }
  out.residual = res;
  out.failure = "Newton did not converge at omega=" + std::to_string(omega);
  return out;
}

}  // namespace

double predicted_amplitude(double omega, double E0, double phi0_norm, double mu) {
  if (omega <= E0) return 0.0;
  return std::pow((omega - E0) / phi0_norm, 1.0 / (2.0 * mu));
}

Branch continue_branch(const LinearForm& form, const SpectralResult& spec, double mu,
                       std::span<const double> omegas, const ContinuationOptions& opts) {
  check_mu(mu);
  if (!spec.converged || !spec.bound_state())
    throw BifurcationError("linear ground state is not a bound state (E0 <= 0)");
  if (spec.degenerate(opts.tol))
    throw BifurcationError("lowest eigenvalue is numerically degenerate; no simple bifurcation");
  if (spec.phi0.mesh != form.mesh) throw BifurcationError("spectral result lives on a different mesh");

  Branch branch;
  branch.source = spec;
  branch.mu = mu;
  const RealVector& w = form.mass_diag;
  const RealVector phi0 = spec.phi0.values.real();
  const double p0 = phi0_nonlinear_norm(spec, mu);

  RealVector guess;
  double prev_omega = spec.E0;
  for (double omega : omegas) {
    if (omega <= prev_omega) throw BifurcationError("frequencies must increase and exceed E0");
    if (branch.points.empty()) guess = predicted_amplitude(omega, spec.E0, p0, mu) * phi0;
    NewtonOutcome sol = newton(form, mu, omega, guess, opts);
    if (!sol.ok) {
      branch.truncated = sol.failure;
      break;
    }
    BranchPoint pt;
    pt.omega = omega;
    pt.amplitude = phi0.dot(w.cwiseProduct(sol.phi));
    if (pt.amplitude < 0.0) {
      sol.phi = -sol.phi;
      pt.amplitude = -pt.amplitude;
    }
    pt.phi = GraphFunction(form.mesh, sol.phi.cast<Complex>());
    pt.mass = mass(pt.phi);
    if (pt.mass <= 1e-14 * w.sum()) {
      branch.truncated = "Newton fell onto the trivial solution at omega=" + std::to_string(omega);
      break;
    }
    pt.energy = energy(pt.phi, form, mu);
    pt.residual = stationary_residual(pt.phi, omega, form, mu);
    pt.newton_iterations = sol.iterations;
    guess = sol.phi;
    prev_omega = omega;
    branch.points.push_back(std::move(pt));
  }
  return branch;
}

Branch continue_branch(const LinearForm& form, const SpectralResult& spec, double mu, double omega_max,
                       std::size_t steps, const ContinuationOptions& opts) {
  if (steps < 1) throw BifurcationError("at least one continuation step is required");
  if (!(opts.delta_min > 0.0)) throw BifurcationError("delta_min must be positive");
  const double top = omega_max - spec.E0;
  if (!(top >= opts.delta_min)) throw BifurcationError("omega_max must exceed E0 + delta_min");
  std::vector<double> omegas;
  for (std::size_t k = 0; k < steps; ++k) {
    const double frac = steps == 1 ? 1.0 : static_cast<double>(k) / static_cast<double>(steps - 1);
    const double delta = steps == 1 ? top : opts.delta_min * std::pow(top / opts.delta_min, frac);
    omegas.push_back(spec.E0 + delta);
  }
  return continue_branch(form, spec, mu, omegas, opts);
}

std::pair<double, double> linear_fit(std::span<const double> x, std::span<const double> y) {
  const auto n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  return {my - slope * mx, slope};
}

AsymptoticFit fit_asymptotics(const Branch& branch) {
  if (branch.points.size() < 5) throw BifurcationError("asymptotic fit needs at least 5 branch points");
  const double E0 = branch.source.E0;
  std::vector<double> lx, lm, m, em;
  for (const auto& p : branch.points) {
    lx.push_back(std::log(p.omega - E0));
    lm.push_back(std::log(p.mass));
    m.push_back(p.mass);
    em.push_back(p.energy / p.mass);
  }
  AsymptoticFit fit;
  const auto [c0, c1] = linear_fit(lx, lm);
  fit.exponent = c1;
  fit.prefactor = std::exp(c0);
  fit.phi0_norm = std::pow(fit.prefactor, -branch.mu);
  const auto [e0, e1] = linear_fit(m, em);
  fit.energy_intercept = e0;
  fit.energy_slope = e1;
  fit.fitted_E0 = -e0;
  return fit;
}

double soliton_profile(double mu, double omega, double x) {
  check_mu(mu);
  if (!(omega > 0.0)) throw BifurcationError("soliton frequency must be positive");
  const double amp = std::pow((mu + 1.0) * omega, 1.0 / (2.0 * mu));
  return amp * std::pow(1.0 / std::cosh(mu * std::sqrt(omega) * x), 1.0 / mu);
}

double soliton_mass_integral(double mu) {
  check_mu(mu);
  // (1 - sin^2 s)^{1/mu - 1} cos s = cos^{2/mu - 1} s, bounded for mu < 2
  const double power = 2.0 / mu - 1.0;
  auto f = [power](double s) { return std::pow(std::cos(s), power); };
  // tanh-sinh copes with the steep endpoint behaviour as mu approaches 2
  boost::math::quadrature::tanh_sinh<double> integrator;
  return integrator.integrate(f, 0.0, std::numbers::pi / 2, 1e-14);
}

namespace {
double soliton_mass_coefficient(double mu) {
  return 2.0 * std::pow(mu + 1.0, 1.0 / mu) / mu * soliton_mass_integral(mu);
}
}  // namespace

double soliton_frequency(double mu, double m) {
  check_mu(mu);
  if (!(m > 0.0)) throw BifurcationError("mass must be positive");
  const double q = 2.0 * mu / (2.0 - mu);
  return std::pow(soliton_mass_coefficient(mu), -q) * std::pow(m, q);
}

double soliton_energy_constant(double mu) {
  check_mu(mu);
  const double q = 2.0 * mu / (2.0 - mu);
  return (2.0 - mu) / (2.0 + mu) * std::pow(soliton_mass_coefficient(mu), -q);
}

double runaway_threshold(double mu, double m) {
  if (!(m > 0.0)) throw BifurcationError("mass must be positive");
  const double q = 2.0 * mu / (2.0 - mu);
  return -soliton_energy_constant(mu) * std::pow(m, 1.0 + q);
}

std::string_view to_string(Verdict v) {
  return v == Verdict::ExpectedExistence ? "expected-existence" : "threshold-undecided";
}

VerdictReport existence_verdict(const Branch& branch, double mu, double m) {
  const auto& pts = branch.points;
  if (pts.empty()) throw BifurcationError("empty branch");
  if (m < pts.front().mass || m > pts.back().mass)
    throw BifurcationError("mass " + std::to_string(m) + " outside the branch range [" +
                           std::to_string(pts.front().mass) + ", " + std::to_string(pts.back().mass) + "]");
  double e = pts.front().energy;
  for (std::size_t k = 1; k < pts.size(); ++k) {
    if (m <= pts[k].mass) {
      const double s = (m - pts[k - 1].mass) / (pts[k].mass - pts[k - 1].mass);
      e = (1.0 - s) * pts[k - 1].energy + s * pts[k].energy;
      break;
    }
  }
  const double thr = runaway_threshold(mu, m);
  return {e < thr ? Verdict::ExpectedExistence : Verdict::ThresholdUndecided, e, thr};
}

}  // namespace graphnls
