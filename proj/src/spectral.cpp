#include "graphnls/spectral.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/SparseCholesky>

namespace graphnls {

namespace {

using Ldlt = Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;

class ShiftedSolver {
 public:
  explicit ShiftedSolver(const LinearForm& form) : form_(form), shifted_(form.A) {
    ldlt_.analyzePattern(shifted_);
  }

  // Factor A - sigma M; returns false on a zero pivot.
  bool factor(double sigma) {
    shifted_ = form_.A;
    for (Eigen::Index i = 0; i < shifted_.rows(); ++i) shifted_.coeffRef(i, i) -= sigma * form_.mass_diag[i];
    ldlt_.factorize(shifted_);
    return ldlt_.info() == Eigen::Success;
  }

  std::size_t negatives() const {
    const auto& d = ldlt_.vectorD();
    return static_cast<std::size_t>((d.array() < 0.0).count());
  }

  RealVector solve(const RealVector& rhs) const { return ldlt_.solve(rhs); }

 private:
  const LinearForm& form_;
  SparseMatrix shifted_;
  Ldlt ldlt_;
};

std::size_t count_below(ShiftedSolver& solver, double sigma) {
  // A zero pivot means sigma is (numerically) an eigenvalue; nudge it down.
  double s = sigma;
  for (int k = 0; k < 8; ++k) {
    if (solver.factor(s)) return solver.negatives();
    s -= 1e-12 * std::max(1.0, std::abs(s));
  }
  throw SpectralError("cannot factor the shifted pencil near " + std::to_string(sigma));
}

// Smallest sigma with count_below(sigma) >= k, bracketed in [lo, hi].
std::pair<double, double> bisect_eigenvalue(ShiftedSolver& solver, std::size_t k, double lo, double hi) {
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= 1e-13 * std::max(1.0, std::abs(mid))) break;
    if (count_below(solver, mid) >= k) hi = mid;
    else lo = mid;
  }
  return {lo, hi};
}

double m_norm(const RealVector& w, const RealVector& x) { return std::sqrt(x.dot(w.cwiseProduct(x))); }

double dual_norm(const RealVector& w, const RealVector& r) { return std::sqrt(r.dot(r.cwiseQuotient(w))); }

}  // namespace

std::pair<double, double> gershgorin_bounds(const LinearForm& form) {
  const auto n = form.A.rows();
  RealVector diag = RealVector::Zero(n), radius = RealVector::Zero(n);
  for (Eigen::Index c = 0; c < form.A.outerSize(); ++c) {
    for (SparseMatrix::InnerIterator it(form.A, c); it; ++it) {
      if (it.row() == it.col()) diag[it.row()] += it.value();
      else radius[it.row()] += std::abs(it.value());
    }
  }
  double lo = INFINITY, hi = -INFINITY;
  for (Eigen::Index i = 0; i < n; ++i) {
    lo = std::min(lo, (diag[i] - radius[i]) / form.mass_diag[i]);
    hi = std::max(hi, (diag[i] + radius[i]) / form.mass_diag[i]);
  }
  return {lo, hi};
}

std::size_t count_eigenvalues_below(const LinearForm& form, double sigma) {
  ShiftedSolver solver(form);
  return count_below(solver, sigma);
}

SpectralResult linear_ground_state(const LinearForm& form, double tol, std::size_t max_iters) {
  const RealVector& w = form.mass_diag;
  const auto n = form.A.rows();
  if (n < 2) throw SpectralError("mesh has fewer than two degrees of freedom");
  ShiftedSolver solver(form);

  // The Gershgorin lower bound is a safe shift; Sylvester bisection moves the
  // shift up to just below each eigenvalue so that inverse iteration contracts fast.
  auto [glo, ghi] = gershgorin_bounds(form);
  const double pad = 1e-8 * std::max(1.0, ghi - glo);
  glo -= pad;
  ghi += pad;
  const auto [l1_lo, l1_hi] = bisect_eigenvalue(solver, 1, glo, ghi);
  const auto [l2_lo, l2_hi] = bisect_eigenvalue(solver, 2, l1_lo, ghi);

  auto iterate = [&](double shift, const RealVector* deflate, RealVector x, double& lambda,
                     double& residual, std::size_t& its) {
    if (!solver.factor(shift)) throw SpectralError("shifted pencil is singular");
    auto project = [&](RealVector& v) {
      if (deflate) v -= deflate->dot(w.cwiseProduct(v)) * *deflate;
      v /= m_norm(w, v);
    };
    project(x);
    for (its = 1; its <= max_iters; ++its) {
      x = solver.solve(w.cwiseProduct(x));
      project(x);
      const RealVector ax = form.A * x;
      lambda = x.dot(ax);
      residual = dual_norm(w, ax - lambda * w.cwiseProduct(x));
      if (residual <= tol) return x;
    }
    return x;
  };

  SpectralResult res;
  RealVector start = RealVector::Ones(n);
  double lambda1 = 0.0, residual1 = 0.0;
  std::size_t its1 = 0;
  const double gap_guess = std::max(l2_lo - l1_lo, 0.0);
  const double shift1 = l1_lo - std::max(1e-10 * std::max(1.0, std::abs(l1_lo)), 1e-3 * gap_guess);
  RealVector phi = iterate(shift1, nullptr, start, lambda1, residual1, its1);

  // second eigenpair from a start vector with no symmetry to lose
  RealVector start2(n);
  for (Eigen::Index i = 0; i < n; ++i) start2[i] = std::sin(1.0 + 0.7 * static_cast<double>(i));
  double lambda2 = l2_lo, residual2 = 0.0;
  std::size_t its2 = 0;
  const double shift2 = l2_lo - 1e-10 * std::max(1.0, std::abs(l2_lo));
  if (shift2 > lambda1) {
    iterate(shift2, &phi, start2, lambda2, residual2, its2);
  } else {
    lambda2 = l2_lo;  // numerically degenerate; the bisection value stands
  }

  // real, positive at the peak
  Eigen::Index peak = 0;
  phi.cwiseAbs().maxCoeff(&peak);
  if (phi[peak] < 0.0) phi = -phi;

  res.E0 = -lambda1;
  res.phi0 = GraphFunction(form.mesh, phi.cast<Complex>());
  res.lambda2 = std::max(lambda2, lambda1);
  res.gap = res.lambda2 - lambda1;
  res.residual = residual1;
  res.iterations = its1;
  res.converged = residual1 <= tol;
  if (!res.converged)
    throw SpectralError("inverse iteration did not converge: residual " + std::to_string(residual1));
  return res;
}

double phi0_nonlinear_norm(const SpectralResult& res, double mu) {
  const double p = 2.0 * mu + 2.0;
  const double norm = lp_norm(res.phi0, p);
  return std::pow(norm, p);
}

}  // namespace graphnls
