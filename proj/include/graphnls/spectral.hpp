#pragma once

#include <cstddef>
#include <stdexcept>

#include "graphnls/discretization.hpp"

namespace graphnls {

class SpectralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bottom of the spectrum of the pencil (A, M).
struct SpectralResult {
  double E0 = 0.0;       // minus the lowest eigenvalue
  GraphFunction phi0;    // M-normalised, real, positive at its peak
  double lambda2 = 0.0;  // second eigenvalue
  double gap = 0.0;      // lambda2 - lambda1
  double residual = 0.0; // ||A phi0 + E0 M phi0||_{M^-1}
  bool converged = false;
  std::size_t iterations = 0;

  /// E0 > 0: the bottom of the spectrum is a negative eigenvalue.
  bool bound_state() const { return E0 > 0.0; }
  /// Gap too small to call the eigenvalue simple.
  bool degenerate(double tol) const { return gap < 10.0 * tol; }
  /// Both conditions needed for branching off the linear ground state.
  bool admits_bifurcation(double tol) const { return converged && bound_state() && !degenerate(tol); }
};

/// Number of eigenvalues of (A, M) strictly below sigma (Sylvester inertia of A - sigma M).
std::size_t count_eigenvalues_below(const LinearForm& form, double sigma);

/// Gershgorin bounds on the spectrum of M^-1 A.
std::pair<double, double> gershgorin_bounds(const LinearForm& form);

/// Smallest eigenpair by shifted inverse iteration and the second eigenvalue
/// by inverse iteration deflated against the first. Throws SpectralError when
/// the iteration does not reach tol.
SpectralResult linear_ground_state(const LinearForm& form, double tol = 1e-10, std::size_t max_iters = 200);

/// ||phi0||_{2mu+2}^{2mu+2}.
double phi0_nonlinear_norm(const SpectralResult& res, double mu);

}  // namespace graphnls
