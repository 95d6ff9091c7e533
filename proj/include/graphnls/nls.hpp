#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "graphnls/discretization.hpp"
#include "graphnls/spectral.hpp"

namespace graphnls {

class NlsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Parameters of the mass-constrained minimisation.
struct NlsParams {
  double mu = 1.0;    // power of the nonlinearity, 0 < mu < 2
  double mass = 1.0;
  double step = 1.0;  // initial preconditioned flow step
  double tol = 1e-8;  // on the stationary residual
  std::size_t max_iters = 20000;
  std::optional<double> runaway_radius;  // default: a quarter of the truncation length
  double runaway_fraction = 0.5;

  void validate() const;
};

enum class GroundStateStatus { Converged, Runaway, MaxIters };
std::string_view to_string(GroundStateStatus s);

struct GroundStateResult {
  GraphFunction psi;
  double energy = 0.0;
  double omega = 0.0;
  double residual = 0.0;
  GroundStateStatus status = GroundStateStatus::MaxIters;
  std::size_t iterations = 0;
  double runaway_fraction = 0.0;
  std::optional<std::size_t> runaway_edge;
  std::vector<double> energy_trace;  // energy after each accepted step
  double max_h1_norm = 0.0;          // over all accepted iterates
};

double mass(const GraphFunction& f);
/// Nodal nonlinearity w_i |f_i|^{2mu} f_i (the gradient of the discrete L^{2mu+2} term).
ComplexVector nonlinear_term(const GraphFunction& f, double mu);
/// E[f] = f*Af - ||f||_{2mu+2}^{2mu+2} / (mu+1).
double energy(const GraphFunction& f, const LinearForm& form, double mu);
/// ||A f - N(f) + omega M f||_{M^-1}.
double stationary_residual(const GraphFunction& f, double omega, const LinearForm& form, double mu);
/// Lagrange multiplier of the constrained critical point: omega = -(f, Af - N(f)) / M[f].
double lagrange_frequency(const GraphFunction& f, const LinearForm& form, double mu);

/// sqrt(m) phi0 when the linear ground state is a bound state, otherwise a
/// Gaussian bump centred one unit along the first half-line, scaled to mass m.
GraphFunction auto_initial(const LinearForm& form, double m);

/// Preconditioned projected gradient flow on the sphere M[f] = m with energy
/// backtracking.
GroundStateResult minimize_ground_state(const LinearForm& form, const NlsParams& params,
                                        std::optional<GraphFunction> initial = std::nullopt);

enum class CenterSampling { AllNodes, VerticesAndStride };

/// rho(f, t) = max over candidate centres y of the mass of f in the open ball B(y, t).
double concentration_function(const GraphFunction& f, double t,
                              CenterSampling centers = CenterSampling::AllNodes, std::size_t stride = 8);
/// rho(f, t) for several radii at once.
std::vector<double> concentration_profile(const GraphFunction& f, std::span<const double> radii,
                                          CenterSampling centers = CenterSampling::AllNodes,
                                          std::size_t stride = 8);
/// Mass of f on nodes with d(node, y) < t.
double ball_mass(const GraphFunction& f, const GraphPoint& y, double t);

/// Plateau cut-offs: theta = 1 on [0, 1/2], 0 on [3/4, inf); phi = 0 on [0, 3/4], 1 on [1, inf).
double inner_cutoff(double s);
double outer_cutoff(double s);

struct DichotomySplit {
  GraphFunction R;  // theta(d/t) f
  GraphFunction S;  // phi(d/t) f
  GraphFunction Z;  // f - R - S
};
DichotomySplit dichotomy_split(const GraphFunction& f, const GraphPoint& y, double t);

struct RunawayIndicator {
  double fraction = 0.0;            // largest per-edge share of mass beyond R
  std::optional<std::size_t> edge;  // external edge carrying it
};
RunawayIndicator runaway_indicator(const GraphFunction& f, double radius);

}  // namespace graphnls
