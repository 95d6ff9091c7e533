#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "graphnls/discretization.hpp"
#include "graphnls/spectral.hpp"

namespace graphnls {

class BifurcationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Real stationary solution (A + omega M) phi = N(phi) on the branch.
struct BranchPoint {
  double omega = 0.0;
  GraphFunction phi;
  double mass = 0.0;
  double energy = 0.0;
  double residual = 0.0;
  double amplitude = 0.0;  // (phi0, phi), kept nonnegative
  std::size_t newton_iterations = 0;
};

struct Branch {
  std::vector<BranchPoint> points;  // increasing omega
  SpectralResult source;
  double mu = 1.0;
  std::optional<std::string> truncated;  // why continuation stopped early
};

struct ContinuationOptions {
  double delta_min = 1e-4;  // first grid point sits at omega = E0 + delta_min
  double tol = 1e-10;       // Newton residual, ||F||_{M^-1}
  std::size_t max_newton = 50;
};

/// Newton continuation on a grid geometric in omega - E0, from E0 + delta_min up
/// to omega_max. The first predictor is a*(omega) phi0, later ones the previous point.
Branch continue_branch(const LinearForm& form, const SpectralResult& spec, double mu, double omega_max,
                       std::size_t steps, const ContinuationOptions& opts = {});
/// Same on an explicit increasing list of frequencies.
Branch continue_branch(const LinearForm& form, const SpectralResult& spec, double mu,
                       std::span<const double> omegas, const ContinuationOptions& opts = {});

/// First-order amplitude ((omega - E0) / ||phi0||_{2mu+2}^{2mu+2})^{1/(2mu)}.
double predicted_amplitude(double omega, double E0, double phi0_norm, double mu);

struct AsymptoticFit {
  double exponent = 0.0;         // of m against omega - E0
  double prefactor = 0.0;        // m ~ prefactor (omega - E0)^exponent
  double phi0_norm = 0.0;        // ||phi0||_{2mu+2}^{2mu+2} implied by the prefactor
  double energy_intercept = 0.0; // limit of E(m)/m as m -> 0
  double energy_slope = 0.0;     // d(E/m)/dm
  double fitted_E0 = 0.0;        // -energy_intercept
};
AsymptoticFit fit_asymptotics(const Branch& branch);

/// Solves for the coefficients of y = c0 + c1 x in the least-squares sense.
std::pair<double, double> linear_fit(std::span<const double> x, std::span<const double> y);

/// Half-line soliton [(mu+1) omega]^{1/(2mu)} sech^{1/mu}(mu sqrt(omega) x).
double soliton_profile(double mu, double omega, double x);
/// int_0^1 (1 - t^2)^{1/mu - 1} dt, computed after t = sin(s).
double soliton_mass_integral(double mu);
/// Frequency of the line soliton with mass m.
double soliton_frequency(double mu, double m);
/// gamma_mu of the soliton energy -gamma_mu m^{1 + 2mu/(2-mu)}.
double soliton_energy_constant(double mu);
/// Energy of the line soliton of mass m: the runaway lower bound.
double runaway_threshold(double mu, double m);

enum class Verdict { ExpectedExistence, ThresholdUndecided };
std::string_view to_string(Verdict v);

struct VerdictReport {
  Verdict verdict;
  double branch_energy;  // E(m) interpolated along the branch
  double threshold;
};
VerdictReport existence_verdict(const Branch& branch, double mu, double m);

}  // namespace graphnls
