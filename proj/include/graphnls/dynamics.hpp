#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "graphnls/discretization.hpp"

namespace graphnls {

class DynamicsError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Scheme { Strang, CrankNicolson };
std::string_view to_string(Scheme s);
Scheme scheme_from_string(std::string_view s);

struct EvolveOptions {
  double mu = 1.0;
  double dt = 1e-3;
  double T = 1.0;
  Scheme scheme = Scheme::Strang;
  std::size_t snapshot_stride = 100;  // steps between stored snapshots
  double nonlinearity = 1.0;          // 0 switches the nonlinear term off
  std::optional<double> runaway_radius;
  double fixed_point_tol = 1e-13;     // Crank-Nicolson inner iteration, relative
  std::size_t max_fixed_point = 100;
};

struct Snapshot {
  double t = 0.0;
  GraphFunction psi;
  double mass = 0.0;
  double energy = 0.0;
  double runaway_fraction = 0.0;
};

struct Trajectory {
  std::vector<Snapshot> snapshots;  // strictly increasing t
  std::vector<double> times;        // every step, including t = 0
  std::vector<double> masses;
  std::vector<double> energies;
  double dt = 0.0;
  Scheme scheme = Scheme::Strang;
};

/// Integrates i psi' = H psi - |psi|^{2mu} psi. Strang: exact half-step phase
/// rotations around a Crank-Nicolson linear step. CrankNicolson: implicit
/// midpoint rule with a fixed-point iteration on the nonlinearity.
Trajectory evolve(const GraphFunction& f0, const LinearForm& form, const EvolveOptions& opts);

/// Exact flow of i f' = -|f|^{2mu} f over time `duration`: f e^{i duration |f|^{2mu}} nodewise.
GraphFunction phase_step(const GraphFunction& f, double mu, double duration);

/// Energy with the nonlinear term scaled by `nonlinearity`.
double evolution_energy(const GraphFunction& f, const LinearForm& form, double mu, double nonlinearity);

struct ConservationReport {
  double mass_drift;    // max_t |M(t) - M(0)| / M(0)
  double energy_drift;  // max_t |E(t) - E(0)| / max(|E(0)|, floor)
};
ConservationReport conservation_report(const Trajectory& traj, double energy_floor = 1e-12);

/// H1 inner product sum_e int conj(u') v' + conj(u) v.
Complex h1_inner(const GraphFunction& u, const GraphFunction& v);

/// Per snapshot: min over theta of ||psi(t) - e^{i theta} ref||_{H1}.
std::vector<double> orbital_distance(const Trajectory& traj, const GraphFunction& ref);

}  // namespace graphnls
