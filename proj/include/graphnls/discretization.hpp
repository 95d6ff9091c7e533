#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "graphnls/metric_graph.hpp"
#include "graphnls/potential.hpp"

namespace graphnls {

using Complex = std::complex<double>;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using SparseMatrix = Eigen::SparseMatrix<double>;

class MeshError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Uniform P1 mesh of one edge. Node j sits at x = j * h.
struct EdgeMesh {
  std::size_t intervals = 0;
  double h = 0.0;
  double length = 0.0;          // truncated length for external edges
  std::vector<long> dofs;       // per node, -1 marks the Dirichlet far end
};

/// Mesh of the truncated graph with one shared degree of freedom per vertex.
class Mesh {
 public:
  static std::shared_ptr<const Mesh> build(const MetricGraph& g, double h_target);

  const MetricGraph& graph() const { return graph_; }
  std::size_t num_dofs() const { return num_dofs_; }
  std::size_t num_edges() const { return edges_.size(); }
  const EdgeMesh& edge(std::size_t e) const { return edges_.at(e); }
  long vertex_dof(std::size_t v) const { return static_cast<long>(v); }
  double node_x(std::size_t e, std::size_t j) const { return static_cast<double>(j) * edges_[e].h; }
  double max_h() const;

  /// Quadrature weight of each DOF (sum of h/2 over adjacent intervals); these
  /// are also the entries of the diagonal mass matrix.
  const RealVector& weights() const { return weights_; }
  /// One representative point per DOF.
  const std::vector<GraphPoint>& dof_points() const { return dof_points_; }

 private:
  MetricGraph graph_;
  std::vector<EdgeMesh> edges_;
  std::size_t num_dofs_ = 0;
  RealVector weights_;
  std::vector<GraphPoint> dof_points_;
};

using MeshPtr = std::shared_ptr<const Mesh>;

inline MeshPtr make_mesh(const MetricGraph& g, double h_target) { return Mesh::build(g, h_target); }

/// Complex values on the free DOFs of a mesh. Continuity at vertices holds by
/// construction since every edge end at a vertex reads the same DOF.
struct GraphFunction {
  MeshPtr mesh;
  ComplexVector values;

  GraphFunction() = default;
  GraphFunction(MeshPtr m, ComplexVector v);

  static GraphFunction zero(MeshPtr m);
  /// Samples f(edge, x) at every free node.
  static GraphFunction sample(MeshPtr m, const std::function<Complex(std::size_t, double)>& f);

  /// Nodal value, zero at Dirichlet ends.
  Complex at(std::size_t edge, std::size_t node) const;
  std::size_t size() const { return static_cast<std::size_t>(values.size()); }
};

GraphFunction operator*(Complex c, const GraphFunction& f);
GraphFunction operator+(const GraphFunction& a, const GraphFunction& b);
GraphFunction operator-(const GraphFunction& a, const GraphFunction& b);

/// Discrete quadratic form: A carries kinetic, potential and vertex terms, K the
/// kinetic part alone, M the (diagonal) mass matrix.
struct LinearForm {
  MeshPtr mesh;
  SparseMatrix A;
  SparseMatrix K;
  RealVector mass_diag;

  SparseMatrix mass_matrix() const;
  std::size_t size() const { return static_cast<std::size_t>(mass_diag.size()); }
};

/// y = S x for real sparse S and complex x.
ComplexVector apply(const SparseMatrix& s, const ComplexVector& x);
/// Re(f* S f).
double quadratic(const SparseMatrix& s, const ComplexVector& f);
/// M-weighted inner product (f, g) = sum_i w_i conj(f_i) g_i.
Complex inner(const RealVector& w, const ComplexVector& f, const ComplexVector& g);

LinearForm assemble(MeshPtr mesh, std::span<const PotentialExpr> potentials, std::span<const double> alphas);
/// Uses the potentials and couplings stored in the mesh's graph.
LinearForm assemble(MeshPtr mesh);

double lp_norm(const GraphFunction& f, double p);
double h1_norm(const GraphFunction& f);
/// ||f'||^2 by per-interval differences.
double kinetic(const GraphFunction& f);

struct GnCheck {
  double lhs;       // ||f||_p
  double rhs;       // ||f||_{H1}^a ||f||_q^{1-a}
  double exponent;  // a = 2/(2+q) (1 - q/p)
  double ratio() const { return rhs > 0.0 ? lhs / rhs : 0.0; }
};
GnCheck gn_check(const GraphFunction& f, double p, double q);

/// Empirical form bound |(f,Wf) + sum alpha|f(v)|^2| <= a ||f'||^2 + b ||f||^2 at a fixed a.
struct KlmnFit {
  double a;
  double b;
};
KlmnFit fit_klmn(const LinearForm& form, std::span<const GraphFunction> samples, double a = 0.5);

/// Integrals of the sign parts of W over the truncated graph (midpoint rule):
/// int W+ and int (W-)^r. The tail is the part of int (W-)^r coming from the
/// outer half of the half-lines; a large share suggests the untruncated
/// integral diverges.
struct PotentialReport {
  double positive_l1 = 0.0;
  double negative_lr = 0.0;
  double negative_lr_tail = 0.0;
  double max_negative = 0.0;

  bool negative_lr_suspect(double share = 0.1) const { return negative_lr_tail > share * negative_lr; }
};
PotentialReport potential_report(const Mesh& mesh, std::span<const PotentialExpr> potentials, double r);
std::vector<PotentialExpr> graph_potentials(const MetricGraph& g);

}  // namespace graphnls
