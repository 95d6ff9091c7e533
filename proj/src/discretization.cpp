#include "graphnls/discretization.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace graphnls {

MeshPtr Mesh::build(const MetricGraph& g, double h_target) {
  if (!(h_target > 0.0) || !std::isfinite(h_target)) throw MeshError("mesh size must be positive");
  auto mesh = std::make_shared<Mesh>();
  mesh->graph_ = g;
  const std::size_t nv = g.num_vertices();
  long next = static_cast<long>(nv);
  mesh->dof_points_.resize(nv);
  std::vector<char> placed(nv, 0);
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edge(e);
    const double len = g.truncated_length(e);
    if (h_target >= len)
      throw MeshError("mesh size " + std::to_string(h_target) + " is not below the length of edge " +
                      std::to_string(e));
    EdgeMesh em;
    em.length = len;
    em.intervals = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(len / h_target - 1e-9)));
    em.h = len / static_cast<double>(em.intervals);
    em.dofs.resize(em.intervals + 1);
    em.dofs.front() = static_cast<long>(ed.from);
    for (std::size_t j = 1; j < em.intervals; ++j) {
      em.dofs[j] = next++;
      mesh->dof_points_.push_back({e, static_cast<double>(j) * em.h});
    }
    em.dofs.back() = ed.external() ? -1 : static_cast<long>(*ed.to);
    if (!placed[ed.from]) {
      mesh->dof_points_[ed.from] = {e, 0.0};
      placed[ed.from] = 1;
    }
    if (!ed.external() && !placed[*ed.to]) {
      mesh->dof_points_[*ed.to] = {e, len};
      placed[*ed.to] = 1;
    }
    mesh->edges_.push_back(std::move(em));
  }
  mesh->num_dofs_ = static_cast<std::size_t>(next);
  mesh->weights_ = RealVector::Zero(next);
  for (const auto& em : mesh->edges_) {
    for (std::size_t j = 0; j < em.intervals; ++j) {
      for (long d : {em.dofs[j], em.dofs[j + 1]})
        if (d >= 0) mesh->weights_[d] += 0.5 * em.h;
    }
  }
  return mesh;
}

double Mesh::max_h() const {
  double h = 0.0;
  for (const auto& em : edges_) h = std::max(h, em.h);
  return h;
}

GraphFunction::GraphFunction(MeshPtr m, ComplexVector v) : mesh(std::move(m)), values(std::move(v)) {
  if (static_cast<std::size_t>(values.size()) != mesh->num_dofs())
    throw MeshError("value vector does not match the mesh");
}

GraphFunction GraphFunction::zero(MeshPtr m) {
  const auto n = static_cast<Eigen::Index>(m->num_dofs());
  return GraphFunction(std::move(m), ComplexVector::Zero(n));
}

GraphFunction GraphFunction::sample(MeshPtr m, const std::function<Complex(std::size_t, double)>& f) {
  GraphFunction out = zero(m);
  const auto& pts = m->dof_points();
  for (std::size_t i = 0; i < pts.size(); ++i) out.values[static_cast<Eigen::Index>(i)] = f(pts[i].edge, pts[i].x);
  return out;
}

Complex GraphFunction::at(std::size_t edge, std::size_t node) const {
  const long d = mesh->edge(edge).dofs.at(node);
  return d < 0 ? Complex{} : values[d];
}

GraphFunction operator*(Complex c, const GraphFunction& f) { return GraphFunction(f.mesh, c * f.values); }
GraphFunction operator+(const GraphFunction& a, const GraphFunction& b) {
  if (a.mesh != b.mesh) throw MeshError("functions live on different meshes");
  return GraphFunction(a.mesh, a.values + b.values);
}
GraphFunction operator-(const GraphFunction& a, const GraphFunction& b) {
  if (a.mesh != b.mesh) throw MeshError("functions live on different meshes");
  return GraphFunction(a.mesh, a.values - b.values);
}

SparseMatrix LinearForm::mass_matrix() const {
  SparseMatrix m(mass_diag.size(), mass_diag.size());
  m.reserve(Eigen::VectorXi::Constant(mass_diag.size(), 1));
  for (Eigen::Index i = 0; i < mass_diag.size(); ++i) m.insert(i, i) = mass_diag[i];
  m.makeCompressed();
  return m;
}

ComplexVector apply(const SparseMatrix& s, const ComplexVector& x) {
  RealVector re = s * x.real();
  RealVector im = s * x.imag();
  ComplexVector y(re.size());
  y.real() = re;
  y.imag() = im;
  return y;
}

double quadratic(const SparseMatrix& s, const ComplexVector& f) {
  const RealVector re = f.real(), im = f.imag();
  return re.dot(s * re) + im.dot(s * im);
}

Complex inner(const RealVector& w, const ComplexVector& f, const ComplexVector& g) {
  Complex acc{};
  for (Eigen::Index i = 0; i < w.size(); ++i) acc += w[i] * std::conj(f[i]) * g[i];
  return acc;
}

LinearForm assemble(MeshPtr mesh, std::span<const PotentialExpr> potentials, std::span<const double> alphas) {
  const MetricGraph& g = mesh->graph();
  if (potentials.size() != g.num_edges()) throw MeshError("one potential per edge is required");
  if (alphas.size() != g.num_vertices()) throw MeshError("one coupling per vertex is required");
  const auto n = static_cast<Eigen::Index>(mesh->num_dofs());
  std::vector<Eigen::Triplet<double>> kin, pot;
  for (std::size_t e = 0; e < mesh->num_edges(); ++e) {
    const EdgeMesh& em = mesh->edge(e);
    const PotentialExpr& w = potentials[e];
    const bool zero_w = w.is_zero_constant();
    for (std::size_t j = 0; j < em.intervals; ++j) {
      const long d[2] = {em.dofs[j], em.dofs[j + 1]};
      double wm = 0.0;
      if (!zero_w) {
        const double mid = (static_cast<double>(j) + 0.5) * em.h;
        try {
          wm = w(mid);
        } catch (const EvalError& ex) {
          throw EvalError("potential on edge " + std::to_string(e) + " at x=" + std::to_string(mid) + ": " +
                          ex.what());
        }
      }
      for (int a = 0; a < 2; ++a) {
        if (d[a] < 0) continue;
        for (int b = 0; b < 2; ++b) {
          if (d[b] < 0) continue;
          kin.emplace_back(d[a], d[b], (a == b ? 1.0 : -1.0) / em.h);
          if (!zero_w) pot.emplace_back(d[a], d[b], wm * em.h * (a == b ? 2.0 : 1.0) / 6.0);
        }
      }
    }
  }
  for (std::size_t v = 0; v < alphas.size(); ++v)
    if (alphas[v] != 0.0) pot.emplace_back(mesh->vertex_dof(v), mesh->vertex_dof(v), alphas[v]);

  LinearForm form;
  form.mesh = mesh;
  form.K.resize(n, n);
  form.K.setFromTriplets(kin.begin(), kin.end());
  SparseMatrix p(n, n);
  p.setFromTriplets(pot.begin(), pot.end());
  form.A = form.K + p;
  form.A.makeCompressed();
  form.mass_diag = mesh->weights();
  return form;
}

std::vector<PotentialExpr> graph_potentials(const MetricGraph& g) {
  std::vector<PotentialExpr> out;
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    try {
      out.push_back(parse_potential_or_zero(g.edge(e).potential));
    } catch (const ParseError& ex) {
      throw ParseError(ex.offset(), "potential of edge " + std::to_string(e) + ": " + ex.what());
    }
  }
  return out;
}

LinearForm assemble(MeshPtr mesh) {
  const MetricGraph& g = mesh->graph();
  const auto pots = graph_potentials(g);
  std::vector<double> alphas;
  for (const auto& v : g.vertices()) alphas.push_back(v.alpha);
  return assemble(std::move(mesh), pots, alphas);
}

double lp_norm(const GraphFunction& f, double p) {
  if (!(p >= 2.0)) throw MeshError("lp_norm requires p >= 2");
  if (std::isinf(p)) return f.values.size() ? f.values.cwiseAbs().maxCoeff() : 0.0;
  const RealVector& w = f.mesh->weights();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) acc += w[i] * std::pow(std::abs(f.values[i]), p);
  return std::pow(acc, 1.0 / p);
}

double kinetic(const GraphFunction& f) {
  double acc = 0.0;
  for (std::size_t e = 0; e < f.mesh->num_edges(); ++e) {
    const EdgeMesh& em = f.mesh->edge(e);
    for (std::size_t j = 0; j < em.intervals; ++j) acc += std::norm(f.at(e, j + 1) - f.at(e, j)) / em.h;
  }
  return acc;
}

double h1_norm(const GraphFunction& f) {
  const double l2 = lp_norm(f, 2.0);
  return std::sqrt(kinetic(f) + l2 * l2);
}

GnCheck gn_check(const GraphFunction& f, double p, double q) {
  if (!(q >= 2.0) || !(p >= q)) throw MeshError("gn_check requires 2 <= q <= p");
  const double a = std::isinf(p) ? 2.0 / (2.0 + q) : 2.0 / (2.0 + q) * (1.0 - q / p);
  const double lhs = lp_norm(f, p);
  const double rhs = std::pow(h1_norm(f), a) * std::pow(lp_norm(f, q), 1.0 - a);
  return {lhs, rhs, a};
}

KlmnFit fit_klmn(const LinearForm& form, std::span<const GraphFunction> samples, double a) {
  const SparseMatrix pert = form.A - form.K;
  double b = 0.0;
  for (const auto& f : samples) {
    const double mass = inner(form.mass_diag, f.values, f.values).real();
    if (mass <= 0.0) continue;
    const double lhs = std::abs(quadratic(pert, f.values));
    b = std::max(b, (lhs - a * quadratic(form.K, f.values)) / mass);
  }
  return {a, b};
}

PotentialReport potential_report(const Mesh& mesh, std::span<const PotentialExpr> potentials, double r) {
  PotentialReport rep;
  for (std::size_t e = 0; e < mesh.num_edges(); ++e) {
    const EdgeMesh& em = mesh.edge(e);
    const bool external = mesh.graph().edges()[e].external();
    for (std::size_t j = 0; j < em.intervals; ++j) {
      const double x = (static_cast<double>(j) + 0.5) * em.h;
      const auto [plus, minus] = split_sign(potentials[e](x));
      const double neg = std::pow(minus, r) * em.h;
      rep.positive_l1 += plus * em.h;
      rep.negative_lr += neg;
      if (external && x > 0.5 * em.length) rep.negative_lr_tail += neg;
      rep.max_negative = std::max(rep.max_negative, minus);
    }
  }
  return rep;
}

}  // namespace graphnls
