#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "graphnls/discretization.hpp"
#include "graphnls/metric_graph.hpp"

namespace testing_support {

using namespace graphnls;

inline MetricGraph tadpole_graph(double loop = 2.0, double truncation = 20.0) {
  GraphDescription d;
  d.vertices = {{"a", 0.0}};
  d.edges = {{"a", "a", loop, ""}, {"a", std::nullopt, kInfinity, ""}};
  d.truncation = truncation;
  return MetricGraph::build(d);
}

// Multi-edge, a pendant internal edge and two half-lines.
inline MetricGraph mixed_graph(double truncation = 12.0) {
  GraphDescription d;
  d.vertices = {{"a", -0.5}, {"b", 0.0}, {"c", 0.3}};
  d.edges = {{"a", "b", 1.5, ""},
             {"b", "a", 2.5, "-sech(x-1.25)^2"},
             {"b", "c", 0.7, ""},
             {"a", std::nullopt, kInfinity, ""},
             {std::nullopt, "b", kInfinity, "0.2*exp(-x)"}};
  d.truncation = truncation;
  return MetricGraph::build(d);
}

inline GraphPoint random_point(const MetricGraph& g, std::mt19937_64& rng) {
  double total = 0.0;
  for (std::size_t e = 0; e < g.num_edges(); ++e) total += g.truncated_length(e);
  double s = std::uniform_real_distribution<double>(0.0, total)(rng);
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const double L = g.truncated_length(e);
    if (s <= L) return {e, s};
    s -= L;
  }
  return {g.num_edges() - 1, g.truncated_length(g.num_edges() - 1)};
}

/// Shortest path by Floyd-Warshall on the graph with p and q spliced in as
/// extra nodes. Half-lines end in a node at the truncation length.
inline double oracle_distance(const MetricGraph& g, const GraphPoint& p, const GraphPoint& q) {
  const std::size_t nv = g.num_vertices();
  std::vector<std::vector<std::pair<double, std::size_t>>> stops(g.num_edges());
  std::size_t n = nv;
  for (std::size_t e = 0; e < g.num_edges(); ++e) {
    const Edge& ed = g.edge(e);
    stops[e].push_back({0.0, ed.from});
    stops[e].push_back({g.truncated_length(e), ed.to ? *ed.to : n++});
  }
  const std::size_t ip = n++, iq = n++;
  stops[p.edge].push_back({p.x, ip});
  stops[q.edge].push_back({q.x, iq});
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, inf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
  for (auto& s : stops) {
    std::sort(s.begin(), s.end());
    for (std::size_t k = 0; k + 1 < s.size(); ++k) {
      const double len = s[k + 1].first - s[k].first;
      auto& a = d[s[k].second][s[k + 1].second];
      a = std::min(a, len);
      d[s[k + 1].second][s[k].second] = a;
    }
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d[ip][iq];
}

/// Random nodal values: a few Gaussian bumps with random phases plus noise.
inline GraphFunction random_function(const MeshPtr& mesh, std::mt19937_64& rng) {
  const MetricGraph& g = mesh->graph();
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<GraphPoint> centres;
  std::vector<Complex> amps;
  std::vector<double> widths;
  const int bumps = 1 + static_cast<int>(rng() % 4);
  for (int k = 0; k < bumps; ++k) {
    centres.push_back(random_point(g, rng));
    amps.emplace_back(u(rng), u(rng));
    widths.push_back(0.3 + 2.0 * std::abs(u(rng)));
  }
  std::vector<DistanceField> fields;
  for (const auto& c : centres) fields.emplace_back(g, c);
  GraphFunction f = GraphFunction::sample(mesh, [&](std::size_t e, double x) {
    Complex v(0.05 * u(rng), 0.05 * u(rng));
    for (std::size_t k = 0; k < fields.size(); ++k) {
      const double r = fields[k](e, x) / widths[k];
      v += amps[k] * std::exp(-r * r);
    }
    return v;
  });
  return f;
}

}  // namespace testing_support
