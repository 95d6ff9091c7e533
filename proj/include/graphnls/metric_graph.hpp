#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace graphnls {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Raised for malformed or inadmissible graph descriptions.
class GraphError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Vertex {
  std::string id;
  double alpha = 0.0;  // strength of the delta coupling
};

/// An edge is the interval [0, length]. Internal edges run from `from` (x = 0)
/// to `to` (x = length); external edges have no `to` and infinite length.
struct Edge {
  std::size_t from = 0;
  std::optional<std::size_t> to;
  double length = kInfinity;
  std::string potential;  // potential expression source, empty means W = 0

  bool external() const { return !to.has_value(); }
};

/// A point (e, x) of the graph.
struct GraphPoint {
  std::size_t edge = 0;
  double x = 0.0;
};

/// Unvalidated description of a graph, e.g. as read from a JSON file.
struct GraphDescription {
  struct VertexEntry {
    std::string id;
    double alpha = 0.0;
  };
  struct EdgeEntry {
    std::optional<std::string> from;
    std::optional<std::string> to;
    double length = kInfinity;
    std::string potential;
  };
  std::vector<VertexEntry> vertices;
  std::vector<EdgeEntry> edges;
  std::optional<double> truncation;
};

class DistanceField;

/// Connected starlike metric graph: a compact core with at least one half-line.
/// Immutable once built.
class MetricGraph {
 public:
  /// Validates the description and orients external edges so that the attached
  /// vertex sits at x = 0.
  static MetricGraph build(const GraphDescription& desc);

  const std::vector<Vertex>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_edges() const { return edges_.size(); }
  const Edge& edge(std::size_t e) const { return edges_.at(e); }

  /// Length at which external edges are cut for discretization.
  double truncation() const { return truncation_; }
  /// Length of edge e, with external edges cut at truncation().
  double truncated_length(std::size_t e) const;
  double longest_internal_length() const;
  std::size_t vertex_index(const std::string& id) const;

  /// Throws GraphError when p is not a point of the graph.
  void check_point(const GraphPoint& p) const;

  /// Shortest-path distances from y to every vertex.
  std::vector<double> vertex_distances(const GraphPoint& y) const;
  DistanceField distance_field(const GraphPoint& y) const;

  double distance(const GraphPoint& p, const GraphPoint& q) const;
  /// Length of the open ball {x : d(x, y) < t}.
  double ball_volume(const GraphPoint& y, double t) const;
  /// Largest distance between two points of the truncated graph.
  double truncated_diameter() const;

 private:
  std::vector<Vertex> vertices_;
  std::vector<Edge> edges_;
  double truncation_ = 40.0;
};

/// x -> d(x, y) for a fixed centre y, evaluated edge by edge as the minimum over
/// the two endpoints (plus the direct path when x shares y's edge).
class DistanceField {
 public:
  DistanceField(const MetricGraph& g, const GraphPoint& y);

  double operator()(std::size_t edge, double x) const;
  double operator()(const GraphPoint& p) const { return (*this)(p.edge, p.x); }
  /// Measure of {x in [0, upto] : d((edge, x), y) < t}.
  double sublevel_length(std::size_t edge, double t, double upto) const;

 private:
  const MetricGraph* graph_;
  GraphPoint centre_;
  std::vector<double> vdist_;
};

GraphDescription parse_graph_description(const nlohmann::json& doc);
MetricGraph load_graph(const std::string& path);
MetricGraph graph_from_json(const nlohmann::json& doc);

/// N half-lines glued at a single vertex with coupling alpha.
MetricGraph make_star(std::size_t arms, double alpha, double truncation = 40.0);

}  // namespace graphnls
