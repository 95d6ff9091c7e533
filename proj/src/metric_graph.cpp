#include "graphnls/metric_graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <queue>
#include <utility>

#include <nlohmann/json.hpp>

namespace graphnls {

namespace {

using Interval = std::pair<double, double>;

// Length of the union of half-open intervals clipped to [0, upto].
double union_length(std::vector<Interval> parts, double upto) {
  for (auto& [a, b] : parts) {
    a = std::max(a, 0.0);
    b = std::min(b, upto);
  }
  std::erase_if(parts, [](const Interval& iv) { return !(iv.second > iv.first); });
  std::sort(parts.begin(), parts.end());
  double total = 0.0;
  double cur_a = 0.0, cur_b = -1.0;
  bool open = false;
  for (const auto& [a, b] : parts) {
    if (open && a <= cur_b) {
      cur_b = std::max(cur_b, b);
      continue;
    }
    if (open) total += cur_b - cur_a;
    cur_a = a;
    cur_b = b;
    open = true;
  }
  if (open) total += cur_b - cur_a;
  return total;
}

std::string id_to_string(const nlohmann::json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return v.dump();
  throw GraphError("vertex id must be a string or a number, got " + v.dump());
}

}  // namespace

MetricGraph MetricGraph::build(const GraphDescription& desc) {
  MetricGraph g;
  if (desc.vertices.empty()) throw GraphError("graph has no vertices");
  for (const auto& v : desc.vertices) {
    if (!std::isfinite(v.alpha)) throw GraphError("vertex '" + v.id + "': alpha must be finite");
    for (const auto& w : g.vertices_)
      if (w.id == v.id) throw GraphError("duplicate vertex id '" + v.id + "'");
    g.vertices_.push_back({v.id, v.alpha});
  }

  auto lookup = [&](const std::string& id, std::size_t k) {
    for (std::size_t i = 0; i < g.vertices_.size(); ++i)
      if (g.vertices_[i].id == id) return i;
    throw GraphError("edge " + std::to_string(k) + " references unknown vertex '" + id + "'");
  };

  bool has_external = false;
  for (std::size_t k = 0; k < desc.edges.size(); ++k) {
    const auto& in = desc.edges[k];
    Edge e;
    e.potential = in.potential;
    if (!in.from && !in.to) throw GraphError("edge " + std::to_string(k) + " has no endpoint");
    if (std::isnan(in.length) || in.length <= 0.0)
      throw GraphError("edge " + std::to_string(k) + " has nonpositive length");
    if (in.from && in.to) {
      if (!std::isfinite(in.length))
        throw GraphError("edge " + std::to_string(k) + " joins two vertices but has infinite length");
      e.from = lookup(*in.from, k);
      e.to = lookup(*in.to, k);
      e.length = in.length;
    } else {
      if (std::isfinite(in.length))
        throw GraphError("edge " + std::to_string(k) +
                         " has a dangling endpoint but finite length");
      e.from = lookup(in.from ? *in.from : *in.to, k);
      e.length = kInfinity;
      has_external = true;
    }
    g.edges_.push_back(std::move(e));
  }
  if (!has_external) throw GraphError("graph has no external (infinite) edge");

  // connectivity through internal edges
  std::vector<char> seen(g.vertices_.size(), 0);
  std::vector<std::size_t> stack{0};
  seen[0] = 1;
  while (!stack.empty()) {
    std::size_t v = stack.back();
    stack.pop_back();
    for (const auto& e : g.edges_) {
      if (e.external()) continue;
      std::size_t other;
      if (e.from == v) other = *e.to;
      else if (*e.to == v) other = e.from;
      else continue;
      if (!seen[other]) {
        seen[other] = 1;
        stack.push_back(other);
      }
    }
  }
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (!seen[i]) throw GraphError("graph is disconnected: vertex '" + g.vertices_[i].id +
                                   "' is not reachable from '" + g.vertices_[0].id + "'");

  if (desc.truncation) {
    if (!(*desc.truncation > 0.0) || !std::isfinite(*desc.truncation))
      throw GraphError("truncation length must be positive and finite");
    g.truncation_ = *desc.truncation;
  } else {
    g.truncation_ = std::max(40.0, 40.0 * g.longest_internal_length());
  }
  return g;
}

double MetricGraph::truncated_length(std::size_t e) const {
  const Edge& ed = edges_.at(e);
  return ed.external() ? truncation_ : ed.length;
}

double MetricGraph::longest_internal_length() const {
  double longest = 0.0;
  for (const auto& e : edges_)
    if (!e.external()) longest = std::max(longest, e.length);
  return longest;
}

std::size_t MetricGraph::vertex_index(const std::string& id) const {
  for (std::size_t i = 0; i < vertices_.size(); ++i)
    if (vertices_[i].id == id) return i;
  throw GraphError("unknown vertex '" + id + "'");
}

void MetricGraph::check_point(const GraphPoint& p) const {
  if (p.edge >= edges_.size()) throw GraphError("point refers to a nonexistent edge");
  if (!(p.x >= 0.0) || p.x > edges_[p.edge].length || !std::isfinite(p.x))
    throw GraphError("point coordinate outside its edge interval");
}

std::vector<double> MetricGraph::vertex_distances(const GraphPoint& y) const {
  check_point(y);
  // Dijkstra on the vertices plus y as one extra node.
  const std::size_t nv = vertices_.size();
  const std::size_t ynode = nv;
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(nv + 1);
  auto link = [&](std::size_t a, std::size_t b, double w) {
    adj[a].emplace_back(b, w);
    adj[b].emplace_back(a, w);
  };
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const Edge& e = edges_[k];
    if (k == y.edge) {
      link(e.from, ynode, y.x);
      if (!e.external()) link(ynode, *e.to, e.length - y.x);
    } else if (!e.external()) {
      link(e.from, *e.to, e.length);
    }
  }
  std::vector<double> dist(nv + 1, kInfinity);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[ynode] = 0.0;
  heap.emplace(0.0, ynode);
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    for (auto [v, w] : adj[u]) {
      if (d + w < dist[v]) {
        dist[v] = d + w;
        heap.emplace(dist[v], v);
      }
    }
  }
  dist.pop_back();
  return dist;
}

DistanceField MetricGraph::distance_field(const GraphPoint& y) const { return DistanceField(*this, y); }

double MetricGraph::distance(const GraphPoint& p, const GraphPoint& q) const {
  check_point(q);
  return distance_field(p)(q);
}

double MetricGraph::ball_volume(const GraphPoint& y, double t) const {
  if (t < 0.0) throw GraphError("ball radius must be nonnegative");
  DistanceField field(*this, y);
  double total = 0.0;
  for (std::size_t e = 0; e < edges_.size(); ++e) total += field.sublevel_length(e, t, edges_[e].length);
  return total;
}

double MetricGraph::truncated_diameter() const {
  // Exact eccentricity for each sampled centre; centres on a grid of spacing
  // shortest/64, so the result is within that spacing of the true diameter.
  double shortest = kInfinity;
  for (std::size_t e = 0; e < edges_.size(); ++e) shortest = std::min(shortest, truncated_length(e));
  const double spacing = shortest / 64.0;
  double best = 0.0;
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const double len = truncated_length(e);
    const auto n = static_cast<std::size_t>(std::ceil(len / spacing));
    for (std::size_t i = 0; i <= n; ++i) {
      GraphPoint y{e, std::min(len, len * static_cast<double>(i) / static_cast<double>(n))};
      DistanceField field(*this, y);
      const auto vd = vertex_distances(y);
      for (std::size_t k = 0; k < edges_.size(); ++k) {
        const double lk = truncated_length(k);
        // candidates: ends plus line crossings
        std::vector<double> xs{0.0, lk};
        const Edge& ek = edges_[k];
        if (!ek.external()) xs.push_back(0.5 * (ek.length + vd[*ek.to] - vd[ek.from]));
        if (k == y.edge) {
          xs.push_back(y.x);
          xs.push_back(0.5 * (y.x - vd[ek.from]));
          if (!ek.external()) xs.push_back(0.5 * (ek.length + vd[*ek.to] + y.x));
        }
        for (double x : xs) {
          if (x < 0.0 || x > lk) continue;
          best = std::max(best, field(k, x));
        }
      }
    }
  }
  return best;
}

DistanceField::DistanceField(const MetricGraph& g, const GraphPoint& y)
    : graph_(&g), centre_(y), vdist_(g.vertex_distances(y)) {}

double DistanceField::operator()(std::size_t edge, double x) const {
  const Edge& e = graph_->edge(edge);
  double d = x + vdist_[e.from];
  if (!e.external()) d = std::min(d, e.length - x + vdist_[*e.to]);
  if (edge == centre_.edge) d = std::min(d, std::abs(x - centre_.x));
  return d;
}

double DistanceField::sublevel_length(std::size_t edge, double t, double upto) const {
  if (t <= 0.0) return 0.0;
  const Edge& e = graph_->edge(edge);
  std::vector<Interval> parts;
  parts.emplace_back(0.0, t - vdist_[e.from]);
  if (!e.external()) parts.emplace_back(e.length - (t - vdist_[*e.to]), e.length);
  if (edge == centre_.edge) parts.emplace_back(centre_.x - t, centre_.x + t);
  return union_length(std::move(parts), upto);
}

GraphDescription parse_graph_description(const nlohmann::json& doc) {
  GraphDescription desc;
  try {
    for (const auto& v : doc.at("vertices")) {
      GraphDescription::VertexEntry entry;
      entry.id = id_to_string(v.at("id"));
      if (v.contains("alpha")) entry.alpha = v.at("alpha").get<double>();
      desc.vertices.push_back(entry);
    }
    for (const auto& e : doc.at("edges")) {
      GraphDescription::EdgeEntry entry;
      if (e.contains("from") && !e.at("from").is_null()) entry.from = id_to_string(e.at("from"));
      if (e.contains("to") && !e.at("to").is_null()) entry.to = id_to_string(e.at("to"));
      const auto& len = e.at("length");
      if (len.is_string()) {
        const auto s = len.get<std::string>();
        if (s != "inf" && s != "infinity") throw GraphError("edge length string must be \"inf\", got \"" + s + "\"");
        entry.length = kInfinity;
      } else {
        entry.length = len.get<double>();
      }
      if (e.contains("potential") && !e.at("potential").is_null())
        entry.potential = e.at("potential").get<std::string>();
      desc.edges.push_back(entry);
    }
    if (doc.contains("truncation") && !doc.at("truncation").is_null())
      desc.truncation = doc.at("truncation").get<double>();
  } catch (const nlohmann::json::exception& ex) {
    throw GraphError(std::string("malformed graph description: ") + ex.what());
  }
  return desc;
}

MetricGraph graph_from_json(const nlohmann::json& doc) { return MetricGraph::build(parse_graph_description(doc)); }

MetricGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GraphError("cannot open graph file '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& ex) {
    throw GraphError("'" + path + "': JSON parse error at byte " + std::to_string(ex.byte) + ": " + ex.what());
  }
  return graph_from_json(doc);
}

MetricGraph make_star(std::size_t arms, double alpha, double truncation) {
  GraphDescription desc;
  desc.vertices.push_back({"0", alpha});
  for (std::size_t i = 0; i < arms; ++i) desc.edges.push_back({std::string("0"), std::nullopt, kInfinity, ""});
  desc.truncation = truncation;
  return MetricGraph::build(desc);
}

}  // namespace graphnls
