#include "liftnet/network.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "liftnet/error.hpp"

namespace liftnet {

namespace {

double cross(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

Vec2 clamp_to(const Domain& d, const Vec2& p) {
  return Vec2(std::clamp(p.x(), 0.0, d.width), std::clamp(p.y(), 0.0, d.height));
}

struct TriGeom {
  Vec2 p[3];
  double area;
  Vec2 grad[3];
};

TriGeom tri_geom(const PrismGrid& grid, int t) {
  TriGeom g;
  const auto& v = grid.triangle(t).v;
  for (int k = 0; k < 3; ++k) g.p[k] = grid.node(v[k]);
  const double two_a = cross(g.p[1] - g.p[0], g.p[2] - g.p[0]);
  g.area = 0.5 * two_a;
  for (int k = 0; k < 3; ++k) {
    const Vec2 e = g.p[(k + 2) % 3] - g.p[(k + 1) % 3];
    g.grad[k] = Vec2(-e.y(), e.x()) / two_a;
  }
  return g;
}

double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double l2 = d.squaredNorm();
  const double t = l2 > 0.0 ? std::clamp((p - a).dot(d) / l2, 0.0, 1.0) : 0.0;
  return (a + t * d - p).norm();
}

}  // namespace

double NetworkExtract::energy(const TransportCost& cost) const {
  double e = 0.0;
  for (const NetworkSegment& s : segments) e += cost(s.mass) * (s.b - s.a).norm();
  return e;
}

std::vector<double> source_image(const DofLayout& layout, const Eigen::VectorXd& V) {
  if (V.size() != layout.q_v()) throw Error(ErrorCode::DimensionMismatch, "V has wrong length");
  std::vector<double> u(layout.columns().size(), 0.0);
  for (std::size_t n = 0; n < u.size(); ++n) {
    const Column& c = layout.columns()[n];
    for (int k = 0; k < c.intervals(); ++k) u[n] += V[c.v_offset + k] * c.height(k);
  }
  return u;
}

std::vector<double> rounded_image(const DofLayout& layout, const Eigen::VectorXd& V, double theta) {
  if (V.size() != layout.q_v()) throw Error(ErrorCode::DimensionMismatch, "V has wrong length");
  std::vector<double> u(layout.columns().size(), 0.0);
  for (std::size_t n = 0; n < u.size(); ++n) {
    const Column& c = layout.columns()[n];
    for (int k = 0; k < c.intervals(); ++k)
      if (V[c.v_offset + k] > theta) u[n] += c.height(k);
  }
  return u;
}

double image_at(const PrismGrid& grid, const std::vector<double>& u, const Vec2& p) {
  const Vec2 q = clamp_to(grid.domain(), p);
  double best_out = std::numeric_limits<double>::infinity();
  double best_val = 0.0;
  for (int t : grid.leaf_triangles()) {
    const TriGeom g = tri_geom(grid, t);
    double lam[3], outside = 0.0;
    for (int k = 0; k < 3; ++k) {
      lam[k] = 1.0 / 3.0 + g.grad[k].dot(q - (g.p[0] + g.p[1] + g.p[2]) / 3.0);
      outside = std::max(outside, -lam[k]);
    }
    if (outside < best_out) {
      best_out = outside;
      best_val = 0.0;
      const auto& v = grid.triangle(t).v;
      for (int k = 0; k < 3; ++k) best_val += std::clamp(lam[k], 0.0, 1.0) * u[v[k]];
      if (outside <= 1e-12) break;
    }
  }
  return best_val;
}

NetworkExtract extract_network(const PrismGrid& grid, const DofLayout& layout, const Eigen::VectorXd& V,
                               const BoundaryData& data, double jump_threshold) {
  if (!(jump_threshold > 0.0 && jump_threshold < 1.0))
    throw Error(ErrorCode::InvalidArgument, "jump_threshold must lie in (0,1)");
  NetworkExtract out;
  out.u = source_image(layout, V);
  std::vector<double> plateaus(data.jump_values().begin(), data.jump_values().end());
  plateaus.push_back(0.0);
  std::sort(plateaus.begin(), plateaus.end());
  plateaus.erase(std::unique(plateaus.begin(), plateaus.end(),
                             [](double x, double y) { return std::abs(x - y) <= 1e-12; }),
                 plateaus.end());
  if (plateaus.size() < 2) return out;
  double min_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < plateaus.size(); ++i) min_gap = std::min(min_gap, plateaus[i + 1] - plateaus[i]);

  for (int t : grid.leaf_triangles()) {
    const TriGeom g = tri_geom(grid, t);
    const auto& v = grid.triangle(t).v;
    double diam = 0.0;
    for (int k = 0; k < 3; ++k) diam = std::max(diam, (g.p[k] - g.p[(k + 1) % 3]).norm());
    for (std::size_t i = 0; i + 1 < plateaus.size(); ++i) {
      const double level = 0.5 * (plateaus[i] + plateaus[i + 1]);
      const double gap = plateaus[i + 1] - plateaus[i];
      Vec2 pts[2];
      int np = 0;
      for (int k = 0; k < 3 && np < 2; ++k) {
        const double x = out.u[v[k]] - level, y = out.u[v[(k + 1) % 3]] - level;
        if ((x < 0.0) != (y < 0.0)) {
          const double w = x / (x - y);
          pts[np++] = g.p[k] + w * (g.p[(k + 1) % 3] - g.p[k]);
        }
      }
      if (np != 2) continue;
      const double len = (pts[1] - pts[0]).norm();
      if (len <= 0.0) continue;
      const Vec2 tangent = (pts[1] - pts[0]) / len;
      const Vec2 n(-tangent.y(), tangent.x());
      const Vec2 c = 0.5 * (pts[0] + pts[1]);
      // u-jump across a band of two elements on either side of the level line
      const double mass =
          std::abs(image_at(grid, out.u, c + 2.0 * diam * n) - image_at(grid, out.u, c - 2.0 * diam * n));
      if (mass < jump_threshold * min_gap) continue;
      // a jump of size m is crossed by m / gap of these level lines
      const double eff = len * gap / mass;
      out.segments.push_back({c - 0.5 * eff * tangent, c + 0.5 * eff * tangent, mass, t, diam});
    }
  }
  return out;
}

void write_network_csv(const NetworkExtract& net, std::ostream& os) {
  os << "x1,y1,x2,y2,mass\n";
  os.precision(12);
  for (const NetworkSegment& s : net.segments)
    os << s.a.x() << ',' << s.a.y() << ',' << s.b.x() << ',' << s.b.y() << ',' << s.mass << '\n';
}

std::vector<double> graph_image(const GraphFlux& g, const BoundaryData& data, const std::vector<Vec2>& points) {
  const Domain& d = data.domain();
  std::vector<double> out(points.size(), 0.0);
  const double tol = 1e-9 * std::max(d.width, d.height);
  auto near_atom = [&](const Vec2& b) {
    for (const BoundaryAtom& a : data.atoms())
      if ((d.point_of_arclength(a.arclength) - b).norm() < tol) return true;
    return false;
  };
  // Feet must not sit on an edge (edges may run along the boundary) and the
  // path to p must not pass through a vertex.
  auto bad_path = [&](const Vec2& a, const Vec2& b) {
    for (const Vec2& v : g.vertices)
      if (point_segment_distance(v, a, b) < tol && (v - a).norm() > tol) return true;
    for (const GraphEdge& e : g.edges)
      if (point_segment_distance(a, g.vertices[e.from], g.vertices[e.to]) < tol) return true;
    return false;
  };
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Vec2& p = points[i];
    if (d.on_boundary(p, tol)) {
      out[i] = data.cumulative_at(d.snap(p, tol));
      continue;
    }
    const Vec2 feet[4] = {Vec2(0.0, p.y()), Vec2(d.width, p.y()), Vec2(p.x(), 0.0), Vec2(p.x(), d.height)};
    int order[4] = {0, 1, 2, 3};
    std::sort(order, order + 4, [&](int a, int b) { return (feet[a] - p).norm() < (feet[b] - p).norm(); });
    Vec2 foot = feet[order[0]];
    for (int k : order)
      if (!near_atom(feet[k]) && !bad_path(feet[k], p)) {
        foot = feet[k];
        break;
      }
    double u = data.cumulative_at(foot);
    const Vec2 t = p - foot;
    for (const GraphEdge& e : g.edges) {
      const Vec2 q0 = g.vertices[e.from], de = g.vertices[e.to] - q0;
      const double den = cross(t, de);
      if (std::abs(den) < 1e-15) continue;
      const Vec2 w = q0 - foot;
      const double s_path = cross(w, de) / den;
      const double s_edge = cross(w, t) / den;
      if (s_path > 0.0 && s_path <= 1.0 && s_edge >= 0.0 && s_edge <= 1.0) u += den > 0.0 ? e.weight : -e.weight;
    }
    out[i] = u;
  }
  return out;
}

TopologyMatch classify_topology(const PrismGrid& grid, const std::vector<double>& u,
                                const BoundaryData& data, const std::vector<TopologyResult>& candidates,
                                double tie_tol) {
  if (static_cast<int>(u.size()) != grid.node_count())
    throw Error(ErrorCode::DimensionMismatch, "image must have one value per node");
  std::vector<double> weight(grid.node_count(), 0.0);
  for (int t : grid.leaf_triangles())
    for (int v : grid.triangle(t).v) weight[v] += grid.triangle_area(t) / 3.0;
  TopologyMatch out;
  for (const TopologyResult& c : candidates) {
    const std::vector<double> ug = graph_image(c.graph, data, grid.nodes());
    double dist = 0.0;
    for (int n = 0; n < grid.node_count(); ++n) dist += weight[n] * std::abs(ug[n] - u[n]);
    out.distances.push_back(dist);
  }
  for (int i = 0; i < static_cast<int>(out.distances.size()); ++i)
    if (out.best < 0 || out.distances[i] < out.distances[out.best]) out.best = i;
  for (int i = 0; i < static_cast<int>(out.distances.size()); ++i)
    if (out.distances[i] <= out.distances[out.best] + tie_tol) out.tied.push_back(i);
  return out;
}

bool TopologyMatch::matches(int candidate) const {
  return std::find(tied.begin(), tied.end(), candidate) != tied.end();
}

std::vector<JunctionEstimate> locate_junctions(const NetworkExtract& net, const TopologyResult& reference) {
  const GraphFlux& g = reference.graph;
  const int T = static_cast<int>(std::count_if(g.supply.begin(), g.supply.end(), [](double s) { return s != 0.0; }));
  std::vector<int> degree(g.vertices.size(), 0);
  for (const GraphEdge& e : g.edges) {
    ++degree[e.from];
    ++degree[e.to];
  }
  double hmax = 0.0;
  for (const NetworkSegment& s : net.segments) hmax = std::max(hmax, s.h);

  // Segments away from junctions are attached to their nearest reference edge.
  std::vector<std::vector<int>> members(g.edges.size());
  for (int i = 0; i < static_cast<int>(net.segments.size()); ++i) {
    const Vec2 c = 0.5 * (net.segments[i].a + net.segments[i].b);
    bool near_junction = false;
    for (std::size_t v = 0; v < g.vertices.size(); ++v)
      if (degree[v] >= 3 && (g.vertices[v] - c).norm() < 3.0 * hmax) near_junction = true;
    if (near_junction) continue;
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (int k = 0; k < static_cast<int>(g.edges.size()); ++k) {
      const double dk = point_segment_distance(c, g.vertices[g.edges[k].from], g.vertices[g.edges[k].to]);
      if (dk < bd) {
        bd = dk;
        best = k;
      }
    }
    if (best >= 0) members[best].push_back(i);
  }

  struct Line {
    Vec2 p, d;
    double w;
    bool ok;
  };
  std::vector<Line> lines(g.edges.size(), Line{Vec2::Zero(), Vec2::Zero(), 0.0, false});
  for (std::size_t k = 0; k < g.edges.size(); ++k) {
    double W = 0.0;
    Vec2 mean = Vec2::Zero();
    for (int i : members[k]) {
      const double w = (net.segments[i].b - net.segments[i].a).norm();
      W += w;
      mean += w * 0.5 * (net.segments[i].a + net.segments[i].b);
    }
    if (members[k].size() < 2 || W <= 0.0) continue;
    mean /= W;
    Eigen::Matrix2d C = Eigen::Matrix2d::Zero();
    for (int i : members[k]) {
      const double w = (net.segments[i].b - net.segments[i].a).norm();
      const Vec2 r = 0.5 * (net.segments[i].a + net.segments[i].b) - mean;
      C += w * r * r.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(C);
    lines[k] = {mean, es.eigenvectors().col(1), W, true};
  }

  std::vector<JunctionEstimate> out;
  for (int v = T; v < static_cast<int>(g.vertices.size()); ++v) {
    if (degree[v] < 3) continue;
    JunctionEstimate j;
    j.vertex = v;
    j.reference = g.vertices[v];
    j.estimate = j.reference;
    Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
    Eigen::Vector2d b = Eigen::Vector2d::Zero();
    int used = 0;
    for (std::size_t k = 0; k < g.edges.size(); ++k) {
      if ((g.edges[k].from != v && g.edges[k].to != v) || !lines[k].ok) continue;
      const Eigen::Matrix2d P = Eigen::Matrix2d::Identity() - lines[k].d * lines[k].d.transpose();
      A += lines[k].w * P;
      b += lines[k].w * P * lines[k].p;
      ++used;
    }
    if (used >= 2) {
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(A);
      if (es.eigenvalues()(0) > 1e-6 * es.eigenvalues()(1)) {
        j.estimate = A.ldlt().solve(b);
        j.fitted = true;
      }
    }
    out.push_back(j);
  }
  return out;
}

}  // namespace liftnet
