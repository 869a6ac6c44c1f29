#include "liftnet/graph_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "liftnet/error.hpp"

namespace liftnet {

double divergence_defect(const GraphFlux& g, int* worst) {
  const int n = static_cast<int>(g.vertices.size());
  if (static_cast<int>(g.supply.size()) != n)
    throw Error(ErrorCode::DimensionMismatch, "supply must have one entry per vertex");
  std::vector<double> net(g.supply.begin(), g.supply.end());
  for (const GraphEdge& e : g.edges) {
    if (e.from < 0 || e.from >= n || e.to < 0 || e.to >= n)
      throw Error(ErrorCode::InvalidArgument, "edge refers to a missing vertex");
    net[e.from] -= e.weight;
    net[e.to] += e.weight;
  }
  double mx = 0.0;
  int arg = -1;
  for (int v = 0; v < n; ++v)
    if (std::abs(net[v]) > mx) {
      mx = std::abs(net[v]);
      arg = v;
    }
  if (worst) *worst = arg;
  return mx;
}

double graph_energy(const GraphFlux& g, const TransportCost& cost, double tol) {
  int worst = -1;
  const double defect = divergence_defect(g, &worst);
  if (defect > tol) {
    std::ostringstream os;
    os << "divergence violated at vertex " << worst << " by " << defect;
    throw Error(ErrorCode::DivergenceViolation, os.str());
  }
  double e = 0.0;
  for (const GraphEdge& edge : g.edges) {
    if (!(edge.weight > 0.0)) throw Error(ErrorCode::InvalidArgument, "edge weights must be positive");
    e += cost(edge.weight) * (g.vertices[edge.to] - g.vertices[edge.from]).norm();
  }
  return e;
}

Vec2 angle_condition_residual(const Vec2& e0, const Vec2& e1, const Vec2& e2, double m1, double m2,
                              const TransportCost& cost) {
  return cost(m1) * e1 + cost(m2) * e2 - cost(m1 + m2) * e0;
}

namespace {

struct TreeEdge {
  int a, b;
  double weight;  // signed flow from a to b
};

std::vector<TreeEdge> tree_flows(const std::vector<Terminal>& terminals, const Topology& topo) {
  const int T = static_cast<int>(terminals.size());
  const int n = T + topo.steiner;
  if (topo.steiner < 0) throw Error(ErrorCode::InvalidArgument, "negative Steiner count");
  std::vector<std::vector<std::pair<int, int>>> adj(n);
  for (int k = 0; k < static_cast<int>(topo.edges.size()); ++k) {
    auto [a, b] = topo.edges[k];
    if (a < 0 || a >= n || b < 0 || b >= n || a == b)
      throw Error(ErrorCode::InvalidArgument, "topology '" + topo.name + "' has an invalid edge");
    adj[a].push_back({b, k});
    adj[b].push_back({a, k});
  }
  std::vector<int> parent(n, -2), parent_edge(n, -1);
  std::vector<double> sub(n, 0.0);
  for (int t = 0; t < T; ++t) sub[t] = terminals[t].mass;
  std::vector<TreeEdge> out(topo.edges.size());
  std::size_t used = 0;
  for (int r = 0; r < n; ++r) {
    if (parent[r] != -2) continue;
    std::vector<int> order{r};
    parent[r] = -1;
    for (std::size_t i = 0; i < order.size(); ++i)
      for (auto [w, k] : adj[order[i]]) {
        if (k == parent_edge[order[i]]) continue;
        if (parent[w] != -2)
          throw Error(ErrorCode::InvalidArgument, "topology '" + topo.name + "' contains a cycle");
        parent[w] = order[i];
        parent_edge[w] = k;
        order.push_back(w);
      }
    for (std::size_t i = order.size(); i-- > 1;) {
      const int v = order[i];
      // net supply of the subtree below v leaves through the parent edge
      out[parent_edge[v]] = {v, parent[v], sub[v]};
      sub[parent[v]] += sub[v];
      ++used;
    }
    if (std::abs(sub[r]) > 1e-10)
      throw Error(ErrorCode::InvalidArgument, "topology '" + topo.name + "' has an unbalanced component");
  }
  if (used != topo.edges.size())
    throw Error(ErrorCode::InvalidArgument, "topology '" + topo.name + "' contains a cycle");
  return out;
}

struct Objective {
  int T;
  std::vector<Vec2> fixed;
  std::vector<TreeEdge> edges;
  std::vector<double> weight;  // tau(|flow|)

  Vec2 point(const std::vector<double>& x, int v) const {
    return v < T ? fixed[v] : Vec2(x[2 * (v - T)], x[2 * (v - T) + 1]);
  }
  double operator()(const std::vector<double>& x) const {
    double f = 0.0;
    for (std::size_t k = 0; k < edges.size(); ++k)
      if (weight[k] > 0.0) f += weight[k] * (point(x, edges[k].a) - point(x, edges[k].b)).norm();
    return f;
  }
};

std::vector<double> nelder_mead(const Objective& f, std::vector<double> x0, double scale, int iters) {
  const int n = static_cast<int>(x0.size());
  std::vector<std::vector<double>> simplex(n + 1, x0);
  for (int i = 0; i < n; ++i) simplex[i + 1][i] += scale;
  std::vector<double> val(n + 1);
  for (int i = 0; i <= n; ++i) val[i] = f(simplex[i]);
  std::vector<int> idx(n + 1);
  for (int it = 0; it < iters; ++it) {
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return val[a] < val[b]; });
    const int best = idx[0], worst = idx[n], second = idx[n - 1];
    if (val[worst] - val[best] <= 1e-15 * (1.0 + std::abs(val[best]))) break;
    std::vector<double> centroid(n, 0.0);
    for (int i = 0; i < n; ++i)
      for (int d = 0; d < n; ++d) centroid[d] += simplex[idx[i]][d] / n;
    auto along = [&](double t) {
      std::vector<double> p(n);
      for (int d = 0; d < n; ++d) p[d] = centroid[d] + t * (simplex[worst][d] - centroid[d]);
      return p;
    };
    std::vector<double> r = along(-1.0);
    const double fr = f(r);
    if (fr < val[best]) {
      std::vector<double> e = along(-2.0);
      const double fe = f(e);
      if (fe < fr) {
        simplex[worst] = e;
        val[worst] = fe;
      } else {
        simplex[worst] = r;
        val[worst] = fr;
      }
    } else if (fr < val[second]) {
      simplex[worst] = r;
      val[worst] = fr;
    } else {
      std::vector<double> c = fr < val[worst] ? along(-0.5) : along(0.5);
      const double fc = f(c);
      if (fc < std::min(fr, val[worst])) {
        simplex[worst] = c;
        val[worst] = fc;
      } else {
        for (int i = 1; i <= n; ++i) {
          auto& p = simplex[idx[i]];
          for (int d = 0; d < n; ++d) p[d] = simplex[best][d] + 0.5 * (p[d] - simplex[best][d]);
          val[idx[i]] = f(p);
        }
      }
    }
  }
  int best = 0;
  for (int i = 1; i <= n; ++i)
    if (val[i] < val[best]) best = i;
  return simplex[best];
}

// Gauss-Seidel Weiszfeld sweeps: each Steiner vertex moves to the weighted
// Fermat point of its neighbours, which never increases the objective.
void weiszfeld_polish(const Objective& f, std::vector<double>& x, int sweeps) {
  const int S = static_cast<int>(x.size()) / 2;
  std::vector<std::vector<std::pair<int, double>>> nbr(S);
  for (std::size_t k = 0; k < f.edges.size(); ++k) {
    if (!(f.weight[k] > 0.0)) continue;
    const auto& e = f.edges[k];
    if (e.a >= f.T) nbr[e.a - f.T].push_back({e.b, f.weight[k]});
    if (e.b >= f.T) nbr[e.b - f.T].push_back({e.a, f.weight[k]});
  }
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    double moved = 0.0;
    for (int i = 0; i < S; ++i) {
      if (nbr[i].empty()) continue;
      const Vec2 p = f.point(x, f.T + i);
      Vec2 num = Vec2::Zero();
      double den = 0.0;
      bool pinned = false;
      for (auto [j, w] : nbr[i]) {
        const Vec2 q = f.point(x, j);
        const double d = (p - q).norm();
        if (d < 1e-14) {
          pinned = true;
          break;
        }
        num += w / d * q;
        den += w / d;
      }
      if (pinned || den == 0.0) continue;
      const Vec2 np = num / den;
      moved = std::max(moved, (np - p).norm());
      x[2 * i] = np.x();
      x[2 * i + 1] = np.y();
    }
    if (moved < 1e-15) break;
  }
}

double junction_residual(const Objective& f, const std::vector<double>& x, double collapse_tol,
                         int* collapsed) {
  const int n = f.T + static_cast<int>(x.size()) / 2;
  std::vector<int> root(n);
  std::iota(root.begin(), root.end(), 0);
  auto find = [&](int v) {
    while (root[v] != v) v = root[v] = root[root[v]];
    return v;
  };
  int c = 0;
  for (const auto& e : f.edges)
    if ((f.point(x, e.a) - f.point(x, e.b)).norm() < collapse_tol) {
      root[find(e.a)] = find(e.b);
      ++c;
    }
  if (collapsed) *collapsed = c;
  std::vector<int> size(n, 0);
  for (int v = 0; v < n; ++v) ++size[find(v)];
  std::vector<Vec2> force(n, Vec2::Zero());
  std::vector<int> degree(n, 0);
  for (std::size_t k = 0; k < f.edges.size(); ++k) {
    const auto& e = f.edges[k];
    const int ra = find(e.a), rb = find(e.b);
    if (ra == rb || !(f.weight[k] > 0.0)) continue;
    const Vec2 d = f.point(x, e.b) - f.point(x, e.a);
    const Vec2 u = d / d.norm();
    force[ra] += f.weight[k] * u;
    force[rb] -= f.weight[k] * u;
    ++degree[ra];
    ++degree[rb];
  }
  double r = 0.0;
  for (int v = 0; v < n; ++v)
    if (v >= f.T && size[v] == 1 && degree[v] >= 3) r = std::max(r, force[v].norm());
  return r;
}

}  // namespace

GraphFlux tree_flux(const std::vector<Terminal>& terminals, const Topology& topology,
                    const std::vector<Vec2>& positions) {
  const int T = static_cast<int>(terminals.size());
  if (static_cast<int>(positions.size()) != T + topology.steiner)
    throw Error(ErrorCode::DimensionMismatch, "one position per vertex required");
  GraphFlux g;
  g.vertices = positions;
  g.supply.assign(positions.size(), 0.0);
  for (int t = 0; t < T; ++t) g.supply[t] = terminals[t].mass;
  for (const TreeEdge& e : tree_flows(terminals, topology)) {
    if (std::abs(e.weight) <= 1e-14) continue;
    if (e.weight > 0.0)
      g.edges.push_back({e.a, e.b, e.weight});
    else
      g.edges.push_back({e.b, e.a, -e.weight});
  }
  return g;
}

TopologyResult optimize_topology(const std::vector<Terminal>& terminals, const Topology& topology,
                                 const TransportCost& cost, const OptimizeOptions& options) {
  if (terminals.empty()) throw Error(ErrorCode::InvalidArgument, "no terminals");
  double balance = 0.0;
  for (const Terminal& t : terminals) balance += t.mass;
  if (std::abs(balance) > 1e-10) throw Error(ErrorCode::UnbalancedMeasures, "unbalanced measures");

  Objective f;
  f.T = static_cast<int>(terminals.size());
  for (const Terminal& t : terminals) f.fixed.push_back(t.position);
  f.edges = tree_flows(terminals, topology);
  for (const TreeEdge& e : f.edges) f.weight.push_back(std::abs(e.weight) > 1e-14 ? cost(std::abs(e.weight)) : 0.0);

  Vec2 lo = f.fixed[0], hi = f.fixed[0];
  for (const Vec2& p : f.fixed) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const double scale = std::max((hi - lo).maxCoeff(), 1e-3);

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> ux(lo.x(), hi.x()), uy(lo.y(), hi.y());
  const int S = topology.steiner;
  std::vector<double> best_x;
  double best_f = std::numeric_limits<double>::infinity();
  const int starts = S == 0 ? 1 : std::max(1, options.restarts);
  for (int r = 0; r < starts; ++r) {
    std::vector<double> x(2 * S);
    for (int i = 0; i < S; ++i) {
      x[2 * i] = ux(rng);
      x[2 * i + 1] = uy(rng);
    }
    if (S > 0) {
      x = nelder_mead(f, x, 0.1 * scale, options.nelder_mead_iters * S);
      weiszfeld_polish(f, x, options.polish_sweeps);
    }
    const double v = f(x);
    if (v < best_f) {
      best_f = v;
      best_x = x;
    }
  }

  TopologyResult out;
  out.name = topology.name;
  for (int v = 0; v < f.T + S; ++v) out.positions.push_back(f.point(best_x, v));
  out.graph = tree_flux(terminals, topology, out.positions);
  out.energy = best_f;
  out.angle_residual = junction_residual(f, best_x, options.collapse_tol * scale, &out.collapsed_edges);
  return out;
}

OracleResult oracle_best_network(const std::vector<Terminal>& terminals,
                                 const std::vector<Topology>& topologies, const TransportCost& cost,
                                 const OptimizeOptions& options, double tie_tol) {
  if (topologies.empty()) throw Error(ErrorCode::InvalidArgument, "empty topology list");
  OracleResult out;
  for (const Topology& t : topologies) out.candidates.push_back(optimize_topology(terminals, t, cost, options));
  out.best = 0;
  for (int i = 1; i < static_cast<int>(out.candidates.size()); ++i)
    if (out.candidates[i].energy < out.candidates[out.best].energy) out.best = i;
  out.energy = out.candidates[out.best].energy;
  for (int i = 0; i < static_cast<int>(out.candidates.size()); ++i)
    if (out.candidates[i].energy - out.energy <= tie_tol * std::max(1.0, std::abs(out.energy)))
      out.tied.push_back(i);
  return out;
}

std::vector<Topology> triple_junction_topologies() {
  return {
      {"Y", 1, {{0, 3}, {3, 1}, {3, 2}}},
      {"V", 0, {{0, 1}, {0, 2}}},
  };
}

std::vector<Topology> four_to_four_topologies() {
  // sources 0..3, sinks 4..7, Steiner vertices from 8
  return {
      {"parallel", 0, {{0, 4}, {1, 5}, {2, 6}, {3, 7}}},
      {"paired", 4, {{0, 8}, {1, 8}, {8, 9}, {9, 4}, {9, 5}, {2, 10}, {3, 10}, {10, 11}, {11, 6}, {11, 7}}},
      {"parallel_middle", 2, {{0, 4}, {3, 7}, {1, 8}, {2, 8}, {8, 9}, {9, 5}, {9, 6}}},
      {"nested",
       4,
       {{1, 8}, {2, 8}, {8, 9}, {0, 9}, {3, 9}, {9, 10}, {10, 4}, {10, 7}, {10, 11}, {11, 5}, {11, 6}}},
      {"full_tree",
       6,
       {{0, 8},
        {1, 8},
        {2, 9},
        {3, 9},
        {8, 10},
        {9, 10},
        {10, 11},
        {11, 12},
        {11, 13},
        {12, 4},
        {12, 5},
        {13, 6},
        {13, 7}}},
  };
}

std::vector<Terminal> terminals_of(const BoundaryData& data) {
  std::vector<Terminal> out;
  for (const BoundaryAtom& a : data.atoms())
    out.push_back({data.domain().point_of_arclength(a.arclength),
                   a.sign == AtomSign::Source ? a.mass : -a.mass});
  return out;
}

BoundaryData one_to_two_boundary() {
  const Domain d = Domain::unit_square();
  return BoundaryData(d, {{d.arclength_of_point(Vec2(0.5, 1.0)), 2.0, AtomSign::Source},
                          {d.arclength_of_point(Vec2(0.0, 0.0)), 1.0, AtomSign::Sink},
                          {d.arclength_of_point(Vec2(1.0, 0.0)), 1.0, AtomSign::Sink}});
}

std::vector<Terminal> one_to_two_terminals() {
  return {{Vec2(0.5, 1.0), 2.0}, {Vec2(0.0, 0.0), -1.0}, {Vec2(1.0, 0.0), -1.0}};
}

BoundaryData four_to_four_boundary(double mass) {
  const Domain d = Domain::unit_square();
  std::vector<BoundaryAtom> atoms;
  for (const Terminal& t : four_to_four_terminals(mass))
    atoms.push_back({d.arclength_of_point(t.position), std::abs(t.mass),
                     t.mass > 0.0 ? AtomSign::Source : AtomSign::Sink});
  return BoundaryData(d, atoms);
}

std::vector<Terminal> four_to_four_terminals(double mass) {
  std::vector<Terminal> out;
  for (int i = 0; i < 4; ++i) out.push_back({Vec2((2 * i + 1) / 8.0, 1.0), mass});
  for (int i = 0; i < 4; ++i) out.push_back({Vec2((2 * i + 1) / 8.0, 0.0), -mass});
  return out;
}

}  // namespace liftnet
