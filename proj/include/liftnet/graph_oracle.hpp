#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "liftnet/boundary.hpp"
#include "liftnet/cost.hpp"

namespace liftnet {

struct GraphEdge {
  int from = 0;
  int to = 0;
  double weight = 0.0;
};

// Weighted directed graph carrying mass from sources to sinks. supply[v] is
// the source mass at v minus the sink mass at v.
struct GraphFlux {
  std::vector<Vec2> vertices;
  std::vector<GraphEdge> edges;
  std::vector<double> supply;
};

// Largest |outflow - inflow - supply| over vertices; worst receives the vertex.
double divergence_defect(const GraphFlux& g, int* worst = nullptr);
// Sum of tau(w) |e|. Throws DivergenceViolation when the defect exceeds tol.
double graph_energy(const GraphFlux& g, const TransportCost& cost, double tol = 1e-9);

Vec2 angle_condition_residual(const Vec2& e0, const Vec2& e1, const Vec2& e2, double m1, double m2,
                              const TransportCost& cost);

struct Terminal {
  Vec2 position = Vec2::Zero();
  double mass = 0.0;  // positive for sources, negative for sinks
};

// Forest over terminals 0..T-1 followed by `steiner` free vertices; every
// component must be balanced.
struct Topology {
  std::string name;
  int steiner = 0;
  std::vector<std::pair<int, int>> edges;
};

struct TopologyResult {
  std::string name;
  std::vector<Vec2> positions;  // terminals then Steiner vertices
  GraphFlux graph;
  double energy = 0.0;
  // Max norm of sum tau(w) * unit over Steiner vertices of degree >= 3 that
  // did not collapse onto a neighbour.
  double angle_residual = 0.0;
  int collapsed_edges = 0;
};

struct OptimizeOptions {
  int restarts = 8;
  std::uint64_t seed = 1;
  int nelder_mead_iters = 400;
  int polish_sweeps = 20000;
  double collapse_tol = 1e-6;
};

// Edge weights follow from flow conservation on the forest.
GraphFlux tree_flux(const std::vector<Terminal>& terminals, const Topology& topology,
                    const std::vector<Vec2>& positions);

TopologyResult optimize_topology(const std::vector<Terminal>& terminals, const Topology& topology,
                                 const TransportCost& cost, const OptimizeOptions& options = {});

struct OracleResult {
  std::vector<TopologyResult> candidates;
  int best = -1;
  double energy = 0.0;
  // Candidates within tie_tol of the best (relative), best included.
  std::vector<int> tied;
  bool bifurcation() const { return tied.size() > 1; }
};

OracleResult oracle_best_network(const std::vector<Terminal>& terminals,
                                 const std::vector<Topology>& topologies, const TransportCost& cost,
                                 const OptimizeOptions& options = {}, double tie_tol = 1e-8);

// Terminal order: source, then the two sinks.
std::vector<Topology> triple_junction_topologies();
// Terminal order: sources left to right, then sinks left to right.
std::vector<Topology> four_to_four_topologies();

// Terminals from boundary atoms (sources positive), in arclength order.
std::vector<Terminal> terminals_of(const BoundaryData& data);

// Unit square test problems. One-to-two: source of mass 2 at (0.5,1), sinks of
// mass 1 at (0,0) and (1,0). Four-to-four: sources at x = 1/8, 3/8, 5/8, 7/8
// on the top side, sinks opposite, all of the given mass.
BoundaryData one_to_two_boundary();
std::vector<Terminal> one_to_two_terminals();
BoundaryData four_to_four_boundary(double mass = 0.25);
std::vector<Terminal> four_to_four_terminals(double mass = 0.25);

}  // namespace liftnet
