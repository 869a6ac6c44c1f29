#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <vector>

#include "liftnet/boundary.hpp"
#include "liftnet/cost.hpp"
#include "liftnet/fem_pairing.hpp"
#include "liftnet/graph_oracle.hpp"
#include "liftnet/prism_grid.hpp"

namespace liftnet {

struct NetworkSegment {
  Vec2 a = Vec2::Zero();
  Vec2 b = Vec2::Zero();
  double mass = 0.0;
  int triangle = -1;
  double h = 0.0;  // diameter of the triangle
};

// The network is traced by level lines of the image u at the midpoints
// between consecutive boundary values (the plateaus u can take). A jump of
// size m is crossed by m / gap of those lines, so each level-line piece is
// shortened by gap / m around its midpoint; then sum tau(mass) |b - a| is the
// network energy and smeared jumps are not counted twice.
struct NetworkExtract {
  std::vector<NetworkSegment> segments;
  std::vector<double> u;  // image per x-node, the s-integral of v
  double energy(const TransportCost& cost) const;
  bool empty() const { return segments.empty(); }
};

std::vector<double> source_image(const DofLayout& layout, const Eigen::VectorXd& V);
// Image of the lift rounded to {0, 1} at theta. Non-binary minimizers
// (averages of nearby networks) smear u; rounding recovers a sharp network.
std::vector<double> rounded_image(const DofLayout& layout, const Eigen::VectorXd& V, double theta = 0.5);

// Linear interpolation of a nodal field at p (clamped into the domain).
double image_at(const PrismGrid& grid, const std::vector<double>& u, const Vec2& p);

// Pieces whose two-element-band jump is below jump_threshold times the
// smallest plateau gap are dropped.
NetworkExtract extract_network(const PrismGrid& grid, const DofLayout& layout, const Eigen::VectorXd& V,
                               const BoundaryData& data, double jump_threshold = 0.2);

void write_network_csv(const NetworkExtract& net, std::ostream& os);

// Image of a graph flux at the given points: the boundary cumulative value at
// an axis-aligned foot point plus the signed weights of edges crossed on the
// way in.
std::vector<double> graph_image(const GraphFlux& g, const BoundaryData& data, const std::vector<Vec2>& points);

struct TopologyMatch {
  int best = -1;
  std::vector<double> distances;  // area-weighted L1 distance per candidate
  std::vector<int> tied;          // within tie_tol of the best distance, best included
  bool matches(int candidate) const;
};

TopologyMatch classify_topology(const PrismGrid& grid, const std::vector<double>& u,
                                const BoundaryData& data, const std::vector<TopologyResult>& candidates,
                                double tie_tol = 1e-3);

struct JunctionEstimate {
  int vertex = -1;  // Steiner vertex of the reference network
  Vec2 reference = Vec2::Zero();
  Vec2 estimate = Vec2::Zero();
  bool fitted = false;
};

// Fits a line to the extracted segments closest to each reference edge and
// intersects the lines meeting at each junction of the reference network.
std::vector<JunctionEstimate> locate_junctions(const NetworkExtract& net, const TopologyResult& reference);

}  // namespace liftnet
