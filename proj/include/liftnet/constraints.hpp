#pragma once

#include <Eigen/Core>
#include <span>
#include <vector>

#include "liftnet/boundary.hpp"
#include "liftnet/cost.hpp"
#include "liftnet/fem_pairing.hpp"
#include "liftnet/prism_grid.hpp"

namespace liftnet {

struct IntervalConstraint {
  int begin = 0;  // first interval in the range
  int end = 0;    // one past the last interval
  double radius = 0.0;
};

// All interval constraints |sum_{k in [begin,end)} h_k Y_k| <= tau(s_end - s_begin)
// of one column, in cycle order (range length ascending, then start).
struct ColumnConstraintSet {
  int node = -1;
  std::vector<double> breakpoints;
  std::vector<double> heights;
  std::vector<IntervalConstraint> constraints;
};

ColumnConstraintSet make_column_constraints(const Column& column, const TransportCost& cost);
ColumnConstraintSet make_column_constraints(const std::vector<double>& breakpoints,
                                            const TransportCost& cost);

// Exact projection onto {Y : |sum_{k in range} h_k Y_k| <= r}.
void project_ball_preimage(std::span<Vec2> Y, std::span<const double> h, int begin, int end,
                           double r);

struct DykstraStats {
  int cycles = 0;
  bool converged = true;
  double displacement = 0.0;
};

struct DykstraWorkspace {
  std::vector<Vec2> correction;
  std::vector<Vec2> prefix;
  std::vector<double> h2_prefix;
  std::vector<Vec2> cycle_start;
};

DykstraStats dykstra_project_column(std::span<Vec2> Y, const ColumnConstraintSet& set, double tol,
                                    int max_cycles, DykstraWorkspace* workspace = nullptr);

// Largest constraint violation |sum h Y| - r over the column (<= 0 when feasible).
double max_violation(std::span<const Vec2> Y, const ColumnConstraintSet& set);

// Fixed lateral boundary values of V: (coefficient index, trace value).
struct PrimalConstraints {
  std::vector<int> index;
  std::vector<double> value;
};

PrimalConstraints make_primal_constraints(const DofLayout& layout, const PrismGrid& grid,
                                          const BoundaryData& data);
void project_primal(Eigen::VectorXd& V, const PrimalConstraints& fixed);
void project_primal(Eigen::VectorXd& V, const DofLayout& layout, const PrismGrid& grid,
                    const BoundaryData& data);

// Per-grid cache of column constraint sets.
struct DualConstraints {
  std::vector<ColumnConstraintSet> columns;  // indexed by x-node
  std::vector<int> v_offset;
};

DualConstraints make_dual_constraints(const DofLayout& layout, const TransportCost& cost);

struct DualProjectionStats {
  int columns = 0;
  int unconverged = 0;
  int max_cycles = 0;
  long long total_cycles = 0;
  std::vector<DykstraStats> per_column;
};

DualProjectionStats project_dual(Eigen::VectorXd& Phi1, Eigen::VectorXd& Phi2,
                                 Eigen::VectorXd& Phis, const DualConstraints& constraints,
                                 double tol, int max_cycles, bool keep_per_column = false);

}  // namespace liftnet
