#include "liftnet/constraints.hpp"

#include <algorithm>
#include <cmath>

#include "liftnet/error.hpp"

namespace liftnet {

ColumnConstraintSet make_column_constraints(const std::vector<double>& s, const TransportCost& cost) {
  ColumnConstraintSet set;
  set.breakpoints = s;
  const int p = static_cast<int>(s.size()) - 1;
  for (int k = 0; k < p; ++k) set.heights.push_back(s[k + 1] - s[k]);
  set.constraints.reserve(p * (p + 1) / 2);
  for (int len = 1; len <= p; ++len)
    for (int i = 0; i + len <= p; ++i)
      set.constraints.push_back({i, i + len, cost(s[i + len] - s[i])});
  return set;
}

ColumnConstraintSet make_column_constraints(const Column& column, const TransportCost& cost) {
  ColumnConstraintSet set = make_column_constraints(column.s, cost);
  set.node = column.node;
  return set;
}

void project_ball_preimage(std::span<Vec2> Y, std::span<const double> h, int begin, int end,
                           double r) {
  if (r < 0.0) throw Error(ErrorCode::InvalidArgument, "negative constraint radius");
  Vec2 w = Vec2::Zero();
  double h2 = 0.0;
  for (int k = begin; k < end; ++k) {
    w += h[k] * Y[k];
    h2 += h[k] * h[k];
  }
  const double n = w.norm();
  if (n <= r) return;
  const Vec2 shift = (w - r * w / n) / h2;
  for (int k = begin; k < end; ++k) Y[k] -= h[k] * shift;
}

double max_violation(std::span<const Vec2> Y, const ColumnConstraintSet& set) {
  const int p = static_cast<int>(set.heights.size());
  std::vector<Vec2> P(p + 1, Vec2::Zero());
  for (int k = 0; k < p; ++k) P[k + 1] = P[k] + set.heights[k] * Y[k];
  double worst = -INFINITY;
  for (const auto& c : set.constraints) worst = std::max(worst, (P[c.end] - P[c.begin]).norm() - c.radius);
  return worst;
}

DykstraStats dykstra_project_column(std::span<Vec2> Y, const ColumnConstraintSet& set, double tol,
                                    int max_cycles, DykstraWorkspace* workspace) {
  DykstraWorkspace local;
  DykstraWorkspace& ws = workspace ? *workspace : local;
  const int p = static_cast<int>(set.heights.size());
  const auto& h = set.heights;
  const int m = static_cast<int>(set.constraints.size());
  ws.correction.assign(m, Vec2::Zero());
  ws.prefix.resize(p + 1);
  ws.h2_prefix.resize(p + 1);
  ws.cycle_start.resize(p);
  ws.h2_prefix[0] = 0.0;
  for (int k = 0; k < p; ++k) ws.h2_prefix[k + 1] = ws.h2_prefix[k] + h[k] * h[k];
  const auto& H2 = ws.h2_prefix;
  auto& P = ws.prefix;

  DykstraStats stats;
  stats.converged = false;
  for (int cycle = 0; cycle < max_cycles; ++cycle) {
    P[0] = Vec2::Zero();
    for (int k = 0; k < p; ++k) {
      P[k + 1] = P[k] + h[k] * Y[k];
      ws.cycle_start[k] = Y[k];
    }
    for (int ci = 0; ci < m; ++ci) {
      const IntervalConstraint& c = set.constraints[ci];
      Vec2& corr = ws.correction[ci];
      const Vec2 w = P[c.end] - P[c.begin];
      const double S = H2[c.end] - H2[c.begin];
      const bool had = corr.x() != 0.0 || corr.y() != 0.0;
      if (!had && w.squaredNorm() <= c.radius * c.radius) continue;
      // z = x + correction (on the range, weighted by h); project z.
      const Vec2 wz = w + S * corr;
      const double nz = wz.norm();
      Vec2 next = Vec2::Zero();
      if (nz > c.radius) next = (wz - c.radius * wz / nz) / S;
      const Vec2 delta = corr - next;
      corr = next;
      if (delta.x() == 0.0 && delta.y() == 0.0) continue;
      for (int k = c.begin; k < c.end; ++k) Y[k] += h[k] * delta;
      for (int k = c.begin + 1; k <= p; ++k)
        P[k] += delta * (H2[std::min(k, c.end)] - H2[c.begin]);
    }
    double disp = 0.0;
    for (int k = 0; k < p; ++k) disp = std::max(disp, (Y[k] - ws.cycle_start[k]).cwiseAbs().maxCoeff());
    stats.cycles = cycle + 1;
    stats.displacement = disp;
    if (disp < tol) {
      stats.converged = true;
      break;
    }
  }
  return stats;
}

PrimalConstraints make_primal_constraints(const DofLayout& layout, const PrismGrid& grid,
                                          const BoundaryData& data) {
  PrimalConstraints pc;
  for (const Column& c : layout.columns()) {
    if (!c.boundary) continue;
    const double u = data.cumulative_at(grid.node(c.node));
    for (int k = 0; k < c.intervals(); ++k) {
      pc.index.push_back(c.v_offset + k);
      pc.value.push_back(u > c.s[k] ? 1.0 : 0.0);
    }
  }
  return pc;
}

void project_primal(Eigen::VectorXd& V, const PrimalConstraints& fixed) {
  V = V.cwiseMax(0.0).cwiseMin(1.0);
  for (std::size_t i = 0; i < fixed.index.size(); ++i) V[fixed.index[i]] = fixed.value[i];
}

void project_primal(Eigen::VectorXd& V, const DofLayout& layout, const PrismGrid& grid,
                    const BoundaryData& data) {
  if (V.size() != layout.q_v()) throw Error(ErrorCode::DimensionMismatch, "V has wrong length");
  project_primal(V, make_primal_constraints(layout, grid, data));
}

DualConstraints make_dual_constraints(const DofLayout& layout, const TransportCost& cost) {
  DualConstraints dc;
  dc.columns.reserve(layout.columns().size());
  for (const Column& c : layout.columns()) {
    dc.columns.push_back(make_column_constraints(c, cost));
    dc.v_offset.push_back(c.v_offset);
  }
  return dc;
}

DualProjectionStats project_dual(Eigen::VectorXd& Phi1, Eigen::VectorXd& Phi2,
                                 Eigen::VectorXd& Phis, const DualConstraints& dc, double tol,
                                 int max_cycles, bool keep_per_column) {
  if (Phi1.size() != Phi2.size())
    throw Error(ErrorCode::DimensionMismatch, "Phi1 and Phi2 differ in length");
  Phis = Phis.cwiseMax(0.0);
  const int n = static_cast<int>(dc.columns.size());
  DualProjectionStats stats;
  stats.columns = n;
  if (keep_per_column) stats.per_column.resize(n);
  int unconverged = 0, worst = 0;
  long long total = 0;
#pragma omp parallel reduction(+ : unconverged, total) reduction(max : worst)
  {
    DykstraWorkspace ws;
    std::vector<Vec2> Y;
#pragma omp for schedule(dynamic, 16)
    for (int a = 0; a < n; ++a) {
      const ColumnConstraintSet& set = dc.columns[a];
      const int p = static_cast<int>(set.heights.size());
      const int off = dc.v_offset[a];
      Y.resize(p);
      for (int k = 0; k < p; ++k) Y[k] = Vec2(Phi1[off + k], Phi2[off + k]);
      DykstraStats st = dykstra_project_column(Y, set, tol, max_cycles, &ws);
      for (int k = 0; k < p; ++k) {
        Phi1[off + k] = Y[k].x();
        Phi2[off + k] = Y[k].y();
      }
      if (!st.converged) ++unconverged;
      total += st.cycles;
      worst = std::max(worst, st.cycles);
      if (keep_per_column) stats.per_column[a] = st;
    }
  }
  stats.unconverged = unconverged;
  stats.total_cycles = total;
  stats.max_cycles = worst;
  return stats;
}

}  // namespace liftnet
