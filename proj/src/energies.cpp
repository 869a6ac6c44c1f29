#include "liftnet/energies.hpp"

#include <algorithm>
#include <cmath>

#include "liftnet/error.hpp"

namespace liftnet {

Eigen::VectorXd monotone_envelope(const DofLayout& layout, const Eigen::VectorXd& V) {
  Eigen::VectorXd out = V;
  for (const Column& c : layout.columns())
    for (int k = 1; k < c.intervals(); ++k)
      out[c.v_offset + k] = std::min(out[c.v_offset + k], out[c.v_offset + k - 1]);
  return out;
}

FluxMaximum maximize_flux(const PairingOperator& op, const DualConstraints& dc,
                          const Eigen::VectorXd& V, const Eigen::VectorXd* warm1,
                          const Eigen::VectorXd* warm2, const PrimalEnergyOptions& opt,
                          bool keep) {
  const DofLayout& L = op.layout;
  if (V.size() != L.q_v()) throw Error(ErrorCode::DimensionMismatch, "V has wrong length");
  const Eigen::VectorXd g1 = op.M1.transpose() * V;
  const Eigen::VectorXd g2 = op.M2.transpose() * V;
  FluxMaximum result;
  if (keep) {
    result.phi1 = Eigen::VectorXd::Zero(L.q_v());
    result.phi2 = Eigen::VectorXd::Zero(L.q_v());
  }
  const int n = static_cast<int>(dc.columns.size());
  double total = 0.0;
  int unconverged = 0;
#pragma omp parallel reduction(+ : total, unconverged)
  {
    DykstraWorkspace ws;
    std::vector<Vec2> G, Y, Z;
#pragma omp for schedule(dynamic, 8)
    for (int a = 0; a < n; ++a) {
      const ColumnConstraintSet& set = dc.columns[a];
      const int p = static_cast<int>(set.heights.size());
      const int off = dc.v_offset[a];
      G.resize(p);
      Y.resize(p);
      double gmax = 0.0;
      for (int k = 0; k < p; ++k) {
        G[k] = Vec2(g1[off + k], g2[off + k]);
        gmax = std::max(gmax, G[k].cwiseAbs().maxCoeff());
        Y[k] = (warm1 && warm2) ? Vec2((*warm1)[off + k], (*warm2)[off + k]) : Vec2::Zero();
      }
      auto value = [&](const std::vector<Vec2>& y) {
        double v = 0.0;
        for (int k = 0; k < p; ++k) v += G[k].dot(y[k]);
        return v;
      };
      double best = value(Y);
      if (gmax > 0.0) {
        double ymax = 0.0;
        for (int k = 0; k < p; ++k) ymax = std::max(ymax, set.constraints[k].radius / set.heights[k]);
        double t = ymax / gmax;
        int stalled = 0;
        bool best_converged = true;  // the warm start is feasible
        for (int step = 0; step < opt.max_ascent_steps; ++step) {
          Z.resize(p);
          for (int k = 0; k < p; ++k) Z[k] = Y[k] + t * G[k];
          DykstraStats st = dykstra_project_column(Z, set, opt.dykstra_tol, opt.dykstra_max_cycles, &ws);
          double v = value(Z);
          if (v > best) {
            double gain = v - best;
            best = v;
            Y = Z;
            best_converged = st.converged;
            stalled = gain <= opt.rel_tol * (std::abs(best) + 1e-300) ? stalled + 1 : 0;
          } else {
            ++stalled;
          }
          if (stalled >= 2) break;
          t *= 2.0;
        }
        if (!best_converged) ++unconverged;
      }
      total += best;
      if (keep)
        for (int k = 0; k < p; ++k) {
          result.phi1[off + k] = Y[k].x();
          result.phi2[off + k] = Y[k].y();
        }
    }
  }
  result.value = total;
  result.unconverged_columns = unconverged;
  return result;
}

PrimalEnergy primal_energy(const PairingOperator& op, const DualConstraints& dc,
                           const Eigen::VectorXd& V, const Eigen::VectorXd* warm1,
                           const Eigen::VectorXd* warm2, const PrimalEnergyOptions& opt) {
  if (V.size() != op.layout.q_v()) throw Error(ErrorCode::DimensionMismatch, "V has wrong length");
  PrimalEnergy result;
  const Eigen::VectorXd Vm = monotone_envelope(op.layout, V);
  result.monotonicity_defect = (V - Vm).lpNorm<1>();
  FluxMaximum fm = maximize_flux(op, dc, Vm, warm1, warm2, opt, false);
  result.value = fm.value;
  result.unconverged_columns = fm.unconverged_columns;
  return result;
}

double positive_part_integral(double A, double d0, double d1, double d2) {
  double d[3] = {d0, d1, d2};
  int pos = (d0 > 0) + (d1 > 0) + (d2 > 0);
  if (pos == 3) return A * (d0 + d1 + d2) / 3.0;
  if (pos == 0) return 0.0;
  auto one_vertex = [&](double top, double o1, double o2) {
    // top > 0 >= o1, o2: positive region is a corner triangle.
    double t1 = top / (top - o1), t2 = top / (top - o2);
    return A * t1 * t2 * top / 3.0;
  };
  if (pos == 1) {
    int i = d[0] > 0 ? 0 : (d[1] > 0 ? 1 : 2);
    return one_vertex(d[i], d[(i + 1) % 3], d[(i + 2) % 3]);
  }
  int i = d[0] <= 0 ? 0 : (d[1] <= 0 ? 1 : 2);
  return A * (d0 + d1 + d2) / 3.0 + one_vertex(-d[i], -d[(i + 1) % 3], -d[(i + 2) % 3]);
}

ElementDivergence element_divergence(const PrismGrid& grid, const DofLayout& L, int e,
                                     const Eigen::VectorXd& Phi1, const Eigen::VectorXd& Phi2,
                                     const Eigen::VectorXd& Phis) {
  const PrismElement& pe = grid.element(e);
  const auto& v = grid.triangle(pe.triangle).v;
  const double A = grid.triangle_area(pe.triangle);
  ElementDivergence out;
  for (int i = 0; i < 3; ++i) {
    const Vec2& p = grid.node(v[(i + 1) % 3]);
    const Vec2& q = grid.node(v[(i + 2) % 3]);
    const Vec2 grad = Vec2(p.y() - q.y(), q.x() - p.x()) / (2.0 * A);
    const int k = L.v_index(v[i], pe.s0);
    out.dx += Phi1[k] * grad.x() + Phi2[k] * grad.y();
  }
  const double h = pe.height();
  for (int i = 0; i < 3; ++i)
    out.vertex[i] = out.dx + (column_interp(L, Phis, v[i], pe.s1) - column_interp(L, Phis, v[i], pe.s0)) / h;
  return out;
}

double dual_energy(const PrismGrid& grid, const PairingOperator& op, const BoundaryData& data,
                   const Eigen::VectorXd& Phi1, const Eigen::VectorXd& Phi2,
                   const Eigen::VectorXd& Phis) {
  const DofLayout& L = op.layout;
  if (Phi1.size() != L.q_v() || Phi2.size() != L.q_v() || Phis.size() != L.q_s())
    throw Error(ErrorCode::DimensionMismatch, "dual vector has wrong length");
  double lateral = 0.0, divergence = 0.0;
  for (int e : grid.alive_elements()) {
    const PrismElement& pe = grid.element(e);
    const auto& v = grid.triangle(pe.triangle).v;
    const double h = pe.height();
    for (int k = 0; k < 3; ++k) {
      const int a = v[k], b = v[(k + 1) % 3];
      if (grid.neighbor(pe.triangle, a, b) >= 0) continue;
      const Vec2 d = grid.node(b) - grid.node(a);
      const Vec2 n_len(d.y(), -d.x());  // outward normal times edge length
      const int ia = L.v_index(a, pe.s0), ib = L.v_index(b, pe.s0);
      const double sa = L.column(a).s[ia - L.column(a).v_offset];
      const double sb = L.column(b).s[ib - L.column(b).v_offset];
      const double va = data.cumulative_at(grid.node(a)) > sa ? 1.0 : 0.0;
      const double vb = data.cumulative_at(grid.node(b)) > sb ? 1.0 : 0.0;
      const Vec2 pa(Phi1[ia], Phi2[ia]), pb(Phi1[ib], Phi2[ib]);
      const Vec2 flux = (2 * va * pa + va * pb + vb * pa + 2 * vb * pb) / 6.0;
      lateral += h * flux.dot(n_len);
    }
    const ElementDivergence div = element_divergence(grid, L, e, Phi1, Phi2, Phis);
    divergence += h * positive_part_integral(grid.triangle_area(pe.triangle), div.vertex[0],
                                             div.vertex[1], div.vertex[2]);
  }
  return lateral + op.c.dot(Phis) - divergence;
}

double discrete_dual_energy(const PairingOperator& op, const PrimalConstraints& fixed,
                            const Eigen::VectorXd& Phi1, const Eigen::VectorXd& Phi2,
                            const Eigen::VectorXd& Phis) {
  const Eigen::VectorXd k = apply_dual_to_primal(op, Phi1, Phi2, Phis);
  Eigen::VectorXd best = k.cwiseMin(0.0);  // free coefficients pick V = 1 where k < 0
  for (std::size_t i = 0; i < fixed.index.size(); ++i)
    best[fixed.index[i]] = fixed.value[i] * k[fixed.index[i]];
  return best.sum() + op.c.dot(Phis);
}

GapEstimate duality_gap(const PrismGrid& grid, const PairingOperator& op,
                        const DualConstraints& dc, const PrimalConstraints& fixed,
                        const BoundaryData& data, const DiscreteState& st,
                        const PrimalEnergyOptions& options) {
  GapEstimate g;
  PrimalEnergy pe = primal_energy(op, dc, st.V, &st.Phi1, &st.Phi2, options);
  g.primal = pe.value;
  g.monotonicity_defect = pe.monotonicity_defect;
  g.dual = dual_energy(grid, op, data, st.Phi1, st.Phi2, st.Phis);
  g.discrete_dual = discrete_dual_energy(op, fixed, st.Phi1, st.Phi2, st.Phis);
  g.gap = g.primal - g.discrete_dual;
  const double scale = std::max(std::abs(g.primal), std::abs(g.discrete_dual));
  g.relative_gap = scale > 1e-12 ? g.gap / scale : 0.0;
  return g;
}

}  // namespace liftnet
