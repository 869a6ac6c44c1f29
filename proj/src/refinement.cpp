#include "liftnet/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "liftnet/energies.hpp"
#include "liftnet/error.hpp"

namespace liftnet {

namespace {

struct ElementGeometry {
  std::array<int, 3> v;
  double A;
  Vec2 grad[3];
};

ElementGeometry geometry(const PrismGrid& grid, int triangle) {
  ElementGeometry g;
  g.v = grid.triangle(triangle).v;
  g.A = grid.triangle_area(triangle);
  for (int i = 0; i < 3; ++i) {
    const Vec2& p = grid.node(g.v[(i + 1) % 3]);
    const Vec2& q = grid.node(g.v[(i + 2) % 3]);
    g.grad[i] = Vec2(p.y() - q.y(), q.x() - p.x()) / (2.0 * g.A);
  }
  return g;
}

// |Dv^h| of the element without normalization.
double element_variation(const PrismGrid& grid, const DofLayout& L, const Eigen::VectorXd& V, int e) {
  const PrismElement& pe = grid.element(e);
  const ElementGeometry g = geometry(grid, pe.triangle);
  Vec2 grad = Vec2::Zero();
  double jump[3];
  for (int i = 0; i < 3; ++i) {
    const int k = L.v_index(g.v[i], pe.s0);
    grad += V[k] * g.grad[i];
    const int below = L.v_index_below(g.v[i], pe.s0);
    const double vb = below < 0 ? 1.0 : V[below];
    jump[i] = V[k] - vb;
  }
  const double lateral = pe.height() * g.A * grad.norm();
  const double face = positive_part_integral(g.A, jump[0], jump[1], jump[2]) +
                      positive_part_integral(g.A, -jump[0], -jump[1], -jump[2]);
  return lateral + face;
}

}  // namespace

IndicatorField indicator_gradient(const PrismGrid& grid, const DofLayout& L, const Eigen::VectorXd& V) {
  IndicatorField f;
  f.elements = grid.alive_elements();
  f.eta.resize(f.elements.size());
  for (std::size_t i = 0; i < f.elements.size(); ++i) {
    const int e = f.elements[i];
    const PrismElement& pe = grid.element(e);
    const double vol = grid.triangle_area(pe.triangle) * pe.height();
    f.eta[i] = element_variation(grid, L, V, e) / vol;
  }
  return f;
}

double total_variation(const PrismGrid& grid, const DofLayout& L, const Eigen::VectorXd& V) {
  double tv = 0.0;
  for (int e : grid.alive_elements()) tv += element_variation(grid, L, V, e);
  return tv;
}

PDGapIndicator indicator_pd_gap(const PrismGrid& grid, const BoundaryData& data,
                                const TransportCost& cost, const DiscreteState& state,
                                const PDGapOptions& options) {
  const DofLayout L(grid);
  check_state(state, L);
  PDGapIndicator out;
  out.field.elements = grid.alive_elements();
  const std::size_t n = out.field.elements.size();
  out.flux_term.assign(n, 0.0);
  out.divergence_term.assign(n, 0.0);
  std::vector<int> slot(grid.element_id_bound(), -1);
  for (std::size_t i = 0; i < n; ++i) slot[out.field.elements[i]] = static_cast<int>(i);

  // Second term: v^opt = 1 where div phi > 0, evaluated on the grid itself.
  for (std::size_t i = 0; i < n; ++i) {
    const int e = out.field.elements[i];
    const PrismElement& pe = grid.element(e);
    const ElementGeometry g = geometry(grid, pe.triangle);
    const ElementDivergence div = element_divergence(grid, L, e, state.Phi1, state.Phi2, state.Phis);
    double v[3];
    for (int k = 0; k < 3; ++k) v[k] = state.V[L.v_index(g.v[k], pe.s0)];
    double vd = 0.0;
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) vd += (a == b ? 2.0 : 1.0) * v[a] * div.vertex[b];
    vd *= g.A / 12.0;
    const double pos = positive_part_integral(g.A, div.vertex[0], div.vertex[1], div.vertex[2]);
    out.divergence_term[i] = pe.height() * (pos - vd);
  }

  // First term on the auxiliary grid: one x- and one s-bisection everywhere.
  PrismGrid aux = grid;
  for (int t : grid.leaf_triangles())
    if (aux.triangle(t).leaf) aux.x_refine(aux.triangle(t).stack.front());
  for (int e : aux.alive_elements())
    if (aux.element(e).alive) aux.s_refine(e);
  const DiscreteState fine = prolongate(state, grid, aux);
  const PairingOperator op = assemble(aux, data);
  const DualConstraints dc = make_dual_constraints(op.layout, cost);
  PrimalEnergyOptions eopt;
  eopt.dykstra_tol = options.dykstra_tol;
  eopt.dykstra_max_cycles = options.dykstra_max_cycles;
  eopt.max_ascent_steps = options.max_ascent_steps;
  FluxMaximum fm = maximize_flux(op, dc, fine.V, &fine.Phi1, &fine.Phi2, eopt, true);
  out.converged = fm.unconverged_columns == 0;

  const DofLayout& FL = op.layout;
  const int bound = grid.element_id_bound();
  for (int e : aux.alive_elements()) {
    const PrismElement& pe = aux.element(e);
    int anc = e;
    while (anc >= bound) anc = aux.element(anc).parent;
    const int i = slot[anc];
    if (i < 0) throw Error(ErrorCode::NumericalFailure, "auxiliary element without coarse ancestor");
    const ElementGeometry g = geometry(aux, pe.triangle);
    Vec2 grad = Vec2::Zero(), opt_sum = Vec2::Zero(), cur_sum = Vec2::Zero();
    for (int k = 0; k < 3; ++k) {
      const int idx = FL.v_index(g.v[k], pe.s0);
      grad += fine.V[idx] * g.grad[k];
      opt_sum += Vec2(fm.phi1[idx], fm.phi2[idx]);
      cur_sum += Vec2(fine.Phi1[idx], fine.Phi2[idx]);
    }
    out.flux_term[i] += pe.height() * g.A / 3.0 * (opt_sum - cur_sum).dot(grad);
  }

  out.raw.resize(n);
  out.field.eta.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.raw[i] = out.flux_term[i] + out.divergence_term[i];
    out.field.eta[i] = std::max(0.0, out.raw[i]);
    out.total += out.raw[i];
  }
  return out;
}

IndicatorField combine_max(const IndicatorField& a, const IndicatorField& b) {
  if (a.elements != b.elements)
    throw Error(ErrorCode::DimensionMismatch, "indicator fields refer to different elements");
  auto mx = [](const std::vector<double>& x) {
    double m = 0.0;
    for (double v : x) m = std::max(m, v);
    return m;
  };
  const double ma = mx(a.eta), mb = mx(b.eta);
  IndicatorField out;
  out.elements = a.elements;
  out.eta.resize(a.eta.size());
  for (std::size_t i = 0; i < a.eta.size(); ++i)
    out.eta[i] = std::max(ma > 0 ? a.eta[i] / ma : 0.0, mb > 0 ? b.eta[i] / mb : 0.0);
  return out;
}

int mark_and_refine(PrismGrid& grid, const IndicatorField& eta, double lambda, RefineMode mode) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw Error(ErrorCode::InvalidArgument, "lambda must lie in (0,1)");
  if (eta.elements.size() != eta.eta.size())
    throw Error(ErrorCode::DimensionMismatch, "indicator field is inconsistent");
  double mx = 0.0;
  for (double v : eta.eta) {
    if (v < 0.0) throw Error(ErrorCode::InvalidArgument, "indicators must be nonnegative");
    mx = std::max(mx, v);
  }
  std::vector<int> marked;
  for (std::size_t i = 0; i < eta.eta.size(); ++i)
    if (eta.eta[i] >= lambda * mx) marked.push_back(eta.elements[i]);
  std::sort(marked.begin(), marked.end());

  std::vector<int> triangles;
  for (int e : marked) triangles.push_back(grid.element(e).triangle);
  if (mode != RefineMode::X)
    for (int e : marked)
      if (grid.element(e).alive) grid.s_refine(e);
  if (mode != RefineMode::S) {
    std::set<int> seen;
    for (int t : triangles) {
      if (!seen.insert(t).second) continue;
      if (grid.triangle(t).leaf) grid.x_refine(grid.triangle(t).stack.front());
    }
  }
  return static_cast<int>(marked.size());
}

}  // namespace liftnet
