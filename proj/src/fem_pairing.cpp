#include "liftnet/fem_pairing.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "liftnet/error.hpp"

namespace liftnet {

DofLayout::DofLayout(const PrismGrid& grid)
    : columns_(grid.columns()),
      M_(grid.top()),
      tol_(1e-12 * grid.top()),
      lineage_(grid.lineage()),
      revision_(grid.revision()) {
  for (const auto& c : columns_) {
    q_v_ += c.intervals();
    q_s_ += static_cast<int>(c.s.size());
  }
}

int DofLayout::v_index(int node, double s) const {
  const Column& c = columns_[node];
  auto it = std::upper_bound(c.s.begin(), c.s.end(), s + tol_);
  int k = static_cast<int>(it - c.s.begin()) - 1;
  k = std::clamp(k, 0, c.intervals() - 1);
  return c.v_offset + k;
}

int DofLayout::v_index_below(int node, double s) const {
  if (s <= tol_) return -1;
  const Column& c = columns_[node];
  auto it = std::lower_bound(c.s.begin(), c.s.end(), s - tol_);
  int k = static_cast<int>(it - c.s.begin()) - 1;
  k = std::clamp(k, 0, c.intervals() - 1);
  return c.v_offset + k;
}

int DofLayout::s_weights(int node, double s, std::array<int, 2>& idx,
                         std::array<double, 2>& w) const {
  const Column& c = columns_[node];
  auto it = std::lower_bound(c.s.begin(), c.s.end(), s - tol_);
  int k = static_cast<int>(it - c.s.begin());
  if (k < static_cast<int>(c.s.size()) && std::abs(c.s[k] - s) <= tol_) {
    idx[0] = c.s_offset + k;
    w[0] = 1.0;
    return 1;
  }
  k = std::clamp(k, 1, static_cast<int>(c.s.size()) - 1);
  const double t = (s - c.s[k - 1]) / (c.s[k] - c.s[k - 1]);
  idx[0] = c.s_offset + k - 1;
  w[0] = 1.0 - t;
  idx[1] = c.s_offset + k;
  w[1] = t;
  return 2;
}

DiscreteState zero_state(const DofLayout& layout) {
  DiscreteState st;
  st.V = Eigen::VectorXd::Zero(layout.q_v());
  st.Vbar = st.V;
  st.Phi1 = Eigen::VectorXd::Zero(layout.q_v());
  st.Phi2 = Eigen::VectorXd::Zero(layout.q_v());
  st.Phis = Eigen::VectorXd::Zero(layout.q_s());
  st.lineage = layout.lineage();
  st.revision = layout.revision();
  return st;
}

void check_state(const DiscreteState& st, const DofLayout& layout) {
  if (st.V.size() != layout.q_v() || st.Phi1.size() != layout.q_v() ||
      st.Phi2.size() != layout.q_v() || st.Phis.size() != layout.q_s())
    throw Error(ErrorCode::DimensionMismatch, "state does not match the grid's coefficient counts");
}

PairingOperator assemble(const PrismGrid& grid, const BoundaryData& data) {
  (void)data;
  PairingOperator op;
  op.layout = DofLayout(grid);
  const DofLayout& L = op.layout;
  const int qv = L.q_v(), qs = L.q_s();
  op.c = Eigen::VectorXd::Zero(qs);

  std::vector<Eigen::Triplet<double>> t1, t2, ts;
  const auto alive = grid.alive_elements();
  t1.reserve(alive.size() * 9);
  t2.reserve(alive.size() * 9);
  ts.reserve(alive.size() * 18);

  for (int e : alive) {
    const PrismElement& pe = grid.element(e);
    const auto& v = grid.triangle(pe.triangle).v;
    const Vec2 x[3] = {grid.node(v[0]), grid.node(v[1]), grid.node(v[2])};
    const double A = grid.triangle_area(pe.triangle);
    const double h = pe.height();
    Vec2 grad[3];
    for (int i = 0; i < 3; ++i) {
      const Vec2& p = x[(i + 1) % 3];
      const Vec2& q = x[(i + 2) % 3];
      grad[i] = Vec2(p.y() - q.y(), q.x() - p.x()) / (2.0 * A);
    }
    int vi[3];
    for (int i = 0; i < 3; ++i) vi[i] = L.v_index(v[i], pe.s0);

    // Lateral part: phi^x and grad v are affine and constant in x, so the
    // integral over the triangle is mean(phi) * area.
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        t1.emplace_back(vi[i], vi[j], h * A / 3.0 * grad[i].x());
        t2.emplace_back(vi[i], vi[j], h * A / 3.0 * grad[i].y());
      }

    // Jump of v across the bottom face, paired with phi^s on that face.
    std::array<int, 2> idx[3];
    std::array<double, 2> w[3];
    int nw[3];
    for (int j = 0; j < 3; ++j) nw[j] = L.s_weights(v[j], pe.s0, idx[j], w[j]);
    const bool bottom = pe.s0 <= 0.0;
    for (int i = 0; i < 3; ++i) {
      const int below = bottom ? -1 : L.v_index_below(v[i], pe.s0);
      if (!bottom && below == vi[i]) continue;  // no breakpoint here at this vertex
      for (int j = 0; j < 3; ++j) {
        const double mass = A / 12.0 * (i == j ? 2.0 : 1.0);
        for (int r = 0; r < nw[j]; ++r) {
          const double val = mass * w[j][r];
          ts.emplace_back(vi[i], idx[j][r], val);
          if (bottom)
            op.c[idx[j][r]] -= val;
          else
            ts.emplace_back(below, idx[j][r], -val);
        }
      }
    }
  }
  op.M1.resize(qv, qv);
  op.M2.resize(qv, qv);
  op.Ms.resize(qv, qs);
  op.M1.setFromTriplets(t1.begin(), t1.end());
  op.M2.setFromTriplets(t2.begin(), t2.end());
  op.Ms.setFromTriplets(ts.begin(), ts.end());
  op.M1.prune(0.0);
  op.M2.prune(0.0);
  op.Ms.prune(0.0);
  op.frobenius = std::sqrt(op.M1.squaredNorm() + op.M2.squaredNorm() + op.Ms.squaredNorm());
  return op;
}

DualVector apply_primal_to_dual(const PairingOperator& op, const Eigen::VectorXd& V) {
  if (V.size() != op.layout.q_v())
    throw Error(ErrorCode::DimensionMismatch, "primal vector has wrong length");
  DualVector d;
  d.g1 = op.M1.transpose() * V;
  d.g2 = op.M2.transpose() * V;
  d.gs = op.Ms.transpose() * V + op.c;
  return d;
}

Eigen::VectorXd apply_dual_to_primal(const PairingOperator& op, const Eigen::VectorXd& Phi1,
                                     const Eigen::VectorXd& Phi2, const Eigen::VectorXd& Phis) {
  if (Phi1.size() != op.layout.q_v() || Phi2.size() != op.layout.q_v() ||
      Phis.size() != op.layout.q_s())
    throw Error(ErrorCode::DimensionMismatch, "dual vector has wrong length");
  return op.M1 * Phi1 + op.M2 * Phi2 + op.Ms * Phis;
}

double pairing(const PairingOperator& op, const Eigen::VectorXd& V, const Eigen::VectorXd& Phi1,
               const Eigen::VectorXd& Phi2, const Eigen::VectorXd& Phis) {
  return V.dot(apply_dual_to_primal(op, Phi1, Phi2, Phis)) + op.c.dot(Phis);
}

double operator_norm(const PairingOperator& op, int iterations, double tol) {
  const int qv = op.layout.q_v();
  if (qv == 0) return 0.0;
  Eigen::VectorXd x = Eigen::VectorXd::Ones(qv) / std::sqrt(double(qv));
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Eigen::VectorXd g1 = op.M1.transpose() * x, g2 = op.M2.transpose() * x,
                    gs = op.Ms.transpose() * x;
    Eigen::VectorXd y = op.M1 * g1 + op.M2 * g2 + op.Ms * gs;
    double n = y.norm();
    if (n == 0.0) return 0.0;
    x = y / n;
    if (std::abs(n - lambda) <= tol * n) {
      lambda = n;
      break;
    }
    lambda = n;
  }
  return std::sqrt(lambda);
}

double column_value(const DofLayout& layout, const Eigen::VectorXd& coeffs, int node, double s) {
  return coeffs[layout.v_index(node, s)];
}

double column_interp(const DofLayout& layout, const Eigen::VectorXd& phis, int node, double s) {
  std::array<int, 2> idx;
  std::array<double, 2> w;
  int n = layout.s_weights(node, s, idx, w);
  double r = 0.0;
  for (int k = 0; k < n; ++k) r += w[k] * phis[idx[k]];
  return r;
}

namespace {

// A column function of the old grid seen at an arbitrary node: breakpoints
// plus either interval values (piecewise constant) or nodal values (linear).
struct VirtualColumn {
  std::vector<double> s;
  std::vector<double> v, p1, p2;  // per interval
  std::vector<double> ps;         // per breakpoint

  int interval(double x, double tol) const {
    auto it = std::upper_bound(s.begin(), s.end(), x + tol);
    return std::clamp(static_cast<int>(it - s.begin()) - 1, 0, static_cast<int>(s.size()) - 2);
  }
  double interp(double x) const {
    auto it = std::lower_bound(s.begin(), s.end(), x);
    int k = std::clamp(static_cast<int>(it - s.begin()), 1, static_cast<int>(s.size()) - 1);
    double t = (x - s[k - 1]) / (s[k] - s[k - 1]);
    return (1.0 - t) * ps[k - 1] + t * ps[k];
  }
};

std::vector<double> merge_breakpoints(const std::vector<double>& a, const std::vector<double>& b,
                                      double tol) {
  std::vector<double> out;
  std::size_t i = 0, j = 0;
  while (i < a.size() || j < b.size()) {
    double x;
    if (j >= b.size() || (i < a.size() && a[i] < b[j] - tol)) {
      x = a[i++];
    } else if (i >= a.size() || b[j] < a[i] - tol) {
      x = b[j++];
    } else {
      x = a[i++];
      ++j;
    }
    out.push_back(x);
  }
  return out;
}

}  // namespace

DiscreteState prolongate(const DiscreteState& state, const PrismGrid& old_grid,
                         const PrismGrid& new_grid) {
  if (old_grid.lineage() != new_grid.lineage() || new_grid.node_count() < old_grid.node_count() ||
      new_grid.revision() < old_grid.revision())
    throw Error(ErrorCode::UnrelatedGrids, "new grid is not a refinement of the old grid");
  for (int n = 0; n < old_grid.node_count(); ++n)
    if (old_grid.node(n) != new_grid.node(n))
      throw Error(ErrorCode::UnrelatedGrids, "grids disagree on node coordinates");
  for (int n = old_grid.node_count(); n < new_grid.node_count(); ++n) {
    auto [a, b] = new_grid.node_parents(n);
    if (a < 0 || b < 0 || a >= n || b >= n)
      throw Error(ErrorCode::UnrelatedGrids, "new node without refinement parents");
  }
  const DofLayout old_layout(old_grid);
  check_state(state, old_layout);
  const DofLayout new_layout(new_grid);
  const double tol = 1e-12 * old_grid.top();

  std::vector<VirtualColumn> vc(new_grid.node_count());
  for (int n = 0; n < old_grid.node_count(); ++n) {
    const Column& c = old_layout.column(n);
    VirtualColumn& v = vc[n];
    v.s = c.s;
    for (int k = 0; k < c.intervals(); ++k) {
      v.v.push_back(state.V[c.v_offset + k]);
      v.p1.push_back(state.Phi1[c.v_offset + k]);
      v.p2.push_back(state.Phi2[c.v_offset + k]);
    }
    for (std::size_t k = 0; k < c.s.size(); ++k) v.ps.push_back(state.Phis[c.s_offset + k]);
  }
  // New nodes are midpoints of earlier nodes; the old functions are affine
  // along the parent edge at every s, so the average is exact.
  for (int n = old_grid.node_count(); n < new_grid.node_count(); ++n) {
    auto [a, b] = new_grid.node_parents(n);
    const VirtualColumn& A = vc[a];
    const VirtualColumn& B = vc[b];
    VirtualColumn& v = vc[n];
    v.s = merge_breakpoints(A.s, B.s, tol);
    for (std::size_t k = 0; k + 1 < v.s.size(); ++k) {
      int ia = A.interval(v.s[k], tol), ib = B.interval(v.s[k], tol);
      v.v.push_back(0.5 * (A.v[ia] + B.v[ib]));
      v.p1.push_back(0.5 * (A.p1[ia] + B.p1[ib]));
      v.p2.push_back(0.5 * (A.p2[ia] + B.p2[ib]));
    }
    for (double s : v.s) v.ps.push_back(0.5 * (A.interp(s) + B.interp(s)));
  }

  DiscreteState out = zero_state(new_layout);
  for (int n = 0; n < new_grid.node_count(); ++n) {
    const Column& c = new_layout.column(n);
    const VirtualColumn& v = vc[n];
    for (int k = 0; k < c.intervals(); ++k) {
      int i = v.interval(c.s[k], tol);
      out.V[c.v_offset + k] = v.v[i];
      out.Phi1[c.v_offset + k] = v.p1[i];
      out.Phi2[c.v_offset + k] = v.p2[i];
    }
    for (std::size_t k = 0; k < c.s.size(); ++k) out.Phis[c.s_offset + k] = v.interp(c.s[k]);
  }
  out.Vbar = out.V;
  return out;
}

void write_operator_csv(const PairingOperator& op, std::ostream& os) {
  os.precision(17);
  os << "block,row,col,value\n";
  auto dump = [&](const char* name, const SparseMatrix& m) {
    for (int r = 0; r < m.outerSize(); ++r)
      for (SparseMatrix::InnerIterator it(m, r); it; ++it)
        os << name << ',' << it.row() << ',' << it.col() << ',' << it.value() << '\n';
  };
  dump("M1", op.M1);
  dump("M2", op.M2);
  dump("Ms", op.Ms);
  for (int k = 0; k < op.c.size(); ++k)
    if (op.c[k] != 0.0) os << "c," << k << ",0," << op.c[k] << '\n';
}

void write_state_csv(const DiscreteState& st, std::ostream& os) {
  os.precision(17);
  os << "field,index,value\n";
  auto dump = [&](const char* name, const Eigen::VectorXd& x) {
    for (int k = 0; k < x.size(); ++k) os << name << ',' << k << ',' << x[k] << '\n';
  };
  dump("V", st.V);
  dump("Phi1", st.Phi1);
  dump("Phi2", st.Phi2);
  dump("Phis", st.Phis);
}

}  // namespace liftnet
