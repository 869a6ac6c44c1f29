#include <doctest.h>

#include <algorithm>
#include <array>
#include <random>

#include <Eigen/LU>

#include "liftnet/error.hpp"
#include "liftnet/fem_pairing.hpp"

using namespace liftnet;

namespace {

BoundaryData vertical_pair() {
  return build_boundary_data(Domain::unit_square(), {{2.5, 1.0, AtomSign::Source}, {0.5, 1.0, AtomSign::Sink}});
}

DiscreteState random_state(const DofLayout& L, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  DiscreteState st = zero_state(L);
  for (auto* vec : {&st.V, &st.Phi1, &st.Phi2, &st.Phis})
    for (Eigen::Index i = 0; i < vec->size(); ++i) (*vec)[i] = U(rng);
  return st;
}

PrismGrid mixed_grid(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  PrismGrid g = PrismGrid::uniform(Domain::unit_square(), 1.0, 2, 1);
  for (int i = 0; i < 6; ++i) {
    const auto alive = g.alive_elements();
    const int e = alive[rng() % alive.size()];
    if (i % 2) g.x_refine(e); else g.s_refine(e);
  }
  return g;
}

// Independent evaluation of the FE functions straight from the column
// breakpoints.
int interval_of(const Column& c, double s) {
  int k = static_cast<int>(std::upper_bound(c.s.begin(), c.s.end(), s) - c.s.begin()) - 1;
  return std::clamp(k, 0, c.intervals() - 1);
}

double linear_in_s(const Column& c, const Eigen::VectorXd& phis, double s) {
  for (std::size_t k = 0; k + 1 < c.s.size(); ++k)
    if (s >= c.s[k] && s <= c.s[k + 1]) {
      const double t = (s - c.s[k]) / (c.s[k + 1] - c.s[k]);
      return (1 - t) * phis[c.s_offset + k] + t * phis[c.s_offset + k + 1];
    }
  return phis[c.s_offset + c.s.size() - 1];
}

// Degree-4 Dunavant rule on the reference triangle (barycentric points).
const std::array<std::array<double, 4>, 6> kDunavant = {{
    {0.108103018168070, 0.445948490915965, 0.445948490915965, 0.223381589678011},
    {0.445948490915965, 0.108103018168070, 0.445948490915965, 0.223381589678011},
    {0.445948490915965, 0.445948490915965, 0.108103018168070, 0.223381589678011},
    {0.816847572980459, 0.091576213509771, 0.091576213509771, 0.109951743655322},
    {0.091576213509771, 0.816847572980459, 0.091576213509771, 0.109951743655322},
    {0.091576213509771, 0.091576213509771, 0.816847572980459, 0.109951743655322},
}};

double quadrature_pairing(const PrismGrid& g, const std::vector<Column>& cols, const DiscreteState& st) {
  double total = 0.0;
  for (int e : g.alive_elements()) {
    const PrismElement& pe = g.element(e);
    const auto& v = g.triangle(pe.triangle).v;
    const double A = g.triangle_area(pe.triangle);
    const double smid = 0.5 * (pe.s0 + pe.s1);
    double vv[3], p1[3], p2[3], jump[3], ps[3];
    for (int i = 0; i < 3; ++i) {
      const Column& c = cols[v[i]];
      const int k = c.v_offset + interval_of(c, smid);
      vv[i] = st.V[k];
      p1[i] = st.Phi1[k];
      p2[i] = st.Phi2[k];
      const double below = pe.s0 <= 0.0 ? 1.0 : st.V[c.v_offset + interval_of(c, pe.s0 - 1e-9)];
      jump[i] = vv[i] - below;
      ps[i] = linear_in_s(c, st.Phis, pe.s0);
    }
    // gradient of the P1 interpolant by solving the 2x2 system
    const Vec2 a = g.node(v[1]) - g.node(v[0]), b = g.node(v[2]) - g.node(v[0]);
    Eigen::Matrix2d J;
    J << a.x(), a.y(), b.x(), b.y();
    const Vec2 grad = J.inverse() * Vec2(vv[1] - vv[0], vv[2] - vv[0]);
    for (const auto& q : kDunavant) {
      const double w = q[3] * A;
      double f1 = 0, f2 = 0, fs = 0, fj = 0;
      for (int i = 0; i < 3; ++i) {
        f1 += q[i] * p1[i];
        f2 += q[i] * p2[i];
        fs += q[i] * ps[i];
        fj += q[i] * jump[i];
      }
      total += w * (pe.height() * (f1 * grad.x() + f2 * grad.y()) + fs * fj);
    }
  }
  return total;
}

}  // namespace

TEST_CASE("assembled pairing matches quadrature on a uniform grid") {
  const BoundaryData data = vertical_pair();
  const PrismGrid g = PrismGrid::uniform(data.domain(), data.top(), 2, 1);
  const PairingOperator op = assemble(g, data);
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const DiscreteState st = random_state(op.layout, rng);
    CHECK(pairing(op, st) == doctest::Approx(quadrature_pairing(g, op.layout.columns(), st)).epsilon(1e-10));
  }
}

TEST_CASE("assembled pairing matches quadrature on refined grids with hanging breakpoints") {
  const BoundaryData data = vertical_pair();
  for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
    const PrismGrid g = mixed_grid(seed);
    const PairingOperator op = assemble(g, data);
    std::mt19937_64 rng(seed + 100);
    for (int i = 0; i < 5; ++i) {
      const DiscreteState st = random_state(op.layout, rng);
      CHECK(pairing(op, st) == doctest::Approx(quadrature_pairing(g, op.layout.columns(), st)).epsilon(1e-10));
    }
  }
}

TEST_CASE("primal-to-dual and dual-to-primal are adjoint") {
  const BoundaryData data = vertical_pair();
  const PrismGrid g = mixed_grid(9);
  const PairingOperator op = assemble(g, data);
  std::mt19937_64 rng(17);
  for (int i = 0; i < 10; ++i) {
    const DiscreteState st = random_state(op.layout, rng);
    const DualVector d = apply_primal_to_dual(op, st.V);
    const double lhs = d.g1.dot(st.Phi1) + d.g2.dot(st.Phi2) + d.gs.dot(st.Phis);
    CHECK(lhs == doctest::Approx(pairing(op, st)).epsilon(1e-12));
  }
  const DualVector z = apply_primal_to_dual(op, Eigen::VectorXd::Zero(op.layout.q_v()));
  CHECK(z.g1.norm() == 0.0);
  CHECK(z.g2.norm() == 0.0);
  CHECK((z.gs - op.c).norm() == 0.0);
  CHECK_THROWS_AS(apply_primal_to_dual(op, Eigen::VectorXd::Zero(op.layout.q_v() + 1)), Error);
}

TEST_CASE("constant lift V = 1 pairs only through the lateral part") {
  // v = 1 everywhere has no jumps and no gradient.
  const BoundaryData data = vertical_pair();
  const PrismGrid g = PrismGrid::uniform(data.domain(), data.top(), 2, 2);
  const PairingOperator op = assemble(g, data);
  std::mt19937_64 rng(5);
  DiscreteState st = random_state(op.layout, rng);
  st.V.setOnes();
  CHECK(std::abs(pairing(op, st)) < 1e-12);
}

TEST_CASE("operator norm lies below the Frobenius norm") {
  const BoundaryData data = vertical_pair();
  const PairingOperator op = assemble(PrismGrid::uniform(data.domain(), data.top(), 3, 2), data);
  const double L = operator_norm(op);
  CHECK(L > 0.0);
  CHECK(L <= op.frobenius);
  Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(op.layout.q_v(), -1.0, 2.0);
  const DualVector d = apply_primal_to_dual(op, x);
  const double img = std::sqrt(d.g1.squaredNorm() + d.g2.squaredNorm() + (d.gs - op.c).squaredNorm());
  CHECK(img <= L * x.norm() * (1 + 1e-6));
}

TEST_CASE("prolongation preserves the pairing") {
  const BoundaryData data = vertical_pair();
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 6; ++trial) {
    PrismGrid coarse = mixed_grid(40 + trial);
    PrismGrid fine = coarse;
    for (int i = 0; i < 5; ++i) {
      const auto alive = fine.alive_elements();
      const int e = alive[rng() % alive.size()];
      if ((i + trial) % 2) fine.x_refine(e); else fine.s_refine(e);
    }
    const PairingOperator opc = assemble(coarse, data), opf = assemble(fine, data);
    const DiscreteState st = random_state(opc.layout, rng);
    const DiscreteState pf = prolongate(st, coarse, fine);
    CHECK(pairing(opf, pf) == doctest::Approx(pairing(opc, st)).epsilon(1e-10));
  }
}

TEST_CASE("prolongation keeps constants and rejects unrelated grids") {
  const BoundaryData data = vertical_pair();
  PrismGrid coarse = PrismGrid::uniform(data.domain(), data.top(), 1, 1);
  PrismGrid fine = coarse;
  fine.x_refine(fine.alive_elements().front());
  fine.s_refine(fine.alive_elements().back());
  DiscreteState st = zero_state(DofLayout(coarse));
  st.V.setConstant(0.5);
  const DiscreteState pf = prolongate(st, coarse, fine);
  CHECK((pf.V.array() - 0.5).abs().maxCoeff() < 1e-15);
  const PrismGrid other = PrismGrid::uniform(data.domain(), data.top(), 1, 1);
  CHECK_THROWS_AS(prolongate(st, other, fine), Error);
}
