#include <doctest.h>

#include <algorithm>
#include <random>

#include "liftnet/error.hpp"
#include "liftnet/refinement.hpp"
#include "liftnet/solver.hpp"

using namespace liftnet;

namespace {

BoundaryData vertical_pair() {
  return build_boundary_data(Domain::unit_square(), {{2.5, 1.0, AtomSign::Source}, {0.5, 1.0, AtomSign::Sink}});
}

}  // namespace

TEST_CASE("gradient indicator vanishes for V = 1 and sees the bottom jump of V = 0") {
  const PrismGrid g = PrismGrid::uniform(Domain::unit_square(), 1.0, 2, 2);
  const DofLayout L(g);
  const IndicatorField one = indicator_gradient(g, L, Eigen::VectorXd::Ones(L.q_v()));
  CHECK(*std::max_element(one.eta.begin(), one.eta.end()) == 0.0);
  // v = 0 jumps by -1 on the bottom face only: total variation = |domain|
  CHECK(total_variation(g, L, Eigen::VectorXd::Zero(L.q_v())) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("total variation of a binary graph lift") {
  // v = 1 below s = u(x) with u = 1 on x < 1/2 and 1/2 elsewhere, grid aligned
  const PrismGrid g = PrismGrid::uniform(Domain::unit_square(), 1.0, 0, 1);
  const DofLayout L(g);
  Eigen::VectorXd V = Eigen::VectorXd::Zero(L.q_v());
  for (const Column& c : L.columns()) V[c.v_offset] = 1.0;
  // every column: 1 on [0,1/2), 0 on [1/2,1): one flat unit-area jump
  CHECK(total_variation(g, L, V) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("total variation is invariant under refinement") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int trial = 0; trial < 5; ++trial) {
    PrismGrid coarse = PrismGrid::uniform(Domain::unit_square(), 1.0, 2, 1);
    const DofLayout Lc(coarse);
    DiscreteState st = zero_state(Lc);
    for (Eigen::Index i = 0; i < st.V.size(); ++i) st.V[i] = U(rng);
    PrismGrid fine = coarse;
    for (int i = 0; i < 6; ++i) {
      const auto alive = fine.alive_elements();
      const int e = alive[rng() % alive.size()];
      if ((i + trial) % 2) fine.x_refine(e); else fine.s_refine(e);
    }
    const DiscreteState pf = prolongate(st, coarse, fine);
    CHECK(total_variation(fine, DofLayout(fine), pf.V) ==
          doctest::Approx(total_variation(coarse, Lc, st.V)).epsilon(1e-10));
  }
}

TEST_CASE("mark_and_refine marks by the bulk criterion") {
  PrismGrid g = PrismGrid::uniform(Domain::unit_square(), 1.0, 1, 1);
  IndicatorField f;
  f.elements = g.alive_elements();
  f.eta.assign(f.elements.size(), 0.1);
  f.eta[0] = 1.0;
  f.eta[1] = 0.6;
  const int before = g.element_count();
  PrismGrid gs = g, gx = g, gb = g;
  CHECK(mark_and_refine(gs, f, 0.5, RefineMode::S) == 2);
  CHECK(mark_and_refine(gx, f, 0.7, RefineMode::X) == 1);
  CHECK(mark_and_refine(gb, f, 0.05, RefineMode::Both) == static_cast<int>(f.elements.size()));
  CHECK(gs.element_count() > before);
  CHECK(gs.leaf_triangles().size() == g.leaf_triangles().size());
  CHECK(gx.leaf_triangles().size() > g.leaf_triangles().size());
  for (const PrismGrid* p : {&gs, &gx, &gb}) CHECK(check_semi_regular(*p).passed());
  f.eta[2] = -1.0;
  CHECK_THROWS_AS(mark_and_refine(g, f, 0.5, RefineMode::S), Error);
  f.eta[2] = 0.1;
  CHECK_THROWS_AS(mark_and_refine(g, f, 1.0, RefineMode::S), Error);
}

TEST_CASE("combine_max normalizes each field") {
  IndicatorField a{{0, 1, 2}, {1.0, 2.0, 4.0}}, b{{0, 1, 2}, {0.3, 0.0, 0.1}};
  const IndicatorField c = combine_max(a, b);
  CHECK(c.eta[0] == doctest::Approx(1.0));
  CHECK(c.eta[1] == doctest::Approx(0.5));
  CHECK(c.eta[2] == doctest::Approx(1.0));
  IndicatorField d{{0, 1}, {1.0, 1.0}};
  CHECK_THROWS_AS(combine_max(a, d), Error);
}

TEST_CASE("PD-gap indicator terms have the expected signs") {
  const BoundaryData data = vertical_pair();
  const TransportCost cost = TransportCost::branched_transport(0.5);
  const PrismGrid g = PrismGrid::uniform(data.domain(), data.top(), 3, 1);
  const PairingOperator op = assemble(g, data);
  SolverParams p;
  p.step_rule = StepRule::OperatorNorm;
  p.max_inner_iters = 500;
  const GridSolveResult r = solve_on_grid(initial_state(g, op.layout, data), op, g, data, cost, p);
  const PDGapIndicator ind = indicator_pd_gap(g, data, cost, r.state);
  CHECK(ind.converged);
  CHECK(ind.field.elements == g.alive_elements());
  double flux = 0.0;
  for (std::size_t i = 0; i < ind.raw.size(); ++i) {
    CHECK(ind.divergence_term[i] >= -1e-12);
    CHECK(ind.field.eta[i] >= 0.0);
    flux += ind.flux_term[i];
  }
  CHECK(flux >= -1e-9);
  CHECK(ind.total >= -1e-9);
}
