#include <doctest.h>

#include <cmath>
#include <vector>

#include "liftnet/error.hpp"
#include "liftnet/solver.hpp"

using namespace liftnet;

namespace {

BoundaryData vertical_pair() {
  return build_boundary_data(Domain::unit_square(), {{2.5, 1.0, AtomSign::Source}, {0.5, 1.0, AtomSign::Sink}});
}

SolverParams quick_params() {
  SolverParams p;
  p.step_rule = StepRule::OperatorNorm;
  p.max_inner_iters = 3000;
  p.check_every = 100;
  return p;
}

}  // namespace

TEST_CASE("convergence_check on change histories") {
  std::vector<double> changes(60, 1e-7);
  CHECK(convergence_check(changes, 1e-6, 50));
  changes[30] = 1e-3;
  CHECK(convergence_check(changes, 1e-6, 50) == false);
  CHECK(convergence_check(changes, 1e-6, 20));
  CHECK(convergence_check(std::vector<double>(10, 0.0), 1e-6, 50) == false);
  CHECK(convergence_check(std::vector<double>{}, 1e-6, 50, 5e-4, 1e-3));
  CHECK(convergence_check(std::vector<double>{}, 1e-6, 50, 2e-3, 1e-3) == false);
}

TEST_CASE("convergence_check on iterates") {
  std::vector<Eigen::VectorXd> its;
  for (int i = 0; i < 8; ++i) its.push_back(Eigen::VectorXd::Constant(3, 1.0 + 1e-9 * i));
  CHECK(convergence_check(its, 1e-6, 5));
  its.push_back(Eigen::VectorXd::Constant(3, 2.0));
  CHECK(convergence_check(its, 1e-6, 5) == false);
}

TEST_CASE("parameter validation names the key") {
  SolverParams p;
  p.theta = 1.5;
  CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("theta"), Error);
  p = SolverParams{};
  p.step_scale = 0.0;
  CHECK_THROWS_AS(p.validate(), Error);
  p = SolverParams{};
  p.lambda = 1.0;
  CHECK_THROWS_AS(p.validate(), Error);
  CHECK_NOTHROW(SolverParams{}.validate());
}

TEST_CASE("step size respects the chosen norm") {
  const BoundaryData data = vertical_pair();
  const PairingOperator op = assemble(PrismGrid::uniform(data.domain(), data.top(), 2, 1), data);
  SolverParams p;
  CHECK(step_size(op, p) == doctest::Approx(1.0 / op.frobenius));
  p.step_rule = StepRule::OperatorNorm;
  const double s = step_size(op, p);
  CHECK(s > 1.0 / op.frobenius);
  CHECK(s * operator_norm(op) <= 1.0);
}

TEST_CASE("initial state is binary and matches the boundary trace") {
  const BoundaryData data = vertical_pair();
  const PrismGrid g = PrismGrid::uniform(data.domain(), data.top(), 3, 1);
  const DofLayout L(g);
  const DiscreteState st = initial_state(g, L, data);
  for (Eigen::Index i = 0; i < st.V.size(); ++i) CHECK((st.V[i] == 0.0 || st.V[i] == 1.0));
  const PrimalConstraints fixed = make_primal_constraints(L, g, data);
  for (std::size_t i = 0; i < fixed.index.size(); ++i) CHECK(st.V[fixed.index[i]] == fixed.value[i]);
}

TEST_CASE("straight line: weak duality at every checkpoint and a small final gap") {
  const BoundaryData data = vertical_pair();
  const TransportCost cost = TransportCost::branched_transport(0.5);
  const PrismGrid g = PrismGrid::uniform(data.domain(), data.top(), 4, 2);
  const PairingOperator op = assemble(g, data);
  SolverParams p = quick_params();
  p.max_inner_iters = 20000;
  const GridSolveResult r = solve_on_grid(initial_state(g, op.layout, data), op, g, data, cost, p);
  REQUIRE(!r.checkpoints.empty());
  for (const Checkpoint& c : r.checkpoints) {
    CHECK(c.primal >= c.discrete_dual - 1e-9);
    CHECK(c.discrete_dual >= c.dual - 1e-9);
  }
  // a vertical segment of mass 1 and length 1
  CHECK(r.final_gap.primal == doctest::Approx(1.0).epsilon(0.05));
  CHECK(r.final_gap.gap >= -1e-9);
  CHECK(r.final_gap.relative_gap < 0.02);
}

TEST_CASE("solves are deterministic") {
  const BoundaryData data = vertical_pair();
  const TransportCost cost = TransportCost::urban_planning(3.0, 0.5);
  const PrismGrid g = PrismGrid::uniform(data.domain(), data.top(), 2, 1);
  const PairingOperator op = assemble(g, data);
  SolverParams p = quick_params();
  p.max_inner_iters = 400;
  const GridSolveResult a = solve_on_grid(initial_state(g, op.layout, data), op, g, data, cost, p);
  const GridSolveResult b = solve_on_grid(initial_state(g, op.layout, data), op, g, data, cost, p);
  CHECK(a.iterations == b.iterations);
  CHECK(a.state.V == b.state.V);
  CHECK(a.state.Phi1 == b.state.Phi1);
  CHECK(a.state.Phis == b.state.Phis);
}

TEST_CASE("adaptive solve records one history entry per level") {
  AdaptiveProblem prob{vertical_pair(), TransportCost::branched_transport(0.5), 2, 1};
  SolverParams p = quick_params();
  p.num_refinements = 1;
  p.max_inner_iters = 1500;
  int calls = 0;
  const AdaptiveResult r = adaptive_solve(prob, p, {}, [&](int, const PrismGrid&, const DiscreteState&,
                                                           const IndicatorField&) { ++calls; });
  CHECK(r.history.size() == 2);
  CHECK(calls == 2);
  CHECK(r.history[1].elements > r.history[0].elements);
  CHECK(check_semi_regular(r.grid).passed());
  for (const LevelRecord& rec : r.history) CHECK(rec.energy_primal >= rec.energy_dual - 1e-9);
}

TEST_CASE("element budget stops refinement") {
  AdaptiveProblem prob{vertical_pair(), TransportCost::branched_transport(0.5), 2, 1};
  SolverParams p = quick_params();
  p.num_refinements = 3;
  p.max_inner_iters = 200;
  p.element_budget = 20;
  const AdaptiveResult r = adaptive_solve(prob, p);
  CHECK(r.budget_exceeded);
}
