#include "liftnet/solver.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "liftnet/error.hpp"

namespace liftnet {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

}  // namespace

void SolverParams::validate() const {
  if (!(theta >= 0.0 && theta <= 1.0)) throw Error(ErrorCode::Config, "solver.theta must lie in [0,1]");
  if (!(step_scale > 0.0 && step_scale <= 1.0))
    throw Error(ErrorCode::Config, "solver.step_scale must lie in (0,1]");
  if (!(inner_tol > 0.0)) throw Error(ErrorCode::Config, "solver.inner_tol must be positive");
  if (stall_window < 1) throw Error(ErrorCode::Config, "solver.stall_window must be >= 1");
  if (max_inner_iters < 1) throw Error(ErrorCode::Config, "solver.max_inner_iters must be >= 1");
  if (check_every < 1) throw Error(ErrorCode::Config, "solver.check_every must be >= 1");
  if (num_refinements < 0) throw Error(ErrorCode::Config, "solver.num_refinements must be >= 0");
  if (!(lambda > 0.0 && lambda < 1.0)) throw Error(ErrorCode::Config, "refinement.lambda must lie in (0,1)");
  if (!(dykstra_tol > 0.0)) throw Error(ErrorCode::Config, "solver.dykstra_tol must be positive");
  if (dykstra_max_cycles < 1) throw Error(ErrorCode::Config, "solver.dykstra_max_cycles must be >= 1");
}

bool convergence_check(const std::vector<double>& changes, double tol, int window,
                       std::optional<double> relative_gap, double gap_tol) {
  if (relative_gap && *relative_gap < gap_tol) return true;
  if (static_cast<int>(changes.size()) < window) return false;
  for (std::size_t i = changes.size() - window; i < changes.size(); ++i)
    if (!(changes[i] < tol)) return false;
  return true;
}

bool convergence_check(const std::vector<Eigen::VectorXd>& iterates, double tol, int window,
                       std::optional<double> relative_gap, double gap_tol) {
  std::vector<double> changes;
  for (std::size_t i = 1; i < iterates.size(); ++i)
    changes.push_back((iterates[i] - iterates[i - 1]).cwiseAbs().maxCoeff());
  return convergence_check(changes, tol, window, relative_gap, gap_tol);
}

double step_size(const PairingOperator& op, const SolverParams& params) {
  // power iteration approaches the norm from below; pad it slightly
  double L = params.step_rule == StepRule::Frobenius ? op.frobenius : 1.01 * operator_norm(op);
  if (!(L > 0.0) || !std::isfinite(L)) return 1.0;
  return params.step_scale / L;
}

DiscreteState initial_state(const PrismGrid& grid, const DofLayout& layout, const BoundaryData& data) {
  DiscreteState st = zero_state(layout);
  for (const Column& c : layout.columns()) {
    const double u = data.start_image(grid.node(c.node));
    for (int k = 0; k < c.intervals(); ++k) st.V[c.v_offset + k] = u > c.s[k] ? 1.0 : 0.0;
  }
  st.Vbar = st.V;
  return st;
}

GridSolveResult solve_on_grid(DiscreteState st, const PairingOperator& op, const PrismGrid& grid,
                              const BoundaryData& data, const TransportCost& cost,
                              const SolverParams& params, int level, const ProgressFn& progress) {
  params.validate();
  const DofLayout& L = op.layout;
  check_state(st, L);
  if (st.Vbar.size() != st.V.size()) st.Vbar = st.V;
  const auto t0 = std::chrono::steady_clock::now();
  const double step = step_size(op, params);
  const double sigma = step, tau = step;
  const PrimalConstraints fixed = make_primal_constraints(L, grid, data);
  const DualConstraints dc = make_dual_constraints(L, cost);

  GridSolveResult res;
  project_primal(st.V, fixed);
  project_primal(st.Vbar, fixed);
  project_dual(st.Phi1, st.Phi2, st.Phis, dc, params.dykstra_tol, params.dykstra_max_cycles);

  auto checkpoint = [&](int it) {
    GapEstimate g = duality_gap(grid, op, dc, fixed, data, st, params.energy);
    Checkpoint c;
    c.level = level;
    c.iteration = it;
    c.elements = grid.element_count();
    c.primal = g.primal;
    c.dual = g.dual;
    c.discrete_dual = g.discrete_dual;
    c.gap = g.gap;
    c.relative_gap = g.relative_gap;
    c.monotonicity_defect = g.monotonicity_defect;
    c.seconds = seconds_since(t0);
    res.checkpoints.push_back(c);
    res.final_gap = g;
    if (progress)
      progress("level=" + std::to_string(level) + " iter=" + std::to_string(it) +
               " energy=" + fmt(g.primal) + " dual=" + fmt(g.discrete_dual) + " gap=" + fmt(g.gap) +
               " elements=" + std::to_string(grid.element_count()));
    return g;
  };

  Eigen::VectorXd V_old(st.V.size());
  int below = 0;
  int it = 0;
  bool checked_last = false;
  res.stop_reason = "max_inner_iters";
  for (it = 1; it <= params.max_inner_iters; ++it) {
    st.Phi1 += sigma * (op.M1.transpose() * st.Vbar);
    st.Phi2 += sigma * (op.M2.transpose() * st.Vbar);
    st.Phis += sigma * (op.Ms.transpose() * st.Vbar + op.c);
    DualProjectionStats ps =
        project_dual(st.Phi1, st.Phi2, st.Phis, dc, params.dykstra_tol, params.dykstra_max_cycles);
    res.dykstra_unconverged += ps.unconverged;

    V_old = st.V;
    st.V -= tau * (op.M1 * st.Phi1 + op.M2 * st.Phi2 + op.Ms * st.Phis);
    project_primal(st.V, fixed);
    st.Vbar = st.V + params.theta * (st.V - V_old);

    const double change = st.V.size() ? (st.V - V_old).cwiseAbs().maxCoeff() : 0.0;
    if (!std::isfinite(change) || !st.Phi1.allFinite() || !st.Phis.allFinite())
      throw Error(ErrorCode::NumericalFailure,
                  "non-finite iterate at level " + std::to_string(level) + ", iteration " + std::to_string(it));
    below = change < params.inner_tol ? below + 1 : 0;

    checked_last = false;
    if (it % params.check_every == 0) {
      GapEstimate g = checkpoint(it);
      checked_last = true;
      if (g.relative_gap < params.gap_tol) {
        res.converged = true;
        res.stop_reason = "gap";
        break;
      }
    }
    if (below >= params.stall_window) {
      res.converged = true;
      res.stop_reason = "stalled";
      break;
    }
  }
  res.iterations = std::min(it, params.max_inner_iters);
  if (!checked_last) checkpoint(res.iterations);
  res.state = std::move(st);
  return res;
}

AdaptiveResult adaptive_solve(const AdaptiveProblem& problem, const SolverParams& params,
                              const ProgressFn& progress, const LevelFn& on_level) {
  params.validate();
  const BoundaryData& data = problem.data;
  AdaptiveResult out;
  out.grid = make_uniform_grid(data.domain(), data, problem.x_level, problem.s_level);
  DofLayout layout(out.grid);
  out.state = initial_state(out.grid, layout, data);
  double previous_primal = NAN;

  for (int level = 0; level <= params.num_refinements; ++level) {
    const auto t0 = std::chrono::steady_clock::now();
    PairingOperator op = assemble(out.grid, data);
    GridSolveResult r = solve_on_grid(std::move(out.state), op, out.grid, data, problem.cost, params,
                                      level, progress);
    out.state = std::move(r.state);
    out.checkpoints.insert(out.checkpoints.end(), r.checkpoints.begin(), r.checkpoints.end());

    LevelRecord rec;
    rec.level = level;
    rec.iterations = r.iterations;
    rec.elements = out.grid.element_count();
    rec.dofs = 3 * op.layout.q_v() + op.layout.q_s();
    rec.energy_primal = r.final_gap.primal;
    rec.energy_dual = r.final_gap.discrete_dual;
    rec.energy_dual_pointwise = r.final_gap.dual;
    rec.gap = r.final_gap.gap;
    rec.relative_gap = r.final_gap.relative_gap;
    rec.converged = r.converged;
    rec.stop_reason = r.stop_reason;
    out.converged = out.converged && r.converged;

    if (std::isfinite(previous_primal) && std::abs(previous_primal) > 1e-12 &&
        std::abs(rec.energy_primal) > 10.0 * std::abs(previous_primal))
      throw Error(ErrorCode::NumericalFailure,
                  "primal energy grew from " + fmt(previous_primal) + " to " + fmt(rec.energy_primal) +
                      " at level " + std::to_string(level));
    previous_primal = rec.energy_primal;

    IndicatorField eta;
    if (level < params.num_refinements) {
      const DofLayout& L = op.layout;
      IndicatorField grad = indicator_gradient(out.grid, L, out.state.V);
      if (params.indicator == IndicatorKind::Gradient) {
        eta = grad;
      } else {
        PDGapOptions gopt;
        gopt.dykstra_tol = params.dykstra_tol;
        gopt.dykstra_max_cycles = params.energy.dykstra_max_cycles;
        gopt.max_ascent_steps = params.energy.max_ascent_steps;
        PDGapIndicator pd = indicator_pd_gap(out.grid, data, problem.cost, out.state, gopt);
        if (!pd.converged) {
          eta = grad;
          rec.indicator_note = "pd_gap_fallback_to_gradient";
        } else if (params.indicator == IndicatorKind::PDGap) {
          eta = pd.field;
        } else {
          eta = combine_max(grad, pd.field);
        }
      }
    }
    rec.seconds = seconds_since(t0);
    if (on_level) on_level(level, out.grid, out.state, eta);

    if (level < params.num_refinements) {
      PrismGrid old = out.grid;
      mark_and_refine(out.grid, eta, params.lambda, params.refine_mode);
      rec.seconds = seconds_since(t0);
      if (out.grid.element_count() > params.element_budget) {
        out.grid = std::move(old);
        out.budget_exceeded = true;
        out.history.push_back(rec);
        if (progress) progress("level=" + std::to_string(level) + " status=element_budget_exceeded");
        break;
      }
      out.state = prolongate(out.state, old, out.grid);
    }
    out.history.push_back(rec);
    if (progress)
      progress("level=" + std::to_string(level) + " done=1 iters=" + std::to_string(rec.iterations) +
               " energy=" + fmt(rec.energy_primal) + " gap=" + fmt(rec.gap) +
               " elements=" + std::to_string(rec.elements) + " seconds=" + fmt(rec.seconds));
  }
  return out;
}

}  // namespace liftnet
