#pragma once

#include <Eigen/Core>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "liftnet/boundary.hpp"
#include "liftnet/constraints.hpp"
#include "liftnet/cost.hpp"
#include "liftnet/energies.hpp"
#include "liftnet/fem_pairing.hpp"
#include "liftnet/prism_grid.hpp"
#include "liftnet/refinement.hpp"

namespace liftnet {

// Frobenius: tau = sigma = 1/||(M1|M2|Ms)||_F. OperatorNorm uses the spectral
// norm (power iteration) instead, which permits much larger steps.
enum class StepRule { Frobenius, OperatorNorm };

struct SolverParams {
  double theta = 1.0;
  StepRule step_rule = StepRule::Frobenius;
  double step_scale = 1.0;  // multiplies both step sizes; must keep sigma*tau*L^2 <= 1
  double inner_tol = 1e-6;
  int stall_window = 50;
  double gap_tol = 1e-3;
  int max_inner_iters = 20000;
  int check_every = 250;
  int num_refinements = 0;
  double lambda = 0.5;
  IndicatorKind indicator = IndicatorKind::MaxOfBoth;
  RefineMode refine_mode = RefineMode::Both;
  double dykstra_tol = 1e-7;
  int dykstra_max_cycles = 200;
  long long element_budget = 2000000;
  PrimalEnergyOptions energy;

  void validate() const;
};

struct Checkpoint {
  int level = 0;
  int iteration = 0;
  int elements = 0;
  double primal = 0.0;
  double dual = 0.0;  // pointwise predual energy
  double discrete_dual = 0.0;
  double gap = 0.0;
  double relative_gap = 0.0;
  double monotonicity_defect = 0.0;
  double seconds = 0.0;
};

struct GridSolveResult {
  DiscreteState state;
  int iterations = 0;
  bool converged = false;
  std::string stop_reason;
  std::vector<Checkpoint> checkpoints;
  GapEstimate final_gap;
  long long dykstra_unconverged = 0;
};

// key=value progress line sink.
using ProgressFn = std::function<void(const std::string&)>;

// Stops when the max-norm change of V stayed below tol for the last `window`
// entries of changes, or when the relative gap estimate is below gap_tol.
bool convergence_check(const std::vector<double>& max_changes, double tol, int window = 50,
                       std::optional<double> relative_gap = std::nullopt, double gap_tol = 1e-3);
bool convergence_check(const std::vector<Eigen::VectorXd>& iterates, double tol, int window = 50,
                       std::optional<double> relative_gap = std::nullopt, double gap_tol = 1e-3);

GridSolveResult solve_on_grid(DiscreteState state, const PairingOperator& op,
                              const PrismGrid& grid, const BoundaryData& data,
                              const TransportCost& cost, const SolverParams& params,
                              int level = 0, const ProgressFn& progress = {});

// Binary start from the nearest-boundary-point extension of the cumulative
// boundary image.
DiscreteState initial_state(const PrismGrid& grid, const DofLayout& layout, const BoundaryData& data);

struct LevelRecord {
  int level = 0;
  int iterations = 0;
  int elements = 0;
  int dofs = 0;
  double energy_primal = 0.0;
  double energy_dual = 0.0;  // discrete dual objective
  double energy_dual_pointwise = 0.0;
  double gap = 0.0;
  double relative_gap = 0.0;
  double seconds = 0.0;
  bool converged = false;
  std::string stop_reason;
  std::string indicator_note;
};

struct AdaptiveProblem {
  BoundaryData data;
  TransportCost cost;
  int x_level = 4;
  int s_level = 2;
};

struct AdaptiveResult {
  PrismGrid grid;
  DiscreteState state;
  std::vector<LevelRecord> history;
  std::vector<Checkpoint> checkpoints;
  bool budget_exceeded = false;
  bool converged = true;
};

// Called after each level with the solved grid/state and the indicator used
// for the next refinement (empty on the last level).
using LevelFn = std::function<void(int level, const PrismGrid&, const DiscreteState&,
                                   const IndicatorField& indicator)>;

AdaptiveResult adaptive_solve(const AdaptiveProblem& problem, const SolverParams& params,
                              const ProgressFn& progress = {}, const LevelFn& on_level = {});

// Step sizes for a given operator.
double step_size(const PairingOperator& op, const SolverParams& params);

}  // namespace liftnet
