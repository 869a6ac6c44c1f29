#pragma once

#include <Eigen/Core>

#include "liftnet/boundary.hpp"
#include "liftnet/constraints.hpp"
#include "liftnet/fem_pairing.hpp"
#include "liftnet/prism_grid.hpp"

namespace liftnet {

struct PrimalEnergyOptions {
  int max_ascent_steps = 40;
  double rel_tol = 1e-10;
  double dykstra_tol = 1e-9;
  int dykstra_max_cycles = 5000;
};

struct PrimalEnergy {
  // Energy of the columnwise nonincreasing envelope of V (sup over the dual
  // constraint set of the pairing; the Phi^s part vanishes for it).
  double value = 0.0;
  // L1 distance (coefficient sum) between V and that envelope; 0 when V is
  // already nonincreasing in s, in which case value is the energy of V itself.
  double monotonicity_defect = 0.0;
  int unconverged_columns = 0;
};

// Running minimum from s = 0 upward in every column.
Eigen::VectorXd monotone_envelope(const DofLayout& layout, const Eigen::VectorXd& V);

// Per-column ascent on sup_{Y in K_x} g.Y started from the warm dual point,
// so the result never drops below the pairing with it.
PrimalEnergy primal_energy(const PairingOperator& op, const DualConstraints& constraints,
                           const Eigen::VectorXd& V, const Eigen::VectorXd* warm_phi1 = nullptr,
                           const Eigen::VectorXd* warm_phi2 = nullptr,
                           const PrimalEnergyOptions& options = {});

struct FluxMaximum {
  double value = 0.0;
  int unconverged_columns = 0;
  Eigen::VectorXd phi1, phi2;  // maximizer, filled when requested
};

// sup over the product of column sets K_x of sum_k (M1^T V)_k Phi1_k + (M2^T V)_k Phi2_k,
// computed column by column from the warm start.
FluxMaximum maximize_flux(const PairingOperator& op, const DualConstraints& constraints,
                          const Eigen::VectorXd& V, const Eigen::VectorXd* warm_phi1,
                          const Eigen::VectorXd* warm_phi2, const PrimalEnergyOptions& options,
                          bool keep_maximizer);

// Closed-form predual energy of a dual coefficient vector: lateral boundary
// flux against the discrete trace, minus the bottom flux, minus the positive
// part of the divergence. Bounded above by the pairing with any admissible V.
double dual_energy(const PrismGrid& grid, const PairingOperator& op, const BoundaryData& data,
                   const Eigen::VectorXd& Phi1, const Eigen::VectorXd& Phi2,
                   const Eigen::VectorXd& Phis);

// min over admissible discrete V of the pairing: the dual objective of the
// discrete saddle-point problem. Never below dual_energy.
double discrete_dual_energy(const PairingOperator& op, const PrimalConstraints& fixed,
                            const Eigen::VectorXd& Phi1, const Eigen::VectorXd& Phi2,
                            const Eigen::VectorXd& Phis);

// Integral of max(0, f) over a triangle of area A for affine f with the given
// vertex values.
double positive_part_integral(double A, double d0, double d1, double d2);

// Per-element divergence of phi^h: the constant x-part and the vertex values
// of the affine total divergence.
struct ElementDivergence {
  double dx = 0.0;
  double vertex[3] = {0.0, 0.0, 0.0};
};
ElementDivergence element_divergence(const PrismGrid& grid, const DofLayout& layout, int element,
                                     const Eigen::VectorXd& Phi1, const Eigen::VectorXd& Phi2,
                                     const Eigen::VectorXd& Phis);

// gap = primal - discrete_dual is the saddle-point gap on the current grid;
// primal - dual additionally contains the pointwise divergence defect.
struct GapEstimate {
  double primal = 0.0;
  double dual = 0.0;
  double discrete_dual = 0.0;
  double gap = 0.0;
  double relative_gap = 0.0;
  double monotonicity_defect = 0.0;
};

GapEstimate duality_gap(const PrismGrid& grid, const PairingOperator& op,
                        const DualConstraints& constraints, const PrimalConstraints& fixed,
                        const BoundaryData& data, const DiscreteState& state, const PrimalEnergyOptions& options = {});

}  // namespace liftnet
