#pragma once

#include <Eigen/Core>
#include <vector>

#include "liftnet/constraints.hpp"
#include "liftnet/cost.hpp"
#include "liftnet/fem_pairing.hpp"
#include "liftnet/prism_grid.hpp"

namespace liftnet {

enum class IndicatorKind { Gradient, PDGap, MaxOfBoth };
enum class RefineMode { X, S, Both };

// Indicator values are aligned with grid.alive_elements().
struct IndicatorField {
  std::vector<int> elements;
  std::vector<double> eta;
};

// |Dv^h| restricted to each element (lateral gradient over the prism plus the
// jump on its own bottom face) divided by the element volume.
IndicatorField indicator_gradient(const PrismGrid& grid, const DofLayout& layout,
                                  const Eigen::VectorXd& V);
// Total variation of v^h over the whole grid (sum of unnormalized indicator masses).
double total_variation(const PrismGrid& grid, const DofLayout& layout, const Eigen::VectorXd& V);

struct PDGapIndicator {
  IndicatorField field;     // negatives clamped to 0, used for marking
  std::vector<double> raw;  // signed per-element values
  std::vector<double> flux_term, divergence_term;
  bool converged = true;
  double total = 0.0;  // sum of raw values
};

struct PDGapOptions {
  double dykstra_tol = 1e-9;
  int dykstra_max_cycles = 5000;
  int max_ascent_steps = 40;
};

PDGapIndicator indicator_pd_gap(const PrismGrid& grid, const BoundaryData& data,
                                const TransportCost& cost, const DiscreteState& state,
                                const PDGapOptions& options = {});

// Both fields normalized by their own maximum, then combined elementwise by max.
IndicatorField combine_max(const IndicatorField& a, const IndicatorField& b);

// Refines every element with eta >= lambda * max eta. Returns the number of
// marked elements.
int mark_and_refine(PrismGrid& grid, const IndicatorField& eta, double lambda, RefineMode mode);

}  // namespace liftnet
