#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <array>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "liftnet/boundary.hpp"
#include "liftnet/prism_grid.hpp"

namespace liftnet {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Coefficient numbering for the FE spaces of one grid. V, Phi1, Phi2 live on
// N'' (column breakpoints below M), Phis on N' (all column breakpoints).
class DofLayout {
 public:
  DofLayout() = default;
  explicit DofLayout(const PrismGrid& grid);

  const std::vector<Column>& columns() const { return columns_; }
  const Column& column(int node) const { return columns_[node]; }
  int q_v() const { return q_v_; }
  int q_s() const { return q_s_; }
  double top() const { return M_; }
  std::uint64_t lineage() const { return lineage_; }
  int revision() const { return revision_; }

  // N'' index of the interval containing s (right-continuous; s = M maps to
  // the last interval).
  int v_index(int node, double s) const;
  // N'' index of the interval containing s from below, -1 when s <= 0.
  int v_index_below(int node, double s) const;
  // Linear interpolation of an N' function at (node, s): up to two entries.
  int s_weights(int node, double s, std::array<int, 2>& idx, std::array<double, 2>& w) const;

 private:
  std::vector<Column> columns_;
  int q_v_ = 0, q_s_ = 0;
  double M_ = 1.0;
  double tol_ = 1e-12;
  std::uint64_t lineage_ = 0;
  int revision_ = -1;
};

struct DiscreteState {
  Eigen::VectorXd V, Phi1, Phi2, Phis, Vbar;
  std::uint64_t lineage = 0;
  int revision = -1;
};

DiscreteState zero_state(const DofLayout& layout);
void check_state(const DiscreteState& state, const DofLayout& layout);

struct PairingOperator {
  DofLayout layout;
  SparseMatrix M1, M2, Ms;
  Eigen::VectorXd c;
  double frobenius = 0.0;
};

struct DualVector {
  Eigen::VectorXd g1, g2, gs;
};

PairingOperator assemble(const PrismGrid& grid, const BoundaryData& data);
// (M1^T V, M2^T V, Ms^T V + c)
DualVector apply_primal_to_dual(const PairingOperator& op, const Eigen::VectorXd& V);
// M1 Phi1 + M2 Phi2 + Ms Phis
Eigen::VectorXd apply_dual_to_primal(const PairingOperator& op, const Eigen::VectorXd& Phi1,
                                     const Eigen::VectorXd& Phi2, const Eigen::VectorXd& Phis);
double pairing(const PairingOperator& op, const Eigen::VectorXd& V, const Eigen::VectorXd& Phi1,
               const Eigen::VectorXd& Phi2, const Eigen::VectorXd& Phis);
inline double pairing(const PairingOperator& op, const DiscreteState& st) {
  return pairing(op, st.V, st.Phi1, st.Phi2, st.Phis);
}
// Largest singular value of (M1|M2|Ms) by power iteration.
double operator_norm(const PairingOperator& op, int iterations = 200, double tol = 1e-8);

// Column evaluation of the FE functions at an x-node.
double column_value(const DofLayout& layout, const Eigen::VectorXd& coeffs, int node, double s);
double column_interp(const DofLayout& layout, const Eigen::VectorXd& phis, int node, double s);

// Evaluates the old grid's functions at the new grid's nodes. Requires that
// new_grid was obtained from old_grid by refinement.
DiscreteState prolongate(const DiscreteState& state, const PrismGrid& old_grid,
                         const PrismGrid& new_grid);

// Debug dumps: "block,row,col,value" triplets and "field,index,value" rows.
void write_operator_csv(const PairingOperator& op, std::ostream& os);
void write_state_csv(const DiscreteState& state, std::ostream& os);

}  // namespace liftnet
