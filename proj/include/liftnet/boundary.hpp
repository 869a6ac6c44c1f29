#pragma once

#include <Eigen/Core>
#include <vector>

namespace liftnet {

using Vec2 = Eigen::Vector2d;

enum class DomainKind { Rectangle };

enum class Side { Bottom = 0, Right = 1, Top = 2, Left = 3 };

// Rectangle [0,width] x [0,height]. Arclength runs counterclockwise from the
// origin: bottom, right, top (right to left), left (top to bottom).
struct Domain {
  DomainKind kind = DomainKind::Rectangle;
  double width = 1.0;
  double height = 1.0;

  static Domain rectangle(double width, double height);
  static Domain unit_square() { return rectangle(1.0, 1.0); }

  double perimeter() const { return 2.0 * (width + height); }
  Vec2 point_of_arclength(double t) const;
  double arclength_of_point(const Vec2& p, double tol = 1e-12) const;
  double arclength_on_side(Side side, double coordinate) const;
  bool on_boundary(const Vec2& p, double tol = 1e-12) const;
  // Moves a point within tol of the boundary exactly onto it.
  Vec2 snap(const Vec2& p, double tol = 1e-12) const;
  Vec2 nearest_boundary_point(const Vec2& p) const;
  bool contains(const Vec2& p, double tol = 1e-12) const;
};

enum class AtomSign { Source, Sink };

struct BoundaryAtom {
  double arclength = 0.0;
  double mass = 0.0;
  AtomSign sign = AtomSign::Source;
};

class BoundaryData {
 public:
  BoundaryData(Domain domain, std::vector<BoundaryAtom> atoms);

  const Domain& domain() const { return domain_; }
  // Merged atoms sorted by arclength; sinks carry their positive mass.
  const std::vector<BoundaryAtom>& atoms() const { return atoms_; }
  double top() const { return M_; }
  double total_source_mass() const { return source_mass_; }

  // Shifted running sum of (mu+ - mu-) over gamma([0,t]), right-continuous.
  double cumulative(double t) const;
  double cumulative_at(const Vec2& boundary_point) const;
  // Jump positions and the value taken on [jump_k, jump_{k+1}).
  const std::vector<double>& jump_positions() const { return jumps_; }
  const std::vector<double>& jump_values() const { return values_; }

  int trace(const Vec2& boundary_point, double s) const;
  // Cumulative value of the nearest boundary point; used to build the
  // starting image inside the domain.
  double start_image(const Vec2& p) const;

 private:
  Domain domain_;
  std::vector<BoundaryAtom> atoms_;
  std::vector<double> jumps_;
  std::vector<double> values_;
  double before_first_ = 0.0;
  double M_ = 0.0;
  double source_mass_ = 0.0;
};

BoundaryData build_boundary_data(const Domain& domain, std::vector<BoundaryAtom> atoms);
int boundary_trace(const BoundaryData& data, const Vec2& x, double s);

}  // namespace liftnet
