#include "liftnet/boundary.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "liftnet/error.hpp"

namespace liftnet {

Domain Domain::rectangle(double width, double height) {
  if (!(width > 0.0) || !(height > 0.0))
    throw Error(ErrorCode::InvalidArgument, "rectangle needs positive width and height");
  Domain d;
  d.width = width;
  d.height = height;
  return d;
}

Vec2 Domain::point_of_arclength(double t) const {
  const double W = width, H = height;
  if (!(t >= 0.0) || !(t < perimeter()))
    throw Error(ErrorCode::Domain, "arclength outside [0, perimeter)");
  if (t < W) return {t, 0.0};
  if (t < W + H) return {W, t - W};
  if (t < 2 * W + H) return {W - (t - W - H), H};
  return {0.0, H - (t - 2 * W - H)};
}

double Domain::arclength_on_side(Side side, double c) const {
  const double W = width, H = height;
  switch (side) {
    case Side::Bottom:
      return c;
    case Side::Right:
      return W + c;
    case Side::Top:
      return W + H + (W - c);
    case Side::Left:
      return c <= 0.0 ? 0.0 : 2 * W + H + (H - c);
  }
  return 0.0;
}

double Domain::arclength_of_point(const Vec2& p, double tol) const {
  const double W = width, H = height;
  const double x = p.x(), y = p.y();
  if (x < -tol || x > W + tol || y < -tol || y > H + tol)
    throw Error(ErrorCode::NotOnBoundary, "point outside the domain");
  // Corners belong to the edge that starts there.
  if (std::abs(y) <= tol && x < W - tol) return std::max(0.0, x);
  if (std::abs(x - W) <= tol && y < H - tol) return W + std::max(0.0, y);
  if (std::abs(y - H) <= tol && x > tol) return W + H + std::max(0.0, W - x);
  if (std::abs(x) <= tol) {
    if (y <= tol) return 0.0;
    return 2 * W + H + std::max(0.0, H - y);
  }
  throw Error(ErrorCode::NotOnBoundary, "point is not on the boundary");
}

bool Domain::on_boundary(const Vec2& p, double tol) const {
  if (!contains(p, tol)) return false;
  return std::abs(p.x()) <= tol || std::abs(p.y()) <= tol || std::abs(p.x() - width) <= tol ||
         std::abs(p.y() - height) <= tol;
}

bool Domain::contains(const Vec2& p, double tol) const {
  return p.x() >= -tol && p.y() >= -tol && p.x() <= width + tol && p.y() <= height + tol;
}

Vec2 Domain::snap(const Vec2& p, double tol) const {
  Vec2 q = p;
  if (std::abs(q.x()) <= tol) q.x() = 0.0;
  if (std::abs(q.y()) <= tol) q.y() = 0.0;
  if (std::abs(q.x() - width) <= tol) q.x() = width;
  if (std::abs(q.y() - height) <= tol) q.y() = height;
  return q;
}

Vec2 Domain::nearest_boundary_point(const Vec2& p) const {
  double d[4] = {p.y(), width - p.x(), height - p.y(), p.x()};
  int best = 0;
  for (int k = 1; k < 4; ++k)
    if (d[k] < d[best]) best = k;
  double x = std::clamp(p.x(), 0.0, width), y = std::clamp(p.y(), 0.0, height);
  switch (best) {
    case 0:
      return {x, 0.0};
    case 1:
      return {width, y};
    case 2:
      return {x, height};
    default:
      return {0.0, y};
  }
}

BoundaryData::BoundaryData(Domain domain, std::vector<BoundaryAtom> atoms) : domain_(domain) {
  const double P = domain_.perimeter();
  double net = 0.0;
  for (const auto& a : atoms) {
    if (!(a.mass > 0.0)) throw Error(ErrorCode::InvalidArgument, "atom masses must be positive");
    if (!(a.arclength >= 0.0) || !(a.arclength < P))
      throw Error(ErrorCode::InvalidArgument, "atom arclength outside [0, perimeter)");
    net += a.sign == AtomSign::Source ? a.mass : -a.mass;
  }
  if (std::abs(net) > 1e-10) {
    std::ostringstream os;
    os << "unbalanced measures (net mass " << net << ")";
    throw Error(ErrorCode::UnbalancedMeasures, os.str());
  }

  std::sort(atoms.begin(), atoms.end(),
            [](const BoundaryAtom& l, const BoundaryAtom& r) { return l.arclength < r.arclength; });
  // Merge coincident atoms by signed sum.
  std::vector<std::pair<double, double>> signed_atoms;
  for (const auto& a : atoms) {
    double m = a.sign == AtomSign::Source ? a.mass : -a.mass;
    if (!signed_atoms.empty() && signed_atoms.back().first == a.arclength)
      signed_atoms.back().second += m;
    else
      signed_atoms.emplace_back(a.arclength, m);
  }
  double running = 0.0, lo = 0.0;
  std::vector<double> raw;
  for (const auto& [t, m] : signed_atoms) {
    if (m == 0.0) continue;
    running += m;
    jumps_.push_back(t);
    raw.push_back(running);
    lo = std::min(lo, running);
    atoms_.push_back({t, std::abs(m), m > 0 ? AtomSign::Source : AtomSign::Sink});
    if (m > 0) source_mass_ += m;
  }
  // The last running value is the imbalance (< 1e-10); closing up at zero.
  if (!raw.empty()) raw.back() = 0.0;
  before_first_ = -lo;
  M_ = 0.0;
  for (double r : raw) {
    values_.push_back(r - lo);
    M_ = std::max(M_, r - lo);
  }
  M_ = std::max(M_, before_first_);
}

double BoundaryData::cumulative(double t) const {
  auto it = std::upper_bound(jumps_.begin(), jumps_.end(), t);
  if (it == jumps_.begin()) return before_first_;
  return values_[static_cast<std::size_t>(it - jumps_.begin()) - 1];
}

double BoundaryData::cumulative_at(const Vec2& p) const {
  return cumulative(domain_.arclength_of_point(p));
}

int BoundaryData::trace(const Vec2& p, double s) const {
  return cumulative_at(domain_.snap(p)) > s ? 1 : 0;
}

double BoundaryData::start_image(const Vec2& p) const {
  return cumulative_at(domain_.nearest_boundary_point(p));
}

BoundaryData build_boundary_data(const Domain& domain, std::vector<BoundaryAtom> atoms) {
  return BoundaryData(domain, std::move(atoms));
}

int boundary_trace(const BoundaryData& data, const Vec2& x, double s) { return data.trace(x, s); }

}  // namespace liftnet
