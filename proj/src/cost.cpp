#include "liftnet/cost.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "liftnet/error.hpp"

namespace liftnet {

TransportCost TransportCost::branched_transport(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw Error(ErrorCode::InvalidArgument, "branched transport needs alpha in (0,1)");
  TransportCost c;
  c.kind_ = CostKind::BranchedTransport;
  c.alpha_ = alpha;
  return c;
}

TransportCost TransportCost::urban_planning(double a, double b) {
  if (!(a > 1.0) || !(b > 0.0))
    throw Error(ErrorCode::InvalidArgument, "urban planning needs a > 1 and b > 0");
  TransportCost c;
  c.kind_ = CostKind::UrbanPlanning;
  c.a_ = a;
  c.b_ = b;
  return c;
}

TransportCost TransportCost::steiner() {
  TransportCost c;
  c.kind_ = CostKind::Steiner;
  return c;
}

TransportCost TransportCost::custom(std::vector<std::pair<double, double>> table) {
  if (table.size() < 2)
    throw Error(ErrorCode::InvalidArgument, "custom cost needs at least two breakpoints");
  if (table.front().first != 0.0 || table.front().second != 0.0)
    throw Error(ErrorCode::InvalidArgument, "custom cost must start at (0,0)");
  for (std::size_t i = 1; i < table.size(); ++i) {
    if (!(table[i].first > table[i - 1].first))
      throw Error(ErrorCode::InvalidArgument, "custom cost masses must be strictly increasing");
    if (!std::isfinite(table[i].second))
      throw Error(ErrorCode::InvalidArgument, "custom cost values must be finite");
  }
  TransportCost c;
  c.kind_ = CostKind::Custom;
  c.table_ = std::move(table);
  return c;
}

double TransportCost::operator()(double m) const {
  if (!(m >= 0.0)) throw Error(ErrorCode::Domain, "transport cost evaluated at negative mass");
  switch (kind_) {
    case CostKind::BranchedTransport:
      return std::pow(m, alpha_);
    case CostKind::UrbanPlanning:
      return std::min(a_ * m, m + b_);
    case CostKind::Steiner:
      return m > 0.0 ? 1.0 : 0.0;
    case CostKind::Custom: {
      if (m >= table_.back().first) return table_.back().second;
      auto it = std::upper_bound(table_.begin(), table_.end(), m,
                                 [](double x, const auto& p) { return x < p.first; });
      const auto& hi = *it;
      const auto& lo = *(it - 1);
      double t = (m - lo.first) / (hi.first - lo.first);
      return lo.second + t * (hi.second - lo.second);
    }
  }
  return 0.0;
}

double TransportCost::prime_zero() const {
  switch (kind_) {
    case CostKind::BranchedTransport:
    case CostKind::Steiner:
      return std::numeric_limits<double>::infinity();
    case CostKind::UrbanPlanning:
      return a_;
    case CostKind::Custom:
      return (table_[1].second - table_[0].second) / (table_[1].first - table_[0].first);
  }
  return 0.0;
}

std::string TransportCost::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case CostKind::BranchedTransport:
      os << "bt(alpha=" << alpha_ << ")";
      break;
    case CostKind::UrbanPlanning:
      os << "up(a=" << a_ << ",b=" << b_ << ")";
      break;
    case CostKind::Steiner:
      os << "steiner";
      break;
    case CostKind::Custom:
      os << "custom(" << table_.size() << " breakpoints)";
      break;
  }
  return os.str();
}

CostValidationReport validate(const TransportCost& cost, int samples) {
  CostValidationReport report;
  if (samples < 3) {
    report.violations.push_back("need at least 3 samples");
    return report;
  }
  double top = 10.0;
  if (cost.kind() == CostKind::Custom) top = std::max(top, 2.0 * cost.table().back().first);
  if (cost.kind() == CostKind::UrbanPlanning) top = std::max(top, 4.0 * cost.b() / (cost.a() - 1.0));
  double bottom = top * 1e-6;

  std::vector<double> m{0.0};
  for (int i = 0; i < samples - 1; ++i)
    m.push_back(bottom * std::pow(top / bottom, double(i) / (samples - 2)));
  if (cost.kind() == CostKind::Custom)
    for (const auto& bp : cost.table()) m.push_back(bp.first);
  std::sort(m.begin(), m.end());
  m.erase(std::unique(m.begin(), m.end()), m.end());

  std::vector<double> t(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) t[i] = cost(m[i]);

  auto fmt = [](double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
  };
  if (t[0] != 0.0) report.violations.push_back("tau(0) = " + fmt(t[0]) + " is not zero");
  for (std::size_t i = 1; i < m.size(); ++i)
    if (t[i] < t[i - 1] - 1e-12 * std::max(1.0, std::abs(t[i - 1])))
      report.violations.push_back("not nondecreasing between m=" + fmt(m[i - 1]) + " and m=" + fmt(m[i]));
  for (std::size_t i = 2; i < m.size(); ++i) {
    double q1 = (t[i - 1] - t[i - 2]) / (m[i - 1] - m[i - 2]);
    double q2 = (t[i] - t[i - 1]) / (m[i] - m[i - 1]);
    if (q2 > q1 + 1e-9 * std::max(1.0, std::abs(q1)))
      report.violations.push_back("not concave around m=" + fmt(m[i - 1]) + " (slope " + fmt(q1) +
                                  " -> " + fmt(q2) + ")");
  }
  return report;
}

}  // namespace liftnet
