#include "liftnet/certificates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <vector>

#include <json.hpp>

#include "liftnet/error.hpp"

namespace liftnet {

namespace {

Vec2 perp(const Vec2& v) { return Vec2(-v.y(), v.x()); }

Vec2 rotate(const Vec2& v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return Vec2(c * v.x() - s * v.y(), s * v.x() + c * v.y());
}

// Angle at the apex between the sides a and b of a triangle with third side c.
double law_of_cosines(double a, double b, double c) {
  return std::acos(std::clamp((a * a + b * b - c * c) / (2.0 * a * b), -1.0, 1.0));
}

}  // namespace

Vec2 CalibrationField::integral(double s1, double s2) const {
  const double lo = std::clamp(std::min(s1, s2), 0.0, m2);
  const double hi = std::clamp(std::max(s1, s2), 0.0, m2);
  const double lo2 = std::clamp(std::min(s1, s2), m2, top());
  const double hi2 = std::clamp(std::max(s1, s2), m2, top());
  return (hi - lo) * lower + (hi2 - lo2) * upper;
}

TripleJunctionCertificate triple_junction_certificate(double m1, double m2, const TransportCost& cost,
                                                      int samples, double slack_tol) {
  if (!(m1 > 0.0) || !(m2 > 0.0)) throw Error(ErrorCode::InvalidArgument, "masses must be positive");
  const double t0 = cost(m1 + m2), t1 = cost(m1), t2 = cost(m2);
  const double eps = 1e-12 * std::max({t0, t1, t2});
  if (t0 < std::abs(t1 - t2) - eps || t0 > t1 + t2 + eps)
    throw Error(ErrorCode::NoJunctionGeometry, "no junction geometry: tau(m1+m2)=" + std::to_string(t0) +
                                                   " outside [|tau(m1)-tau(m2)|, tau(m1)+tau(m2)]");

  TripleJunctionCertificate out;
  CalibrationField& f = out.field;
  f.m1 = m1;
  f.m2 = m2;
  f.e0 = Vec2(0.0, 1.0);
  // tau1 e1 + tau2 e2 = tau0 e0 closes a triangle with sides tau0, tau1, tau2.
  const double th1 = law_of_cosines(t0, t1, t2), th2 = law_of_cosines(t0, t2, t1);
  f.e1 = rotate(f.e0, -th1);
  f.e2 = rotate(f.e0, th2);
  f.lower = -(t2 / m2) * perp(f.e2);
  f.upper = -(t1 / m1) * perp(f.e1);

  CertificateReport& r = out.report;
  r.cost = cost.describe();
  r.collinear = th1 + th2 < 1e-9;
  r.expected = t0 + t1 + t2;
  // Surface integral of phi against D1_u of the network image: each sink
  // branch contributes tau_i (1 + e0^perp . e_i^perp).
  r.pairing = t1 * (1.0 + perp(f.e0).dot(perp(f.e1))) + t2 * (1.0 + perp(f.e0).dot(perp(f.e2)));

  const double M = f.top();
  std::vector<double> levels = {0.0, m2, M};
  for (int i = 0; i <= samples; ++i) levels.push_back(M * i / std::max(samples, 1));
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  r.min_slack = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < levels.size(); ++i)
    for (std::size_t j = i + 1; j < levels.size(); ++j) {
      const double s1 = levels[i], s2 = levels[j];
      const double slack = cost(s2 - s1) - f.integral(s1, s2).norm();
      ++r.checked_pairs;
      if (slack < r.min_slack) {
        r.min_slack = slack;
        r.worst_s1 = s1;
        r.worst_s2 = s2;
      }
    }
  r.passed = r.min_slack >= -slack_tol && std::abs(r.pairing - r.expected) <= 1e-12 * std::max(1.0, r.expected);
  return out;
}

void write_certificate_json(const TripleJunctionCertificate& cert, std::ostream& os) {
  const CalibrationField& f = cert.field;
  const CertificateReport& r = cert.report;
  auto vec = [](const Vec2& v) { return nlohmann::json::array({v.x(), v.y()}); };
  nlohmann::json j = {
      {"cost", r.cost},
      {"m1", f.m1},
      {"m2", f.m2},
      {"e0", vec(f.e0)},
      {"e1", vec(f.e1)},
      {"e2", vec(f.e2)},
      {"phi_lower", vec(f.lower)},
      {"phi_upper", vec(f.upper)},
      {"passed", r.passed},
      {"collinear", r.collinear},
      {"divergence_free", r.divergence_free},
      {"min_slack", r.min_slack},
      {"worst_pair", {r.worst_s1, r.worst_s2}},
      {"checked_pairs", r.checked_pairs},
      {"pairing", r.pairing},
      {"expected", r.expected},
  };
  os << j.dump(2) << "\n";
}

DiscreteState sample_calibration(const CalibrationField& field, const DofLayout& layout) {
  DiscreteState st = zero_state(layout);
  for (const Column& c : layout.columns())
    for (int k = 0; k < c.intervals(); ++k) {
      const Vec2 avg = field.integral(c.s[k], c.s[k + 1]) / c.height(k);
      st.Phi1[c.v_offset + k] = avg.x();
      st.Phi2[c.v_offset + k] = avg.y();
    }
  return st;
}

BoundaryData triple_junction_square(double m1, double m2) {
  const Domain d = Domain::unit_square();
  return BoundaryData(d, {{d.arclength_of_point(Vec2(0.5, 0.0)), m1 + m2, AtomSign::Source},
                          {d.arclength_of_point(Vec2(1.0, 1.0)), m1, AtomSign::Sink},
                          {d.arclength_of_point(Vec2(0.0, 1.0)), m2, AtomSign::Sink}});
}

DiffuseFluxReport diffuse_flux_condition(const TransportCost& cost, double beta, int samples) {
  if (!(beta >= 1.0)) throw Error(ErrorCode::InvalidArgument, "beta must be at least 1");
  if (samples < 1) throw Error(ErrorCode::InvalidArgument, "need at least one sample");
  DiffuseFluxReport r;
  r.samples = samples;
  const double d0 = cost.prime_zero();
  if (!std::isfinite(d0)) {
    r.passed = false;
    r.worst_margin = -std::numeric_limits<double>::infinity();
    r.explanation = "tau'(0) = inf: tau(m)/tau'(0) vanishes for every m, so the condition cannot hold (" +
                    cost.describe() + ")";
    return r;
  }
  r.worst_margin = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= samples; ++i) {
    const double m = beta * i / (samples + 1.0);
    const double w = std::sqrt(beta * beta - m * m);
    const double bound = std::max(std::min(m / beta, 0.5), w * std::asinh(m / w));
    const double margin = cost(m) / d0 - bound;
    if (margin < r.worst_margin) {
      r.worst_margin = margin;
      r.worst_m = m;
    }
  }
  r.passed = r.worst_margin >= -1e-12;
  if (!r.passed) r.explanation = "condition violated at m = " + std::to_string(r.worst_m);
  return r;
}

}  // namespace liftnet
