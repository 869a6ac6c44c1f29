#pragma once

#include <Eigen/Core>
#include <iosfwd>
#include <string>

#include "liftnet/boundary.hpp"
#include "liftnet/cost.hpp"
#include "liftnet/fem_pairing.hpp"

namespace liftnet {

// Calibration of a triple junction in the unit disk: source of mass m1 + m2
// at -e0, sinks m1 at e1 and m2 at e2, with e0 = (0, 1) and e1 to its right.
// The field has no s-component and is constant in x; its x-part is `lower`
// for s < m2 and `upper` above.
struct CalibrationField {
  double m1 = 0.0, m2 = 0.0;
  Vec2 e0 = Vec2::Zero(), e1 = Vec2::Zero(), e2 = Vec2::Zero();
  Vec2 lower = Vec2::Zero(), upper = Vec2::Zero();
  double top() const { return m1 + m2; }
  Vec2 at(double s) const { return s < m2 ? lower : upper; }
  // Integral of the x-part over [s1, s2].
  Vec2 integral(double s1, double s2) const;
};

struct CertificateReport {
  bool passed = false;
  bool collinear = false;      // e1 = e2 = e0, e.g. for additive costs
  bool divergence_free = true;  // piecewise constant in s, constant in x
  double min_slack = 0.0;      // min of tau(s2 - s1) - |integral| over checked pairs
  double worst_s1 = 0.0, worst_s2 = 0.0;
  int checked_pairs = 0;
  double pairing = 0.0;   // closed-form surface integral against the network image
  double expected = 0.0;  // tau(m1) + tau(m2) + tau(m1 + m2)
  std::string cost;
};

struct TripleJunctionCertificate {
  CalibrationField field;
  CertificateReport report;
};

// Constraint pairs are the breakpoints {0, m2, M} plus a uniform sample of
// `samples` + 1 levels. Throws NoJunctionGeometry when tau(m1 + m2) <
// |tau(m1) - tau(m2)|.
TripleJunctionCertificate triple_junction_certificate(double m1, double m2, const TransportCost& cost,
                                                      int samples = 200, double slack_tol = 1e-12);

void write_certificate_json(const TripleJunctionCertificate& cert, std::ostream& os);

// Interval averages of the field on a grid (Phis = 0, V = 0).
DiscreteState sample_calibration(const CalibrationField& field, const DofLayout& layout);

// Unit-square setup with the same masses: source at (0.5, 0), sink m1 at
// (1, 1), sink m2 at (0, 1).
BoundaryData triple_junction_square(double m1, double m2);

struct DiffuseFluxReport {
  bool passed = false;
  double worst_margin = 0.0;  // min over samples of tau(m)/tau'(0) - bound(m)
  double worst_m = 0.0;
  int samples = 0;
  std::string explanation;
};

// Sufficient condition for the diffuse flux between two parallel segments at
// distance beta to be calibrated:
//   tau(m)/tau'(0) >= max{min{m/beta, 1/2}, sqrt(beta^2 - m^2) arsinh(m / sqrt(beta^2 - m^2))}
// on m in (0, beta).
DiffuseFluxReport diffuse_flux_condition(const TransportCost& cost, double beta, int samples = 100);

}  // namespace liftnet
