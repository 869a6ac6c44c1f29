#pragma once

#include <string>
#include <utility>
#include <vector>

namespace liftnet {

enum class CostKind { BranchedTransport, UrbanPlanning, Steiner, Custom };

// Concave nondecreasing transportation cost tau with tau(0) = 0.
// Parameters are checked on construction; concavity of custom tables is not
// (use validate() for that).
class TransportCost {
 public:
  static TransportCost branched_transport(double alpha);
  static TransportCost urban_planning(double a, double b);
  static TransportCost steiner();
  // Piecewise linear through (m_i, tau_i), constant after the last breakpoint.
  // The first breakpoint must be (0, 0) and masses strictly increasing.
  static TransportCost custom(std::vector<std::pair<double, double>> table);

  CostKind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  double a() const { return a_; }
  double b() const { return b_; }
  const std::vector<std::pair<double, double>>& table() const { return table_; }

  double operator()(double m) const;
  // Right derivative at 0, +inf for branched transport and Steiner.
  double prime_zero() const;
  bool discontinuous_at_zero() const { return kind_ == CostKind::Steiner; }
  std::string describe() const;

 private:
  TransportCost() = default;
  CostKind kind_ = CostKind::BranchedTransport;
  double alpha_ = 0.5;
  double a_ = 0.0;
  double b_ = 0.0;
  std::vector<std::pair<double, double>> table_;
};

inline double eval_tau(const TransportCost& cost, double m) { return cost(m); }
inline double tau_prime_zero(const TransportCost& cost) { return cost.prime_zero(); }

struct CostValidationReport {
  std::vector<std::string> violations;
  bool passed() const { return violations.empty(); }
};

// Samples tau on a log-spaced grid and checks tau(0)=0, monotonicity and
// concavity of difference quotients.
CostValidationReport validate(const TransportCost& cost, int samples);

}  // namespace liftnet
