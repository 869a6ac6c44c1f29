#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "liftnet/boundary.hpp"
#include "liftnet/cost.hpp"
#include "liftnet/solver.hpp"

namespace liftnet {

// One run description. JSON layout:
//   {"experiment": "solve" | "oracle" | "certify-triple-junction" | "check-diffuse" | "sweep",
//    "domain": {"width", "height"},
//    "measures": {"sources": [atom...], "sinks": [atom...]},
//      atom = {"arclength", "mass"} or {"edge": "bottom"|"right"|"top"|"left", "coordinate", "mass"}
//    "cost": {"kind": "bt"|"up"|"steiner"|"custom", "alpha", "a", "b", "table": [[m, tau]...]},
//    "grid": {"levels": [x_level, s_level]},
//    "solver": {...SolverParams fields..., "step_rule": "frobenius"|"operator_norm"},
//    "refinement": {"lambda", "indicator": "max"|"gradient"|"pd_gap", "mode": "both"|"x"|"s"},
//    "sweep": {"parameter": "alpha"|"b", "values": [...]},
//    "oracle": {"topologies": "auto"|"triple_junction"|"four_to_four", "restarts"},
//    "certificate": {"m1", "m2"}, "diffuse": {"beta", "samples"},
//    "seed", "output_dir"}
// Every key is optional; unknown keys are rejected.
struct Config {
  std::string experiment = "solve";
  Domain domain = Domain::unit_square();
  std::vector<BoundaryAtom> atoms;
  nlohmann::json cost_spec = {{"kind", "bt"}, {"alpha", 0.5}};
  int x_level = 4;
  int s_level = 2;
  SolverParams solver;
  std::string sweep_parameter = "alpha";
  std::vector<double> sweep_values;
  std::string oracle_topologies = "auto";
  int oracle_restarts = 8;
  double cert_m1 = 1.0, cert_m2 = 1.0;
  double diffuse_beta = 2.0;
  int diffuse_samples = 100;
  std::uint64_t seed = 1;
  std::string output_dir = "liftnet_out";

  TransportCost cost() const;
  BoundaryData boundary() const;
  // Fully expanded form, defaults included.
  nlohmann::json to_json() const;
};

// Throws Error(Config) naming the offending key. Boundary balance is checked
// by boundary(), which throws UnbalancedMeasures.
Config parse_config(const nlohmann::json& j);
Config load_config(const std::string& path);

TransportCost parse_cost(const nlohmann::json& j, const std::string& key = "cost");

}  // namespace liftnet
