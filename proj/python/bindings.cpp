#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <json.hpp>

#include "liftnet/certificates.hpp"
#include "liftnet/config.hpp"
#include "liftnet/error.hpp"
#include "liftnet/graph_oracle.hpp"
#include "liftnet/network.hpp"
#include "liftnet/solver.hpp"

namespace py = pybind11;
using namespace liftnet;
using nlohmann::json;

namespace {

const char* code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::Domain: return "Domain";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UnbalancedMeasures: return "UnbalancedMeasures";
    case ErrorCode::NotOnBoundary: return "NotOnBoundary";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotSemiRegular: return "NotSemiRegular";
    case ErrorCode::UnrelatedGrids: return "UnrelatedGrids";
    case ErrorCode::NoJunctionGeometry: return "NoJunctionGeometry";
    case ErrorCode::DivergenceViolation: return "DivergenceViolation";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::Config: return "Config";
  }
  return "Unknown";
}

std::vector<Terminal> terminals_in_topology_order(const BoundaryData& data) {
  std::vector<Terminal> t = terminals_of(data);
  std::stable_sort(t.begin(), t.end(), [](const Terminal& a, const Terminal& b) {
    if ((a.mass > 0) != (b.mass > 0)) return a.mass > 0;
    if (a.position.x() != b.position.x()) return a.position.x() < b.position.x();
    return a.position.y() < b.position.y();
  });
  return t;
}

// Runs the adaptive solver for a JSON config and returns a JSON report.
std::string solve_json(const std::string& text) {
  const Config c = parse_config(json::parse(text));
  const BoundaryData data = c.boundary();
  const TransportCost cost = c.cost();
  const AdaptiveResult r = adaptive_solve({data, cost, c.x_level, c.s_level}, c.solver);
  const DofLayout layout(r.grid);
  const NetworkExtract net = extract_network(r.grid, layout, r.state.V, data);
  json hist = json::array();
  for (const LevelRecord& h : r.history)
    hist.push_back({{"level", h.level}, {"iterations", h.iterations}, {"elements", h.elements},
                    {"energy_primal", h.energy_primal}, {"energy_dual", h.energy_dual}, {"gap", h.gap}});
  json segs = json::array();
  for (const NetworkSegment& s : net.segments) segs.push_back({s.a.x(), s.a.y(), s.b.x(), s.b.y(), s.mass});
  json out = {{"history", hist},
              {"converged", r.converged},
              {"budget_exceeded", r.budget_exceeded},
              {"network_energy", net.energy(cost)},
              {"segments", segs},
              {"image", net.u}};
  return out.dump();
}

std::string oracle_json(const std::string& text) {
  const Config c = parse_config(json::parse(text));
  const BoundaryData data = c.boundary();
  const std::vector<Terminal> t = terminals_in_topology_order(data);
  std::string which = c.oracle_topologies;
  if (which == "auto") which = t.size() == 3 ? "triple_junction" : "four_to_four";
  OptimizeOptions opt;
  opt.seed = c.seed;
  opt.restarts = c.oracle_restarts;
  const OracleResult r = oracle_best_network(
      t, which == "triple_junction" ? triple_junction_topologies() : four_to_four_topologies(), c.cost(), opt);
  json cands = json::object();
  for (const TopologyResult& tr : r.candidates) cands[tr.name] = tr.energy;
  return json{{"best", r.candidates[r.best].name}, {"energy", r.energy}, {"bifurcation", r.bifurcation()},
              {"candidates", cands}}
      .dump();
}

}  // namespace

PYBIND11_MODULE(_liftnet, m) {
  m.doc() = "Lifted convex solver for 2D branched transport networks";

  // args = (code name, message)
  static PyObject* error = PyErr_NewException("liftnet._liftnet.LiftnetError", PyExc_ValueError, nullptr);
  m.attr("LiftnetError") = py::handle(error);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetObject(error, py::make_tuple(std::string(code_name(e.code())), e.what()).ptr());
    }
  });

  py::class_<TransportCost>(m, "TransportCost")
      .def_static("branched_transport", &TransportCost::branched_transport, py::arg("alpha"))
      .def_static("urban_planning", &TransportCost::urban_planning, py::arg("a"), py::arg("b"))
      .def_static("steiner", &TransportCost::steiner)
      .def_static("custom", &TransportCost::custom, py::arg("table"))
      .def("__call__", &TransportCost::operator(), py::arg("m"))
      .def("prime_zero", &TransportCost::prime_zero)
      .def("describe", &TransportCost::describe)
      .def("__repr__", [](const TransportCost& c) { return "TransportCost(" + c.describe() + ")"; });

  m.def(
      "cumulative_image",
      [](const std::vector<std::tuple<double, double, std::string>>& atoms, std::vector<double> t) {
        std::vector<BoundaryAtom> a;
        for (const auto& [arc, mass, sign] : atoms)
          a.push_back({arc, mass, sign == "sink" ? AtomSign::Sink : AtomSign::Source});
        const BoundaryData b(Domain::unit_square(), a);
        for (double& x : t) x = b.cumulative(x);
        return t;
      },
      py::arg("atoms"), py::arg("t"),
      "Boundary image on the unit square at arclengths t; atoms are (arclength, mass, 'source'|'sink').");

  m.def(
      "uniform_element_count",
      [](int x_level, int s_level) { return PrismGrid::uniform(Domain::unit_square(), 1.0, x_level, s_level).element_count(); },
      py::arg("x_level"), py::arg("s_level"));

  m.def(
      "triple_junction_certificate",
      [](double m1, double m2, const TransportCost& cost) {
        const CertificateReport r = triple_junction_certificate(m1, m2, cost).report;
        py::dict d;
        d["passed"] = r.passed;
        d["min_slack"] = r.min_slack;
        d["pairing"] = r.pairing;
        d["expected"] = r.expected;
        d["checked_pairs"] = r.checked_pairs;
        return d;
      },
      py::arg("m1"), py::arg("m2"), py::arg("cost"));

  m.def(
      "diffuse_flux_condition",
      [](const TransportCost& cost, double beta, int samples) {
        const DiffuseFluxReport r = diffuse_flux_condition(cost, beta, samples);
        py::dict d;
        d["passed"] = r.passed;
        d["worst_margin"] = r.worst_margin;
        d["worst_m"] = r.worst_m;
        d["explanation"] = r.explanation;
        return d;
      },
      py::arg("cost"), py::arg("beta"), py::arg("samples") = 100);

  m.def("_solve_json", &solve_json);
  m.def("_oracle_json", &oracle_json);
}
