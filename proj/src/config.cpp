#include "liftnet/config.hpp"

#include <fstream>
#include <set>

#include "liftnet/error.hpp"

namespace liftnet {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& key, const std::string& what) {
  throw Error(ErrorCode::Config, "config key '" + key + "': " + what);
}

void only_keys(const json& j, const std::string& where, std::set<std::string> allowed) {
  if (!j.is_object()) fail(where, "expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) fail(where.empty() ? it.key() : where + "." + it.key(), "unknown key");
}

std::string join(const std::string& a, const std::string& b) { return a.empty() ? b : a + "." + b; }

double get_number(const json& j, const std::string& where, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) fail(join(where, key), "expected a number");
  return j[key].get<double>();
}

int get_int(const json& j, const std::string& where, const std::string& key, int fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) fail(join(where, key), "expected an integer");
  return j[key].get<int>();
}

std::string get_string(const json& j, const std::string& where, const std::string& key, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_string()) fail(join(where, key), "expected a string");
  return j[key].get<std::string>();
}

Side side_of(const std::string& name, const std::string& key) {
  if (name == "bottom") return Side::Bottom;
  if (name == "right") return Side::Right;
  if (name == "top") return Side::Top;
  if (name == "left") return Side::Left;
  fail(key, "edge must be bottom, right, top or left");
}

std::vector<BoundaryAtom> parse_atoms(const json& j, const std::string& key, AtomSign sign, const Domain& d) {
  std::vector<BoundaryAtom> out;
  if (!j.is_array()) fail(key, "expected an array");
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string k = key + "[" + std::to_string(i) + "]";
    only_keys(j[i], k, {"arclength", "edge", "coordinate", "mass"});
    if (!j[i].contains("mass")) fail(k + ".mass", "missing");
    const double mass = get_number(j[i], k, "mass", 0.0);
    if (!(mass > 0.0)) fail(k + ".mass", "must be positive");
    double t;
    if (j[i].contains("arclength")) {
      t = get_number(j[i], k, "arclength", 0.0);
    } else if (j[i].contains("edge")) {
      if (!j[i].contains("coordinate")) fail(k + ".coordinate", "missing");
      t = d.arclength_on_side(side_of(get_string(j[i], k, "edge", ""), k + ".edge"),
                              get_number(j[i], k, "coordinate", 0.0));
    } else {
      fail(k, "needs arclength or edge + coordinate");
    }
    out.push_back({t, mass, sign});
  }
  return out;
}

const char* step_rule_name(StepRule r) { return r == StepRule::Frobenius ? "frobenius" : "operator_norm"; }
const char* indicator_name(IndicatorKind k) {
  switch (k) {
    case IndicatorKind::Gradient:
      return "gradient";
    case IndicatorKind::PDGap:
      return "pd_gap";
    default:
      return "max";
  }
}
const char* mode_name(RefineMode m) {
  switch (m) {
    case RefineMode::X:
      return "x";
    case RefineMode::S:
      return "s";
    default:
      return "both";
  }
}

}  // namespace

TransportCost parse_cost(const json& j, const std::string& key) {
  only_keys(j, key, {"kind", "alpha", "a", "b", "table"});
  const std::string kind = get_string(j, key, "kind", "bt");
  try {
    if (kind == "bt") return TransportCost::branched_transport(get_number(j, key, "alpha", 0.5));
    if (kind == "up") {
      if (!j.contains("a") || !j.contains("b")) fail(key, "urban planning needs a and b");
      return TransportCost::urban_planning(get_number(j, key, "a", 0.0), get_number(j, key, "b", 0.0));
    }
    if (kind == "steiner") return TransportCost::steiner();
    if (kind == "custom") {
      if (!j.contains("table") || !j["table"].is_array()) fail(key + ".table", "expected [[m, tau], ...]");
      std::vector<std::pair<double, double>> table;
      for (const json& row : j["table"]) {
        if (!row.is_array() || row.size() != 2 || !row[0].is_number() || !row[1].is_number())
          fail(key + ".table", "expected [[m, tau], ...]");
        table.emplace_back(row[0].get<double>(), row[1].get<double>());
      }
      return TransportCost::custom(std::move(table));
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::Config) throw;
    fail(key, e.what());
  }
  fail(key + ".kind", "must be bt, up, steiner or custom");
}

TransportCost Config::cost() const { return parse_cost(cost_spec); }

BoundaryData Config::boundary() const { return BoundaryData(domain, atoms); }

Config parse_config(const json& j) {
  only_keys(j, "", {"experiment", "domain", "measures", "cost", "grid", "solver", "refinement", "sweep", "oracle",
                    "certificate", "diffuse", "seed", "output_dir"});
  Config c;
  c.experiment = get_string(j, "", "experiment", c.experiment);
  static const std::set<std::string> experiments = {"solve", "oracle", "certify-triple-junction", "check-diffuse",
                                                    "sweep"};
  if (!experiments.count(c.experiment)) fail("experiment", "unknown experiment '" + c.experiment + "'");

  if (j.contains("domain")) {
    only_keys(j["domain"], "domain", {"width", "height"});
    const double w = get_number(j["domain"], "domain", "width", 1.0);
    const double h = get_number(j["domain"], "domain", "height", 1.0);
    if (!(w > 0.0)) fail("domain.width", "must be positive");
    if (!(h > 0.0)) fail("domain.height", "must be positive");
    c.domain = Domain::rectangle(w, h);
  }
  if (j.contains("measures")) {
    only_keys(j["measures"], "measures", {"sources", "sinks"});
    if (j["measures"].contains("sources")) {
      auto s = parse_atoms(j["measures"]["sources"], "measures.sources", AtomSign::Source, c.domain);
      c.atoms.insert(c.atoms.end(), s.begin(), s.end());
    }
    if (j["measures"].contains("sinks")) {
      auto s = parse_atoms(j["measures"]["sinks"], "measures.sinks", AtomSign::Sink, c.domain);
      c.atoms.insert(c.atoms.end(), s.begin(), s.end());
    }
  }
  if (j.contains("cost")) {
    c.cost_spec = j["cost"];
    parse_cost(c.cost_spec);
  }
  if (j.contains("grid")) {
    only_keys(j["grid"], "grid", {"levels"});
    if (j["grid"].contains("levels")) {
      const json& l = j["grid"]["levels"];
      if (!l.is_array() || l.size() != 2 || !l[0].is_number_integer() || !l[1].is_number_integer())
        fail("grid.levels", "expected [x_level, s_level]");
      c.x_level = l[0].get<int>();
      c.s_level = l[1].get<int>();
      if (c.x_level < 0 || c.s_level < 0) fail("grid.levels", "levels must be nonnegative");
    }
  }
  SolverParams& p = c.solver;
  if (j.contains("solver")) {
    const json& s = j["solver"];
    only_keys(s, "solver", {"theta", "step_rule", "step_scale", "inner_tol", "stall_window", "gap_tol",
                            "max_inner_iters", "check_every", "num_refinements", "dykstra_tol",
                            "dykstra_max_cycles", "element_budget"});
    p.theta = get_number(s, "solver", "theta", p.theta);
    const std::string rule = get_string(s, "solver", "step_rule", step_rule_name(p.step_rule));
    if (rule == "frobenius")
      p.step_rule = StepRule::Frobenius;
    else if (rule == "operator_norm")
      p.step_rule = StepRule::OperatorNorm;
    else
      fail("solver.step_rule", "must be frobenius or operator_norm");
    p.step_scale = get_number(s, "solver", "step_scale", p.step_scale);
    p.inner_tol = get_number(s, "solver", "inner_tol", p.inner_tol);
    p.stall_window = get_int(s, "solver", "stall_window", p.stall_window);
    p.gap_tol = get_number(s, "solver", "gap_tol", p.gap_tol);
    p.max_inner_iters = get_int(s, "solver", "max_inner_iters", p.max_inner_iters);
    p.check_every = get_int(s, "solver", "check_every", p.check_every);
    p.num_refinements = get_int(s, "solver", "num_refinements", p.num_refinements);
    p.dykstra_tol = get_number(s, "solver", "dykstra_tol", p.dykstra_tol);
    p.dykstra_max_cycles = get_int(s, "solver", "dykstra_max_cycles", p.dykstra_max_cycles);
    if (s.contains("element_budget")) {
      if (!s["element_budget"].is_number_integer()) fail("solver.element_budget", "expected an integer");
      p.element_budget = s["element_budget"].get<long long>();
    }
  }
  if (j.contains("refinement")) {
    const json& r = j["refinement"];
    only_keys(r, "refinement", {"lambda", "indicator", "mode"});
    p.lambda = get_number(r, "refinement", "lambda", p.lambda);
    const std::string ind = get_string(r, "refinement", "indicator", indicator_name(p.indicator));
    if (ind == "max")
      p.indicator = IndicatorKind::MaxOfBoth;
    else if (ind == "gradient")
      p.indicator = IndicatorKind::Gradient;
    else if (ind == "pd_gap")
      p.indicator = IndicatorKind::PDGap;
    else
      fail("refinement.indicator", "must be max, gradient or pd_gap");
    const std::string mode = get_string(r, "refinement", "mode", mode_name(p.refine_mode));
    if (mode == "both")
      p.refine_mode = RefineMode::Both;
    else if (mode == "x")
      p.refine_mode = RefineMode::X;
    else if (mode == "s")
      p.refine_mode = RefineMode::S;
    else
      fail("refinement.mode", "must be both, x or s");
  }
  p.validate();

  if (j.contains("sweep")) {
    const json& s = j["sweep"];
    only_keys(s, "sweep", {"parameter", "values"});
    c.sweep_parameter = get_string(s, "sweep", "parameter", c.sweep_parameter);
    if (c.sweep_parameter != "alpha" && c.sweep_parameter != "b") fail("sweep.parameter", "must be alpha or b");
    if (s.contains("values")) {
      if (!s["values"].is_array()) fail("sweep.values", "expected an array of numbers");
      for (const json& v : s["values"]) {
        if (!v.is_number()) fail("sweep.values", "expected an array of numbers");
        c.sweep_values.push_back(v.get<double>());
      }
    }
  }
  if (j.contains("oracle")) {
    only_keys(j["oracle"], "oracle", {"topologies", "restarts"});
    c.oracle_topologies = get_string(j["oracle"], "oracle", "topologies", c.oracle_topologies);
    if (c.oracle_topologies != "auto" && c.oracle_topologies != "triple_junction" &&
        c.oracle_topologies != "four_to_four")
      fail("oracle.topologies", "must be auto, triple_junction or four_to_four");
    c.oracle_restarts = get_int(j["oracle"], "oracle", "restarts", c.oracle_restarts);
    if (c.oracle_restarts < 1) fail("oracle.restarts", "must be >= 1");
  }
  if (j.contains("certificate")) {
    only_keys(j["certificate"], "certificate", {"m1", "m2"});
    c.cert_m1 = get_number(j["certificate"], "certificate", "m1", c.cert_m1);
    c.cert_m2 = get_number(j["certificate"], "certificate", "m2", c.cert_m2);
  }
  if (j.contains("diffuse")) {
    only_keys(j["diffuse"], "diffuse", {"beta", "samples"});
    c.diffuse_beta = get_number(j["diffuse"], "diffuse", "beta", c.diffuse_beta);
    c.diffuse_samples = get_int(j["diffuse"], "diffuse", "samples", c.diffuse_samples);
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) fail("seed", "expected a nonnegative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  c.output_dir = get_string(j, "", "output_dir", c.output_dir);
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot read config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Config, std::string("malformed JSON in ") + path + ": " + e.what());
  }
  return parse_config(j);
}

json Config::to_json() const {
  json sources = json::array(), sinks = json::array();
  for (const BoundaryAtom& a : atoms)
    (a.sign == AtomSign::Source ? sources : sinks).push_back({{"arclength", a.arclength}, {"mass", a.mass}});
  const SolverParams& p = solver;
  return {
      {"experiment", experiment},
      {"domain", {{"width", domain.width}, {"height", domain.height}}},
      {"measures", {{"sources", sources}, {"sinks", sinks}}},
      {"cost", cost_spec},
      {"grid", {{"levels", {x_level, s_level}}}},
      {"solver",
       {{"theta", p.theta},
        {"step_rule", step_rule_name(p.step_rule)},
        {"step_scale", p.step_scale},
        {"inner_tol", p.inner_tol},
        {"stall_window", p.stall_window},
        {"gap_tol", p.gap_tol},
        {"max_inner_iters", p.max_inner_iters},
        {"check_every", p.check_every},
        {"num_refinements", p.num_refinements},
        {"dykstra_tol", p.dykstra_tol},
        {"dykstra_max_cycles", p.dykstra_max_cycles},
        {"element_budget", p.element_budget}}},
      {"refinement",
       {{"lambda", p.lambda}, {"indicator", indicator_name(p.indicator)}, {"mode", mode_name(p.refine_mode)}}},
      {"sweep", {{"parameter", sweep_parameter}, {"values", sweep_values}}},
      {"oracle", {{"topologies", oracle_topologies}, {"restarts", oracle_restarts}}},
      {"certificate", {{"m1", cert_m1}, {"m2", cert_m2}}},
      {"diffuse", {{"beta", diffuse_beta}, {"samples", diffuse_samples}}},
      {"seed", seed},
      {"output_dir", output_dir},
  };
}

}  // namespace liftnet
