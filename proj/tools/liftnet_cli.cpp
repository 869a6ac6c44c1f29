#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <unordered_map>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "liftnet/certificates.hpp"
#include "liftnet/config.hpp"
#include "liftnet/error.hpp"
#include "liftnet/graph_oracle.hpp"
#include "liftnet/network.hpp"
#include "liftnet/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace liftnet;

namespace {

constexpr int kOk = 0, kFailure = 1, kNotConverged = 2, kConfigError = 3;

struct Flags {
  std::string config;
  int threads = 0;
  long long seed = -1;
  bool quiet = false;
};

// Written next to the target and renamed, so readers never see partial files.
void write_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

fs::path output_dir(const Config& c) {
  const char* env = std::getenv("LIFTNET_OUT");
  fs::path dir = env && *env ? fs::path(env) : fs::path(c.output_dir);
  fs::create_directories(dir);
  return dir;
}

Config load(const Flags& f) {
  Config c = f.config.empty() ? Config{} : load_config(f.config);
  if (f.seed >= 0) c.seed = static_cast<std::uint64_t>(f.seed);
  return c;
}

// Sources then sinks, each ordered by x then y (the order the candidate
// topologies are written in).
std::vector<Terminal> ordered_terminals(const BoundaryData& data) {
  std::vector<Terminal> t = terminals_of(data);
  std::stable_sort(t.begin(), t.end(), [](const Terminal& a, const Terminal& b) {
    if ((a.mass > 0) != (b.mass > 0)) return a.mass > 0;
    if (a.position.x() != b.position.x()) return a.position.x() < b.position.x();
    return a.position.y() < b.position.y();
  });
  return t;
}

std::vector<Topology> candidate_topologies(const Config& c, const std::vector<Terminal>& terminals) {
  const auto sources = std::count_if(terminals.begin(), terminals.end(), [](const Terminal& t) { return t.mass > 0; });
  const auto sinks = static_cast<long>(terminals.size()) - sources;
  std::string which = c.oracle_topologies;
  if (which == "auto") {
    if (sources == 1 && sinks == 2)
      which = "triple_junction";
    else if (sources == 4 && sinks == 4)
      which = "four_to_four";
    else
      return {};
  }
  if (which == "triple_junction") {
    if (sources != 1 || sinks != 2) throw Error(ErrorCode::Config, "config key 'oracle.topologies': needs 1 source and 2 sinks");
    return triple_junction_topologies();
  }
  if (sources != 4 || sinks != 4) throw Error(ErrorCode::Config, "config key 'oracle.topologies': needs 4 sources and 4 sinks");
  return four_to_four_topologies();
}

json oracle_json(const OracleResult& r) {
  json cands = json::array();
  for (const TopologyResult& t : r.candidates)
    cands.push_back({{"name", t.name},
                     {"energy", t.energy},
                     {"angle_residual", t.angle_residual},
                     {"collapsed_edges", t.collapsed_edges}});
  json tied = json::array();
  for (int i : r.tied) tied.push_back(r.candidates[i].name);
  return {{"best", r.candidates[r.best].name}, {"energy", r.energy}, {"tied", tied},
          {"bifurcation", r.bifurcation()}, {"candidates", cands}};
}

std::string history_csv(const std::vector<LevelRecord>& h) {
  std::ostringstream os;
  os.precision(12);
  os << "level,iters,elements,dofs,energy_primal,energy_dual,gap,seconds\n";
  for (const LevelRecord& r : h)
    os << r.level << "," << r.iterations << "," << r.elements << "," << r.dofs << "," << r.energy_primal << ","
       << r.energy_dual << "," << r.gap << "," << r.seconds << "\n";
  return os.str();
}

json history_json(const std::vector<LevelRecord>& h) {
  json out = json::array();
  for (const LevelRecord& r : h)
    out.push_back({{"level", r.level},
                   {"iterations", r.iterations},
                   {"elements", r.elements},
                   {"dofs", r.dofs},
                   {"energy_primal", r.energy_primal},
                   {"energy_dual", r.energy_dual},
                   {"energy_dual_pointwise", r.energy_dual_pointwise},
                   {"gap", r.gap},
                   {"relative_gap", r.relative_gap},
                   {"seconds", r.seconds},
                   {"converged", r.converged},
                   {"stop_reason", r.stop_reason},
                   {"indicator_note", r.indicator_note}});
  return out;
}

struct SolveOutcome {
  AdaptiveResult result;
  NetworkExtract network;
  json report;
};

SolveOutcome run_solve(const Config& c, const TransportCost& cost, const Flags& f, const fs::path& dir,
                       bool write_meshes) {
  const BoundaryData data = c.boundary();
  AdaptiveProblem problem{data, cost, c.x_level, c.s_level};
  ProgressFn progress;
  if (!f.quiet) progress = [](const std::string& s) { std::cerr << s << "\n"; };
  LevelFn on_level;
  if (write_meshes)
    on_level = [&](int level, const PrismGrid& grid, const DiscreteState&, const IndicatorField& eta) {
      std::vector<CellField> fields;
      const std::vector<int> alive = grid.alive_elements();
      if (!eta.elements.empty()) {
        std::unordered_map<int, double> by_id;
        for (std::size_t i = 0; i < eta.elements.size(); ++i) by_id[eta.elements[i]] = eta.eta[i];
        CellField fld{"indicator", {}};
        for (int e : alive) fld.values.push_back(by_id.count(e) ? by_id[e] : 0.0);
        fields.push_back(std::move(fld));
      }
      std::ostringstream os;
      write_vtk(grid, os, fields);
      write_atomic(dir / ("mesh_level_" + std::to_string(level) + ".vtk"), os.str());
    };

  SolveOutcome out;
  out.result = adaptive_solve(problem, c.solver, progress, on_level);
  const AdaptiveResult& r = out.result;
  const DofLayout layout(r.grid);
  out.network = extract_network(r.grid, layout, r.state.V, data);

  json rep = {{"cost", cost.describe()},
              {"history", history_json(r.history)},
              {"converged", r.converged},
              {"budget_exceeded", r.budget_exceeded},
              {"network", {{"segments", out.network.segments.size()}, {"energy", out.network.energy(cost)}}}};
  if (!r.history.empty()) {
    const LevelRecord& last = r.history.back();
    rep["final"] = {{"energy_primal", last.energy_primal}, {"energy_dual", last.energy_dual},
                    {"gap", last.gap}, {"elements", last.elements}};
  }
  const std::vector<Terminal> terminals = ordered_terminals(data);
  const std::vector<Topology> topologies = candidate_topologies(c, terminals);
  if (!topologies.empty()) {
    OptimizeOptions opt;
    opt.seed = c.seed;
    opt.restarts = c.oracle_restarts;
    const OracleResult orc = oracle_best_network(terminals, topologies, cost, opt);
    const TopologyMatch m = classify_topology(r.grid, rounded_image(layout, r.state.V), data, orc.candidates);
    json tied = json::array();
    for (int i : m.tied) tied.push_back(orc.candidates[i].name);
    rep["oracle"] = oracle_json(orc);
    rep["extracted_topology"] = {{"best", orc.candidates[m.best].name}, {"tied", tied}, {"distances", m.distances},
                                 {"matches_oracle", m.matches(orc.best)}};
  }
  out.report = std::move(rep);
  return out;
}

int cmd_solve(const Flags& f) {
  const Config c = load(f);
  const fs::path dir = output_dir(c);
  const auto t0 = std::chrono::steady_clock::now();
  SolveOutcome s = run_solve(c, c.cost(), f, dir, true);
  s.report["config"] = c.to_json();
  s.report["wall_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_atomic(dir / "history.csv", history_csv(s.result.history));
  std::ostringstream net;
  write_network_csv(s.network, net);
  write_atomic(dir / "network.csv", net.str());
  write_atomic(dir / "report.json", s.report.dump(2) + "\n");
  if (!f.quiet && !s.result.history.empty())
    std::cout << "energy_primal " << s.result.history.back().energy_primal << " gap " << s.result.history.back().gap
              << " elements " << s.result.history.back().elements << "\n";
  return s.result.converged && !s.result.budget_exceeded ? kOk : kNotConverged;
}

int cmd_oracle(const Flags& f) {
  const Config c = load(f);
  const fs::path dir = output_dir(c);
  const BoundaryData data = c.boundary();
  const TransportCost cost = c.cost();
  const std::vector<Terminal> terminals = ordered_terminals(data);
  const std::vector<Topology> topologies = candidate_topologies(c, terminals);
  if (topologies.empty())
    throw Error(ErrorCode::Config, "config key 'oracle.topologies': no candidate list for these measures");
  OptimizeOptions opt;
  opt.seed = c.seed;
  opt.restarts = c.oracle_restarts;
  const OracleResult r = oracle_best_network(terminals, topologies, cost, opt);
  json rep = oracle_json(r);
  rep["cost"] = cost.describe();
  rep["config"] = c.to_json();
  std::ostringstream net;
  net.precision(12);
  net << "x1,y1,x2,y2,mass\n";
  const GraphFlux& g = r.candidates[r.best].graph;
  for (const GraphEdge& e : g.edges)
    net << g.vertices[e.from].x() << "," << g.vertices[e.from].y() << "," << g.vertices[e.to].x() << ","
        << g.vertices[e.to].y() << "," << e.weight << "\n";
  write_atomic(dir / "network.csv", net.str());
  write_atomic(dir / "report.json", rep.dump(2) + "\n");
  if (!f.quiet) std::cout << "best " << r.candidates[r.best].name << " energy " << r.energy << "\n";
  return kOk;
}

int cmd_certify(const Flags& f) {
  const Config c = load(f);
  const fs::path dir = output_dir(c);
  const TripleJunctionCertificate cert = triple_junction_certificate(c.cert_m1, c.cert_m2, c.cost());
  std::ostringstream os;
  write_certificate_json(cert, os);
  write_atomic(dir / "report.json", os.str());
  if (!f.quiet) std::cout << os.str();
  return cert.report.passed ? kOk : kFailure;
}

int cmd_diffuse(const Flags& f) {
  const Config c = load(f);
  const fs::path dir = output_dir(c);
  const TransportCost cost = c.cost();
  const DiffuseFluxReport r = diffuse_flux_condition(cost, c.diffuse_beta, c.diffuse_samples);
  const json rep = {{"cost", cost.describe()}, {"beta", c.diffuse_beta},         {"samples", r.samples},
                    {"passed", r.passed},      {"worst_margin", r.worst_margin}, {"worst_m", r.worst_m},
                    {"explanation", r.explanation}};
  write_atomic(dir / "report.json", rep.dump(2) + "\n");
  if (!f.quiet) std::cout << rep.dump(2) << "\n";
  return kOk;
}

int cmd_sweep(const Flags& f) {
  const Config c = load(f);
  if (c.sweep_values.empty()) throw Error(ErrorCode::Config, "config key 'sweep.values': empty");
  const fs::path dir = output_dir(c);
  std::ostringstream csv;
  csv.precision(12);
  csv << "value,energy_primal,energy_dual,gap,elements,seconds,oracle_energy,oracle_topology,extracted_topology,"
         "converged\n";
  json runs = json::array();
  bool all_converged = true;
  for (double v : c.sweep_values) {
    json spec = c.cost_spec;
    spec[c.sweep_parameter] = v;
    const TransportCost cost = parse_cost(spec);
    SolveOutcome s = run_solve(c, cost, f, dir, false);
    const LevelRecord& last = s.result.history.back();
    double secs = 0.0;
    for (const LevelRecord& r : s.result.history) secs += r.seconds;
    const bool conv = s.result.converged && !s.result.budget_exceeded;
    all_converged = all_converged && conv;
    const json& rep = s.report;
    csv << v << "," << last.energy_primal << "," << last.energy_dual << "," << last.gap << "," << last.elements << ","
        << secs << "," << (rep.contains("oracle") ? rep["oracle"]["energy"].get<double>() : 0.0) << ","
        << (rep.contains("oracle") ? rep["oracle"]["best"].get<std::string>() : "") << ","
        << (rep.contains("extracted_topology") ? rep["extracted_topology"]["best"].get<std::string>() : "") << ","
        << (conv ? 1 : 0) << "\n";
    json entry = s.report;
    entry["value"] = v;
    runs.push_back(std::move(entry));
    if (!f.quiet) std::cerr << c.sweep_parameter << "=" << v << " energy " << last.energy_primal << "\n";
  }
  write_atomic(dir / "sweep.csv", csv.str());
  write_atomic(dir / "report.json", json{{"config", c.to_json()}, {"runs", runs}}.dump(2) + "\n");
  return all_converged ? kOk : kNotConverged;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"liftnet: globally optimal branched transport networks by functional lifting"};
  app.require_subcommand(1);
  Flags flags;
  auto add_flags = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "JSON run description (defaults below apply to missing keys)");
    sub->add_option("--threads", flags.threads, "worker threads (0 = runtime default)");
    sub->add_option("--seed", flags.seed, "seed of the multi-start oracle (overrides the config)");
    sub->add_flag("--quiet", flags.quiet, "no progress output");
  };
  CLI::App* solve = app.add_subcommand("solve", "adaptive primal-dual solve; writes history.csv, network.csv, "
                                                "mesh_level_k.vtk, report.json");
  CLI::App* oracle = app.add_subcommand("oracle", "best network over the candidate graph topologies");
  CLI::App* certify = app.add_subcommand("certify-triple-junction", "calibration certificate of a triple junction");
  CLI::App* diffuse = app.add_subcommand("check-diffuse", "sufficient condition for diffuse flux calibration");
  CLI::App* sweep = app.add_subcommand("sweep", "solve over a list of alpha (bt) or b (up) values; writes sweep.csv");
  for (CLI::App* s : {solve, oracle, certify, diffuse, sweep}) add_flags(s);
  app.footer("Output directory: config output_dir, overridden by LIFTNET_OUT.\n"
             "Exit codes: 0 success, 2 not converged, 3 config error.\n\nDefault config:\n" +
             Config{}.to_json().dump(2));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
#ifdef _OPENMP
  if (flags.threads > 0) omp_set_num_threads(flags.threads);
#endif

  try {
    if (*solve) return cmd_solve(flags);
    if (*oracle) return cmd_oracle(flags);
    if (*certify) return cmd_certify(flags);
    if (*diffuse) return cmd_diffuse(flags);
    if (*sweep) return cmd_sweep(flags);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    switch (e.code()) {
      case ErrorCode::Config:
      case ErrorCode::UnbalancedMeasures:
      case ErrorCode::NotOnBoundary:
      case ErrorCode::InvalidArgument:
      case ErrorCode::Domain:
      case ErrorCode::NoJunctionGeometry:
        return kConfigError;
      default:
        return kFailure;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}
