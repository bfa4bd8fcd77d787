// ccomp: command line front end for the override-control simulator.

#include "ccomp/compressor_map.hpp"
#include "ccomp/config.hpp"
#include "ccomp/csv.hpp"
#include "ccomp/errors.hpp"
#include "ccomp/plant.hpp"
#include "ccomp/regulator.hpp"
#include "ccomp/simkit.hpp"
#include "ccomp/stability.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <map>

namespace {

using namespace ccomp;

enum Exit { kOk = 0, kConfig = 1, kNumerical = 2, kMonitor = 3 };

void print_state(const PlantState& x) {
  std::printf("  c2    = %.10g m/s\n  Pi    = %.10g\n  r_GV  = %.10g\n  r_PV  = %.10g\n  r_BOV = %.10g\n", x.c2, x.pi,
              x.r_gv, x.r_pv, x.r_bov);
}

int cmd_simulate(const std::string& cfg, const std::string& out_dir, const std::string& bounds, bool strict,
                 double duration) {
  Scenario s = load_scenario(cfg);
  if (!bounds.empty()) s.bounds = StabilityBounds::parse(bounds);
  if (duration >= 0.0) s.duration = duration;
  std::filesystem::path dir = out_dir.empty() ? s.output_dir : std::filesystem::path(out_dir);
  if (dir.empty()) dir = std::filesystem::path("out") / s.name;

  const auto t0 = std::chrono::steady_clock::now();
  const SimResult res = run_scenario(s);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_outputs(res, dir);

  std::printf("%s: %zu steps in %.2f s, %zu trace rows -> %s\n", s.name.c_str(), res.steps, wall, res.trace.size(),
              dir.string().c_str());
  for (const auto& e : res.events) {
    std::printf("  event t=%.6f u%d C%d -> C%d  dp=%.3g\n", e.t, e.j, e.k_from, e.k_to, e.delta_p);
  }
  std::printf("%s", report_text(res.report).c_str());
  if (!res.completed) {
    std::fprintf(stderr, "run aborted at t=%.6f: %s\n", res.failure_time, res.failure.c_str());
    return kNumerical;
  }
  if (strict && !res.report.ok()) return kMonitor;
  return kOk;
}

int cmd_fit_map(const std::string& samples_path, const std::string& out, int segments) {
  if (segments < 1) throw ConfigError("fit-map: --segments must be >= 1");
  const auto rows = parse_csv(read_file(samples_path));
  if (rows.empty() || rows[0].size() != 3 || rows[0][0] != "r_gv") {
    throw ConfigError("fit-map: expected header r_gv,c2,work");
  }
  std::map<double, std::vector<MapSample>> groups;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 3) throw ConfigError("fit-map: bad row " + std::to_string(i + 1));
    groups[parse_double(rows[i][0])].push_back({parse_double(rows[i][1]), parse_double(rows[i][2])});
  }
  std::vector<IsoCharacteristic> isolines;
  for (const auto& [r, samples] : groups) {
    double lo = samples.front().c2, hi = lo;
    for (const auto& s : samples) {
      lo = std::min(lo, s.c2);
      hi = std::max(hi, s.c2);
    }
    std::vector<double> bp(segments + 1);
    for (int k = 0; k <= segments; ++k) bp[k] = lo + (hi - lo) * k / segments;
    bp.back() = hi;
    const IsolineFit fit = fit_isoline(samples, bp, r);
    std::printf("r_gv=%.4g  samples=%zu  rms=%.3g  max=%.3g  cond=%.3g%s\n", r, samples.size(), fit.rms_residual,
                fit.max_residual, fit.condition_estimate, fit.ill_conditioned ? "  (ill-conditioned)" : "");
    isolines.push_back(fit.isoline);
  }
  const CompressorMap map = CompressorMap::unchecked(isolines);
  const auto violations = map.validate();
  for (const auto& v : violations) std::fprintf(stderr, "map violation: %s: %s\n", v.location.c_str(), v.message.c_str());
  if (!violations.empty()) return kNumerical;
  write_file(out, map_to_json(map));
  std::printf("wrote %s (%zu isolines, %zu segments)\n", out.c_str(), map.isolines().size(), map.segment_count());
  return kOk;
}

CompressorModel make_model(const std::string& params, const std::string& map) {
  const PlantParams p = params.empty() ? PlantParams{} : load_params(params);
  return CompressorModel(p, std::make_shared<const CompressorMap>(load_map(map)));
}

int cmd_steady_state(const std::string& params, const std::string& map, double target, double z, double bov,
                     double scl_margin) {
  const CompressorModel model = make_model(params, map);
  EquilibriumTarget tgt{target, {}};
  FreeInputs free = FreeInputs::GuideVane;
  if (scl_margin > 0.0) {
    const ASCPolynomial poly = fit_scl(model, scl_margin).poly;
    tgt.flow_constraint = [poly](double c2, double pi) { return poly.value(c2, pi); };
    free = FreeInputs::GuideVaneAndBlowOff;
  }
  const Equilibrium eq = find_equilibrium(tgt, free, {z}, model, bov);
  std::printf("equilibrium at Pi=%.6g (residual %.3g)\n", target, eq.residual);
  print_state(eq.state);
  std::printf("  surge flow at this pressure: %.10g m/s\n", surge_flow_at(model, target));
  return kOk;
}

int cmd_analyze(const std::string& trace_path, const std::string& cfg, std::string events_path,
                const std::string& bounds) {
  Scenario s = load_scenario(cfg);
  if (!bounds.empty()) s.bounds = StabilityBounds::parse(bounds);
  const ControlSetup setup = build_setup(s);
  if (events_path.empty()) events_path = (std::filesystem::path(trace_path).parent_path() / "events.csv").string();

  const auto rows = parse_csv(read_file(trace_path));
  if (rows.empty() || rows[0].size() != 22) throw ConfigError("analyze: unexpected trace header");
  struct Row {
    double t;
    PlantState x;
    ExoStateW w;
    ExoStateD d;
    int s1, s2;
  };
  std::vector<Row> trace;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& f = rows[i];
    Row r;
    r.t = parse_double(f[0]);
    r.x = {parse_double(f[1]), parse_double(f[2]), parse_double(f[3]), parse_double(f[4]), parse_double(f[5])};
    r.w = {parse_double(f[6]), parse_double(f[7]), parse_double(f[8]),
           parse_double(f[9]), parse_double(f[10]), parse_double(f[11])};
    r.d = {parse_double(f[12]), parse_double(f[13]), parse_double(f[14])};
    r.s1 = std::stoi(f[15]);
    r.s2 = std::stoi(f[16]);
    trace.push_back(r);
  }
  auto err = [&](int k, const Row& r) {
    const auto& c = setup.bank[k - 1];
    const Eigen::Vector2d e = tracking_error(c, r.x, r.w, setup.ctx.asc);
    return c.domain == Domain::Siso ? std::abs(e[0]) : e.norm();
  };
  std::vector<MonitorSample> samples;
  for (const auto& r : trace) {
    MonitorSample m;
    m.t = r.t;
    m.e_norm[0] = err(r.s1, r);
    m.e_norm[1] = setup.bank[r.s2 - 1].domain == Domain::Mimo ? err(r.s2, r) : std::nan("");
    samples.push_back(m);
  }

  std::vector<EventSnapshot> snaps;
  const auto ev_rows = parse_csv(read_file(events_path));
  for (std::size_t i = 1; i < ev_rows.size(); ++i) {
    const auto& f = ev_rows[i];
    EventSnapshot snap;
    snap.event = {parse_double(f[0]), std::stoi(f[1]), std::stoi(f[2]), std::stoi(f[3]), parse_double(f[4]),
                  parse_double(f[5])};
    // state at the event, linearly interpolated between trace rows
    std::size_t k = 1;
    while (k + 1 < trace.size() && trace[k].t < snap.event.t) ++k;
    const Row& a = trace[k - 1];
    const Row& b = trace[std::min(k, trace.size() - 1)];
    const double th = b.t > a.t ? std::clamp((snap.event.t - a.t) / (b.t - a.t), 0.0, 1.0) : 0.0;
    snap.x = PlantState::from((1 - th) * a.x.vec() + th * b.x.vec());
    ExoStateW w = s.w0;
    ExoStateD d = s.d0;
    exo_advance(w, d, s.exo, snap.event.t);
    snap.chi_from = solve_regulator(setup.bank[snap.event.k_from - 1], w, d, setup.ctx).chi;
    snap.chi_to = solve_regulator(setup.bank[snap.event.k_to - 1], w, d, setup.ctx).chi;
    snaps.push_back(snap);
  }
  const MonitorReport rep = monitor(samples, snaps, s.bounds, setup.flow_ref);
  std::printf("%s", report_text(rep).c_str());
  return rep.ok() ? kOk : kMonitor;
}

int cmd_check_structure(const std::string& params, const std::string& map, int points, std::uint64_t seed) {
  const CompressorModel model = make_model(params, map);
  const ASCPolynomial asc = fit_scl(model).poly;
  const StructureReport rep = check_structure(model, asc, points, seed);
  std::printf("relative degree, SISO (Pi from GV): %d\n", rep.siso_degree);
  std::printf("relative degrees, MIMO (Pi, Y_ASC from GV, BOV): {%d, %d}\n", rep.mimo_degrees[0],
              rep.mimo_degrees[1]);
  std::printf("zero-dynamics eigenvalue: %.9g 1/s\n", rep.zero_dynamics_eigenvalue);
  for (const auto& p : rep.points) {
    std::printf("  x=(%.4g, %.4g, %.3g, %.3g, %.3g)  r=%d  r_vec={%d,%d}  det=%.3g\n", p.x.c2, p.x.pi, p.x.r_gv,
                p.x.r_pv, p.x.r_bov, p.siso_degree, p.mimo_degrees[0], p.mimo_degrees[1], p.decoupling_det);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Centrifugal compressor MIN/MAX override control simulator"};
  app.require_subcommand(1);
  std::uint64_t seed = 1;
  app.add_option("--seed", seed, "Random seed (reserved; runs are deterministic)");

  std::string cfg, out, bounds;
  bool strict = false;
  double duration = -1.0;
  auto* sim = app.add_subcommand("simulate", "Run a scenario and write trace/events/report");
  sim->add_option("scenario", cfg, "Scenario file")->required()->check(CLI::ExistingFile);
  sim->add_option("-o,--output", out, "Output directory (default: scenario output_dir)");
  sim->add_option("--bounds", bounds, "lambda,A,L,delta");
  sim->add_option("--duration", duration, "Override the scenario duration (s)");
  sim->add_flag("--strict", strict, "Exit 3 if a monitor verdict fails");

  std::string samples, map_out = "map.json";
  int segments = 3;
  auto* fit = app.add_subcommand("fit-map", "Fit piecewise-cubic isolines to map samples");
  fit->add_option("samples", samples, "CSV with r_gv,c2,work")->required()->check(CLI::ExistingFile);
  fit->add_option("-o,--output", map_out, "Map JSON to write");
  fit->add_option("--segments", segments, "Segments (beta lines - 1) per isoline");

  std::string params, map_path = "data/example_map.json";
  double target = 1.7, z = 0.5, bov = 0.0, scl = 0.0;
  auto* ss = app.add_subcommand("steady-state", "Solve a plant equilibrium");
  ss->add_option("--target", target, "Pressure ratio")->required();
  ss->add_option("--z", z, "Process valve position");
  ss->add_option("--bov", bov, "Fixed BOV position (guide vane only)");
  ss->add_option("--scl", scl, "Put the point on the SCL with this surge margin, freeing the BOV");
  ss->add_option("--params", params, "Parameter JSON (default: table values)");
  ss->add_option("--map", map_path, "Compressor map JSON");

  std::string trace_path, events_path;
  auto* an = app.add_subcommand("analyze", "Re-run the stability monitor on a written trace");
  an->add_option("trace", trace_path, "trace.csv")->required()->check(CLI::ExistingFile);
  an->add_option("--scenario", cfg, "Scenario that produced the trace")->required()->check(CLI::ExistingFile);
  an->add_option("--events", events_path, "events.csv (default: next to the trace)");
  an->add_option("--bounds", bounds, "lambda,A,L,delta");

  int points = 10;
  auto* cs = app.add_subcommand("check-structure", "Relative degrees and zero dynamics");
  cs->add_option("params", params, "Parameter JSON")->check(CLI::ExistingFile);
  cs->add_option("--map", map_path, "Compressor map JSON");
  cs->add_option("--points", points, "Number of random operating points");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) return cmd_simulate(cfg, out, bounds, strict, duration);
    if (*fit) return cmd_fit_map(samples, map_out, segments);
    if (*ss) return cmd_steady_state(params, map_path, target, z, bov, scl);
    if (*an) return cmd_analyze(trace_path, cfg, events_path, bounds);
    if (*cs) return cmd_check_structure(params, map_path, points, seed);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const InvalidParameter& e) {
    std::fprintf(stderr, "invalid parameter: %s\n", e.what());
    return kConfig;
  } catch (const Error& e) {
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return kNumerical;
  }
  return kOk;
}
