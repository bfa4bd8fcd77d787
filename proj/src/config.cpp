#include "ccomp/config.hpp"

#include "ccomp/csv.hpp"
#include "ccomp/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <set>

namespace ccomp {

using nlohmann::json;

namespace {

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError(what + ": " + e.what());
  }
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError(where + ": unknown key '" + it.key() + "'");
  }
}

double num(const json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
  if (!j.at(key).is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
  return j.at(key).get<double>();
}

double num_or(const json& j, const std::string& key, double fallback, const std::string& where) {
  return j.contains(key) ? num(j, key, where) : fallback;
}

std::vector<double> numbers(const json& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError(where + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& v : j) {
    if (!v.is_number()) throw ConfigError(where + ": expected an array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

PlantParams params_from(const json& j) {
  const std::string where = "params";
  check_keys(j, {"R_S", "T1", "kappa", "L12", "L23", "L34", "A2", "A3", "A4", "V", "K_PV", "K_BOV", "A_PV_max",
                 "A_BOV_max", "kv0", "tau_GV", "tau_PV", "tau_BOV"},
             where);
  PlantParams p;
  p.R_S = num_or(j, "R_S", p.R_S, where);
  p.T1 = num_or(j, "T1", p.T1, where);
  p.kappa = num_or(j, "kappa", p.kappa, where);
  p.L12 = num_or(j, "L12", p.L12, where);
  p.L23 = num_or(j, "L23", p.L23, where);
  p.L34 = num_or(j, "L34", p.L34, where);
  p.A2 = num_or(j, "A2", p.A2, where);
  p.A3 = num_or(j, "A3", p.A3, where);
  p.A4 = num_or(j, "A4", p.A4, where);
  p.V = num_or(j, "V", p.V, where);
  p.K_PV = num_or(j, "K_PV", p.K_PV, where);
  p.K_BOV = num_or(j, "K_BOV", p.K_BOV, where);
  p.A_PV_max = num_or(j, "A_PV_max", p.A_PV_max, where);
  p.A_BOV_max = num_or(j, "A_BOV_max", p.A_BOV_max, where);
  p.kv0 = num_or(j, "kv0", p.kv0, where);
  p.tau_GV = num_or(j, "tau_GV", p.tau_GV, where);
  p.tau_PV = num_or(j, "tau_PV", p.tau_PV, where);
  p.tau_BOV = num_or(j, "tau_BOV", p.tau_BOV, where);
  try {
    p.validate();
  } catch (const InvalidParameter& e) {
    throw ConfigError(e.what());
  }
  return p;
}

CompressorMap map_from(const json& j) {
  check_keys(j, {"isolines", "note"}, "map");
  if (!j.contains("isolines") || !j.at("isolines").is_array()) throw ConfigError("map: 'isolines' array required");
  std::vector<IsoCharacteristic> isos;
  for (const auto& iso : j.at("isolines")) {
    check_keys(iso, {"r_gv", "breakpoints", "coefficients"}, "map isoline");
    const double r = num(iso, "r_gv", "map isoline");
    std::vector<double> bp = numbers(iso.at("breakpoints"), "map isoline breakpoints");
    std::vector<std::array<double, 4>> coeffs;
    for (const auto& row : iso.at("coefficients")) {
      const auto v = numbers(row, "map isoline coefficients");
      if (v.size() != 4) throw ConfigError("map: coefficient rows need [a3, a2, a1, a0]");
      coeffs.push_back({v[0], v[1], v[2], v[3]});
    }
    try {
      isos.push_back(IsoCharacteristic::from_coefficients(r, std::move(bp), coeffs));
    } catch (const InvalidParameter& e) {
      throw ConfigError(std::string("map: ") + e.what());
    }
  }
  try {
    return CompressorMap(std::move(isos));
  } catch (const InvalidParameter& e) {
    throw ConfigError(e.what());
  }
}

}  // namespace

PlantParams parse_params(const std::string& text) { return params_from(parse_json(text, "params")); }
PlantParams load_params(const std::filesystem::path& path) { return parse_params(read_file(path)); }

CompressorMap parse_map(const std::string& text) { return map_from(parse_json(text, "map")); }
CompressorMap load_map(const std::filesystem::path& path) { return parse_map(read_file(path)); }

std::string map_to_json(const CompressorMap& map) {
  json out;
  out["isolines"] = json::array();
  for (const auto& iso : map.isolines()) {
    json j;
    j["r_gv"] = iso.r_gv;
    j["breakpoints"] = iso.beta_breakpoints;
    json rows = json::array();
    for (const auto& s : iso.segments) rows.push_back({s.a3, s.a2, s.a1, s.a0});
    j["coefficients"] = rows;
    out["isolines"].push_back(j);
  }
  return out.dump(2) + "\n";
}

Scenario parse_scenario(const std::string& text, const std::filesystem::path& base_dir) {
  const json j = parse_json(text, "scenario");
  check_keys(j, {"name", "duration", "dt", "record_interval", "params", "map", "initial", "ramp", "setpoint_exo",
                 "x2_max", "disturbance", "gains", "asc", "selectors", "latches", "bounds", "regulator",
                 "refine_events", "output_dir", "note"},
             "scenario");
  Scenario s;
  try {
    if (j.contains("name")) s.name = j.at("name").get<std::string>();
    s.duration = num(j, "duration", "scenario");
    s.dt = num_or(j, "dt", s.dt, "scenario");
    s.record_interval = num_or(j, "record_interval", s.record_interval, "scenario");

    if (j.contains("params")) {
      const auto& p = j.at("params");
      s.params = p.is_string() ? load_params(resolve(base_dir, p.get<std::string>())) : params_from(p);
    }
    if (!j.contains("map")) throw ConfigError("scenario: 'map' required");
    {
      const auto& m = j.at("map");
      s.map = std::make_shared<const CompressorMap>(m.is_string() ? load_map(resolve(base_dir, m.get<std::string>()))
                                                                  : map_from(m));
    }

    if (j.contains("initial")) {
      const auto& ic = j.at("initial");
      check_keys(ic, {"manifold", "equilibrium", "state"}, "initial");
      if (ic.size() != 1) throw ConfigError("initial: give exactly one of manifold, equilibrium, state");
      if (ic.contains("manifold")) {
        s.initial.kind = InitialCondition::Kind::Manifold;
        s.initial.controller = ic.at("manifold").get<int>();
      } else if (ic.contains("equilibrium")) {
        s.initial.kind = InitialCondition::Kind::Equilibrium;
        s.initial.pressure_ratio = num(ic, "equilibrium", "initial");
      } else {
        const auto v = numbers(ic.at("state"), "initial state");
        if (v.size() != 5) throw ConfigError("initial: state needs 5 entries");
        s.initial.kind = InitialCondition::Kind::State;
        s.initial.state = {v[0], v[1], v[2], v[3], v[4]};
      }
    }

    if (j.contains("ramp") == j.contains("setpoint_exo")) {
      throw ConfigError("scenario: give exactly one of 'ramp' or 'setpoint_exo'");
    }
    if (j.contains("ramp")) {
      const auto& r = j.at("ramp");
      check_keys(r, {"start", "end", "slope", "delay", "margin"}, "ramp");
      RampSpec spec;
      spec.start = num(r, "start", "ramp");
      spec.end = num(r, "end", "ramp");
      spec.slope = num(r, "slope", "ramp");
      spec.delay = num_or(r, "delay", 0.0, "ramp");
      spec.margin = num_or(r, "margin", spec.margin, "ramp");
      try {
        const RampConfig rc = configure_ramp(spec);
        s.w0 = rc.w;
        s.exo.omega_w = rc.omega_w;
      } catch (const InvalidParameter& e) {
        throw ConfigError(std::string("ramp: ") + e.what());
      }
      s.ramp_increasing = spec.end > spec.start;
    } else {
      const auto& e = j.at("setpoint_exo");
      check_keys(e, {"w", "omega", "increasing"}, "setpoint_exo");
      const auto v = numbers(e.at("w"), "setpoint_exo w");
      if (v.size() != 5) throw ConfigError("setpoint_exo: w needs w1..w5");
      s.w0 = {v[0], v[1], v[2], v[3], v[4], 0.0};
      s.exo.omega_w = num(e, "omega", "setpoint_exo");
      s.ramp_increasing = e.value("increasing", true);
    }
    s.w0.w6 = num(j, "x2_max", "scenario");

    if (j.contains("disturbance")) {
      const auto& d = j.at("disturbance");
      check_keys(d, {"offset", "amplitude", "phase", "omega", "d"}, "disturbance");
      s.exo.omega_d = num_or(d, "omega", 0.0, "disturbance");
      if (d.contains("d")) {
        const auto v = numbers(d.at("d"), "disturbance d");
        if (v.size() != 3) throw ConfigError("disturbance: d needs 3 entries");
        s.d0 = {v[0], v[1], v[2]};
      } else {
        const double off = num_or(d, "offset", 0.5, "disturbance");
        const double amp = num_or(d, "amplitude", 0.0, "disturbance");
        const double ph = num_or(d, "phase", 0.0, "disturbance");
        s.d0 = {off, amp * std::sin(ph), amp * std::cos(ph)};
      }
    } else {
      s.d0 = {0.5, 0.0, 0.0};
    }

    if (j.contains("gains")) {
      const auto& g = j.at("gains");
      check_keys(g, {"siso_poles", "mimo_poles", "siso_design_x2", "mimo_design_x2", "siso", "mimo"}, "gains");
      if (g.contains("siso_poles")) s.siso_poles = numbers(g.at("siso_poles"), "gains siso_poles");
      if (g.contains("mimo_poles")) s.mimo_poles = numbers(g.at("mimo_poles"), "gains mimo_poles");
      if (g.contains("siso_design_x2")) s.siso_design_x2 = num(g, "siso_design_x2", "gains");
      if (g.contains("mimo_design_x2")) s.mimo_design_x2 = num(g, "mimo_design_x2", "gains");
      for (const char* key : {"siso", "mimo"}) {
        if (!g.contains(key)) continue;
        GainMatrix m = GainMatrix::Zero();
        const auto& rows = g.at(key);
        if (!rows.is_array() || rows.size() != 2) throw ConfigError("gains: explicit gains need two rows");
        for (int r = 0; r < 2; ++r) {
          const auto v = numbers(rows[r], "gains row");
          if (v.size() != 5) throw ConfigError("gains: rows need 5 entries");
          for (int c = 0; c < 5; ++c) m(r, c) = v[c];
        }
        (std::string(key) == "siso" ? s.siso_gain : s.mimo_gain) = m;
      }
    }

    if (j.contains("asc")) {
      const auto& a = j.at("asc");
      check_keys(a, {"margin", "x2_range", "coefficients", "flow_ref"}, "asc");
      if (a.contains("coefficients")) {
        ASCPolynomial poly;
        for (const auto& row : a.at("coefficients")) poly.b.push_back(numbers(row, "asc coefficients"));
        poly.flow_ref = num_or(a, "flow_ref", s.map->reference_flow(), "asc");
        try {
          poly.validate();
        } catch (const InvalidParameter& e) {
          throw ConfigError(e.what());
        }
        s.asc = poly;
      } else {
        s.scl_margin = num_or(a, "margin", s.scl_margin, "asc");
        if (a.contains("x2_range")) {
          const auto v = numbers(a.at("x2_range"), "asc x2_range");
          if (v.size() != 2) throw ConfigError("asc: x2_range needs [lo, hi]");
          s.scl_x2_lo = v[0];
          s.scl_x2_hi = v[1];
        }
      }
    }

    if (j.contains("selectors")) {
      const auto& sel = j.at("selectors");
      check_keys(sel, {"gv", "bov"}, "selectors");
      try {
        if (sel.contains("gv")) s.trees[0] = SelectorTree::parse(sel.at("gv").get<std::string>());
        if (sel.contains("bov")) s.trees[1] = SelectorTree::parse(sel.at("bov").get<std::string>());
      } catch (const InvalidParameter& e) {
        throw ConfigError(e.what());
      }
    }
    if (j.contains("latches")) s.latches = j.at("latches").get<bool>();

    if (j.contains("bounds")) {
      const auto& b = j.at("bounds");
      check_keys(b, {"lambda", "A", "L", "delta"}, "bounds");
      s.bounds.lambda = num_or(b, "lambda", s.bounds.lambda, "bounds");
      s.bounds.A = num_or(b, "A", s.bounds.A, "bounds");
      s.bounds.L = num_or(b, "L", s.bounds.L, "bounds");
      s.bounds.delta = num_or(b, "delta", s.bounds.delta, "bounds");
    }
    if (j.contains("regulator")) {
      const auto mode = j.at("regulator").get<std::string>();
      if (mode == "tracking") {
        s.mode = RegulatorMode::Tracking;
      } else if (mode == "frozen") {
        s.mode = RegulatorMode::Frozen;
      } else {
        throw ConfigError("regulator: expected 'tracking' or 'frozen'");
      }
    }
    if (j.contains("refine_events")) s.refine_events = j.at("refine_events").get<bool>();
    if (j.contains("output_dir")) s.output_dir = resolve(base_dir, j.at("output_dir").get<std::string>());
  } catch (const json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  Scenario s = parse_scenario(read_file(path), path.parent_path());
  if (s.name == "scenario") s.name = path.stem().string();
  return s;
}

}  // namespace ccomp
