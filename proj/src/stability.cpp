#include "ccomp/stability.hpp"

#include "ccomp/csv.hpp"
#include "ccomp/errors.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace ccomp {

void StabilityBounds::validate() const {
  if (!(lambda > 0.0 && lambda < A)) throw InvalidParameter("stability bounds: need 0 < lambda < A");
  if (!(L > 0.0 && L < A - lambda)) throw InvalidParameter("stability bounds: need 0 < L < A - lambda");
  if (!(delta > 0.0)) throw InvalidParameter("stability bounds: delta must be > 0");
}

StabilityBounds StabilityBounds::parse(const std::string& text) {
  std::vector<double> v;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t comma = text.find(',', start);
    v.push_back(parse_double(text.substr(start, comma == std::string::npos ? std::string::npos : comma - start)));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  if (v.size() != 4) throw ConfigError("bounds must be lambda,A,L,delta");
  StabilityBounds b{v[0], v[1], v[2], v[3]};
  b.validate();
  return b;
}

ScaledError error_coordinates(const PlantState& x, const PlantState& chi, double flow_ref) {
  ScaledError e = x.vec() - chi.vec();
  e[0] /= flow_ref;
  return e;
}

ScaledError state_reset(const PlantState& chi_from, const PlantState& chi_to, double flow_ref) {
  return error_coordinates(chi_from, chi_to, flow_ref);
}

namespace {

// Time from t0 until e stays below delta on [t0, t1); NaN if it does not.
double settle_time(const std::vector<MonitorSample>& trace, int j, double t0, double t1, double delta) {
  double t_settle = t0;
  bool any = false;
  bool last_ok = true;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const auto& s = trace[i];
    if (s.t < t0 || s.t >= t1) continue;
    any = true;
    const double e = s.e_norm[j];
    last_ok = std::isnan(e) || e < delta;
    if (!last_ok) t_settle = i + 1 < trace.size() ? trace[i + 1].t : std::numeric_limits<double>::infinity();
  }
  if (!any) return 0.0;
  if (!last_ok || !(t_settle < t1)) return std::numeric_limits<double>::quiet_NaN();
  return t_settle - t0;
}

}  // namespace

MonitorReport monitor(const std::vector<MonitorSample>& trace, const std::vector<EventSnapshot>& events,
                      const StabilityBounds& bounds, double flow_ref) {
  MonitorReport rep;
  rep.bounds = bounds;
  const double t_end = trace.empty() ? 0.0 : std::nextafter(trace.back().t, std::numeric_limits<double>::infinity());
  const double t_start = trace.empty() ? 0.0 : trace.front().t;

  for (int j = 0; j < 2; ++j) {
    double first = t_end;
    for (const auto& ev : events) {
      if (ev.event.j == j + 1) {
        first = ev.event.t;
        break;
      }
    }
    rep.initial_regulation_ok[j] = !std::isnan(settle_time(trace, j, t_start, first, bounds.delta));
  }

  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& snap = events[i];
    EventCheck c;
    c.t = snap.event.t;
    c.j = snap.event.j;
    c.k_from = snap.event.k_from;
    c.k_to = snap.event.k_to;
    c.dwell = snap.event.dwell;
    c.xt_minus = error_coordinates(snap.x, snap.chi_from, flow_ref).norm();
    c.xt_plus = error_coordinates(snap.x, snap.chi_to, flow_ref).norm();
    c.reset = state_reset(snap.chi_from, snap.chi_to, flow_ref).norm();
    c.inner_ok = c.xt_minus < bounds.lambda;
    c.outer_ok = c.xt_plus < bounds.A;
    c.reset_ok = c.reset < bounds.L;

    double next = t_end;
    for (std::size_t k = i + 1; k < events.size(); ++k) {
      if (events[k].event.j == c.j) {
        next = events[k].event.t;
        break;
      }
    }
    c.time_to_delta = settle_time(trace, c.j - 1, c.t, next, bounds.delta);
    c.regulation_ok = !std::isnan(c.time_to_delta);

    rep.chain_ok = rep.chain_ok && c.inner_ok && c.outer_ok && c.reset_ok;
    rep.regulation_ok = rep.regulation_ok && c.regulation_ok;
    rep.events.push_back(c);
  }
  rep.regulation_ok = rep.regulation_ok && rep.initial_regulation_ok[0] && rep.initial_regulation_ok[1];
  return rep;
}

std::string report_text(const MonitorReport& r) {
  std::ostringstream os;
  os << "stability monitor\n";
  os << "  bounds: lambda=" << r.bounds.lambda << " A=" << r.bounds.A << " L=" << r.bounds.L
     << " delta=" << r.bounds.delta << "\n";
  os << "  events: " << r.events.size() << "\n";
  for (const auto& e : r.events) {
    os << "  t=" << e.t << " u" << e.j << " C" << e.k_from << "->C" << e.k_to << "  |x~-|=" << e.xt_minus
       << (e.inner_ok ? "" : " (>lambda)") << "  |x~+|=" << e.xt_plus << (e.outer_ok ? "" : " (>A)")
       << "  |dx|=" << e.reset << (e.reset_ok ? "" : " (>L)") << "  dwell=" << e.dwell
       << "  t_delta=" << e.time_to_delta << (e.regulation_ok ? "" : " (not settled)") << "\n";
  }
  os << "  initial interval regulated: " << (r.initial_regulation_ok[0] ? "yes" : "no") << "/"
     << (r.initial_regulation_ok[1] ? "yes" : "no") << "\n";
  os << "  practical stability chain: " << (r.chain_ok ? "PASS" : "FAIL") << "\n";
  os << "  perfect regulation: " << (r.regulation_ok ? "PASS" : "FAIL") << "\n";
  return os.str();
}

namespace {
const char* kEventHeader =
    "t,j,k_from,k_to,xt_minus,xt_plus,reset,dwell,time_to_delta,inner_ok,outer_ok,reset_ok,regulation_ok";
std::string flag(bool b) { return b ? "1" : "0"; }
}  // namespace

std::string report_csv(const MonitorReport& r) {
  std::string out;
  out += join_row({"lambda", format_double(r.bounds.lambda)});
  out += join_row({"A", format_double(r.bounds.A)});
  out += join_row({"L", format_double(r.bounds.L)});
  out += join_row({"delta", format_double(r.bounds.delta)});
  out += join_row({"chain_ok", flag(r.chain_ok)});
  out += join_row({"regulation_ok", flag(r.regulation_ok)});
  out += join_row({"initial_regulation_ok_1", flag(r.initial_regulation_ok[0])});
  out += join_row({"initial_regulation_ok_2", flag(r.initial_regulation_ok[1])});
  out += std::string(kEventHeader) + "\n";
  for (const auto& e : r.events) {
    out += join_row({format_double(e.t), std::to_string(e.j), std::to_string(e.k_from), std::to_string(e.k_to),
                     format_double(e.xt_minus), format_double(e.xt_plus), format_double(e.reset),
                     format_double(e.dwell), format_double(e.time_to_delta), flag(e.inner_ok), flag(e.outer_ok),
                     flag(e.reset_ok), flag(e.regulation_ok)});
  }
  return out;
}

MonitorReport parse_report_csv(const std::string& text) {
  const auto rows = parse_csv(text);
  if (rows.size() < 9) throw ConfigError("stability report: truncated");
  auto value = [&](std::size_t i, const char* key) {
    if (rows[i].size() != 2 || rows[i][0] != key) throw ConfigError(std::string("stability report: expected ") + key);
    return rows[i][1];
  };
  auto as_flag = [](const std::string& s) {
    if (s != "0" && s != "1") throw ConfigError("stability report: bad flag '" + s + "'");
    return s == "1";
  };
  MonitorReport r;
  r.bounds.lambda = parse_double(value(0, "lambda"));
  r.bounds.A = parse_double(value(1, "A"));
  r.bounds.L = parse_double(value(2, "L"));
  r.bounds.delta = parse_double(value(3, "delta"));
  r.chain_ok = as_flag(value(4, "chain_ok"));
  r.regulation_ok = as_flag(value(5, "regulation_ok"));
  r.initial_regulation_ok[0] = as_flag(value(6, "initial_regulation_ok_1"));
  r.initial_regulation_ok[1] = as_flag(value(7, "initial_regulation_ok_2"));
  if (join_row(rows[8]) != std::string(kEventHeader) + "\n") throw ConfigError("stability report: bad event header");
  for (std::size_t i = 9; i < rows.size(); ++i) {
    const auto& f = rows[i];
    if (f.size() != 13) throw ConfigError("stability report: bad event row");
    EventCheck e;
    e.t = parse_double(f[0]);
    e.j = std::stoi(f[1]);
    e.k_from = std::stoi(f[2]);
    e.k_to = std::stoi(f[3]);
    e.xt_minus = parse_double(f[4]);
    e.xt_plus = parse_double(f[5]);
    e.reset = parse_double(f[6]);
    e.dwell = parse_double(f[7]);
    e.time_to_delta = parse_double(f[8]);
    e.inner_ok = as_flag(f[9]);
    e.outer_ok = as_flag(f[10]);
    e.reset_ok = as_flag(f[11]);
    e.regulation_ok = as_flag(f[12]);
    r.events.push_back(e);
  }
  return r;
}

}  // namespace ccomp
