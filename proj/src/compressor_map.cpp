#include "ccomp/compressor_map.hpp"

#include "ccomp/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ccomp {

namespace {

constexpr double kContinuityTol = 1e-8;
// Relative slack accepted at the surge/choke ends before reporting a range error.
constexpr double kEdgeTol = 1e-12;

std::string fmt_location(std::size_t iso, double r_gv) {
  std::ostringstream os;
  os << "isoline " << iso << " (r_gv=" << r_gv << ")";
  return os.str();
}

}  // namespace

std::size_t IsoCharacteristic::segment_index(double c2) const {
  const auto it = std::upper_bound(beta_breakpoints.begin() + 1, beta_breakpoints.end() - 1, c2);
  return static_cast<std::size_t>(it - (beta_breakpoints.begin() + 1));
}

double IsoCharacteristic::value(double c2) const { return segments[segment_index(c2)].value(c2); }

double IsoCharacteristic::slope(double c2) const { return segments[segment_index(c2)].slope(c2); }

IsoCharacteristic IsoCharacteristic::from_coefficients(double r_gv, std::vector<double> breakpoints,
                                                       const std::vector<std::array<double, 4>>& coefficients) {
  if (breakpoints.size() != coefficients.size() + 1) {
    throw InvalidParameter("isoline needs one more breakpoint than coefficient rows");
  }
  IsoCharacteristic iso;
  iso.r_gv = r_gv;
  for (std::size_t s = 0; s < coefficients.size(); ++s) {
    const auto& a = coefficients[s];
    iso.segments.push_back({a[0], a[1], a[2], a[3], breakpoints[s], breakpoints[s + 1]});
  }
  iso.beta_breakpoints = std::move(breakpoints);
  return iso;
}

CompressorMap::CompressorMap(std::vector<IsoCharacteristic> isolines) : isolines_(std::move(isolines)) {
  const auto violations = validate();
  if (!violations.empty()) {
    std::ostringstream os;
    os << "invalid compressor map: " << violations.front().location << ": " << violations.front().message;
    if (violations.size() > 1) os << " (+" << violations.size() - 1 << " more)";
    throw InvalidParameter(os.str());
  }
}

CompressorMap CompressorMap::unchecked(std::vector<IsoCharacteristic> isolines) {
  CompressorMap map;
  map.isolines_ = std::move(isolines);
  return map;
}

std::pair<double, double> CompressorMap::r_gv_range() const {
  return {isolines_.front().r_gv, isolines_.back().r_gv};
}

CompressorMap::Bracket CompressorMap::bracket(double r_gv) const {
  const auto [lo, hi] = r_gv_range();
  const double slack = kEdgeTol * std::max(1.0, hi - lo);
  if (!(r_gv >= lo - slack && r_gv <= hi + slack)) {
    std::ostringstream os;
    os << "guide-vane position " << r_gv << " outside map range [" << lo << ", " << hi << "]";
    throw MapRangeError(MapRangeError::Kind::GuideVaneRange, os.str());
  }
  r_gv = std::clamp(r_gv, lo, hi);
  std::size_t i = 0;
  while (i + 2 < isolines_.size() && r_gv >= isolines_[i + 1].r_gv) ++i;
  const double r0 = isolines_[i].r_gv;
  const double r1 = isolines_[i + 1].r_gv;
  return {i, (r_gv - r0) / (r1 - r0)};
}

std::vector<double> CompressorMap::beta_grid(double r_gv) const {
  const auto b = bracket(r_gv);
  const auto& p0 = isolines_[b.lower].beta_breakpoints;
  const auto& p1 = isolines_[b.lower + 1].beta_breakpoints;
  std::vector<double> grid(p0.size());
  for (std::size_t s = 0; s < p0.size(); ++s) grid[s] = (1.0 - b.weight) * p0[s] + b.weight * p1[s];
  return grid;
}

double CompressorMap::evaluate(double c2, double r_gv) const {
  const auto b = bracket(r_gv);
  const auto& lower = isolines_[b.lower];
  const auto& upper = isolines_[b.lower + 1];
  const auto& p0 = lower.beta_breakpoints;
  const auto& p1 = upper.beta_breakpoints;
  const double t = b.weight;
  const std::size_t n = p0.size() - 1;

  const double surge = (1.0 - t) * p0[0] + t * p1[0];
  const double choke = (1.0 - t) * p0[n] + t * p1[n];
  const double slack = kEdgeTol * std::max(1.0, std::abs(choke));
  if (c2 < surge - slack) {
    std::ostringstream os;
    os << "flow c2=" << c2 << " below surge flow " << surge << " at r_gv=" << r_gv;
    throw MapRangeError(MapRangeError::Kind::BelowSurge, os.str());
  }
  if (c2 > choke + slack || !std::isfinite(c2)) {
    std::ostringstream os;
    os << "flow c2=" << c2 << " above choke flow " << choke << " at r_gv=" << r_gv;
    throw MapRangeError(MapRangeError::Kind::AboveChoke, os.str());
  }

  if (t == 0.0) return lower.value(c2);
  if (t == 1.0) return upper.value(c2);
  return blend(c2, b.lower, t);
}

double CompressorMap::blend(double c2, std::size_t iso, double t) const {
  const auto& lower = isolines_[iso];
  const auto& upper = isolines_[iso + 1];
  const auto& p0 = lower.beta_breakpoints;
  const auto& p1 = upper.beta_breakpoints;
  const std::size_t n = p0.size() - 1;

  // Locate the beta segment on the blended grid; u may leave [0, 1] on the end segments.
  std::size_t s = 0;
  double lo = (1.0 - t) * p0[0] + t * p1[0];
  double hi = (1.0 - t) * p0[1] + t * p1[1];
  while (s + 1 < n && c2 >= hi) {
    ++s;
    lo = hi;
    hi = (1.0 - t) * p0[s + 1] + t * p1[s + 1];
  }
  const double u = (c2 - lo) / (hi - lo);
  const double c_lower = p0[s] + u * (p0[s + 1] - p0[s]);
  const double c_upper = p1[s] + u * (p1[s + 1] - p1[s]);
  return (1.0 - t) * lower.segments[s].value(c_lower) + t * upper.segments[s].value(c_upper);
}

double CompressorMap::evaluate_extended(double c2, double r_gv) const {
  if (!std::isfinite(c2) || !std::isfinite(r_gv)) {
    throw MapRangeError(MapRangeError::Kind::AboveChoke, "non-finite map argument");
  }
  std::size_t i = 0;
  while (i + 2 < isolines_.size() && r_gv >= isolines_[i + 1].r_gv) ++i;
  const double r0 = isolines_[i].r_gv;
  const double r1 = isolines_[i + 1].r_gv;
  return blend(c2, i, (r_gv - r0) / (r1 - r0));
}

SurgePoint CompressorMap::surge_limit(double r_gv) const {
  const auto b = bracket(r_gv);
  const double t = b.weight;
  const auto& lower = isolines_[b.lower];
  const auto& upper = isolines_[b.lower + 1];
  SurgePoint sp;
  sp.c2 = (1.0 - t) * lower.surge_flow() + t * upper.surge_flow();
  sp.work = (1.0 - t) * lower.segments.front().value(lower.surge_flow()) +
            t * upper.segments.front().value(upper.surge_flow());
  return sp;
}

double CompressorMap::choke_flow(double r_gv) const {
  const auto b = bracket(r_gv);
  return (1.0 - b.weight) * isolines_[b.lower].choke_flow() + b.weight * isolines_[b.lower + 1].choke_flow();
}

double CompressorMap::reference_flow() const {
  double surge = isolines_.front().surge_flow();
  double choke = isolines_.front().choke_flow();
  for (const auto& iso : isolines_) {
    surge = std::min(surge, iso.surge_flow());
    choke = std::max(choke, iso.choke_flow());
  }
  return 0.5 * (surge + choke);
}

std::vector<MapViolation> CompressorMap::validate() const {
  std::vector<MapViolation> out;
  if (isolines_.size() < 2) {
    out.push_back({"map", "at least two isolines required"});
    return out;
  }
  const std::size_t n_seg = isolines_.front().segments.size();
  for (std::size_t i = 0; i < isolines_.size(); ++i) {
    const auto& iso = isolines_[i];
    const std::string where = fmt_location(i, iso.r_gv);
    if (i > 0 && !(iso.r_gv > isolines_[i - 1].r_gv)) {
      out.push_back({where, "r_gv not strictly increasing (ordering violation)"});
    }
    if (iso.segments.empty()) {
      out.push_back({where, "no segments"});
      continue;
    }
    if (iso.segments.size() != n_seg) {
      out.push_back({where, "segment count differs from first isoline (beta-lines must be shared)"});
    }
    if (iso.beta_breakpoints.size() != iso.segments.size() + 1) {
      out.push_back({where, "beta breakpoint count does not match segments"});
    }
    for (std::size_t s = 0; s < iso.segments.size(); ++s) {
      const auto& seg = iso.segments[s];
      const std::string seg_where = where + " segment " + std::to_string(s + 1);
      if (!(seg.c_lo < seg.c_hi)) out.push_back({seg_where, "c_lo must be below c_hi"});
      if (iso.beta_breakpoints.size() == iso.segments.size() + 1 &&
          (seg.c_lo != iso.beta_breakpoints[s] || seg.c_hi != iso.beta_breakpoints[s + 1])) {
        out.push_back({seg_where, "segment bounds differ from beta breakpoints"});
      }
      if (s + 1 < iso.segments.size()) {
        const auto& next = iso.segments[s + 1];
        std::ostringstream bp;
        bp << where << " breakpoint c2=" << seg.c_hi;
        if (seg.c_hi != next.c_lo) {
          out.push_back({bp.str(), "segments not contiguous"});
          continue;
        }
        const double c = seg.c_hi;
        const double y_l = seg.value(c);
        const double y_r = next.value(c);
        if (std::abs(y_l - y_r) >= kContinuityTol * std::max(1.0, std::abs(y_l))) {
          out.push_back({bp.str(), "value discontinuity (C0 violation)"});
        }
        const double d_l = seg.slope(c);
        const double d_r = next.slope(c);
        if (std::abs(d_l - d_r) >= kContinuityTol * std::max(1.0, std::abs(d_l))) {
          std::ostringstream msg;
          msg << "derivative jump " << (d_r - d_l) << " (C1 violation)";
          out.push_back({bp.str(), msg.str()});
        }
      }
    }
  }
  return out;
}

std::vector<MapViolation> validate_map(const CompressorMap& map) { return map.validate(); }

double eval_map(double c2, double r_gv, const CompressorMap& map) { return map.evaluate(c2, r_gv); }

SurgePoint surge_limit(double r_gv, const CompressorMap& map) { return map.surge_limit(r_gv); }

IsolineFit fit_isoline(std::span<const MapSample> samples, std::span<const double> breakpoints, double r_gv) {
  const std::size_t n = breakpoints.size() < 2 ? 0 : breakpoints.size() - 1;
  if (n == 0) throw InvalidParameter("fit_isoline: at least two breakpoints required");
  for (std::size_t s = 0; s < n; ++s) {
    if (!(breakpoints[s] < breakpoints[s + 1])) {
      throw InvalidParameter("fit_isoline: breakpoints must be strictly increasing");
    }
  }
  std::vector<int> per_segment(n, 0);
  for (const auto& p : samples) {
    if (p.c2 < breakpoints.front() || p.c2 > breakpoints.back()) {
      throw InvalidParameter("fit_isoline: sample outside breakpoint span");
    }
    const auto it = std::upper_bound(breakpoints.begin() + 1, breakpoints.end() - 1, p.c2);
    ++per_segment[static_cast<std::size_t>(it - (breakpoints.begin() + 1))];
  }
  for (std::size_t s = 0; s < n; ++s) {
    if (per_segment[s] < 4) {
      throw NumericalFailure("fit_isoline: rank deficient, segment " + std::to_string(s + 1) +
                             " has fewer than 4 samples");
    }
  }

  // Local cubic per segment in t = (c - c_lo) / h: p0 + p1 t + p2 t^2 + p3 t^3.
  const Eigen::Index cols = static_cast<Eigen::Index>(4 * n);
  Eigen::MatrixXd design = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(samples.size()), cols);
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const double c = samples[k].c2;
    const auto it = std::upper_bound(breakpoints.begin() + 1, breakpoints.end() - 1, c);
    const auto s = static_cast<Eigen::Index>(it - (breakpoints.begin() + 1));
    const double h = breakpoints[s + 1] - breakpoints[s];
    const double t = (c - breakpoints[s]) / h;
    const auto row = static_cast<Eigen::Index>(k);
    design(row, 4 * s + 0) = 1.0;
    design(row, 4 * s + 1) = t;
    design(row, 4 * s + 2) = t * t;
    design(row, 4 * s + 3) = t * t * t;
    rhs(row) = samples[k].work;
  }

  const Eigen::Index n_con = static_cast<Eigen::Index>(2 * (n - 1));
  Eigen::MatrixXd null_basis;
  if (n_con == 0) {
    null_basis = Eigen::MatrixXd::Identity(cols, cols);
  } else {
    Eigen::MatrixXd con = Eigen::MatrixXd::Zero(n_con, cols);
    for (Eigen::Index s = 0; s + 1 < static_cast<Eigen::Index>(n); ++s) {
      const double h0 = breakpoints[s + 1] - breakpoints[s];
      const double h1 = breakpoints[s + 2] - breakpoints[s + 1];
      // value: p0 + p1 + p2 + p3 = q0
      con.row(2 * s).segment(4 * s, 4) << 1.0, 1.0, 1.0, 1.0;
      con(2 * s, 4 * (s + 1)) = -1.0;
      // slope: (p1 + 2 p2 + 3 p3) / h0 = q1 / h1
      con.row(2 * s + 1).segment(4 * s, 4) << 0.0, 1.0 / h0, 2.0 / h0, 3.0 / h0;
      con(2 * s + 1, 4 * (s + 1) + 1) = -1.0 / h1;
    }
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(con.transpose());
    const Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(cols, cols);
    null_basis = q.rightCols(cols - n_con);
  }

  const Eigen::MatrixXd reduced = design * null_basis;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(reduced, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const double smax = sv(0);
  const double smin = sv(sv.size() - 1);
  if (!(smin > 1e-13 * smax)) {
    throw NumericalFailure("fit_isoline: rank deficient least-squares system");
  }
  const Eigen::VectorXd z = svd.solve(rhs);
  const Eigen::VectorXd theta = null_basis * z;

  IsolineFit fit;
  fit.condition_estimate = smax / smin;
  fit.ill_conditioned = fit.condition_estimate > 1e10;
  fit.isoline.r_gv = r_gv;
  fit.isoline.beta_breakpoints.assign(breakpoints.begin(), breakpoints.end());
  for (std::size_t s = 0; s < n; ++s) {
    const double c_lo = breakpoints[s];
    const double h = breakpoints[s + 1] - c_lo;
    const double al = 1.0 / h;
    const double be = -c_lo / h;
    const auto base = static_cast<Eigen::Index>(4 * s);
    const double p0 = theta(base), p1 = theta(base + 1), p2 = theta(base + 2), p3 = theta(base + 3);
    CubicSegment seg;
    seg.a3 = p3 * al * al * al;
    seg.a2 = p2 * al * al + 3.0 * p3 * al * al * be;
    seg.a1 = p1 * al + 2.0 * p2 * al * be + 3.0 * p3 * al * be * be;
    seg.a0 = p0 + p1 * be + p2 * be * be + p3 * be * be * be;
    seg.c_lo = c_lo;
    seg.c_hi = breakpoints[s + 1];
    fit.isoline.segments.push_back(seg);
  }

  double sum_sq = 0.0;
  for (const auto& p : samples) {
    const double r = fit.isoline.value(p.c2) - p.work;
    sum_sq += r * r;
    fit.max_residual = std::max(fit.max_residual, std::abs(r));
  }
  fit.rms_residual = samples.empty() ? 0.0 : std::sqrt(sum_sq / static_cast<double>(samples.size()));
  return fit;
}

}  // namespace ccomp
