#pragma once

#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace ccomp {

/// One cubic piece a3*c^3 + a2*c^2 + a1*c + a0 of a guide-vane isoline, valid on [c_lo, c_hi).
struct CubicSegment {
  double a3 = 0.0;
  double a2 = 0.0;
  double a1 = 0.0;
  double a0 = 0.0;
  double c_lo = 0.0;
  double c_hi = 0.0;

  double value(double c2) const { return ((a3 * c2 + a2) * c2 + a1) * c2 + a0; }
  double slope(double c2) const { return (3.0 * a3 * c2 + 2.0 * a2) * c2 + a1; }
};

/// Stable part of the characteristic at a fixed guide-vane position. Segment 0 starts at the
/// surge limit, the last segment ends at the choke limit. The breakpoints double as the
/// beta-line labels shared by every isoline of a map.
struct IsoCharacteristic {
  double r_gv = 0.0;
  std::vector<CubicSegment> segments;
  std::vector<double> beta_breakpoints;

  double surge_flow() const { return segments.front().c_lo; }
  double choke_flow() const { return segments.back().c_hi; }

  /// Index of the segment holding c2 (clamped to the valid index range).
  std::size_t segment_index(double c2) const;
  double value(double c2) const;
  double slope(double c2) const;

  /// Builds an isoline from breakpoints and per-segment [a3, a2, a1, a0] rows.
  static IsoCharacteristic from_coefficients(double r_gv, std::vector<double> breakpoints,
                                             const std::vector<std::array<double, 4>>& coefficients);
};

struct MapViolation {
  std::string location;
  std::string message;
};

struct SurgePoint {
  double c2 = 0.0;
  double work = 0.0;
};

/// Static compressor map Y_C(c2, r_gv) built from isolines with beta-line interpolation.
class CompressorMap {
 public:
  CompressorMap() = default;
  /// Throws InvalidParameter if validate() reports any violation.
  explicit CompressorMap(std::vector<IsoCharacteristic> isolines);
  /// No validation; used to inspect defective maps.
  static CompressorMap unchecked(std::vector<IsoCharacteristic> isolines);

  const std::vector<IsoCharacteristic>& isolines() const { return isolines_; }
  std::pair<double, double> r_gv_range() const;
  std::size_t segment_count() const { return isolines_.front().segments.size(); }

  /// Specific work Y_C in J/kg. Throws MapRangeError outside the stable range.
  double evaluate(double c2, double r_gv) const;
  /// Same surface continued past surge, choke and the guide-vane range by extrapolating the
  /// end segments and isolines. Only meant for virtual steady states.
  double evaluate_extended(double c2, double r_gv) const;
  /// Beta-interpolated surge point (left end of segment 1).
  SurgePoint surge_limit(double r_gv) const;
  /// Beta-interpolated choke flow (right end of the last segment).
  double choke_flow(double r_gv) const;
  /// Beta-interpolated breakpoint list at r_gv.
  std::vector<double> beta_grid(double r_gv) const;
  /// Mid-range flow used as the reference velocity for scaling.
  double reference_flow() const;

  std::vector<MapViolation> validate() const;

 private:
  struct Bracket {
    std::size_t lower = 0;
    double weight = 0.0;  // weight of isoline lower+1
  };
  Bracket bracket(double r_gv) const;
  double blend(double c2, std::size_t iso, double t) const;

  std::vector<IsoCharacteristic> isolines_;
};

/// Validation of map invariants; an empty list means well-formed.
std::vector<MapViolation> validate_map(const CompressorMap& map);

double eval_map(double c2, double r_gv, const CompressorMap& map);
SurgePoint surge_limit(double r_gv, const CompressorMap& map);

struct MapSample {
  double c2 = 0.0;
  double work = 0.0;
};

struct IsolineFit {
  IsoCharacteristic isoline;
  double rms_residual = 0.0;
  double max_residual = 0.0;
  double condition_estimate = 0.0;
  bool ill_conditioned = false;
};

/// Least-squares cubic per segment with value and slope continuity at interior breakpoints.
/// Throws InvalidParameter on bad breakpoints and NumericalFailure on rank deficiency.
IsolineFit fit_isoline(std::span<const MapSample> samples, std::span<const double> breakpoints,
                       double r_gv = 0.0);

}  // namespace ccomp
