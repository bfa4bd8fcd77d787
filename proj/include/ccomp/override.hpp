#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace ccomp {

/// MIN/MAX expression over controller indices 1..8.
struct SelectorNode {
  enum class Kind { Leaf, Min, Max };
  Kind kind = Kind::Leaf;
  int leaf = 0;
  std::vector<SelectorNode> children;
};

class SelectorTree {
 public:
  SelectorTree() = default;
  explicit SelectorTree(SelectorNode root);

  /// Prefix form, e.g. "max(min(max(1,2),3,4),min(max(5,6),7,8))". Leaves may be written
  /// as "C3". Throws InvalidParameter on syntax errors and repeated leaves.
  static SelectorTree parse(const std::string& text);

  const SelectorNode& root() const { return root_; }
  std::vector<int> leaves() const;
  std::string to_string() const;

 private:
  SelectorNode root_;
};

/// Default trees: GV channel and BOV channel.
SelectorTree default_tree_gv();
SelectorTree default_tree_bov();

/// Controller outputs for one input channel, index k-1. NaN marks a missing value.
using ChannelValues = std::array<double, 8>;

struct Selection {
  double value = 0.0;
  int sigma = 0;
};

/// Recursive MIN/MAX; equal values resolve to the lowest controller index.
/// Throws InvalidParameter when a leaf has no (NaN) value.
Selection select(const SelectorTree& tree, const ChannelValues& p);

/// Once any channel selects `trigger`, controller `disabled` is evaluated as `replacement`
/// (+inf or -inf) on the flagged channels for the rest of the run.
struct LatchRule {
  int trigger = 3;
  int disabled = 1;
  double replacement = 0.0;
  std::array<bool, 2> channels{true, true};
};

/// Latches for a ramp in the given direction: C1 after C3 (C2 if decreasing), C5 after C7 (C6).
/// The SISO rule only touches the guide-vane channel; C1's BOV output is a constant zero.
std::vector<LatchRule> ramp_latches(bool increasing);

struct OverrideEvent {
  double t = 0.0;
  int j = 0;  // input channel, 1 = guide vane, 2 = BOV
  int k_from = 0;
  int k_to = 0;
  double delta_p = 0.0;
  double dwell = 0.0;  // time since the previous event on this channel (or since start)
};

struct SwitchingState {
  std::array<int, 2> sigma{0, 0};
  std::vector<bool> latched;  // per rule
  std::array<double, 2> last_event{0.0, 0.0};
  bool initialized = false;
};

struct SwitchingStep {
  std::array<double, 2> u{0.0, 0.0};
  std::array<int, 2> sigma{0, 0};
  std::vector<OverrideEvent> events;
};

/// Applies latches to the raw outputs p[j][k-1].
std::array<ChannelValues, 2> apply_latches(const SwitchingState& state, const std::vector<LatchRule>& rules,
                                           std::array<ChannelValues, 2> p);

/// Pure selection with the current latches (no state change); used inside integrator stages.
SwitchingStep evaluate_switching(const SwitchingState& state, const std::array<SelectorTree, 2>& trees,
                                 const std::vector<LatchRule>& rules, const std::array<ChannelValues, 2>& p);

/// Selection at an accepted time step: emits events for sigma changes and updates latches.
SwitchingStep step_switching(SwitchingState& state, const std::array<SelectorTree, 2>& trees,
                             const std::vector<LatchRule>& rules, const std::array<ChannelValues, 2>& p, double t);

/// Bisection for the zero of diff on [t_prev, t_now]. Throws DomainError without a sign change.
double locate_event(double t_prev, double t_now, const std::function<double(double)>& diff, double tol = 1e-6);

}  // namespace ccomp
