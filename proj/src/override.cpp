#include "ccomp/override.hpp"

#include "ccomp/errors.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace ccomp {

namespace {

class Parser {
 public:
  explicit Parser(const std::string& text) : s_(text) {}

  SelectorNode parse() {
    SelectorNode node = expr();
    skip();
    if (pos_ != s_.size()) fail("trailing characters");
    return node;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    std::ostringstream os;
    os << "selector tree: " << msg << " at position " << pos_ << " in \"" << s_ << "\"";
    throw InvalidParameter(os.str());
  }

  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }

  bool accept(char c) {
    skip();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  SelectorNode expr() {
    skip();
    std::string word;
    while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) {
      word += static_cast<char>(std::tolower(static_cast<unsigned char>(s_[pos_])));
      ++pos_;
    }
    if (word == "min" || word == "max") {
      SelectorNode node;
      node.kind = word == "min" ? SelectorNode::Kind::Min : SelectorNode::Kind::Max;
      if (!accept('(')) fail("expected '('");
      do {
        node.children.push_back(expr());
      } while (accept(','));
      if (!accept(')')) fail("expected ')' or ','");
      return node;
    }
    if (!word.empty() && word != "c") fail("unknown operator '" + word + "'");
    skip();
    std::size_t end = pos_;
    while (end < s_.size() && std::isdigit(static_cast<unsigned char>(s_[end]))) ++end;
    if (end == pos_) fail("expected controller index");
    SelectorNode leaf;
    leaf.leaf = std::stoi(s_.substr(pos_, end - pos_));
    pos_ = end;
    return leaf;
  }

  const std::string& s_;
  std::size_t pos_ = 0;
};

void collect(const SelectorNode& n, std::vector<int>& out) {
  if (n.kind == SelectorNode::Kind::Leaf) {
    out.push_back(n.leaf);
    return;
  }
  for (const auto& c : n.children) collect(c, out);
}

void print(const SelectorNode& n, std::ostringstream& os) {
  if (n.kind == SelectorNode::Kind::Leaf) {
    os << n.leaf;
    return;
  }
  os << (n.kind == SelectorNode::Kind::Min ? "min(" : "max(");
  for (std::size_t i = 0; i < n.children.size(); ++i) {
    if (i) os << ',';
    print(n.children[i], os);
  }
  os << ')';
}

Selection eval(const SelectorNode& n, const ChannelValues& p) {
  if (n.kind == SelectorNode::Kind::Leaf) {
    const double v = p[n.leaf - 1];
    if (std::isnan(v)) throw InvalidParameter("selector: no value for controller C" + std::to_string(n.leaf));
    return {v, n.leaf};
  }
  const bool is_min = n.kind == SelectorNode::Kind::Min;
  Selection best = eval(n.children.front(), p);
  for (std::size_t i = 1; i < n.children.size(); ++i) {
    const Selection s = eval(n.children[i], p);
    const bool better = is_min ? s.value < best.value : s.value > best.value;
    if (better || (s.value == best.value && s.sigma < best.sigma)) best = s;
  }
  return best;
}

}  // namespace

SelectorTree::SelectorTree(SelectorNode root) : root_(std::move(root)) {
  std::vector<int> ls = leaves();
  std::set<int> seen;
  for (int k : ls) {
    if (k < 1 || k > 8) throw InvalidParameter("selector: controller index " + std::to_string(k) + " outside 1..8");
    if (!seen.insert(k).second) throw InvalidParameter("selector: controller C" + std::to_string(k) + " repeated");
  }
  std::function<void(const SelectorNode&)> check = [&](const SelectorNode& n) {
    if (n.kind != SelectorNode::Kind::Leaf && n.children.empty()) throw InvalidParameter("selector: empty node");
    for (const auto& c : n.children) check(c);
  };
  check(root_);
}

SelectorTree SelectorTree::parse(const std::string& text) { return SelectorTree(Parser(text).parse()); }

std::vector<int> SelectorTree::leaves() const {
  std::vector<int> out;
  collect(root_, out);
  return out;
}

std::string SelectorTree::to_string() const {
  std::ostringstream os;
  print(root_, os);
  return os.str();
}

SelectorTree default_tree_gv() { return SelectorTree::parse("max(min(max(1,2),3,4),min(max(5,6),7,8))"); }
SelectorTree default_tree_bov() { return SelectorTree::parse("max(1,2,3,4,min(max(5,6),7,8))"); }

Selection select(const SelectorTree& tree, const ChannelValues& p) { return eval(tree.root(), p); }

std::vector<LatchRule> ramp_latches(bool increasing) {
  const double inf = std::numeric_limits<double>::infinity();
  if (increasing) return {{3, 1, inf, {true, false}}, {7, 5, inf, {true, true}}};
  return {{2, 1, -inf, {true, false}}, {6, 5, -inf, {true, true}}};
}

std::array<ChannelValues, 2> apply_latches(const SwitchingState& state, const std::vector<LatchRule>& rules,
                                           std::array<ChannelValues, 2> p) {
  for (std::size_t r = 0; r < rules.size() && r < state.latched.size(); ++r) {
    if (!state.latched[r]) continue;
    for (int j = 0; j < 2; ++j) {
      if (rules[r].channels[j]) p[j][rules[r].disabled - 1] = rules[r].replacement;
    }
  }
  return p;
}

SwitchingStep evaluate_switching(const SwitchingState& state, const std::array<SelectorTree, 2>& trees,
                                 const std::vector<LatchRule>& rules, const std::array<ChannelValues, 2>& p) {
  const auto q = apply_latches(state, rules, p);
  SwitchingStep out;
  for (int j = 0; j < 2; ++j) {
    const Selection s = select(trees[j], q[j]);
    out.u[j] = s.value;
    out.sigma[j] = s.sigma;
  }
  return out;
}

SwitchingStep step_switching(SwitchingState& state, const std::array<SelectorTree, 2>& trees,
                             const std::vector<LatchRule>& rules, const std::array<ChannelValues, 2>& p, double t) {
  if (state.latched.size() != rules.size()) state.latched.assign(rules.size(), false);
  SwitchingStep out = evaluate_switching(state, trees, rules, p);
  if (!state.initialized) {
    state.initialized = true;
    state.last_event = {t, t};
  } else {
    for (int j = 0; j < 2; ++j) {
      if (out.sigma[j] == state.sigma[j]) continue;
      OverrideEvent ev;
      ev.t = t;
      ev.j = j + 1;
      ev.k_from = state.sigma[j];
      ev.k_to = out.sigma[j];
      ev.delta_p = std::abs(p[j][ev.k_from - 1] - p[j][ev.k_to - 1]);
      ev.dwell = t - state.last_event[j];
      state.last_event[j] = t;
      out.events.push_back(ev);
    }
  }
  state.sigma = out.sigma;
  for (std::size_t r = 0; r < rules.size(); ++r) {
    if (out.sigma[0] == rules[r].trigger || out.sigma[1] == rules[r].trigger) state.latched[r] = true;
  }
  return out;
}

double locate_event(double t_prev, double t_now, const std::function<double(double)>& diff, double tol) {
  double a = t_prev, b = t_now;
  double fa = diff(a), fb = diff(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (!(std::signbit(fa) != std::signbit(fb))) throw DomainError("locate_event: no sign change on the interval");
  while (b - a > tol) {
    const double m = 0.5 * (a + b);
    const double fm = diff(m);
    if (fm == 0.0) return m;
    if (std::signbit(fm) == std::signbit(fa)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace ccomp
