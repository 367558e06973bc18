#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "wqc/errors.hpp"
#include "wqc/harness/scenario.hpp"

namespace wqc {

// Banded dosing table over the deviation statistic. Intervals are half-open
// [lower, upper) except that the interval reaching 0 also owns 0.
class RuleTable {
 public:
  RuleTable(std::vector<RbcRule> rules, double y_ref) : rules_(std::move(rules)), y_ref_(y_ref) {
    if (rules_.empty()) throw ConfigError("rule table is empty");
    std::sort(rules_.begin(), rules_.end(), [](const RbcRule& a, const RbcRule& b) { return a.lower < b.lower; });
    for (const auto& r : rules_) {
      if (!(r.lower < r.upper)) throw ConfigError("rule interval must have lower < upper");
      if (r.dose_mg_per_min < 0.0) throw ConfigError("rule dose must be nonnegative");
    }
    constexpr double tol = 1e-12;
    if (rules_.front().lower > -y_ref_ + tol) throw ConfigError("rule table does not cover -y_ref");
    if (rules_.back().upper < -tol) throw ConfigError("rule table does not cover 0");
    for (size_t i = 1; i < rules_.size(); ++i) {
      if (rules_[i].lower < rules_[i - 1].upper - tol) throw ConfigError("rule intervals overlap");
      if (rules_[i].lower > rules_[i - 1].upper + tol) throw ConfigError("rule intervals leave a gap");
    }
  }

  // Deviation is clamped into [-y_ref, 0] first.
  double dose(double deviation) const {
    const double d = std::clamp(deviation, -y_ref_, 0.0);
    for (const auto& r : rules_)
      if (d >= r.lower && d < r.upper) return r.dose_mg_per_min;
    return rules_.back().dose_mg_per_min;  // d == 0 at the closed end
  }

  const std::vector<RbcRule>& rules() const { return rules_; }

 private:
  std::vector<RbcRule> rules_;
  double y_ref_;
};

// Mean over the monitored values of (value - y_ref); a pipe probe already
// averages its segments.
inline double rbc_deviation(const std::vector<double>& monitored, double y_ref) {
  if (monitored.empty()) throw ConfigError("rule-based control needs monitored entities");
  double s = 0.0;
  for (double v : monitored) s += v - y_ref;
  return s / double(monitored.size());
}

inline double rbc_control(const RuleTable& rules, const std::vector<double>& monitored, double y_ref) {
  return rules.dose(rbc_deviation(monitored, y_ref));
}

}  // namespace wqc
