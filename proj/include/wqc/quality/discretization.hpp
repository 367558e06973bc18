#pragma once

#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <tuple>
#include <vector>

#include "wqc/errors.hpp"
#include "wqc/network/incidence.hpp"
#include "wqc/network/network.hpp"

namespace wqc {

struct LwCoefficients {
  double lower;   // weight on the upstream neighbour
  double center;
  double upper;   // weight on the downstream neighbour
};

// CFL numbers within this distance of 1 are treated as exactly 1.
inline constexpr double kCflSlack = 1e-12;

inline LwCoefficients lw_coefficients(double cfl) {
  if (cfl > 1.0 && cfl <= 1.0 + kCflSlack) cfl = 1.0;
  if (!(cfl >= 0.0 && cfl <= 1.0))
    throw ModelError("CFL violation: Courant number " + detail::fmt_double(cfl) +
                     " outside [0, 1]");
  return {0.5 * cfl * (1.0 + cfl), 1.0 - cfl * cfl, -0.5 * cfl * (1.0 - cfl)};
}

inline double pipe_reaction_constant(double kb, double kw, double kf, double diameter) {
  if (kw == 0.0) return kb;
  const double den = diameter * (kw + kf);
  if (den == 0.0 || !std::isfinite(den))
    throw ModelError("pipe reaction constant: zero denominator D(kw + kf)");
  return kb + kw * kf / den;
}

inline double pipe_area(const Pipe& p) {
  return std::numbers::pi * p.diameter * p.diameter / 4.0;
}

struct Discretization {
  std::vector<int> segments;  // per pipe
  std::vector<double> dx;     // m, per pipe
  std::vector<double> cfl;    // per pipe, filled once dt is known
  double dt = 0.0;            // s
  int total_segments() const { return std::accumulate(segments.begin(), segments.end(), 0); }
};

inline Discretization make_discretization(const WaterNetwork& net, const std::vector<int>& segments) {
  if (int(segments.size()) != int(net.pipes.size()))
    throw ConfigError("need one segment count per pipe");
  Discretization d;
  d.segments = segments;
  for (size_t p = 0; p < segments.size(); ++p) {
    if (segments[p] < 1) throw ConfigError("pipe '" + net.pipes[p].id + "' needs at least one segment");
    d.dx.push_back(net.pipes[p].length / segments[p]);
  }
  return d;
}

inline Discretization uniform_discretization(const WaterNetwork& net, int segments) {
  return make_discretization(net, std::vector<int>(net.pipes.size(), segments));
}

// Largest step <= dt_max that splits `align_s` into a whole number of steps.
// For integer `align_s` and dt_max >= 1 the step is an integer divisor.
inline double aligned_step(double dt_max, double align_s) {
  auto near_int = [](double v) { return std::abs(v - std::round(v)) <= 1e-9 * std::max(1.0, std::abs(v)); };
  if (dt_max >= align_s) return align_s;
  if (near_int(align_s) && dt_max >= 1.0 - 1e-9) {
    const long long a = std::llround(align_s);
    long long d = (long long)std::floor(dt_max * (1.0 + kCflSlack));
    for (; d >= 1; --d)
      if (a % d == 0) return double(d);
  }
  return align_s / std::ceil(align_s / dt_max - 1e-9);
}

// Minimum over flowing pipes of dx/|v|, aligned to `align_s`; fills d.dt and d.cfl.
inline double compute_time_step(const WaterNetwork& net, Discretization& d,
                                const std::vector<double>& link_flow, double align_s) {
  double dt_max = INFINITY;
  std::vector<double> speed(net.pipes.size(), 0.0);
  for (size_t p = 0; p < net.pipes.size(); ++p) {
    speed[p] = std::abs(link_flow.at(p)) / pipe_area(net.pipes[p]);
    if (speed[p] > 0.0) dt_max = std::min(dt_max, d.dx[p] / speed[p]);
  }
  if (!std::isfinite(dt_max)) throw ModelError("stagnant network: no pipe carries flow");
  d.dt = aligned_step(dt_max, align_s);
  d.cfl.resize(net.pipes.size());
  for (size_t p = 0; p < net.pipes.size(); ++p) {
    double c = speed[p] * d.dt / d.dx[p];
    if (c > 1.0 && c <= 1.0 + kCflSlack) c = 1.0;
    d.cfl[p] = c;
  }
  return d.dt;
}

// Layout of the state vector: junctions, reservoirs, tanks, pipe segments
// (declaration order, segments in declared direction), pumps, valves.
class StateIndexMap {
 public:
  StateIndexMap() = default;
  StateIndexMap(const WaterNetwork& net, const std::vector<int>& segments)
      : counts_(net.counts()), segments_(segments) {
    seg_offset_.resize(segments.size());
    int off = counts_.nodes();
    for (size_t p = 0; p < segments.size(); ++p) {
      seg_offset_[p] = off;
      off += segments[p];
    }
    pump0_ = off;
    valve0_ = pump0_ + counts_.pumps;
    size_ = valve0_ + counts_.valves;
    for (int n = 0; n < net.node_count(); ++n) ids_.push_back(net.node_id(n));
    for (int l = 0; l < net.link_count(); ++l) ids_.push_back(net.link_id(l));
  }

  int size() const { return size_; }
  int node_count() const { return counts_.nodes(); }
  int segment_count() const { return pump0_ - counts_.nodes(); }
  const ComponentCounts& counts() const { return counts_; }
  const std::vector<int>& segments() const { return segments_; }

  int node(int n) const { return n; }
  int segment(int pipe, int k) const { return seg_offset_[pipe] + k; }  // k 0-based, declared order
  int pump(int m) const { return pump0_ + m; }
  int valve(int v) const { return valve0_ + v; }
  // State of a pump or valve given its global link index.
  int short_link(int l) const { return pump0_ + (l - counts_.pipes); }

  // Entity names: node id, pump/valve id, pipe id (all segments) or "pipe:k"
  // with k the 1-based segment in declared direction.
  std::vector<int> resolve(const std::string& name) const {
    std::string base = name;
    int seg = 0;
    const auto c = name.rfind(':');
    const bool has_seg = c != std::string::npos;
    if (has_seg) {
      base = name.substr(0, c);
      try {
        size_t used = 0;
        seg = std::stoi(name.substr(c + 1), &used);
        if (used != name.size() - c - 1) throw std::invalid_argument("");
      } catch (const std::exception&) {
        throw ConfigError("bad segment reference '" + name + "'");
      }
    }
    for (size_t i = 0; i < ids_.size(); ++i) {
      if (ids_[i] != base) continue;
      const int nn = counts_.nodes();
      const int idx = int(i);
      if (idx < nn) {
        if (has_seg) throw ConfigError("segment index on node '" + base + "'");
        return {idx};
      }
      const int l = idx - nn;
      if (l >= counts_.pipes) {
        if (has_seg) throw ConfigError("segment index on pump/valve '" + base + "'");
        return {short_link(l)};
      }
      if (has_seg) {
        if (seg < 1 || seg > segments_[l])
          throw ConfigError("segment " + std::to_string(seg) + " out of range for pipe '" + base + "'");
        return {segment(l, seg - 1)};
      }
      std::vector<int> all(segments_[l]);
      std::iota(all.begin(), all.end(), seg_offset_[l]);
      return all;
    }
    throw ConfigError("unknown entity '" + name + "'");
  }

  // Inverse map for export: "J2", "P23:7", "M12".
  std::string name(int idx) const {
    const int nn = counts_.nodes();
    if (idx < nn) return ids_[idx];
    if (idx >= pump0_) return ids_[nn + counts_.pipes + (idx - pump0_)];
    for (size_t p = 0; p < segments_.size(); ++p)
      if (idx < seg_offset_[p] + segments_[p])
        return ids_[nn + p] + ":" + std::to_string(idx - seg_offset_[p] + 1);
    return "?";
  }

 private:
  ComponentCounts counts_;
  std::vector<int> segments_;
  std::vector<int> seg_offset_;
  std::vector<std::string> ids_;
  int pump0_ = 0, valve0_ = 0, size_ = 0;
};

}  // namespace wqc
