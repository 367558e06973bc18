#pragma once

#include <charconv>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wqc/errors.hpp"

namespace wqc {

enum class NodeKind { Junction, Reservoir, Tank };
enum class LinkKind { Pipe, Pump, Valve };

struct Junction {
  std::string id;
  bool operator==(const Junction&) const = default;
};

struct Reservoir {
  std::string id;
  double source = 0.0;  // mg/L
  bool operator==(const Reservoir&) const = default;
};

struct Tank {
  std::string id;
  double kb = 0.0;  // bulk decay, 1/h
  bool operator==(const Tank&) const = default;
};

struct Pipe {
  std::string id, from, to;
  double length = 0.0;    // m
  double diameter = 0.0;  // m
  double kb = 0.0, kw = 0.0, kf = 0.0;  // 1/h
  bool operator==(const Pipe&) const = default;
};

// Pumps and valves are zero-length links; only the endpoints matter here.
struct ShortLink {
  std::string id, from, to;
  bool operator==(const ShortLink&) const = default;
};

struct ComponentCounts {
  int junctions = 0, reservoirs = 0, tanks = 0, pipes = 0, pumps = 0, valves = 0;

  int nodes() const { return junctions + reservoirs + tanks; }
  int links() const { return pipes + pumps + valves; }
  bool operator==(const ComponentCounts&) const = default;
};

// Nodes are indexed junctions, reservoirs, tanks; links pipes, pumps, valves.
// Ids share one namespace so an id names exactly one entity.
class WaterNetwork {
 public:
  std::vector<Junction> junctions;
  std::vector<Reservoir> reservoirs;
  std::vector<Tank> tanks;
  std::vector<Pipe> pipes;
  std::vector<ShortLink> pumps;
  std::vector<ShortLink> valves;

  ComponentCounts counts() const {
    return {int(junctions.size()), int(reservoirs.size()), int(tanks.size()),
            int(pipes.size()),     int(pumps.size()),      int(valves.size())};
  }
  int node_count() const { return counts().nodes(); }
  int link_count() const { return counts().links(); }

  NodeKind node_kind(int n) const {
    if (n < int(junctions.size())) return NodeKind::Junction;
    if (n < int(junctions.size() + reservoirs.size())) return NodeKind::Reservoir;
    return NodeKind::Tank;
  }
  LinkKind link_kind(int l) const {
    if (l < int(pipes.size())) return LinkKind::Pipe;
    if (l < int(pipes.size() + pumps.size())) return LinkKind::Pump;
    return LinkKind::Valve;
  }

  const std::string& node_id(int n) const {
    const int nj = int(junctions.size()), nr = int(reservoirs.size());
    if (n < nj) return junctions[n].id;
    if (n < nj + nr) return reservoirs[n - nj].id;
    return tanks[n - nj - nr].id;
  }
  const std::string& link_id(int l) const { return link_ends(l).id; }

  const std::string& link_from(int l) const { return link_ends(l).from; }
  const std::string& link_to(int l) const { return link_ends(l).to; }

  std::optional<int> find_node(std::string_view id) const {
    for (int n = 0; n < node_count(); ++n)
      if (node_id(n) == id) return n;
    return std::nullopt;
  }
  std::optional<int> find_link(std::string_view id) const {
    for (int l = 0; l < link_count(); ++l)
      if (link_id(l) == id) return l;
    return std::nullopt;
  }
  int node_index(std::string_view id) const {
    auto n = find_node(id);
    if (!n) throw ConfigError("unknown node '" + std::string(id) + "'");
    return *n;
  }
  int link_index(std::string_view id) const {
    auto l = find_link(id);
    if (!l) throw ConfigError("unknown link '" + std::string(id) + "'");
    return *l;
  }

  bool operator==(const WaterNetwork&) const = default;

  // Throws ConfigError on the first violated structural rule.
  void validate() const {
    if (node_count() == 0) throw ConfigError("no nodes defined");
    std::map<std::string, int> seen;
    auto claim = [&](const std::string& id) {
      if (id.empty()) throw ConfigError("empty id");
      if (!seen.emplace(id, 0).second) throw ConfigError("duplicate id '" + id + "'");
    };
    for (int n = 0; n < node_count(); ++n) claim(node_id(n));
    for (int l = 0; l < link_count(); ++l) claim(link_id(l));
    for (int l = 0; l < link_count(); ++l) {
      const auto& e = link_ends(l);
      for (const auto* end : {&e.from, &e.to})
        if (!find_node(*end))
          throw ConfigError("link '" + e.id + "' references unknown node '" + *end + "'");
      if (e.from == e.to) throw ConfigError("link '" + e.id + "' connects a node to itself");
    }
    for (const auto& p : pipes) {
      if (!(p.length > 0.0)) throw ConfigError("pipe '" + p.id + "' has nonpositive length");
      if (!(p.diameter > 0.0)) throw ConfigError("pipe '" + p.id + "' has nonpositive diameter");
    }
  }

 private:
  struct Ends {
    const std::string& id;
    const std::string& from;
    const std::string& to;
  };
  Ends link_ends(int l) const {
    const int np = int(pipes.size()), nm = int(pumps.size());
    if (l < np) return {pipes[l].id, pipes[l].from, pipes[l].to};
    if (l < np + nm) return {pumps[l - np].id, pumps[l - np].from, pumps[l - np].to};
    const auto& v = valves[l - np - nm];
    return {v.id, v.from, v.to};
  }
};

namespace detail {

inline double parse_number(std::string_view tok, int line) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || p != tok.data() + tok.size())
    throw ConfigError("line " + std::to_string(line) + ": expected a number, got '" +
                      std::string(tok) + "'");
  return v;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail

// Grammar (see README): bracketed section headers, one record per line,
// whitespace-separated fields, ';' starts a comment.
inline WaterNetwork parse_network(std::string_view text) {
  enum class Sec { None, Junctions, Reservoirs, Tanks, Pipes, Pumps, Valves };
  static const std::map<std::string, Sec, std::less<>> headers = {
      {"[JUNCTIONS]", Sec::Junctions}, {"[RESERVOIRS]", Sec::Reservoirs},
      {"[TANKS]", Sec::Tanks},         {"[PIPES]", Sec::Pipes},
      {"[PUMPS]", Sec::Pumps},         {"[VALVES]", Sec::Valves},
      {"[END]", Sec::None}};

  WaterNetwork net;
  Sec sec = Sec::None;
  bool ended = false;
  int line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (auto c = line.find(';'); c != std::string_view::npos) line = line.substr(0, c);
    auto tok = detail::split_ws(line);
    if (tok.empty()) continue;
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (tok[0].front() == '[') {
      auto it = headers.find(tok[0]);
      if (it == headers.end() || tok.size() != 1)
        throw ConfigError(where + "unknown section '" + std::string(tok[0]) + "'");
      sec = it->second;
      ended = tok[0] == "[END]";
      continue;
    }
    if (ended) throw ConfigError(where + "content after [END]");
    auto want = [&](size_t lo, size_t hi) {
      if (tok.size() < lo || tok.size() > hi)
        throw ConfigError(where + "expected " + std::to_string(lo) +
                          (hi != lo ? "-" + std::to_string(hi) : "") + " fields, got " +
                          std::to_string(tok.size()));
    };
    auto num = [&](size_t i) { return detail::parse_number(tok[i], line_no); };
    switch (sec) {
      case Sec::None:
        throw ConfigError(where + "record outside of a section");
      case Sec::Junctions:
        want(1, 1);
        net.junctions.push_back({std::string(tok[0])});
        break;
      case Sec::Reservoirs:
        want(1, 2);
        net.reservoirs.push_back({std::string(tok[0]), tok.size() > 1 ? num(1) : 0.0});
        break;
      case Sec::Tanks:
        want(1, 2);
        net.tanks.push_back({std::string(tok[0]), tok.size() > 1 ? num(1) : 0.0});
        break;
      case Sec::Pipes:
        want(8, 8);
        net.pipes.push_back({std::string(tok[0]), std::string(tok[1]), std::string(tok[2]),
                             num(3), num(4), num(5), num(6), num(7)});
        break;
      case Sec::Pumps:
      case Sec::Valves:
        want(3, 3);
        (sec == Sec::Pumps ? net.pumps : net.valves)
            .push_back({std::string(tok[0]), std::string(tok[1]), std::string(tok[2])});
        break;
    }
  }
  net.validate();
  return net;
}

inline std::string serialize_network(const WaterNetwork& net) {
  using detail::fmt_double;
  std::ostringstream os;
  os << "[JUNCTIONS]\n";
  for (const auto& j : net.junctions) os << j.id << "\n";
  os << "\n[RESERVOIRS]\n";
  for (const auto& r : net.reservoirs) os << r.id << " " << fmt_double(r.source) << "\n";
  os << "\n[TANKS]\n";
  for (const auto& t : net.tanks) os << t.id << " " << fmt_double(t.kb) << "\n";
  os << "\n[PIPES]\n";
  for (const auto& p : net.pipes)
    os << p.id << " " << p.from << " " << p.to << " " << fmt_double(p.length) << " "
       << fmt_double(p.diameter) << " " << fmt_double(p.kb) << " " << fmt_double(p.kw) << " "
       << fmt_double(p.kf) << "\n";
  os << "\n[PUMPS]\n";
  for (const auto& m : net.pumps) os << m.id << " " << m.from << " " << m.to << "\n";
  os << "\n[VALVES]\n";
  for (const auto& v : net.valves) os << v.id << " " << v.from << " " << v.to << "\n";
  os << "\n[END]\n";
  return os.str();
}

}  // namespace wqc
