#pragma once

#include <json.hpp>
#include <algorithm>
#include <ostream>
#include <tuple>
#include <vector>

#include "wqc/network/network.hpp"
#include "wqc/quality/assembly.hpp"

namespace wqc {

// Triplet CSV `row,col,value`, row-major order, 17 significant digits.
template <class Sparse>
void write_triplets(std::ostream& os, const Sparse& m) {
  std::vector<std::tuple<long, long, double>> t;
  for (int k = 0; k < m.outerSize(); ++k)
    for (typename Sparse::InnerIterator it(m, k); it; ++it)
      t.emplace_back(long(it.row()), long(it.col()), double(it.value()));
  std::sort(t.begin(), t.end());
  os << "row,col,value\n";
  for (auto& [r, c, v] : t) os << r << "," << c << "," << detail::fmt_double(v) << "\n";
}

inline nlohmann::ordered_json index_map_json(const StateIndexMap& map) {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (int i = 0; i < map.size(); ++i) j[map.name(i)] = i;
  return j;
}

}  // namespace wqc
