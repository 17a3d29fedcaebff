#pragma once

#include <random>
#include <string>
#include <vector>

#include "linecal/network.hpp"
#include "linecal/pipeline.hpp"
#include "linecal/topology.hpp"

namespace linecal::testing {

inline Bases bases_345() {
  Bases b;
  b.levels.push_back(b.for_kv(345.0));
  return b;
}

inline std::vector<Bus> buses(std::initializer_list<const char*> ids, const std::string& ref) {
  std::vector<Bus> out;
  for (const char* id : ids) out.push_back({id, 345.0, id == ref, true});
  return out;
}

inline NetworkModel triangle() {
  return NetworkModel::build(buses({"1", "2", "3"}, "1"),
                             {{"e12", "1", "2", 0.00175, 0.0202, 0.404, {}},
                              {"e13", "1", "3", 0.00244, 0.0305, 0.581, {}},
                              {"e23", "2", "3", 0.00431, 0.0504, 0.257, {}}},
                             bases_345());
}

inline NetworkModel four_cycle() {
  return NetworkModel::build(buses({"1", "2", "3", "4"}, "1"),
                             {{"e12", "1", "2", 0.00175, 0.0202, 0.404, {}},
                              {"e23", "2", "3", 0.00138, 0.0160, 0.319, {}},
                              {"e34", "3", "4", 0.00269, 0.0302, 0.190, {}},
                              {"e14", "1", "4", 0.00464, 0.0540, 0.211, {}}},
                             bases_345());
}

/// Ratio errors and quantization both switched off.
inline RunConfig exact_config() {
  RunConfig c;
  c.ratio_errors = false;
  c.quantize = false;
  return c;
}

/// Connected multigraph: a random spanning tree plus random extra edges,
/// some of them duplicating an existing endpoint pair.
inline std::vector<Edge> random_multigraph(std::mt19937_64& rng, int max_buses, int max_lines) {
  std::uniform_int_distribution<int> bus_count(2, max_buses);
  const int n = bus_count(rng);
  std::vector<Edge> edges;
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.push_back("b" + std::to_string(i));
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), rng);
  int id = 0;
  auto add = [&](int a, int b) {
    edges.push_back({"l" + std::to_string(id++), names[static_cast<std::size_t>(a)],
                     names[static_cast<std::size_t>(b)]});
  };
  for (int i = 1; i < n; ++i) {
    std::uniform_int_distribution<int> parent(0, i - 1);
    add(order[static_cast<std::size_t>(parent(rng))], order[static_cast<std::size_t>(i)]);
  }
  std::uniform_int_distribution<int> extra(0, std::max(0, max_lines - (n - 1)));
  std::uniform_int_distribution<int> pick(0, n - 1);
  std::bernoulli_distribution duplicate(0.3);
  const int extras = extra(rng);
  for (int e = 0; e < extras; ++e) {
    if (duplicate(rng)) {
      std::uniform_int_distribution<std::size_t> which(0, edges.size() - 1);
      const Edge copy = edges[which(rng)];
      edges.push_back({"l" + std::to_string(id++), copy.b, copy.a});
      continue;
    }
    const int a = pick(rng);
    int b = pick(rng);
    if (a == b) b = (b + 1) % n;
    add(a, b);
  }
  std::shuffle(edges.begin(), edges.end(), rng);
  return edges;
}

}  // namespace linecal::testing
