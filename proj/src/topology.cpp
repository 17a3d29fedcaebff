#include "linecal/topology.hpp"

#include <algorithm>
#include <deque>
#include <set>

namespace linecal {

namespace {

std::pair<std::string, std::string> unordered(const Edge& e) {
  return e.a < e.b ? std::pair{e.a, e.b} : std::pair{e.b, e.a};
}

}  // namespace

std::vector<Edge> edges_of(const NetworkModel& network) {
  std::vector<Edge> out;
  for (const auto& l : network.lines()) out.push_back({l.id, l.from_bus, l.to_bus});
  return out;
}

std::vector<std::vector<std::string>> parallel_groups(std::span<const Edge> edges) {
  std::map<std::pair<std::string, std::string>, std::vector<std::string>> by_pair;
  for (const auto& e : edges) by_pair[unordered(e)].push_back(e.id);
  std::vector<std::vector<std::string>> out;
  for (auto& [pair, ids] : by_pair) {
    if (ids.size() < 2) continue;
    std::sort(ids.begin(), ids.end());
    out.push_back(std::move(ids));
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<std::vector<std::string>> parallel_groups(const NetworkModel& network) {
  const auto edges = edges_of(network);
  return parallel_groups(edges);
}

VisitPlan ebbfs(std::span<const Edge> edges, const std::string& root) {
  std::map<std::string, std::vector<std::size_t>> incident;
  std::set<std::string> ids;
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!ids.insert(edges[i].id).second) {
      throw ValidationError("duplicate line id '" + edges[i].id + "'", edges[i].id);
    }
    incident[edges[i].a].push_back(i);
    incident[edges[i].b].push_back(i);
  }
  bool root_known = incident.count(root) != 0;
  if (!root_known && !edges.empty()) throw ValidationError("root bus '" + root + "' has no lines", root);

  VisitPlan plan;
  plan.first_calibration[root] = std::nullopt;
  std::map<std::string, int> depth{{root, 0}};
  std::vector<bool> queued(edges.size(), false);
  std::deque<PlanEntry> queue;

  auto expand = [&](const std::string& bus) {
    std::vector<std::size_t> fresh;
    for (auto i : incident[bus]) {
      if (!queued[i]) fresh.push_back(i);
    }
    std::sort(fresh.begin(), fresh.end(),
              [&](std::size_t l, std::size_t r) { return edges[l].id < edges[r].id; });
    // Keep parallel partners adjacent, at the position of the first member.
    std::vector<std::size_t> ordered;
    std::vector<bool> taken(fresh.size(), false);
    for (std::size_t f = 0; f < fresh.size(); ++f) {
      if (taken[f]) continue;
      const auto pair = unordered(edges[fresh[f]]);
      for (std::size_t g = f; g < fresh.size(); ++g) {
        if (!taken[g] && unordered(edges[fresh[g]]) == pair) {
          ordered.push_back(fresh[g]);
          taken[g] = true;
        }
      }
    }
    for (auto i : ordered) {
      queued[i] = true;
      const auto& e = edges[i];
      queue.push_back({e.id, bus, e.a == bus ? e.b : e.a, depth.at(bus) + 1});
    }
  };

  expand(root);
  while (!queue.empty()) {
    PlanEntry entry = std::move(queue.front());
    queue.pop_front();
    plan.entries.push_back(entry);
    if (!depth.count(entry.to_bus)) {
      depth[entry.to_bus] = entry.level;
      plan.first_calibration[entry.to_bus] = plan.entries.size() - 1;
      expand(entry.to_bus);
    }
  }

  if (plan.entries.size() != edges.size()) {
    std::string missing;
    for (std::size_t i = 0; i < edges.size(); ++i) {
      if (!queued[i]) missing += (missing.empty() ? "" : ", ") + edges[i].id;
    }
    throw ValidationError("lines unreachable from root '" + root + "': " + missing, missing);
  }
  return plan;
}

VisitPlan ebbfs(const NetworkModel& network, const std::string& root) {
  if (!network.has_bus(root)) throw ValidationError("unknown root bus '" + root + "'", root);
  const auto edges = edges_of(network);
  return ebbfs(edges, root);
}

}  // namespace linecal
