#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "linecal/network.hpp"

namespace linecal {

/// Bare topology view: a line id and its two endpoints.
struct Edge {
  std::string id;
  std::string a;
  std::string b;
};

struct PlanEntry {
  std::string line;
  std::string from_bus;  // endpoint whose factors are known when the line is visited
  std::string to_bus;
  int level = 0;         // edge distance of from_bus from the root, plus one
};

struct VisitPlan {
  std::vector<PlanEntry> entries;
  /// Index of the entry through which each bus is first reached; nullopt for the root.
  std::map<std::string, std::optional<std::size_t>> first_calibration;
};

/// Edge-based breadth-first search: every line is visited exactly once,
/// oriented away from an already-reached endpoint; buses may be revisited.
/// Incident lines are enqueued in id order with parallel partners kept
/// adjacent. Throws ValidationError naming unreachable lines.
VisitPlan ebbfs(std::span<const Edge> edges, const std::string& root);
VisitPlan ebbfs(const NetworkModel& network, const std::string& root);

/// Groups of two or more lines sharing an unordered endpoint pair, each
/// sorted by id, groups ordered by their first id.
std::vector<std::vector<std::string>> parallel_groups(std::span<const Edge> edges);
std::vector<std::vector<std::string>> parallel_groups(const NetworkModel& network);

std::vector<Edge> edges_of(const NetworkModel& network);

}  // namespace linecal
