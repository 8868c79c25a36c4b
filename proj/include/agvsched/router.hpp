#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "agvsched/factory.hpp"

namespace agvsched {

// Predicted AGV occupancy per (vertex, absolute slot) over [origin, origin + horizon).
// Lookups outside that window read as zero.
class CongestionMap {
 public:
  CongestionMap() = default;
  CongestionMap(int vertex_count, Slot origin, int horizon);

  int vertex_count() const { return vertices_; }
  Slot origin() const { return origin_; }
  int horizon() const { return horizon_; }

  int at(Vertex v, Slot t) const {
    const Slot off = t - origin_;
    if (off < 0 || off >= horizon_ || v < 0 || v >= vertices_) return 0;
    return counts_[static_cast<std::size_t>(off) * static_cast<std::size_t>(vertices_) +
                   static_cast<std::size_t>(v)];
  }
  void add(Vertex v, Slot t, int n = 1);
  void raise_to(Vertex v, Slot t, int n);  // counts(v, t) = max(counts(v, t), n)
  bool all_zero() const;

  friend bool operator==(const CongestionMap&, const CongestionMap&) = default;

 private:
  int vertices_ = 0;
  Slot origin_ = 0;
  int horizon_ = 0;
  std::vector<std::uint16_t> counts_;
};

struct RouterConfig {
  int kappa = 3;            // occupancy at which a state is penalised
  int penalty = 50;         // slot-equivalents added per congested state entered
  int max_expansions = 20000;
  int horizon = 40;
};

// Throws Error{invalid_argument} naming the offending field.
void validate(const RouterConfig& config);

struct NavPath {
  std::vector<TimedVertex> steps;
  Slot arrival = 0;
  Slot wait_at_goal = 0;
  int penalty = 0;  // accumulated congestion cost along the path
};

inline int heuristic(Cell v, Cell goal) { return manhattan(v, goal); }
// Minimum Manhattan distance to any cell of a goal set.
int heuristic(const FactoryGraph& graph, Vertex v, std::span<const Vertex> goals);

inline int congestion_penalty(const CongestionMap& map, Vertex v, Slot t, const RouterConfig& config) {
  return map.at(v, t) >= config.kappa ? config.penalty : 0;
}

struct PlanRequest {
  Vertex start = kNoVertex;
  Vertex goal = kNoVertex;            // key node; reached at any of its service cells
  Slot t0 = 0;
  std::optional<Slot> deadline;       // latest acceptable arrival is deadline + soft_delay
  int soft_delay = 0;
  std::optional<Slot> ready_slot;     // preparation time when the goal is a pickup
};

enum class PlanStatus { found, no_path, budget_exhausted };

struct PlanResult {
  PlanStatus status = PlanStatus::no_path;
  NavPath path;
  int expansions = 0;
};

// One expanded search state; parent is an index into the same node array, -1 at the root.
struct SearchNode {
  Vertex v = kNoVertex;
  Slot t = 0;
  int g = 0;
  int c = 0;
  int parent = -1;
};

// Walks parent links back from `goal`. Throws Error{broken_chain}.
NavPath reconstruct(std::span<const SearchNode> nodes, int goal);

// Spatiotemporal A* over (vertex, slot) states with f = g + h + c. Successors are the
// traversable neighbours plus waiting in place, each one slot later.
PlanResult plan_path(const FactoryGraph& graph, const PlanRequest& request, const CongestionMap& map,
                     const RouterConfig& config);

}  // namespace agvsched
