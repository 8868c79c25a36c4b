#pragma once

// Independent reference implementations used as test oracles. They favour obviousness
// over speed and share no code with the library beyond the data types.

#include <algorithm>
#include <climits>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <vector>

#include "agvsched/factory.hpp"
#include "agvsched/mrta.hpp"
#include "agvsched/router.hpp"

namespace oracle {

using namespace agvsched;

// Plain BFS over the traversable 4-neighbourhood.
inline std::vector<int> bfs(const FactoryGraph& g, Vertex src) {
  std::vector<int> d(static_cast<std::size_t>(g.vertex_count()), INT_MAX);
  if (!g.traversable(src)) return d;
  std::deque<Vertex> q{src};
  d[static_cast<std::size_t>(src)] = 0;
  while (!q.empty()) {
    const Vertex v = q.front();
    q.pop_front();
    const Cell c = g.cell(v);
    for (Cell n : {Cell{c.x + 1, c.y}, Cell{c.x - 1, c.y}, Cell{c.x, c.y + 1}, Cell{c.x, c.y - 1}}) {
      if (!g.contains(n)) continue;
      const Vertex u = g.vertex(n);
      if (!g.traversable(u) || d[static_cast<std::size_t>(u)] != INT_MAX) continue;
      d[static_cast<std::size_t>(u)] = d[static_cast<std::size_t>(v)] + 1;
      q.push_back(u);
    }
  }
  return d;
}

// Exact minimum of g + c over every spatiotemporal walk (moves or waits, one slot each)
// from `start` at t0 reaching a goal cell, by DP over layers up to `max_len` steps.
// Cost of a walk = steps + penalty for every entered state (v, t) with map >= kappa.
inline int best_walk_cost(const FactoryGraph& g, Vertex start, const std::vector<Vertex>& goals, Slot t0,
                          const CongestionMap& map, const RouterConfig& cfg, int max_len) {
  const auto n = static_cast<std::size_t>(g.vertex_count());
  std::vector<int> cur(n, INT_MAX);
  cur[static_cast<std::size_t>(start)] = 0;
  auto is_goal = [&](Vertex v) { return std::find(goals.begin(), goals.end(), v) != goals.end(); };
  int best = is_goal(start) ? 0 : INT_MAX;
  for (int step = 1; step <= max_len; ++step) {
    std::vector<int> next(n, INT_MAX);
    const Slot t = t0 + step;
    for (Vertex v = 0; v < g.vertex_count(); ++v) {
      if (cur[static_cast<std::size_t>(v)] == INT_MAX) continue;
      std::vector<Vertex> succ{v};
      for (Vertex u : g.moves(v)) succ.push_back(u);
      for (Vertex u : succ) {
        const int c = cur[static_cast<std::size_t>(v)] + 1 + (map.at(u, t) >= cfg.kappa ? cfg.penalty : 0);
        next[static_cast<std::size_t>(u)] = std::min(next[static_cast<std::size_t>(u)], c);
      }
    }
    for (Vertex v = 0; v < g.vertex_count(); ++v)
      if (is_goal(v) && next[static_cast<std::size_t>(v)] != INT_MAX)
        best = std::min(best, next[static_cast<std::size_t>(v)]);
    cur = std::move(next);
  }
  return best;
}

// Route cost in the solver's own model, recomputed from first principles: walk the
// sequence, detour through the resupply node that minimises (here -> u -> pickup) when
// payload runs short, and sum shortest-path travel to each key node's nearest service cell.
inline int route_cost(const DistanceTable& d, const FleetMember& m, const std::vector<const TransportTask*>& seq) {
  int t = m.busy;
  Vertex pos = m.start;
  int payload = m.payload;
  for (const TransportTask* task : seq) {
    if (task->qty_in > m.capacity) return INT_MAX;
    if (payload < task->qty_in) {
      int best = INT_MAX;
      Vertex via = kNoVertex;
      for (Vertex u : d.graph().resupply_nodes()) {
        const int c = d.between(pos, u) + d.to_node(u, task->pickup);
        if (c < best) {
          best = c;
          via = u;
        }
      }
      if (via == kNoVertex) return INT_MAX;
      t += d.between(pos, via);
      pos = via;
      payload = m.capacity;
    }
    t += d.to_node(pos, task->pickup);
    pos = d.nearest_service_cell(pos, task->pickup);
    t += d.to_node(pos, task->delivery);
    pos = d.nearest_service_cell(pos, task->delivery);
    payload -= task->qty_in;
  }
  return t;
}

// Exhaustive optimum of the estimated makespan over every assignment of tasks to fleet
// members and every order on each member, keeping same-line tasks in ascending priority.
inline int brute_force_makespan(const DistanceTable& d, const std::vector<TransportTask>& tasks,
                                const std::vector<FleetMember>& fleet) {
  const std::size_t m = tasks.size(), k = fleet.size();
  int best = INT_MAX;
  std::vector<std::size_t> owner(m, 0);
  std::function<void(std::size_t)> assign = [&](std::size_t i) {
    if (i == m) {
      int worst = 0;
      for (std::size_t a = 0; a < k && worst < best; ++a) {
        std::vector<const TransportTask*> mine;
        for (std::size_t j = 0; j < m; ++j)
          if (owner[j] == a) mine.push_back(&tasks[j]);
        std::sort(mine.begin(), mine.end());
        int local = INT_MAX;
        do {
          bool ordered = true;
          for (std::size_t x = 0; x < mine.size() && ordered; ++x)
            for (std::size_t y = x + 1; y < mine.size(); ++y)
              if (mine[x]->line == mine[y]->line && mine[x]->priority > mine[y]->priority) ordered = false;
          if (ordered) local = std::min(local, route_cost(d, fleet[a], mine));
        } while (std::next_permutation(mine.begin(), mine.end()));
        worst = std::max(worst, local);
      }
      best = std::min(best, worst);
      return;
    }
    for (std::size_t a = 0; a < k; ++a) {
      owner[i] = a;
      assign(i + 1);
    }
  };
  assign(0);
  return best;
}

}  // namespace oracle
