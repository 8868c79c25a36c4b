#include "agvsched/router.hpp"

#include <algorithm>
#include <limits>
#include <queue>
#include <string>
#include <tuple>
#include <unordered_map>

#include "agvsched/error.hpp"

namespace agvsched {

CongestionMap::CongestionMap(int vertex_count, Slot origin, int horizon)
    : vertices_(vertex_count),
      origin_(origin),
      horizon_(std::max(0, horizon)),
      counts_(static_cast<std::size_t>(vertices_) * static_cast<std::size_t>(horizon_), 0) {}

void CongestionMap::add(Vertex v, Slot t, int n) {
  const Slot off = t - origin_;
  if (off < 0 || off >= horizon_ || v < 0 || v >= vertices_) return;
  auto& cell = counts_[static_cast<std::size_t>(off) * static_cast<std::size_t>(vertices_) +
                       static_cast<std::size_t>(v)];
  cell = static_cast<std::uint16_t>(std::max(0, static_cast<int>(cell) + n));
}

void CongestionMap::raise_to(Vertex v, Slot t, int n) {
  const Slot off = t - origin_;
  if (off < 0 || off >= horizon_ || v < 0 || v >= vertices_) return;
  auto& cell = counts_[static_cast<std::size_t>(off) * static_cast<std::size_t>(vertices_) +
                       static_cast<std::size_t>(v)];
  cell = static_cast<std::uint16_t>(std::max(static_cast<int>(cell), n));
}

bool CongestionMap::all_zero() const {
  return std::all_of(counts_.begin(), counts_.end(), [](auto c) { return c == 0; });
}

void validate(const RouterConfig& c) {
  if (c.kappa < 1) throw Error(ErrorCode::invalid_argument, "router.kappa must be >= 1");
  if (c.penalty <= 0) throw Error(ErrorCode::invalid_argument, "router.penalty must be > 0");
  if (c.max_expansions < 1) throw Error(ErrorCode::invalid_argument, "router.max_expansions must be >= 1");
  if (c.horizon < 1) throw Error(ErrorCode::invalid_argument, "router.horizon must be >= 1");
}

int heuristic(const FactoryGraph& graph, Vertex v, std::span<const Vertex> goals) {
  int best = std::numeric_limits<int>::max();
  const Cell c = graph.cell(v);
  for (Vertex g : goals) best = std::min(best, heuristic(c, graph.cell(g)));
  return best;
}

NavPath reconstruct(std::span<const SearchNode> nodes, int goal) {
  NavPath path;
  if (goal < 0 || static_cast<std::size_t>(goal) >= nodes.size())
    throw Error(ErrorCode::broken_chain, "goal index outside the search record");
  for (int i = goal; i >= 0;) {
    const SearchNode& n = nodes[static_cast<std::size_t>(i)];
    if (!path.steps.empty() && path.steps.back().t != n.t + 1)
      throw Error(ErrorCode::broken_chain, "parent slot is not the preceding slot");
    path.steps.push_back({n.v, n.t});
    if (n.parent >= static_cast<int>(nodes.size()) || path.steps.size() > nodes.size())
      throw Error(ErrorCode::broken_chain, "parent link outside the search record");
    i = n.parent;
  }
  std::reverse(path.steps.begin(), path.steps.end());
  const SearchNode& g = nodes[static_cast<std::size_t>(goal)];
  path.arrival = g.t;
  path.penalty = g.c;
  return path;
}

PlanResult plan_path(const FactoryGraph& graph, const PlanRequest& req, const CongestionMap& map,
                     const RouterConfig& config) {
  PlanResult result;
  const auto goals = graph.service_cells(req.goal);
  if (goals.empty() || !graph.traversable(req.start))
    throw Error(ErrorCode::invalid_argument, "start must be traversable and goal serviceable");

  const auto n = static_cast<std::int64_t>(graph.vertex_count());
  auto key = [&](Vertex v, Slot t) { return static_cast<std::int64_t>(t - req.t0) * n + v; };
  const std::optional<Slot> latest =
      req.deadline ? std::optional<Slot>(*req.deadline + req.soft_delay) : std::nullopt;

  std::vector<SearchNode> nodes;
  std::unordered_map<std::int64_t, int> index;   // (v, t) -> best record
  std::vector<bool> closed;
  // (phi, h, vertex, slot, record); smallest first.
  using Entry = std::tuple<int, int, Vertex, Slot, int>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;

  const int h0 = heuristic(graph, req.start, goals);
  if (latest && req.t0 + h0 > *latest) return result;
  nodes.push_back({req.start, req.t0, 0, 0, -1});
  closed.push_back(false);
  index[key(req.start, req.t0)] = 0;
  open.emplace(h0, h0, req.start, req.t0, 0);

  while (!open.empty()) {
    const auto [phi, h, v, t, id] = open.top();
    open.pop();
    if (closed[static_cast<std::size_t>(id)]) continue;
    const SearchNode cur = nodes[static_cast<std::size_t>(id)];
    if (cur.g + cur.c + h != phi) continue;  // superseded entry

    if (std::find(goals.begin(), goals.end(), v) != goals.end()) {
      if (!latest || t <= *latest) {
        result.status = PlanStatus::found;
        result.path = reconstruct(nodes, id);
        result.path.wait_at_goal = req.ready_slot && *req.ready_slot > t ? *req.ready_slot - t : 0;
        return result;
      }
      continue;
    }
    closed[static_cast<std::size_t>(id)] = true;
    if (++result.expansions > config.max_expansions) {
      result.status = PlanStatus::budget_exhausted;
      return result;
    }

    const Slot nt = t + 1;
    auto relax = [&](Vertex u) {
      const int hu = heuristic(graph, u, goals);
      if (latest && nt + hu > *latest) return;
      const int g = cur.g + 1;
      const int c = cur.c + congestion_penalty(map, u, nt, config);
      const auto k = key(u, nt);
      auto it = index.find(k);
      if (it != index.end()) {
        SearchNode& old = nodes[static_cast<std::size_t>(it->second)];
        if (closed[static_cast<std::size_t>(it->second)] || old.g + old.c <= g + c) return;
        old.g = g;
        old.c = c;
        old.parent = id;
        open.emplace(g + c + hu, hu, u, nt, it->second);
        return;
      }
      const int rec = static_cast<int>(nodes.size());
      nodes.push_back({u, nt, g, c, id});
      closed.push_back(false);
      index.emplace(k, rec);
      open.emplace(g + c + hu, hu, u, nt, rec);
    };
    for (Vertex u : graph.moves(v)) relax(u);
    relax(v);
  }
  return result;
}

}  // namespace agvsched
