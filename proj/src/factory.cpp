#include "agvsched/factory.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <string>

#include "agvsched/error.hpp"

namespace agvsched {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::disconnected_world: return "disconnected-world";
    case ErrorCode::overlapping_roles: return "overlapping-roles";
    case ErrorCode::out_of_bounds: return "out-of-bounds";
    case ErrorCode::infeasible_quantity: return "infeasible-quantity";
    case ErrorCode::unknown_task_id: return "unknown-task-id";
    case ErrorCode::unknown_agv_id: return "unknown-agv-id";
    case ErrorCode::missing_arrival: return "missing-arrival";
    case ErrorCode::unreachable_node: return "unreachable-node";
    case ErrorCode::no_feasible_insertion: return "no-feasible-insertion";
    case ErrorCode::infeasible_instance: return "infeasible-instance";
    case ErrorCode::nonpositive_temperature: return "nonpositive-temperature";
    case ErrorCode::invalid_argument: return "invalid-argument";
    case ErrorCode::malformed_channel_set: return "malformed-channel-set";
    case ErrorCode::wrong_direction: return "wrong-direction";
    case ErrorCode::config_invalid: return "config-invalid";
    case ErrorCode::io_error: return "io-error";
    case ErrorCode::budget_exhausted: return "budget-exhausted";
    case ErrorCode::broken_chain: return "broken-chain";
    case ErrorCode::invariant_violation: return "invariant-violation";
  }
  return "unknown";
}

std::string_view to_string(NodeRole role) {
  switch (role) {
    case NodeRole::aisle: return "aisle";
    case NodeRole::production: return "production";
    case NodeRole::resupply: return "resupply";
    case NodeRole::blocked: return "blocked";
  }
  return "?";
}

std::string_view to_string(Action a) {
  switch (a) {
    case Action::north: return "N";
    case Action::east: return "E";
    case Action::south: return "S";
    case Action::west: return "W";
    case Action::stay: return "-";
  }
  return "?";
}

Action action_between(Cell from, Cell to) {
  if (to.y == from.y + 1 && to.x == from.x) return Action::north;
  if (to.y == from.y - 1 && to.x == from.x) return Action::south;
  if (to.x == from.x + 1 && to.y == from.y) return Action::east;
  if (to.x == from.x - 1 && to.y == from.y) return Action::west;
  return Action::stay;
}

Cell apply(Action a, Cell c) {
  switch (a) {
    case Action::north: return {c.x, c.y + 1};
    case Action::south: return {c.x, c.y - 1};
    case Action::east: return {c.x + 1, c.y};
    case Action::west: return {c.x - 1, c.y};
    case Action::stay: return c;
  }
  return c;
}

Layout Layout::columns(int width, int height) {
  Layout layout;
  for (int x = 2; x <= width - 2; x += 3) {
    for (int y = 2; y <= height - 3; ++y) layout.production.push_back({x, y});
  }
  const int lo = std::min(2, height - 1);
  const int hi = std::max(0, height - 3);
  for (Cell c : {Cell{0, lo}, Cell{0, hi}, Cell{width - 1, lo}, Cell{width - 1, hi}}) {
    if (std::find(layout.resupply.begin(), layout.resupply.end(), c) == layout.resupply.end() &&
        std::find(layout.production.begin(), layout.production.end(), c) == layout.production.end())
      layout.resupply.push_back(c);
  }
  return layout;
}

std::span<const Vertex> FactoryGraph::adjacent(Vertex v) const {
  return adjacent_[static_cast<std::size_t>(v)];
}

std::span<const Vertex> FactoryGraph::moves(Vertex v) const {
  return moves_[static_cast<std::size_t>(v)];
}

std::span<const Vertex> FactoryGraph::service_cells(Vertex node) const {
  return service_[static_cast<std::size_t>(node)];
}

FactoryGraph build_grid(int width, int height, const Layout& layout) {
  if (width < 1 || height < 1 || width * height < 2)
    throw Error(ErrorCode::invalid_argument, "grid must have at least two cells");

  FactoryGraph g;
  g.width_ = width;
  g.height_ = height;
  g.production_blocks_ = layout.production_blocks;
  const auto n = static_cast<std::size_t>(width * height);
  g.roles_.assign(n, NodeRole::aisle);

  auto place = [&](const std::vector<Cell>& cells, NodeRole role) {
    for (Cell c : cells) {
      if (!g.contains(c))
        throw Error(ErrorCode::out_of_bounds, "cell (" + std::to_string(c.x) + "," +
                                                  std::to_string(c.y) + ") outside the grid");
      auto& slot = g.roles_[static_cast<std::size_t>(g.vertex(c))];
      if (slot != NodeRole::aisle)
        throw Error(ErrorCode::overlapping_roles, "cell (" + std::to_string(c.x) + "," +
                                                      std::to_string(c.y) + ") has two roles");
      slot = role;
    }
  };
  place(layout.production, NodeRole::production);
  place(layout.resupply, NodeRole::resupply);
  place(layout.obstacles, NodeRole::blocked);

  g.traversable_.assign(n, true);
  for (std::size_t v = 0; v < n; ++v) {
    if (g.roles_[v] == NodeRole::blocked ||
        (g.roles_[v] == NodeRole::production && layout.production_blocks))
      g.traversable_[v] = false;
    if (g.roles_[v] == NodeRole::production) g.production_.push_back(static_cast<Vertex>(v));
    if (g.roles_[v] == NodeRole::resupply) g.resupply_.push_back(static_cast<Vertex>(v));
  }

  g.adjacent_.assign(n, {});
  g.moves_.assign(n, {});
  g.service_.assign(n, {});
  for (std::size_t v = 0; v < n; ++v) {
    const Cell c = g.cell(static_cast<Vertex>(v));
    if (g.roles_[v] == NodeRole::blocked) continue;
    // Fixed N, E, S, W order keeps successor generation deterministic.
    for (Action a : {Action::north, Action::east, Action::south, Action::west}) {
      const Cell d = apply(a, c);
      if (!g.contains(d)) continue;
      const Vertex u = g.vertex(d);
      if (g.roles_[static_cast<std::size_t>(u)] == NodeRole::blocked) continue;
      g.adjacent_[v].push_back(u);
      if (g.traversable_[v] && g.traversable_[static_cast<std::size_t>(u)]) g.moves_[v].push_back(u);
      if (static_cast<std::size_t>(u) > v) ++g.edge_count_;
    }
    if (g.traversable_[v]) {
      g.service_[v].push_back(static_cast<Vertex>(v));
    } else if (g.roles_[v] == NodeRole::production) {
      for (Vertex u : g.adjacent_[v])
        if (g.traversable_[static_cast<std::size_t>(u)]) g.service_[v].push_back(u);
      std::sort(g.service_[v].begin(), g.service_[v].end());
      if (g.service_[v].empty())
        throw Error(ErrorCode::disconnected_world, "production cell without an accessible side");
    }
  }

  // Traversable cells must form a single component.
  std::vector<bool> seen(n, false);
  std::size_t total = 0, first = n;
  for (std::size_t v = 0; v < n; ++v)
    if (g.traversable_[v]) {
      ++total;
      if (first == n) first = v;
    }
  if (total == 0) throw Error(ErrorCode::disconnected_world, "no traversable cells");
  std::deque<Vertex> queue{static_cast<Vertex>(first)};
  seen[first] = true;
  std::size_t reached = 1;
  while (!queue.empty()) {
    const Vertex v = queue.front();
    queue.pop_front();
    for (Vertex u : g.moves_[static_cast<std::size_t>(v)]) {
      if (seen[static_cast<std::size_t>(u)]) continue;
      seen[static_cast<std::size_t>(u)] = true;
      ++reached;
      queue.push_back(u);
    }
  }
  if (reached != total)
    throw Error(ErrorCode::disconnected_world,
                "traversable cells split into several components (" + std::to_string(reached) +
                    " of " + std::to_string(total) + " reachable)");
  return g;
}

DistanceTable::DistanceTable(const FactoryGraph& graph)
    : graph_(&graph), n_(static_cast<std::size_t>(graph.vertex_count())), dist_(n_ * n_, kUnreachable) {
  std::vector<Vertex> queue;
  queue.reserve(n_);
  for (std::size_t s = 0; s < n_; ++s) {
    if (!graph.traversable(static_cast<Vertex>(s))) continue;
    int* row = &dist_[s * n_];
    row[s] = 0;
    queue.clear();
    queue.push_back(static_cast<Vertex>(s));
    for (std::size_t head = 0; head < queue.size(); ++head) {
      const Vertex v = queue[head];
      for (Vertex u : graph.moves(v)) {
        if (row[u] != kUnreachable) continue;
        row[u] = row[v] + 1;
        queue.push_back(u);
      }
    }
  }

  key_index_.assign(n_, -1);
  std::vector<Vertex> keys;
  for (const auto* nodes : {&graph.production_nodes(), &graph.resupply_nodes()})
    for (Vertex v : *nodes)
      if (key_index_[static_cast<std::size_t>(v)] < 0) {
        key_index_[static_cast<std::size_t>(v)] = static_cast<int>(keys.size());
        keys.push_back(v);
      }
  keys_ = keys.size();
  near_dist_.assign(n_ * keys_, kUnreachable);
  near_cell_.assign(n_ * keys_, kNoVertex);
  for (std::size_t from = 0; from < n_; ++from)
    for (std::size_t k = 0; k < keys_; ++k) {
      int best_d = kUnreachable + 1;
      for (Vertex s : graph.service_cells(keys[k])) {
        const int d = between(static_cast<Vertex>(from), s);
        if (d < best_d) {
          best_d = d;
          near_cell_[from * keys_ + k] = s;
        }
      }
      near_dist_[from * keys_ + k] = std::min(best_d, kUnreachable);
    }
}

int DistanceTable::to_node(Vertex from, Vertex node) const {
  if (const int key = key_index_[static_cast<std::size_t>(node)]; key >= 0)
    return near_dist_[static_cast<std::size_t>(from) * keys_ + static_cast<std::size_t>(key)];
  int best = kUnreachable;
  for (Vertex s : graph_->service_cells(node)) best = std::min(best, between(from, s));
  return best;
}

Vertex DistanceTable::nearest_service_cell(Vertex from, Vertex node) const {
  if (const int key = key_index_[static_cast<std::size_t>(node)]; key >= 0)
    return near_cell_[static_cast<std::size_t>(from) * keys_ + static_cast<std::size_t>(key)];
  Vertex best = kNoVertex;
  int best_d = kUnreachable + 1;
  for (Vertex s : graph_->service_cells(node)) {
    const int d = between(from, s);
    if (d < best_d) {
      best_d = d;
      best = s;
    }
  }
  return best;
}

int DistanceTable::node_to_node(Vertex a, Vertex b) const {
  int best = kUnreachable;
  for (Vertex s : graph_->service_cells(a))
    for (Vertex t : graph_->service_cells(b)) best = std::min(best, between(s, t));
  return best;
}

std::vector<TransportTask> generate_tasks(std::uint64_t seed, const TaskGenParams& p,
                                          const FactoryGraph& graph, const DistanceTable& dist) {
  if (p.lines < 1 || p.per_line < 1)
    throw Error(ErrorCode::invalid_argument, "lines and per_line must be >= 1");
  if (p.qty_lo < 0 || p.qty_lo > p.qty_hi || p.proc_lo < 0 || p.proc_lo > p.proc_hi)
    throw Error(ErrorCode::invalid_argument, "empty quantity or processing range");
  if (p.qty_hi > p.capacity)
    throw Error(ErrorCode::infeasible_quantity,
                "demand up to " + std::to_string(p.qty_hi) + " exceeds AGV capacity " +
                    std::to_string(p.capacity));
  if (p.waves < 1 || p.wave_interval < 0)
    throw Error(ErrorCode::invalid_argument, "waves must be >= 1 and wave_interval >= 0");
  const auto& nodes = graph.production_nodes();
  if (nodes.size() < 2)
    throw Error(ErrorCode::invalid_argument, "task generation needs at least two production nodes");

  Rng rng = make_stream(seed, Stream::tasks);
  std::vector<TransportTask> tasks;
  tasks.reserve(static_cast<std::size_t>(p.lines * p.per_line));
  const auto chain_len = static_cast<std::size_t>(p.per_line + 1);

  for (int line = 0; line < p.lines; ++line) {
    // Chain of production nodes: delivery of priority mu is the pickup of mu+1.
    std::vector<Vertex> chain;
    if (chain_len <= nodes.size()) {
      std::vector<Vertex> pool = nodes;
      for (std::size_t i = 0; i < chain_len; ++i) {
        const auto j = i + uniform_below(rng, pool.size() - i);
        std::swap(pool[i], pool[j]);
        chain.push_back(pool[i]);
      }
    } else {
      chain.push_back(nodes[uniform_below(rng, nodes.size())]);
      while (chain.size() < chain_len) {
        Vertex next = nodes[uniform_below(rng, nodes.size() - 1)];
        if (next == chain.back()) next = nodes.back();
        chain.push_back(next);
      }
    }
    const int wave = line * p.waves / p.lines;
    const Slot release = wave * p.wave_interval;
    for (int mu = 1; mu <= p.per_line; ++mu) {
      TransportTask t;
      t.id = static_cast<int>(tasks.size());
      t.line = line;
      t.priority = mu;
      t.pickup = chain[static_cast<std::size_t>(mu - 1)];
      t.delivery = chain[static_cast<std::size_t>(mu)];
      t.qty_out = uniform_int(rng, p.qty_lo, p.qty_hi);
      t.qty_in = uniform_int(rng, p.qty_lo, p.qty_hi);
      t.processing_time = uniform_int(rng, p.proc_lo, p.proc_hi);
      t.arrival_slot = release;
      t.soft_delay = p.soft_delay;
      const int lower_bound = dist.node_to_node(t.pickup, t.delivery) + t.processing_time;
      t.deadline = release + static_cast<Slot>(std::ceil(p.slack_factor * lower_bound));
      tasks.push_back(t);
    }
  }
  return tasks;
}

}  // namespace agvsched
