#include "agvsched/orchestrator.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <string>
#include <tuple>

#include "agvsched/error.hpp"

namespace agvsched {

CongestionMap build_global_map(const RouteRegistry& registry, int vertex_count, Slot now, int horizon,
                               int staleness_cap) {
  CongestionMap map(vertex_count, now, horizon);
  for (const auto& [id, entry] : registry) {
    if (now - entry.reported_at > staleness_cap) continue;
    for (const TimedVertex& tv : entry.route) map.add(tv.v, tv.t);
  }
  return map;
}

CongestionMap merge_maps(const CongestionMap& a, const CongestionMap& b) {
  if (a.horizon() == 0) return b;
  if (b.horizon() == 0) return a;
  const Slot lo = std::min(a.origin(), b.origin());
  const Slot hi = std::max(a.origin() + a.horizon(), b.origin() + b.horizon());
  const int n = std::max(a.vertex_count(), b.vertex_count());
  CongestionMap out(n, lo, hi - lo);
  for (Slot t = lo; t < hi; ++t)
    for (Vertex v = 0; v < n; ++v) {
      const int c = std::max(a.at(v, t), b.at(v, t));
      if (c) out.add(v, t, c);
    }
  return out;
}

std::vector<Conflict> detect_conflicts(std::span<const Move> moves, int capacity) {
  std::map<Vertex, std::vector<int>> movers_into;
  std::map<Vertex, int> occupancy, stayers;
  std::map<std::pair<Vertex, Vertex>, std::vector<int>> edges;
  for (const Move& m : moves) {
    ++occupancy[m.to];
    if (m.from == m.to) {
      ++stayers[m.to];
      continue;
    }
    movers_into[m.to].push_back(m.agv);
    edges[{m.from, m.to}].push_back(m.agv);
  }
  std::vector<Conflict> out;
  for (auto& [v, ids] : movers_into) {
    if (occupancy[v] <= capacity) continue;
    std::sort(ids.begin(), ids.end());
    out.push_back({ConflictKind::vertex, v, ids, capacity - stayers[v]});
  }
  for (const auto& [edge, ids] : edges) {
    if (edge.first > edge.second) continue;
    auto back = edges.find({edge.second, edge.first});
    if (back == edges.end()) continue;
    for (int a : ids)
      for (int b : back->second) out.push_back({ConflictKind::swap, edge.first, {std::min(a, b), std::max(a, b)}, 0});
  }
  return out;
}

int heading_rank(Action heading) {
  switch (heading) {
    case Action::north: return 0;
    case Action::south: return 1;
    case Action::east: return 2;
    case Action::west: return 3;
    case Action::stay: return 4;
  }
  return 4;
}

std::vector<bool> resolve_right_of_way(std::span<const int> members, std::span<const Action> headings) {
  if (members.size() != headings.size())
    throw Error(ErrorCode::invalid_argument, "one heading per conflict member is required");
  std::vector<bool> proceed(members.size(), false);
  if (members.empty()) return proceed;
  std::size_t best = 0;
  for (std::size_t i = 1; i < members.size(); ++i) {
    if (std::make_pair(heading_rank(headings[i]), members[i]) <
        std::make_pair(heading_rank(headings[best]), members[best]))
      best = i;
  }
  // A staying AGV never proceeds into anything, so it cannot hold the right of way.
  if (headings[best] != Action::stay) proceed[best] = true;
  return proceed;
}

namespace {

bool is_comm(Mode m) { return m == Mode::comm_ideal || m == Mode::comm_realistic; }

int staleness(const ScenarioConfig& c) {
  return c.sim.staleness_cap > 0 ? c.sim.staleness_cap : 2 * c.router.horizon;
}

bool at_service_cell(const FactoryGraph& g, Vertex loc, Vertex node) {
  const auto cells = g.service_cells(node);
  return std::find(cells.begin(), cells.end(), loc) != cells.end();
}

const TransportTask* downstream_of(const WorldState& w, const TransportTask& t) {
  for (const TransportTask& d : w.tasks)
    if (d.line == t.line && d.priority == t.priority + 1) return &d;
  return nullptr;
}

// Product input reaches the robot at the task's pickup node.
void input_arrival(WorldState& w, int task, Slot when) {
  const TransportTask& t = w.tasks[static_cast<std::size_t>(task)];
  Slot& free_at = w.robot_free[t.pickup];
  const Slot prep = std::max(free_at, when) + t.processing_time;
  free_at = prep;
  w.task_state[static_cast<std::size_t>(task)].prep = prep;
}

void reconfigure(WorldState& w) {
  std::vector<TransportTask> open;
  for (const TransportTask& t : w.tasks) {
    const TaskState& s = w.task_state[static_cast<std::size_t>(t.id)];
    if (s.released && !s.picked) open.push_back(t);
  }
  if (open.empty()) return;
  const DistanceTable& dist = *w.dist;
  std::vector<FleetMember> fleet;
  for (const AgvState& a : w.agvs) {
    FleetMember m{a.agv.id, a.agv.location, a.agv.payload, a.agv.capacity, a.stall};
    if (a.carrying >= 0) {
      const TransportTask& t = w.tasks[static_cast<std::size_t>(a.carrying)];
      m.start = dist.nearest_service_cell(a.agv.location, t.delivery);
      m.busy = a.stall + dist.to_node(a.agv.location, t.delivery);
      m.payload = std::max(0, a.agv.payload - t.qty_in);
    }
    fleet.push_back(m);
  }
  const MrtaProblem problem(dist, open, fleet);
  Rng rng = make_stream(w.seed, Stream::annealing, static_cast<std::uint64_t>(w.reconfigurations++));
  const SaResult result = sa_solve(problem, w.config.sa, rng);

  w.assignment = {};
  for (std::size_t k = 0; k < w.agvs.size(); ++k) {
    AgvState& a = w.agvs[k];
    TaskRoute route;
    if (a.carrying >= 0) {
      const TransportTask& t = w.tasks[static_cast<std::size_t>(a.carrying)];
      route.push_back({EntryKind::delivery, t.id, t.delivery});
      w.assignment.agv_of[t.id] = a.agv.id;
    }
    for (const RouteEntry& e : problem.expand(k, result.best.sequences[k])) route.push_back(e);
    for (int id : result.best.sequences[k]) {
      w.assignment.agv_of[id] = a.agv.id;
      w.task_state[static_cast<std::size_t>(id)].agv = a.agv.id;
    }
    w.assignment.routes[a.agv.id] = route;
    a.agv.task_route = std::move(route);
    a.leg = 0;
    a.park = kNoVertex;
    a.needs_plan = true;
  }
}

// Where an AGV expects to be from `now` on, as carried in its uplink report.
std::vector<TimedVertex> intended_route(const WorldState& w, const AgvState& a, Slot now) {
  const int horizon = w.config.router.horizon;
  std::vector<TimedVertex> out;
  for (const TimedVertex& tv : a.agv.nav_path)
    if (tv.t >= now) out.push_back(tv);
  if (out.empty() || out.front().t != now) {
    out.clear();
    out.push_back({a.agv.location, now});
  }
  Slot hold_until = out.back().t;
  if (a.leg >= a.agv.task_route.size()) {
    hold_until = now + horizon - 1;
  } else if (const RouteEntry& e = a.agv.task_route[a.leg]; e.kind == EntryKind::pickup) {
    const auto& prep = w.task_state[static_cast<std::size_t>(e.task)].prep;
    hold_until = prep ? std::max(hold_until, std::min(*prep, now + horizon - 1)) : now + horizon - 1;
  }
  for (Slot s = out.back().t + 1; s <= hold_until; ++s) out.push_back({out.back().v, s});
  return out;
}

// Completes every key-node visit available at the AGV's current cell.
void service(WorldState& w, AgvState& a, Slot now, std::vector<int>& delivered) {
  const FactoryGraph& g = *w.graph;
  while (a.leg < a.agv.task_route.size()) {
    const RouteEntry& e = a.agv.task_route[a.leg];
    if (!at_service_cell(g, a.agv.location, e.node)) return;
    if (e.kind == EntryKind::resupply) {
      a.agv.payload = a.agv.capacity;
    } else if (e.kind == EntryKind::pickup) {
      TaskState& s = w.task_state[static_cast<std::size_t>(e.task)];
      if (!s.prep || *s.prep > now) return;
      s.picked = now;
      a.carrying = e.task;
      a.product = w.tasks[static_cast<std::size_t>(e.task)].qty_out;
    } else {
      const TransportTask& t = w.tasks[static_cast<std::size_t>(e.task)];
      TaskState& s = w.task_state[static_cast<std::size_t>(e.task)];
      s.delivered = now;
      a.agv.payload -= t.qty_in;
      a.carrying = -1;
      a.product = 0;
      delivered.push_back(t.id);
      if (const TransportTask* d = downstream_of(w, t)) input_arrival(w, d->id, now);
    }
    ++a.leg;
    a.needs_plan = true;
  }
}

// Rebuilds the resupply stops of the unfinished part of a route, topping up before any
// pickup whose delivery demand exceeds the remaining payload.
void refresh_resupply(const WorldState& w, AgvState& a) {
  const DistanceTable& dist = *w.dist;
  TaskRoute& route = a.agv.task_route;
  TaskRoute rest;
  for (std::size_t i = a.leg; i < route.size(); ++i)
    if (route[i].kind != EntryKind::resupply) rest.push_back(route[i]);
  route.resize(a.leg);
  Vertex pos = a.agv.location;
  int payload = a.agv.payload;
  if (a.carrying >= 0) payload -= w.tasks[static_cast<std::size_t>(a.carrying)].qty_in;
  for (const RouteEntry& e : rest) {
    if (e.kind == EntryKind::pickup) {
      const TransportTask& t = w.tasks[static_cast<std::size_t>(e.task)];
      if (payload < t.qty_in) {
        Vertex best = kNoVertex;
        int detour = DistanceTable::kUnreachable;
        for (Vertex u : dist.graph().resupply_nodes()) {
          const int d = dist.between(pos, u) + dist.to_node(u, t.pickup);
          if (d < detour) {
            detour = d;
            best = u;
          }
        }
        if (best != kNoVertex) {
          route.push_back({EntryKind::resupply, -1, best});
          pos = best;
          payload = a.agv.capacity;
        }
      }
      payload -= t.qty_in;
    }
    route.push_back(e);
    pos = dist.nearest_service_cell(pos, e.node);
  }
}

// Dispatch rule: an idle-handed AGV whose next pickup has no input yet moves the first
// later task with a scheduled product to the front. Waiting on an unscheduled product can
// otherwise close a cycle of AGVs waiting on each other's deliveries.
void skip_unscheduled(WorldState& w, AgvState& a) {
  if (a.carrying >= 0) return;
  TaskRoute& route = a.agv.task_route;
  std::size_t cur = a.leg;
  while (cur < route.size() && route[cur].kind == EntryKind::resupply) ++cur;
  if (cur >= route.size() || route[cur].kind != EntryKind::pickup) return;
  if (w.task_state[static_cast<std::size_t>(route[cur].task)].prep) return;
  for (std::size_t j = cur + 1; j < route.size(); ++j) {
    if (route[j].kind != EntryKind::pickup || !w.task_state[static_cast<std::size_t>(route[j].task)].prep) continue;
    const int task = route[j].task;
    TaskRoute reordered(route.begin(), route.begin() + static_cast<std::ptrdiff_t>(a.leg));
    for (std::size_t i = j; i < route.size(); ++i)
      if (route[i].task == task) reordered.push_back(route[i]);
    for (std::size_t i = a.leg; i < route.size(); ++i)
      if (route[i].task != task || route[i].kind == EntryKind::resupply) reordered.push_back(route[i]);
    route = std::move(reordered);
    refresh_resupply(w, a);
    a.needs_plan = true;
    return;
  }
}

// Empty-handed with the next pickup's input not yet delivered upstream.
bool awaiting_input(const WorldState& w, const AgvState& a) {
  if (a.carrying >= 0 || a.leg >= a.agv.task_route.size()) return false;
  const RouteEntry& e = a.agv.task_route[a.leg];
  return e.kind == EntryKind::pickup && !w.task_state[static_cast<std::size_t>(e.task)].prep;
}

// Nearest cell that services no key node, lowest vertex on ties. Empty cells come first; when
// the fleet outnumbers them, cells may be shared as long as one place stays free for traffic.
Vertex choose_park(const WorldState& w, const AgvState& self) {
  const FactoryGraph& g = *w.graph;
  std::vector<int> claims(static_cast<std::size_t>(g.vertex_count()), 0);
  for (const AgvState& a : w.agvs) {
    if (a.agv.id == self.agv.id) continue;
    ++claims[static_cast<std::size_t>(a.park != kNoVertex ? a.park : a.agv.location)];
  }
  const int share = std::max(1, w.config.router.kappa - 1);
  for (int limit = 1; limit <= share; ++limit) {
    Vertex best = kNoVertex;
    int best_d = DistanceTable::kUnreachable;
    for (Vertex v = 0; v < g.vertex_count(); ++v) {
      if (!g.traversable(v) || w.service_cell[static_cast<std::size_t>(v)]) continue;
      if (claims[static_cast<std::size_t>(v)] >= limit) continue;
      const int d = w.dist->between(self.agv.location, v);
      if (d < best_d) {
        best_d = d;
        best = v;
      }
    }
    if (best != kNoVertex) return best;
  }
  return kNoVertex;
}

Vertex path_at(const std::vector<TimedVertex>& path, Slot t) {
  if (path.empty()) return kNoVertex;
  const Slot off = t - path.front().t;
  if (off < 0 || off >= static_cast<Slot>(path.size())) return kNoVertex;
  return path[static_cast<std::size_t>(off)].v;
}

CongestionMap planning_map(const WorldState& w, const AgvState& a, Slot now, bool& used_global) {
  used_global = false;
  const FactoryGraph& g = *w.graph;
  if (w.config.mode == Mode::uncontrolled) return CongestionMap(g.vertex_count(), now, 0);
  CongestionMap local(g.vertex_count(), now, 2);
  const Observation obs = local_observation(w, a.agv.id, a.agv.sensing_range);
  for (const Neighbor& n : obs.neighbors) {
    local.add(n.location, now);
    Vertex next = n.location;
    if (n.last_action != Action::stay) {
      const Cell c = apply(n.last_action, g.cell(n.location));
      if (g.contains(c) && g.traversable(g.vertex(c))) next = g.vertex(c);
    }
    local.add(next, now + 1);
  }
  if (!is_comm(w.config.mode) || !a.global_map) return local;
  CongestionMap global = *a.global_map;
  for (const TimedVertex& tv : a.map_own_route) global.add(tv.v, tv.t, -1);
  used_global = true;
  return merge_maps(global, local);
}

void plan(WorldState& w, AgvState& a, Slot now) {
  const FactoryGraph& g = *w.graph;
  bool used_global = false;
  CongestionMap map = planning_map(w, a, now, used_global);
  if (a.escape) {
    CongestionMap mark(g.vertex_count(), now, w.config.router.horizon);
    for (Slot s = now + 1; s < now + w.config.router.horizon; ++s) mark.add(a.agv.location, s, w.config.router.kappa);
    map = merge_maps(map, mark);
    a.escape = false;
  }

  PlanRequest req;
  req.start = a.agv.location;
  req.t0 = now;
  if (a.park != kNoVertex) {
    req.goal = a.park;
  } else if (const RouteEntry& e = a.agv.task_route[a.leg]; e.kind == EntryKind::resupply) {
    req.goal = e.node;
  } else {
    req.goal = e.node;
    const TransportTask& t = w.tasks[static_cast<std::size_t>(e.task)];
    req.soft_delay = t.soft_delay;
    req.deadline = e.kind == EntryKind::delivery ? t.deadline
                                                 : t.deadline - w.dist->node_to_node(t.pickup, t.delivery);
    if (e.kind == EntryKind::pickup) req.ready_slot = w.task_state[static_cast<std::size_t>(e.task)].prep;
    const int h = heuristic(g, req.start, g.service_cells(e.node));
    if (now + h > *req.deadline + req.soft_delay) req.deadline.reset();
  }
  PlanResult r = plan_path(g, req, map, w.config.router);
  if (r.status != PlanStatus::found && req.deadline) {
    req.deadline.reset();
    r = plan_path(g, req, map, w.config.router);
  }
  ++w.metrics.replans;
  if (r.status == PlanStatus::found) {
    a.agv.nav_path = std::move(r.path.steps);
    a.needs_plan = false;
  } else {
    a.agv.nav_path = {{a.agv.location, now}, {a.agv.location, now + 1}};
    a.needs_plan = true;
  }
}

std::string log_line(const WorldState& w, Slot t, const std::vector<int>& delivered, int conflicts,
                     int collisions) {
  std::ostringstream os;
  os << "{\"t\":" << t << ",\"pos\":[";
  for (std::size_t k = 0; k < w.agvs.size(); ++k) {
    const Cell c = w.graph->cell(w.agvs[k].agv.location);
    os << (k ? "," : "") << '[' << c.x << ',' << c.y << ']';
  }
  os << "],\"delivered\":[";
  for (std::size_t i = 0; i < delivered.size(); ++i) os << (i ? "," : "") << delivered[i];
  os << "],\"conflicts\":" << conflicts << ",\"collisions\":" << collisions << "}\n";
  return os.str();
}

}  // namespace

Observation local_observation(const WorldState& w, int k, int range) {
  if (k < 0 || static_cast<std::size_t>(k) >= w.agvs.size())
    throw Error(ErrorCode::unknown_agv_id, "no AGV " + std::to_string(k));
  const FactoryGraph& g = *w.graph;
  Observation obs;
  obs.location = w.agvs[static_cast<std::size_t>(k)].agv.location;
  const Cell me = g.cell(obs.location);
  for (const AgvState& a : w.agvs) {
    if (a.agv.id == k) continue;
    if (manhattan(me, g.cell(a.agv.location)) <= range)
      obs.neighbors.push_back({a.agv.id, a.agv.location, a.agv.last_action});
  }
  for (Vertex v = 0; v < g.vertex_count(); ++v)
    if (g.traversable(v) && manhattan(me, g.cell(v)) <= range) obs.visible.push_back(v);
  return obs;
}

WorldState make_world(const ScenarioConfig& config, std::uint64_t seed) {
  validate(config);
  WorldState w;
  w.config = config;
  w.seed = seed;
  Layout layout = config.grid.layout == "columns" ? Layout::columns(config.grid.width, config.grid.height)
                                                  : Layout{config.grid.production, config.grid.resupply,
                                                           config.grid.obstacles, true};
  layout.production_blocks = config.grid.production_blocks;
  w.graph = std::make_shared<const FactoryGraph>(build_grid(config.grid.width, config.grid.height, layout));
  w.dist = std::make_shared<const DistanceTable>(*w.graph);
  const FactoryGraph& g = *w.graph;

  if (!config.tasks.list.empty()) {
    w.tasks = config.tasks.list;
    for (std::size_t i = 0; i < w.tasks.size(); ++i)
      if (w.tasks[i].id != static_cast<int>(i))
        throw Error(ErrorCode::config_invalid, "tasks.list ids must be 0, 1, 2, ... in order");
  } else if (config.tasks.gen.lines > 0) {
    TaskGenParams gen = config.tasks.gen;
    gen.capacity = config.agvs.capacity;
    w.tasks = generate_tasks(seed, gen, g, *w.dist);
  }
  w.service_cell.assign(static_cast<std::size_t>(g.vertex_count()), false);
  for (const auto* nodes : {&g.production_nodes(), &g.resupply_nodes()})
    for (Vertex n : *nodes)
      for (Vertex v : g.service_cells(n)) w.service_cell[static_cast<std::size_t>(v)] = true;
  w.task_state.assign(w.tasks.size(), {});
  w.metrics.tasks_total = static_cast<int>(w.tasks.size());
  w.metrics.completion.assign(w.tasks.size(), -1);

  std::vector<Vertex> starts;
  if (!config.agvs.start.empty()) {
    for (Cell c : config.agvs.start) {
      if (!g.contains(c) || !g.traversable(g.vertex(c)))
        throw Error(ErrorCode::config_invalid, "agvs.start holds a cell that is not traversable");
      starts.push_back(g.vertex(c));
    }
  } else {
    std::vector<Vertex> pool;
    for (int copy = 0; copy < config.router.kappa; ++copy)
      for (Vertex v = 0; v < g.vertex_count(); ++v)
        if (g.traversable(v)) pool.push_back(v);
    if (static_cast<std::size_t>(config.agvs.count) > pool.size())
      throw Error(ErrorCode::config_invalid, "agvs.count exceeds the grid's safe capacity");
    Rng rng = make_stream(seed, Stream::placement);
    for (int k = 0; k < config.agvs.count; ++k) {
      const auto j = static_cast<std::size_t>(k) + uniform_below(rng, pool.size() - static_cast<std::size_t>(k));
      std::swap(pool[static_cast<std::size_t>(k)], pool[j]);
      starts.push_back(pool[static_cast<std::size_t>(k)]);
    }
  }
  for (int k = 0; k < config.agvs.count; ++k) {
    AgvState a;
    a.agv.id = k;
    a.agv.location = starts[static_cast<std::size_t>(k)];
    a.agv.capacity = config.agvs.capacity;
    a.agv.payload = config.agvs.initial_payload;
    a.agv.sensing_range = config.agvs.sensing_range;
    w.agvs.push_back(std::move(a));
  }
  w.traffic_rng = make_stream(seed, Stream::traffic);
  w.channel_rng = make_stream(seed, Stream::channel);
  return w;
}

bool finished(const WorldState& w) {
  return std::all_of(w.task_state.begin(), w.task_state.end(), [](const TaskState& s) { return s.delivered.has_value(); });
}

void step(WorldState& w) {
  const Slot now = w.t;
  const ScenarioConfig& cfg = w.config;
  const FactoryGraph& g = *w.graph;
  const bool comm = is_comm(cfg.mode);
  const int kappa = cfg.router.kappa;
  const auto K = w.agvs.size();

  // Task releases; any new demand triggers a reassignment of all unstarted tasks.
  bool released = false;
  for (const TransportTask& t : w.tasks) {
    TaskState& s = w.task_state[static_cast<std::size_t>(t.id)];
    if (s.released || t.arrival_slot > now) continue;
    s.released = true;
    released = true;
    if (t.priority == 1) input_arrival(w, t.id, t.arrival_slot);
  }
  if (released) reconfigure(w);

  // Uplink and edge processing.
  if (comm) {
    std::vector<int> ids(K);
    std::iota(ids.begin(), ids.end(), 0);
    const std::vector<int> attempts = schedule_traffic(ids, now, cfg.channel, w.traffic_rng);
    std::vector<int> delivered = attempts;
    if (cfg.mode == Mode::comm_realistic) {
      std::vector<Transmission> tx;
      for (int k : attempts) tx.push_back({k, pick_channels(cfg.channel.channels, cfg.channel.selected, w.channel_rng)});
      delivered = simulate_slot(tx, cfg.channel, w.channel_rng).delivered;
    }
    w.metrics.uplink_attempts += static_cast<long>(attempts.size());
    w.metrics.uplink_delivered += static_cast<long>(delivered.size());
    for (int k : delivered) {
      AgvState& a = w.agvs[static_cast<std::size_t>(k)];
      a.last_report = intended_route(w, a, now);
      w.registry[k] = {now, a.agv.location, a.last_report};
      a.reported = true;
    }
    if (now % cfg.channel.interval == 0) {
      const CongestionMap map = build_global_map(w.registry, g.vertex_count(), now, cfg.router.horizon, staleness(cfg));
      for (AgvState& a : w.agvs) {
        if (!a.reported) continue;
        a.global_map = map;
        a.map_received = now;
        a.map_own_route = a.last_report;
        a.reported = false;
      }
    }
  }

  // Key-node work at the current cells.
  std::vector<int> delivered;
  for (AgvState& a : w.agvs) service(w, a, now, delivered);
  for (int id : delivered) w.metrics.completion[static_cast<std::size_t>(id)] = now;

  // Decisions over the snapshot.
  std::vector<Move> moves(K);
  std::vector<bool> local_reasoning(K, false);
  for (std::size_t k = 0; k < K; ++k) {
    AgvState& a = w.agvs[k];
    moves[k] = {a.agv.id, a.agv.location, a.agv.location};
    ++w.metrics.agv_slots;
    if (cfg.mode == Mode::local_only) {
      local_reasoning[k] = true;
    } else if (comm) {
      const bool fresh = a.global_map && now - a.map_received < cfg.channel.interval &&
                         now - a.map_received < cfg.router.horizon;
      local_reasoning[k] = !fresh;
      if (!fresh) ++w.metrics.fallback_slots;
    }
    if (a.stall > 0) {
      --a.stall;
      continue;
    }
    if (a.leg < a.agv.task_route.size()) skip_unscheduled(w, a);
    if (a.leg >= a.agv.task_route.size() || awaiting_input(w, a)) {
      // Nothing to fetch yet: keep service cells clear for AGVs that have work there.
      if (a.park == kNoVertex && w.service_cell[static_cast<std::size_t>(a.agv.location)]) {
        a.park = choose_park(w, a);
        a.needs_plan = true;
      }
      if (a.park == kNoVertex || a.park == a.agv.location) {
        a.park = kNoVertex;
        continue;
      }
    } else {
      if (a.park != kNoVertex) {
        a.park = kNoVertex;
        a.needs_plan = true;
      }
      const RouteEntry& e = a.agv.task_route[a.leg];
      if (e.kind == EntryKind::pickup && at_service_cell(g, a.agv.location, e.node)) continue;  // product not ready
    }
    if (a.needs_plan || path_at(a.agv.nav_path, now) != a.agv.location || path_at(a.agv.nav_path, now + 1) == kNoVertex)
      plan(w, a, now);
    const Vertex next = path_at(a.agv.nav_path, now + 1);
    if (next != kNoVertex) moves[k].to = next;
  }

  // Conflict resolution under the right-of-way rules.
  int conflict_count = 0;
  std::vector<bool> yielded(K, false);
  if (cfg.mode != Mode::uncontrolled) {
    for (;;) {
      const auto conflicts = detect_conflicts(moves, kappa);
      if (conflicts.empty()) break;
      for (const Conflict& c : conflicts) {
        ++conflict_count;
        std::vector<Action> headings;
        for (int id : c.members)
          headings.push_back(action_between(g.cell(moves[static_cast<std::size_t>(id)].from),
                                            g.cell(moves[static_cast<std::size_t>(id)].to)));
        std::vector<bool> proceed(c.members.size(), false);
        if (c.kind == ConflictKind::swap || c.room > 0) proceed = resolve_right_of_way(c.members, headings);
        for (std::size_t i = 0; i < c.members.size(); ++i) {
          if (proceed[i]) continue;
          Move& m = moves[static_cast<std::size_t>(c.members[i])];
          m.to = m.from;
          yielded[static_cast<std::size_t>(c.members[i])] = true;
        }
      }
    }
    w.metrics.conflicts += conflict_count;
    for (std::size_t k = 0; k < K; ++k) {
      AgvState& a = w.agvs[k];
      if (!yielded[k]) continue;
      a.needs_plan = true;
      if (local_reasoning[k]) a.stall = cfg.sim.local_safety_stays;
      if (++a.blocked_streak > cfg.sim.patience) {
        a.blocked_streak = 0;
        a.escape = true;
        ++w.metrics.deadlock_escapes;
      }
    }
  }

  // Execute and audit.
  std::map<std::pair<Vertex, Vertex>, std::vector<int>> edges;
  for (const Move& m : moves)
    if (m.from != m.to) edges[{m.from, m.to}].push_back(m.agv);
  std::vector<int> collided;
  int collisions = 0;
  long swaps = 0;
  for (const auto& [edge, ids] : edges) {
    if (edge.first > edge.second) continue;
    auto back = edges.find({edge.second, edge.first});
    if (back == edges.end()) continue;
    swaps += static_cast<long>(ids.size() * back->second.size());
    collided.insert(collided.end(), ids.begin(), ids.end());
    collided.insert(collided.end(), back->second.begin(), back->second.end());
  }
  // Without coordination a head-on pair cannot pass: both bounce back to where they were.
  if (cfg.mode == Mode::uncontrolled)
    for (int id : collided) moves[static_cast<std::size_t>(id)].to = moves[static_cast<std::size_t>(id)].from;
  std::map<Vertex, int> occupancy;
  for (const Move& m : moves) ++occupancy[m.to];
  // An over-full cell is one collision; everyone in it is caught up.
  bool over = false;
  std::map<Vertex, bool> entered;
  for (const Move& m : moves) {
    if (occupancy[m.to] <= kappa) continue;
    over = true;
    if (m.from != m.to) entered[m.to] = true;
  }
  for (const Move& m : moves)
    if (entered.count(m.to)) collided.push_back(m.agv);
  collisions += static_cast<int>(entered.size());
  collisions += static_cast<int>(swaps);
  w.metrics.swaps_executed += swaps;
  w.metrics.collisions += collisions;
  if (over) ++w.metrics.occupancy_violations;
  if (cfg.sim.strict && cfg.mode != Mode::uncontrolled && (swaps || over))
    throw Error(ErrorCode::invariant_violation, "unsafe move executed at slot " + std::to_string(now));

  for (std::size_t k = 0; k < K; ++k) {
    AgvState& a = w.agvs[k];
    const Move& m = moves[k];
    const bool working = a.leg < a.agv.task_route.size();
    if (m.from == m.to) {
      a.agv.last_action = Action::stay;
      if (working) ++w.metrics.waits;
    } else {
      a.agv.last_action = action_between(g.cell(m.from), g.cell(m.to));
      a.agv.location = m.to;
      a.blocked_streak = 0;
    }
  }
  if (cfg.mode == Mode::uncontrolled) {
    std::sort(collided.begin(), collided.end());
    collided.erase(std::unique(collided.begin(), collided.end()), collided.end());
    for (int id : collided) {
      AgvState& a = w.agvs[static_cast<std::size_t>(id)];
      a.stall = std::max(a.stall, cfg.sim.collision_stall);
      a.needs_plan = true;
    }
  }

  if (w.log) *w.log << log_line(w, now, delivered, conflict_count, collisions);
  w.t = now + 1;
  w.metrics.slots = w.t;
}

Metrics run_scenario(const ScenarioConfig& config, std::uint64_t seed, std::ostream* log) {
  WorldState w = make_world(config, seed);
  w.log = log;
  if (log) {
    *log << "{\"grid\":[" << w.graph->width() << ',' << w.graph->height() << "],\"agvs\":" << w.agvs.size()
         << ",\"mode\":\"" << to_string(config.mode) << "\",\"seed\":" << seed << ",\"production\":[";
    const auto& prod = w.graph->production_nodes();
    for (std::size_t i = 0; i < prod.size(); ++i) {
      const Cell c = w.graph->cell(prod[i]);
      *log << (i ? "," : "") << '[' << c.x << ',' << c.y << ']';
    }
    *log << "]}\n";
  }
  while (!finished(w) && w.t < config.sim.slot_cap) step(w);

  Metrics& m = w.metrics;
  m.timeout = !finished(w);
  long tardy_sum = 0;
  for (const TransportTask& t : w.tasks) {
    const TaskState& s = w.task_state[static_cast<std::size_t>(t.id)];
    if (!s.delivered) continue;
    ++m.tasks_completed;
    m.makespan = std::max(m.makespan, *s.delivered);
    const Slot late = *s.delivered > t.deadline ? *s.delivered - t.deadline : 0;
    tardy_sum += late;
    m.max_tardiness = std::max(m.max_tardiness, late);
  }
  m.mean_tardiness = m.tasks_completed ? static_cast<double>(tardy_sum) / m.tasks_completed : 0.0;
  // An unfinished run is censored at the cap: its makespan is at least that long.
  if (m.timeout) m.makespan = w.t;
  return m;
}

}  // namespace agvsched
