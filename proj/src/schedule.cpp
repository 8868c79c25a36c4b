#include "agvsched/schedule.hpp"

#include <algorithm>
#include <queue>
#include <set>
#include <tuple>
#include <unordered_map>

#include "agvsched/error.hpp"

namespace agvsched {

std::string_view to_string(Constraint c) {
  switch (c) {
    case Constraint::uniqueness: return "4a";
    case Constraint::deadline: return "4b";
    case Constraint::payload: return "4c";
    case Constraint::capacity: return "4d";
    case Constraint::binary: return "4e";
    case Constraint::precedence: return "precedence";
  }
  return "?";
}

Slot makespan(const ScheduleTimeline& timeline, const Assignment& assignment) {
  Slot worst = 0;
  for (const auto& [task, agv] : assignment.agv_of) {
    auto it = timeline.delivery_arrival.find(task);
    if (it == timeline.delivery_arrival.end())
      throw Error(ErrorCode::missing_arrival, "no delivery arrival for task " + std::to_string(task));
    worst = std::max(worst, it->second);
  }
  return worst;
}

namespace {

struct TaskIndex {
  std::unordered_map<int, const TransportTask*> by_id;
  std::map<std::pair<int, int>, int> by_line_priority;  // (line, mu) -> id

  explicit TaskIndex(std::span<const TransportTask> tasks) {
    for (const auto& t : tasks) {
      by_id[t.id] = &t;
      by_line_priority[{t.line, t.priority}] = t.id;
    }
  }
  const TransportTask* find(int id) const {
    auto it = by_id.find(id);
    return it == by_id.end() ? nullptr : it->second;
  }
  const TransportTask* downstream(const TransportTask& t) const {
    auto it = by_line_priority.find({t.line, t.priority + 1});
    return it == by_line_priority.end() ? nullptr : find(it->second);
  }
  bool has_upstream(const TransportTask& t) const {
    return by_line_priority.count({t.line, t.priority - 1}) != 0;
  }
};

}  // namespace

ScheduleTimeline estimate_timeline(const Assignment& assignment, std::span<const TransportTask> tasks,
                                   std::span<const Agv> agvs, const DistanceTable& dist,
                                   Slot start_slot) {
  ScheduleTimeline tl;
  const TaskIndex index(tasks);

  struct Cursor {
    const TaskRoute* route = nullptr;
    std::size_t step = 0;
    Vertex pos = kNoVertex;
  };
  std::map<int, Cursor> cursors;
  std::unordered_map<int, std::pair<int, Slot>> waiter_of;  // task -> (AGV, arrival) parked at its pickup
  std::unordered_map<Vertex, Slot> robot_free;

  // (time, kind, id): kind 0 = product input reaches the robot, 1 = AGV reaches a key node.
  using Event = std::tuple<Slot, int, int>;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events;

  auto schedule_next = [&](int k, Slot prev_arrival, Slot prev_wait) {
    Cursor& c = cursors[k];
    if (c.step >= c.route->size()) return;
    const Vertex node = (*c.route)[c.step].node;
    const int travel = dist.to_node(c.pos, node);
    if (travel >= DistanceTable::kUnreachable) return;
    c.pos = dist.nearest_service_cell(c.pos, node);
    events.emplace(arrival_update(prev_arrival, prev_wait, travel), 1, k);
  };

  for (const Agv& agv : agvs) {
    auto it = assignment.routes.find(agv.id);
    if (it == assignment.routes.end()) continue;
    Cursor& c = cursors[agv.id];
    c.route = &it->second;
    c.pos = agv.location;
    schedule_next(agv.id, start_slot, 0);
  }
  for (const auto& t : tasks) {
    if (!assignment.agv_of.count(t.id)) continue;
    if (!index.has_upstream(t)) events.emplace(std::max(t.arrival_slot, start_slot), 0, t.id);
  }

  auto leave = [&](int k, Slot arrival, Slot wait) {
    Cursor& c = cursors[k];
    tl.arrivals[k].push_back(arrival);
    tl.waits[k].push_back(wait);
    ++c.step;
    schedule_next(k, arrival, wait);
  };

  while (!events.empty()) {
    const auto [time, kind, id] = events.top();
    events.pop();
    if (kind == 0) {
      const TransportTask& t = *index.find(id);
      Slot& free_at = robot_free[t.pickup];
      const Slot prep = preparation_time(free_at, time, t.processing_time);
      free_at = prep;
      tl.prep_times[id] = prep;
      if (auto w = waiter_of.find(id); w != waiter_of.end()) {
        const auto [k, arrived] = w->second;
        waiter_of.erase(w);
        leave(k, arrived, pickup_wait(prep, arrived));
      }
      continue;
    }
    Cursor& c = cursors[id];
    const RouteEntry& e = (*c.route)[c.step];
    if (e.kind == EntryKind::pickup) {
      auto pt = tl.prep_times.find(e.task);
      if (pt == tl.prep_times.end()) {
        waiter_of[e.task] = {id, time};  // product not scheduled yet
        continue;
      }
      leave(id, time, pickup_wait(pt->second, time));
      continue;
    }
    if (e.kind == EntryKind::delivery) {
      if (const TransportTask* t = index.find(e.task)) {
        tl.delivery_arrival[t->id] = time;
        tl.tardiness[t->id] = tardiness(time, t->deadline);
        if (const TransportTask* down = index.downstream(*t); down && assignment.agv_of.count(down->id))
          events.emplace(time, 0, down->id);
      }
    }
    leave(id, time, 0);
  }
  for (const auto& [task, agv] : assignment.agv_of) {
    if (auto it = tl.delivery_arrival.find(task); it != tl.delivery_arrival.end())
      tl.makespan = std::max(tl.makespan, it->second);
  }
  return tl;
}

std::vector<Violation> validate_assignment(const Assignment& assignment,
                                           std::span<const TransportTask> tasks,
                                           std::span<const Agv> agvs, const DistanceTable& dist) {
  const TaskIndex index(tasks);
  std::map<int, const Agv*> fleet;
  for (const Agv& a : agvs) fleet[a.id] = &a;

  for (const auto& [task, agv] : assignment.agv_of) {
    if (!index.find(task))
      throw Error(ErrorCode::unknown_task_id, "assignment names unknown task " + std::to_string(task));
    if (!fleet.count(agv))
      throw Error(ErrorCode::unknown_agv_id, "assignment names unknown AGV " + std::to_string(agv));
  }
  for (const auto& [agv, route] : assignment.routes) {
    if (!fleet.count(agv))
      throw Error(ErrorCode::unknown_agv_id, "route for unknown AGV " + std::to_string(agv));
    for (const RouteEntry& e : route)
      if (e.kind != EntryKind::resupply && !index.find(e.task))
        throw Error(ErrorCode::unknown_task_id, "route names unknown task " + std::to_string(e.task));
  }

  std::vector<Violation> out;
  bool structural = false;
  auto flag = [&](Constraint c, int task, int agv, std::string detail) {
    if (c != Constraint::deadline) structural = true;
    out.push_back({c, task, agv, std::move(detail)});
  };

  // B_{k,m} = 1 when either the matrix or the route of k names task m.
  for (const TransportTask& t : tasks) {
    std::set<int> holders;
    if (auto it = assignment.agv_of.find(t.id); it != assignment.agv_of.end()) holders.insert(it->second);
    for (const auto& [agv, route] : assignment.routes)
      for (const RouteEntry& e : route)
        if (e.kind != EntryKind::resupply && e.task == t.id) holders.insert(agv);
    if (holders.size() != 1) {
      flag(Constraint::uniqueness, t.id, -1,
           "task conducted by " + std::to_string(holders.size()) + " AGVs");
      continue;
    }
    const int k = *holders.begin();
    auto it = assignment.agv_of.find(t.id);
    auto rt = assignment.routes.find(k);
    int pickups = 0, deliveries = 0;
    if (rt != assignment.routes.end())
      for (const RouteEntry& e : rt->second) {
        if (e.task != t.id) continue;
        if (e.kind == EntryKind::pickup) ++pickups;
        if (e.kind == EntryKind::delivery) ++deliveries;
      }
    if (it == assignment.agv_of.end() || pickups != 1 || deliveries != 1)
      flag(Constraint::binary, t.id, k, "matrix entry and route disagree");
  }

  for (const auto& [agv, route] : assignment.routes) {
    const Agv& a = *fleet.at(agv);
    int payload = a.payload;
    int product = 0;
    std::map<int, std::size_t> picked_at;
    std::map<int, int> last_priority;  // line -> highest mu seen so far
    for (std::size_t i = 0; i < route.size(); ++i) {
      const RouteEntry& e = route[i];
      if (e.kind == EntryKind::resupply) {
        payload = a.capacity;
        continue;
      }
      const TransportTask& t = *index.find(e.task);
      const Vertex expected = e.kind == EntryKind::pickup ? t.pickup : t.delivery;
      if (e.node != expected) flag(Constraint::binary, t.id, agv, "route node differs from task node");
      if (e.kind == EntryKind::pickup) {
        if (auto lp = last_priority.find(t.line); lp != last_priority.end() && lp->second >= t.priority)
          flag(Constraint::precedence, t.id, agv, "line priorities out of order");
        last_priority[t.line] = t.priority;
        picked_at[t.id] = i;
        if (a.capacity - product < t.qty_out)
          flag(Constraint::capacity, t.id, agv, "no room for the produced units");
        product += t.qty_out;
      } else {
        if (!picked_at.count(t.id)) flag(Constraint::precedence, t.id, agv, "delivery before pickup");
        if (payload < t.qty_in) flag(Constraint::payload, t.id, agv, "payload below delivery demand");
        payload = std::max(0, payload - t.qty_in);
        if (picked_at.count(t.id)) product = std::max(0, product - t.qty_out);
      }
    }
  }

  if (structural) return out;
  const ScheduleTimeline tl = estimate_timeline(assignment, tasks, agvs, dist);
  for (const TransportTask& t : tasks) {
    auto it = tl.delivery_arrival.find(t.id);
    if (it == tl.delivery_arrival.end()) {
      flag(Constraint::deadline, t.id, assignment.agv_of.at(t.id), "never delivered");
      continue;
    }
    if (tardiness(it->second, t.deadline) > t.soft_delay)
      flag(Constraint::deadline, t.id, assignment.agv_of.at(t.id),
           "late by " + std::to_string(tardiness(it->second, t.deadline)) + " slots");
  }
  return out;
}

}  // namespace agvsched
