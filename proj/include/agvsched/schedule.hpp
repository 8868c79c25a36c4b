#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "agvsched/factory.hpp"

namespace agvsched {

// Arrival at the next key node: previous arrival + wait there + travel of the sub-path.
constexpr Slot arrival_update(Slot prev_arrival, Slot prev_wait, Slot travel) {
  return prev_arrival + prev_wait + travel;
}

// Earliest slot the product of a task is ready: the production robot must be free
// (previous product at the node ready) and the upstream input must have been delivered.
constexpr Slot preparation_time(Slot prev_task_prep, Slot upstream_delivery, Slot processing) {
  return (prev_task_prep > upstream_delivery ? prev_task_prep : upstream_delivery) + processing;
}

constexpr Slot tardiness(Slot delivery_arrival, Slot deadline) {
  return delivery_arrival > deadline ? delivery_arrival - deadline : 0;
}

constexpr Slot pickup_wait(Slot prep_time, Slot arrival) {
  return prep_time > arrival ? prep_time - arrival : 0;
}

struct ScheduleTimeline {
  std::map<int, std::vector<Slot>> arrivals;  // AGV -> arrival per route step
  std::map<int, std::vector<Slot>> waits;     // AGV -> wait per route step
  std::map<int, Slot> prep_times;             // task -> product ready slot
  std::map<int, Slot> delivery_arrival;       // task -> completion slot
  std::map<int, Slot> tardiness;              // task -> slots late
  Slot makespan = 0;
};

// Latest delivery arrival over assigned tasks; 0 for an empty assignment.
// Throws Error{missing_arrival} when an assigned task has no recorded delivery.
Slot makespan(const ScheduleTimeline& timeline, const Assignment& assignment);

// Event-driven evaluation of the arrival and preparation-time recursions along every
// route, with travel taken as the shortest-path distance between consecutive key nodes.
// Production robots process inputs first-come first-served; a line head's input is
// available at its release slot. Tasks that can never be picked up (cyclic waits) are
// left without a delivery arrival.
ScheduleTimeline estimate_timeline(const Assignment& assignment, std::span<const TransportTask> tasks,
                                   std::span<const Agv> agvs, const DistanceTable& dist,
                                   Slot start_slot = 0);

enum class Constraint { uniqueness, deadline, payload, capacity, binary, precedence };

std::string_view to_string(Constraint c);

struct Violation {
  Constraint constraint;
  int task = -1;
  int agv = -1;
  std::string detail;
};

// One record per breached constraint instance; empty iff the assignment is feasible.
// Throws Error{unknown_task_id | unknown_agv_id}.
std::vector<Violation> validate_assignment(const Assignment& assignment,
                                           std::span<const TransportTask> tasks,
                                           std::span<const Agv> agvs, const DistanceTable& dist);

}  // namespace agvsched
