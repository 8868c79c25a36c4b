#pragma once

#include <span>
#include <unordered_map>
#include <vector>

#include "agvsched/factory.hpp"
#include "agvsched/rng.hpp"

namespace agvsched {

struct SaParams {
  double t_init = 0.0;   // <= 0 selects half the initial estimated makespan
  double t_stop = 1e-3;
  double alpha = 0.995;
  int destroy_size = 0;  // most tasks removed per iteration; <= 0 selects max(2, ceil(0.2 * M)) capped at M
  double repair_noise = 0.2;
  double removal_bias = 1.0;
  int max_iterations = 10000;
  bool debug_validate = false;
};

// Throws Error{invalid_argument} naming the offending field.
void validate(const SaParams& params);

struct EstimatedCost {
  std::vector<int> per_agv;
  int total = 0;
};

// t~_k summed along the key nodes of each route (shortest paths, no waits or congestion),
// starting from the AGV's location. Order of per_agv follows `agvs`.
// Throws Error{unreachable_node}.
EstimatedCost estimated_completion(const Assignment& assignment, const DistanceTable& dist,
                                   std::span<const Agv> agvs);

// Metropolis acceptance for a non-improving move, clamped to [0, 1].
// Throws Error{nonpositive_temperature}.
double accept_probability(double delta, double temperature);

// Starting state of one AGV as seen by the assignment solver. `busy` covers committed
// work (an in-progress delivery) that ends at `start`.
struct FleetMember {
  int id = 0;
  Vertex start = kNoVertex;
  int payload = 0;
  int capacity = 20;
  int busy = 0;
};

std::vector<FleetMember> fleet_from(std::span<const Agv> agvs);

// Task order per fleet member (indices follow the fleet vector). Resupply stops are
// implied and materialised by MrtaProblem::expand.
struct Plan {
  std::vector<std::vector<int>> sequences;
  friend bool operator==(const Plan&, const Plan&) = default;
};

class MrtaProblem {
 public:
  MrtaProblem(const DistanceTable& dist, std::span<const TransportTask> tasks,
              std::vector<FleetMember> fleet);

  static constexpr int kInfeasible = 1 << 29;

  std::size_t fleet_size() const { return fleet_.size(); }
  const std::vector<FleetMember>& fleet() const { return fleet_; }
  std::span<const TransportTask> tasks() const { return tasks_; }
  const TransportTask& task(int id) const;
  const DistanceTable& dist() const { return *dist_; }

  // Estimated completion of one AGV, optionally with `extra` inserted before `at`.
  int agv_cost(std::size_t k, std::span<const int> seq, int extra = -1, std::size_t at = 0) const;

  // Running state of one AGV along its route.
  struct RouteState {
    long t = 0;
    Vertex pos = kNoVertex;
    int payload = 0;
  };
  RouteState start_state(std::size_t k) const;
  // Serves one task (with a resupply detour when payload runs short); false if infeasible.
  bool advance(std::size_t k, RouteState& s, int id) const;
  EstimatedCost cost(const Plan& plan) const;
  TaskRoute expand(std::size_t k, std::span<const int> seq) const;
  Assignment to_assignment(const Plan& plan) const;
  Plan empty_plan() const { return Plan{std::vector<std::vector<int>>(fleet_.size())}; }

 private:
  const DistanceTable* dist_;
  std::span<const TransportTask> tasks_;
  std::vector<FleetMember> fleet_;
  std::vector<const TransportTask*> by_id_;  // indexed by task id
};

struct Destroyed {
  Plan partial;
  std::vector<int> removed;
};

// Removes `destroy_size` tasks without replacement, each draw weighted by priority^bias.
// Throws Error{invalid_argument} when destroy_size is 0 or exceeds the assigned count.
Destroyed destroy(const MrtaProblem& problem, const Plan& plan, int destroy_size, double bias,
                  Rng& rng);

// Reinserts removed tasks in ascending priority at the (AGV, position) minimising the
// estimated makespan, then the AGV's own increase, then AGV index, then position.
// Throws Error{no_feasible_insertion}.
// With `rng`, removed tasks of equal priority are inserted in random order and each
// candidate makespan is perturbed by up to +-noise times the current largest route cost;
// without it the insertion is plain greedy, equal priorities going by line then id.
Plan repair(const MrtaProblem& problem, Plan partial, std::vector<int> removed, Rng* rng = nullptr,
            double noise = 0.0);

Plan greedy_initial(const MrtaProblem& problem);

struct SaResult {
  Plan best;
  int best_cost = 0;
  int initial_cost = 0;
  int iterations = 0;
  std::vector<int> best_trace;  // best-seen cost after each iteration
};

// Simulated annealing over destroy/repair neighbourhoods.
// Throws Error{infeasible_instance}.
SaResult sa_solve(const MrtaProblem& problem, const SaParams& params, Rng& rng);

// Convenience overload: the fleet starts at the AGVs' current locations.
Assignment sa_solve(std::span<const TransportTask> tasks, std::span<const Agv> agvs,
                    const DistanceTable& dist, const SaParams& params, Rng& rng);

}  // namespace agvsched
