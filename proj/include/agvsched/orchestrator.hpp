#pragma once

#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "agvsched/factory.hpp"
#include "agvsched/mrta.hpp"
#include "agvsched/netsim.hpp"
#include "agvsched/rng.hpp"
#include "agvsched/router.hpp"
#include "agvsched/scenario.hpp"

namespace agvsched {

struct Neighbor {
  int id = 0;
  Vertex location = kNoVertex;
  Action last_action = Action::stay;
};

struct Observation {
  Vertex location = kNoVertex;
  std::vector<Neighbor> neighbors;  // ascending id
  std::vector<Vertex> visible;      // traversable cells within the sensing range
};

// Latest successfully uplinked report of one AGV.
struct RegistryEntry {
  Slot reported_at = 0;
  Vertex location = kNoVertex;
  std::vector<TimedVertex> route;
};

using RouteRegistry = std::map<int, RegistryEntry>;

// Registered routes counted per (vertex, slot) over [now, now + horizon). Entries older
// than `staleness_cap` slots are skipped.
CongestionMap build_global_map(const RouteRegistry& registry, int vertex_count, Slot now, int horizon,
                               int staleness_cap);

// Pointwise maximum, aligned by absolute slot over the union of both windows.
CongestionMap merge_maps(const CongestionMap& a, const CongestionMap& b);

struct Move {
  int agv = 0;
  Vertex from = kNoVertex;
  Vertex to = kNoVertex;
};

enum class ConflictKind { vertex, swap };

struct Conflict {
  ConflictKind kind = ConflictKind::vertex;
  Vertex at = kNoVertex;     // contested cell; for swaps the lower of the two cells
  std::vector<int> members;  // AGV ids moving into the contested cell or edge, ascending
  int room = 0;              // vertex conflicts: free places left by the AGVs staying there
};

// Vertex conflicts: a cell whose resulting occupancy would exceed `capacity` while at
// least one AGV moves into it. Swaps: a moves u->v while b moves v->u.
std::vector<Conflict> detect_conflicts(std::span<const Move> moves, int capacity);

// Right-of-way rank: north, south, east, west, then stay.
int heading_rank(Action heading);

// Only the top-ranked member proceeds; ties on heading go to the lower id.
// Returns, per member in input order, true when the AGV may proceed.
std::vector<bool> resolve_right_of_way(std::span<const int> members, std::span<const Action> headings);

struct TaskState {
  bool released = false;
  std::optional<Slot> prep;       // product ready slot once its input has arrived
  std::optional<Slot> picked;
  std::optional<Slot> delivered;
  int agv = -1;
};

struct AgvState {
  Agv agv;
  std::size_t leg = 0;           // next entry of agv.task_route
  int carrying = -1;             // task whose product is on board
  int product = 0;
  bool needs_plan = true;
  int stall = 0;                 // forced stays pending
  int blocked_streak = 0;
  bool escape = false;
  Vertex park = kNoVertex;       // idle AGVs clear service cells for a parking cell
  std::optional<CongestionMap> global_map;
  Slot map_received = -1;
  std::vector<TimedVertex> map_own_route;  // own route as counted inside global_map
  bool reported = false;                   // report delivered since the last broadcast
  std::vector<TimedVertex> last_report;
};

struct Metrics {
  Slot makespan = 0;
  double mean_tardiness = 0.0;
  Slot max_tardiness = 0;
  int tasks_total = 0;
  int tasks_completed = 0;
  bool timeout = false;
  Slot slots = 0;
  long uplink_attempts = 0;
  long uplink_delivered = 0;
  long conflicts = 0;
  long waits = 0;              // AGV-slots spent stationary while work remained
  long replans = 0;
  long deadlock_escapes = 0;
  long swaps_executed = 0;
  long occupancy_violations = 0;  // slots with some cell above kappa
  long collisions = 0;
  long fallback_slots = 0;
  long agv_slots = 0;
  std::vector<Slot> completion;   // per task id, -1 when not delivered

  double uplink_rate() const {
    return uplink_attempts ? static_cast<double>(uplink_delivered) / static_cast<double>(uplink_attempts) : 0.0;
  }
  double fallback_fraction() const {
    return agv_slots ? static_cast<double>(fallback_slots) / static_cast<double>(agv_slots) : 0.0;
  }
  friend bool operator==(const Metrics&, const Metrics&) = default;
};

struct WorldState {
  ScenarioConfig config;
  std::uint64_t seed = 0;
  Slot t = 0;
  std::shared_ptr<const FactoryGraph> graph;
  std::shared_ptr<const DistanceTable> dist;
  std::vector<TransportTask> tasks;  // indexed by task id
  std::vector<TaskState> task_state;
  std::vector<AgvState> agvs;        // indexed by AGV id
  std::vector<bool> service_cell;    // cells from which some key node is serviced
  Assignment assignment;
  RouteRegistry registry;
  std::map<Vertex, Slot> robot_free;
  Rng traffic_rng, channel_rng;
  int reconfigurations = 0;
  Metrics metrics;
  std::ostream* log = nullptr;       // one JSON object per slot when set
};

// Builds the grid, tasks and fleet. Throws Error{config_invalid | ...} from the parts.
WorldState make_world(const ScenarioConfig& config, std::uint64_t seed);

Observation local_observation(const WorldState& world, int k, int range);

bool finished(const WorldState& world);

// Advances the world by one slot.
void step(WorldState& world);

// Runs until every task is delivered or the slot cap is hit (metrics.timeout).
Metrics run_scenario(const ScenarioConfig& config, std::uint64_t seed, std::ostream* log = nullptr);

}  // namespace agvsched
