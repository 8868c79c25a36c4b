#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "agvsched/factory.hpp"
#include "agvsched/mrta.hpp"
#include "agvsched/netsim.hpp"
#include "agvsched/router.hpp"

namespace agvsched {

enum class Mode { uncontrolled, local_only, comm_ideal, comm_realistic };

std::string_view to_string(Mode mode);
// Throws Error{config_invalid}.
Mode mode_from_string(std::string_view name);

struct GridSpec {
  int width = 10;
  int height = 10;
  std::string layout = "columns";  // "columns" or "custom"
  std::vector<Cell> production;    // used when layout == "custom"
  std::vector<Cell> resupply;
  std::vector<Cell> obstacles;
  bool production_blocks = true;
};

struct FleetSpec {
  int count = 10;
  int capacity = 20;
  int sensing_range = 2;
  int initial_payload = 20;
  std::vector<Cell> start;  // optional fixed start cells; otherwise random distinct aisle cells
};

struct TaskSpec {
  TaskGenParams gen{60, 4, 5, 10, 5, 10, 20, 3, 60, 6.0, 20};
  std::vector<TransportTask> list;  // when non-empty, replaces generated tasks
};

struct SimSpec {
  Slot slot_cap = 5000;
  int patience = 10;            // consecutive blocked slots before a forced escape replan
  int local_safety_stays = 2;   // extra stays after yielding without a fresh global map
  int collision_stall = 3;      // uncontrolled mode: recovery slots after a collision
  int staleness_cap = 0;        // <= 0 selects 2 * router.horizon
  bool strict = false;          // throw Error{invariant_violation} on a safety breach
};

struct ScenarioConfig {
  GridSpec grid;
  FleetSpec agvs;
  ChannelConfig channel{1, 1, 1, 0.0, TrafficPattern::bernoulli};
  Mode mode = Mode::comm_ideal;
  TaskSpec tasks;
  RouterConfig router;
  SaParams sa;
  SimSpec sim;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
};

// Range checks on every field. Throws Error{config_invalid} naming the field.
void validate(const ScenarioConfig& config);

}  // namespace agvsched
