#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string_view>
#include <vector>

#include "agvsched/rng.hpp"

namespace agvsched {

using Vertex = int;
using Slot = int;

inline constexpr Vertex kNoVertex = -1;

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(const Cell&, const Cell&) = default;
};

inline int manhattan(Cell a, Cell b) {
  return (a.x > b.x ? a.x - b.x : b.x - a.x) + (a.y > b.y ? a.y - b.y : b.y - a.y);
}

enum class NodeRole : std::uint8_t { aisle, production, resupply, blocked };

std::string_view to_string(NodeRole role);

// Placement of fixed-location equipment on the grid.
struct Layout {
  std::vector<Cell> production;
  std::vector<Cell> resupply;
  std::vector<Cell> obstacles;
  // Production robots occupy their cell; AGVs service them from a neighbouring cell.
  bool production_blocks = true;

  static Layout empty() { return {}; }
  // Production robots in every third column starting at x=2, leaving two-row aisles
  // along the top and bottom edges; resupply points on the outer columns.
  static Layout columns(int width, int height);
};

// Undirected 4-neighbour grid world.
class FactoryGraph {
 public:
  int width() const { return width_; }
  int height() const { return height_; }
  int vertex_count() const { return width_ * height_; }
  std::size_t edge_count() const { return edge_count_; }

  bool contains(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  Vertex vertex(Cell c) const { return c.y * width_ + c.x; }
  Cell cell(Vertex v) const { return {v % width_, v / width_}; }

  NodeRole role(Vertex v) const { return roles_[static_cast<std::size_t>(v)]; }
  bool traversable(Vertex v) const { return traversable_[static_cast<std::size_t>(v)]; }

  // Grid adjacency (edge set E), excluding blocked cells.
  std::span<const Vertex> adjacent(Vertex v) const;
  // Adjacent vertices an AGV may step onto.
  std::span<const Vertex> moves(Vertex v) const;
  // Cells from which a key node is serviced: the traversable neighbours of a blocking
  // production cell, otherwise the node itself.
  std::span<const Vertex> service_cells(Vertex node) const;

  const std::vector<Vertex>& production_nodes() const { return production_; }
  const std::vector<Vertex>& resupply_nodes() const { return resupply_; }
  bool production_blocks() const { return production_blocks_; }

  friend FactoryGraph build_grid(int width, int height, const Layout& layout);

 private:
  int width_ = 0;
  int height_ = 0;
  bool production_blocks_ = true;
  std::size_t edge_count_ = 0;
  std::vector<NodeRole> roles_;
  std::vector<bool> traversable_;
  std::vector<std::vector<Vertex>> adjacent_;
  std::vector<std::vector<Vertex>> moves_;
  std::vector<std::vector<Vertex>> service_;
  std::vector<Vertex> production_;
  std::vector<Vertex> resupply_;
};

// Throws Error{disconnected_world | overlapping_roles | out_of_bounds | invalid_argument}.
FactoryGraph build_grid(int width, int height, const Layout& layout);

// All-pairs unit-cost shortest paths over traversable cells (BFS from every cell).
class DistanceTable {
 public:
  static constexpr int kUnreachable = 1 << 29;

  explicit DistanceTable(const FactoryGraph& graph);

  int between(Vertex from, Vertex to) const {
    return dist_[static_cast<std::size_t>(from) * n_ + static_cast<std::size_t>(to)];
  }
  // Distance to the nearest service cell of a key node.
  int to_node(Vertex from, Vertex node) const;
  // The service cell reached by to_node (lowest vertex index on ties).
  Vertex nearest_service_cell(Vertex from, Vertex node) const;
  // Shortest distance between the service areas of two key nodes.
  int node_to_node(Vertex a, Vertex b) const;

  const FactoryGraph& graph() const { return *graph_; }

 private:
  const FactoryGraph* graph_;
  std::size_t n_;
  std::vector<int> dist_;
  // Cached to_node / nearest_service_cell for production and resupply nodes.
  std::vector<int> key_index_;
  std::size_t keys_ = 0;
  std::vector<int> near_dist_;
  std::vector<Vertex> near_cell_;
};

struct TransportTask {
  int id = 0;
  Vertex pickup = kNoVertex;
  Vertex delivery = kNoVertex;
  int qty_out = 0;  // units produced at pickup
  int qty_in = 0;   // units demanded at delivery
  Slot deadline = 0;
  int soft_delay = 0;
  int priority = 1;  // position within its production line, from 1
  int line = 0;
  int processing_time = 0;
  Slot arrival_slot = 0;

  friend bool operator==(const TransportTask&, const TransportTask&) = default;
};

struct TaskGenParams {
  int lines = 1;
  int per_line = 1;
  int qty_lo = 5, qty_hi = 10;
  int proc_lo = 5, proc_hi = 10;
  int capacity = 20;
  int waves = 1;           // lines are split into this many contiguous release waves
  int wave_interval = 0;   // slots between consecutive waves
  double slack_factor = 6.0;
  int soft_delay = 20;
};

// Throws Error{infeasible_quantity | invalid_argument}.
std::vector<TransportTask> generate_tasks(std::uint64_t seed, const TaskGenParams& params,
                                          const FactoryGraph& graph, const DistanceTable& dist);

enum class Action : std::uint8_t { north, east, south, west, stay };

std::string_view to_string(Action a);
// North is +y.
Action action_between(Cell from, Cell to);
Cell apply(Action a, Cell c);

enum class EntryKind : std::uint8_t { pickup, delivery, resupply };

struct RouteEntry {
  EntryKind kind = EntryKind::pickup;
  int task = -1;  // -1 for resupply
  Vertex node = kNoVertex;
  friend bool operator==(const RouteEntry&, const RouteEntry&) = default;
};

using TaskRoute = std::vector<RouteEntry>;

struct TimedVertex {
  Vertex v = kNoVertex;
  Slot t = 0;
  friend bool operator==(const TimedVertex&, const TimedVertex&) = default;
};

struct Agv {
  int id = 0;
  Vertex location = kNoVertex;
  int payload = 0;
  int capacity = 20;
  int sensing_range = 2;
  TaskRoute task_route;
  std::vector<TimedVertex> nav_path;
  Action last_action = Action::stay;
};

// Binary task-to-AGV matrix stored sparsely, plus the per-AGV ordered key-node routes.
struct Assignment {
  std::map<int, int> agv_of;           // task id -> AGV id
  std::map<int, TaskRoute> routes;     // AGV id -> route
};

}  // namespace agvsched
