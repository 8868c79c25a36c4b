#include "doctest.h"

#include <climits>
#include <cmath>
#include <map>
#include <set>

#include "agvsched/error.hpp"
#include "agvsched/factory.hpp"
#include "agvsched/schedule.hpp"
#include "support.hpp"

using namespace agvsched;

namespace {

Layout open_layout(std::vector<Cell> production, std::vector<Cell> resupply = {}) {
  Layout l;
  l.production = std::move(production);
  l.resupply = std::move(resupply);
  l.production_blocks = false;
  return l;
}

}  // namespace

TEST_CASE("smallest grid is a 4-cycle of aisles") {
  const FactoryGraph g = build_grid(2, 2, Layout::empty());
  CHECK(g.vertex_count() == 4);
  CHECK(g.edge_count() == 4);
  for (Vertex v = 0; v < 4; ++v) CHECK(g.role(v) == NodeRole::aisle);
}

TEST_CASE("paper-scale grid") {
  const FactoryGraph g = build_grid(10, 10, Layout::columns(10, 10));
  CHECK(g.vertex_count() == 100);
  CHECK(g.production_nodes().size() == 18);
  CHECK(g.resupply_nodes().size() == 4);
  for (Vertex p : g.production_nodes()) {
    CHECK_FALSE(g.traversable(p));
    CHECK(g.service_cells(p).size() >= 2);
  }
}

TEST_CASE("3x1 corridor with an open production node is a path graph") {
  const FactoryGraph g = build_grid(3, 1, open_layout({{1, 0}}));
  CHECK(g.edge_count() == 2);
  CHECK(g.role(1) == NodeRole::production);
  CHECK(g.adjacent(0).size() == 1);
  CHECK(g.adjacent(1).size() == 2);
}

TEST_CASE("a blocking production cell that cuts the grid is rejected") {
  Layout l;
  l.production = {{1, 0}};
  try {
    build_grid(3, 1, l);
    FAIL("expected disconnected-world");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::disconnected_world);
  }
}

TEST_CASE("overlapping roles and out-of-bounds cells are rejected") {
  CHECK_THROWS_AS(build_grid(4, 4, open_layout({{1, 1}}, {{1, 1}})), Error);
  CHECK_THROWS_AS(build_grid(4, 4, open_layout({{4, 1}})), Error);
}

TEST_CASE("distance table matches BFS on every pair") {
  Layout l = Layout::columns(10, 10);
  l.obstacles = {{0, 5}, {4, 4}, {7, 7}};
  const FactoryGraph g = build_grid(10, 10, l);
  const DistanceTable d(g);
  for (Vertex s = 0; s < g.vertex_count(); ++s) {
    if (!g.traversable(s)) continue;
    const auto ref = oracle::bfs(g, s);
    for (Vertex t = 0; t < g.vertex_count(); ++t) {
      if (!g.traversable(t)) continue;
      REQUIRE(d.between(s, t) == ref[static_cast<std::size_t>(t)]);
    }
  }
  // to_node is the distance to the closest service cell.
  for (Vertex p : g.production_nodes()) {
    const auto ref = oracle::bfs(g, 0);
    int best = INT_MAX;
    for (Vertex c : g.service_cells(p)) best = std::min(best, ref[static_cast<std::size_t>(c)]);
    CHECK(d.to_node(0, p) == best);
  }
}

TEST_CASE("task generation") {
  const FactoryGraph g = build_grid(10, 10, Layout::columns(10, 10));
  const DistanceTable d(g);

  SUBCASE("degenerate ranges") {
    TaskGenParams p;
    p.qty_lo = p.qty_hi = 5;
    p.proc_lo = p.proc_hi = 5;
    const auto tasks = generate_tasks(7, p, g, d);
    REQUIRE(tasks.size() == 1);
    CHECK(tasks[0].qty_out == 5);
    CHECK(tasks[0].qty_in == 5);
    CHECK(tasks[0].processing_time == 5);
  }

  SUBCASE("paper scale forms 60 chains of 4") {
    TaskGenParams p{60, 4, 5, 10, 5, 10, 20, 3, 60, 6.0, 20};
    const auto tasks = generate_tasks(3, p, g, d);
    REQUIRE(tasks.size() == 240);
    std::map<int, std::vector<const TransportTask*>> lines;
    for (const auto& t : tasks) lines[t.line].push_back(&t);
    CHECK(lines.size() == 60);
    std::set<Slot> releases;
    for (const auto& [line, chain] : lines) {
      REQUIRE(chain.size() == 4);
      for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
        CHECK(chain[i]->priority + 1 == chain[i + 1]->priority);
        CHECK(chain[i]->delivery == chain[i + 1]->pickup);
      }
      releases.insert(chain[0]->arrival_slot);
    }
    CHECK(releases == std::set<Slot>{0, 60, 120});
    for (const auto& t : tasks) {
      CHECK(t.deadline == t.arrival_slot + static_cast<Slot>(std::ceil(6.0 * (d.node_to_node(t.pickup, t.delivery) + t.processing_time))));
      CHECK(t.qty_in <= 20);
    }
  }

  SUBCASE("same seed reproduces the list, another seed does not") {
    TaskGenParams p{20, 4, 5, 10, 5, 10, 20, 1, 0, 6.0, 20};
    CHECK(generate_tasks(11, p, g, d) == generate_tasks(11, p, g, d));
    CHECK(generate_tasks(11, p, g, d) != generate_tasks(12, p, g, d));
  }

  SUBCASE("demand above capacity is rejected") {
    TaskGenParams p;
    p.qty_hi = 25;
    try {
      generate_tasks(1, p, g, d);
      FAIL("expected infeasible-quantity");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::infeasible_quantity);
    }
  }
}

TEST_CASE("actions and headings") {
  CHECK(action_between({1, 1}, {1, 2}) == Action::north);
  CHECK(action_between({1, 1}, {1, 0}) == Action::south);
  CHECK(action_between({1, 1}, {2, 1}) == Action::east);
  CHECK(action_between({1, 1}, {0, 1}) == Action::west);
  CHECK(action_between({1, 1}, {1, 1}) == Action::stay);
  for (Action a : {Action::north, Action::east, Action::south, Action::west, Action::stay})
    CHECK(action_between({3, 3}, apply(a, {3, 3})) == a);
}
