#include "doctest.h"

#include <cmath>

#include "agvsched/error.hpp"
#include "agvsched/mrta.hpp"
#include "agvsched/schedule.hpp"
#include "support.hpp"

using namespace agvsched;

namespace {

struct OpenGrid {
  FactoryGraph g;
  DistanceTable d;
  explicit OpenGrid(int n, std::vector<Cell> prod, std::vector<Cell> res = {})
      : g(make(n, std::move(prod), std::move(res))), d(g) {}
  static FactoryGraph make(int n, std::vector<Cell> prod, std::vector<Cell> res) {
    Layout l;
    l.production = std::move(prod);
    l.resupply = std::move(res);
    l.production_blocks = false;
    return build_grid(n, n, l);
  }
  Vertex v(int x, int y) const { return g.vertex({x, y}); }
};

TransportTask task(int id, Vertex p, Vertex d, int line = -1, int mu = 1, int qty = 5) {
  TransportTask t;
  t.id = id;
  t.pickup = p;
  t.delivery = d;
  t.line = line < 0 ? id : line;
  t.priority = mu;
  t.qty_in = t.qty_out = qty;
  t.deadline = 10000;
  return t;
}

Agv agv(int id, Vertex at, int payload = 20) {
  Agv a;
  a.id = id;
  a.location = at;
  a.payload = payload;
  return a;
}

}  // namespace

TEST_CASE("estimated completion") {
  OpenGrid w(6, {{0, 3}, {3, 3}, {5, 0}, {5, 5}});
  const std::vector<TransportTask> tasks{task(0, w.v(0, 3), w.v(3, 3)), task(1, w.v(5, 0), w.v(5, 5))};
  Assignment a;
  a.agv_of = {{0, 0}};
  a.routes[0] = {{EntryKind::pickup, 0, w.v(0, 3)}, {EntryKind::delivery, 0, w.v(3, 3)}};
  const std::vector<Agv> one{agv(0, w.v(0, 0))};
  const auto c = estimated_completion(a, w.d, one);
  CHECK(c.per_agv == std::vector<int>{6});
  CHECK(c.total == 6);

  a.agv_of[1] = 1;
  a.routes[1] = {{EntryKind::pickup, 1, w.v(5, 0)}, {EntryKind::delivery, 1, w.v(5, 5)}};
  const std::vector<Agv> two{agv(0, w.v(0, 0)), agv(1, w.v(4, 0))};
  const auto c2 = estimated_completion(a, w.d, two);
  CHECK(c2.per_agv == std::vector<int>{6, 6});
  CHECK(c2.total == 6);
}

TEST_CASE("accept probability") {
  CHECK(accept_probability(0, 3.0) == 1.0);
  CHECK(accept_probability(-4, 3.0) == 1.0);
  CHECK(accept_probability(7, 7.0) == doctest::Approx(std::exp(-1.0)));
  CHECK(accept_probability(10, 0.001) == doctest::Approx(0.0));
  CHECK(accept_probability(10, 0.001) >= 0.0);
  CHECK_THROWS_AS(accept_probability(1, 0.0), Error);
  CHECK_THROWS_AS(accept_probability(1, -1.0), Error);
}

TEST_CASE("destroy") {
  OpenGrid w(5, {{1, 1}, {3, 3}, {1, 3}, {3, 1}});
  std::vector<TransportTask> tasks{task(0, w.v(1, 1), w.v(3, 3), 0, 1), task(1, w.v(1, 3), w.v(3, 1), 1, 4)};
  const MrtaProblem problem(w.d, tasks, {{0, w.v(0, 0), 20, 20, 0}});
  const Plan plan{{{0, 1}}};

  SUBCASE("everything") {
    Rng rng = make_stream(1, Stream::test);
    const auto out = destroy(problem, plan, 2, 1.0, rng);
    CHECK(out.partial.sequences[0].empty());
    CHECK(out.removed.size() == 2);
  }
  SUBCASE("priority bias") {
    Rng rng = make_stream(2, Stream::test);
    int high = 0;
    const int draws = 10000;
    for (int i = 0; i < draws; ++i) high += destroy(problem, plan, 1, 1.0, rng).removed[0] == 1;
    CHECK(static_cast<double>(high) / draws == doctest::Approx(0.8).epsilon(0.0375));
  }
  SUBCASE("bad sizes") {
    Rng rng = make_stream(3, Stream::test);
    CHECK_THROWS_AS(destroy(problem, plan, 0, 1.0, rng), Error);
    CHECK_THROWS_AS(destroy(problem, plan, 3, 1.0, rng), Error);
  }
}

TEST_CASE("repair") {
  SUBCASE("one AGV one task") {
    OpenGrid w(5, {{1, 1}, {3, 3}});
    std::vector<TransportTask> tasks{task(0, w.v(1, 1), w.v(3, 3))};
    const MrtaProblem problem(w.d, tasks, {{0, w.v(0, 0), 20, 20, 0}});
    const Plan p = repair(problem, problem.empty_plan(), {0});
    CHECK(p.sequences[0] == std::vector<int>{0});
    const auto a = problem.to_assignment(p);
    CHECK(a.routes.at(0) == TaskRoute{{EntryKind::pickup, 0, w.v(1, 1)}, {EntryKind::delivery, 0, w.v(3, 3)}});
  }
  SUBCASE("chained tasks keep line order") {
    OpenGrid w(5, {{1, 1}, {3, 3}, {1, 3}});
    std::vector<TransportTask> tasks{task(0, w.v(1, 1), w.v(3, 3), 0, 1), task(1, w.v(3, 3), w.v(1, 3), 0, 2)};
    const MrtaProblem problem(w.d, tasks, {{0, w.v(0, 0), 20, 20, 0}});
    const auto route = problem.to_assignment(repair(problem, problem.empty_plan(), {1, 0})).routes.at(0);
    std::size_t deliver0 = 99, pick1 = 0;
    for (std::size_t i = 0; i < route.size(); ++i) {
      if (route[i].task == 0 && route[i].kind == EntryKind::delivery) deliver0 = i;
      if (route[i].task == 1 && route[i].kind == EntryKind::pickup) pick1 = i;
    }
    CHECK(deliver0 < pick1);
  }
  SUBCASE("independent tasks split across AGVs") {
    OpenGrid w(8, {{0, 1}, {0, 3}, {7, 6}, {7, 4}});
    std::vector<TransportTask> tasks{task(0, w.v(0, 1), w.v(0, 3)), task(1, w.v(7, 6), w.v(7, 4))};
    const MrtaProblem problem(w.d, tasks, {{0, w.v(0, 0), 20, 20, 0}, {1, w.v(7, 7), 20, 20, 0}});
    const Plan p = repair(problem, problem.empty_plan(), {0, 1});
    CHECK(p.sequences[0] == std::vector<int>{0});
    CHECK(p.sequences[1] == std::vector<int>{1});
    CHECK(problem.cost(p).total == 3);
  }
  SUBCASE("demand above capacity fits nowhere") {
    OpenGrid w(5, {{1, 1}, {3, 3}}, {{0, 4}});
    std::vector<TransportTask> tasks{task(0, w.v(1, 1), w.v(3, 3), 0, 1, 25)};
    const MrtaProblem problem(w.d, tasks, {{0, w.v(0, 0), 20, 20, 0}});
    CHECK_THROWS_AS(repair(problem, problem.empty_plan(), {0}), Error);
  }
}

TEST_CASE("resupply stops are inserted when payload runs short") {
  OpenGrid w(6, {{1, 1}, {4, 4}, {1, 4}}, {{5, 0}});
  std::vector<TransportTask> tasks{task(0, w.v(1, 1), w.v(4, 4), 0, 1, 8), task(1, w.v(1, 4), w.v(4, 4), 1, 1, 8)};
  const MrtaProblem problem(w.d, tasks, {{0, w.v(0, 0), 10, 20, 0}});
  const Plan p{{{0, 1}}};
  const auto route = problem.to_assignment(p).routes.at(0);
  REQUIRE(route.size() == 5);
  CHECK(route[2].kind == EntryKind::resupply);
  const std::vector<Agv> fleet{agv(0, w.v(0, 0), 10)};
  CHECK(validate_assignment(problem.to_assignment(p), tasks, fleet, w.d).empty());
  CHECK(problem.agv_cost(0, p.sequences[0]) ==
        oracle::route_cost(w.d, problem.fleet()[0], {&tasks[0], &tasks[1]}));
}

TEST_CASE("sa_solve") {
  SaParams params;
  SUBCASE("single task") {
    OpenGrid w(5, {{1, 1}, {3, 3}});
    std::vector<TransportTask> tasks{task(0, w.v(1, 1), w.v(3, 3))};
    const MrtaProblem problem(w.d, tasks, {{0, w.v(0, 0), 20, 20, 0}});
    Rng rng = make_stream(1, Stream::annealing);
    const auto r = sa_solve(problem, params, rng);
    CHECK(r.best.sequences[0] == std::vector<int>{0});
    CHECK(r.best_cost == w.d.to_node(w.v(0, 0), w.v(1, 1)) + w.d.node_to_node(w.v(1, 1), w.v(3, 3)));
  }
  SUBCASE("opposite corners take their near task") {
    OpenGrid w(8, {{1, 0}, {2, 0}, {6, 7}, {5, 7}});
    std::vector<TransportTask> tasks{task(0, w.v(1, 0), w.v(2, 0)), task(1, w.v(6, 7), w.v(5, 7))};
    const std::vector<FleetMember> fleet{{0, w.v(0, 0), 20, 20, 0}, {1, w.v(7, 7), 20, 20, 0}};
    const MrtaProblem problem(w.d, tasks, fleet);
    Rng rng = make_stream(2, Stream::annealing);
    const auto r = sa_solve(problem, params, rng);
    CHECK(r.best.sequences[0] == std::vector<int>{0});
    CHECK(r.best.sequences[1] == std::vector<int>{1});
    CHECK(r.best_cost == oracle::brute_force_makespan(w.d, tasks, fleet));
  }
  SUBCASE("best trace never increases and never exceeds the greedy start") {
    const FactoryGraph g = build_grid(10, 10, Layout::columns(10, 10));
    const DistanceTable d(g);
    TaskGenParams gen{6, 3, 5, 10, 5, 10, 20, 1, 0, 6.0, 20};
    const auto tasks = generate_tasks(5, gen, g, d);
    std::vector<FleetMember> fleet;
    for (int k = 0; k < 4; ++k) fleet.push_back({k, g.vertex({k * 3, 0}), 20, 20, 0});
    const MrtaProblem problem(d, tasks, fleet);
    SaParams dbg;
    dbg.debug_validate = true;
    dbg.max_iterations = 300;
    Rng rng = make_stream(3, Stream::annealing);
    const auto r = sa_solve(problem, dbg, rng);
    CHECK(r.best_cost <= r.initial_cost);
    for (std::size_t i = 1; i < r.best_trace.size(); ++i) CHECK(r.best_trace[i] <= r.best_trace[i - 1]);
    CHECK(r.best_cost == problem.cost(r.best).total);
  }
  SUBCASE("same seed, same answer") {
    const FactoryGraph g = build_grid(10, 10, Layout::columns(10, 10));
    const DistanceTable d(g);
    TaskGenParams gen{5, 2, 5, 10, 5, 10, 20, 1, 0, 6.0, 20};
    const auto tasks = generate_tasks(9, gen, g, d);
    const MrtaProblem problem(d, tasks, {{0, 0, 20, 20, 0}, {1, 99, 20, 20, 0}});
    SaParams p;
    p.max_iterations = 200;
    Rng a = make_stream(4, Stream::annealing), b = make_stream(4, Stream::annealing);
    CHECK(sa_solve(problem, p, a).best == sa_solve(problem, p, b).best);
  }
  SUBCASE("bad parameters") {
    OpenGrid w(5, {{1, 1}, {3, 3}});
    std::vector<TransportTask> tasks{task(0, w.v(1, 1), w.v(3, 3))};
    const MrtaProblem problem(w.d, tasks, {});
    Rng rng = make_stream(1, Stream::annealing);
    CHECK_THROWS_AS(sa_solve(problem, params, rng), Error);
    SaParams bad;
    bad.alpha = 1.0;
    const MrtaProblem ok(w.d, tasks, {{0, 0, 20, 20, 0}});
    CHECK_THROWS_AS(sa_solve(ok, bad, rng), Error);
  }
}

// Random K=2, M=3 instances on the paper grid; also the basis of acceptance criterion 6.
TEST_CASE("sa_solve matches the exhaustive optimum on micro instances") {
  const FactoryGraph g = build_grid(10, 10, Layout::columns(10, 10));
  const DistanceTable d(g);
  int equal = 0, better = 0;
  for (std::uint64_t seed = 1; seed <= 100; ++seed) {
    Rng rng = make_stream(seed, Stream::test);
    TaskGenParams gen{3, 1, 5, 10, 5, 10, 20, 1, 0, 6.0, 20};
    if (uniform_below(rng, 2)) gen = {1, 3, 5, 10, 5, 10, 20, 1, 0, 6.0, 20};
    const auto tasks = generate_tasks(seed, gen, g, d);
    std::vector<FleetMember> fleet;
    for (int k = 0; k < 2; ++k) {
      Vertex v;
      do v = static_cast<Vertex>(uniform_below(rng, 100));
      while (!g.traversable(v));
      fleet.push_back({k, v, uniform_int(rng, 0, 20), 20, 0});
    }
    const MrtaProblem problem(d, tasks, fleet);
    Rng sa = make_stream(seed, Stream::annealing);
    const int got = sa_solve(problem, SaParams{}, sa).best_cost;
    const int opt = oracle::brute_force_makespan(d, tasks, fleet);
    equal += got == opt;
    better += got < opt;
  }
  CHECK(better == 0);
  CHECK(equal >= 95);
}
