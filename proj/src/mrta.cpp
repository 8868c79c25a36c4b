#include "agvsched/mrta.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <tuple>

#include "agvsched/error.hpp"
#include "agvsched/schedule.hpp"

namespace agvsched {

void validate(const SaParams& p) {
  if (!(p.alpha > 0.0 && p.alpha < 1.0))
    throw Error(ErrorCode::invalid_argument, "sa.alpha must lie in (0, 1)");
  if (!(p.t_stop > 0.0)) throw Error(ErrorCode::invalid_argument, "sa.t_stop must be positive");
  if (p.t_init > 0.0 && !(p.t_stop < p.t_init))
    throw Error(ErrorCode::invalid_argument, "sa.t_stop must be below sa.t_init");
  if (p.max_iterations < 0) throw Error(ErrorCode::invalid_argument, "sa.max_iterations must be >= 0");
  if (p.removal_bias < 0.0) throw Error(ErrorCode::invalid_argument, "sa.removal_bias must be >= 0");
  if (!(p.repair_noise >= 0.0)) throw Error(ErrorCode::invalid_argument, "sa.repair_noise must be >= 0");
}

double accept_probability(double delta, double temperature) {
  if (!(temperature > 0.0))
    throw Error(ErrorCode::nonpositive_temperature, "temperature must be positive");
  if (delta <= 0.0) return 1.0;
  return std::exp(-delta / temperature);
}

EstimatedCost estimated_completion(const Assignment& assignment, const DistanceTable& dist,
                                   std::span<const Agv> agvs) {
  EstimatedCost out;
  for (const Agv& a : agvs) {
    int t = 0;
    if (auto it = assignment.routes.find(a.id); it != assignment.routes.end()) {
      Vertex pos = a.location;
      for (const RouteEntry& e : it->second) {
        const int d = dist.to_node(pos, e.node);
        if (d >= DistanceTable::kUnreachable)
          throw Error(ErrorCode::unreachable_node,
                      "AGV " + std::to_string(a.id) + " cannot reach node " + std::to_string(e.node));
        t += d;
        pos = dist.nearest_service_cell(pos, e.node);
      }
    }
    out.per_agv.push_back(t);
    out.total = std::max(out.total, t);
  }
  return out;
}

std::vector<FleetMember> fleet_from(std::span<const Agv> agvs) {
  std::vector<FleetMember> fleet;
  for (const Agv& a : agvs) fleet.push_back({a.id, a.location, a.payload, a.capacity, 0});
  return fleet;
}

MrtaProblem::MrtaProblem(const DistanceTable& dist, std::span<const TransportTask> tasks,
                         std::vector<FleetMember> fleet)
    : dist_(&dist), tasks_(tasks), fleet_(std::move(fleet)) {
  for (const auto& t : tasks_) {
    if (t.id < 0) throw Error(ErrorCode::unknown_task_id, "task ids must be non-negative");
    if (static_cast<std::size_t>(t.id) >= by_id_.size()) by_id_.resize(static_cast<std::size_t>(t.id) + 1, nullptr);
    by_id_[static_cast<std::size_t>(t.id)] = &t;
  }
}

const TransportTask& MrtaProblem::task(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= by_id_.size() || !by_id_[static_cast<std::size_t>(id)])
    throw Error(ErrorCode::unknown_task_id, "no task " + std::to_string(id));
  return *by_id_[static_cast<std::size_t>(id)];
}

namespace {

// Resupply node minimising the detour towards `next`; lowest vertex on ties.
Vertex best_resupply(const DistanceTable& dist, Vertex from, Vertex next, int& detour) {
  Vertex best = kNoVertex;
  detour = MrtaProblem::kInfeasible;
  for (Vertex u : dist.graph().resupply_nodes()) {
    const int d = dist.between(from, u) + dist.to_node(u, next);
    if (d < detour) {
      detour = d;
      best = u;
    }
  }
  return best;
}

}  // namespace

MrtaProblem::RouteState MrtaProblem::start_state(std::size_t k) const {
  return {fleet_[k].busy, fleet_[k].start, fleet_[k].payload};
}

bool MrtaProblem::advance(std::size_t k, RouteState& s, int id) const {
  const FleetMember& m = fleet_[k];
  const DistanceTable& d = *dist_;
  const TransportTask& task = this->task(id);
  if (task.qty_in > m.capacity) return false;
  if (s.payload < task.qty_in) {
    int detour = 0;
    const Vertex u = best_resupply(d, s.pos, task.pickup, detour);
    if (u == kNoVertex) return false;
    s.t += d.between(s.pos, u);
    s.pos = u;
    s.payload = m.capacity;
  }
  const int a = d.to_node(s.pos, task.pickup);
  s.pos = d.nearest_service_cell(s.pos, task.pickup);
  const int b = d.to_node(s.pos, task.delivery);
  s.pos = d.nearest_service_cell(s.pos, task.delivery);
  if (a >= DistanceTable::kUnreachable || b >= DistanceTable::kUnreachable) return false;
  s.t += a + b;
  s.payload -= task.qty_in;
  return true;
}

int MrtaProblem::agv_cost(std::size_t k, std::span<const int> seq, int extra, std::size_t at) const {
  RouteState s = start_state(k);
  for (std::size_t i = 0; i <= seq.size(); ++i) {
    if (extra >= 0 && i == at && !advance(k, s, extra)) return kInfeasible;
    if (i < seq.size() && !advance(k, s, seq[i])) return kInfeasible;
  }
  return static_cast<int>(std::min<long>(s.t, kInfeasible));
}

EstimatedCost MrtaProblem::cost(const Plan& plan) const {
  EstimatedCost out;
  out.per_agv.reserve(fleet_.size());
  for (std::size_t k = 0; k < fleet_.size(); ++k) {
    out.per_agv.push_back(agv_cost(k, plan.sequences[k]));
    out.total = std::max(out.total, out.per_agv.back());
  }
  return out;
}

TaskRoute MrtaProblem::expand(std::size_t k, std::span<const int> seq) const {
  const FleetMember& m = fleet_[k];
  TaskRoute route;
  Vertex pos = m.start;
  int payload = m.payload;
  for (int id : seq) {
    const TransportTask& task = this->task(id);
    if (payload < task.qty_in) {
      int detour = 0;
      const Vertex u = best_resupply(*dist_, pos, task.pickup, detour);
      if (u != kNoVertex) {
        route.push_back({EntryKind::resupply, -1, u});
        pos = u;
        payload = m.capacity;
      }
    }
    route.push_back({EntryKind::pickup, id, task.pickup});
    pos = dist_->nearest_service_cell(pos, task.pickup);
    route.push_back({EntryKind::delivery, id, task.delivery});
    pos = dist_->nearest_service_cell(pos, task.delivery);
    payload -= task.qty_in;
  }
  return route;
}

Assignment MrtaProblem::to_assignment(const Plan& plan) const {
  Assignment a;
  for (std::size_t k = 0; k < fleet_.size(); ++k) {
    for (int id : plan.sequences[k]) a.agv_of[id] = fleet_[k].id;
    a.routes[fleet_[k].id] = expand(k, plan.sequences[k]);
  }
  return a;
}

Destroyed destroy(const MrtaProblem& problem, const Plan& plan, int destroy_size, double bias,
                  Rng& rng) {
  std::vector<int> pool;
  for (const auto& seq : plan.sequences) pool.insert(pool.end(), seq.begin(), seq.end());
  if (destroy_size < 1 || static_cast<std::size_t>(destroy_size) > pool.size())
    throw Error(ErrorCode::invalid_argument, "destroy_size must lie in [1, assigned tasks]");

  std::vector<double> weight;
  weight.reserve(pool.size());
  for (int id : pool) weight.push_back(std::pow(static_cast<double>(problem.task(id).priority), bias));

  Destroyed out;
  for (int draw = 0; draw < destroy_size; ++draw) {
    double total = 0.0;
    for (double w : weight) total += w;
    double r = uniform01(rng) * total;
    std::size_t pick = pool.size() - 1;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (r < weight[i]) {
        pick = i;
        break;
      }
      r -= weight[i];
    }
    out.removed.push_back(pool[pick]);
    pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(pick));
    weight.erase(weight.begin() + static_cast<std::ptrdiff_t>(pick));
  }
  out.partial = plan;
  for (auto& seq : out.partial.sequences)
    std::erase_if(seq, [&](int id) {
      return std::find(out.removed.begin(), out.removed.end(), id) != out.removed.end();
    });
  return out;
}

Plan repair(const MrtaProblem& problem, Plan plan, std::vector<int> removed, Rng* rng, double noise) {
  std::sort(removed.begin(), removed.end(), [&](int a, int b) {
    const auto& ta = problem.task(a);
    const auto& tb = problem.task(b);
    return std::tie(ta.priority, ta.line, ta.id) < std::tie(tb.priority, tb.line, tb.id);
  });
  if (rng) {
    // Fisher-Yates within each run of equal priority.
    for (std::size_t lo = 0; lo < removed.size();) {
      std::size_t hi = lo + 1;
      while (hi < removed.size() && problem.task(removed[hi]).priority == problem.task(removed[lo]).priority) ++hi;
      for (std::size_t i = hi - 1; i > lo; --i)
        std::swap(removed[i], removed[lo + uniform_below(*rng, i - lo + 1)]);
      lo = hi;
    }
  }
  const std::size_t fleet = problem.fleet_size();
  std::vector<int> costs(fleet);
  for (std::size_t k = 0; k < fleet; ++k) costs[k] = problem.agv_cost(k, plan.sequences[k]);

  for (int id : removed) {
    const TransportTask& task = problem.task(id);
    // Largest and second-largest current costs give max over the other AGVs in O(1).
    int top1 = 0, top2 = 0;
    std::size_t top_k = fleet;
    for (std::size_t k = 0; k < fleet; ++k) {
      if (costs[k] > top1) {
        top2 = top1;
        top1 = costs[k];
        top_k = k;
      } else if (costs[k] > top2) {
        top2 = costs[k];
      }
    }
    auto best = std::make_tuple(double(MrtaProblem::kInfeasible), MrtaProblem::kInfeasible, fleet, std::size_t{0});
    const double amp = rng ? noise * top1 : 0.0;
    int best_cost = 0;
    std::vector<MrtaProblem::RouteState> prefix;
    for (std::size_t k = 0; k < fleet; ++k) {
      const auto& seq = plan.sequences[k];
      // Same-line tasks keep ascending priority on one AGV.
      std::size_t lo = 0, hi = seq.size();
      for (std::size_t i = 0; i < seq.size(); ++i) {
        const TransportTask& other = problem.task(seq[i]);
        if (other.line != task.line) continue;
        if (other.priority < task.priority) lo = i + 1;
        else hi = std::min(hi, i);
      }
      if (lo > hi) continue;
      // States before each route position; the route itself is known to be feasible.
      prefix.assign(1, problem.start_state(k));
      for (std::size_t i = 0; i < hi; ++i) {
        prefix.push_back(prefix.back());
        problem.advance(k, prefix.back(), seq[i]);
      }
      const int others = (k == top_k) ? top2 : top1;
      for (std::size_t pos = lo; pos <= hi; ++pos) {
        // A route whose running time already exceeds the best key cannot win.
        const double bound = std::get<0>(best) + amp;
        MrtaProblem::RouteState s = prefix[pos];
        bool ok = problem.advance(k, s, id);
        for (std::size_t i = pos; ok && i < seq.size() && s.t <= bound; ++i) ok = problem.advance(k, s, seq[i]);
        if (!ok || s.t > bound) continue;
        const int c = static_cast<int>(s.t);
        const double noisy = std::max(others, c) + (amp > 0 ? amp * (2 * uniform01(*rng) - 1) : 0.0);
        auto key = std::make_tuple(noisy, c - costs[k], k, pos);
        if (key < best) {
          best = key;
          best_cost = c;
        }
      }
    }
    const std::size_t k = std::get<2>(best);
    if (k == fleet)
      throw Error(ErrorCode::no_feasible_insertion,
                  "task " + std::to_string(id) + " fits no AGV route");
    auto& seq = plan.sequences[k];
    seq.insert(seq.begin() + static_cast<std::ptrdiff_t>(std::get<3>(best)), id);
    costs[k] = best_cost;
  }
  return plan;
}

Plan greedy_initial(const MrtaProblem& problem) {
  std::vector<int> all;
  for (const auto& t : problem.tasks()) all.push_back(t.id);
  return repair(problem, problem.empty_plan(), std::move(all));
}

SaResult sa_solve(const MrtaProblem& problem, const SaParams& params, Rng& rng) {
  validate(params);
  if (problem.fleet_size() == 0 && !problem.tasks().empty())
    throw Error(ErrorCode::infeasible_instance, "no AGVs to assign tasks to");
  SaResult out;
  Plan current;
  try {
    current = greedy_initial(problem);
  } catch (const Error& e) {
    throw Error(ErrorCode::infeasible_instance, e.what());
  }
  int current_cost = problem.cost(current).total;
  out.best = current;
  out.best_cost = out.initial_cost = current_cost;

  const int m = static_cast<int>(problem.tasks().size());
  if (m == 0) return out;
  const int destroy_size = params.destroy_size > 0
                               ? std::min(params.destroy_size, m)
                               : std::min(m, std::max(2, static_cast<int>(std::ceil(0.2 * m))));
  double temperature = params.t_init > 0.0 ? params.t_init : current_cost / 2.0;

  while (temperature > params.t_stop && out.iterations < params.max_iterations) {
    const int size = uniform_int(rng, 1, destroy_size);
    auto [partial, removed] = destroy(problem, current, size, params.removal_bias, rng);
    Plan candidate = repair(problem, std::move(partial), std::move(removed), &rng, params.repair_noise);
    const int candidate_cost = problem.cost(candidate).total;
    const double u = uniform01(rng);
    if (candidate_cost < current_cost ||
        u < accept_probability(candidate_cost - current_cost, temperature)) {
      current = std::move(candidate);
      current_cost = candidate_cost;
      if (params.debug_validate) {
        std::vector<Agv> agvs;
        for (const auto& f : problem.fleet()) {
          Agv a;
          a.id = f.id;
          a.location = f.start;
          a.payload = f.payload;
          a.capacity = f.capacity;
          agvs.push_back(a);
        }
        const auto assignment = problem.to_assignment(current);
        for (const auto& v : validate_assignment(assignment, problem.tasks(), agvs, problem.dist()))
          if (v.constraint != Constraint::deadline)
            throw Error(ErrorCode::invariant_violation,
                        "accepted move breaks constraint " + std::string(to_string(v.constraint)));
      }
    }
    if (current_cost < out.best_cost) {
      out.best = current;
      out.best_cost = current_cost;
    }
    out.best_trace.push_back(out.best_cost);
    temperature *= params.alpha;
    ++out.iterations;
  }
  return out;
}

Assignment sa_solve(std::span<const TransportTask> tasks, std::span<const Agv> agvs,
                    const DistanceTable& dist, const SaParams& params, Rng& rng) {
  const MrtaProblem problem(dist, tasks, fleet_from(agvs));
  return problem.to_assignment(sa_solve(problem, params, rng).best);
}

}  // namespace agvsched
