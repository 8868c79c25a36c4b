#include "agvsched/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "agvsched/error.hpp"

namespace agvsched {

std::string_view to_string(Mode mode) {
  switch (mode) {
    case Mode::uncontrolled: return "uncontrolled";
    case Mode::local_only: return "local_only";
    case Mode::comm_ideal: return "comm_ideal";
    case Mode::comm_realistic: return "comm_realistic";
  }
  return "?";
}

Mode mode_from_string(std::string_view name) {
  for (Mode m : {Mode::uncontrolled, Mode::local_only, Mode::comm_ideal, Mode::comm_realistic})
    if (to_string(m) == name) return m;
  throw Error(ErrorCode::config_invalid, "mode: unknown mode '" + std::string(name) + "'");
}

namespace {

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw Error(ErrorCode::config_invalid, field + ": " + why);
}

void at_least(const std::string& field, double v, double lo) {
  if (v < lo) bad(field, "must be >= " + Json(lo).dump());
}

}  // namespace

void validate(const ScenarioConfig& c) {
  at_least("grid.width", c.grid.width, 1);
  at_least("grid.height", c.grid.height, 1);
  if (c.grid.width * c.grid.height < 2) bad("grid", "needs at least two cells");
  if (c.grid.layout != "columns" && c.grid.layout != "custom") bad("grid.layout", "must be columns or custom");
  at_least("agvs.count", c.agvs.count, 1);
  at_least("agvs.capacity", c.agvs.capacity, 1);
  at_least("agvs.sensing_range", c.agvs.sensing_range, 0);
  if (c.agvs.initial_payload < 0 || c.agvs.initial_payload > c.agvs.capacity)
    bad("agvs.initial_payload", "must lie in [0, capacity]");
  if (!c.agvs.start.empty() && static_cast<int>(c.agvs.start.size()) != c.agvs.count)
    bad("agvs.start", "must list exactly agvs.count cells");
  at_least("channel.C", c.channel.channels, 1);
  if (c.channel.selected < 1 || c.channel.selected > c.channel.channels) bad("channel.S", "must lie in [1, C]");
  at_least("channel.D", c.channel.interval, 1);
  if (!(c.channel.error_prob >= 0.0 && c.channel.error_prob < 1.0)) bad("channel.sigma", "must lie in [0, 1)");
  const TaskGenParams& t = c.tasks.gen;
  at_least("tasks.lines", t.lines, 0);
  at_least("tasks.per_line", t.per_line, 1);
  if (t.qty_lo < 0 || t.qty_lo > t.qty_hi) bad("tasks.qty", "must be a non-empty range of non-negative values");
  if (t.qty_hi > c.agvs.capacity) bad("tasks.qty", "upper bound exceeds agvs.capacity");
  if (t.proc_lo < 0 || t.proc_lo > t.proc_hi) bad("tasks.proc", "must be a non-empty range of non-negative values");
  at_least("tasks.waves", t.waves, 1);
  at_least("tasks.wave_interval", t.wave_interval, 0);
  if (!(t.slack_factor > 0.0)) bad("tasks.slack", "must be > 0");
  at_least("tasks.soft_delay", t.soft_delay, 0);
  at_least("router.kappa", c.router.kappa, 1);
  at_least("router.penalty", c.router.penalty, 1);
  at_least("router.horizon", c.router.horizon, 1);
  at_least("router.max_expansions", c.router.max_expansions, 1);
  if (!(c.sa.alpha > 0.0 && c.sa.alpha < 1.0)) bad("sa.alpha", "must lie in (0, 1)");
  if (!(c.sa.t_stop > 0.0)) bad("sa.t_stop", "must be > 0");
  if (c.sa.t_init > 0.0 && c.sa.t_init <= c.sa.t_stop) bad("sa.t_init", "must exceed sa.t_stop");
  at_least("sa.max_iterations", c.sa.max_iterations, 0);
  at_least("sa.removal_bias", c.sa.removal_bias, 0);
  if (!(c.sa.repair_noise >= 0.0)) bad("sa.repair_noise", "must be >= 0");
  at_least("sim.slot_cap", c.sim.slot_cap, 1);
  at_least("sim.patience", c.sim.patience, 1);
  at_least("sim.local_safety_stays", c.sim.local_safety_stays, 0);
  at_least("sim.collision_stall", c.sim.collision_stall, 0);
  at_least("sim.staleness_cap", c.sim.staleness_cap, 0);
  if (c.seeds.empty()) bad("seeds", "must not be empty");
}

namespace {

// Walks one JSON object, remembering which keys were consumed.
class Section {
 public:
  Section(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) bad(path_.empty() ? "config" : path_, "must be an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions()) return;
    for (const auto& [key, value] : obj_.items())
      if (!used_.count(key)) bad(field(key), "unknown key");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const Json* get(const std::string& key) {
    used_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  void read(const std::string& key, int& out) {
    if (const Json* v = get(key)) {
      if (!v->is_number_integer()) bad(field(key), "must be an integer");
      out = v->get<int>();
    }
  }
  void read(const std::string& key, double& out) {
    if (const Json* v = get(key)) {
      if (!v->is_number()) bad(field(key), "must be a number");
      out = v->get<double>();
    }
  }
  void read(const std::string& key, bool& out) {
    if (const Json* v = get(key)) {
      if (!v->is_boolean()) bad(field(key), "must be true or false");
      out = v->get<bool>();
    }
  }
  void read(const std::string& key, std::string& out) {
    if (const Json* v = get(key)) {
      if (!v->is_string()) bad(field(key), "must be a string");
      out = v->get<std::string>();
    }
  }
  void read_range(const std::string& key, int& lo, int& hi) {
    if (const Json* v = get(key)) {
      if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number_integer() || !(*v)[1].is_number_integer())
        bad(field(key), "must be [lo, hi]");
      lo = (*v)[0].get<int>();
      hi = (*v)[1].get<int>();
    }
  }
  void read_cells(const std::string& key, std::vector<Cell>& out) {
    if (const Json* v = get(key)) {
      if (!v->is_array()) bad(field(key), "must be a list of [x, y]");
      out.clear();
      for (const Json& c : *v) out.push_back(cell(c, field(key)));
    }
  }
  static Cell cell(const Json& c, const std::string& where) {
    if (!c.is_array() || c.size() != 2 || !c[0].is_number_integer() || !c[1].is_number_integer())
      bad(where, "cells must be [x, y]");
    return {c[0].get<int>(), c[1].get<int>()};
  }

 private:
  const Json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

Json cells_json(const std::vector<Cell>& cells) {
  Json a = Json::array();
  for (Cell c : cells) a.push_back({c.x, c.y});
  return a;
}

}  // namespace

ScenarioConfig config_from_json(const Json& doc) {
  ScenarioConfig c;
  {
    Section root(doc, "");
    if (const Json* g = root.get("grid")) {
      Section s(*g, "grid");
      s.read("width", c.grid.width);
      s.read("height", c.grid.height);
      s.read("layout", c.grid.layout);
      s.read_cells("production", c.grid.production);
      s.read_cells("resupply", c.grid.resupply);
      s.read_cells("obstacles", c.grid.obstacles);
      s.read("production_blocks", c.grid.production_blocks);
    }
    if (const Json* a = root.get("agvs")) {
      Section s(*a, "agvs");
      s.read("count", c.agvs.count);
      s.read("capacity", c.agvs.capacity);
      s.read("sensing_range", c.agvs.sensing_range);
      s.read("initial_payload", c.agvs.initial_payload);
      s.read_cells("start", c.agvs.start);
    }
    if (const Json* ch = root.get("channel")) {
      Section s(*ch, "channel");
      s.read("C", c.channel.channels);
      s.read("S", c.channel.selected);
      s.read("D", c.channel.interval);
      s.read("sigma", c.channel.error_prob);
      std::string traffic = "bernoulli";
      s.read("traffic", traffic);
      if (traffic == "bernoulli") c.channel.pattern = TrafficPattern::bernoulli;
      else if (traffic == "periodic") c.channel.pattern = TrafficPattern::periodic;
      else bad("channel.traffic", "must be bernoulli or periodic");
    }
    if (const Json* m = root.get("mode")) {
      if (!m->is_string()) bad("mode", "must be a string");
      c.mode = mode_from_string(m->get<std::string>());
    }
    if (const Json* t = root.get("tasks")) {
      Section s(*t, "tasks");
      TaskGenParams& g = c.tasks.gen;
      s.read("lines", g.lines);
      s.read("per_line", g.per_line);
      s.read_range("qty", g.qty_lo, g.qty_hi);
      s.read_range("proc", g.proc_lo, g.proc_hi);
      s.read("waves", g.waves);
      s.read("wave_interval", g.wave_interval);
      s.read("slack", g.slack_factor);
      s.read("soft_delay", g.soft_delay);
      if (const Json* list = s.get("list")) {
        if (!list->is_array()) bad("tasks.list", "must be a list of tasks");
        const int width = c.grid.width;
        for (std::size_t i = 0; i < list->size(); ++i) {
          const std::string where = "tasks.list[" + std::to_string(i) + "]";
          Section e((*list)[i], where);
          TransportTask task;
          task.id = static_cast<int>(i);
          const Json* p = e.get("pickup");
          const Json* d = e.get("delivery");
          if (!p || !d) bad(where, "pickup and delivery are required");
          const Cell pc = Section::cell(*p, where + ".pickup");
          const Cell dc = Section::cell(*d, where + ".delivery");
          task.pickup = pc.y * width + pc.x;
          task.delivery = dc.y * width + dc.x;
          e.read("qty_out", task.qty_out);
          e.read("qty_in", task.qty_in);
          e.read("deadline", task.deadline);
          e.read("soft_delay", task.soft_delay);
          e.read("priority", task.priority);
          e.read("line", task.line);
          e.read("processing_time", task.processing_time);
          e.read("arrival_slot", task.arrival_slot);
          if (task.priority < 1) bad(where + ".priority", "must be >= 1");
          c.tasks.list.push_back(task);
        }
      }
    }
    if (const Json* r = root.get("router")) {
      Section s(*r, "router");
      s.read("kappa", c.router.kappa);
      s.read("penalty", c.router.penalty);
      s.read("horizon", c.router.horizon);
      s.read("max_expansions", c.router.max_expansions);
    }
    if (const Json* a = root.get("sa")) {
      Section s(*a, "sa");
      s.read("t_init", c.sa.t_init);
      s.read("t_stop", c.sa.t_stop);
      s.read("alpha", c.sa.alpha);
      s.read("destroy_size", c.sa.destroy_size);
      s.read("removal_bias", c.sa.removal_bias);
      s.read("repair_noise", c.sa.repair_noise);
      s.read("max_iterations", c.sa.max_iterations);
    }
    if (const Json* m = root.get("sim")) {
      Section s(*m, "sim");
      s.read("slot_cap", c.sim.slot_cap);
      s.read("patience", c.sim.patience);
      s.read("local_safety_stays", c.sim.local_safety_stays);
      s.read("collision_stall", c.sim.collision_stall);
      s.read("staleness_cap", c.sim.staleness_cap);
      s.read("strict", c.sim.strict);
    }
    if (const Json* seeds = root.get("seeds")) {
      if (!seeds->is_array()) bad("seeds", "must be a list of non-negative integers");
      c.seeds.clear();
      for (const Json& v : *seeds) {
        if (!v.is_number_unsigned()) bad("seeds", "must be a list of non-negative integers");
        c.seeds.push_back(v.get<std::uint64_t>());
      }
    }
  }
  validate(c);
  return c;
}

Json to_json(const ScenarioConfig& c) {
  Json doc;
  doc["grid"] = {{"width", c.grid.width},
                 {"height", c.grid.height},
                 {"layout", c.grid.layout},
                 {"production", cells_json(c.grid.production)},
                 {"resupply", cells_json(c.grid.resupply)},
                 {"obstacles", cells_json(c.grid.obstacles)},
                 {"production_blocks", c.grid.production_blocks}};
  doc["agvs"] = {{"count", c.agvs.count},
                 {"capacity", c.agvs.capacity},
                 {"sensing_range", c.agvs.sensing_range},
                 {"initial_payload", c.agvs.initial_payload},
                 {"start", cells_json(c.agvs.start)}};
  doc["channel"] = {{"C", c.channel.channels},
                    {"S", c.channel.selected},
                    {"D", c.channel.interval},
                    {"sigma", c.channel.error_prob},
                    {"traffic", c.channel.pattern == TrafficPattern::bernoulli ? "bernoulli" : "periodic"}};
  doc["mode"] = std::string(to_string(c.mode));
  const TaskGenParams& g = c.tasks.gen;
  doc["tasks"] = {{"lines", g.lines},
                  {"per_line", g.per_line},
                  {"qty", {g.qty_lo, g.qty_hi}},
                  {"proc", {g.proc_lo, g.proc_hi}},
                  {"waves", g.waves},
                  {"wave_interval", g.wave_interval},
                  {"slack", g.slack_factor},
                  {"soft_delay", g.soft_delay}};
  if (!c.tasks.list.empty()) {
    Json list = Json::array();
    const int w = c.grid.width;
    for (const TransportTask& t : c.tasks.list)
      list.push_back({{"pickup", {t.pickup % w, t.pickup / w}},
                      {"delivery", {t.delivery % w, t.delivery / w}},
                      {"qty_out", t.qty_out},
                      {"qty_in", t.qty_in},
                      {"deadline", t.deadline},
                      {"soft_delay", t.soft_delay},
                      {"priority", t.priority},
                      {"line", t.line},
                      {"processing_time", t.processing_time},
                      {"arrival_slot", t.arrival_slot}});
    doc["tasks"]["list"] = list;
  }
  doc["router"] = {{"kappa", c.router.kappa},
                   {"penalty", c.router.penalty},
                   {"horizon", c.router.horizon},
                   {"max_expansions", c.router.max_expansions}};
  doc["sa"] = {{"t_init", c.sa.t_init},
               {"t_stop", c.sa.t_stop},
               {"alpha", c.sa.alpha},
               {"destroy_size", c.sa.destroy_size},
               {"removal_bias", c.sa.removal_bias},
               {"repair_noise", c.sa.repair_noise},
               {"max_iterations", c.sa.max_iterations}};
  doc["sim"] = {{"slot_cap", c.sim.slot_cap},
                {"patience", c.sim.patience},
                {"local_safety_stays", c.sim.local_safety_stays},
                {"collision_stall", c.sim.collision_stall},
                {"staleness_cap", c.sim.staleness_cap},
                {"strict", c.sim.strict}};
  doc["seeds"] = c.seeds;
  return doc;
}

Json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::config_invalid, path + ": " + e.what());
  }
}

ScenarioConfig load_config(const std::string& path) { return config_from_json(load_json(path)); }

void set_path(Json& doc, std::string_view dotted, const Json& value) {
  if (dotted.empty()) throw Error(ErrorCode::config_invalid, "empty override key");
  Json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key(dotted.substr(start, dot == std::string_view::npos ? dotted.npos : dot - start));
    if (key.empty()) throw Error(ErrorCode::config_invalid, std::string(dotted) + ": malformed key");
    if (!node->is_object()) {
      if (!node->is_null()) throw Error(ErrorCode::config_invalid, std::string(dotted) + ": not an object");
      *node = Json::object();
    }
    if (dot == std::string_view::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

void apply_override(Json& doc, std::string_view assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw Error(ErrorCode::config_invalid, "override '" + std::string(assignment) + "' must look like key=value");
  const std::string text(assignment.substr(eq + 1));
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  set_path(doc, assignment.substr(0, eq), value);
}

}  // namespace agvsched
