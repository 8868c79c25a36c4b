#include "agvsched/experiment.hpp"

#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>

#include "agvsched/error.hpp"
#include "agvsched/netsim.hpp"

namespace agvsched {

std::size_t Table::column(std::string_view name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw Error(ErrorCode::invalid_argument, "no column " + std::string(name));
}

std::string canonical_axis(std::string_view axis) {
  if (axis == "K") return "agvs.count";
  if (axis == "C") return "channel.C";
  if (axis == "S") return "channel.S";
  if (axis == "D") return "channel.D";
  if (axis == "sigma") return "channel.sigma";
  return std::string(axis);
}

namespace {

bool has_path(const Json& doc, const std::string& dotted) {
  const Json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const std::size_t dot = dotted.find('.', start);
    const std::string key = dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(key)) return false;
    node = &(*node)[key];
    if (dot == std::string::npos) return true;
    start = dot + 1;
  }
}

std::string value_label(const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

}  // namespace

SweepSpec sweep_from_json(const Json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::config_invalid, "sweep: must be an object");
  SweepSpec s;
  for (const auto& [key, value] : doc.items()) {
    if (key == "kind" || key == "description") continue;
    if (key == "base") s.base = value;
    else if (key == "axis") s.axis = canonical_axis(value.get<std::string>());
    else if (key == "values") s.values = value.get<std::vector<Json>>();
    else if (key == "series") s.series = canonical_axis(value.get<std::string>());
    else if (key == "series_values") s.series_values = value.get<std::vector<Json>>();
    else if (key == "replications") s.replications = value.get<int>();
    else throw Error(ErrorCode::config_invalid, "sweep." + key + ": unknown key");
  }
  if (s.base.is_null()) s.base = Json::object();
  const Json full = to_json(config_from_json(s.base));
  if (s.axis.empty() || !has_path(full, s.axis))
    throw Error(ErrorCode::config_invalid, "sweep.axis: '" + s.axis + "' is not a config field");
  if (s.values.empty()) throw Error(ErrorCode::config_invalid, "sweep.values: must not be empty");
  if (!s.series.empty()) {
    if (!has_path(full, s.series))
      throw Error(ErrorCode::config_invalid, "sweep.series: '" + s.series + "' is not a config field");
    if (s.series_values.empty()) throw Error(ErrorCode::config_invalid, "sweep.series_values: must not be empty");
  }
  return s;
}

std::string format_double(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::vector<std::string> metrics_columns() {
  return {"makespan",      "mean_tardiness", "max_tardiness", "tasks_completed", "tasks_total",
          "timeout",       "slots",          "uplink_attempts", "uplink_delivered", "uplink_rate",
          "conflicts",     "waits",          "replans",       "deadlock_escapes", "swaps_executed",
          "occupancy_violations", "collisions", "fallback_fraction"};
}

std::vector<std::string> metrics_cells(const Metrics& m) {
  return {std::to_string(m.makespan),
          format_double(m.mean_tardiness),
          std::to_string(m.max_tardiness),
          std::to_string(m.tasks_completed),
          std::to_string(m.tasks_total),
          m.timeout ? "1" : "0",
          std::to_string(m.slots),
          std::to_string(m.uplink_attempts),
          std::to_string(m.uplink_delivered),
          format_double(m.uplink_rate()),
          std::to_string(m.conflicts),
          std::to_string(m.waits),
          std::to_string(m.replans),
          std::to_string(m.deadlock_escapes),
          std::to_string(m.swaps_executed),
          std::to_string(m.occupancy_violations),
          std::to_string(m.collisions),
          format_double(m.fallback_fraction())};
}

namespace {

struct Job {
  std::size_t series = 0, x = 0, rep = 0;
  ScenarioConfig config;
  std::uint64_t seed = 0;
};

std::vector<Job> expand(const SweepSpec& spec) {
  const std::vector<Json> series = spec.series.empty() ? std::vector<Json>{Json("")} : spec.series_values;
  std::vector<Job> jobs;
  for (std::size_t si = 0; si < series.size(); ++si) {
    for (std::size_t xi = 0; xi < spec.values.size(); ++xi) {
      Json doc = spec.base;
      set_path(doc, spec.axis, spec.values[xi]);
      if (!spec.series.empty()) set_path(doc, spec.series, series[si]);
      const ScenarioConfig config = config_from_json(doc);
      const std::size_t reps = spec.replications > 0 ? static_cast<std::size_t>(spec.replications) : config.seeds.size();
      if (reps > config.seeds.size())
        throw Error(ErrorCode::config_invalid, "sweep.replications: exceeds the number of seeds");
      for (std::size_t r = 0; r < reps; ++r) jobs.push_back({si, xi, r, config, config.seeds[r]});
    }
  }
  return jobs;
}

Table assemble(const SweepSpec& spec, const std::vector<Job>& jobs, const std::vector<Metrics>& results) {
  Table t;
  t.columns = {"series", "x", "seed", "kind"};
  for (auto& c : metrics_columns()) t.columns.push_back(c);
  t.columns.push_back("makespan_sd");
  const std::vector<std::string> mcols = metrics_columns();

  auto series_label = [&](std::size_t si) {
    return spec.series.empty() ? std::string() : value_label(spec.series_values[si]);
  };
  // Jobs are generated in canonical order already: series, x, replication.
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    std::vector<std::string> row = {series_label(jobs[i].series), value_label(spec.values[jobs[i].x]),
                                    std::to_string(jobs[i].seed), "run"};
    for (auto& c : metrics_cells(results[i])) row.push_back(c);
    row.push_back("");
    t.rows.push_back(std::move(row));
  }
  std::size_t begin = 0;
  while (begin < jobs.size()) {
    std::size_t end = begin;
    while (end < jobs.size() && jobs[end].series == jobs[begin].series && jobs[end].x == jobs[begin].x) ++end;
    const double n = static_cast<double>(end - begin);
    std::vector<std::string> row = {series_label(jobs[begin].series), value_label(spec.values[jobs[begin].x]), "",
                                    "aggregate"};
    for (std::size_t c = 0; c < mcols.size(); ++c) {
      double sum = 0.0;
      for (std::size_t i = begin; i < end; ++i) sum += std::stod(t.rows[i][4 + c]);
      row.push_back(format_double(sum / n));
    }
    double mean = 0.0, ss = 0.0;
    for (std::size_t i = begin; i < end; ++i) mean += results[i].makespan;
    mean /= n;
    for (std::size_t i = begin; i < end; ++i) ss += (results[i].makespan - mean) * (results[i].makespan - mean);
    row.push_back(format_double(n > 1 ? std::sqrt(ss / (n - 1)) : 0.0));
    t.rows.push_back(std::move(row));
    begin = end;
  }
  return t;
}

}  // namespace

Table run_sweep_serial(const SweepSpec& spec) {
  const std::vector<Job> jobs = expand(spec);
  std::vector<Metrics> results;
  for (const Job& j : jobs) results.push_back(run_scenario(j.config, j.seed));
  return assemble(spec, jobs, results);
}

Table run_sweep_parallel(const SweepSpec& spec) {
  const std::vector<Job> jobs = expand(spec);
  std::vector<Metrics> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  const auto n = static_cast<std::int64_t>(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < n; ++i) {
    try {
      results[static_cast<std::size_t>(i)] = run_scenario(jobs[static_cast<std::size_t>(i)].config,
                                                          jobs[static_cast<std::size_t>(i)].seed);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return assemble(spec, jobs, results);
}

Table plot_data(const Table& sweep) {
  Table out;
  out.columns = {"series", "x", "mean", "ci"};
  const std::size_t series = sweep.column("series"), x = sweep.column("x"), kind = sweep.column("kind"),
                    mean = sweep.column("makespan"), sd = sweep.column("makespan_sd");
  for (const auto& row : sweep.rows) {
    if (row[kind] != "aggregate") continue;
    std::size_t n = 0;
    for (const auto& r : sweep.rows)
      if (r[kind] == "run" && r[series] == row[series] && r[x] == row[x]) ++n;
    const double ci = n ? 1.96 * std::stod(row[sd]) / std::sqrt(static_cast<double>(n)) : 0.0;
    out.rows.push_back({row[series], row[x], row[mean], format_double(ci)});
  }
  return out;
}

std::vector<ChannelPoint> channel_grid(const std::vector<int>& ks, const std::vector<int>& cs,
                                       const std::vector<int>& ss, const std::vector<int>& ds) {
  std::vector<ChannelPoint> out;
  for (int k : ks)
    for (int c : cs)
      for (int s : ss)
        for (int d : ds) {
          if (s > c) continue;
          out.push_back({k, ChannelConfig{c, s, d, 0.0, TrafficPattern::bernoulli}});
        }
  return out;
}

Table compare_analytic_mc(const std::vector<ChannelPoint>& points, std::int64_t slots, std::uint64_t seed) {
  Table t;
  t.columns = {"K", "C", "S", "D", "p_analytic", "p_mc", "p_se", "thr_analytic", "thr_mc", "thr_se", "z", "pass"};
  std::vector<ChannelEstimate> est(points.size());
  const auto n = static_cast<std::int64_t>(points.size());
  for (std::int64_t i = 0; i < n; ++i) {
    const ChannelPoint& p = points[static_cast<std::size_t>(i)];
    est[static_cast<std::size_t>(i)] = estimate_channel_parallel(p.agvs, p.channel, slots, seed);
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    const ChannelPoint& p = points[i];
    const double pa = p_success_analytic(p.agvs, p.channel);
    const ChannelEstimate& e = est[i];
    const double diff = std::abs(e.p_success - pa);
    // Rare deliveries can leave the sample variance at zero; fall back on the model's
    // own spread, K p (1 - p) per slot for independent successes.
    const double model_se =
        e.slots > 0 ? std::sqrt(p.agvs * pa * (1.0 - pa) / static_cast<double>(e.slots)) / p.agvs : 0.0;
    const double se = std::max(e.p_stderr, model_se);
    const double z = se > 0.0 ? diff / se : (diff < 1e-12 ? 0.0 : INFINITY);
    t.rows.push_back({std::to_string(p.agvs), std::to_string(p.channel.channels), std::to_string(p.channel.selected),
                      std::to_string(p.channel.interval), format_double(pa), format_double(e.p_success),
                      format_double(e.p_stderr), format_double(pa * p.agvs), format_double(e.throughput),
                      format_double(e.throughput_stderr), format_double(z), z <= 3.0 ? "1" : "0"});
  }
  return t;
}

int crossover_k(int channels, int interval, int s_low, int s_high, int k_max) {
  const ChannelConfig lo{channels, s_low, interval, 0.0, TrafficPattern::bernoulli};
  const ChannelConfig hi{channels, s_high, interval, 0.0, TrafficPattern::bernoulli};
  for (int k = 1; k <= k_max; ++k)
    if (throughput_analytic(k, lo) > throughput_analytic(k, hi)) return k;
  return 0;
}

namespace {

std::string quote(const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_row(std::ostringstream& os, const std::vector<std::string>& row) {
  for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << quote(row[i]);
  os << '\n';
}

std::vector<std::string> split_row(const std::string& text, std::size_t& pos) {
  std::vector<std::string> cells(1);
  bool quoted = false;
  while (pos < text.size()) {
    const char c = text[pos++];
    if (quoted) {
      if (c == '"') {
        if (pos < text.size() && text[pos] == '"') {
          cells.back() += '"';
          ++pos;
        } else {
          quoted = false;
        }
      } else {
        cells.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.emplace_back();
    } else if (c == '\n') {
      return cells;
    } else {
      cells.back() += c;
    }
  }
  if (quoted) throw Error(ErrorCode::invalid_argument, "unterminated quoted CSV cell");
  return cells;
}

}  // namespace

std::string to_csv(const Table& table, std::string_view header) {
  std::ostringstream os;
  os << header << '\n';
  if (table.columns.empty() && table.rows.empty()) return os.str();
  write_row(os, table.columns);
  for (const auto& row : table.rows) write_row(os, row);
  return os.str();
}

void emit(const Table& table, std::string_view header, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path);
  out << to_csv(table, header);
  if (!out) throw Error(ErrorCode::io_error, "write failed for " + path);
}

Table parse_csv(const std::string& text, std::string_view header) {
  const std::size_t eol = text.find('\n');
  if (eol == std::string::npos || std::string_view(text).substr(0, eol) != header)
    throw Error(ErrorCode::invalid_argument, "expected first line '" + std::string(header) + "'");
  std::size_t pos = eol + 1;
  Table t;
  if (pos >= text.size()) return t;
  t.columns = split_row(text, pos);
  while (pos < text.size()) {
    auto row = split_row(text, pos);
    if (row.size() != t.columns.size())
      throw Error(ErrorCode::invalid_argument, "row has " + std::to_string(row.size()) + " cells, expected " +
                                                   std::to_string(t.columns.size()));
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table read_csv(const std::string& path, std::string_view header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), header);
}

}  // namespace agvsched
