#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "agvsched/config.hpp"
#include "agvsched/error.hpp"
#include "agvsched/experiment.hpp"
#include "agvsched/orchestrator.hpp"

using namespace agvsched;

namespace {

constexpr std::string_view kMetricsHeader = "# agvsched-metrics v1";

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::io_error, "cannot write " + path);
  out << text;
}

Json with_overrides(Json doc, const std::vector<std::string>& sets, const char* prefix = nullptr) {
  for (const auto& s : sets) apply_override(doc, prefix ? std::string(prefix) + s : s);
  return doc;
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out,
            const std::string& format, const std::string& log_path, const std::vector<std::string>& sets) {
  Json doc = config_path.empty() ? Json::object() : load_json(config_path);
  if (doc.contains("kind")) {
    if (doc["kind"] != "sweep") throw Error(ErrorCode::config_invalid, "run needs a scenario or sweep file");
    doc = doc.value("base", Json::object());
  }
  const ScenarioConfig config = config_from_json(with_overrides(doc, sets));
  const std::vector<std::uint64_t> seeds = seed ? std::vector<std::uint64_t>{*seed} : config.seeds;

  std::ofstream log_file;
  if (!log_path.empty()) {
    log_file.open(log_path, std::ios::binary);
    if (!log_file) throw Error(ErrorCode::io_error, "cannot write " + log_path);
  }
  Table table;
  table.columns = {"seed", "mode", "agvs"};
  for (auto& c : metrics_columns()) table.columns.push_back(c);
  Json runs = Json::array();
  for (std::uint64_t s : seeds) {
    const Metrics m = run_scenario(config, s, log_file.is_open() ? &log_file : nullptr);
    std::vector<std::string> row = {std::to_string(s), std::string(to_string(config.mode)),
                                    std::to_string(config.agvs.count)};
    for (auto& c : metrics_cells(m)) row.push_back(c);
    table.rows.push_back(row);
    Json r;
    for (std::size_t i = 0; i < table.columns.size(); ++i) r[table.columns[i]] = row[i];
    r["completion"] = m.completion;
    runs.push_back(r);
  }
  if (format == "json") write_text(out, runs.dump(2) + "\n");
  else write_text(out, to_csv(table, kMetricsHeader));
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& out, const std::string& format,
              const std::vector<std::string>& sets, bool serial) {
  if (config_path.empty()) throw Error(ErrorCode::config_invalid, "sweep needs --config");
  Json doc = load_json(config_path);
  if (!doc.contains("base")) doc["base"] = Json::object();
  for (const auto& s : sets) apply_override(doc["base"], s);
  const SweepSpec spec = sweep_from_json(doc);
  const Table table = serial ? run_sweep_serial(spec) : run_sweep_parallel(spec);
  if (format == "plot") write_text(out, to_csv(plot_data(table), kPlotHeader));
  else write_text(out, to_csv(table, kSweepHeader));
  return 0;
}

std::vector<int> int_list(const Json& doc, const char* key, std::vector<int> fallback) {
  return doc.contains(key) ? doc[key].get<std::vector<int>>() : fallback;
}

int cmd_channel(const std::string& config_path, std::optional<std::uint64_t> seed, const std::string& out,
                std::vector<int> ks, std::vector<int> cs, std::vector<int> ss, std::vector<int> ds,
                std::int64_t slots) {
  Json doc = config_path.empty() ? Json::object() : load_json(config_path);
  if (ks.empty()) ks = int_list(doc, "K", {1, 2, 5, 10, 50, 72, 100});
  if (cs.empty()) cs = int_list(doc, "C", {1, 4, 60});
  if (ss.empty()) ss = int_list(doc, "S", {1, 2, 4});
  if (ds.empty()) ds = int_list(doc, "D", {1, 2, 10});
  if (slots <= 0) slots = doc.value("slots", std::int64_t{1000000});
  const std::uint64_t s = seed ? *seed : doc.value("seed", std::uint64_t{1});
  const Table table = compare_analytic_mc(channel_grid(ks, cs, ss, ds), slots, s);
  write_text(out, to_csv(table, kChannelHeader));
  std::size_t fails = 0;
  for (const auto& row : table.rows) fails += row.back() == "0";
  std::cerr << table.rows.size() - fails << "/" << table.rows.size() << " points within 3 standard errors\n";
  return 0;
}

int cmd_replay(const std::string& log_path, const std::string& out, int every, std::optional<int> only) {
  std::ifstream in(log_path);
  if (!in) throw Error(ErrorCode::io_error, "cannot open " + log_path);
  std::ostringstream os;
  std::string line;
  int width = 0, height = 0;
  std::vector<std::pair<int, int>> production;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const Json rec = Json::parse(line, nullptr, false);
    if (rec.is_discarded()) throw Error(ErrorCode::invalid_argument, "malformed log line: " + line);
    if (rec.contains("grid")) {
      width = rec["grid"][0].get<int>();
      height = rec["grid"][1].get<int>();
      production.clear();
      for (const auto& c : rec["production"]) production.emplace_back(c[0].get<int>(), c[1].get<int>());
      os << "== mode " << rec.value("mode", "?") << " seed " << rec.value("seed", 0) << " agvs "
         << rec.value("agvs", 0) << "\n";
      continue;
    }
    const int t = rec.at("t").get<int>();
    if (only ? t != *only : (every > 0 && t % every != 0)) continue;
    std::vector<std::string> rows(static_cast<std::size_t>(height), std::string(static_cast<std::size_t>(width), '.'));
    for (auto [x, y] : production) rows[static_cast<std::size_t>(y)][static_cast<std::size_t>(x)] = '#';
    std::map<std::pair<int, int>, int> count;
    for (const auto& p : rec["pos"]) ++count[{p[0].get<int>(), p[1].get<int>()}];
    for (auto [cell, n] : count)
      rows[static_cast<std::size_t>(cell.second)][static_cast<std::size_t>(cell.first)] =
          static_cast<char>(n > 9 ? '+' : '0' + n);
    os << "t=" << t << " delivered=" << rec["delivered"].dump() << " conflicts=" << rec["conflicts"]
       << " collisions=" << rec["collisions"] << "\n";
    for (int y = height - 1; y >= 0; --y) os << rows[static_cast<std::size_t>(y)] << "\n";
  }
  write_text(out, os.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"AGV fleet scheduling simulator with a contention-based uplink"};
  app.require_subcommand(1);

  std::string config, out, format = "csv", log_path;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> sets;

  auto* run = app.add_subcommand("run", "Run one scenario per seed and print its metrics");
  run->add_option("--config", config, "Scenario JSON file");
  run->add_option("--seed", seed, "Run only this seed");
  run->add_option("--out", out, "Output file (default stdout)");
  run->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  run->add_option("--log", log_path, "Write the per-slot event log (JSON lines)");
  run->add_option("--set", sets, "Override a dotted key, e.g. --set channel.D=25");

  bool serial = false;
  auto* sweep = app.add_subcommand("sweep", "Sweep one config field over a list of values");
  sweep->add_option("--config", config, "Sweep JSON file")->required();
  sweep->add_option("--out", out, "Output file (default stdout)");
  sweep->add_option("--format", format, "csv or plot")->check(CLI::IsMember({"csv", "plot"}));
  sweep->add_option("--set", sets, "Override a dotted key of the base scenario");
  sweep->add_flag("--serial", serial, "Run replications one after another");

  std::vector<int> ks, cs, ss, ds;
  std::int64_t slots = 0;
  auto* channel = app.add_subcommand("channel-check", "Compare analytic and Monte Carlo uplink success");
  channel->add_option("--config", config, "Channel grid JSON file");
  channel->add_option("--seed", seed, "Monte Carlo seed");
  channel->add_option("--out", out, "Output file (default stdout)");
  channel->add_option("--format", format, "csv")->check(CLI::IsMember({"csv"}));
  channel->add_option("--K", ks, "AGV counts");
  channel->add_option("--C", cs, "Channel counts");
  channel->add_option("--S", ss, "Selected channel counts");
  channel->add_option("--D", ds, "Intervals");
  channel->add_option("--slots", slots, "Slots per point");

  int every = 1;
  std::optional<int> at;
  auto* replay = app.add_subcommand("replay", "Render an event log as text frames");
  replay->add_option("--log", log_path, "Event log file written by run --log")->required();
  replay->add_option("--out", out, "Output file (default stdout)");
  replay->add_option("--format", format, "text")->check(CLI::IsMember({"text"}));
  replay->add_option("--every", every, "Show every n-th slot");
  replay->add_option("--slot", at, "Show a single slot");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(config, seed, out, format, log_path, sets);
    if (*sweep) return cmd_sweep(config, out, format, sets, serial);
    if (*channel) return cmd_channel(config, seed, out, ks, cs, ss, ds, slots);
    if (*replay) return cmd_replay(log_path, out, every, at);
  } catch (const Error& e) {
    std::cerr << Json{{"error", to_string(e.code())}, {"message", e.what()}}.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << Json{{"error", "internal"}, {"message", e.what()}}.dump() << "\n";
    return 3;
  }
  return 1;
}
