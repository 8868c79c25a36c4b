#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "agvsched/config.hpp"
#include "agvsched/orchestrator.hpp"

namespace agvsched {

// String-valued result table; what is emitted is exactly what is held in memory.
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;  // throws Error{invalid_argument}
  friend bool operator==(const Table&, const Table&) = default;
};

inline constexpr std::string_view kSweepHeader = "# agvsched-sweep v1";
inline constexpr std::string_view kPlotHeader = "# agvsched-plot v1";
inline constexpr std::string_view kChannelHeader = "# agvsched-channel v1";

// Short axis names accepted in sweep files: K, C, S, D, sigma.
std::string canonical_axis(std::string_view axis);

struct SweepSpec {
  Json base;                       // scenario document the axis values are written into
  std::string axis;                // dotted config key
  std::vector<Json> values;
  std::string series;              // optional second axis, one curve per value
  std::vector<Json> series_values;
  int replications = 0;            // <= 0 uses every seed of the base config
};

// Throws Error{config_invalid}.
SweepSpec sweep_from_json(const Json& doc);

std::vector<std::string> metrics_columns();
std::vector<std::string> metrics_cells(const Metrics& m);

// One row per (series, x, seed) in canonical order, then one aggregate row per point
// carrying means and the makespan standard deviation.
Table run_sweep_serial(const SweepSpec& spec);
Table run_sweep_parallel(const SweepSpec& spec);
inline Table run_sweep(const SweepSpec& spec) { return run_sweep_parallel(spec); }

// series, x, mean, ci (95% normal interval half-width of the makespan).
Table plot_data(const Table& sweep);

struct ChannelPoint {
  int agvs = 1;
  ChannelConfig channel;
};

// Expands a grid; S values above C are skipped.
std::vector<ChannelPoint> channel_grid(const std::vector<int>& ks, const std::vector<int>& cs,
                                       const std::vector<int>& ss, const std::vector<int>& ds);

// Analytic vs Monte Carlo per point with a 3-standard-error verdict.
Table compare_analytic_mc(const std::vector<ChannelPoint>& points, std::int64_t slots, std::uint64_t seed);

// Smallest K in [1, k_max] where S=s_low throughput exceeds S=s_high throughput; 0 if none.
int crossover_k(int channels, int interval, int s_low, int s_high, int k_max);

std::string format_double(double v);

// CSV with a versioned first line. Throws Error{io_error}.
std::string to_csv(const Table& table, std::string_view header);
void emit(const Table& table, std::string_view header, const std::string& path);
// Throws Error{io_error | invalid_argument} for malformed input.
Table parse_csv(const std::string& text, std::string_view header);
Table read_csv(const std::string& path, std::string_view header);

}  // namespace agvsched
