#pragma once

#include <cstdint>
#include <set>
#include <span>
#include <variant>
#include <vector>

#include "agvsched/factory.hpp"
#include "agvsched/rng.hpp"
#include "agvsched/router.hpp"

namespace agvsched {

enum class TrafficPattern { bernoulli, periodic };

struct ChannelConfig {
  int channels = 1;          // C
  int selected = 1;          // S copies per packet
  int interval = 1;          // D, mean slots between uplink attempts
  double error_prob = 0.0;   // sigma, independent per copy
  TrafficPattern pattern = TrafficPattern::bernoulli;

  double transmit_prob() const { return 1.0 / interval; }
};

// Throws Error{invalid_argument} naming the offending field.
void validate(const ChannelConfig& config);

// Binomial coefficient as a double; zero when k > n or k < 0.
double choose(int n, int k);

// Probability that a given AGV attempts in a slot and at least one of its S copies
// survives contention from K-1 independent Bernoulli(P_t) transmitters (sigma = 0).
double p_success_analytic(int agvs, const ChannelConfig& config);

// Expected delivered uplink packets per slot.
double throughput_analytic(int agvs, const ChannelConfig& config);

enum class PacketKind { state, route, global_map, task_route };

bool is_uplink(PacketKind kind);

struct StateReport {
  Vertex location = kNoVertex;
  std::vector<TimedVertex> route;  // State and Route bodies travel in one report
};

struct Packet {
  PacketKind kind = PacketKind::state;
  int src = 0;          // AGV id, or -1 for the edge server
  Slot created_at = 0;
  int size_bytes = 0;   // metadata only; every channel carries one packet per slot
  std::variant<std::monostate, StateReport, CongestionMap, TaskRoute> body;
};

struct Transmission {
  int agv = 0;
  std::vector<int> channels;  // S distinct channel indices in [0, C)
};

struct SlotOutcome {
  std::vector<int> attempted;
  std::vector<int> delivered;
  std::vector<std::vector<int>> channels;  // per attempted AGV, same order
};

// Uniformly random S-subset of C channels, ascending.
std::vector<int> pick_channels(int channels, int selected, Rng& rng);

// Resolves one slot: a copy survives iff nobody else used its channel and no sigma error
// strikes it; an AGV is delivered iff at least one copy survives. No retransmission state.
// Throws Error{malformed_channel_set}.
SlotOutcome simulate_slot(std::span<const Transmission> transmissions, const ChannelConfig& config,
                          Rng& rng);

// AGVs (by id) that attempt an uplink in `slot`. Periodic mode offsets AGV k by k mod D.
std::vector<int> schedule_traffic(std::span<const int> agv_ids, Slot slot, const ChannelConfig& config,
                                  Rng& rng);

// Downlink is modelled reliable and contention-free. Throws Error{wrong_direction}.
std::set<int> broadcast_downlink(const Packet& packet, std::span<const int> recipients);

// Monte Carlo estimate of per-AGV delivery probability and throughput.
struct ChannelEstimate {
  double p_success = 0.0;
  double p_stderr = 0.0;
  double throughput = 0.0;
  double throughput_stderr = 0.0;
  std::int64_t slots = 0;
  std::int64_t attempts = 0;
  std::int64_t delivered = 0;
};

// The slot budget is split into fixed chunks with their own RNG streams, so the serial
// and OpenMP kernels produce identical estimates for a given seed.
ChannelEstimate estimate_channel_serial(int agvs, const ChannelConfig& config, std::int64_t slots,
                                        std::uint64_t seed);
ChannelEstimate estimate_channel_parallel(int agvs, const ChannelConfig& config, std::int64_t slots,
                                          std::uint64_t seed);

namespace detail {
// Unoptimised kernel built on pick_channels + simulate_slot; used to check the masked one.
ChannelEstimate estimate_channel_reference(int agvs, const ChannelConfig& config, std::int64_t slots,
                                           std::uint64_t seed);
}  // namespace detail

}  // namespace agvsched
