#include "agvsched/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "agvsched/error.hpp"

namespace agvsched {

void validate(const ChannelConfig& c) {
  if (c.channels < 1) throw Error(ErrorCode::invalid_argument, "channel.C must be >= 1");
  if (c.selected < 1 || c.selected > c.channels)
    throw Error(ErrorCode::invalid_argument, "channel.S must lie in [1, C]");
  if (c.interval < 1) throw Error(ErrorCode::invalid_argument, "channel.D must be >= 1");
  if (!(c.error_prob >= 0.0 && c.error_prob < 1.0))
    throw Error(ErrorCode::invalid_argument, "channel.sigma must lie in [0, 1)");
}

double choose(int n, int k) {
  if (k < 0 || n < 0 || k > n) return 0.0;
  k = std::min(k, n - k);
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return std::round(r);
}

double p_success_analytic(int agvs, const ChannelConfig& c) {
  validate(c);
  if (agvs < 1) throw Error(ErrorCode::invalid_argument, "K must be >= 1");
  const double pt = c.transmit_prob();
  const int C = c.channels, S = c.selected;
  // The alternating inclusion-exclusion sum cancels catastrophically once C(S, i) is
  // large, so the same quantity is computed as a chain over the number u of our S
  // channels still untouched: each other AGV transmits with probability pt and then
  // covers j of them with hypergeometric probability C(u,j) C(C-u,S-j) / C(C,S).
  const double all = choose(C, S);
  std::vector<std::vector<double>> cover(static_cast<std::size_t>(S) + 1);
  for (int u = 0; u <= S; ++u) {
    cover[u].resize(static_cast<std::size_t>(u) + 1);
    for (int j = 0; j <= u; ++j) cover[u][j] = choose(u, j) * choose(C - u, S - j) / all;
  }
  std::vector<double> dist(static_cast<std::size_t>(S) + 1, 0.0), next(dist.size());
  dist[static_cast<std::size_t>(S)] = 1.0;
  for (int k = 1; k < agvs; ++k) {
    std::fill(next.begin(), next.end(), 0.0);
    for (int u = 0; u <= S; ++u) {
      if (dist[u] == 0.0) continue;
      next[u] += dist[u] * (1.0 - pt);
      for (int j = 0; j <= u; ++j) next[u - j] += dist[u] * pt * cover[u][j];
    }
    dist.swap(next);
  }
  double alive = 0.0;
  for (int u = 1; u <= S; ++u) alive += dist[u];
  return pt * alive;
}

double throughput_analytic(int agvs, const ChannelConfig& c) {
  return agvs * p_success_analytic(agvs, c);
}

bool is_uplink(PacketKind kind) { return kind == PacketKind::state || kind == PacketKind::route; }

namespace {

// Floyd's sampling, one small draw per selected channel; picking every channel needs none.
std::vector<int> pick_channels(int channels, int selected, HalfWords& bits) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(selected));
  if (selected == channels) {
    for (int j = 0; j < channels; ++j) out.push_back(j);
    return out;
  }
  for (int j = channels - selected; j < channels; ++j) {
    const int t = static_cast<int>(bits.below(static_cast<std::uint32_t>(j) + 1));
    if (std::find(out.begin(), out.end(), t) == out.end()) out.push_back(t);
    else out.push_back(j);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::vector<int> pick_channels(int channels, int selected, Rng& rng) {
  HalfWords bits(rng);
  return pick_channels(channels, selected, bits);
}

SlotOutcome simulate_slot(std::span<const Transmission> tx, const ChannelConfig& c, Rng& rng) {
  std::vector<int> users(static_cast<std::size_t>(c.channels), 0);
  for (const Transmission& t : tx) {
    if (static_cast<int>(t.channels.size()) != c.selected)
      throw Error(ErrorCode::malformed_channel_set,
                  "AGV " + std::to_string(t.agv) + " selected " + std::to_string(t.channels.size()) +
                      " channels, expected " + std::to_string(c.selected));
    for (std::size_t i = 0; i < t.channels.size(); ++i) {
      const int ch = t.channels[i];
      if (ch < 0 || ch >= c.channels)
        throw Error(ErrorCode::malformed_channel_set, "channel index out of range");
      for (std::size_t j = 0; j < i; ++j)
        if (t.channels[j] == ch) throw Error(ErrorCode::malformed_channel_set, "duplicate channel");
    }
    for (int ch : t.channels) ++users[static_cast<std::size_t>(ch)];
  }
  SlotOutcome out;
  for (const Transmission& t : tx) {
    out.attempted.push_back(t.agv);
    out.channels.push_back(t.channels);
    std::vector<int> sorted = t.channels;
    std::sort(sorted.begin(), sorted.end());
    bool survived = false;
    for (int ch : sorted) {
      const bool hit = c.error_prob > 0.0 && bernoulli(rng, c.error_prob);
      if (users[static_cast<std::size_t>(ch)] == 1 && !hit) survived = true;
    }
    if (survived) out.delivered.push_back(t.agv);
  }
  return out;
}

std::vector<int> schedule_traffic(std::span<const int> agv_ids, Slot slot, const ChannelConfig& c,
                                  Rng& rng) {
  std::vector<int> out;
  for (int id : agv_ids) {
    if (c.pattern == TrafficPattern::bernoulli) {
      if (bernoulli(rng, c.transmit_prob())) out.push_back(id);
    } else if ((slot - id % c.interval) % c.interval == 0 && slot >= id % c.interval) {
      out.push_back(id);
    }
  }
  return out;
}

std::set<int> broadcast_downlink(const Packet& packet, std::span<const int> recipients) {
  if (is_uplink(packet.kind))
    throw Error(ErrorCode::wrong_direction, "uplink packet cannot be broadcast");
  return {recipients.begin(), recipients.end()};
}

namespace {

constexpr std::int64_t kChunkSlots = 1 << 14;

struct Tally {
  std::int64_t slots = 0, attempts = 0, delivered = 0;
  double sum = 0.0, sum_sq = 0.0;  // per-slot delivered counts

  void merge(const Tally& o) {
    slots += o.slots;
    attempts += o.attempts;
    delivered += o.delivered;
    sum += o.sum;
    sum_sq += o.sum_sq;
  }
};

// Bernoulli(pt) attempts over the (slot, AGV) trials of a chunk, drawn by geometric
// skipping so that sparse traffic costs one draw per attempt rather than per AGV.
class AttemptStream {
 public:
  AttemptStream(int agvs, double pt, Rng& rng) : agvs_(agvs), pt_(pt), log_q_(std::log1p(-pt)), rng_(rng) {
    next_ = gap();
  }
  // Appends the AGVs attempting in slot s (ascending) to `out`.
  void slot(std::int64_t s, std::vector<int>& out) {
    out.clear();
    const std::int64_t end = (s + 1) * agvs_;
    while (next_ < end) {
      out.push_back(static_cast<int>(next_ - s * agvs_));
      next_ += 1 + gap();
    }
  }

 private:
  std::int64_t gap() {
    if (pt_ >= 1.0) return 0;
    const double u = 1.0 - uniform01(rng_);  // (0, 1]
    const double g = std::floor(std::log(u) / log_q_);
    return g > 4e18 ? std::int64_t{4000000000000000000} : static_cast<std::int64_t>(g);
  }
  std::int64_t agvs_;
  double pt_, log_q_;
  Rng& rng_;
  std::int64_t next_ = 0;
};

// Same draw order as pick_channels + simulate_slot, on 64-bit channel masks.
Tally run_chunk_masked(int agvs, const ChannelConfig& c, std::int64_t slots, Rng& rng) {
  Tally tally;
  AttemptStream stream(agvs, c.transmit_prob(), rng);
  HalfWords bits(rng);
  const std::uint64_t all = c.channels == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << c.channels) - 1;
  std::vector<int> who;
  std::vector<std::uint64_t> masks(static_cast<std::size_t>(agvs));
  for (std::int64_t s = 0; s < slots; ++s) {
    std::size_t n = 0;
    stream.slot(s, who);
    for (std::size_t w = 0; w < who.size(); ++w) {
      std::uint64_t m = c.selected == c.channels ? all : 0;
      if (!m) {
        for (int j = c.channels - c.selected; j < c.channels; ++j) {
          const std::uint32_t t = bits.below(static_cast<std::uint32_t>(j) + 1);
          m |= (m >> t) & 1U ? (std::uint64_t{1} << j) : (std::uint64_t{1} << t);
        }
      }
      masks[n++] = m;
    }
    std::uint64_t once = 0, multi = 0;
    for (std::size_t i = 0; i < n; ++i) {
      multi |= once & masks[i];
      once |= masks[i];
    }
    int delivered = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::uint64_t alive = masks[i] & ~multi;
      if (c.error_prob > 0.0) {
        for (std::uint64_t rest = masks[i]; rest; rest &= rest - 1) {
          const std::uint64_t bit = rest & (~rest + 1);
          if (bernoulli(rng, c.error_prob)) alive &= ~bit;
        }
      }
      if (alive) ++delivered;
    }
    tally.slots += 1;
    tally.attempts += static_cast<std::int64_t>(n);
    tally.delivered += delivered;
    tally.sum += delivered;
    tally.sum_sq += static_cast<double>(delivered) * delivered;
  }
  return tally;
}

Tally run_chunk_generic(int agvs, const ChannelConfig& c, std::int64_t slots, Rng& rng) {
  Tally tally;
  AttemptStream stream(agvs, c.transmit_prob(), rng);
  HalfWords bits(rng);
  std::vector<int> who;
  std::vector<Transmission> tx;
  for (std::int64_t s = 0; s < slots; ++s) {
    tx.clear();
    stream.slot(s, who);
    for (int k : who) tx.push_back({k, pick_channels(c.channels, c.selected, bits)});
    const auto outcome = simulate_slot(tx, c, rng);
    const auto delivered = static_cast<std::int64_t>(outcome.delivered.size());
    tally.slots += 1;
    tally.attempts += static_cast<std::int64_t>(tx.size());
    tally.delivered += delivered;
    tally.sum += static_cast<double>(delivered);
    tally.sum_sq += static_cast<double>(delivered) * static_cast<double>(delivered);
  }
  return tally;
}

Tally run_chunk(int agvs, const ChannelConfig& c, std::int64_t chunk, std::int64_t slots,
                std::uint64_t seed) {
  Rng rng = make_stream(seed, Stream::channel, static_cast<std::uint64_t>(chunk));
  const std::int64_t begin = chunk * kChunkSlots;
  const std::int64_t len = std::min(kChunkSlots, slots - begin);
  return c.channels <= 64 ? run_chunk_masked(agvs, c, len, rng) : run_chunk_generic(agvs, c, len, rng);
}

ChannelEstimate finish(int agvs, const Tally& t) {
  ChannelEstimate e;
  e.slots = t.slots;
  e.attempts = t.attempts;
  e.delivered = t.delivered;
  if (t.slots == 0) return e;
  const double n = static_cast<double>(t.slots);
  const double mean = t.sum / n;
  const double var = t.slots > 1 ? std::max(0.0, (t.sum_sq - n * mean * mean) / (n - 1.0)) : 0.0;
  e.throughput = mean;
  e.throughput_stderr = std::sqrt(var / n);
  e.p_success = mean / agvs;
  e.p_stderr = e.throughput_stderr / agvs;
  return e;
}

void check(int agvs, const ChannelConfig& c, std::int64_t slots) {
  validate(c);
  if (agvs < 1) throw Error(ErrorCode::invalid_argument, "K must be >= 1");
  if (slots < 0) throw Error(ErrorCode::invalid_argument, "slot count must be >= 0");
}

}  // namespace

ChannelEstimate estimate_channel_serial(int agvs, const ChannelConfig& c, std::int64_t slots,
                                        std::uint64_t seed) {
  check(agvs, c, slots);
  const std::int64_t chunks = (slots + kChunkSlots - 1) / kChunkSlots;
  Tally total;
  for (std::int64_t i = 0; i < chunks; ++i) total.merge(run_chunk(agvs, c, i, slots, seed));
  return finish(agvs, total);
}

ChannelEstimate estimate_channel_parallel(int agvs, const ChannelConfig& c, std::int64_t slots,
                                          std::uint64_t seed) {
  check(agvs, c, slots);
  const std::int64_t chunks = (slots + kChunkSlots - 1) / kChunkSlots;
  std::vector<Tally> parts(static_cast<std::size_t>(chunks));
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t i = 0; i < chunks; ++i)
    parts[static_cast<std::size_t>(i)] = run_chunk(agvs, c, i, slots, seed);
  // Fixed merge order keeps the floating-point sums identical to the serial kernel.
  Tally total;
  for (const Tally& t : parts) total.merge(t);
  return finish(agvs, total);
}

namespace detail {

ChannelEstimate estimate_channel_reference(int agvs, const ChannelConfig& c, std::int64_t slots,
                                           std::uint64_t seed) {
  check(agvs, c, slots);
  const std::int64_t chunks = (slots + kChunkSlots - 1) / kChunkSlots;
  Tally total;
  for (std::int64_t i = 0; i < chunks; ++i) {
    Rng rng = make_stream(seed, Stream::channel, static_cast<std::uint64_t>(i));
    total.merge(run_chunk_generic(agvs, c, std::min(kChunkSlots, slots - i * kChunkSlots), rng));
  }
  return finish(agvs, total);
}

}  // namespace detail

}  // namespace agvsched
