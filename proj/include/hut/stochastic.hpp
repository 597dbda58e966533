#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "hut/types.hpp"

namespace hut {

/// Deterministic random stream: identical (seed, stream_id) pairs produce
/// identical sequences, independent of platform or library version. Channel,
/// arrival and fallback draws use distinct stream ids so that toggling one
/// consumer never perturbs the others (common random numbers across sweeps).
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();
  /// Uniform on (0,1) (never exactly 0 or 1).
  double uniform();
  /// Standard normal via Box-Muller on the uniform stream.
  double normal();
  cplx complex_normal(double variance);  // CN(0, variance)

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

 private:
  std::uint64_t seed_, stream_id_;
  std::uint64_t state_[4];  // xoshiro256++
};

/// Stream ids used by the simulator.
namespace streams {
constexpr std::uint64_t kChannel = 0;
constexpr std::uint64_t kArrivals = 1;
constexpr std::uint64_t kFallback = 2;
constexpr std::uint64_t kSabfInit = 3;
}  // namespace streams

enum class ArrivalModel {
  Bernoulli,     // {0,1} with mean u (default)
  UniformRange,  // uniform on [0, 2u]; requires u <= 1/2
};

/// Piecewise-constant harvested-energy and buy-price schedules plus a constant
/// sell price. Breakpoints are (start_frame, value) with strictly increasing
/// start frames, the first at 0; the value in force at t is the last
/// breakpoint with start_frame <= t.
struct Schedule {
  std::vector<std::pair<long, double>> harvest;    // mW
  std::vector<std::pair<long, double>> buy_price;  // cents/mW
  double sell_price = 1.0;                         // cents/mW

  /// The experiment schedule used throughout: energy arrival segments of
  /// 200/100/150/300 mW per 1000 frames and the eight 500-frame buy-price
  /// segments 1.2, 1.3, 1.9, 1.8, 1.6, 1.7, 1.2, 1.1 cents/mW at 1 cent/mW
  /// sell price.
  static Schedule defaults();

  void validate() const;
};

/// Block-fading draw: entry (i, n) of h is CN(0, d_n^{-chi}).
ChannelState draw_channel(const SystemConfig& cfg, RngStream& rng);

/// Per-link packet arrivals U_n,req in [0,1] with mean u_n,req.
rvec draw_arrivals(const SystemConfig& cfg, RngStream& rng,
                   ArrivalModel model = ArrivalModel::Bernoulli);

/// Harvest/price values in force at frame t.
EnergyPriceState schedule_at(const Schedule& s, long t);

}  // namespace hut
