#include "hut/stochastic.hpp"

#include <algorithm>
#include <cmath>

namespace hut {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t v, int k) {
  return (v << k) | (v >> (64 - k));
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {
  std::uint64_t mix = seed ^ (0xd1b54a32d192ed03ULL * (stream_id + 1));
  for (auto& s : state_) s = splitmix64(mix);
}

std::uint64_t RngStream::next_u64() {
  const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double RngStream::uniform() {
  // 53 random bits into (0,1); +0.5 keeps the value strictly inside.
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::normal() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

cplx RngStream::complex_normal(double variance) {
  const double s = std::sqrt(variance / 2.0);
  return {s * normal(), s * normal()};
}

ChannelState draw_channel(const SystemConfig& cfg, RngStream& rng) {
  ChannelState ch;
  ch.h.resize(cfg.n_antennas, cfg.n_links);
  for (int n = 0; n < cfg.n_links; ++n) {
    const double var = std::pow(cfg.link_distance(n), -cfg.pathloss_exp);
    for (int i = 0; i < cfg.n_antennas; ++i) ch.h(i, n) = rng.complex_normal(var);
  }
  return ch;
}

rvec draw_arrivals(const SystemConfig& cfg, RngStream& rng, ArrivalModel model) {
  rvec u(cfg.n_links);
  for (int n = 0; n < cfg.n_links; ++n) {
    const double mean = cfg.arrival_mean(n);
    switch (model) {
      case ArrivalModel::Bernoulli:
        u(n) = rng.uniform() < mean ? 1.0 : 0.0;
        break;
      case ArrivalModel::UniformRange:
        if (mean > 0.5)
          throw ConfigError("uniform arrival model requires arrival_mean <= 0.5");
        u(n) = 2.0 * mean * rng.uniform();
        break;
    }
  }
  return u;
}

Schedule Schedule::defaults() {
  Schedule s;
  // Segment k >= 2 starts at frame 1000(k-1)+1 resp. 500(k-1)+1: the value in
  // force at the segment-closing frames 500, 1000, ... is still the old one.
  s.harvest = {{0, 200.0}, {1001, 100.0}, {2001, 150.0}, {3001, 300.0}};
  s.buy_price = {{0, 1.2},    {501, 1.3},  {1001, 1.9}, {1501, 1.8},
                 {2001, 1.6}, {2501, 1.7}, {3001, 1.2}, {3501, 1.1}};
  s.sell_price = 1.0;
  return s;
}

void Schedule::validate() const {
  auto check = [](const std::vector<std::pair<long, double>>& bp, const char* name) {
    if (bp.empty() || bp.front().first != 0)
      throw ConfigError(std::string(name) + " schedule must start at frame 0");
    for (std::size_t i = 1; i < bp.size(); ++i)
      if (bp[i].first <= bp[i - 1].first)
        throw ConfigError(std::string(name) + " schedule frames must be strictly increasing");
  };
  check(harvest, "harvest");
  check(buy_price, "buy_price");
  if (!(sell_price > 0)) throw ConfigError("sell price must be positive");
  for (const auto& [t, v] : harvest)
    if (v < 0) throw ConfigError("harvest values must be nonnegative");
  for (const auto& [t, v] : buy_price)
    if (v < sell_price) throw ConfigError("buy price must be >= sell price");
}

EnergyPriceState schedule_at(const Schedule& s, long t) {
  if (t < 0) throw ConfigError("frame index must be nonnegative");
  auto value_at = [t](const std::vector<std::pair<long, double>>& bp) {
    auto it = std::upper_bound(
        bp.begin(), bp.end(), t,
        [](long frame, const std::pair<long, double>& b) { return frame < b.first; });
    return std::prev(it)->second;
  };
  EnergyPriceState e;
  e.harvest = value_at(s.harvest);
  e.buy_price = value_at(s.buy_price);
  e.sell_price = s.sell_price;
  return e;
}

}  // namespace hut
