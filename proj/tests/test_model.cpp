#include "doctest.h"

#include <cmath>

#include "hut/model.hpp"
#include "hut/stochastic.hpp"

using namespace hut;

namespace {

// Independent scalar-loop evaluation of the SINR ratio, kept free of any
// Eigen reductions used by the library path.
double sinr_oracle(const SystemConfig& cfg, const ChannelState& ch, const cmat& w, int n) {
  cplx desired(0, 0);
  for (int i = 0; i < cfg.n_antennas; ++i) desired += std::conj(ch.h(i, n)) * w(i, n);
  double interf = 0.0;
  for (int m = 0; m < cfg.n_links; ++m) {
    if (m == n) continue;
    cplx acc(0, 0);
    for (int i = 0; i < cfg.n_antennas; ++i) acc += std::conj(ch.h(i, n)) * w(i, m);
    interf += std::norm(acc);
  }
  return std::norm(desired) / (interf + cfg.noise_power(n));
}

SystemConfig two_link_cfg() {
  SystemConfig cfg = SystemConfig::defaults();
  cfg.n_links = 2;
  cfg.noise_power = rvec::Constant(2, 1e-3);
  cfg.sinr_target = rvec::Constant(2, db_to_linear(2.0));
  cfg.mcs_b = rvec::Constant(2, 20.0);
  cfg.mcs_c = rvec::Constant(2, 0.451);
  cfg.link_distance = rvec::Constant(2, 10.0);
  cfg.arrival_mean = rvec::Constant(2, 0.3);
  return cfg;
}

}  // namespace

TEST_SUITE("model") {

TEST_CASE("sinr single link aligned beam") {
  SystemConfig cfg = SystemConfig::defaults();
  cfg.n_links = 1;
  cfg.noise_power = rvec::Constant(1, 1e-3);
  cfg.sinr_target = rvec::Constant(1, 1.0);
  cfg.mcs_b = rvec::Constant(1, 20.0);
  cfg.mcs_c = rvec::Constant(1, 0.451);
  cfg.link_distance = rvec::Constant(1, 10.0);
  cfg.arrival_mean = rvec::Constant(1, 0.3);

  RngStream rng(7, 0);
  ChannelState ch = draw_channel(cfg, rng);
  const double p = 3.7;
  cmat w = std::sqrt(p) * ch.h.col(0) / ch.h.col(0).norm();
  CHECK(sinr(cfg, ch, w, 0) ==
        doctest::Approx(p * ch.h.col(0).squaredNorm() / 1e-3).epsilon(1e-12));
}

TEST_CASE("sinr zero beamformers") {
  SystemConfig cfg = two_link_cfg();
  RngStream rng(3, 0);
  ChannelState ch = draw_channel(cfg, rng);
  cmat w = cmat::Zero(cfg.n_antennas, cfg.n_links);
  CHECK(sinr(cfg, ch, w, 0) == 0.0);
  CHECK(sinr(cfg, ch, w, 1) == 0.0);
}

TEST_CASE("sinr matches scalar oracle on random 2-link instances") {
  SystemConfig cfg = two_link_cfg();
  RngStream rng(11, 0);
  for (int trial = 0; trial < 50; ++trial) {
    ChannelState ch = draw_channel(cfg, rng);
    cmat w(cfg.n_antennas, cfg.n_links);
    for (int n = 0; n < cfg.n_links; ++n)
      for (int i = 0; i < cfg.n_antennas; ++i) w(i, n) = rng.complex_normal(4.0);
    for (int n = 0; n < cfg.n_links; ++n) {
      const double expect = sinr_oracle(cfg, ch, w, n);
      CHECK(sinr(cfg, ch, w, n) == doctest::Approx(expect).epsilon(1e-12));
    }
  }
}

TEST_CASE("sinr invariant under per-user phase rotation") {
  SystemConfig cfg = two_link_cfg();
  RngStream rng(13, 0);
  ChannelState ch = draw_channel(cfg, rng);
  cmat w(cfg.n_antennas, cfg.n_links);
  for (int n = 0; n < cfg.n_links; ++n)
    for (int i = 0; i < cfg.n_antennas; ++i) w(i, n) = rng.complex_normal(1.0);
  const rvec base = sinr_all(cfg, ch, w);
  for (int rot = 0; rot < 10; ++rot) {
    cmat w2 = w;
    const int n = rot % cfg.n_links;
    w2.col(n) *= std::exp(cplx(0.0, 2 * M_PI * rng.uniform()));
    const rvec rotated = sinr_all(cfg, ch, w2);
    for (int j = 0; j < cfg.n_links; ++j)
      CHECK(rotated(j) == doctest::Approx(base(j)).epsilon(1e-10));
  }
}

TEST_CASE("sinr dimension mismatch raises") {
  SystemConfig cfg = two_link_cfg();
  ChannelState ch;
  ch.h = cmat::Ones(cfg.n_antennas + 1, cfg.n_links);
  cmat w = cmat::Zero(cfg.n_antennas, cfg.n_links);
  CHECK_THROWS_AS(sinr(cfg, ch, w, 0), ConfigError);
}

TEST_CASE("signal processing power anchors") {
  SystemConfig cfg = SystemConfig::defaults();
  CHECK(signal_processing_power(cfg) == doctest::Approx(201.25).epsilon(1e-15));
  cfg.n_antennas = 1;
  CHECK(signal_processing_power(cfg) == doctest::Approx(115.0).epsilon(1e-15));
  cfg.n_antennas = 2;
  cfg.sp_base_power = 100.0;
  CHECK(signal_processing_power(cfg) == doctest::Approx(119.0).epsilon(1e-15));
}

TEST_CASE("total power") {
  SystemConfig cfg = SystemConfig::defaults();
  cmat w = cmat::Zero(4, 3);
  CHECK(total_power(cfg, w) == doctest::Approx(201.25));
  CHECK(total_power(cfg, 100.0) == doctest::Approx(301.25));
  cfg.pa_efficiency = 0.5;
  CHECK(total_power(cfg, 100.0) == doctest::Approx(401.25));
}

TEST_CASE("grid cost and convex form") {
  EnergyPriceState e{200.0, 1.2, 1.0};
  CHECK(grid_cost(300.0, e) == doctest::Approx(120.0));
  CHECK(grid_cost(150.0, e) == doctest::Approx(-50.0));
  CHECK(grid_cost(200.0, e) == doctest::Approx(0.0));
  CHECK(grid_cost_convex(300.0, e) == doctest::Approx(120.0));
  CHECK(grid_cost_convex(150.0, e) == doctest::Approx(-50.0));

  RngStream rng(17, 0);
  for (int i = 0; i < 10000; ++i) {
    EnergyPriceState ep;
    ep.harvest = 400.0 * rng.uniform();
    ep.sell_price = 0.1 + 2.0 * rng.uniform();
    ep.buy_price = ep.sell_price + 2.0 * rng.uniform();
    const double p = 500.0 * rng.uniform();
    const double a = grid_cost(p, ep);
    const double b = grid_cost_convex(p, ep);
    CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, std::abs(a)));
  }
}

TEST_CASE("packet departure sigmoid") {
  // midpoint: sinr at exactly b dB
  CHECK(packet_departure(db_to_linear(20.0), 20.0, 0.451) == doctest::Approx(0.5).epsilon(1e-15));
  // frozen high-precision evaluation at 30 dB, b=20, c=0.451
  CHECK(packet_departure(1e3, 20.0, 0.451) ==
        doctest::Approx(0.989121189982926).epsilon(1e-12));
  CHECK(packet_departure(0.0, 20.0, 0.451) == 0.0);
  CHECK(packet_departure(-1.0, 20.0, 0.451) == 0.0);
  // strict monotonicity and (0,1) bounds over a wide sweep
  double prev = 0.0;
  for (double s = 1e-6; s < 1e9; s *= 3.7) {
    const double u = packet_departure(s, 20.0, 0.451);
    CHECK(u > prev);
    CHECK(u > 0.0);
    CHECK(u < 1.0);
    prev = u;
  }
}

TEST_CASE("queue step") {
  CHECK(queue_step(5.0, 0.3, 0.2) == doctest::Approx(4.9));
  CHECK(queue_step(0.1, 0.3, 0.0) == 0.0);
  CHECK(queue_step(0.0, 0.0, 1.0) == 1.0);
  RngStream rng(19, 0);
  for (int i = 0; i < 1000; ++i) {
    const double q = 10.0 * rng.uniform();
    const double dep = rng.uniform();
    const double arr = rng.uniform();
    const double next = queue_step(q, dep, arr);
    CHECK(next >= arr);
    CHECK(next >= q - dep);
    CHECK(next >= 0.0);
  }
}

TEST_CASE("gewpr objective recomposes from parts") {
  SystemConfig cfg = SystemConfig::defaults();
  RngStream rng(23, 0);
  ChannelState ch = draw_channel(cfg, rng);
  EnergyPriceState e{200.0, 1.2, 1.0};

  cmat w(cfg.n_antennas, cfg.n_links);
  for (int n = 0; n < cfg.n_links; ++n)
    for (int i = 0; i < cfg.n_antennas; ++i) w(i, n) = rng.complex_normal(9.0);

  SUBCASE("zero queues keep only the grid term") {
    rvec q = rvec::Zero(3);
    CHECK(gewpr_objective(cfg, ch, e, w, q) ==
          doctest::Approx(cfg.control_v * grid_cost(total_power(cfg, w), e)));
  }
  SUBCASE("zero beamformers, zero queues") {
    rvec q = rvec::Zero(3);
    cmat w0 = cmat::Zero(4, 3);
    CHECK(gewpr_objective(cfg, ch, e, w0, q) ==
          doctest::Approx(cfg.control_v * grid_cost(signal_processing_power(cfg), e)));
  }
  SUBCASE("random instance recomposition") {
    rvec q(3);
    q << 1.5, 0.0, 7.25;
    double expect = cfg.control_v * grid_cost(total_power(cfg, w), e);
    for (int n = 0; n < 3; ++n)
      expect -= q(n) * packet_departure(sinr_oracle(cfg, ch, w, n), cfg.mcs_b(n), cfg.mcs_c(n));
    CHECK(gewpr_objective(cfg, ch, e, w, q) == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("drift bound inequality") {
  CHECK(drift_bound_terms(5.0, 0.3, 0.2));
  CHECK(drift_bound_terms(0.0, 1.0, 1.0));
  RngStream rng(29, 0);
  for (int i = 0; i < 100000; ++i) {
    const double a = 100.0 * rng.uniform();
    const double b = rng.uniform();
    const double c = rng.uniform();
    CHECK(drift_bound_terms(a, b, c));
  }
}

TEST_CASE("config validation") {
  SystemConfig cfg = SystemConfig::defaults();
  CHECK_NOTHROW(cfg.validate());
  cfg.pa_efficiency = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = SystemConfig::defaults();
  cfg.arrival_mean(1) = 1.5;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  EnergyPriceState bad{100.0, 0.9, 1.0};  // buy < sell
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

}  // TEST_SUITE
