#include "hut/model.hpp"

#include <cmath>

namespace hut {

namespace {

void check_dims(const SystemConfig& cfg, const ChannelState& ch, const cmat& w) {
  if (ch.h.rows() != cfg.n_antennas || ch.h.cols() != cfg.n_links)
    throw ConfigError("channel dimensions do not match config");
  if (w.rows() != cfg.n_antennas || w.cols() != cfg.n_links)
    throw ConfigError("beamformer dimensions do not match config");
}

}  // namespace

double sinr(const SystemConfig& cfg, const ChannelState& ch, const cmat& w, int n) {
  check_dims(cfg, ch, w);
  if (n < 0 || n >= cfg.n_links) throw ConfigError("link index out of range");
  const cvec hn = ch.h.col(n);
  double desired = std::norm(hn.dot(w.col(n)));  // |h_n^H w_n|^2
  double interference = 0.0;
  for (int m = 0; m < cfg.n_links; ++m) {
    if (m == n) continue;
    interference += std::norm(hn.dot(w.col(m)));
  }
  return desired / (interference + cfg.noise_power(n));
}

rvec sinr_all(const SystemConfig& cfg, const ChannelState& ch, const cmat& w) {
  rvec out(cfg.n_links);
  for (int n = 0; n < cfg.n_links; ++n) out(n) = sinr(cfg, ch, w, n);
  return out;
}

double signal_processing_power(const SystemConfig& cfg) {
  const double nt = static_cast<double>(cfg.n_antennas);
  return cfg.sp_base_power * (0.87 + 0.1 * nt + 0.03 * nt * nt);
}

double total_power(const SystemConfig& cfg, const cmat& w) {
  return total_power(cfg, w.squaredNorm());
}

double total_power(const SystemConfig& cfg, double sum_tx_power) {
  return sum_tx_power / cfg.pa_efficiency + signal_processing_power(cfg);
}

double grid_cost(double p_tot, const EnergyPriceState& e) {
  const double deficit = std::max(p_tot - e.harvest, 0.0);
  const double surplus = std::max(e.harvest - p_tot, 0.0);
  return e.buy_price * deficit - e.sell_price * surplus;
}

double grid_cost_convex(double p_tot, const EnergyPriceState& e) {
  const double x = p_tot - e.harvest;
  return (e.buy_price - e.sell_price) * std::max(x, 0.0) + e.sell_price * x;
}

double packet_departure(double sinr_linear, double b_db, double c_per_db) {
  if (sinr_linear <= 0.0) return 0.0;
  const double snr_db = 10.0 * std::log10(sinr_linear);
  return 1.0 / (1.0 + std::exp(-c_per_db * (snr_db - b_db)));
}

double queue_step(double q, double u_dep, double u_arr) {
  return std::max(q - u_dep, 0.0) + u_arr;
}

double gewpr_objective(const SystemConfig& cfg, const ChannelState& ch,
                       const EnergyPriceState& e, const cmat& w, const rvec& q) {
  double rate_term = 0.0;
  for (int n = 0; n < cfg.n_links; ++n) {
    rate_term += q(n) * packet_departure(sinr(cfg, ch, w, n), cfg.mcs_b(n), cfg.mcs_c(n));
  }
  return cfg.control_v * grid_cost(total_power(cfg, w), e) - rate_term;
}

bool drift_bound_terms(double a, double b, double c) {
  const double lhs = std::pow(std::max(a - b, 0.0) + c, 2);
  const double rhs = a * a + b * b + c * c + 2.0 * a * (c - b);
  return lhs <= rhs + 1e-12 * std::max(1.0, rhs);
}

SystemConfig SystemConfig::defaults() {
  SystemConfig c;
  c.n_links = 3;
  c.n_antennas = 4;
  c.noise_power = rvec::Constant(3, 1e-3);
  c.pa_efficiency = 1.0;
  c.sp_base_power = 115.0;
  c.max_tx_power = 200.0;
  c.sinr_target = rvec::Constant(3, db_to_linear(2.0));
  c.mcs_b = rvec::Constant(3, 20.0);
  c.mcs_c = rvec::Constant(3, 0.451);
  c.pathloss_exp = 3.0;
  c.link_distance = rvec::Constant(3, 10.0);
  c.arrival_mean = rvec::Constant(3, 0.3);
  c.control_v = 0.001;
  c.sabf_tol = 2e-4;
  return c;
}

void SystemConfig::validate() const {
  auto need = [&](bool ok, const char* msg) {
    if (!ok) throw ConfigError(msg);
  };
  need(n_links >= 1, "n_links must be >= 1");
  need(n_antennas >= 1, "n_antennas must be >= 1");
  auto per_link = [&](const rvec& v, const char* name) {
    if (v.size() != n_links)
      throw ConfigError(std::string(name) + " must have one entry per link");
  };
  per_link(noise_power, "noise_power");
  per_link(sinr_target, "sinr_target");
  per_link(mcs_b, "mcs_b");
  per_link(mcs_c, "mcs_c");
  per_link(link_distance, "link_distance");
  per_link(arrival_mean, "arrival_mean");
  need((noise_power.array() > 0).all(), "noise_power must be positive");
  need(pa_efficiency > 0 && pa_efficiency <= 1.0, "pa_efficiency must be in (0,1]");
  need(sp_base_power > 0, "sp_base_power must be positive");
  need(max_tx_power > 0, "max_tx_power must be positive");
  need((sinr_target.array() >= 0).all(), "sinr_target must be nonnegative");
  need((mcs_c.array() > 0).all(), "mcs_c must be positive");
  need((link_distance.array() > 0).all(), "link_distance must be positive");
  need((arrival_mean.array() >= 0).all() && (arrival_mean.array() <= 1).all(),
       "arrival_mean must be in [0,1]");
  need(control_v > 0, "control_v must be positive");
  need(sabf_tol > 0, "sabf_tol must be positive");
  need(sabf_max_iter >= 1, "sabf_max_iter must be >= 1");
}

void ChannelState::validate(const SystemConfig& cfg) const {
  if (h.rows() != cfg.n_antennas || h.cols() != cfg.n_links)
    throw ConfigError("channel dimensions do not match config");
  if (!h.allFinite()) throw ConfigError("channel entries must be finite");
}

void EnergyPriceState::validate() const {
  if (!(sell_price > 0) || !(buy_price >= sell_price))
    throw ConfigError("prices must satisfy a_b >= a_s > 0");
  if (harvest < 0) throw ConfigError("harvest must be nonnegative");
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Solved: return "solved";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Fallback: return "fallback";
  }
  return "unknown";
}

}  // namespace hut
