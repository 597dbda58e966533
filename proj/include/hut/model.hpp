#pragma once

#include "hut/types.hpp"

namespace hut {

/// Received SINR of link n: |h_n^H w_n|^2 / (sum_{m!=n} |h_n^H w_m|^2 + sigma_n^2).
double sinr(const SystemConfig& cfg, const ChannelState& ch, const cmat& w, int n);

/// All-link SINR vector.
rvec sinr_all(const SystemConfig& cfg, const ChannelState& ch, const cmat& w);

/// P_sp,b * (0.87 + 0.1 N_T + 0.03 N_T^2) [mW].
double signal_processing_power(const SystemConfig& cfg);

/// (1/psi) * sum_n ||w_n||^2 + P_sp [mW].
double total_power(const SystemConfig& cfg, const cmat& w);
double total_power(const SystemConfig& cfg, double sum_tx_power);

/// a_b [p - E]^+ - a_s [E - p]^+  [cents].
double grid_cost(double p_tot, const EnergyPriceState& e);

/// (a_b - a_s)[p - E]^+ + a_s (p - E); equals grid_cost everywhere, convex form.
double grid_cost_convex(double p_tot, const EnergyPriceState& e);

/// Sigmoid packet departure rate 1/(1 + exp(-c (10 log10 sinr - b))).
/// sinr <= 0 returns the limit value 0 (a nulled user delivers nothing).
double packet_departure(double sinr_linear, double b_db, double c_per_db);

/// One queue recursion step: [q - u_dep]^+ + u_arr.
double queue_step(double q, double u_dep, double u_arr);

/// V * G(total_power(w)) - sum_n q_n * U_n(sinr_n).
double gewpr_objective(const SystemConfig& cfg, const ChannelState& ch,
                       const EnergyPriceState& e, const cmat& w, const rvec& q);

/// Truth of ([a-b]^+ + c)^2 <= a^2 + b^2 + c^2 + 2a(c-b) for a>=0, b,c in [0,1].
/// Exercised by the test suite only; the library never relies on it.
bool drift_bound_terms(double a, double b, double c);

}  // namespace hut
