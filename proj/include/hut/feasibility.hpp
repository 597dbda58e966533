#pragma once

#include "hut/conic.hpp"
#include "hut/types.hpp"
#include "hut/zfbf.hpp"

namespace hut {

struct MinPowerResult {
  cmat w;              // meets every SINR target with equality when solved
  double p_min = 0.0;  // sum ||w_n||^2 at the optimum [mW]
  conic::Status status = conic::Status::MaxIter;
  int iterations = 0;

  bool solved() const { return status == conic::Status::Optimal; }
  /// Feasibility of the per-frame problem: targets reachable within the cap.
  bool within_cap(const SystemConfig& cfg, double tol = 1e-7) const {
    return solved() && p_min <= cfg.max_tx_power * (1.0 + tol);
  }
};

/// Minimum total transmit power meeting all SINR targets (no power cap);
/// second-order cone program, the production path.
MinPowerResult min_power_beamforming(const SystemConfig& cfg, const ChannelState& ch);

struct DualityResult {
  cmat w;
  double p_min = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Independent oracle for min_power_beamforming: fixed point of the uplink
/// power iteration lambda_n <- Gamma_n / (h_n^H (I + sum lambda_m h_m h_m^H)^{-1} h_n)
/// on noise-normalized channels, MMSE directions, downlink powers from the
/// N x N system that makes every SINR meet its target exactly.
DualityResult duality_fixed_point(const SystemConfig& cfg, const ChannelState& ch,
                                  double tol = 1e-8, int max_iter = 500);

/// Linear feasibility of the ZF problem: the minimal point p_n = Gamma_n
/// sigma_n^2 is optimal, so the check is a single weighted sum against P^max.
bool zf_feasible(const SystemConfig& cfg, const ZfDirections& zf);

}  // namespace hut
