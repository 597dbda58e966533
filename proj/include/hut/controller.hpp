#pragma once

#include <utility>

#include "hut/records.hpp"
#include "hut/stochastic.hpp"
#include "hut/types.hpp"

namespace hut {

/// Options steering the per-frame decision.
struct ControllerOptions {
  SolverKind solver = SolverKind::Sabf;
  /// Draw the SABF start point at random inside the feasible region instead
  /// of the deterministic scaled minimum-power point (the ZF warm start is
  /// used either way whenever ZF is feasible).
  bool sabf_random_init = false;
};

/// One frame of the dynamic loop: feasibility check, solver or random
/// fallback, then the realized rates/costs. The returned record's backlog
/// field is filled with the pre-decision queue; run_trajectory replaces it
/// with the post-update value.
std::pair<BeamformingSolution, FrameRecord> frame_decision(
    const SystemConfig& cfg, const ChannelState& ch, const EnergyPriceState& e,
    const QueueState& q, const ControllerOptions& opt, RngStream& fallback_rng);

/// Random directions scaled to radiate exactly P^max.
BeamformingSolution fallback_beamformers(const SystemConfig& cfg, RngStream& rng);

/// Elementwise queue recursion.
QueueState advance_queues(const QueueState& q, const rvec& u_dep, const rvec& u_arr);

}  // namespace hut
