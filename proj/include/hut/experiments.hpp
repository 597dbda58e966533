#pragma once

#include <cstdint>
#include <vector>

#include "hut/controller.hpp"
#include "hut/records.hpp"
#include "hut/stochastic.hpp"

namespace hut {

struct TrajectoryOptions {
  SolverKind solver = SolverKind::Sabf;
  std::uint64_t seed = 1;
  long frames = 4000;
  double initial_backlog = 0.0;
  ArrivalModel arrivals = ArrivalModel::Bernoulli;
  bool sabf_random_init = false;
};

/// Sequential frame loop: channel/price observation, per-frame decision,
/// queue update. Channel, arrival and fallback draws come from separate
/// streams of the same seed, so sweeps over V or Gamma see identical
/// randomness (common random numbers).
std::vector<FrameRecord> run_trajectory(const SystemConfig& cfg,
                                        const Schedule& schedule,
                                        const TrajectoryOptions& opt);

/// Per-frame iteration counts over independent channel realizations at a
/// fixed backlog level (one decision per realization, no queue dynamics).
std::vector<ConvergenceRecord> convergence_study(const SystemConfig& cfg,
                                                 const std::vector<std::uint64_t>& seeds,
                                                 double v, double q0);

/// Aggregate a trajectory into its tradeoff summary.
TradeoffRecord summarize(const SystemConfig& cfg, const std::vector<FrameRecord>& traj,
                         SolverKind solver, std::uint64_t seed);

/// One trajectory per (V, solver) pair with common random numbers.
/// Records are ordered by V, SABF before ZFBF. max_threads bounds the number
/// of concurrently running trajectories (<= 1 means sequential).
std::vector<TradeoffRecord> v_sweep(const SystemConfig& cfg, const Schedule& schedule,
                                    const std::vector<double>& v_grid,
                                    const TrajectoryOptions& base, int max_threads = 1);

/// Same layout over instantaneous SINR requirements (dB, applied to every
/// link); V stays at cfg.control_v.
std::vector<TradeoffRecord> gamma_sweep(const SystemConfig& cfg,
                                        const Schedule& schedule,
                                        const std::vector<double>& gamma_grid_db,
                                        const TrajectoryOptions& base,
                                        int max_threads = 1);

}  // namespace hut
