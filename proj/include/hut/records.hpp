#pragma once

#include <cstdint>

#include "hut/types.hpp"

namespace hut {

enum class SolverKind { Sabf, Zfbf };

const char* to_string(SolverKind k);

/// One simulated frame. backlog holds the post-update queue levels, so the
/// final record carries q(T) for the stability checks.
struct FrameRecord {
  long frame = 0;
  double grid_cost = 0.0;    // G(t) [cents]
  double total_power = 0.0;  // P_tot(t) [mW]
  rvec sinr;
  rvec departure;  // U_n(t)
  rvec backlog;    // q_n(t+1)
  SolveStatus status = SolveStatus::Fallback;
  int iterations = 0;
};

/// One sweep point, aggregated over a full trajectory.
struct TradeoffRecord {
  double v = 0.0;
  double sinr_target_db = 0.0;  // varied in the Gamma sweep
  SolverKind solver = SolverKind::Sabf;
  double avg_grid_cost = 0.0;  // cents per frame
  rvec avg_backlog;            // per link
  rvec delay;                  // backlog / arrival mean (frames), Little's law
  long frames = 0;
  std::uint64_t seed = 0;
};

/// One channel realization of the convergence study. The SABF count follows
/// the warm-start accounting: total = ZFBF warm-start iterations + SCA solves.
struct ConvergenceRecord {
  std::uint64_t seed = 0;
  bool feasible = false;
  int zfbf_iterations = 0;
  int sabf_warmstart = 0;
  int sabf_sca = 0;
  int sabf_total = 0;
};

}  // namespace hut
