#include "hut/controller.hpp"

#include <cmath>

#include "hut/feasibility.hpp"
#include "hut/model.hpp"
#include "hut/sabf.hpp"
#include "hut/zfbf.hpp"

namespace hut {

namespace {

cmat random_directions(const SystemConfig& cfg, RngStream& rng) {
  cmat w(cfg.n_antennas, cfg.n_links);
  for (int n = 0; n < cfg.n_links; ++n)
    for (int i = 0; i < cfg.n_antennas; ++i) w(i, n) = rng.complex_normal(1.0);
  return w;
}

/// Seeded random point in the feasible region of the per-frame problem;
/// falls back to the deterministic scaled minimum-power point when the
/// rejection sampling misses.
cmat random_feasible_start(const SystemConfig& cfg, const ChannelState& ch,
                           const cmat& min_power_w, double p_min, RngStream& rng) {
  const cmat base = min_power_w * std::sqrt(cfg.max_tx_power / p_min);
  for (int attempt = 0; attempt < 32; ++attempt) {
    cmat w = random_directions(cfg, rng);
    w *= std::sqrt(cfg.max_tx_power / w.squaredNorm());
    bool ok = true;
    for (int n = 0; n < cfg.n_links && ok; ++n)
      ok = sinr(cfg, ch, w, n) >= cfg.sinr_target(n);
    if (ok) return w;
  }
  return base;
}

}  // namespace

BeamformingSolution fallback_beamformers(const SystemConfig& cfg, RngStream& rng) {
  BeamformingSolution out;
  out.w = random_directions(cfg, rng);
  out.w *= std::sqrt(cfg.max_tx_power / out.w.squaredNorm());
  out.status = SolveStatus::Fallback;
  out.iterations = 0;
  return out;
}

QueueState advance_queues(const QueueState& q, const rvec& u_dep, const rvec& u_arr) {
  QueueState next;
  next.q.resize(q.q.size());
  for (int n = 0; n < q.q.size(); ++n)
    next.q(n) = queue_step(q.q(n), u_dep(n), u_arr(n));
  return next;
}

std::pair<BeamformingSolution, FrameRecord> frame_decision(
    const SystemConfig& cfg, const ChannelState& ch, const EnergyPriceState& e,
    const QueueState& q, const ControllerOptions& opt, RngStream& fallback_rng) {
  BeamformingSolution sol;
  sol.status = SolveStatus::Infeasible;
  int warmup_iters = 0;

  const auto zf = zf_matrix(ch);
  const bool zf_ok = zf.has_value() && zf_feasible(cfg, *zf);

  if (opt.solver == SolverKind::Zfbf) {
    if (zf_ok) sol = zfbf_solve(cfg, ch, e, q.q);
  } else {
    cmat start;
    bool have_start = false;
    if (zf_ok) {
      const BeamformingSolution warm = zfbf_solve(cfg, ch, e, q.q);
      if (warm.status == SolveStatus::Solved) {
        start = warm.w;
        warmup_iters = warm.iterations;
        have_start = true;
      }
    }
    if (!have_start) {
      const MinPowerResult mp = min_power_beamforming(cfg, ch);
      if (mp.within_cap(cfg)) {
        start = opt.sabf_random_init
                    ? random_feasible_start(cfg, ch, mp.w, mp.p_min, fallback_rng)
                    : cmat(mp.w * std::sqrt(cfg.max_tx_power / mp.p_min));
        have_start = true;
      }
    }
    if (have_start) {
      sol = sabf_solve(cfg, ch, e, q.q, start);
      sol.iterations += warmup_iters;
    }
  }

  if (sol.status == SolveStatus::Infeasible) {
    sol = fallback_beamformers(cfg, fallback_rng);
    sol.objective = gewpr_objective(cfg, ch, e, sol.w, q.q);
  }

  FrameRecord rec;
  rec.sinr = sinr_all(cfg, ch, sol.w);
  rec.departure.resize(cfg.n_links);
  for (int n = 0; n < cfg.n_links; ++n)
    rec.departure(n) = packet_departure(rec.sinr(n), cfg.mcs_b(n), cfg.mcs_c(n));
  rec.total_power = total_power(cfg, sol.w);
  rec.grid_cost = grid_cost(rec.total_power, e);
  rec.backlog = q.q;
  rec.status = sol.status;
  rec.iterations = sol.iterations;
  return {std::move(sol), rec};
}

}  // namespace hut
