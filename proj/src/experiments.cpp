#include "hut/experiments.hpp"

#include <atomic>
#include <functional>
#include <thread>

#include "hut/feasibility.hpp"
#include "hut/model.hpp"
#include "hut/sabf.hpp"
#include "hut/zfbf.hpp"

namespace hut {

const char* to_string(SolverKind k) {
  return k == SolverKind::Sabf ? "sabf" : "zfbf";
}

std::vector<FrameRecord> run_trajectory(const SystemConfig& cfg,
                                        const Schedule& schedule,
                                        const TrajectoryOptions& opt) {
  cfg.validate();
  schedule.validate();
  if (opt.frames < 1) throw ConfigError("frames must be >= 1");

  RngStream channel_rng(opt.seed, streams::kChannel);
  RngStream arrival_rng(opt.seed, streams::kArrivals);
  RngStream fallback_rng(opt.seed, streams::kFallback);

  ControllerOptions copt;
  copt.solver = opt.solver;
  copt.sabf_random_init = opt.sabf_random_init;

  QueueState q = QueueState::constant(cfg.n_links, opt.initial_backlog);
  std::vector<FrameRecord> out;
  out.reserve(opt.frames);
  for (long t = 0; t < opt.frames; ++t) {
    const ChannelState ch = draw_channel(cfg, channel_rng);
    const EnergyPriceState e = schedule_at(schedule, t);
    auto [sol, rec] = frame_decision(cfg, ch, e, q, copt, fallback_rng);
    const rvec arrivals = draw_arrivals(cfg, arrival_rng, opt.arrivals);
    q = advance_queues(q, rec.departure, arrivals);
    rec.frame = t;
    rec.backlog = q.q;
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<ConvergenceRecord> convergence_study(const SystemConfig& cfg,
                                                 const std::vector<std::uint64_t>& seeds,
                                                 double v, double q0) {
  SystemConfig run_cfg = cfg;
  run_cfg.control_v = v;
  run_cfg.validate();
  const EnergyPriceState e = schedule_at(Schedule::defaults(), 0);
  const rvec q = rvec::Constant(run_cfg.n_links, q0);

  std::vector<ConvergenceRecord> out;
  for (const std::uint64_t seed : seeds) {
    RngStream rng(seed, streams::kChannel);
    const ChannelState ch = draw_channel(run_cfg, rng);
    ConvergenceRecord rec;
    rec.seed = seed;
    const auto zf = zf_matrix(ch);
    if (!zf || !zf_feasible(run_cfg, *zf)) {
      out.push_back(rec);  // skipped: ZF infeasible for this realization
      continue;
    }
    const BeamformingSolution zsol = zfbf_solve(run_cfg, ch, e, q);
    if (zsol.status != SolveStatus::Solved) {
      out.push_back(rec);
      continue;
    }
    rec.feasible = true;
    rec.zfbf_iterations = zsol.iterations;
    const BeamformingSolution ssol = sabf_solve(run_cfg, ch, e, q, zsol.w);
    rec.sabf_warmstart = zsol.iterations;
    rec.sabf_sca = ssol.iterations;
    rec.sabf_total = rec.sabf_warmstart + rec.sabf_sca;
    out.push_back(rec);
  }
  return out;
}

TradeoffRecord summarize(const SystemConfig& cfg, const std::vector<FrameRecord>& traj,
                         SolverKind solver, std::uint64_t seed) {
  TradeoffRecord rec;
  rec.v = cfg.control_v;
  rec.sinr_target_db = linear_to_db(cfg.sinr_target(0));
  rec.solver = solver;
  rec.frames = static_cast<long>(traj.size());
  rec.seed = seed;
  rec.avg_backlog = rvec::Zero(cfg.n_links);
  double cost = 0.0;
  for (const auto& fr : traj) {
    cost += fr.grid_cost;
    rec.avg_backlog += fr.backlog;
  }
  rec.avg_grid_cost = cost / rec.frames;
  rec.avg_backlog /= static_cast<double>(rec.frames);
  rec.delay.resize(cfg.n_links);
  for (int n = 0; n < cfg.n_links; ++n) {
    rec.delay(n) = cfg.arrival_mean(n) > 0.0
                       ? rec.avg_backlog(n) / cfg.arrival_mean(n)
                       : 0.0;
  }
  return rec;
}

namespace {

std::vector<TradeoffRecord> run_grid(
    const std::vector<SystemConfig>& configs, const Schedule& schedule,
    const TrajectoryOptions& base, int max_threads) {
  const std::vector<SolverKind> solvers = {SolverKind::Sabf, SolverKind::Zfbf};
  struct Job {
    const SystemConfig* cfg;
    SolverKind solver;
  };
  std::vector<Job> jobs;
  for (const auto& cfg : configs)
    for (const auto solver : solvers) jobs.push_back({&cfg, solver});

  std::vector<TradeoffRecord> records(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      TrajectoryOptions opt = base;
      opt.solver = jobs[i].solver;
      const auto traj = run_trajectory(*jobs[i].cfg, schedule, opt);
      records[i] = summarize(*jobs[i].cfg, traj, jobs[i].solver, opt.seed);
    }
  };
  const int threads =
      std::max(1, std::min<int>(max_threads, static_cast<int>(jobs.size())));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return records;
}

}  // namespace

std::vector<TradeoffRecord> v_sweep(const SystemConfig& cfg, const Schedule& schedule,
                                    const std::vector<double>& v_grid,
                                    const TrajectoryOptions& base, int max_threads) {
  if (v_grid.empty()) throw ConfigError("sweep grid must not be empty");
  for (std::size_t i = 0; i < v_grid.size(); ++i) {
    if (v_grid[i] <= 0) throw ConfigError("sweep V values must be positive");
    if (i > 0 && v_grid[i] <= v_grid[i - 1])
      throw ConfigError("sweep grid must be strictly increasing");
  }
  std::vector<SystemConfig> configs;
  for (const double v : v_grid) {
    configs.push_back(cfg);
    configs.back().control_v = v;
  }
  return run_grid(configs, schedule, base, max_threads);
}

std::vector<TradeoffRecord> gamma_sweep(const SystemConfig& cfg,
                                        const Schedule& schedule,
                                        const std::vector<double>& gamma_grid_db,
                                        const TrajectoryOptions& base,
                                        int max_threads) {
  if (gamma_grid_db.empty()) throw ConfigError("sweep grid must not be empty");
  for (std::size_t i = 1; i < gamma_grid_db.size(); ++i)
    if (gamma_grid_db[i] <= gamma_grid_db[i - 1])
      throw ConfigError("sweep grid must be strictly increasing");
  std::vector<SystemConfig> configs;
  for (const double gdb : gamma_grid_db) {
    configs.push_back(cfg);
    configs.back().sinr_target = rvec::Constant(cfg.n_links, db_to_linear(gdb));
  }
  return run_grid(configs, schedule, base, max_threads);
}

}  // namespace hut
