#pragma once

#include <vector>

#include "hut/conic.hpp"
#include "hut/embedding.hpp"
#include "hut/types.hpp"

namespace hut {

/// Iterate of the successive-approximation loop. alpha are linear SINR
/// surrogates, beta interference-plus-noise amplitude surrogates; gamma and
/// varpi are the parametric weights with varpi = q .* gamma by construction.
/// objective_trace records V*G(w) - sum_n q_n sigmoid(alpha_n) per iterate,
/// the quantity the convexified solves decrease monotonically.
struct SabfState {
  cmat w;
  rvec alpha;
  rvec beta;
  rvec gamma;
  rvec varpi;
  int iteration = 0;
  std::vector<double> objective_trace;
};

/// Linear lower bound of the quadratic-over-linear SINR certificate
/// |h^H w|^2 / alpha around (w_ref, alpha_ref):
///   2 Re(w_ref^H h h^H w)/alpha_ref - (|h^H w_ref|/alpha_ref)^2 alpha.
double psi_linearization(const cvec& h, const cvec& w_ref, double alpha_ref,
                         const cvec& w, double alpha);

/// Initial state at a feasible beamformer: alpha = realized SINR,
/// beta = interference-plus-noise amplitude, (gamma, varpi) from alpha.
SabfState sabf_init(const SystemConfig& cfg, const ChannelState& ch,
                    const EnergyPriceState& e, const rvec& q, const cmat& w_init);

/// Convexified per-iteration problem plus the variable layout needed to read
/// a solution back. Users with varpi_n = 0 carry no alpha/t variables (their
/// sigmoid term vanishes; only the SINR-target constraints remain).
struct SabfSubproblem {
  conic::ConicProblem problem;
  WLayout w_layout;
  std::vector<int> alpha_var;  // -1 when absent
  std::vector<int> beta_var;   // -1 when the target is zero and user inactive
  std::vector<int> t_var;      // -1 when absent
  int r_var = -1;              // epigraph of sum ||w_n||^2
  int g_var = -1;              // epigraph of the grid cost
};

SabfSubproblem build_subproblem_detailed(const SystemConfig& cfg,
                                         const ChannelState& ch,
                                         const EnergyPriceState& e, const rvec& q,
                                         const SabfState& state);

conic::ConicProblem build_subproblem(const SystemConfig& cfg, const ChannelState& ch,
                                     const EnergyPriceState& e, const rvec& q,
                                     const SabfState& state);

/// Successive convex approximation from a feasible start (ZF warm start or
/// scaled minimum-power point). Monotone in the recorded objective; returns
/// the best iterate with status Fallback when an inner solve fails.
BeamformingSolution sabf_solve(const SystemConfig& cfg, const ChannelState& ch,
                               const EnergyPriceState& e, const rvec& q,
                               const cmat& w_init, SabfState* state_out = nullptr);

/// Empirical KKT residual of the sigmoid-rate problem at a converged state:
/// stationarity in w under best-fit cap/SINR multipliers (the alpha and gamma
/// blocks vanish identically by the parametric construction), primal
/// violations, and complementary-slackness products. Test instrumentation.
double kkt_residual(const SystemConfig& cfg, const ChannelState& ch,
                    const EnergyPriceState& e, const rvec& q, const SabfState& state);

}  // namespace hut
