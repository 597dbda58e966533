#pragma once

#include <optional>

#include "hut/conic.hpp"
#include "hut/types.hpp"

namespace hut {

/// Zero-forcing directions: column n is w_n,zf with H^H W_zf = I.
struct ZfDirections {
  cmat w;  // N_T x N
};

/// Pseudo-inverse directions H (H^H H)^{-1} via a rank-revealing SVD.
/// Returns nullopt when H is numerically rank deficient (singular values
/// below rank_tol relative to the largest), in which case the caller falls
/// back to random beamforming for the frame.
std::optional<ZfDirections> zf_matrix(const ChannelState& ch, double rank_tol = 1e-10);

/// kappa = 10 c / ln 10, the exponent in
/// exp(-c (10 log10 x - b)) = e^{c b} x^{-kappa}.
double kappa(double c_per_db);

/// State of the parametric power-allocation loop.
struct ZfState {
  cmat w_zf;   // fixed directions
  rvec p;      // per-link powers [mW]
  rvec gamma;  // sigmoid values at current powers
  rvec varpi;  // q-weighted sigmoid values (= q .* gamma)
  int iteration = 0;
};

struct ZfPowerResult {
  rvec p;
  double objective = 0.0;  // sum_n a_n (p_n/sigma_n^2)^{-kappa_n} e^{c b} varpi gamma + V*Gtilde
  conic::Status status = conic::Status::MaxIter;
};

/// Convex power allocation for fixed (gamma, varpi): minimize
/// sum_n varpi_n gamma_n exp(-c_n (10 log10(p_n/sigma_n^2) - b_n)) + V*Gtilde(p)
/// subject to sum_n p_n ||w_zf,n||^2 <= P^max and p_n >= Gamma_n sigma_n^2.
ZfPowerResult zf_power_subproblem(const SystemConfig& cfg, const EnergyPriceState& e,
                                  const cmat& w_zf, const rvec& gamma,
                                  const rvec& varpi);

/// Reference path for the same subproblem: 1-D convex search over the radiated
/// power with an inner water-filling bisection; shares no code with the conic
/// route and exists to cross-check it.
ZfPowerResult zf_power_oracle(const SystemConfig& cfg, const EnergyPriceState& e,
                              const cmat& w_zf, const rvec& gamma, const rvec& varpi);

/// Objective value of the power subproblem at p (exact sigmoid-exponential form).
double zf_power_objective(const SystemConfig& cfg, const EnergyPriceState& e,
                          const cmat& w_zf, const rvec& gamma, const rvec& varpi,
                          const rvec& p);

/// Full ZFBF loop: minimal-power start, alternate power allocation and
/// (gamma, varpi) refresh until both parameter vectors settle.
BeamformingSolution zfbf_solve(const SystemConfig& cfg, const ChannelState& ch,
                               const EnergyPriceState& e, const rvec& q,
                               ZfState* state_out = nullptr);

}  // namespace hut
