#include "hut/feasibility.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "hut/embedding.hpp"

namespace hut {

MinPowerResult min_power_beamforming(const SystemConfig& cfg, const ChannelState& ch) {
  cfg.validate();
  ch.validate(cfg);
  const int nl = cfg.n_links;
  const int nt = cfg.n_antennas;

  conic::ProblemBuilder pb;
  WLayout lay{0, nt};
  for (int i = 0; i < lay.size(nl); ++i) pb.add_var(0.0);
  const int r = pb.add_var(1.0);  // r >= ||stacked w||

  std::vector<conic::LinExpr> norm_rows;
  norm_rows.emplace_back(r, 1.0);
  append_w_entries(norm_rows, lay, nl);
  pb.second_order(norm_rows);

  for (int n = 0; n < nl; ++n) {
    if (cfg.sinr_target(n) <= 0.0) continue;  // trivially met
    // Re(h_n^H w_n)/sqrt(Gamma_n) >= ||[sigma_n, h_n^H w_m (m != n)]||,
    // Im(h_n^H w_n) = 0
    const cvec hn = ch.h.col(n);
    std::vector<conic::LinExpr> rows;
    rows.push_back(re_inner(lay, hn, n, 1.0 / std::sqrt(cfg.sinr_target(n))));
    rows.emplace_back(std::sqrt(cfg.noise_power(n)));
    for (int m = 0; m < nl; ++m) {
      if (m == n) continue;
      rows.push_back(re_inner(lay, hn, m));
      rows.push_back(im_inner(lay, hn, m));
    }
    pb.second_order(rows);
    pb.equality(im_inner(lay, hn, n));
  }

  conic::SolverOptions opt;
  opt.gap_tol = 1e-8;
  opt.feas_tol = 1e-8;
  const conic::ConicSolution sol = conic::solve(pb.build(), opt);

  MinPowerResult out;
  out.status = sol.status;
  out.iterations = sol.iterations;
  if (sol.status == conic::Status::Optimal) {
    out.w = extract_w(lay, sol.x, nl);
    out.p_min = out.w.squaredNorm();
  }
  return out;
}

DualityResult duality_fixed_point(const SystemConfig& cfg, const ChannelState& ch,
                                  double tol, int max_iter) {
  cfg.validate();
  ch.validate(cfg);
  const int nl = cfg.n_links;
  const int nt = cfg.n_antennas;

  // noise-normalized channels: unit-noise problem with identical beamformers
  cmat hn(nt, nl);
  for (int n = 0; n < nl; ++n) hn.col(n) = ch.h.col(n) / std::sqrt(cfg.noise_power(n));

  DualityResult out;
  rvec lambda = rvec::Zero(nl);
  const cmat eye = cmat::Identity(nt, nt);
  int it = 0;
  for (; it < max_iter; ++it) {
    cmat cov = eye;
    for (int m = 0; m < nl; ++m) cov += lambda(m) * hn.col(m) * hn.col(m).adjoint();
    const Eigen::LLT<cmat> llt(cov);
    double change = 0.0;
    rvec next(nl);
    for (int n = 0; n < nl; ++n) {
      if (cfg.sinr_target(n) <= 0.0) {
        next(n) = 0.0;
        continue;
      }
      // uplink quadratic form with user n's own term removed from the
      // covariance, via Sherman-Morrison on the full inverse
      const cvec sol = llt.solve(hn.col(n));
      const double full = hn.col(n).dot(sol).real();
      const double own = full / (1.0 - lambda(n) * full);
      next(n) = cfg.sinr_target(n) / own;
      change = std::max(change, std::abs(next(n) - lambda(n)) / std::max(1e-300, next(n)));
    }
    lambda = next;
    if (lambda.maxCoeff() > 1e14) break;  // diverging: targets unattainable
    if (change <= tol) {
      ++it;
      out.converged = true;
      break;
    }
  }
  out.iterations = it;
  if (!out.converged) return out;

  // MMSE directions at the fixed point
  cmat cov = eye;
  for (int m = 0; m < nl; ++m) cov += lambda(m) * hn.col(m) * hn.col(m).adjoint();
  const Eigen::LLT<cmat> llt(cov);
  cmat dirs(nt, nl);
  for (int n = 0; n < nl; ++n) {
    if (cfg.sinr_target(n) <= 0.0) {
      dirs.col(n).setZero();
      continue;
    }
    const cvec u = llt.solve(hn.col(n));
    dirs.col(n) = u / u.norm();
  }

  // downlink powers: SINR_n(p) = Gamma_n as an N x N linear system
  Eigen::MatrixXd coup = Eigen::MatrixXd::Zero(nl, nl);
  rvec rhs = rvec::Zero(nl);
  for (int n = 0; n < nl; ++n) {
    if (cfg.sinr_target(n) <= 0.0) {
      coup(n, n) = 1.0;
      rhs(n) = 0.0;
      continue;
    }
    for (int m = 0; m < nl; ++m) {
      const double gain = std::norm(hn.col(n).dot(dirs.col(m)));
      coup(n, m) = (m == n) ? gain / cfg.sinr_target(n) : -gain;
    }
    rhs(n) = 1.0;
  }
  const rvec p = coup.partialPivLu().solve(rhs);
  if ((p.array() < -1e-12).any()) {
    out.converged = false;
    return out;
  }

  out.w.resize(nt, nl);
  for (int n = 0; n < nl; ++n) out.w.col(n) = std::sqrt(std::max(p(n), 0.0)) * dirs.col(n);
  out.p_min = out.w.squaredNorm();
  return out;
}

bool zf_feasible(const SystemConfig& cfg, const ZfDirections& zf) {
  double lhs = 0.0;
  for (int n = 0; n < cfg.n_links; ++n)
    lhs += cfg.sinr_target(n) * cfg.noise_power(n) * zf.w.col(n).squaredNorm();
  return lhs <= cfg.max_tx_power;
}

}  // namespace hut
