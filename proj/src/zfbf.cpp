#include "hut/zfbf.hpp"

#include <Eigen/SVD>
#include <cmath>

#include "hut/feasibility.hpp"
#include "hut/model.hpp"

namespace hut {

namespace {

// Objective coefficients a_n with exp(-c(10 log10(p/sigma^2) - b)) written as
// a_n p^{-kappa_n}, a_n = varpi gamma e^{c b} sigma^{2 kappa}.
rvec power_coefficients(const SystemConfig& cfg, const rvec& gamma, const rvec& varpi) {
  rvec a(cfg.n_links);
  for (int n = 0; n < cfg.n_links; ++n) {
    const double k = kappa(cfg.mcs_c(n));
    a(n) = varpi(n) * gamma(n) * std::exp(cfg.mcs_c(n) * cfg.mcs_b(n)) *
           std::pow(cfg.noise_power(n), k);
  }
  return a;
}

double grid_tilde(const SystemConfig& cfg, const EnergyPriceState& e, double radiated) {
  return grid_cost_convex(total_power(cfg, radiated), e);
}

}  // namespace

std::optional<ZfDirections> zf_matrix(const ChannelState& ch, double rank_tol) {
  const int nt = static_cast<int>(ch.h.rows());
  const int nl = static_cast<int>(ch.h.cols());
  if (nt < nl) return std::nullopt;
  Eigen::JacobiSVD<cmat> svd(ch.h, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv(0) <= 0.0 || sv(nl - 1) < rank_tol * sv(0)) return std::nullopt;
  // (H^H)^dagger = U diag(1/s) V^H
  ZfDirections zf;
  zf.w = svd.matrixU() * sv.cwiseInverse().asDiagonal() * svd.matrixV().adjoint();
  return zf;
}

double kappa(double c_per_db) { return 10.0 * c_per_db / std::log(10.0); }

double zf_power_objective(const SystemConfig& cfg, const EnergyPriceState& e,
                          const cmat& w_zf, const rvec& gamma, const rvec& varpi,
                          const rvec& p) {
  double obj = 0.0;
  double radiated = 0.0;
  for (int n = 0; n < cfg.n_links; ++n) {
    obj += varpi(n) * gamma(n) *
           std::exp(-cfg.mcs_c(n) *
                    (10.0 * std::log10(p(n) / cfg.noise_power(n)) - cfg.mcs_b(n)));
    radiated += p(n) * w_zf.col(n).squaredNorm();
  }
  return obj + cfg.control_v * grid_tilde(cfg, e, radiated);
}

ZfPowerResult zf_power_subproblem(const SystemConfig& cfg, const EnergyPriceState& e,
                                  const cmat& w_zf, const rvec& gamma,
                                  const rvec& varpi) {
  const int nl = cfg.n_links;

  // Work in SNR units x_n = p_n / sigma_n^2: the exp term becomes
  // varpi gamma e^{c b} x^{-kappa} with epigraph values bounded by
  // Gamma^{-kappa}, which keeps the conic variables at sane magnitudes.
  conic::ProblemBuilder pb;
  std::vector<int> xvar(nl);
  for (int n = 0; n < nl; ++n) xvar[n] = pb.add_var(0.0);
  const int g = pb.add_var(cfg.control_v);

  conic::LinExpr radiated;  // sum p_n ||w_zf,n||^2 in mW
  for (int n = 0; n < nl; ++n)
    radiated.add(xvar[n], cfg.noise_power(n) * w_zf.col(n).squaredNorm());

  // cap and per-link floors
  conic::LinExpr cap(cfg.max_tx_power);
  for (const auto& [v, coef] : radiated.terms) cap.add(v, -coef);
  pb.nonneg(cap);
  for (int n = 0; n < nl; ++n)
    pb.nonneg(conic::LinExpr(-cfg.sinr_target(n)).add(xvar[n], 1.0));

  // epigraph of the piecewise-linear grid cost: g >= price * (P_tot - E)
  const double base = signal_processing_power(cfg) - e.harvest;
  for (double price : {e.buy_price, e.sell_price}) {
    conic::LinExpr cut(-price * base);
    cut.add(g, 1.0);
    for (const auto& [v, coef] : radiated.terms)
      cut.add(v, -price * coef / cfg.pa_efficiency);
    pb.nonneg(cut);
  }

  // t_n >= x_n^{-kappa_n} via (t, x, 1) in the power cone
  for (int n = 0; n < nl; ++n) {
    const double obj = varpi(n) * gamma(n) * std::exp(cfg.mcs_c(n) * cfg.mcs_b(n));
    if (obj <= 0.0) continue;
    const double k = kappa(cfg.mcs_c(n));
    const int t = pb.add_var(obj);
    pb.power3(conic::LinExpr(t, 1.0), conic::LinExpr(xvar[n], 1.0), conic::LinExpr(1.0),
              1.0 / (1.0 + k));
  }

  conic::SolverOptions opt;
  opt.gap_tol = 1e-7;
  opt.feas_tol = 1e-6;
  const conic::ConicSolution sol = conic::solve(pb.build(), opt);

  ZfPowerResult out;
  out.status = sol.status;
  if (sol.status == conic::Status::Optimal) {
    out.p.resize(nl);
    for (int n = 0; n < nl; ++n)
      out.p(n) = cfg.noise_power(n) * std::max(sol.x(xvar[n]), cfg.sinr_target(n));
    out.objective = zf_power_objective(cfg, e, w_zf, gamma, varpi, out.p);
  }
  return out;
}

ZfPowerResult zf_power_oracle(const SystemConfig& cfg, const EnergyPriceState& e,
                              const cmat& w_zf, const rvec& gamma, const rvec& varpi) {
  const int nl = cfg.n_links;
  const rvec a = power_coefficients(cfg, gamma, varpi);
  rvec cw(nl), lo(nl), kap(nl);
  for (int n = 0; n < nl; ++n) {
    cw(n) = w_zf.col(n).squaredNorm();
    lo(n) = cfg.sinr_target(n) * cfg.noise_power(n);
    kap(n) = kappa(cfg.mcs_c(n));
  }
  const double r_lo = lo.dot(cw);
  const double r_hi = cfg.max_tx_power;

  ZfPowerResult out;
  if (r_lo > r_hi * (1.0 + 1e-12)) {
    out.status = conic::Status::Infeasible;
    return out;
  }

  // water-filling on the cap multiplier: p_n(mu) = max(lo, (kappa a / (mu c))^{1/(1+kappa)})
  auto powers_at = [&](double mu) {
    rvec p = lo;
    for (int n = 0; n < nl; ++n) {
      if (a(n) <= 0.0) continue;
      p(n) = std::max(lo(n), std::pow(kap(n) * a(n) / (mu * cw(n)), 1.0 / (1.0 + kap(n))));
    }
    return p;
  };
  auto fill_to = [&](double r) {
    if ((a.array() <= 0.0).all() || r <= r_lo) return rvec(lo);
    double lo_mu = -60, hi_mu = 60;  // log10 scale
    for (int i = 0; i < 200; ++i) {
      const double mid = 0.5 * (lo_mu + hi_mu);
      (powers_at(std::pow(10.0, mid)).dot(cw) > r ? lo_mu : hi_mu) = mid;
    }
    return powers_at(std::pow(10.0, 0.5 * (lo_mu + hi_mu)));
  };
  auto total_cost = [&](double r) {
    const rvec p = fill_to(r);
    double obj = cfg.control_v * grid_tilde(cfg, e, p.dot(cw));
    for (int n = 0; n < nl; ++n) obj += a(n) * std::pow(p(n), -kap(n));
    return obj;
  };

  // golden-section over the radiated power (convex with a kink at the harvest)
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x0 = r_lo, x3 = r_hi;
  double x1 = x3 - invphi * (x3 - x0);
  double x2 = x0 + invphi * (x3 - x0);
  double f1 = total_cost(x1), f2 = total_cost(x2);
  for (int i = 0; i < 120 && (x3 - x0) > 1e-12 * std::max(1.0, r_hi); ++i) {
    if (f1 < f2) {
      x3 = x2;
      x2 = x1;
      f2 = f1;
      x1 = x3 - invphi * (x3 - x0);
      f1 = total_cost(x1);
    } else {
      x0 = x1;
      x1 = x2;
      f1 = f2;
      x2 = x0 + invphi * (x3 - x0);
      f2 = total_cost(x2);
    }
  }
  const double r_best = 0.5 * (x1 + x2);
  out.p = fill_to(r_best);
  out.objective = zf_power_objective(cfg, e, w_zf, gamma, varpi, out.p);
  out.status = conic::Status::Optimal;
  return out;
}

BeamformingSolution zfbf_solve(const SystemConfig& cfg, const ChannelState& ch,
                               const EnergyPriceState& e, const rvec& q,
                               ZfState* state_out) {
  cfg.validate();
  ch.validate(cfg);
  e.validate();
  const int nl = cfg.n_links;

  BeamformingSolution out;
  out.status = SolveStatus::Infeasible;
  const auto zf = zf_matrix(ch);
  if (!zf || !zf_feasible(cfg, *zf)) return out;

  ZfState st;
  st.w_zf = zf->w;
  st.p.resize(nl);
  for (int n = 0; n < nl; ++n) st.p(n) = cfg.sinr_target(n) * cfg.noise_power(n);

  auto refresh = [&](const rvec& p) {
    rvec gamma(nl);
    for (int n = 0; n < nl; ++n)
      gamma(n) = packet_departure(p(n) / cfg.noise_power(n), cfg.mcs_b(n), cfg.mcs_c(n));
    return gamma;
  };
  st.gamma = refresh(st.p);
  st.varpi = q.cwiseProduct(st.gamma);

  auto rel_change = [](const rvec& now, const rvec& prev) {
    const double base = prev.norm();
    if (base == 0.0) return now.norm() == 0.0 ? 0.0 : 1.0;
    return (now - prev).norm() / base;
  };

  int tau = 0;
  while (tau < cfg.sabf_max_iter) {
    ++tau;
    const ZfPowerResult step = zf_power_subproblem(cfg, e, st.w_zf, st.gamma, st.varpi);
    if (step.status != conic::Status::Optimal) {
      out.status = SolveStatus::Infeasible;
      out.iterations = tau;
      if (state_out) *state_out = st;
      return out;
    }
    st.p = step.p;
    const rvec gamma_next = refresh(st.p);
    const rvec varpi_next = q.cwiseProduct(gamma_next);
    const double dg = rel_change(gamma_next, st.gamma);
    const double dv = rel_change(varpi_next, st.varpi);
    st.gamma = gamma_next;
    st.varpi = varpi_next;
    st.iteration = tau;
    if (dg <= cfg.sabf_tol && dv <= cfg.sabf_tol) break;
  }

  out.w.resize(cfg.n_antennas, nl);
  for (int n = 0; n < nl; ++n) out.w.col(n) = std::sqrt(st.p(n)) * st.w_zf.col(n);
  out.status = SolveStatus::Solved;
  out.iterations = tau;
  out.objective = gewpr_objective(cfg, ch, e, out.w, q);
  if (state_out) *state_out = st;
  return out;
}

}  // namespace hut
