#include "hut/sabf.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "hut/model.hpp"
#include "hut/zfbf.hpp"

namespace hut {

namespace {

// Objective weight of user n's sigmoid term, in the x^{-kappa} form
// varpi gamma exp(-c(10 log10 alpha - b)) = [varpi gamma e^{c b}] alpha^{-kappa}.
double term_weight(const SystemConfig& cfg, const SabfState& st, int n) {
  return st.varpi(n) * st.gamma(n) * std::exp(cfg.mcs_c(n) * cfg.mcs_b(n));
}

// V*G(w) - sum q_n sigmoid(alpha_n): the surrogate objective the parametric
// solves majorize; equals the GEWPR objective when alpha = SINR(w).
double surrogate_objective(const SystemConfig& cfg, const EnergyPriceState& e,
                           const rvec& q, const cmat& w, const rvec& alpha) {
  double val = cfg.control_v * grid_cost(total_power(cfg, w), e);
  for (int n = 0; n < cfg.n_links; ++n)
    val -= q(n) * packet_departure(alpha(n), cfg.mcs_b(n), cfg.mcs_c(n));
  return val;
}

// Conic objective VG + sum a_n alpha_n^{-kappa_n} with the current weights.
double parametric_objective(const SystemConfig& cfg, const EnergyPriceState& e,
                            const SabfState& st, const cmat& w, const rvec& alpha) {
  double val = cfg.control_v * grid_cost(total_power(cfg, w), e);
  for (int n = 0; n < cfg.n_links; ++n) {
    const double a = term_weight(cfg, st, n);
    if (a > 0.0) val += a * std::pow(alpha(n), -kappa(cfg.mcs_c(n)));
  }
  return val;
}

rvec interference_amplitude(const SystemConfig& cfg, const ChannelState& ch,
                            const cmat& w) {
  rvec beta(cfg.n_links);
  for (int n = 0; n < cfg.n_links; ++n) {
    double acc = cfg.noise_power(n);
    for (int m = 0; m < cfg.n_links; ++m) {
      if (m == n) continue;
      acc += std::norm(ch.h.col(n).dot(w.col(m)));
    }
    beta(n) = std::sqrt(acc);
  }
  return beta;
}

// rotate each column so h_n^H w_n is real nonnegative
cmat phase_align(const ChannelState& ch, cmat w) {
  for (int n = 0; n < w.cols(); ++n) {
    const cplx inner = ch.h.col(n).dot(w.col(n));
    const double mag = std::abs(inner);
    if (mag > 0) w.col(n) *= std::conj(inner) / mag;
  }
  return w;
}

}  // namespace

double psi_linearization(const cvec& h, const cvec& w_ref, double alpha_ref,
                         const cvec& w, double alpha) {
  const cplx ref_inner = h.dot(w_ref);  // h^H w_ref
  const cplx cur_inner = h.dot(w);
  const double cross = 2.0 * (std::conj(ref_inner) * cur_inner).real();
  const double slope = std::norm(ref_inner) / (alpha_ref * alpha_ref);
  return cross / alpha_ref - slope * alpha;
}

SabfState sabf_init(const SystemConfig& cfg, const ChannelState& ch,
                    const EnergyPriceState& e, const rvec& q, const cmat& w_init) {
  SabfState st;
  st.w = phase_align(ch, w_init);
  st.alpha = sinr_all(cfg, ch, st.w);
  st.beta = interference_amplitude(cfg, ch, st.w);
  st.gamma.resize(cfg.n_links);
  for (int n = 0; n < cfg.n_links; ++n)
    st.gamma(n) = packet_departure(st.alpha(n), cfg.mcs_b(n), cfg.mcs_c(n));
  st.varpi = q.cwiseProduct(st.gamma);
  st.iteration = 0;
  st.objective_trace = {surrogate_objective(cfg, e, q, st.w, st.alpha)};
  return st;
}

SabfSubproblem build_subproblem_detailed(const SystemConfig& cfg,
                                         const ChannelState& ch,
                                         const EnergyPriceState& e, const rvec& q,
                                         const SabfState& state) {
  (void)q;
  const int nl = cfg.n_links;
  const int nt = cfg.n_antennas;

  SabfSubproblem sp;
  conic::ProblemBuilder pb;
  sp.w_layout = WLayout{0, nt};
  for (int i = 0; i < sp.w_layout.size(nl); ++i) pb.add_var(0.0);
  sp.alpha_var.assign(nl, -1);
  sp.beta_var.assign(nl, -1);
  sp.t_var.assign(nl, -1);
  sp.r_var = pb.add_var(0.0);
  sp.g_var = pb.add_var(cfg.control_v);

  // r >= sum ||w_n||^2 through || (2w, r-1) || <= r+1
  {
    std::vector<conic::LinExpr> rows;
    rows.push_back(conic::LinExpr(1.0).add(sp.r_var, 1.0));
    append_w_entries(rows, sp.w_layout, nl, 2.0);
    rows.push_back(conic::LinExpr(-1.0).add(sp.r_var, 1.0));
    pb.second_order(rows);
  }
  // transmit power cap
  pb.nonneg(conic::LinExpr(cfg.max_tx_power).add(sp.r_var, -1.0));
  // grid-cost epigraph cuts g >= price * (r/psi + P_sp - E)
  const double base = signal_processing_power(cfg) - e.harvest;
  for (double price : {e.buy_price, e.sell_price}) {
    pb.nonneg(conic::LinExpr(-price * base)
                  .add(sp.g_var, 1.0)
                  .add(sp.r_var, -price / cfg.pa_efficiency));
  }

  for (int n = 0; n < nl; ++n) {
    const cvec hn = ch.h.col(n);
    const double weight = term_weight(cfg, state, n);
    const bool active = weight > 0.0 && state.alpha(n) > 0.0;
    if (!active && cfg.sinr_target(n) <= 0.0) continue;  // nothing binds w_n

    sp.beta_var[n] = pb.add_var(0.0);

    // (27c): Re(h^H w_n) >= beta sqrt(Gamma); (27f): Im(h^H w_n) = 0
    conic::LinExpr target = re_inner(sp.w_layout, hn, n);
    target.add(sp.beta_var[n], -std::sqrt(cfg.sinr_target(n)));
    pb.nonneg(target);
    pb.equality(im_inner(sp.w_layout, hn, n));

    // (27e): ||[sigma_n, h_n^H w_m (m != n)]|| <= beta_n
    {
      std::vector<conic::LinExpr> rows;
      rows.emplace_back(sp.beta_var[n], 1.0);
      rows.emplace_back(std::sqrt(cfg.noise_power(n)));
      for (int m = 0; m < nl; ++m) {
        if (m == n) continue;
        rows.push_back(re_inner(sp.w_layout, hn, m));
        rows.push_back(im_inner(sp.w_layout, hn, m));
      }
      pb.second_order(rows);
    }

    if (!active) continue;

    sp.alpha_var[n] = pb.add_var(0.0);
    sp.t_var[n] = pb.add_var(weight);

    // linearized certificate (30): Psi(w, alpha) >= beta^2, as
    // || (2 beta, Psi - 1) || <= Psi + 1 with Psi affine in (w, alpha)
    const cplx ref_inner = hn.dot(state.w.col(n));
    const double aref = state.alpha(n);
    conic::LinExpr psi;
    {
      // 2 Re(w_ref^H h h^H w)/aref: coefficient vector along h scaled by ref
      const cvec coef = hn * (std::conj(ref_inner) / aref) * 2.0;
      for (int i = 0; i < nt; ++i) {
        psi.add(sp.w_layout.re(n, i), coef(i).real());
        psi.add(sp.w_layout.im(n, i), coef(i).imag());
      }
      psi.add(sp.alpha_var[n], -std::norm(ref_inner) / (aref * aref));
    }
    {
      std::vector<conic::LinExpr> rows;
      conic::LinExpr head = psi;
      head.constant += 1.0;
      rows.push_back(head);
      rows.emplace_back(conic::LinExpr(sp.beta_var[n], 2.0));
      conic::LinExpr tail = psi;
      tail.constant -= 1.0;
      rows.push_back(tail);
      pb.second_order(rows);
    }

    // t_n >= alpha_n^{-kappa_n}
    pb.power3(conic::LinExpr(sp.t_var[n], 1.0), conic::LinExpr(sp.alpha_var[n], 1.0),
              conic::LinExpr(1.0), 1.0 / (1.0 + kappa(cfg.mcs_c(n))));
  }

  sp.problem = pb.build();
  return sp;
}

conic::ConicProblem build_subproblem(const SystemConfig& cfg, const ChannelState& ch,
                                     const EnergyPriceState& e, const rvec& q,
                                     const SabfState& state) {
  return build_subproblem_detailed(cfg, ch, e, q, state).problem;
}

BeamformingSolution sabf_solve(const SystemConfig& cfg, const ChannelState& ch,
                               const EnergyPriceState& e, const rvec& q,
                               const cmat& w_init, SabfState* state_out) {
  cfg.validate();
  ch.validate(cfg);
  e.validate();

  SabfState st = sabf_init(cfg, ch, e, q, w_init);

  auto rel_change = [](const rvec& now, const rvec& prev) {
    const double ref = prev.norm();
    if (ref == 0.0) return now.norm() == 0.0 ? 0.0 : 1.0;
    return (now - prev).norm() / ref;
  };

  BeamformingSolution out;
  out.status = SolveStatus::Solved;

  // tighter outer stopping calls for tighter inner solves; accept best-effort
  // iterates that plateau within an order of the requested accuracy
  conic::SolverOptions opt;
  opt.gap_tol = std::clamp(cfg.sabf_tol * 1e-3, 1e-9, 1e-7);
  opt.feas_tol = std::clamp(cfg.sabf_tol * 1e-2, 1e-8, 1e-6);

  int tau = 0;
  while (tau < cfg.sabf_max_iter) {
    ++tau;
    const SabfSubproblem sp = build_subproblem_detailed(cfg, ch, e, q, st);
    const conic::ConicSolution sol = conic::solve(sp.problem, opt);
    const bool usable =
        sol.status == conic::Status::Optimal ||
        (sol.status == conic::Status::MaxIter && sol.primal_res <= 1e-6 &&
         sol.gap <= 1e-6 && sol.x.allFinite());
    if (!usable) {
      out.status = SolveStatus::Fallback;  // keep the best iterate found so far
      break;
    }

    cmat w_next = phase_align(ch, extract_w(sp.w_layout, sol.x, cfg.n_links));
    const rvec sinr_next = sinr_all(cfg, ch, w_next);
    rvec alpha_next(cfg.n_links);
    for (int n = 0; n < cfg.n_links; ++n) {
      // (22d) holds up to solver dust; project alpha back onto it
      alpha_next(n) = (sp.alpha_var[n] >= 0)
                          ? std::min(sol.x(sp.alpha_var[n]), sinr_next(n))
                          : sinr_next(n);
    }

    // majorize-minimize safeguard: a solve that fails to improve the
    // parametric objective (inner-solver noise) keeps the previous iterate
    const double before = parametric_objective(cfg, e, st, st.w, st.alpha);
    const double after = parametric_objective(cfg, e, st, w_next, alpha_next);
    if (after <= before) {
      st.w = w_next;
      st.alpha = alpha_next;
      // keep the solver's beta so activeness of the interference bound is
      // observable; users without a beta variable get the realized amplitude
      const rvec realized = interference_amplitude(cfg, ch, st.w);
      st.beta = realized;
      for (int n = 0; n < cfg.n_links; ++n)
        if (sp.beta_var[n] >= 0) st.beta(n) = sol.x(sp.beta_var[n]);
    }

    rvec gamma_next(cfg.n_links);
    for (int n = 0; n < cfg.n_links; ++n)
      gamma_next(n) = packet_departure(st.alpha(n), cfg.mcs_b(n), cfg.mcs_c(n));
    const rvec varpi_next = q.cwiseProduct(gamma_next);
    const double dg = rel_change(gamma_next, st.gamma);
    const double dv = rel_change(varpi_next, st.varpi);
    st.gamma = gamma_next;
    st.varpi = varpi_next;
    st.iteration = tau;
    st.objective_trace.push_back(surrogate_objective(cfg, e, q, st.w, st.alpha));
    if (dg <= cfg.sabf_tol && dv <= cfg.sabf_tol) break;
  }

  out.w = st.w;
  out.iterations = tau;
  out.objective = gewpr_objective(cfg, ch, e, st.w, q);
  if (state_out) *state_out = st;
  return out;
}

double kkt_residual(const SystemConfig& cfg, const ChannelState& ch,
                    const EnergyPriceState& e, const rvec& q, const SabfState& state) {
  const int nl = cfg.n_links;
  const int nt = cfg.n_antennas;
  const int dim = 2 * nt * nl;
  const cmat& w = state.w;

  const rvec sinr_now = sinr_all(cfg, ch, w);
  rvec noise_plus_interf(nl);
  for (int n = 0; n < nl; ++n) {
    double acc = cfg.noise_power(n);
    for (int m = 0; m < nl; ++m)
      if (m != n) acc += std::norm(ch.h.col(n).dot(w.col(m)));
    noise_plus_interf(n) = acc;
  }

  // real gradient blocks of SINR_n with respect to every w_m
  auto sinr_gradient = [&](int n) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim);
    const cvec hn = ch.h.col(n);
    for (int m = 0; m < nl; ++m) {
      const cplx inner = hn.dot(w.col(m));
      const double scale =
          (m == n) ? 2.0 / noise_plus_interf(n)
                   : -2.0 * sinr_now(n) / noise_plus_interf(n);
      const cvec block = scale * hn * inner;
      for (int i = 0; i < nt; ++i) {
        grad(2 * nt * m + i) = block(i).real();
        grad(2 * nt * m + nt + i) = block(i).imag();
      }
    }
    return grad;
  };

  Eigen::VectorXd wvec(dim);
  for (int m = 0; m < nl; ++m)
    for (int i = 0; i < nt; ++i) {
      wvec(2 * nt * m + i) = w(i, m).real();
      wvec(2 * nt * m + nt + i) = w(i, m).imag();
    }

  // multipliers of the sigmoid link constraints come in closed form
  rvec zeta(nl);
  for (int n = 0; n < nl; ++n) {
    const double g = packet_departure(state.alpha(n), cfg.mcs_b(n), cfg.mcs_c(n));
    zeta(n) = (state.alpha(n) > 0.0)
                  ? q(n) * g * (1.0 - g) * kappa(cfg.mcs_c(n)) / state.alpha(n)
                  : 0.0;
  }

  const double p_tot = total_power(cfg, w);
  const double kink_tol = 1e-9 * std::max(1.0, e.harvest);
  const bool at_kink = std::abs(p_tot - e.harvest) <= kink_tol;

  Eigen::VectorXd base = Eigen::VectorXd::Zero(dim);
  for (int n = 0; n < nl; ++n) base -= zeta(n) * sinr_gradient(n);
  const Eigen::VectorXd price_col =
      cfg.control_v * (2.0 / cfg.pa_efficiency) * wvec;

  // multiplier columns for the cap and the active SINR targets, gated by
  // complementary slackness
  std::vector<Eigen::VectorXd> cols;
  const double tx = w.squaredNorm();
  if (tx >= cfg.max_tx_power * (1.0 - 1e-4)) cols.push_back(2.0 * wvec);
  for (int n = 0; n < nl; ++n) {
    if (cfg.sinr_target(n) > 0.0 && sinr_now(n) <= cfg.sinr_target(n) * (1.0 + 1e-4))
      cols.push_back(-sinr_gradient(n));
  }

  // best-fit nonnegative multipliers by active-set enumeration; away from the
  // harvest kink the grid price is fixed, on the kink any price in
  // [sell, buy] is a valid subgradient and both endpoints are tried
  std::vector<double> prices;
  if (at_kink)
    prices = {e.sell_price, e.buy_price};
  else
    prices = {p_tot > e.harvest ? e.buy_price : e.sell_price};

  double best = std::numeric_limits<double>::infinity();
  const int ncols = static_cast<int>(cols.size());
  for (double price : prices) {
    const Eigen::VectorXd fixed = base + price * price_col;
    best = std::min(best, fixed.lpNorm<Eigen::Infinity>());
    for (int mask = 1; mask < (1 << ncols); ++mask) {
      std::vector<int> idx;
      for (int j = 0; j < ncols; ++j)
        if (mask & (1 << j)) idx.push_back(j);
      Eigen::MatrixXd m(dim, static_cast<int>(idx.size()));
      for (std::size_t j = 0; j < idx.size(); ++j) m.col(j) = cols[idx[j]];
      const Eigen::VectorXd theta = m.colPivHouseholderQr().solve(-fixed);
      if ((theta.array() < -1e-12).any()) continue;
      best = std::min(best, (fixed + m * theta).lpNorm<Eigen::Infinity>());
    }
  }

  // primal violations and complementary slackness products
  double viol = std::max(0.0, tx - cfg.max_tx_power);
  for (int n = 0; n < nl; ++n) {
    viol = std::max(viol, cfg.sinr_target(n) - sinr_now(n));
    viol = std::max(viol, state.alpha(n) - sinr_now(n));
    viol = std::max(viol, zeta(n) * std::abs(state.alpha(n) - sinr_now(n)));
  }
  return std::max(best, viol);
}

}  // namespace hut
