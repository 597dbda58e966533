#include "hut/conic.hpp"

#include <Eigen/LU>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace hut::conic {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

struct Block {
  ConeKind kind;
  int off;
  int dim;
  double theta;
};

double cone_nu(const Block& b) {
  switch (b.kind) {
    case ConeKind::NonNegative: return static_cast<double>(b.dim);
    case ConeKind::SecondOrder: return 2.0;
    case ConeKind::Power3: return 3.0;
  }
  return 0.0;
}

// Strict membership, evaluated with the same arithmetic the barrier uses so
// that accepted iterates always produce finite (if large) derivatives.
bool primal_interior(const Block& b, const Eigen::Ref<const VectorXd>& s) {
  switch (b.kind) {
    case ConeKind::NonNegative:
      return (s.array() > 0.0).all();
    case ConeKind::SecondOrder:
      return s(0) > 0.0 && s(0) * s(0) - s.tail(b.dim - 1).squaredNorm() > 0.0;
    case ConeKind::Power3: {
      if (!(s(0) > 0.0) || !(s(1) > 0.0)) return false;
      const double phi = std::exp(2.0 * b.theta * std::log(s(0)) +
                                  2.0 * (1.0 - b.theta) * std::log(s(1)));
      return std::isfinite(phi) ? phi - s(2) * s(2) > 0.0 : true;
    }
  }
  return false;
}

bool dual_interior(const Block& b, const Eigen::Ref<const VectorXd>& z) {
  switch (b.kind) {
    case ConeKind::NonNegative:
      return (z.array() > 0.0).all();
    case ConeKind::SecondOrder:
      return z(0) > 0.0 && z(0) * z(0) - z.tail(b.dim - 1).squaredNorm() > 0.0;
    case ConeKind::Power3: {
      // dual cone: (a/theta)^theta (b/(1-theta))^(1-theta) >= |c|, a,b >= 0
      if (!(z(0) > 0.0) || !(z(1) > 0.0)) return false;
      if (z(2) == 0.0) return true;
      const double lhs = b.theta * std::log(z(0) / b.theta) +
                         (1.0 - b.theta) * std::log(z(1) / (1.0 - b.theta));
      return lhs > std::log(std::abs(z(2)));
    }
  }
  return false;
}

void init_point(const Block& b, Eigen::Ref<VectorXd> s, Eigen::Ref<VectorXd> z) {
  switch (b.kind) {
    case ConeKind::NonNegative:
      s.setOnes();
      z.setOnes();
      break;
    case ConeKind::SecondOrder:
      s.setZero();
      z.setZero();
      s(0) = 1.0;
      z(0) = 2.0;  // z = -grad f(s) at s = e
      break;
    case ConeKind::Power3:
      s << 1.0, 1.0, 0.0;
      z << 1.0 + b.theta, 2.0 - b.theta, 0.0;
      break;
  }
}

double barrier_val(const Block& b, const Eigen::Ref<const VectorXd>& s) {
  switch (b.kind) {
    case ConeKind::NonNegative:
      return -s.array().log().sum();
    case ConeKind::SecondOrder:
      return -std::log(s(0) * s(0) - s.tail(b.dim - 1).squaredNorm());
    case ConeKind::Power3: {
      const double th = b.theta;
      const double phi =
          std::exp(2.0 * th * std::log(s(0)) + 2.0 * (1.0 - th) * std::log(s(1)));
      return -std::log(phi - s(2) * s(2)) - (1.0 - th) * std::log(s(0)) -
             th * std::log(s(1));
    }
  }
  return 0.0;
}

void barrier_grad(const Block& b, const Eigen::Ref<const VectorXd>& s,
                  Eigen::Ref<VectorXd> g) {
  switch (b.kind) {
    case ConeKind::NonNegative:
      g = -s.cwiseInverse();
      break;
    case ConeKind::SecondOrder: {
      const double det = s(0) * s(0) - s.tail(b.dim - 1).squaredNorm();
      g(0) = -2.0 * s(0) / det;
      g.tail(b.dim - 1) = 2.0 / det * s.tail(b.dim - 1);
      break;
    }
    case ConeKind::Power3: {
      const double th = b.theta;
      const double u = s(0), v = s(1), w = s(2);
      const double phi = std::exp(2.0 * th * std::log(u) + 2.0 * (1.0 - th) * std::log(v));
      const double xi = phi - w * w;
      g(0) = -(2.0 * th * phi / u) / xi - (1.0 - th) / u;
      g(1) = -(2.0 * (1.0 - th) * phi / v) / xi - th / v;
      g(2) = 2.0 * w / xi;
      break;
    }
  }
}

MatrixXd barrier_hess(const Block& b, const Eigen::Ref<const VectorXd>& s) {
  MatrixXd H(b.dim, b.dim);
  switch (b.kind) {
    case ConeKind::NonNegative:
      H = s.cwiseAbs2().cwiseInverse().asDiagonal();
      break;
    case ConeKind::SecondOrder: {
      const int d = b.dim;
      const double det = s(0) * s(0) - s.tail(d - 1).squaredNorm();
      VectorXd js = s;
      js.tail(d - 1) *= -1.0;  // J s
      H = (4.0 / (det * det)) * js * js.transpose();
      H(0, 0) -= 2.0 / det;
      H.bottomRightCorner(d - 1, d - 1).diagonal().array() += 2.0 / det;
      break;
    }
    case ConeKind::Power3: {
      const double th = b.theta;
      const double u = s(0), v = s(1), w = s(2);
      const double phi = std::exp(2.0 * th * std::log(u) + 2.0 * (1.0 - th) * std::log(v));
      const double xi = phi - w * w;
      const double xu = 2.0 * th * phi / u;
      const double xv = 2.0 * (1.0 - th) * phi / v;
      const double xw = -2.0 * w;
      const double xuu = 2.0 * th * (2.0 * th - 1.0) * phi / (u * u);
      const double xvv = 2.0 * (1.0 - th) * (1.0 - 2.0 * th) * phi / (v * v);
      const double xuv = 4.0 * th * (1.0 - th) * phi / (u * v);
      const double xi2 = xi * xi;
      H(0, 0) = xu * xu / xi2 - xuu / xi + (1.0 - th) / (u * u);
      H(1, 1) = xv * xv / xi2 - xvv / xi + th / (v * v);
      H(2, 2) = xw * xw / xi2 + 2.0 / xi;
      H(0, 1) = H(1, 0) = xu * xv / xi2 - xuv / xi;
      H(0, 2) = H(2, 0) = xu * xw / xi2;
      H(1, 2) = H(2, 1) = xv * xw / xi2;
      break;
    }
  }
  return H;
}

/// H(s)^{-1} v, used by the proximity measure.
VectorXd hess_solve(const Block& b, const Eigen::Ref<const VectorXd>& s,
                    const Eigen::Ref<const VectorXd>& v) {
  switch (b.kind) {
    case ConeKind::NonNegative:
      return s.cwiseAbs2().cwiseProduct(v);
    case ConeKind::SecondOrder: {
      const int d = b.dim;
      const double det = s(0) * s(0) - s.tail(d - 1).squaredNorm();
      // closed form: H^{-1} = s s' - (det/2) J
      VectorXd out = s * s.dot(v);
      out(0) -= 0.5 * det * v(0);
      out.tail(d - 1) += 0.5 * det * v.tail(d - 1);
      return out;
    }
    case ConeKind::Power3:
      return barrier_hess(b, s).ldlt().solve(v);
  }
  return v;
}

struct Dirs {
  VectorXd dx, dy, dz, ds;
  double dtau = 0.0, dkappa = 0.0;
};

class Solver {
 public:
  Solver(const ConicProblem& p, const SolverOptions& opt) : opt_(opt) {
    n_ = p.num_vars();
    m_ = p.num_eq();
    k_ = p.cone_dim();
    A_ = MatrixXd(p.eq_mat);
    G_ = MatrixXd(p.cone_mat);
    b_ = p.eq_rhs;
    h_ = p.cone_rhs;
    c_ = p.c;
    orig_a_ = A_;
    orig_g_ = G_;
    orig_b_ = b_;
    orig_h_ = h_;
    orig_c_ = c_;
    int off = 0;
    for (const auto& cn : p.cones) {
      blocks_.push_back({cn.kind, off, cn.dim, cn.theta});
      off += cn.dim;
    }
    nu_ = 1.0;  // tau/kappa pair
    for (const auto& blk : blocks_) nu_ += cone_nu(blk);
    mat_scale_ = std::max({1.0, orig_a_.size() ? orig_a_.cwiseAbs().maxCoeff() : 0.0,
                           orig_g_.size() ? orig_g_.cwiseAbs().maxCoeff() : 0.0});
    equilibrate();
  }

  ConicSolution run();

 private:
  bool interior(const VectorXd& s, const VectorXd& z, double tau, double kappa) const {
    if (!(tau > 0.0) || !(kappa > 0.0)) return false;
    for (const auto& blk : blocks_) {
      if (!primal_interior(blk, s.segment(blk.off, blk.dim))) return false;
      if (!dual_interior(blk, z.segment(blk.off, blk.dim))) return false;
    }
    return true;
  }

  VectorXd grad_at(const VectorXd& s) const {
    VectorXd g(k_);
    for (const auto& blk : blocks_)
      barrier_grad(blk, s.segment(blk.off, blk.dim), g.segment(blk.off, blk.dim));
    return g;
  }

  double proximity(const VectorXd& s, const VectorXd& z, double tau, double kappa,
                   double mu) const {
    double acc = std::pow(tau * kappa - mu, 2);
    for (const auto& blk : blocks_) {
      const auto ss = s.segment(blk.off, blk.dim);
      VectorXd v = z.segment(blk.off, blk.dim);
      VectorXd g(blk.dim);
      barrier_grad(blk, ss, g);
      v += mu * g;
      acc += v.dot(hess_solve(blk, ss, v));
    }
    return std::sqrt(std::max(acc, 0.0)) / mu;
  }

  double max_step(const VectorXd& s, const VectorXd& z, double tau, double kappa,
                  const Dirs& d) const {
    auto ok = [&](double a) {
      return interior(s + a * d.ds, z + a * d.dz, tau + a * d.dtau,
                      kappa + a * d.dkappa);
    };
    if (ok(1.0)) return 1.0;
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 40; ++i) {
      const double mid = 0.5 * (lo + hi);
      (ok(mid) ? lo : hi) = mid;
    }
    return lo;
  }

  /// Ruiz equilibration of the stacked constraint matrix: column scaling d_,
  /// row scalings ea_/eg_ (uniform within each cone block so membership is
  /// preserved) plus a scalar on the cost. Iterates work on the scaled data;
  /// termination is measured on the original problem.
  void equilibrate();

  struct Unscaled {
    VectorXd x, y, z, s;
  };
  Unscaled unscale(const VectorXd& x, const VectorXd& y, const VectorXd& z,
                   const VectorXd& s) const {
    Unscaled u;
    u.x = d_.cwiseProduct(x) / rhs_scale_;
    u.y = ea_.cwiseProduct(y) / cost_scale_;
    u.z = eg_.cwiseProduct(z) / cost_scale_;
    u.s = s.cwiseQuotient(eg_) / rhs_scale_;
    return u;
  }

  /// Factor the quasi-definite KKT block for the current barrier Hessian.
  void factor(const VectorXd& s, double mu);
  /// Newton direction: linear residuals scaled by gamma_lin, complementarity
  /// driven toward target_mu.
  Dirs direction(double gamma_lin, double target_mu) const;

  ConicSolution make_solution(Status st, int iters) const;
  bool try_terminate(ConicSolution& out, int iters);

  SolverOptions opt_;
  int n_ = 0, m_ = 0, k_ = 0;
  MatrixXd A_, G_;
  VectorXd b_, h_, c_;
  MatrixXd orig_a_, orig_g_;
  VectorXd orig_b_, orig_h_, orig_c_;
  VectorXd d_, ea_, eg_;  // equilibration scalings
  double cost_scale_ = 1.0;
  double rhs_scale_ = 1.0;
  std::vector<Block> blocks_;
  double nu_ = 1.0;
  double mat_scale_ = 1.0;

  // iterate
  VectorXd x_, y_, z_, s_;
  double tau_ = 1.0, kappa_ = 1.0;

  // best-so-far iterate, restored when late iterations break down numerically
  VectorXd bx_, by_, bz_, bs_;
  double btau_ = 1.0, bkappa_ = 1.0;
  double best_metric_ = std::numeric_limits<double>::infinity();

  // residuals at iterate
  VectorXd f1_, f2_, f3_;
  double f4_ = 0.0, mu_ = 1.0;

  // factorization data
  std::vector<MatrixXd> hblk_;  // barrier Hessians at s, per block
  MatrixXd HG_;                 // blockdiag(H) * G
  VectorXd Hh_;                 // blockdiag(H) * h
  VectorXd grad_;               // barrier gradient at s
  double mu_fact_ = 1.0;
  Eigen::PartialPivLU<MatrixXd> lu_;
  MatrixXd kkt_;      // unregularized, for iterative refinement
  VectorXd x2_, y2_;  // solution of the tau-column system
  VectorXd kkt_scale_;

  VectorXd apply_h(const VectorXd& v) const {
    VectorXd out(k_);
    for (std::size_t i = 0; i < blocks_.size(); ++i) {
      const auto& blk = blocks_[i];
      out.segment(blk.off, blk.dim).noalias() =
          hblk_[i] * v.segment(blk.off, blk.dim);
    }
    return out;
  }

  /// Refined solve against the unregularized KKT matrix. Residuals accumulate
  /// in long double; the KKT system turns ill-conditioned as mu -> 0 and plain
  /// double refinement runs out of digits around 1e-9 accuracy.
  VectorXd kkt_solve(const VectorXd& rhs) const {
    const int dim = static_cast<int>(rhs.size());
    auto scaled_solve = [&](const VectorXd& r) -> VectorXd {
      return kkt_scale_.cwiseProduct(lu_.solve(VectorXd(kkt_scale_.cwiseProduct(r))));
    };
    VectorXd sol = scaled_solve(rhs);
    VectorXd r(dim);
    for (int round = 0; round < 3; ++round) {
      for (int i = 0; i < dim; ++i) {
        long double acc = rhs(i);
        for (int j = 0; j < dim; ++j)
          acc -= static_cast<long double>(kkt_(i, j)) * static_cast<long double>(sol(j));
        r(i) = static_cast<double>(acc);
      }
      sol += scaled_solve(r);
    }
    return sol;
  }
};

void Solver::equilibrate() {
  d_ = VectorXd::Ones(n_);
  ea_ = VectorXd::Ones(m_);
  eg_ = VectorXd::Ones(k_);
  for (int pass = 0; pass < 10; ++pass) {
    // column sweep over the stacked [A; G]
    for (int j = 0; j < n_; ++j) {
      double peak = 0.0;
      if (m_ > 0) peak = A_.col(j).cwiseAbs().maxCoeff();
      if (k_ > 0) peak = std::max(peak, G_.col(j).cwiseAbs().maxCoeff());
      if (peak <= 0.0) continue;
      const double f = 1.0 / std::sqrt(peak);
      A_.col(j) *= f;
      G_.col(j) *= f;
      d_(j) *= f;
    }
    // equality rows scale independently
    for (int i = 0; i < m_; ++i) {
      const double peak = A_.row(i).cwiseAbs().maxCoeff();
      if (peak <= 0.0) continue;
      const double f = 1.0 / std::sqrt(peak);
      A_.row(i) *= f;
      b_(i) *= f;
      ea_(i) *= f;
    }
    // cone rows share one factor per block
    for (const auto& blk : blocks_) {
      const double peak = G_.middleRows(blk.off, blk.dim).cwiseAbs().maxCoeff();
      if (peak <= 0.0) continue;
      const double f = 1.0 / std::sqrt(peak);
      G_.middleRows(blk.off, blk.dim) *= f;
      h_.segment(blk.off, blk.dim) *= f;
      eg_.segment(blk.off, blk.dim) *= f;
    }
  }
  c_ = d_.cwiseProduct(c_);
  cost_scale_ = 1.0 / std::max(1.0, c_.lpNorm<Eigen::Infinity>());
  c_ *= cost_scale_;
  const double bn = m_ ? b_.lpNorm<Eigen::Infinity>() : 0.0;
  const double hn = k_ ? h_.lpNorm<Eigen::Infinity>() : 0.0;
  rhs_scale_ = 1.0 / std::max(1.0, std::max(bn, hn));
  b_ *= rhs_scale_;
  h_ *= rhs_scale_;
}

void Solver::factor(const VectorXd& s, double mu) {
  mu_fact_ = mu;
  HG_.resize(k_, n_);
  Hh_.resize(k_);
  grad_.resize(k_);
  hblk_.resize(blocks_.size());
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    const auto& blk = blocks_[i];
    const auto ss = s.segment(blk.off, blk.dim);
    hblk_[i] = barrier_hess(blk, ss);
    HG_.middleRows(blk.off, blk.dim).noalias() =
        hblk_[i] * G_.middleRows(blk.off, blk.dim);
    Hh_.segment(blk.off, blk.dim).noalias() = hblk_[i] * h_.segment(blk.off, blk.dim);
    barrier_grad(blk, ss, grad_.segment(blk.off, blk.dim));
  }
  const int dim = n_ + m_;
  kkt_.setZero(dim, dim);
  kkt_.topLeftCorner(n_, n_).noalias() = mu * G_.transpose() * HG_;
  if (m_ > 0) {
    kkt_.topRightCorner(n_, m_) = A_.transpose();
    kkt_.bottomLeftCorner(m_, n_) = A_;
  }
  // Jacobi scaling before factoring: near convergence the Hessian mixes
  // 1/mu- and mu-sized blocks and an unscaled LU loses its pivots.
  kkt_scale_.resize(dim);
  for (int i = 0; i < dim; ++i) {
    const double peak = std::max(kkt_.row(i).cwiseAbs().maxCoeff(),
                                 kkt_.col(i).cwiseAbs().maxCoeff());
    kkt_scale_(i) = (peak > 0) ? 1.0 / std::sqrt(peak) : 1.0;
  }
  MatrixXd reg = kkt_scale_.asDiagonal() * kkt_ * kkt_scale_.asDiagonal();
  reg.topLeftCorner(n_, n_).diagonal().array() += 1e-12;
  if (m_ > 0) reg.bottomRightCorner(m_, m_).diagonal().array() -= 1e-12;
  lu_.compute(reg);

  // tau-column system, shared by all directions at this factorization
  VectorXd rhs(dim);
  rhs.head(n_) = -(c_ - mu * G_.transpose() * Hh_);
  rhs.tail(m_) = b_;
  const VectorXd sol = kkt_solve(rhs);
  x2_ = sol.head(n_);
  y2_ = sol.tail(m_);
}

Dirs Solver::direction(double gamma_lin, double target_mu) const {
  const double mu = mu_fact_;
  const VectorXd rs = -(z_ + target_mu * grad_);
  const double rk = -(tau_ * kappa_ - target_mu);

  VectorXd rhs(n_ + m_);
  rhs.head(n_) = -gamma_lin * f1_ - G_.transpose() * rs;
  double rhs_tau = -gamma_lin * f4_ - h_.dot(rs) - rk / tau_;
  if (gamma_lin != 0.0) {
    const VectorXd Hf3 = apply_h(f3_);
    rhs.head(n_) -= gamma_lin * mu * G_.transpose() * Hf3;
    rhs_tau -= gamma_lin * mu * h_.dot(Hf3);
  }
  if (m_ > 0) rhs.tail(m_) = -gamma_lin * f2_;

  const VectorXd sol = kkt_solve(rhs);
  const VectorXd x1 = sol.head(n_);
  const VectorXd y1 = sol.tail(m_);

  const VectorXd cbar = c_ + mu * G_.transpose() * Hh_;
  const double omega = mu * h_.dot(Hh_) + kappa_ / tau_;
  const double denom = cbar.dot(x2_) + b_.dot(y2_) - omega;

  Dirs d;
  d.dtau = (rhs_tau - cbar.dot(x1) - b_.dot(y1)) / denom;
  d.dx = x1 + d.dtau * x2_;
  d.dy = y1 + d.dtau * y2_;
  d.ds = -gamma_lin * f3_ - G_ * d.dx + h_ * d.dtau;
  d.dz = rs - mu * apply_h(d.ds);
  d.dkappa = (rk - kappa_ * d.dtau) / tau_;
  return d;
}

ConicSolution Solver::make_solution(Status st, int iters) const {
  ConicSolution sol;
  sol.status = st;
  sol.iterations = iters;
  const double t = (st == Status::Infeasible || st == Status::Unbounded)
                       ? 1.0
                       : std::max(tau_, 1e-300);
  const Unscaled u = unscale(x_, y_, z_, s_);
  sol.x = u.x / t;
  sol.y = u.y / t;
  sol.z = u.z / t;
  sol.s = u.s / t;
  if (st == Status::Infeasible) {
    const double ct = -(orig_b_.dot(sol.y) + orig_h_.dot(sol.z));
    if (ct > 0) {
      sol.y /= ct;
      sol.z /= ct;
    }
  } else if (st == Status::Unbounded) {
    const double cx = -orig_c_.dot(sol.x);
    if (cx > 0) {
      sol.x /= cx;
      sol.s /= cx;
    }
  }
  sol.pobj = orig_c_.dot(sol.x);
  sol.dobj = -orig_b_.dot(sol.y) - orig_h_.dot(sol.z);
  const double bn = std::max(1.0, m_ ? orig_b_.lpNorm<Eigen::Infinity>() : 0.0);
  const double hn = std::max(1.0, k_ ? orig_h_.lpNorm<Eigen::Infinity>() : 0.0);
  const double cn = std::max(1.0, orig_c_.lpNorm<Eigen::Infinity>());
  double pres_eq = m_ ? (orig_a_ * sol.x - orig_b_).lpNorm<Eigen::Infinity>() / bn : 0.0;
  double pres_cone =
      k_ ? (orig_g_ * sol.x + sol.s - orig_h_).lpNorm<Eigen::Infinity>() / hn : 0.0;
  sol.primal_res = std::max(pres_eq, pres_cone);
  VectorXd dres = orig_g_.transpose() * sol.z + orig_c_;
  if (m_ > 0) dres.noalias() += orig_a_.transpose() * sol.y;
  sol.dual_res = dres.lpNorm<Eigen::Infinity>() / cn;
  sol.gap = std::abs(sol.pobj - sol.dobj) /
            std::max({1.0, std::abs(sol.pobj), std::abs(sol.dobj)});
  return sol;
}

bool Solver::try_terminate(ConicSolution& out, int iters) {
  // all termination metrics live in the original (unequilibrated) problem
  const Unscaled u = unscale(x_, y_, z_, s_);
  const VectorXd xh = u.x / tau_, yh = u.y / tau_, zh = u.z / tau_, sh = u.s / tau_;
  const double bn = std::max(1.0, m_ ? orig_b_.lpNorm<Eigen::Infinity>() : 0.0);
  const double hn = std::max(1.0, k_ ? orig_h_.lpNorm<Eigen::Infinity>() : 0.0);
  const double cn = std::max(1.0, orig_c_.lpNorm<Eigen::Infinity>());
  const double pres_eq =
      m_ ? (orig_a_ * xh - orig_b_).lpNorm<Eigen::Infinity>() / bn : 0.0;
  const double pres_cone =
      k_ ? (orig_g_ * xh + sh - orig_h_).lpNorm<Eigen::Infinity>() / hn : 0.0;
  const double pres = std::max(pres_eq, pres_cone);
  VectorXd dvec = orig_g_.transpose() * zh + orig_c_;
  if (m_ > 0) dvec.noalias() += orig_a_.transpose() * yh;
  const double dres = dvec.lpNorm<Eigen::Infinity>() / cn;
  const double pobj = orig_c_.dot(xh);
  const double dobj = -orig_b_.dot(yh) - orig_h_.dot(zh);
  const double relgap =
      std::abs(pobj - dobj) / std::max({1.0, std::abs(pobj), std::abs(dobj)});
  const double metric = std::max({pres, dres, relgap});
  if (std::isfinite(metric) && metric < best_metric_) {
    best_metric_ = metric;
    bx_ = x_;
    by_ = y_;
    bz_ = z_;
    bs_ = s_;
    btau_ = tau_;
    bkappa_ = kappa_;
  }
  if (pres <= opt_.feas_tol && dres <= opt_.feas_tol && relgap <= opt_.gap_tol) {
    out = make_solution(Status::Optimal, iters);
    return true;
  }

  // primal infeasibility: A'y + G'z ~ 0, b'y + h'z < 0, z in K*
  const double ct = -(orig_b_.dot(u.y) + orig_h_.dot(u.z));
  if (ct > 1e-12 * mat_scale_) {
    VectorXd cert = orig_g_.transpose() * u.z;
    if (m_ > 0) cert.noalias() += orig_a_.transpose() * u.y;
    if (cert.lpNorm<Eigen::Infinity>() <= opt_.feas_tol * mat_scale_ * ct &&
        tau_ <= kappa_ * 1e-2) {
      out = make_solution(Status::Infeasible, iters);
      return true;
    }
  }
  // dual infeasibility (primal unbounded): c'x < 0, Ax ~ 0, Gx + s ~ 0, s in K
  const double cx = -orig_c_.dot(u.x);
  if (cx > 1e-12 * std::max(1.0, orig_c_.lpNorm<Eigen::Infinity>())) {
    const double ray_eq = m_ ? (orig_a_ * u.x).lpNorm<Eigen::Infinity>() : 0.0;
    const double ray_cone =
        k_ ? (orig_g_ * u.x + u.s).lpNorm<Eigen::Infinity>() : 0.0;
    if (std::max(ray_eq, ray_cone) <= opt_.feas_tol * mat_scale_ * cx &&
        tau_ <= kappa_ * 1e-2) {
      out = make_solution(Status::Unbounded, iters);
      return true;
    }
  }
  return false;
}

ConicSolution Solver::run() {
  x_ = VectorXd::Zero(n_);
  y_ = VectorXd::Zero(m_);
  s_.resize(k_);
  z_.resize(k_);
  for (const auto& blk : blocks_)
    init_point(blk, s_.segment(blk.off, blk.dim), z_.segment(blk.off, blk.dim));
  tau_ = 1.0;
  kappa_ = 1.0;

  constexpr double kEtaPredictor = 0.80;
  constexpr double kEtaCenter = 0.30;
  constexpr int kMaxCorrectors = 8;

  ConicSolution out;
  int stall = 0;
  int since_improvement = 0;
  double last_best = std::numeric_limits<double>::infinity();
  for (int it = 0; it < opt_.max_iter; ++it) {
    f1_ = G_.transpose() * z_ + c_ * tau_;
    if (m_ > 0) f1_.noalias() += A_.transpose() * y_;
    f2_ = m_ ? VectorXd(A_ * x_ - b_ * tau_) : VectorXd(0);
    f3_ = G_ * x_ + s_ - h_ * tau_;
    f4_ = c_.dot(x_) + b_.dot(y_) + h_.dot(z_) + kappa_;
    mu_ = (s_.dot(z_) + tau_ * kappa_) / nu_;

    if (try_terminate(out, it)) return out;
    if (!std::isfinite(mu_) || mu_ < 1e-16 || tau_ < 1e-12) break;
    if (best_metric_ < 0.999 * last_best) {
      last_best = best_metric_;
      since_improvement = 0;
    } else if (++since_improvement >= 15) {
      break;  // accuracy has plateaued below the requested tolerance
    }

    factor(s_, mu_);

    // affine probe to pick the centering weight
    const Dirs aff = direction(1.0, 0.0);
    const double a_aff = max_step(s_, z_, tau_, kappa_, aff);
    double sigma = std::pow(1.0 - a_aff, 3);
    sigma = std::min(0.9, std::max(1e-4, sigma));

    Dirs d = direction(1.0 - sigma, sigma * mu_);
    double alpha = 0.99 * max_step(s_, z_, tau_, kappa_, d);
    if (opt_.trace) {
      std::fprintf(stderr,
                   "it %3d mu %9.3e tau %9.3e kappa %9.3e |f1| %9.3e |f3| %9.3e "
                   "f4 %9.3e a_aff %.3f sigma %.4f alpha %.4f psi %9.3e\n",
                   it, mu_, tau_, kappa_, f1_.lpNorm<Eigen::Infinity>(),
                   f3_.lpNorm<Eigen::Infinity>(), f4_, a_aff, sigma, alpha,
                   proximity(s_, z_, tau_, kappa_, mu_));
    }
    while (alpha > 1e-10) {
      const double psi =
          proximity(s_ + alpha * d.ds, z_ + alpha * d.dz, tau_ + alpha * d.dtau,
                    kappa_ + alpha * d.dkappa,
                    ((s_ + alpha * d.ds).dot(z_ + alpha * d.dz) +
                     (tau_ + alpha * d.dtau) * (kappa_ + alpha * d.dkappa)) /
                        nu_);
      if (psi <= kEtaPredictor) break;
      alpha *= 0.8;
    }
    if (alpha <= 1e-10) {
      if (++stall >= 3) break;
      continue;  // never scale a degenerate direction into the iterate
    }
    stall = 0;
    x_ += alpha * d.dx;
    y_ += alpha * d.dy;
    z_ += alpha * d.dz;
    s_ += alpha * d.ds;
    tau_ += alpha * d.dtau;
    kappa_ += alpha * d.dkappa;

    // centering correctors keep the iterate near the central path
    for (int corr = 0; corr < kMaxCorrectors; ++corr) {
      mu_ = (s_.dot(z_) + tau_ * kappa_) / nu_;
      double psi = proximity(s_, z_, tau_, kappa_, mu_);
      if (psi <= kEtaCenter) break;
      factor(s_, mu_);
      // gamma_lin = 0: linear residuals are untouched by centering steps
      const Dirs dc = direction(0.0, mu_);
      double ac = std::min(1.0, 0.99 * max_step(s_, z_, tau_, kappa_, dc));
      while (ac > 1e-10) {
        const double trial =
            proximity(s_ + ac * dc.ds, z_ + ac * dc.dz, tau_ + ac * dc.dtau,
                      kappa_ + ac * dc.dkappa,
                      ((s_ + ac * dc.ds).dot(z_ + ac * dc.dz) +
                       (tau_ + ac * dc.dtau) * (kappa_ + ac * dc.dkappa)) /
                          nu_);
        if (trial < psi) break;
        ac *= 0.7;
      }
      if (ac <= 1e-10) break;
      x_ += ac * dc.dx;
      y_ += ac * dc.dy;
      z_ += ac * dc.dz;
      s_ += ac * dc.ds;
      tau_ += ac * dc.dtau;
      kappa_ += ac * dc.dkappa;
    }
  }
  // restore the best iterate seen; the loop may have exited on a breakdown
  if (bx_.size()) {
    x_ = bx_;
    y_ = by_;
    z_ = bz_;
    s_ = bs_;
    tau_ = btau_;
    kappa_ = bkappa_;
  }
  if (!try_terminate(out, opt_.max_iter)) out = make_solution(Status::MaxIter, opt_.max_iter);
  return out;
}

}  // namespace

void ConicProblem::validate() const {
  const int n = num_vars();
  if (eq_mat.rows() != eq_rhs.size() || (eq_mat.rows() > 0 && eq_mat.cols() != n))
    throw std::invalid_argument("equality block dimensions inconsistent");
  if (cone_mat.rows() != cone_rhs.size() || (cone_mat.rows() > 0 && cone_mat.cols() != n))
    throw std::invalid_argument("cone block dimensions inconsistent");
  int total = 0;
  for (const auto& cn : cones) {
    if (cn.dim < 1) throw std::invalid_argument("cone dimension must be positive");
    switch (cn.kind) {
      case ConeKind::SecondOrder:
        if (cn.dim < 2) throw std::invalid_argument("second-order cone needs dim >= 2");
        break;
      case ConeKind::Power3:
        if (cn.dim != 3) throw std::invalid_argument("power cone has dim 3");
        if (!(cn.theta > 0.0) || !(cn.theta < 1.0))
          throw std::invalid_argument("power cone exponent must lie in (0,1)");
        break;
      case ConeKind::NonNegative:
        break;
    }
    total += cn.dim;
  }
  if (total != cone_dim())
    throw std::invalid_argument("cone dimensions do not sum to cone row count");
}

const char* to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
    case Status::MaxIter: return "maxiter";
  }
  return "unknown";
}

ConicSolution solve(const ConicProblem& p, const SolverOptions& opt) {
  p.validate();
  Solver solver(p, opt);
  return solver.run();
}

LinExpr& LinExpr::operator+=(const LinExpr& o) {
  constant += o.constant;
  terms.insert(terms.end(), o.terms.begin(), o.terms.end());
  return *this;
}

int ProblemBuilder::add_var(double obj_coef) {
  c_.push_back(obj_coef);
  return n_++;
}

void ProblemBuilder::set_objective(int var, double coef) { c_.at(var) = coef; }

void ProblemBuilder::equality(const LinExpr& expr) {
  const int row = static_cast<int>(b_.size());
  for (const auto& [var, coef] : expr.terms) eq_t_.emplace_back(row, var, coef);
  b_.push_back(-expr.constant);
}

void ProblemBuilder::cone_rows(const std::vector<LinExpr>& rows, Cone cone) {
  for (const auto& expr : rows) {
    const int row = static_cast<int>(h_.size());
    for (const auto& [var, coef] : expr.terms) g_t_.emplace_back(row, var, -coef);
    h_.push_back(expr.constant);
  }
  cones_.push_back(cone);
}

void ProblemBuilder::nonneg(const LinExpr& expr) {
  cone_rows({expr}, Cone{ConeKind::NonNegative, 1, 0.0});
}

void ProblemBuilder::second_order(const std::vector<LinExpr>& rows) {
  cone_rows(rows, Cone{ConeKind::SecondOrder, static_cast<int>(rows.size()), 0.0});
}

void ProblemBuilder::power3(const LinExpr& x0, const LinExpr& x1, const LinExpr& x2,
                            double theta) {
  cone_rows({x0, x1, x2}, Cone{ConeKind::Power3, 3, theta});
}

namespace detail {

namespace {
Block to_block(const Cone& c) { return Block{c.kind, 0, c.dim, c.theta}; }
}  // namespace

double barrier_value(const Cone& c, const Eigen::VectorXd& s) {
  return barrier_val(to_block(c), s);
}

Eigen::VectorXd barrier_gradient(const Cone& c, const Eigen::VectorXd& s) {
  Eigen::VectorXd g(c.dim);
  barrier_grad(to_block(c), s, g);
  return g;
}

Eigen::MatrixXd barrier_hessian(const Cone& c, const Eigen::VectorXd& s) {
  return barrier_hess(to_block(c), s);
}

bool in_cone(const Cone& c, const Eigen::VectorXd& s) {
  return primal_interior(to_block(c), s);
}

bool in_dual_cone(const Cone& c, const Eigen::VectorXd& z) {
  return dual_interior(to_block(c), z);
}

}  // namespace detail

ConicProblem ProblemBuilder::build() const {
  ConicProblem p;
  p.c = Eigen::Map<const Eigen::VectorXd>(c_.data(), n_);
  p.eq_mat.resize(static_cast<int>(b_.size()), n_);
  p.eq_mat.setFromTriplets(eq_t_.begin(), eq_t_.end());
  p.eq_rhs = Eigen::Map<const Eigen::VectorXd>(b_.data(), b_.size());
  p.cone_mat.resize(static_cast<int>(h_.size()), n_);
  p.cone_mat.setFromTriplets(g_t_.begin(), g_t_.end());
  p.cone_rhs = Eigen::Map<const Eigen::VectorXd>(h_.data(), h_.size());
  p.cones = cones_;
  p.validate();
  return p;
}

}  // namespace hut::conic
