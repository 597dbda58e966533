#include "doctest.h"

#include <cmath>

#include "hut/conic.hpp"
#include "hut/stochastic.hpp"

using namespace hut::conic;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

VectorXd interior_sample(const Cone& c, hut::RngStream& rng) {
  VectorXd s(c.dim);
  switch (c.kind) {
    case ConeKind::NonNegative:
      for (int i = 0; i < c.dim; ++i) s(i) = 0.1 + 3.0 * rng.uniform();
      break;
    case ConeKind::SecondOrder:
      for (int i = 1; i < c.dim; ++i) s(i) = 2.0 * rng.uniform() - 1.0;
      s(0) = s.tail(c.dim - 1).norm() + 0.1 + 2.0 * rng.uniform();
      break;
    case ConeKind::Power3:
      s(0) = 0.2 + 3.0 * rng.uniform();
      s(1) = 0.2 + 3.0 * rng.uniform();
      s(2) = 0.0;
      s(2) = (2.0 * rng.uniform() - 1.0) * 0.9 *
             std::pow(s(0), c.theta) * std::pow(s(1), 1.0 - c.theta);
      break;
  }
  return s;
}

void check_derivatives(const Cone& c, hut::RngStream& rng) {
  const double h = 1e-6;
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd s = interior_sample(c, rng);
    REQUIRE(detail::in_cone(c, s));
    const VectorXd g = detail::barrier_gradient(c, s);
    const MatrixXd H = detail::barrier_hessian(c, s);
    for (int i = 0; i < c.dim; ++i) {
      VectorXd sp = s, sm = s;
      sp(i) += h;
      sm(i) -= h;
      const double fd = (detail::barrier_value(c, sp) - detail::barrier_value(c, sm)) / (2 * h);
      CHECK(g(i) == doctest::Approx(fd).epsilon(5e-5));
      const VectorXd hcol =
          (detail::barrier_gradient(c, sp) - detail::barrier_gradient(c, sm)) / (2 * h);
      for (int j = 0; j < c.dim; ++j)
        CHECK(H(j, i) == doctest::Approx(hcol(j)).epsilon(5e-4).scale(1.0));
    }
    // logarithmic homogeneity: H(s) s = -g(s)
    CHECK((H * s + g).norm() < 1e-8 * std::max(1.0, g.norm()));
    // the dual point -g(s) must be interior to the dual cone
    CHECK(detail::in_dual_cone(c, VectorXd(-g)));
  }
}

void check_complementarity(const ConicProblem& p, const ConicSolution& sol) {
  REQUIRE(sol.status == Status::Optimal);
  int off = 0;
  for (const auto& c : p.cones) {
    const double sz = sol.s.segment(off, c.dim).dot(sol.z.segment(off, c.dim));
    CHECK(std::abs(sz) <=
          1e-5 * std::max(1.0, sol.s.segment(off, c.dim).norm() *
                                   sol.z.segment(off, c.dim).norm()));
    off += c.dim;
  }
}

}  // namespace

TEST_SUITE("conic") {

TEST_CASE("barrier derivatives match finite differences") {
  hut::RngStream rng(101, 0);
  check_derivatives(Cone{ConeKind::NonNegative, 4, 0.0}, rng);
  check_derivatives(Cone{ConeKind::SecondOrder, 2, 0.0}, rng);
  check_derivatives(Cone{ConeKind::SecondOrder, 5, 0.0}, rng);
  check_derivatives(Cone{ConeKind::Power3, 3, 0.5}, rng);
  check_derivatives(Cone{ConeKind::Power3, 3, 0.3381}, rng);
  check_derivatives(Cone{ConeKind::Power3, 3, 0.87}, rng);
}

TEST_CASE("orthant: min x st x >= 1") {
  ProblemBuilder pb;
  const int x = pb.add_var(1.0);
  pb.nonneg(LinExpr(-1.0).add(x, 1.0));
  const ConicSolution sol = solve(pb.build());
  REQUIRE(sol.status == Status::Optimal);
  CHECK(sol.x(x) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("soc: min t st ||(3,4)|| <= t") {
  ProblemBuilder pb;
  const int t = pb.add_var(1.0);
  pb.second_order({LinExpr(t, 1.0), LinExpr(3.0), LinExpr(4.0)});
  const ConicSolution sol = solve(pb.build());
  REQUIRE(sol.status == Status::Optimal);
  CHECK(sol.x(t) == doctest::Approx(5.0).epsilon(1e-6));
}

TEST_CASE("power cone boundary: min t st t^0.5 >= 2") {
  ProblemBuilder pb;
  const int t = pb.add_var(1.0);
  pb.power3(LinExpr(t, 1.0), LinExpr(1.0), LinExpr(2.0), 0.5);
  const ConicSolution sol = solve(pb.build());
  REQUIRE(sol.status == Status::Optimal);
  CHECK(sol.x(t) == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("power cone with general exponent") {
  // min u st u^th * 2^(1-th) >= 3  ->  u = (3 / 2^(1-th))^(1/th)
  const double th = 0.3;
  ProblemBuilder pb;
  const int u = pb.add_var(1.0);
  pb.power3(LinExpr(u, 1.0), LinExpr(2.0), LinExpr(3.0), th);
  const ConicSolution sol = solve(pb.build());
  REQUIRE(sol.status == Status::Optimal);
  const double expect = std::pow(3.0 / std::pow(2.0, 1.0 - th), 1.0 / th);
  CHECK(sol.x(u) == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("equalities and duality") {
  // min x + 2y st x + y = 2, x >= 0, y >= 0  ->  optimum at (2,0), value 2
  ProblemBuilder pb;
  const int x = pb.add_var(1.0);
  const int y = pb.add_var(2.0);
  pb.equality(LinExpr(-2.0).add(x, 1.0).add(y, 1.0));
  pb.nonneg(LinExpr(x, 1.0));
  pb.nonneg(LinExpr(y, 1.0));
  const ConicSolution sol = solve(pb.build());
  REQUIRE(sol.status == Status::Optimal);
  CHECK(sol.pobj == doctest::Approx(2.0).epsilon(1e-7));
  CHECK(sol.x(x) == doctest::Approx(2.0).epsilon(1e-5));
  CHECK(sol.x(y) == doctest::Approx(0.0).scale(1.0).epsilon(1e-6));
  CHECK(std::abs(sol.pobj - sol.dobj) <= 1e-6);
  check_complementarity(pb.build(), sol);
}

TEST_CASE("qp-style epigraph: projection onto a line") {
  // min r st ||(2(x - a), r - 1)|| <= r + 1  (r >= |x - a|^2), x = 3; a = 1
  ProblemBuilder pb;
  const int x = pb.add_var(0.0);
  const int r = pb.add_var(1.0);
  pb.equality(LinExpr(-3.0).add(x, 1.0));
  pb.second_order({LinExpr(1.0).add(r, 1.0),
                   LinExpr(-2.0).add(x, 2.0),
                   LinExpr(-1.0).add(r, 1.0)});
  const ConicSolution sol = solve(pb.build());
  REQUIRE(sol.status == Status::Optimal);
  CHECK(sol.x(r) == doctest::Approx(4.0).epsilon(1e-6));
}

TEST_CASE("infeasible problem yields a Farkas certificate") {
  // x >= 1 and -x >= 0 cannot hold together
  ProblemBuilder pb;
  const int x = pb.add_var(1.0);
  pb.nonneg(LinExpr(-1.0).add(x, 1.0));
  pb.nonneg(LinExpr(x, -1.0));
  const ConicProblem p = pb.build();
  const ConicSolution sol = solve(p);
  REQUIRE(sol.status == Status::Infeasible);
  // certificate: z in K*, b'y + h'z = -1, ||A'y + G'z|| small
  const double ct = p.cone_rhs.dot(sol.z);
  CHECK(ct == doctest::Approx(-1.0).epsilon(1e-6));
  const VectorXd res = p.cone_mat.transpose() * sol.z;
  CHECK(res.lpNorm<Eigen::Infinity>() <= 1e-7 * std::max(1.0, sol.z.lpNorm<Eigen::Infinity>()));
  CHECK((sol.z.array() >= -1e-12).all());
}

TEST_CASE("unbounded problem detected") {
  ProblemBuilder pb;
  const int x = pb.add_var(-1.0);
  pb.nonneg(LinExpr(x, 1.0));
  const ConicSolution sol = solve(pb.build());
  REQUIRE(sol.status == Status::Unbounded);
  CHECK(sol.x(x) > 0.0);
}

TEST_CASE("mixed cones random instances agree with penalty-free evaluation") {
  // min c1*t + c2*u  st  ||(x - a)|| <= t  (dim 3 SOC), u^th v0^(1-th) >= |w0|,
  // with x free and pinned by equality x = b. Optimal: t = ||b - a||,
  // u = (|w0| / v0^(1-th))^(1/th).
  hut::RngStream rng(202, 0);
  for (int trial = 0; trial < 25; ++trial) {
    const double a1 = 2.0 * rng.uniform() - 1.0, a2 = 2.0 * rng.uniform() - 1.0;
    const double b1 = 2.0 * rng.uniform() - 1.0, b2 = 2.0 * rng.uniform() - 1.0;
    const double th = 0.15 + 0.7 * rng.uniform();
    const double v0 = 0.5 + rng.uniform(), w0 = 0.1 + rng.uniform();
    const double c1 = 0.5 + rng.uniform(), c2 = 0.5 + rng.uniform();

    ProblemBuilder pb;
    const int x1 = pb.add_var(0.0), x2 = pb.add_var(0.0);
    const int t = pb.add_var(c1), u = pb.add_var(c2);
    pb.equality(LinExpr(-b1).add(x1, 1.0));
    pb.equality(LinExpr(-b2).add(x2, 1.0));
    pb.second_order({LinExpr(t, 1.0), LinExpr(-a1).add(x1, 1.0), LinExpr(-a2).add(x2, 1.0)});
    pb.power3(LinExpr(u, 1.0), LinExpr(v0), LinExpr(w0), th);
    const ConicProblem p = pb.build();
    const ConicSolution sol = solve(p, SolverOptions{1e-8, 1e-8, 200});
    REQUIRE(sol.status == Status::Optimal);
    const double t_expect = std::hypot(b1 - a1, b2 - a2);
    const double u_expect = std::pow(w0 / std::pow(v0, 1.0 - th), 1.0 / th);
    CHECK(sol.x(t) == doctest::Approx(t_expect).epsilon(1e-6));
    CHECK(sol.x(u) == doctest::Approx(u_expect).epsilon(1e-6));
    check_complementarity(p, sol);
  }
}

TEST_CASE("deterministic: identical problems give identical iterates") {
  ProblemBuilder pb;
  const int x = pb.add_var(1.0);
  const int y = pb.add_var(0.5);
  pb.nonneg(LinExpr(-1.0).add(x, 1.0).add(y, 0.3));
  pb.second_order({LinExpr(2.0).add(y, 1.0), LinExpr(x, 1.0), LinExpr(0.7)});
  const ConicProblem p = pb.build();
  const ConicSolution a = solve(p);
  const ConicSolution b = solve(p);
  REQUIRE(a.status == b.status);
  CHECK((a.x - b.x).norm() == 0.0);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("problem validation rejects malformed cones") {
  ConicProblem p;
  p.c = VectorXd::Ones(1);
  p.eq_mat.resize(0, 1);
  p.eq_rhs.resize(0);
  p.cone_mat.resize(3, 1);
  p.cone_rhs = VectorXd::Zero(3);
  p.cones = {Cone{ConeKind::Power3, 3, 1.7}};
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);
  p.cones = {Cone{ConeKind::SecondOrder, 2, 0.0}};
  CHECK_THROWS_AS(p.validate(), std::invalid_argument);  // dims do not sum
}

}  // TEST_SUITE
