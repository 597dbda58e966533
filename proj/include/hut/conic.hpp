#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <vector>

namespace hut::conic {

enum class ConeKind {
  NonNegative,  // s_i >= 0 elementwise
  SecondOrder,  // s_0 >= ||s_1..s_{d-1}||_2
  Power3,       // s_0^theta s_1^(1-theta) >= |s_2|, s_0, s_1 >= 0
};

struct Cone {
  ConeKind kind = ConeKind::NonNegative;
  int dim = 1;        // Power3 cones always have dim 3
  double theta = 0.0; // exponent for Power3, in (0,1)
};

/// min c'x  s.t.  A x = b,  G x + s = h,  s in K1 x ... x Kq.
struct ConicProblem {
  Eigen::VectorXd c;
  Eigen::SparseMatrix<double> eq_mat;    // A (may have zero rows)
  Eigen::VectorXd eq_rhs;                // b
  Eigen::SparseMatrix<double> cone_mat;  // G
  Eigen::VectorXd cone_rhs;              // h
  std::vector<Cone> cones;

  int num_vars() const { return static_cast<int>(c.size()); }
  int num_eq() const { return static_cast<int>(eq_rhs.size()); }
  int cone_dim() const { return static_cast<int>(cone_rhs.size()); }

  void validate() const;  // throws std::invalid_argument on inconsistency
};

enum class Status { Optimal, Infeasible, Unbounded, MaxIter };

const char* to_string(Status s);

struct ConicSolution {
  Eigen::VectorXd x;  // primal
  Eigen::VectorXd y;  // equality duals
  Eigen::VectorXd z;  // cone duals, in the dual cone
  Eigen::VectorXd s;  // cone slacks
  Status status = Status::MaxIter;
  double gap = 0.0;       // relative duality gap at exit
  double primal_res = 0.0;
  double dual_res = 0.0;
  double pobj = 0.0;
  double dobj = 0.0;
  int iterations = 0;
};

struct SolverOptions {
  double gap_tol = 1e-7;
  double feas_tol = 1e-7;
  int max_iter = 200;
  bool trace = false;  // per-iteration diagnostics on stderr
};

ConicSolution solve(const ConicProblem& p, const SolverOptions& opt = {});

/// Affine expression constant + sum coef_j x_j used by ProblemBuilder.
struct LinExpr {
  double constant = 0.0;
  std::vector<std::pair<int, double>> terms;

  LinExpr() = default;
  /*implicit*/ LinExpr(double c) : constant(c) {}
  LinExpr(int var, double coef) { terms.emplace_back(var, coef); }
  LinExpr& add(int var, double coef) {
    terms.emplace_back(var, coef);
    return *this;
  }
  LinExpr& operator+=(const LinExpr& o);
};

/// Incremental construction of a ConicProblem. Rows are expressions: an
/// equality pins expr == 0, a cone constraint states that the stacked
/// expression values form a member of the cone.
class ProblemBuilder {
 public:
  explicit ProblemBuilder(int n_vars = 0) : n_(n_vars), c_(n_vars, 0.0) {}

  int add_var(double obj_coef = 0.0);
  void set_objective(int var, double coef);
  int num_vars() const { return n_; }

  void equality(const LinExpr& expr);                    // expr == 0
  void nonneg(const LinExpr& expr);                      // expr >= 0
  void second_order(const std::vector<LinExpr>& rows);   // rows in SOC
  void power3(const LinExpr& x0, const LinExpr& x1, const LinExpr& x2,
              double theta);

  ConicProblem build() const;

 private:
  void cone_rows(const std::vector<LinExpr>& rows, Cone cone);

  int n_ = 0;
  std::vector<double> c_;
  std::vector<Eigen::Triplet<double>> eq_t_, g_t_;
  std::vector<double> b_, h_;
  std::vector<Cone> cones_;
};

/// Barrier internals, exposed for the derivative checks in the test suite.
namespace detail {
double barrier_value(const Cone& c, const Eigen::VectorXd& s);
Eigen::VectorXd barrier_gradient(const Cone& c, const Eigen::VectorXd& s);
Eigen::MatrixXd barrier_hessian(const Cone& c, const Eigen::VectorXd& s);
bool in_cone(const Cone& c, const Eigen::VectorXd& s);
bool in_dual_cone(const Cone& c, const Eigen::VectorXd& z);
}  // namespace detail

}  // namespace hut::conic
