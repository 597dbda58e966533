#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace hut {

using cvec = Eigen::VectorXcd;
using cmat = Eigen::MatrixXcd;
using rvec = Eigen::VectorXd;
using cplx = std::complex<double>;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

/// Thrown on malformed configs, dimension mismatches and bad arguments.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Static system parameters. Powers in mW, prices in cents/mW, SINR targets
/// stored linear (configs take dB and convert once at parse time).
struct SystemConfig {
  int n_links = 3;      // N
  int n_antennas = 4;   // N_T
  rvec noise_power;     // sigma_n^2 [mW]
  double pa_efficiency = 1.0;    // psi in (0,1]
  double sp_base_power = 115.0;  // P_sp,b [mW]
  double max_tx_power = 200.0;   // P^max [mW]
  rvec sinr_target;     // Gamma_n,req, linear
  rvec mcs_b;           // b_n [dB]
  rvec mcs_c;           // c_n [1/dB]
  double pathloss_exp = 3.0;  // chi
  rvec link_distance;   // d_n [m]
  rvec arrival_mean;    // u_n,req in [0,1]
  double control_v = 0.001;   // V
  double sabf_tol = 2e-4;     // eps_stop for both iterative solvers
  int sabf_max_iter = 50;     // T^max

  /// Table I values: N=3, N_T=4, sigma^2=1e-3 mW, P_sp,b=115 mW,
  /// P^max=200 mW, Gamma=2 dB, u=0.3, b=20, c=0.451, chi=3, d=10 m.
  static SystemConfig defaults();

  void validate() const;  // throws ConfigError
};

/// Complex channel vectors for one frame; column n is h_n (length N_T).
struct ChannelState {
  cmat h;  // N_T x N

  int n_links() const { return static_cast<int>(h.cols()); }
  void validate(const SystemConfig& cfg) const;
};

/// Harvested energy and grid prices in effect for one frame.
struct EnergyPriceState {
  double harvest = 0.0;     // E_hav [mW]
  double buy_price = 0.0;   // a_b [cents/mW]
  double sell_price = 0.0;  // a_s [cents/mW]

  void validate() const;  // a_b >= a_s > 0, E_hav >= 0
};

enum class SolveStatus { Solved, Infeasible, Fallback };

const char* to_string(SolveStatus s);

/// Per-frame beamforming decision; column n of w is w_n (sqrt(mW) amplitude).
struct BeamformingSolution {
  cmat w;  // N_T x N
  SolveStatus status = SolveStatus::Infeasible;
  int iterations = 0;
  double objective = 0.0;  // GEWPR value (Eq. 18a form) when meaningful

  double tx_power() const { return w.squaredNorm(); }
};

/// Normalized traffic backlogs q_n; nonnegative by construction.
struct QueueState {
  rvec q;

  static QueueState zeros(int n) {
    QueueState s;
    s.q = rvec::Zero(n);
    return s;
  }
  static QueueState constant(int n, double v) {
    QueueState s;
    s.q = rvec::Constant(n, v);
    return s;
  }
};

}  // namespace hut
