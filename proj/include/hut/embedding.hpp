#pragma once

#include "hut/conic.hpp"
#include "hut/types.hpp"

namespace hut {

/// Real embedding of the stacked beamformers inside a conic variable vector:
/// user n occupies 2*n_antennas consecutive slots, real parts first.
struct WLayout {
  int offset = 0;
  int n_antennas = 0;

  int re(int user, int i) const { return offset + 2 * n_antennas * user + i; }
  int im(int user, int i) const { return offset + 2 * n_antennas * user + n_antennas + i; }
  int size(int n_users) const { return 2 * n_antennas * n_users; }
};

/// scale * Re(h^H w_user) as a linear expression over the embedding.
inline conic::LinExpr re_inner(const WLayout& lay, const cvec& h, int user,
                               double scale = 1.0) {
  conic::LinExpr e;
  for (int i = 0; i < lay.n_antennas; ++i) {
    e.add(lay.re(user, i), scale * h(i).real());
    e.add(lay.im(user, i), scale * h(i).imag());
  }
  return e;
}

/// scale * Im(h^H w_user).
inline conic::LinExpr im_inner(const WLayout& lay, const cvec& h, int user,
                               double scale = 1.0) {
  conic::LinExpr e;
  for (int i = 0; i < lay.n_antennas; ++i) {
    e.add(lay.im(user, i), scale * h(i).real());
    e.add(lay.re(user, i), -scale * h(i).imag());
  }
  return e;
}

/// All embedding coordinates, scaled; used for stacked-norm cones.
inline void append_w_entries(std::vector<conic::LinExpr>& rows, const WLayout& lay,
                             int n_users, double scale = 1.0) {
  for (int n = 0; n < n_users; ++n)
    for (int i = 0; i < 2 * lay.n_antennas; ++i)
      rows.emplace_back(lay.offset + 2 * lay.n_antennas * n + i, scale);
}

inline cmat extract_w(const WLayout& lay, const Eigen::VectorXd& x, int n_users) {
  cmat w(lay.n_antennas, n_users);
  for (int n = 0; n < n_users; ++n)
    for (int i = 0; i < lay.n_antennas; ++i)
      w(i, n) = cplx(x(lay.re(n, i)), x(lay.im(n, i)));
  return w;
}

}  // namespace hut
