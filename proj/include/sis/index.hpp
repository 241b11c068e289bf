#pragma once
// Safety-index templates phi = phi0 + k_1 phi0' + ... + k_n phi0^(n), their
// Lie derivatives along the lifted dynamics, and the closed-form worst-case
// phi-dot over the control box.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "sis/model.hpp"
#include "sis/polyalg.hpp"

namespace sis {

inline Poly lie_drift(const SubstitutedSystem& sys, const Poly& p) {
  Poly r(sys.nz);
  for (int v = 0; v < sys.nz; ++v) r = add(r, mul(diff(p, v), sys.f[v]));
  return r;
}

inline std::vector<Poly> lie_control(const SubstitutedSystem& sys,
                                     const Poly& p) {
  std::vector<Poly> out(sys.nu, Poly(sys.nz));
  for (int i = 0; i < sys.nu; ++i)
    for (int v = 0; v < sys.nz; ++v)
      out[i] = add(out[i], mul(diff(p, v), sys.g[v][i]));
  return out;
}

struct IndexTemplate {
  const SubstitutedSystem* sys = nullptr;
  int order = 1;
  bool per_joint = false;
  // phi0, phi0^(1), ..., phi0^(order): repeated drift Lie derivatives.
  std::vector<Poly> phi0_chain;
  // Polynomials multiplied by each parameter k_i; for the shared template
  // this is the chain tail, for per-joint mode the joint-wise split of phi0'.
  std::vector<Poly> theta_basis;

  int theta_dim() const { return (int)theta_basis.size(); }
};

inline IndexTemplate make_template(const SubstitutedSystem& sys, int order,
                                   bool per_joint = false) {
  if (order < 1 || order > 2)
    throw std::invalid_argument("make_template: order must be 1 or 2");
  IndexTemplate t;
  t.sys = &sys;
  t.order = order;
  t.per_joint = per_joint;
  t.phi0_chain.push_back(sys.phi0);
  for (int i = 1; i <= order; ++i)
    t.phi0_chain.push_back(lie_drift(sys, t.phi0_chain.back()));
  // Relative degree: the control must not appear before phi0^(order), and
  // must appear in its derivative.
  for (int i = 0; i < order; ++i)
    for (const Poly& lg : lie_control(sys, t.phi0_chain[i]))
      if (!lg.is_zero())
        throw std::invalid_argument(
            "make_template: control acts on phi0 derivative below the "
            "template order (relative degree violation)");
  bool acts = false;
  for (const Poly& lg : lie_control(sys, t.phi0_chain[order]))
    if (!lg.is_zero()) acts = true;
  if (!acts)
    throw std::invalid_argument(
        "make_template: control does not act at the template order");

  if (per_joint) {
    if (order != 1)
      throw std::invalid_argument("make_template: per-joint mode needs order 1");
    if (sys.coord_groups.empty())
      throw std::invalid_argument(
          "make_template: system has no coordinate groups for per-joint mode");
    for (const auto& group : sys.coord_groups) {
      Poly d(sys.nz);
      for (int v : group) d = add(d, mul(diff(sys.phi0, v), sys.f[v]));
      t.theta_basis.push_back(d);
    }
  } else {
    for (int i = 1; i <= order; ++i) t.theta_basis.push_back(t.phi0_chain[i]);
  }
  return t;
}

struct IndexInstance {
  std::vector<double> theta;  // empty when symbolic
  bool symbolic = false;
  int nz = 0, nu = 0, ntheta = 0;
  Poly phi, Lf;           // over nz vars (nz + ntheta when symbolic)
  std::vector<Poly> Lg;   // length nu
  std::vector<double> u_min, u_max;
};

namespace detail {
inline IndexInstance build_index_impl(const IndexTemplate& t,
                                      const std::vector<double>* theta) {
  const SubstitutedSystem& sys = *t.sys;
  IndexInstance idx;
  idx.nz = sys.nz;
  idx.nu = sys.nu;
  idx.ntheta = t.theta_dim();
  idx.u_min = sys.u_min;
  idx.u_max = sys.u_max;

  if (theta) {
    if ((int)theta->size() != t.theta_dim())
      throw std::invalid_argument("build_index: theta length mismatch");
    for (double k : *theta)
      if (!(k > 0))
        throw std::invalid_argument("build_index: parameters must be positive");
    if (t.order == 2 && !t.per_joint) {
      const double k1 = (*theta)[0], k2 = (*theta)[1];
      if (k1 * k1 < 4.0 * k2)
        throw std::invalid_argument(
            "build_index: 1 + k1 s + k2 s^2 must have negative real roots "
            "(k1^2 >= 4 k2)");
    }
    idx.theta = *theta;
    idx.phi = sys.phi0;
    for (int i = 0; i < t.theta_dim(); ++i)
      idx.phi = add(idx.phi, scale(t.theta_basis[i], (*theta)[i]));
    idx.Lf = lie_drift(sys, idx.phi);
    idx.Lg = lie_control(sys, idx.phi);
  } else {
    idx.symbolic = true;
    const int nv = sys.nz + idx.ntheta;
    idx.phi = pad_vars(sys.phi0, nv);
    for (int i = 0; i < t.theta_dim(); ++i)
      idx.phi = add(idx.phi, mul(Poly::variable(nv, sys.nz + i),
                                 pad_vars(t.theta_basis[i], nv)));
    idx.Lf = Poly(nv);
    idx.Lg.assign(sys.nu, Poly(nv));
    for (int v = 0; v < sys.nz; ++v) {
      Poly d = diff(idx.phi, v);
      idx.Lf = add(idx.Lf, mul(d, pad_vars(sys.f[v], nv)));
      for (int i = 0; i < sys.nu; ++i)
        idx.Lg[i] = add(idx.Lg[i], mul(d, pad_vars(sys.g[v][i], nv)));
    }
  }
  return idx;
}
}  // namespace detail

inline IndexInstance build_index(const IndexTemplate& t,
                                 const std::vector<double>& theta) {
  return detail::build_index_impl(t, &theta);
}

// Parameters left symbolic as trailing variables nz .. nz+ntheta-1.
inline IndexInstance build_index_symbolic(const IndexTemplate& t) {
  return detail::build_index_impl(t, nullptr);
}

// Exact minimum of phi-dot over the control orthotope: phi-dot is affine in
// u, so each dimension independently picks the box end selected by the sign
// of its Lg coefficient (u_min when Lg >= 0, u_max otherwise).
inline double min_phi_dot(const IndexInstance& idx,
                          const std::vector<double>& z) {
  if (idx.symbolic)
    throw std::invalid_argument("min_phi_dot: index has symbolic parameters");
  double v = idx.Lf.eval(z);
  for (int i = 0; i < idx.nu; ++i) {
    const double lg = idx.Lg[i].eval(z);
    v += lg * (lg >= 0 ? idx.u_min[i] : idx.u_max[i]);
  }
  return v;
}

}  // namespace sis
