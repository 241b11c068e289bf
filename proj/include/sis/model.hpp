#pragma once
// Lifted polynomial system builders: planar n-DOF arm against a half-plane
// wall and a 4-state unicycle against a point obstacle. A lifted system keeps
// the dynamics polynomial by trading trigonometric/radical terms for extra
// coordinates tied down by equality constraints (unit circles, distance and
// reciprocal relations).

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sis/polyalg.hpp"

namespace sis {

struct SubstitutedSystem {
  int nz = 0;       // lifted state dimension
  int nu = 0;       // control dimension
  int raw_dim = 0;  // raw state dimension

  std::vector<Poly> f;                 // lifted drift, length nz
  std::vector<std::vector<Poly>> g;    // lifted control map, nz x nu
  std::vector<Poly> equalities;        // ideal generators, each == 0 on lift
  std::vector<Poly> state_ineqs;       // S_i >= 0 describes X in lifted coords
  std::vector<double> u_min, u_max;    // control orthotope
  Poly phi0;                           // safety specification, lifted coords

  // Raw box used for sampling and simulation (per raw coordinate).
  std::vector<std::pair<double, double>> raw_box;
  // Raw-state vector field xdot = raw_deriv(x, u); used by the simulator.
  std::function<std::vector<double>(const std::vector<double>&,
                                    const std::vector<double>&)>
      raw_deriv;
  // Per-joint (or per-subsystem) lifted coordinate groups; enables the
  // per-joint safety-index parameterization.
  std::vector<std::vector<int>> coord_groups;
  // Geometric obstacle distance in meters at a lifted state (for reporting).
  std::function<double(const std::vector<double>&)> distance_fn;

  std::string name;

  std::vector<double> lift(const std::vector<double>& raw) const {
    return lift_fn(raw);
  }

  std::function<std::vector<double>(const std::vector<double>&)> lift_fn;
};

inline std::vector<double> lift(const SubstitutedSystem& sys,
                                const std::vector<double>& raw) {
  return sys.lift(raw);
}

// Planar serial arm with unit links and double-integrator joints. Lifted
// coordinates per joint i: (s_i, c_i, w_i) = (sin, cos, velocity) at indices
// (3i, 3i+1, 3i+2). The safety specification keeps the end-effector
// horizontal coordinate behind a wall at 0.5 * n_dof; the end-effector
// position is expanded with angle-sum identities over cumulative joint
// angles, so phi0 stays polynomial in the per-joint lifts.
inline SubstitutedSystem build_arm(int n_dof) {
  if (n_dof < 1 || n_dof > 14)
    throw std::invalid_argument("build_arm: n_dof must be in [1, 14]");
  SubstitutedSystem sys;
  const int n = n_dof;
  sys.nz = 3 * n;
  sys.nu = n;
  sys.raw_dim = 2 * n;
  sys.name = "arm" + std::to_string(n);

  auto S = [&](int i) { return Poly::variable(sys.nz, 3 * i); };
  auto C = [&](int i) { return Poly::variable(sys.nz, 3 * i + 1); };
  auto W = [&](int i) { return Poly::variable(sys.nz, 3 * i + 2); };

  sys.f.assign(sys.nz, Poly(sys.nz));
  sys.g.assign(sys.nz, std::vector<Poly>(sys.nu, Poly(sys.nz)));
  for (int i = 0; i < n; ++i) {
    sys.f[3 * i] = mul(C(i), W(i));                  // s_i' = c_i w_i
    sys.f[3 * i + 1] = scale(mul(S(i), W(i)), -1);   // c_i' = -s_i w_i
    sys.g[3 * i + 2][i] = Poly::constant(sys.nz, 1); // w_i' = u_i
    sys.equalities.push_back(add(add(mul(S(i), S(i)), mul(C(i), C(i))),
                                 Poly::constant(sys.nz, -1)));
    sys.coord_groups.push_back({3 * i, 3 * i + 1, 3 * i + 2});
  }

  // Joint box theta in [pi/3, 2pi/3], velocity in [-1, 1], encoded as
  // s >= sqrt(3)/2, s <= 1, |c| <= 1/2, 1 - w^2 >= 0. The redundant bounds
  // enlarge the cone available to the certificate search.
  const double root3_2 = std::sqrt(3.0) / 2.0;
  for (int i = 0; i < n; ++i) {
    sys.state_ineqs.push_back(add(S(i), Poly::constant(sys.nz, -root3_2)));
    sys.state_ineqs.push_back(add(scale(S(i), -1), Poly::constant(sys.nz, 1)));
    sys.state_ineqs.push_back(add(C(i), Poly::constant(sys.nz, 0.5)));
    sys.state_ineqs.push_back(add(scale(C(i), -1), Poly::constant(sys.nz, 0.5)));
    sys.state_ineqs.push_back(
        add(scale(mul(W(i), W(i)), -1), Poly::constant(sys.nz, 1)));
  }

  sys.u_min.assign(n, -1.0);
  sys.u_max.assign(n, 1.0);

  // phi0 = x_ee - 0.5 n, x_ee = sum_j cos(q_j), q_j = theta_1 + ... + theta_j.
  Poly cos_q = C(0), sin_q = S(0);
  Poly x_ee = cos_q;
  for (int j = 1; j < n; ++j) {
    Poly c2 = sub(mul(cos_q, C(j)), mul(sin_q, S(j)));
    Poly s2 = add(mul(sin_q, C(j)), mul(cos_q, S(j)));
    cos_q = c2;
    sin_q = s2;
    x_ee = add(x_ee, cos_q);
  }
  sys.phi0 = add(x_ee, Poly::constant(sys.nz, -0.5 * n));
  // Wall clearance: wall coordinate minus end-effector coordinate.
  const Poly phi0_copy = sys.phi0;
  sys.distance_fn = [phi0_copy](const std::vector<double>& z) {
    return -phi0_copy.eval(z);
  };

  for (int i = 0; i < n; ++i)
    sys.raw_box.push_back({M_PI / 3.0, 2.0 * M_PI / 3.0});
  for (int i = 0; i < n; ++i) sys.raw_box.push_back({-1.0, 1.0});

  sys.lift_fn = [n](const std::vector<double>& raw) {
    if ((int)raw.size() != 2 * n)
      throw std::invalid_argument("lift: raw state length mismatch");
    std::vector<double> z(3 * n);
    for (int i = 0; i < n; ++i) {
      z[3 * i] = std::sin(raw[i]);
      z[3 * i + 1] = std::cos(raw[i]);
      z[3 * i + 2] = raw[n + i];
    }
    return z;
  };
  sys.raw_deriv = [n](const std::vector<double>& x,
                      const std::vector<double>& u) {
    std::vector<double> dx(2 * n);
    for (int i = 0; i < n; ++i) {
      dx[i] = x[n + i];
      // joint velocity saturates at its physical limit; without this the
      // closed loop could leave the velocity box the certificate assumes
      dx[n + i] = u[i];
      if ((x[n + i] >= 1.0 && u[i] > 0.0) || (x[n + i] <= -1.0 && u[i] < 0.0))
        dx[n + i] = 0.0;
    }
    return dx;
  };
  return sys;
}

struct UnicycleParams {
  double d_min = 1.0;            // safety clearance, phi0 = d_min - d
  double d_lo = 0.5, d_hi = 10;  // distance box, multiples of d_min
  double v_lo = 0.2, v_hi = 2.0;
  double pos_box = 10.0;         // |dx|, |dy| bound, multiples of d_min
  double a_min = -1, a_max = 1;  // acceleration limits
  double w_min = -1, w_max = 1;  // angular velocity limits
};

// 4-state unicycle (dx, dy, v, heading) relative to a point obstacle, lifted
// to (dx, dy, v, s, c, d, r) where d is the obstacle distance and r = 1/d.
// The reciprocal lift keeps phi0 = d_min - d and its derivatives polynomial.
inline SubstitutedSystem build_unicycle(const UnicycleParams& params = {}) {
  if (params.d_min <= 0)
    throw std::invalid_argument("build_unicycle: d_min must be positive");
  if (params.d_lo <= 0)
    throw std::invalid_argument(
        "build_unicycle: distance box lower bound must be positive (r = 1/d "
        "is singular at d = 0)");
  if (params.d_lo >= params.d_hi || params.v_lo >= params.v_hi ||
      params.a_min >= params.a_max || params.w_min >= params.w_max ||
      params.pos_box <= 0)
    throw std::invalid_argument("build_unicycle: degenerate box");

  SubstitutedSystem sys;
  sys.nz = 7;
  sys.nu = 2;
  sys.raw_dim = 4;
  sys.name = "unicycle";
  const int DX = 0, DY = 1, V = 2, S = 3, C = 4, D = 5, R = 6;
  auto var = [&](int v) { return Poly::variable(sys.nz, v); };

  Poly radial = add(mul(var(DX), var(C)), mul(var(DY), var(S)));
  Poly ddot = mul(mul(radial, var(V)), var(R));  // d' = (dx c + dy s) v r

  sys.f.assign(sys.nz, Poly(sys.nz));
  sys.g.assign(sys.nz, std::vector<Poly>(sys.nu, Poly(sys.nz)));
  sys.f[DX] = mul(var(V), var(C));
  sys.f[DY] = mul(var(V), var(S));
  sys.f[D] = ddot;
  sys.f[R] = scale(mul(ddot, mul(var(R), var(R))), -1);  // r' = -d' r^2
  sys.g[V][0] = Poly::constant(sys.nz, 1);               // v' = a
  sys.g[S][1] = var(C);                                  // s' = c w
  sys.g[C][1] = scale(var(S), -1);                       // c' = -s w

  sys.equalities.push_back(
      add(add(mul(var(S), var(S)), mul(var(C), var(C))),
          Poly::constant(sys.nz, -1)));
  sys.equalities.push_back(
      sub(mul(var(D), var(D)),
          add(mul(var(DX), var(DX)), mul(var(DY), var(DY)))));
  sys.equalities.push_back(
      add(mul(var(D), var(R)), Poly::constant(sys.nz, -1)));
  // Derived identities r^2 (dx^2 + dy^2) = 1 (from d r = 1 and
  // d^2 = dx^2 + dy^2) and its product with s^2 + c^2 - 1. Both lie in the
  // ideal of the first three, but as explicit generators they put the
  // polynomial combinations that cancel the drift derivative within reach of
  // low-degree multipliers.
  Poly zr = add(mul(mul(var(R), var(R)),
                    add(mul(var(DX), var(DX)), mul(var(DY), var(DY)))),
                Poly::constant(sys.nz, -1));
  sys.equalities.push_back(zr);
  sys.equalities.push_back(mul(sys.equalities[0], zr));

  const double dm = params.d_min;
  const double dlo = params.d_lo * dm, dhi = params.d_hi * dm;
  const double B = params.pos_box * dm;
  auto box = [&](int v, double lo, double hi) {
    sys.state_ineqs.push_back(add(var(v), Poly::constant(sys.nz, -lo)));
    sys.state_ineqs.push_back(add(scale(var(v), -1), Poly::constant(sys.nz, hi)));
  };
  box(D, dlo, dhi);
  box(V, params.v_lo, params.v_hi);
  box(DX, -B, B);
  box(DY, -B, B);
  box(R, 1.0 / dhi, 1.0 / dlo);  // implied by the d box; enlarges the cone
  // Redundant facts the certificate search cannot derive on its own:
  // |s|, |c| <= 1 (from the unit circle) and the bearing bound
  // |(dx c + dy s) r| <= 1, i.e. |d'| <= v, which is Cauchy-Schwarz through
  // d^2 = dx^2 + dy^2 and d r = 1.
  auto one = Poly::constant(sys.nz, 1);
  sys.state_ineqs.push_back(add(var(S), one));
  sys.state_ineqs.push_back(sub(one, var(S)));
  sys.state_ineqs.push_back(add(var(C), one));
  sys.state_ineqs.push_back(sub(one, var(C)));
  Poly bearing = mul(radial, var(R));
  sys.state_ineqs.push_back(add(bearing, one));
  sys.state_ineqs.push_back(sub(one, bearing));
  // ... and its transverse companion |(dx s - dy c) r| <= 1, by the same
  // Cauchy-Schwarz argument applied to the tangential projection.
  Poly transverse =
      mul(sub(mul(var(DX), var(S)), mul(var(DY), var(C))), var(R));
  sys.state_ineqs.push_back(add(transverse, one));
  sys.state_ineqs.push_back(sub(one, transverse));

  sys.u_min = {params.a_min, params.w_min};
  sys.u_max = {params.a_max, params.w_max};

  sys.phi0 = add(scale(var(D), -1), Poly::constant(sys.nz, dm));
  sys.distance_fn = [](const std::vector<double>& z) { return z[5]; };

  sys.raw_box = {{-B, B}, {-B, B}, {params.v_lo, params.v_hi}, {-M_PI, M_PI}};
  sys.lift_fn = [](const std::vector<double>& raw) {
    if (raw.size() != 4)
      throw std::invalid_argument("lift: raw state length mismatch");
    const double d = std::hypot(raw[0], raw[1]);
    if (d < 1e-12)
      throw std::domain_error("lift: distance is zero, r = 1/d undefined");
    return std::vector<double>{raw[0],           raw[1], raw[2],
                               std::sin(raw[3]), std::cos(raw[3]),
                               d,                1.0 / d};
  };
  sys.raw_deriv = [vlo = params.v_lo, vhi = params.v_hi](
                      const std::vector<double>& x,
                      const std::vector<double>& u) {
    // the speed saturates at its physical limits; without this the closed
    // loop could leave the velocity box the certificate assumes
    double a = u[0];
    if ((x[2] >= vhi && a > 0.0) || (x[2] <= vlo && a < 0.0)) a = 0.0;
    return std::vector<double>{x[2] * std::cos(x[3]), x[2] * std::sin(x[3]),
                               a, u[1]};
  };
  return sys;
}

}  // namespace sis
