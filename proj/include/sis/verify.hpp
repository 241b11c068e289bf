#pragma once
// Independent brute-force verification of a synthesized safety index: zero
// level-set sampling, worst-case phi-dot scan, the safe-control QP, and
// adversarial closed-loop rollouts with the paper-style statistics.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

#include "sis/index.hpp"
#include "sis/model.hpp"
#include "sis/nlp.hpp"

namespace sis {

struct ManifoldSamples {
  std::vector<std::vector<double>> states;  // lifted states with |phi| <= tol
  bool empty_manifold = false;  // budget spent, nothing found: phi = 0 does
                                // not intersect X (as far as sampling can tell)
};

namespace detail {

inline bool in_state_box(const SubstitutedSystem& sys,
                         const std::vector<double>& z, double slack = 1e-10) {
  for (const Poly& s : sys.state_ineqs)
    if (s.eval(z) < -slack) return false;
  return true;
}

}  // namespace detail

// Draw lifted states on the phi = 0 manifold inside X. Raw coordinates are
// sampled uniformly in their boxes; phi composed with the lift is affine in
// a velocity-like raw coordinate for the shipped order-1 templates, so that
// coordinate is solved in closed form (affinity is checked numerically, with
// rejection-sampling in the band |phi| <= tol as fallback).
inline ManifoldSamples sample_manifold(const SubstitutedSystem& sys,
                                       const IndexInstance& idx, int n,
                                       double tol, std::mt19937_64& rng) {
  if (n < 0) throw std::invalid_argument("sample_manifold: n must be >= 0");
  ManifoldSamples out;
  if (n == 0) return out;

  auto phi_at = [&](const std::vector<double>& raw) {
    return idx.phi.eval(sys.lift(raw));
  };
  const long budget = std::max<long>(200L * n, 20000L);
  long attempts = 0;
  std::vector<double> raw(sys.raw_dim);
  while ((int)out.states.size() < n && attempts < budget) {
    ++attempts;
    for (int i = 0; i < sys.raw_dim; ++i) {
      auto [lo, hi] = sys.raw_box[i];
      raw[i] = lo + (hi - lo) * sis::detail::uniform01(rng);
    }
    bool solved = false;
    for (int i = sys.raw_dim - 1; i >= 0 && !solved; --i) {
      auto [lo, hi] = sys.raw_box[i];
      auto probe = raw;
      probe[i] = lo;
      double flo;
      try {
        flo = phi_at(probe);
        probe[i] = hi;
        const double fhi = phi_at(probe);
        probe[i] = 0.5 * (lo + hi);
        const double fmid = phi_at(probe);
        const double scale =
            std::max({1.0, std::fabs(flo), std::fabs(fhi)});
        if (std::fabs(fmid - 0.5 * (flo + fhi)) > 1e-9 * scale) continue;
        const double slope = (fhi - flo) / (hi - lo);
        if (std::fabs(slope) < 1e-12) continue;
        const double t = lo - flo / slope;
        if (t < lo || t > hi) continue;
        probe[i] = t;
      } catch (const std::exception&) {
        break;  // lift undefined at this raw draw
      }
      const auto z = sys.lift(probe);
      if (std::fabs(idx.phi.eval(z)) > tol) continue;
      if (!detail::in_state_box(sys, z)) continue;
      out.states.push_back(z);
      solved = true;
    }
    if (solved) continue;
    // Fallback: accept the raw draw itself if it already sits in the band.
    try {
      const auto z = sys.lift(raw);
      if (std::fabs(idx.phi.eval(z)) <= tol && detail::in_state_box(sys, z))
        out.states.push_back(z);
    } catch (const std::exception&) {
    }
  }
  out.empty_manifold = out.states.empty();
  return out;
}

struct VerifyConfig {
  long n_samples = 10000;
  double tol = 1e-9;           // band tolerance |phi| <= tol for samples
  double margin_floor = 1e-9;  // require worst min phi-dot < -margin_floor
  uint64_t seed = 7;
};

struct VerificationReport {
  bool valid = false;
  bool empty_manifold = false;  // vacuously valid: phi = 0 never met inside X
  long samples = 0;
  double worst_margin = -std::numeric_limits<double>::infinity();
  std::vector<double> worst_state;
  double band_tolerance = 0.0;
};

// The Problem-1 oracle: scan the phi = 0 manifold inside X and require the
// closed-form worst-case phi-dot to be strictly negative everywhere.
inline VerificationReport verify_index(const SubstitutedSystem& sys,
                                       const IndexTemplate& t,
                                       const std::vector<double>& theta,
                                       const VerifyConfig& cfg = {}) {
  const IndexInstance idx = build_index(t, theta);
  std::mt19937_64 rng(cfg.seed);
  const auto samples =
      sample_manifold(sys, idx, (int)cfg.n_samples, cfg.tol, rng);
  VerificationReport rep;
  rep.band_tolerance = cfg.tol;
  rep.samples = (long)samples.states.size();
  if (samples.empty_manifold) {
    rep.empty_manifold = true;
    rep.valid = true;  // vacuous: no state ever activates the index
    return rep;
  }
  for (const auto& z : samples.states) {
    const double m = min_phi_dot(idx, z);
    if (m > rep.worst_margin) {
      rep.worst_margin = m;
      rep.worst_state = z;
    }
  }
  rep.valid = rep.worst_margin < -cfg.margin_floor;
  return rep;
}

struct SsaOptions {
  double activation_threshold = 0.0;  // enforce the constraint when phi >= this
  double eta = 0.0;                   // require phi-dot <= -eta
};

struct SsaResult {
  std::vector<double> u;
  bool constraint_active = false;  // the phi-dot constraint shaped the control
  bool qp_infeasible = false;      // no box control meets the constraint
  bool saturated = false;          // some component pinned at its box end
};

inline std::vector<double> clamp_to_box(const std::vector<double>& u,
                                        const std::vector<double>& lo,
                                        const std::vector<double>& hi) {
  std::vector<double> out(u.size());
  for (size_t i = 0; i < u.size(); ++i) out[i] = std::clamp(u[i], lo[i], hi[i]);
  return out;
}

// Safe-control quadratic projection: minimize ||u - u_ref||^2 over the box
// subject to Lf + Lg u <= -eta whenever phi >= activation_threshold. The
// single dual multiplier lambda >= 0 gives u(lambda) = clamp(u_ref - lambda
// Lg); the constraint value is monotone non-increasing in lambda, so the
// optimum is found by bisection. When even the phi-dot-minimizing corner
// violates the constraint the corner is returned with the infeasible flag.
inline SsaResult ssa_control(const IndexInstance& idx,
                             const std::vector<double>& z,
                             const std::vector<double>& u_ref,
                             const SsaOptions& opt = {}) {
  SsaResult res;
  const auto& lo = idx.u_min;
  const auto& hi = idx.u_max;
  if (idx.phi.eval(z) < opt.activation_threshold) {
    res.u = clamp_to_box(u_ref, lo, hi);
    return res;
  }
  const double lf = idx.Lf.eval(z);
  std::vector<double> lg(idx.nu);
  for (int i = 0; i < idx.nu; ++i) lg[i] = idx.Lg[i].eval(z);

  auto u_of = [&](double lambda) {
    std::vector<double> u(idx.nu);
    for (int i = 0; i < idx.nu; ++i)
      u[i] = std::clamp(u_ref[i] - lambda * lg[i], lo[i], hi[i]);
    return u;
  };
  auto cval = [&](const std::vector<double>& u) {
    double v = lf;
    for (int i = 0; i < idx.nu; ++i) v += lg[i] * u[i];
    return v;
  };

  std::vector<double> u0 = u_of(0.0);
  if (cval(u0) <= -opt.eta) {
    res.u = std::move(u0);
    return res;
  }
  res.constraint_active = true;

  // The corner minimizing phi-dot bounds what any lambda can reach.
  std::vector<double> corner(idx.nu);
  for (int i = 0; i < idx.nu; ++i) corner[i] = lg[i] >= 0 ? lo[i] : hi[i];
  if (cval(corner) > -opt.eta) {
    res.u = corner;
    res.qp_infeasible = true;
    res.saturated = true;
    return res;
  }

  double llo = 0.0, lhi = 1.0;
  while (cval(u_of(lhi)) > -opt.eta) {
    llo = lhi;
    lhi *= 2.0;
    if (lhi > 1e14) break;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (llo + lhi);
    if (cval(u_of(mid)) > -opt.eta)
      llo = mid;
    else
      lhi = mid;
  }
  res.u = u_of(lhi);
  for (int i = 0; i < idx.nu; ++i)
    if (res.u[i] <= lo[i] || res.u[i] >= hi[i]) res.saturated = true;
  return res;
}

// The most dangerous reference: per-dimension bang-bang maximizing phi-dot
// (ties Lg = 0 resolve to u_min; the value is unaffected).
inline std::vector<double> adversarial_ref(const IndexInstance& idx,
                                           const std::vector<double>& z) {
  std::vector<double> u(idx.nu);
  for (int i = 0; i < idx.nu; ++i)
    u[i] = idx.Lg[i].eval(z) > 0 ? idx.u_max[i] : idx.u_min[i];
  return u;
}

struct RolloutStats {
  long steps = 0;
  double dt = 0.0;
  long violations = 0;         // steps with phi0 > violation_tol
  double min_phi0_margin = std::numeric_limits<double>::infinity();  // of -phi0
  double min_distance = std::numeric_limits<double>::infinity();
  long saturation_steps = 0;   // constraint active at a box corner
  long infeasible_qp_steps = 0;
  bool aborted = false;        // lift failed mid-trajectory; stats are partial
};

struct TrajectoryPoint {
  double time;
  std::vector<double> raw;
  std::vector<double> u;
  double phi0, phi;
};

struct SimulateOptions {
  double violation_tol = 1e-6;
  // Discrete-time safety margin: with zero-order-hold control at step dt the
  // bare phi >= 0 / phi-dot <= 0 rule holds phi at its one-step overshoot
  // (~max|phi-dot| * dt) instead of recovering, so rollouts activate the
  // constraint early and demand strict decrease.
  SsaOptions ssa{-0.05, 0.1};
  bool record_trajectory = false;
};

struct RolloutResult {
  RolloutStats stats;
  std::vector<TrajectoryPoint> trajectory;
};

// Closed-loop rollout with fixed-step 4th-order integration of the raw
// dynamics; the state is re-lifted every step so the lift equalities hold
// exactly. The controller maps a lifted state to a reference control and is
// wrapped by the safe-control projection.
inline RolloutResult simulate(
    const SubstitutedSystem& sys, const IndexInstance& idx,
    const std::vector<double>& x0_raw, long steps, double dt,
    const std::function<std::vector<double>(const IndexInstance&,
                                            const std::vector<double>&)>&
        controller,
    const SimulateOptions& opt = {}) {
  RolloutResult out;
  out.stats.dt = dt;
  std::vector<double> x = x0_raw;
  {
    const auto z0 = sys.lift(x);
    if (sys.phi0.eval(z0) > opt.violation_tol)
      throw std::invalid_argument("simulate: initial state violates phi0 <= 0");
  }
  for (long s = 0; s < steps; ++s) {
    std::vector<double> z;
    try {
      z = sys.lift(x);
    } catch (const std::exception&) {
      out.stats.aborted = true;
      break;
    }
    const auto u_ref = controller(idx, z);
    const SsaResult sr = ssa_control(idx, z, u_ref, opt.ssa);
    const double p0 = sys.phi0.eval(z);
    out.stats.min_phi0_margin = std::min(out.stats.min_phi0_margin, -p0);
    if (sys.distance_fn)
      out.stats.min_distance =
          std::min(out.stats.min_distance, sys.distance_fn(z));
    if (p0 > opt.violation_tol) ++out.stats.violations;
    if (sr.qp_infeasible) ++out.stats.infeasible_qp_steps;
    if (sr.constraint_active && sr.saturated) ++out.stats.saturation_steps;
    if (opt.record_trajectory)
      out.trajectory.push_back({s * dt, x, sr.u, p0, idx.phi.eval(z)});

    // RK4 with zero-order-hold control.
    const auto& u = sr.u;
    auto fd = [&](const std::vector<double>& xs) { return sys.raw_deriv(xs, u); };
    const auto k1 = fd(x);
    auto xk = x;
    for (size_t i = 0; i < x.size(); ++i) xk[i] = x[i] + 0.5 * dt * k1[i];
    const auto k2 = fd(xk);
    for (size_t i = 0; i < x.size(); ++i) xk[i] = x[i] + 0.5 * dt * k2[i];
    const auto k3 = fd(xk);
    for (size_t i = 0; i < x.size(); ++i) xk[i] = x[i] + dt * k3[i];
    const auto k4 = fd(xk);
    for (size_t i = 0; i < x.size(); ++i)
      x[i] += dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    ++out.stats.steps;
  }
  return out;
}

// Rollout initial state: uniform over the raw box, rejected to phi0 <= 0 and
// phi <= 0 (the forward-invariant set of the verified index).
inline std::vector<double> sample_rollout_start(const SubstitutedSystem& sys,
                                                const IndexInstance& idx,
                                                std::mt19937_64& rng,
                                                long budget = 100000) {
  std::vector<double> raw(sys.raw_dim);
  for (long a = 0; a < budget; ++a) {
    for (int i = 0; i < sys.raw_dim; ++i) {
      auto [lo, hi] = sys.raw_box[i];
      raw[i] = lo + (hi - lo) * sis::detail::uniform01(rng);
    }
    try {
      const auto z = sys.lift(raw);
      if (!detail::in_state_box(sys, z)) continue;
      if (sys.phi0.eval(z) <= 0 && idx.phi.eval(z) <= 0) return raw;
    } catch (const std::exception&) {
    }
  }
  throw std::runtime_error("sample_rollout_start: no admissible start found");
}

struct RunOutcome {
  SolveStatus status;
  bool oracle_valid = false;
  double wall_time_seconds = 0.0;
  std::vector<double> theta;
};

struct BatchSummary {
  long runs = 0;
  double mean_time_seconds = 0.0;
  double validness_pct = 0.0;  // feasible AND oracle-valid
  std::vector<double> theta_variance;  // across feasible runs
};

inline BatchSummary batch_stats(const std::vector<RunOutcome>& runs) {
  if (runs.empty()) throw std::invalid_argument("batch_stats: empty run list");
  BatchSummary s;
  s.runs = (long)runs.size();
  long valid = 0;
  std::vector<std::vector<double>> thetas;
  for (const auto& r : runs) {
    s.mean_time_seconds += r.wall_time_seconds;
    if (r.status == SolveStatus::feasible) {
      if (r.oracle_valid) ++valid;
      thetas.push_back(r.theta);
    }
  }
  s.mean_time_seconds /= (double)runs.size();
  s.validness_pct = 100.0 * (double)valid / (double)runs.size();
  if (!thetas.empty()) {
    const size_t nt = thetas[0].size();
    s.theta_variance.assign(nt, 0.0);
    for (size_t i = 0; i < nt; ++i) {
      double mean = 0.0;
      for (auto& th : thetas) mean += th[i];
      mean /= (double)thetas.size();
      for (auto& th : thetas)
        s.theta_variance[i] += (th[i] - mean) * (th[i] - mean);
      s.theta_variance[i] /= (double)thetas.size();
    }
  }
  return s;
}

}  // namespace sis
