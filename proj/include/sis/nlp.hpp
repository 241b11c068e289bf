#pragma once
// Assembly of the synthesis feasibility program (find parameters Theta and
// per-sign-pattern multiplier vectors Omega_j with every Sylvester pivot of
// every pattern's Gram matrix strictly positive) and a multistart solver.
//
// The decision-to-constraint map is compiled once: each pattern's cone terms
// and zetas are expanded symbolically with the parameters as trailing
// variables, the monomial basis is frozen from the union of their supports,
// and every term becomes a sparse list of Gram-cell contributions whose
// coefficients are small polynomials in Theta. Evaluation at a numeric point
// is then pure linear algebra.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <future>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "sis/gram.hpp"
#include "sis/index.hpp"
#include "sis/model.hpp"
#include "sis/refute.hpp"

namespace sis {

enum class SolveStatus { feasible, infeasible, budget_exhausted };

inline const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::feasible: return "feasible";
    case SolveStatus::infeasible: return "infeasible";
    default: return "budget_exhausted";
  }
}

struct NlpConfig {
  int restarts = 200;
  int max_iters = 500;       // per-restart refinement budget
  double epsilon = 1e-6;     // strictness margin on pivots
  uint64_t seed = 1;
  double theta_max = 5.0;    // Theta sampled uniform in (0, theta_max]
  double alpha_init_max = 2.0;
  double beta_init_max = 2.0;
  bool minimize_theta_sum = false;  // optional objective hook
  int threads = 0;           // 0: SIS_THREADS env var, else hardware
};

struct SynthesisResult {
  std::vector<double> theta;
  std::vector<std::vector<double>> omegas;
  double margin = -std::numeric_limits<double>::infinity();
  long iterations = 0;
  double wall_time_seconds = 0.0;
  SolveStatus status = SolveStatus::budget_exhausted;
};

struct SlackEval {
  // Sylvester pivots of each pattern's (zero-row-compressed) Gram matrix;
  // det(Q_k) is the product of the first k pivots, so all pivots >= eps iff
  // all leading minors are positive with margin.
  std::vector<std::vector<double>> pattern_pivots;
  // Slack eps + (residual_tol - |c|) for each support monomial the frozen
  // basis cannot represent; feasibility forces those coefficients to vanish.
  std::vector<std::vector<double>> residual_slacks;
  std::vector<double> theta_slacks;  // the k_i themselves (must stay positive)
  double margin = 0.0;               // smallest slack overall
};

namespace detail {

inline constexpr double kZeroRowTol = 1e-12;
inline constexpr double kResidualTol = 1e-9;

struct Contribution {
  int support_idx;
  Poly theta_coeff;  // polynomial in the ntheta parameter variables
};

struct CompiledPattern {
  std::vector<std::vector<Contribution>> terms;  // zetas first, then cone
  int n_zetas = 0;
  int n_cone_terms = 0;
  MonomialBasis basis;
  // Per support monomial: cell (i, j) with i <= j, or (-1, residual index).
  std::vector<std::pair<int, int>> support_cells;
  int n_residuals = 0;
  int const_support_idx = -1;
  int omega_dim() const { return n_zetas + n_cone_terms; }
};

// Term contributions with Theta substituted: (support_idx, d coeff / d omega).
using NumericPattern = std::vector<std::vector<std::pair<int, double>>>;

inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
  uint64_t x = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  x ^= x >> 30; x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27; x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

inline double uniform01(std::mt19937_64& rng) {
  return double(rng() >> 11) * 0x1.0p-53;
}

}  // namespace detail

class NlpProblem {
 public:
  NlpProblem(const SubstitutedSystem& sys, const IndexTemplate& t,
             const ConeConfig& cone)
      : sys_(&sys), tmpl_(&t), cone_(cone), theta_dim_(t.theta_dim()) {
    const auto patterns = enumerate_sign_patterns(sys.nu);
    for (const auto& pat : patterns) compile_pattern(pat);
    for (const auto& cp : patterns_) omega_dims_.push_back(cp.omega_dim());
  }

  int theta_dim() const { return theta_dim_; }
  const std::vector<int>& omega_dims() const { return omega_dims_; }
  int n_patterns() const { return (int)patterns_.size(); }
  const SubstitutedSystem& system() const { return *sys_; }
  const IndexTemplate& index_template() const { return *tmpl_; }
  const ConeConfig& cone_config() const { return cone_; }

  // Substitute Theta into every term's coefficient polynomials.
  std::vector<detail::NumericPattern> compile_at(
      const std::vector<double>& theta) const {
    if ((int)theta.size() != theta_dim_)
      throw std::invalid_argument("compile_at: theta length mismatch");
    std::vector<detail::NumericPattern> out;
    out.reserve(patterns_.size());
    for (const auto& cp : patterns_) {
      detail::NumericPattern np(cp.terms.size());
      for (size_t t = 0; t < cp.terms.size(); ++t) {
        np[t].reserve(cp.terms[t].size());
        for (const auto& c : cp.terms[t]) {
          const double v = c.theta_coeff.eval(theta);
          if (v != 0.0) np[t].push_back({c.support_idx, v});
        }
      }
      out.push_back(std::move(np));
    }
    return out;
  }

  // p0 coefficients over the frozen support for one pattern.
  std::vector<double> p0_coeffs(const detail::CompiledPattern& cp,
                                const detail::NumericPattern& np,
                                const std::vector<double>& omega) const {
    if ((int)omega.size() != cp.omega_dim())
      throw std::invalid_argument("eval: omega length mismatch");
    std::vector<double> coeffs(cp.support_cells.size(), 0.0);
    coeffs[cp.const_support_idx] = -1.0;
    for (size_t t = 0; t < np.size(); ++t) {
      const double w = omega[t];
      if (w == 0.0) continue;
      for (const auto& [idx, v] : np[t]) coeffs[idx] -= w * v;
    }
    return coeffs;
  }

  // epsilon is the feasibility threshold the slacks are compared against; a
  // residual coefficient right at kResidualTol yields slack exactly epsilon,
  // so margin >= epsilon means all pivots >= epsilon and all residuals
  // within tolerance.
  SlackEval eval(const std::vector<double>& theta,
                 const std::vector<std::vector<double>>& omegas,
                 double epsilon = 1e-6) const {
    if ((int)omegas.size() != n_patterns())
      throw std::invalid_argument("eval: omega vector count mismatch");
    const auto nums = compile_at(theta);
    SlackEval ev;
    ev.margin = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n_patterns(); ++j) {
      const auto& cp = patterns_[j];
      const auto coeffs = p0_coeffs(cp, nums[j], omegas[j]);
      std::vector<double> residuals(cp.n_residuals, 0.0);
      Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(cp.basis.size(), cp.basis.size());
      fill_gram(cp, coeffs, Q, residuals);
      const auto active = active_rows(Q);
      Eigen::MatrixXd Qa = compress(Q, active);
      Eigen::VectorXd piv = sylvester_pivots(Qa);
      ev.pattern_pivots.emplace_back(piv.data(), piv.data() + piv.size());
      std::vector<double> rs;
      rs.reserve(residuals.size());
      for (double c : residuals)
        rs.push_back(epsilon + (detail::kResidualTol - std::fabs(c)));
      ev.residual_slacks.push_back(std::move(rs));
      for (double p : ev.pattern_pivots.back()) ev.margin = std::min(ev.margin, p);
      for (double s : ev.residual_slacks.back()) ev.margin = std::min(ev.margin, s);
    }
    for (double k : theta) {
      ev.theta_slacks.push_back(k);
      ev.margin = std::min(ev.margin, k);
    }
    return ev;
  }

  const std::vector<detail::CompiledPattern>& compiled() const {
    return patterns_;
  }

  void fill_gram(const detail::CompiledPattern& cp,
                 const std::vector<double>& coeffs, Eigen::MatrixXd& Q,
                 std::vector<double>& residuals) const {
    for (size_t s = 0; s < coeffs.size(); ++s) {
      const double c = coeffs[s];
      if (c == 0.0) continue;
      auto [i, j] = cp.support_cells[s];
      if (i < 0) {
        residuals[j] += c;
      } else if (i == j) {
        Q(i, i) += c;
      } else {
        Q(i, j) += c / 2.0;
        Q(j, i) += c / 2.0;
      }
    }
  }

  static std::vector<int> active_rows(const Eigen::MatrixXd& Q) {
    std::vector<int> act;
    for (int i = 0; i < Q.rows(); ++i)
      if (Q.row(i).cwiseAbs().maxCoeff() > detail::kZeroRowTol) act.push_back(i);
    return act;
  }

  static Eigen::MatrixXd compress(const Eigen::MatrixXd& Q,
                                  const std::vector<int>& act) {
    Eigen::MatrixXd A((int)act.size(), (int)act.size());
    for (size_t a = 0; a < act.size(); ++a)
      for (size_t b = 0; b < act.size(); ++b) A(a, b) = Q(act[a], act[b]);
    return A;
  }

 private:
  void compile_pattern(const SignPattern& pat) {
    RefuteInstance inst = build_instance(*sys_, *tmpl_, std::nullopt, pat);
    extend_ideal(inst, cone_.ideal_monomial_degree);
    const auto term_ids = cone_term_indices((int)inst.gammas.size(), cone_,
                                            gamma_state_degrees(inst));

    std::vector<Poly> term_polys;
    for (const Poly& z : inst.zetas) term_polys.push_back(z);
    for (const auto& ids : term_ids) term_polys.push_back(cone_term(inst, ids));

    // Frozen support: union of the z-projected monomials of every term plus
    // the constant; the Gram structure is then valid for every (Theta, Omega).
    std::set<Monomial, GradedLexLess> support;
    support.insert(Monomial::one());
    std::vector<std::map<Monomial, Poly, GradedLexLess>> collected;
    for (const Poly& tp : term_polys) {
      collected.push_back(collect_tail(tp, inst.nz));
      for (auto& [m, _] : collected.back()) support.insert(m);
    }

    detail::CompiledPattern cp;
    cp.n_zetas = (int)inst.zetas.size();
    cp.n_cone_terms = (int)term_ids.size();
    cp.basis = basis_from_support(support, inst.nz);

    std::map<Monomial, int, GradedLexLess> support_index;
    for (auto& m : support) {
      const int idx = (int)support_index.size();
      support_index.emplace(m, idx);
      auto it = cp.basis.assignment.find(m);
      if (it != cp.basis.assignment.end())
        cp.support_cells.push_back(it->second);
      else
        cp.support_cells.push_back({-1, cp.n_residuals++});
    }
    cp.const_support_idx = support_index.at(Monomial::one());

    for (auto& heads : collected) {
      std::vector<detail::Contribution> contribs;
      contribs.reserve(heads.size());
      for (auto& [m, tpoly] : heads)
        contribs.push_back({support_index.at(m), tpoly});
      cp.terms.push_back(std::move(contribs));
    }
    patterns_.push_back(std::move(cp));
  }

  const SubstitutedSystem* sys_;
  const IndexTemplate* tmpl_;
  ConeConfig cone_;
  int theta_dim_;
  std::vector<detail::CompiledPattern> patterns_;
  std::vector<int> omega_dims_;
};

inline NlpProblem assemble_problem(const SubstitutedSystem& sys,
                                   const IndexTemplate& t,
                                   const ConeConfig& cone) {
  return NlpProblem(sys, t, cone);
}

namespace detail {

// Smooth infeasibility measure of one pattern at fixed Theta:
//   sum_i hinge(target - lambda_i(Q_active))^2 + sum residual^2
// (the squared Frobenius norm of (target I - Q_active)_+). Penalizing the
// whole low spectrum instead of lambda_min alone keeps the objective C^1 at
// eigenvalue crossings, where a single-eigenvalue hinge makes gradient
// descent stall. Zero penalty certifies the pattern.
struct PatternPenalty {
  double value = 0.0;
  double lambda_min = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd spectral_grad;  // dF/dQ = -2 sum_i h_i v_i v_i', active coords
  std::vector<int> active;
  std::vector<double> residuals;
};

inline PatternPenalty pattern_penalty(const NlpProblem& prob,
                                      const CompiledPattern& cp,
                                      const NumericPattern& np,
                                      const std::vector<double>& omega,
                                      double target) {
  PatternPenalty pp;
  const auto coeffs = prob.p0_coeffs(cp, np, omega);
  pp.residuals.assign(cp.n_residuals, 0.0);
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(cp.basis.size(), cp.basis.size());
  prob.fill_gram(cp, coeffs, Q, pp.residuals);
  pp.active = NlpProblem::active_rows(Q);
  if (!pp.active.empty()) {
    Eigen::MatrixXd Qa = NlpProblem::compress(Q, pp.active);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Qa);
    const auto& lam = es.eigenvalues();
    pp.lambda_min = lam(0);
    const int na = (int)pp.active.size();
    pp.spectral_grad = Eigen::MatrixXd::Zero(na, na);
    for (int i = 0; i < na; ++i) {
      const double h = std::max(0.0, target - lam(i));
      if (h == 0.0) break;  // eigenvalues ascend
      pp.value += h * h;
      pp.spectral_grad.noalias() -=
          2.0 * h * es.eigenvectors().col(i) * es.eigenvectors().col(i).transpose();
    }
  }
  for (double r : pp.residuals) pp.value += r * r;
  return pp;
}

// Analytic gradient of pattern_penalty in omega (Q is affine in omega).
inline void pattern_penalty_grad(const NlpProblem& prob,
                                 const CompiledPattern& cp,
                                 const NumericPattern& np,
                                 const PatternPenalty& pp, double /*target*/,
                                 std::vector<double>& grad) {
  grad.assign(cp.omega_dim(), 0.0);
  std::vector<int> active_pos((size_t)cp.basis.size(), -1);
  for (size_t a = 0; a < pp.active.size(); ++a) active_pos[pp.active[a]] = (int)a;
  for (int t = 0; t < cp.omega_dim(); ++t) {
    double g = 0.0;
    for (const auto& [idx, v] : np[t]) {
      auto [i, j] = cp.support_cells[idx];
      // d coeff_idx / d omega_t = -v
      if (i < 0) {
        g += 2.0 * pp.residuals[j] * (-v);
      } else {
        const int ia = active_pos[i], ja = active_pos[j];
        if (ia < 0 || ja < 0) continue;
        // dQ(i,j) = dQ(j,i) = dcoeff/2 off the diagonal, dcoeff on it, so
        // with the symmetric dF/dQ the chain rule collapses to G(i,j)*dcoeff.
        g += pp.spectral_grad(ia, ja) * (-v);
      }
    }
    grad[t] = g;
  }
}

// Least-norm correction onto the affine subspace where every residual
// coefficient vanishes (the residuals are linear in omega), followed by the
// alpha >= 0 clamp. A few alternations push residuals to machine precision
// far faster than gradient descent on their squared penalty, and the
// correction is small once the descent phase is close, so the spectral part
// is barely disturbed.
inline void restore_residuals(const NlpProblem& prob, const CompiledPattern& cp,
                              const NumericPattern& np,
                              std::vector<double>& omega) {
  if (cp.n_residuals == 0) return;
  const int m = cp.n_residuals, n = (int)omega.size();
  // Sparse rows of R: residual row j <- list of (term, coefficient).
  std::vector<std::vector<std::pair<int, double>>> rows(m);
  for (int t = 0; t < n; ++t)
    for (const auto& [idx, v] : np[t]) {
      auto [i, j] = cp.support_cells[idx];
      if (i < 0) rows[j].push_back({t, -v});
    }
  auto residual_vec = [&](Eigen::VectorXd& r) {
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (const auto& [t, v] : rows[j]) s += v * omega[t];
      r[j] = s;
    }
  };
  // G z = R R^T z via two sparse passes.
  Eigen::VectorXd scratch(n);
  auto apply_G = [&](const Eigen::VectorXd& z, Eigen::VectorXd& out) {
    scratch.setZero();
    for (int j = 0; j < m; ++j)
      for (const auto& [t, v] : rows[j]) scratch[t] += v * z[j];
    for (int j = 0; j < m; ++j) {
      double s = 0.0;
      for (const auto& [t, v] : rows[j]) s += v * scratch[t];
      out[j] = s;
    }
  };
  // Damping keeps the correction bounded when G = R R^T is rank deficient
  // (the system may be inconsistent after the alpha clamp).
  double diag_mean = 0.0;
  for (int j = 0; j < m; ++j) {
    double s = 0.0;
    for (const auto& [t, v] : rows[j]) s += v * v;
    diag_mean += s;
  }
  diag_mean /= std::max(1, m);
  const double damp = std::max(1e-12 * diag_mean, 1e-300);
  Eigen::VectorXd r(m), z(m), Gp(m);
  for (int pass = 0; pass < 3; ++pass) {
    residual_vec(r);
    if (r.cwiseAbs().maxCoeff() < 1e-14) break;
    z.setZero();
    Eigen::VectorXd cg_r = -r, cg_p = cg_r;
    double rho = cg_r.squaredNorm();
    const double tol2 = rho * 1e-28 + 1e-300;
    const int max_cg = std::min(2 * m, 400);
    for (int it = 0; it < max_cg && rho > tol2; ++it) {
      apply_G(cg_p, Gp);
      Gp += damp * cg_p;
      const double denom = cg_p.dot(Gp);
      if (!(denom > 0.0)) break;
      const double alpha = rho / denom;
      z += alpha * cg_p;
      cg_r -= alpha * Gp;
      const double rho2 = cg_r.squaredNorm();
      cg_p = cg_r + (rho2 / rho) * cg_p;
      rho = rho2;
    }
    // omega += R^T z, then clamp the cone multipliers.
    for (int j = 0; j < m; ++j)
      for (const auto& [t, v] : rows[j]) omega[t] += v * z[j];
    for (int t = cp.n_zetas; t < n; ++t)
      if (omega[t] < 0.0) omega[t] = 0.0;
  }
}

// Gauss-Newton polish: drive every eigenvalue below the boosted target up to
// it with least-norm steps on the linearized system
//   v_i' Q(omega) v_i = boost,   residuals(omega) = 0,
// alternated with the exact residual correction. Near a solution the system
// is small (a few eigenvalue rows over thousands of unknowns) and nearly
// linear, so this closes the final digits that first-order descent crawls
// through. Returns the best penalty seen; omega is updated only on progress.
inline double polish_spectrum(const NlpProblem& prob, const CompiledPattern& cp,
                              const NumericPattern& np,
                              std::vector<double>& omega, double target,
                              int max_rounds = 30) {
  const int n = (int)omega.size();
  const double boost = 2.0 * target;
  auto clamp = [&](std::vector<double>& x) {
    for (int t = cp.n_zetas; t < n; ++t)
      if (x[t] < 0.0) x[t] = 0.0;
  };
  double best = pattern_penalty(prob, cp, np, omega, target).value;
  std::vector<double> cur = omega;
  for (int round = 0; round < max_rounds && best > 0.0; ++round) {
    const auto coeffs = prob.p0_coeffs(cp, np, cur);
    std::vector<double> residuals(cp.n_residuals, 0.0);
    Eigen::MatrixXd Q =
        Eigen::MatrixXd::Zero(cp.basis.size(), cp.basis.size());
    prob.fill_gram(cp, coeffs, Q, residuals);
    const auto active = NlpProblem::active_rows(Q);
    if (active.empty()) break;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        NlpProblem::compress(Q, active));
    const auto& lam = es.eigenvalues();
    int k = 0;
    while (k < lam.size() && lam(k) < boost) ++k;
    if (k == 0) break;
    std::vector<int> active_pos((size_t)cp.basis.size(), -1);
    for (size_t a = 0; a < active.size(); ++a) active_pos[active[a]] = (int)a;
    // J(i, t) = v_i' dQ/domega_t v_i; symmetric splitting collapses exactly
    // as in pattern_penalty_grad.
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(k, n);
    for (int t = 0; t < n; ++t)
      for (const auto& [idx, v] : np[t]) {
        auto [i, j] = cp.support_cells[idx];
        if (i < 0) continue;
        const int ia = active_pos[i], ja = active_pos[j];
        if (ia < 0 || ja < 0) continue;
        for (int e = 0; e < k; ++e)
          J(e, t) -= v * es.eigenvectors()(ia, e) * es.eigenvectors()(ja, e);
      }
    Eigen::VectorXd rhs(k);
    for (int e = 0; e < k; ++e) rhs(e) = boost - lam(e);
    Eigen::MatrixXd G = J * J.transpose();
    const double mu = std::max(1e-12 * G.trace() / k, 1e-300);
    G.diagonal().array() += mu;
    Eigen::VectorXd delta = J.transpose() * G.llt().solve(rhs);
    bool improved = false;
    for (double s = 1.0; s >= 1.0 / 64.0; s *= 0.5) {
      std::vector<double> trial = cur;
      for (int t = 0; t < n; ++t) trial[t] += s * delta(t);
      clamp(trial);
      restore_residuals(prob, cp, np, trial);
      const double ft = pattern_penalty(prob, cp, np, trial, target).value;
      if (ft < best) {
        cur = trial;
        best = ft;
        omega = cur;
        improved = true;
        break;
      }
    }
    if (!improved) break;
  }
  return best;
}

// Accelerated projected gradient (FISTA with adaptive restart) on one
// pattern's penalty; the feasible set is alpha >= 0, beta free. At fixed
// Theta the penalty is convex in omega, so this converges to the pattern's
// true infeasibility measure. The terms are normalized to unit max
// coefficient internally (a diagonal preconditioner: term coefficient
// magnitudes span several orders and cripple plain gradient steps), and the
// iterate is periodically projected onto the residual null space.
inline double inner_solve(const NlpProblem& prob, const CompiledPattern& cp,
                          const NumericPattern& np_raw,
                          std::vector<double>& omega, double target,
                          int max_iters) {
  const size_t n = omega.size();
  NumericPattern np = np_raw;
  std::vector<double> colscale(n, 1.0);
  for (size_t t = 0; t < n; ++t) {
    double m = 0.0;
    for (const auto& [idx, v] : np[t]) m = std::max(m, std::fabs(v));
    if (m > 0.0) {
      colscale[t] = m;
      for (auto& [idx, v] : np[t]) v /= m;
    }
  }
  for (size_t t = 0; t < n; ++t) omega[t] *= colscale[t];
  auto project = [&](std::vector<double>& x) {
    for (size_t t = cp.n_zetas; t < n; ++t)
      if (x[t] < 0.0) x[t] = 0.0;
  };
  project(omega);
  std::vector<double> x = omega, x_prev = omega, y = omega, grad, trial(n);
  double fx = pattern_penalty(prob, cp, np, x, target).value;
  double L = 1.0, tmom = 1.0;
  for (int it = 0; it < max_iters && fx > 1e-22; ++it) {
    if (it > 0 && it % 500 == 0) {
      // Periodic exact residual clean-up; restart momentum from the result
      // if it helped.
      std::vector<double> xr = x;
      restore_residuals(prob, cp, np, xr);
      const double fr = pattern_penalty(prob, cp, np, xr, target).value;
      if (fr < fx) {
        x = xr;
        y = x;
        x_prev = x;
        fx = fr;
        tmom = 1.0;
      }
    }
    PatternPenalty py = pattern_penalty(prob, cp, np, y, target);
    pattern_penalty_grad(prob, cp, np, py, target, grad);
    double fy = py.value;
    // Backtrack L until the quadratic upper bound holds at the projected step.
    double ft = 0.0;
    for (int bt = 0;; ++bt) {
      for (size_t t = 0; t < n; ++t) trial[t] = y[t] - grad[t] / L;
      project(trial);
      ft = pattern_penalty(prob, cp, np, trial, target).value;
      double ub = fy;
      for (size_t t = 0; t < n; ++t) {
        const double d = trial[t] - y[t];
        ub += grad[t] * d + 0.5 * L * d * d;
      }
      if (ft <= ub + 1e-18 || bt >= 40) break;
      L *= 2.0;
    }
    if (ft > fx) {
      // Momentum overshot: restart from the best iterate.
      tmom = 1.0;
      y = x;
      continue;
    }
    x_prev.swap(x);
    x = trial;
    fx = ft;
    const double tnext = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * tmom * tmom));
    for (size_t t = 0; t < n; ++t)
      y[t] = x[t] + (tmom - 1.0) / tnext * (x[t] - x_prev[t]);
    project(y);
    tmom = tnext;
    L *= 0.9;  // allow the Lipschitz estimate to shrink again
  }
  {
    std::vector<double> xr = x;
    restore_residuals(prob, cp, np, xr);
    const PatternPenalty ppo = pattern_penalty(prob, cp, np, x, target);
    const PatternPenalty ppr = pattern_penalty(prob, cp, np, xr, target);
    auto resmax = [](const PatternPenalty& pp) {
      double m = 0.0;
      for (double r : pp.residuals) m = std::max(m, std::fabs(r));
      return m;
    };
    // Take the restored point when it lowers the penalty, or when the raw
    // iterate would fail the residual tolerance while the restored one passes.
    if (ppr.value < fx ||
        (resmax(ppo) > 0.5 * kResidualTol && resmax(ppr) <= 0.5 * kResidualTol))
      if (ppr.value < fx || ppr.value < 4.0 * fx) {
        x = xr;
        fx = ppr.value;
      }
  }
  // Second-order clean-up once descent is close enough for the
  // linearization to hold.
  if (fx > 0.0 && fx < 1e-6) fx = polish_spectrum(prob, cp, np, x, target);
  omega = x;
  for (size_t t = 0; t < n; ++t) omega[t] /= colscale[t];
  return fx;
}

}  // namespace detail

// Multistart penalized-descent solver. Each restart owns its own rng stream
// (seed mixed with the restart index); restarts run in parallel and the
// selected solution is deterministic: the lowest feasible restart index, or
// with minimize_theta_sum the feasible restart with the smallest sum of
// parameters. With no feasible restart the best-margin point is returned
// with an honest status.
inline SynthesisResult solve(const NlpProblem& prob, const NlpConfig& cfg) {
  if (!(cfg.epsilon > 0))
    throw std::invalid_argument("solve: epsilon must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  const int nt = prob.theta_dim();
  const double target = 2.0 * cfg.epsilon;

  struct Outcome {
    bool feasible = false;
    double margin = -std::numeric_limits<double>::infinity();
    std::vector<double> theta;
    std::vector<std::vector<double>> omegas;
    long iters = 0;
  };

  auto sample_point = [&](std::mt19937_64& rng, std::vector<double>& theta,
                          std::vector<std::vector<double>>& omegas) {
    theta.resize(nt);
    for (int i = 0; i < nt; ++i)
      theta[i] = cfg.theta_max * std::max(1e-12, detail::uniform01(rng));
    omegas.clear();
    for (int j = 0; j < prob.n_patterns(); ++j) {
      const auto& cp = prob.compiled()[j];
      std::vector<double> w(cp.omega_dim());
      for (int l = 0; l < cp.n_zetas; ++l)
        w[l] = cfg.beta_init_max * (2.0 * detail::uniform01(rng) - 1.0);
      for (int a = cp.n_zetas; a < cp.omega_dim(); ++a)
        w[a] = cfg.alpha_init_max * detail::uniform01(rng);
      omegas.push_back(std::move(w));
    }
  };

  auto total_penalty = [&](const std::vector<double>& theta,
                           std::vector<std::vector<double>>& omegas,
                           int inner_iters, long& iters) {
    const auto nums = prob.compile_at(theta);
    double total = 0.0;
    for (int j = 0; j < prob.n_patterns(); ++j) {
      total += detail::inner_solve(prob, prob.compiled()[j], nums[j],
                                   omegas[j], target, inner_iters);
      iters += inner_iters;
    }
    return total;
  };

  auto run_restart = [&](int r) {
    Outcome out;
    std::mt19937_64 rng(detail::mix_seed(cfg.seed, (uint64_t)r));
    sample_point(rng, out.theta, out.omegas);
    if (cfg.max_iters <= 0) {
      out.margin = prob.eval(out.theta, out.omegas, cfg.epsilon).margin;
      return out;
    }
    const int inner_iters = std::max(20, cfg.max_iters / 10);
    const int outers = std::max(1, cfg.max_iters / inner_iters);
    double pen = total_penalty(out.theta, out.omegas, inner_iters, out.iters);
    double tstep = 0.25;
    for (int o = 0; o < outers; ++o) {
      if (pen <= 1e-20) break;
      // Theta refinement: central finite differences of the total penalty,
      // re-solving the (convex in Omega) pattern subproblems at each probe.
      std::vector<double> gth(nt, 0.0);
      const int probe_iters = std::max(10, inner_iters / 4);
      for (int i = 0; i < nt; ++i) {
        const double h = std::max(1e-4, 1e-3 * std::fabs(out.theta[i]));
        for (int sgn : {+1, -1}) {
          auto th = out.theta;
          th[i] = std::clamp(th[i] + sgn * h, 1e-3, cfg.theta_max);
          auto om = out.omegas;
          const double p = total_penalty(th, om, probe_iters, out.iters);
          gth[i] += sgn * p / (2.0 * h);
        }
      }
      double gn = 0.0;
      for (double g : gth) gn += g * g;
      gn = std::sqrt(gn);
      if (gn < 1e-18) break;
      bool improved = false;
      for (int bt = 0; bt < 8; ++bt) {
        auto th = out.theta;
        for (int i = 0; i < nt; ++i)
          th[i] = std::clamp(th[i] - tstep / gn * gth[i], 1e-3, cfg.theta_max);
        auto om = out.omegas;
        const double p = total_penalty(th, om, inner_iters, out.iters);
        if (p < pen) {
          out.theta = th;
          out.omegas = om;
          pen = p;
          improved = true;
          tstep *= 1.5;
          break;
        }
        tstep *= 0.5;
      }
      if (!improved) break;
    }
    const SlackEval ev = prob.eval(out.theta, out.omegas, cfg.epsilon);
    out.margin = ev.margin;
    out.feasible = ev.margin >= cfg.epsilon;
    return out;
  };

  SynthesisResult res;
  if (cfg.restarts <= 0) {
    std::mt19937_64 rng(detail::mix_seed(cfg.seed, 0));
    sample_point(rng, res.theta, res.omegas);
    res.margin = prob.eval(res.theta, res.omegas, cfg.epsilon).margin;
    res.status = SolveStatus::budget_exhausted;
    res.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    return res;
  }

  int threads = cfg.threads;
  if (threads <= 0) {
    if (const char* env = std::getenv("SIS_THREADS")) threads = std::atoi(env);
    if (threads <= 0) threads = (int)std::thread::hardware_concurrency();
    if (threads <= 0) threads = 1;
  }

  std::optional<Outcome> best_feasible;
  Outcome best_any;
  long iters = 0;
  for (int base = 0;
       base < cfg.restarts && (!best_feasible || cfg.minimize_theta_sum);
       base += threads) {
    const int chunk = std::min(threads, cfg.restarts - base);
    std::vector<std::future<Outcome>> futs;
    for (int c = 1; c < chunk; ++c)
      futs.push_back(std::async(std::launch::async, run_restart, base + c));
    std::vector<Outcome> outs;
    outs.push_back(run_restart(base));
    for (auto& f : futs) outs.push_back(f.get());
    for (auto& o : outs) {
      iters += o.iters;
      if (o.margin > best_any.margin) best_any = o;
      if (o.feasible) {
        if (!best_feasible) {
          best_feasible = o;
        } else if (cfg.minimize_theta_sum) {
          double sa = 0, sb = 0;
          for (double k : o.theta) sa += k;
          for (double k : best_feasible->theta) sb += k;
          if (sa < sb) best_feasible = o;
        }
        if (!cfg.minimize_theta_sum) break;
      }
    }
  }

  const Outcome& pick = best_feasible ? *best_feasible : best_any;
  res.theta = pick.theta;
  res.omegas = pick.omegas;
  res.margin = pick.margin;
  res.iterations = iters;
  res.status = best_feasible ? SolveStatus::feasible : SolveStatus::infeasible;
  res.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return res;
}

}  // namespace sis
