#pragma once
// Sign-pattern enumeration over the control dimensions and assembly of the
// scalar-multiplier refutation polynomial
//   p0 = -sum_j alpha_j (cone term j) - sum_l beta_l zeta_l - 1,
// whose sum-of-squares membership certifies emptiness of one refute set.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "sis/index.hpp"
#include "sis/model.hpp"
#include "sis/polyalg.hpp"

namespace sis {

struct SignPattern {
  std::vector<int> N;  // control indices with Lg >= 0
  std::vector<int> M;  // control indices with Lg <= 0
};

inline std::vector<SignPattern> enumerate_sign_patterns(int nu) {
  if (nu < 1 || nu > 16)
    throw std::invalid_argument("enumerate_sign_patterns: nu must be in [1, 16]");
  std::vector<SignPattern> out;
  out.reserve(size_t(1) << nu);
  for (uint32_t mask = 0; mask < (uint32_t(1) << nu); ++mask) {
    SignPattern p;
    for (int i = 0; i < nu; ++i)
      (mask & (uint32_t(1) << i) ? p.N : p.M).push_back(i);
    out.push_back(std::move(p));
  }
  return out;
}

struct RefuteInstance {
  // gamma_0 (worst-corner phi-dot), then the state inequalities, then Lg_i
  // for i in N, then -Lg_i for i in M; all constrained >= 0.
  std::vector<Poly> gammas;
  // phi first, then every system equality; all constrained == 0.
  std::vector<Poly> zetas;
  int nz = 0;
  int ntheta = 0;       // trailing symbolic parameter variables, 0 if numeric
  bool symbolic = false;
};

inline RefuteInstance build_instance(const SubstitutedSystem& sys,
                                     const IndexTemplate& t,
                                     const std::optional<std::vector<double>>& theta,
                                     const SignPattern& pattern) {
  for (int i : pattern.N)
    if (i < 0 || i >= sys.nu)
      throw std::invalid_argument("build_instance: pattern index out of range");
  for (int i : pattern.M)
    if (i < 0 || i >= sys.nu)
      throw std::invalid_argument("build_instance: pattern index out of range");

  IndexInstance idx =
      theta ? build_index(t, *theta) : build_index_symbolic(t);
  const int nv = theta ? sys.nz : sys.nz + t.theta_dim();

  RefuteInstance inst;
  inst.nz = sys.nz;
  inst.symbolic = !theta.has_value();
  inst.ntheta = inst.symbolic ? t.theta_dim() : 0;

  Poly gamma0 = idx.Lf;
  for (int i : pattern.N)
    gamma0 = add(gamma0, scale(idx.Lg[i], sys.u_min[i]));
  for (int i : pattern.M)
    gamma0 = add(gamma0, scale(idx.Lg[i], sys.u_max[i]));
  inst.gammas.push_back(gamma0);
  for (const Poly& s : sys.state_ineqs)
    inst.gammas.push_back(theta ? s : pad_vars(s, nv));
  for (int i : pattern.N) inst.gammas.push_back(idx.Lg[i]);
  for (int i : pattern.M) inst.gammas.push_back(scale(idx.Lg[i], -1));

  inst.zetas.push_back(idx.phi);
  for (const Poly& e : sys.equalities)
    inst.zetas.push_back(theta ? e : pad_vars(e, nv));
  return inst;
}

struct ConeConfig {
  int max_product_order = 2;  // how many gamma factors per cone term
  // Skip products whose total polynomial degree exceeds this cap (0 = no
  // cap). Dropping a cone term is always sound (equivalent to alpha = 0);
  // the cap keeps high product orders affordable.
  int max_product_degree = 0;
  // Extend the ideal with every zeta multiplied by the state monomials of
  // degree 1..ideal_monomial_degree (degree-bounded polynomial multipliers
  // instead of scalars). 0 keeps the plain scalar-multiplier ideal.
  int ideal_monomial_degree = 0;
  // Allow the same gamma to appear more than once in a product (multisets
  // instead of subsets). Squares of gammas times another gamma arise in
  // natural certificates (e.g. (Lg)^2 times a box bound) and cannot be
  // reached by distinct-index products.
  bool repeated_gammas = false;
};

// Appends m * zeta for every state monomial m with 1 <= deg(m) <= max_degree.
// Multiplying an equality by anything stays in the ideal, so refutations
// built from the extended list remain sound; the extension only enlarges the
// search space of the feasibility program.
inline void extend_ideal(RefuteInstance& inst, int max_degree) {
  if (max_degree <= 0) return;
  const int nv = inst.nz + inst.ntheta;
  std::vector<Poly> mons;
  std::vector<int> cur(inst.nz, 0);
  auto rec = [&](auto&& self, int v, int deg) -> void {
    if (v == inst.nz) {
      if (deg > 0) {
        Poly p(nv);
        p.set_coeff(Monomial::from_dense(cur), 1.0);
        mons.push_back(std::move(p));
      }
      return;
    }
    for (int e = 0; deg + e <= max_degree; ++e) {
      cur[v] = e;
      self(self, v + 1, deg + e);
    }
    cur[v] = 0;
  };
  rec(rec, 0, 0);
  const size_t base = inst.zetas.size();
  for (size_t l = 0; l < base; ++l)
    for (const Poly& m : mons) inst.zetas.push_back(mul(inst.zetas[l], m));
}

// Index lists of the cone terms, size 1..max_product_order, in deterministic
// order: all singletons, then all pairs (i<=j, lexicographic), and so on.
// Indices repeat within a term only when repeated_gammas is set.
inline std::vector<std::vector<int>> cone_term_indices(
    int n_gammas, const ConeConfig& cfg,
    const std::vector<int>& gamma_degrees = {}) {
  if (cfg.max_product_order < 1 ||
      (!cfg.repeated_gammas && cfg.max_product_order > n_gammas))
    throw std::invalid_argument("cone_term_indices: bad max_product_order");
  const bool cap = cfg.max_product_degree > 0 && !gamma_degrees.empty();
  std::vector<std::vector<int>> out;
  // Enumerate by size to keep all singletons before any pair.
  for (int size = 1; size <= cfg.max_product_order; ++size) {
    std::vector<int> pick;
    auto by_size = [&](auto&& self, int start, int deg) -> void {
      if ((int)pick.size() == size) {
        out.push_back(pick);
        return;
      }
      for (int i = start; i < n_gammas; ++i) {
        const int d = deg + (cap ? gamma_degrees[i] : 0);
        if (cap && d > cfg.max_product_degree) continue;
        pick.push_back(i);
        self(self, cfg.repeated_gammas ? i : i + 1, d);
        pick.pop_back();
      }
    };
    by_size(by_size, 0, 0);
  }
  return out;
}

// Degrees of the gammas in the state variables (parameters excluded), for
// the degree cap above.
inline std::vector<int> gamma_state_degrees(const RefuteInstance& inst) {
  std::vector<int> degs;
  degs.reserve(inst.gammas.size());
  for (const Poly& g : inst.gammas) {
    int d = 0;
    for (const auto& [m, c] : g.terms()) {
      int s = 0;
      for (const auto& [v, e] : m.exps)
        if (v < inst.nz) s += e;
      d = std::max(d, s);
    }
    degs.push_back(d);
  }
  return degs;
}

inline Poly cone_term(const RefuteInstance& inst, const std::vector<int>& ids) {
  Poly p = inst.gammas.at(ids.at(0));
  for (size_t k = 1; k < ids.size(); ++k) p = mul(p, inst.gammas.at(ids[k]));
  return p;
}

// Omega layout: one beta per zeta, then one alpha per cone term.
inline Poly build_p0(const RefuteInstance& inst, const ConeConfig& cfg,
                     const std::vector<double>& theta,
                     const std::vector<double>& omega) {
  const auto terms = cone_term_indices((int)inst.gammas.size(), cfg,
                                       gamma_state_degrees(inst));
  const size_t nzeta = inst.zetas.size();
  if (omega.size() != nzeta + terms.size())
    throw std::invalid_argument("build_p0: omega length mismatch");

  const int nv = inst.nz + inst.ntheta;
  Poly p0 = Poly::constant(nv, -1.0);
  for (size_t l = 0; l < nzeta; ++l)
    p0 = add(p0, scale(inst.zetas[l], -omega[l]));
  for (size_t j = 0; j < terms.size(); ++j) {
    const double a = omega[nzeta + j];
    if (a == 0.0) continue;
    p0 = add(p0, scale(cone_term(inst, terms[j]), -a));
  }
  if (inst.symbolic) {
    if ((int)theta.size() != inst.ntheta)
      throw std::invalid_argument("build_p0: theta length mismatch");
    p0 = substitute_tail(p0, inst.nz, theta);
  }
  return p0;
}

}  // namespace sis
