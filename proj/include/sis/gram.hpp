#pragma once
// Fixed-assignment Gram decomposition over a half-support monomial basis and
// Sylvester leading-minor evaluation.
//
// The assignment rule is deterministic: a monomial that is the perfect square
// of a basis entry lands on that diagonal; otherwise the lexicographically
// smallest representing pair (i, j), i < j receives w/2 on both off-diagonal
// cells. Monomials the basis cannot represent are reported; a certificate is
// only meaningful when their coefficients vanish.

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "sis/polyalg.hpp"

namespace sis {

struct MonomialBasis {
  // Ordered rows, constant monomial first, graded-lex ascending.
  std::vector<Monomial> entries;
  // monomial -> (i, j) with i <= j : the unique Gram cell assigned to it.
  std::map<Monomial, std::pair<int, int>, GradedLexLess> assignment;

  int size() const { return (int)entries.size(); }

  void build_assignment() {
    assignment.clear();
    int n = size();
    // Diagonal (perfect-square) priority.
    for (int i = 0; i < n; ++i)
      assignment.emplace(mono_mul(entries[i], entries[i]),
                         std::make_pair(i, i));
    // Then pairs in lexicographic (i, j) order; first writer wins.
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        assignment.emplace(mono_mul(entries[i], entries[j]),
                           std::make_pair(i, j));
  }
};

struct GramMatrix {
  Eigen::MatrixXd values;
  int dim() const { return (int)values.rows(); }
};

inline std::string mono_str(const Monomial& m) {
  if (m.exps.empty()) return "1";
  std::string s;
  for (auto& [v, e] : m.exps) {
    if (!s.empty()) s += "*";
    s += "x" + std::to_string(v);
    if (e > 1) s += "^" + std::to_string(e);
  }
  return s;
}

// Half-support basis of a monomial support set. Candidates are all monomials
// m with 2*m componentwise below the support's exponent-wise max and
// deg(m) <= ceil(max support degree / 2); the floor/ceil halves of any
// support monomial not representable by those candidates are added; finally
// rows whose square is absent from the support are pruned (their diagonal
// could never receive a positive coefficient, so they cannot participate in
// a positive definite Gram matrix). Deterministic; graded-lex order with the
// constant first.
inline MonomialBasis basis_from_support(
    std::set<Monomial, GradedLexLess> support, int nv) {
  support.insert(Monomial::one());

  std::vector<int> emax(nv, 0);
  int dmax_supp = 0;
  for (auto& m : support) {
    for (auto& [v, e] : m.exps) emax[v] = std::max(emax[v], e);
    dmax_supp = std::max(dmax_supp, m.degree());
  }
  const int dmax = (dmax_supp + 1) / 2;
  std::vector<int> caps(nv);
  for (int v = 0; v < nv; ++v) caps[v] = emax[v] / 2;

  std::set<Monomial, GradedLexLess> basis;
  std::vector<int> cur(nv, 0);
  // Depth-first enumeration of capped exponent vectors with total degree cap.
  auto rec = [&](auto&& self, int v, int deg) -> void {
    if (v == nv) {
      basis.insert(Monomial::from_dense(cur));
      return;
    }
    for (int e = 0; e <= caps[v] && deg + e <= dmax; ++e) {
      cur[v] = e;
      self(self, v + 1, deg + e);
    }
    cur[v] = 0;
  };
  rec(rec, 0, 0);

  auto representable = [&](const Monomial& m) {
    std::vector<int> md = m.dense(nv);
    for (auto& a : basis) {
      std::vector<int> ad = a.dense(nv);
      bool ok = true;
      std::vector<int> rd(nv);
      for (int v = 0; v < nv; ++v) {
        rd[v] = md[v] - ad[v];
        if (rd[v] < 0) {
          ok = false;
          break;
        }
      }
      if (ok && basis.count(Monomial::from_dense(rd))) return true;
    }
    return false;
  };
  // Add halves of unrepresentable support monomials.
  for (auto& m : support) {
    if (representable(m)) continue;
    std::vector<int> md = m.dense(nv), h1(nv), h2(nv);
    for (int v = 0; v < nv; ++v) {
      h1[v] = md[v] / 2;
      h2[v] = md[v] - h1[v];
    }
    basis.insert(Monomial::from_dense(h1));
    basis.insert(Monomial::from_dense(h2));
  }
  // Prune rows whose square the support cannot source (except the constant).
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto it = basis.begin(); it != basis.end();) {
      if (it->degree() > 0 && !support.count(mono_mul(*it, *it))) {
        it = basis.erase(it);
        changed = true;
      } else {
        ++it;
      }
    }
  }
  basis.insert(Monomial::one());

  MonomialBasis out;
  out.entries.assign(basis.begin(), basis.end());
  out.build_assignment();
  return out;
}

// Half-support basis of p0. Returns nullopt when deg(p0) is odd
// (infeasible-by-degree: an odd-degree polynomial is never SOS).
inline std::optional<MonomialBasis> monomial_basis(const Poly& p0) {
  if (p0.degree() % 2 != 0) return std::nullopt;
  std::set<Monomial, GradedLexLess> support;
  for (auto& [m, c] : p0.terms()) support.insert(m);
  return basis_from_support(std::move(support), p0.nvars());
}

// Fixed-assignment Gram assembly. Throws when a monomial with coefficient
// magnitude above unrepresentable_tol has no cell in the basis; the error
// names the offending monomial.
inline GramMatrix assemble(const Poly& p0, const MonomialBasis& basis,
                           double unrepresentable_tol = 1e-10) {
  const int n = basis.size();
  GramMatrix Q;
  Q.values = Eigen::MatrixXd::Zero(n, n);
  for (auto& [m, c] : p0.terms()) {
    auto it = basis.assignment.find(m);
    if (it == basis.assignment.end()) {
      if (std::fabs(c) > unrepresentable_tol)
        throw std::runtime_error("assemble: unrepresentable monomial " +
                                 mono_str(m));
      continue;
    }
    auto [i, j] = it->second;
    if (i == j)
      Q.values(i, i) += c;
    else {
      Q.values(i, j) += c / 2.0;
      Q.values(j, i) += c / 2.0;
    }
  }
  return Q;
}

// Diagonal pivots of the (unpivoted) LDL^T elimination. For a positive
// definite matrix these are all positive; pivot_k = det(Q_k)/det(Q_{k-1}).
inline Eigen::VectorXd sylvester_pivots(const Eigen::MatrixXd& Q) {
  const int n = (int)Q.rows();
  Eigen::MatrixXd A = Q;
  Eigen::VectorXd piv(n);
  for (int k = 0; k < n; ++k) {
    piv(k) = A(k, k);
    if (std::fabs(A(k, k)) < 1e-300) {
      // Singular leading block: elimination cannot continue; report the rest
      // as exactly zero pivots (minors of a singular chain).
      for (int j = k; j < n; ++j) piv(j) = 0.0;
      return piv;
    }
    const double inv = 1.0 / A(k, k);
    for (int i = k + 1; i < n; ++i) {
      const double f = A(i, k) * inv;
      if (f == 0.0) continue;
      for (int j = k + 1; j < n; ++j) A(i, j) -= f * A(k, j);
    }
  }
  return piv;
}

// Leading principal minors det(Q_k), k = 1..dim, via the pivot recursion.
inline std::vector<double> leading_minors(const GramMatrix& Q) {
  Eigen::VectorXd piv = sylvester_pivots(Q.values);
  std::vector<double> minors(piv.size());
  double prod = 1.0;
  for (int k = 0; k < piv.size(); ++k) {
    prod *= piv(k);
    minors[k] = prod;
  }
  return minors;
}

// Feasibility margin: the smallest elimination pivot (minors normalized by
// the running pivot product) — scale-robust for large bases.
inline double gram_margin(const GramMatrix& Q) {
  Eigen::VectorXd piv = sylvester_pivots(Q.values);
  return piv.size() == 0 ? 0.0 : piv.minCoeff();
}

// Explicit SOS witness of a PD Gram matrix: polynomials q_k with
// p0 = sum q_k^2, from the LDL^T factors. Only valid when all pivots > 0.
inline std::vector<Poly> sos_witness(const GramMatrix& Q,
                                     const MonomialBasis& basis, int nvars) {
  const int n = Q.dim();
  Eigen::MatrixXd A = Q.values;
  Eigen::MatrixXd L = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd d(n);
  for (int k = 0; k < n; ++k) {
    d(k) = A(k, k);
    for (int i = k + 1; i < n; ++i) {
      double f = A(i, k) / A(k, k);
      L(i, k) = f;
      for (int j = k; j < n; ++j) A(i, j) -= f * A(k, j);
    }
  }
  std::vector<Poly> out;
  for (int k = 0; k < n; ++k) {
    Poly q(nvars);
    for (int i = k; i < n; ++i) {
      // row i of L^T column k is L(i,k)
      Poly t(nvars);
      t.set_coeff(basis.entries[i], L(i, k));
      q = add(q, t);
    }
    out.push_back(scale(q, std::sqrt(std::max(d(k), 0.0))));
  }
  return out;
}

}  // namespace sis
