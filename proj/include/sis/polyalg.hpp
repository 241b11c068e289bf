#pragma once
// Sparse multivariate polynomial ring over double coefficients.
// Canonical form: graded-lexicographic term order, no zero coefficients,
// coefficients with magnitude below kCoeffDrop are dropped after arithmetic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sis {

inline constexpr double kCoeffDrop = 1e-14;

// A monomial is a sparse exponent map: (variable index, positive exponent),
// sorted by variable index. The empty vector is the constant monomial 1.
struct Monomial {
  std::vector<std::pair<int, int>> exps;

  int degree() const {
    int d = 0;
    for (auto& [v, e] : exps) d += e;
    return d;
  }
  int exponent(int var) const {
    for (auto& [v, e] : exps)
      if (v == var) return e;
    return 0;
  }
  bool operator==(const Monomial& o) const { return exps == o.exps; }

  static Monomial one() { return {}; }
  static Monomial var(int v, int e = 1) {
    Monomial m;
    if (e > 0) m.exps.push_back({v, e});
    return m;
  }
  // Dense exponent vector of length nvars.
  std::vector<int> dense(int nvars) const {
    std::vector<int> d(nvars, 0);
    for (auto& [v, e] : exps) d[v] = e;
    return d;
  }
  static Monomial from_dense(const std::vector<int>& d) {
    Monomial m;
    for (int v = 0; v < (int)d.size(); ++v)
      if (d[v] > 0) m.exps.push_back({v, d[v]});
    return m;
  }
};

inline Monomial mono_mul(const Monomial& a, const Monomial& b) {
  Monomial r;
  size_t i = 0, j = 0;
  while (i < a.exps.size() || j < b.exps.size()) {
    if (j == b.exps.size() ||
        (i < a.exps.size() && a.exps[i].first < b.exps[j].first)) {
      r.exps.push_back(a.exps[i++]);
    } else if (i == a.exps.size() || b.exps[j].first < a.exps[i].first) {
      r.exps.push_back(b.exps[j++]);
    } else {
      r.exps.push_back({a.exps[i].first, a.exps[i].second + b.exps[j].second});
      ++i;
      ++j;
    }
  }
  return r;
}

// Graded-lexicographic order: first by total degree, then lexicographically
// by the exponent vector (variable 0 most significant).
struct GradedLexLess {
  bool operator()(const Monomial& a, const Monomial& b) const {
    int da = a.degree(), db = b.degree();
    if (da != db) return da < db;
    // Compare exponent sequences over ascending variable index; the monomial
    // whose earliest-differing variable has the LARGER exponent is the larger
    // monomial in lex order.
    size_t i = 0, j = 0;
    while (i < a.exps.size() && j < b.exps.size()) {
      if (a.exps[i].first != b.exps[j].first)
        // the one holding the smaller variable index has positive exponent
        // there while the other has zero -> it is lex-larger.
        return a.exps[i].first > b.exps[j].first;
      if (a.exps[i].second != b.exps[j].second)
        return a.exps[i].second < b.exps[j].second;
      ++i;
      ++j;
    }
    if (i < a.exps.size()) return false;  // a has an extra variable -> larger
    if (j < b.exps.size()) return true;
    return false;
  }
};

class Poly {
 public:
  using TermMap = std::map<Monomial, double, GradedLexLess>;

  Poly() : nvars_(0) {}
  explicit Poly(int nvars) : nvars_(nvars) {}

  static Poly zero(int nvars) { return Poly(nvars); }
  static Poly constant(int nvars, double c) {
    Poly p(nvars);
    if (std::fabs(c) > 0.0) p.terms_[Monomial::one()] = c;
    return p;
  }
  static Poly variable(int nvars, int v, double coeff = 1.0) {
    if (v < 0 || v >= nvars) throw std::invalid_argument("variable index out of range");
    Poly p(nvars);
    p.terms_[Monomial::var(v)] = coeff;
    return p;
  }

  int nvars() const { return nvars_; }
  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  size_t nterms() const { return terms_.size(); }

  int degree() const {
    int d = 0;
    for (auto& [m, c] : terms_) d = std::max(d, m.degree());
    return d;
  }
  int degree_in(int var) const {
    int d = 0;
    for (auto& [m, c] : terms_) d = std::max(d, m.exponent(var));
    return d;
  }
  double coeff(const Monomial& m) const {
    auto it = terms_.find(m);
    return it == terms_.end() ? 0.0 : it->second;
  }
  void set_coeff(const Monomial& m, double c) {
    if (std::fabs(c) < kCoeffDrop)
      terms_.erase(m);
    else
      terms_[m] = c;
  }
  void add_coeff(const Monomial& m, double c) { set_coeff(m, coeff(m) + c); }

  bool operator==(const Poly& o) const {
    if (nvars_ != o.nvars_ || terms_.size() != o.terms_.size()) return false;
    auto a = terms_.begin();
    auto b = o.terms_.begin();
    for (; a != terms_.end(); ++a, ++b)
      if (!(a->first == b->first) || a->second != b->second) return false;
    return true;
  }

  double eval(const std::vector<double>& x) const {
    if ((int)x.size() != nvars_)
      throw std::invalid_argument("eval: point length mismatch");
    double s = 0.0;
    for (auto& [m, c] : terms_) {
      double t = c;
      for (auto& [v, e] : m.exps) {
        double b = x[v];
        for (int k = 0; k < e; ++k) t *= b;
      }
      s += t;
    }
    return s;
  }

  std::string str() const {
    if (terms_.empty()) return "0";
    std::ostringstream os;
    bool first = true;
    // Print highest graded-lex terms first.
    for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
      if (!first) os << " + ";
      first = false;
      const Monomial& m = it->first;
      double c = it->second;
      if (m.exps.empty()) {
        os << c;
        continue;
      }
      os << c;
      for (auto& [v, e] : m.exps) {
        os << "*x" << v;
        if (e > 1) os << "^" << e;
      }
    }
    return os.str();
  }

 private:
  int nvars_;
  TermMap terms_;

  friend Poly add(const Poly&, const Poly&);
  friend Poly mul(const Poly&, const Poly&);
  friend Poly scale(const Poly&, double);
  friend Poly diff(const Poly&, int);
};

inline Poly add(const Poly& p, const Poly& q) {
  if (p.nvars_ != q.nvars_) throw std::invalid_argument("add: nvars mismatch");
  Poly r = p;
  for (auto& [m, c] : q.terms_) {
    double nc = r.coeff(m) + c;
    if (std::fabs(nc) < kCoeffDrop)
      r.terms_.erase(m);
    else
      r.terms_[m] = nc;
  }
  return r;
}

inline Poly scale(const Poly& p, double a) {
  Poly r(p.nvars_);
  if (a == 0.0) return r;
  for (auto& [m, c] : p.terms_) {
    double nc = c * a;
    if (std::fabs(nc) >= kCoeffDrop) r.terms_[m] = nc;
  }
  return r;
}

inline Poly sub(const Poly& p, const Poly& q) { return add(p, scale(q, -1.0)); }

inline Poly mul(const Poly& p, const Poly& q) {
  if (p.nvars_ != q.nvars_) throw std::invalid_argument("mul: nvars mismatch");
  Poly r(p.nvars_);
  for (auto& [m1, c1] : p.terms_)
    for (auto& [m2, c2] : q.terms_) {
      Monomial m = mono_mul(m1, m2);
      double nc = r.coeff(m) + c1 * c2;
      if (std::fabs(nc) < kCoeffDrop)
        r.terms_.erase(m);
      else
        r.terms_[m] = nc;
    }
  return r;
}

inline double eval(const Poly& p, const std::vector<double>& x) {
  return p.eval(x);
}

// Reinterpret p over a larger variable space (appended variables unused).
inline Poly pad_vars(const Poly& p, int new_nvars) {
  if (new_nvars < p.nvars())
    throw std::invalid_argument("pad_vars: cannot shrink variable space");
  Poly r(new_nvars);
  for (auto& [m, c] : p.terms()) r.set_coeff(m, c);
  return r;
}

// Substitute the trailing variables keep_nvars..nvars-1 with numeric values;
// the result lives over the first keep_nvars variables.
inline Poly substitute_tail(const Poly& p, int keep_nvars,
                            const std::vector<double>& values) {
  if (keep_nvars < 0 || keep_nvars > p.nvars())
    throw std::invalid_argument("substitute_tail: bad keep_nvars");
  if ((int)values.size() != p.nvars() - keep_nvars)
    throw std::invalid_argument("substitute_tail: value count mismatch");
  Poly r(keep_nvars);
  for (auto& [m, c] : p.terms()) {
    double factor = c;
    Monomial head;
    for (auto& [v, e] : m.exps) {
      if (v < keep_nvars) {
        head.exps.push_back({v, e});
      } else {
        double b = values[v - keep_nvars];
        for (int k = 0; k < e; ++k) factor *= b;
      }
    }
    r.add_coeff(head, factor);
  }
  return r;
}

// Split each monomial of p into a head over the first keep_nvars variables
// and a tail over the rest; used to collect coefficients that are themselves
// polynomials in the trailing (parameter) variables.
inline std::map<Monomial, Poly, GradedLexLess> collect_tail(const Poly& p,
                                                            int keep_nvars) {
  std::map<Monomial, Poly, GradedLexLess> out;
  const int nt = p.nvars() - keep_nvars;
  for (auto& [m, c] : p.terms()) {
    Monomial head, tail;
    for (auto& [v, e] : m.exps) {
      if (v < keep_nvars)
        head.exps.push_back({v, e});
      else
        tail.exps.push_back({v - keep_nvars, e});
    }
    auto it = out.find(head);
    if (it == out.end()) it = out.emplace(head, Poly(nt)).first;
    it->second.add_coeff(tail, c);
  }
  return out;
}

inline Poly diff(const Poly& p, int var) {
  if (var < 0 || var >= p.nvars_)
    throw std::invalid_argument("diff: variable index out of range");
  Poly r(p.nvars_);
  for (auto& [m, c] : p.terms_) {
    int e = m.exponent(var);
    if (e == 0) continue;
    Monomial m2;
    for (auto& [v, ve] : m.exps) {
      if (v == var) {
        if (ve > 1) m2.exps.push_back({v, ve - 1});
      } else {
        m2.exps.push_back({v, ve});
      }
    }
    double nc = r.coeff(m2) + c * e;
    if (std::fabs(nc) < kCoeffDrop)
      r.terms_.erase(m2);
    else
      r.terms_[m2] = nc;
  }
  return r;
}

}  // namespace sis
