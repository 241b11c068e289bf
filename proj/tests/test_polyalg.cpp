#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "sis/polyalg.hpp"

using namespace sis;

namespace {

Poly random_poly(std::mt19937_64& rng, int nvars, int max_terms, int max_deg) {
  std::uniform_int_distribution<int> nt(1, max_terms), ed(0, max_deg);
  std::uniform_real_distribution<double> cd(-3.0, 3.0);
  Poly p(nvars);
  const int n = nt(rng);
  for (int t = 0; t < n; ++t) {
    std::vector<int> e(nvars, 0);
    int budget = ed(rng);
    for (int v = 0; v < nvars && budget > 0; ++v) {
      std::uniform_int_distribution<int> pick(0, budget);
      e[v] = pick(rng);
      budget -= e[v];
    }
    p.add_coeff(Monomial::from_dense(e), cd(rng));
  }
  return p;
}

std::vector<double> random_point(std::mt19937_64& rng, int nvars) {
  std::uniform_real_distribution<double> d(-1.5, 1.5);
  std::vector<double> x(nvars);
  for (auto& v : x) v = d(rng);
  return x;
}

}  // namespace

TEST_CASE("monomial basics") {
  CHECK(Monomial::one().degree() == 0);
  CHECK(Monomial::var(2).degree() == 1);
  CHECK(Monomial::var(2, 3).degree() == 3);
  CHECK(Monomial::var(1).exponent(1) == 1);
  CHECK(Monomial::var(1).exponent(0) == 0);

  const Monomial m = mono_mul(Monomial::var(0, 2), Monomial::var(1));
  CHECK(m.degree() == 3);
  CHECK(m.exponent(0) == 2);
  CHECK(m.exponent(1) == 1);
  CHECK(mono_mul(m, Monomial::one()) == m);

  const std::vector<int> d{2, 1, 0};
  CHECK(Monomial::from_dense(d).dense(3) == d);
}

TEST_CASE("graded lex order") {
  GradedLexLess lt;
  // degree dominates
  CHECK(lt(Monomial::var(0), Monomial::var(1, 2)));
  // same degree: lex with variable 0 most significant
  CHECK(lt(Monomial::var(1, 2), Monomial::var(0, 2)));
  CHECK(lt(mono_mul(Monomial::var(0), Monomial::var(1)), Monomial::var(0, 2)));
  // irreflexive, antisymmetric
  CHECK_FALSE(lt(Monomial::var(0), Monomial::var(0)));
  CHECK(lt(Monomial::one(), Monomial::var(3)));
  CHECK_FALSE(lt(Monomial::var(3), Monomial::one()));
}

TEST_CASE("poly construction and canonical form") {
  Poly p(2);
  CHECK(p.is_zero());
  p.set_coeff(Monomial::var(0), 1.0);
  p.set_coeff(Monomial::var(0), 0.0);  // below drop threshold -> erased
  CHECK(p.is_zero());

  p.add_coeff(Monomial::var(1), 2.0);
  p.add_coeff(Monomial::var(1), -2.0);
  CHECK(p.is_zero());

  const Poly c = Poly::constant(3, 4.5);
  CHECK(c.degree() == 0);
  CHECK(c.eval({0, 0, 0}) == 4.5);
  CHECK(Poly::constant(3, 0.0).is_zero());

  CHECK_THROWS_AS(Poly::variable(2, 5), std::invalid_argument);
}

TEST_CASE("ring axioms on random polynomials") {
  std::mt19937_64 rng(12345);
  for (int trial = 0; trial < 200; ++trial) {
    const int nv = 1 + (int)(rng() % 4);
    const Poly a = random_poly(rng, nv, 6, 4);
    const Poly b = random_poly(rng, nv, 6, 4);
    const Poly c = random_poly(rng, nv, 6, 4);

    CHECK(add(a, b) == add(b, a));

    // commutativity/associativity of products and sums, and distributivity,
    // hold up to floating-point roundoff (summation order differs)
    auto coeffs_close = [](const Poly& x, const Poly& y) {
      double worst = 0.0;
      for (const auto& [m, co] : sub(x, y).terms())
        worst = std::max(worst, std::fabs(co));
      return worst < 1e-9;
    };
    CHECK(coeffs_close(mul(a, b), mul(b, a)));
    CHECK(coeffs_close(add(add(a, b), c), add(a, add(b, c))));
    CHECK(coeffs_close(mul(a, add(b, c)), add(mul(a, b), mul(a, c))));

    CHECK(add(a, Poly::zero(nv)) == a);
    CHECK(mul(a, Poly::constant(nv, 1.0)) == a);
    CHECK(mul(a, Poly::zero(nv)).is_zero());
    CHECK(sub(a, a).is_zero());
  }
}

TEST_CASE("eval is a ring homomorphism") {
  std::mt19937_64 rng(777);
  for (int trial = 0; trial < 200; ++trial) {
    const int nv = 1 + (int)(rng() % 4);
    const Poly a = random_poly(rng, nv, 6, 4);
    const Poly b = random_poly(rng, nv, 6, 4);
    const auto x = random_point(rng, nv);
    const double ea = a.eval(x), eb = b.eval(x);
    CHECK_THAT(add(a, b).eval(x), Catch::Matchers::WithinAbs(ea + eb, 1e-8));
    CHECK_THAT(mul(a, b).eval(x), Catch::Matchers::WithinAbs(ea * eb, 1e-7));
    CHECK_THAT(scale(a, 2.5).eval(x), Catch::Matchers::WithinAbs(2.5 * ea, 1e-8));
  }
  CHECK_THROWS_AS(Poly::constant(2, 1.0).eval({1.0}), std::invalid_argument);
}

TEST_CASE("differentiation rules") {
  std::mt19937_64 rng(99);
  // d/dx0 (x0^3 x1) = 3 x0^2 x1
  Poly p(2);
  p.set_coeff(mono_mul(Monomial::var(0, 3), Monomial::var(1)), 1.0);
  const Poly dp = diff(p, 0);
  CHECK(dp.coeff(mono_mul(Monomial::var(0, 2), Monomial::var(1))) == 3.0);
  CHECK(dp.nterms() == 1);
  CHECK(diff(p, 1).coeff(Monomial::var(0, 3)) == 1.0);
  CHECK(diff(Poly::constant(2, 7.0), 0).is_zero());
  CHECK_THROWS_AS(diff(p, 2), std::invalid_argument);

  // product rule on random pairs, checked by evaluation
  for (int trial = 0; trial < 100; ++trial) {
    const int nv = 2;
    const Poly a = random_poly(rng, nv, 5, 3);
    const Poly b = random_poly(rng, nv, 5, 3);
    const Poly lhs = diff(mul(a, b), 0);
    const Poly rhs = add(mul(diff(a, 0), b), mul(a, diff(b, 0)));
    const auto x = random_point(rng, nv);
    CHECK_THAT(lhs.eval(x), Catch::Matchers::WithinAbs(rhs.eval(x), 1e-7));
  }
}

TEST_CASE("pad_vars and substitute_tail") {
  std::mt19937_64 rng(4242);
  const Poly a = random_poly(rng, 2, 6, 4);
  const Poly padded = pad_vars(a, 4);
  CHECK(padded.nvars() == 4);
  const auto x = random_point(rng, 2);
  CHECK_THAT(padded.eval({x[0], x[1], 9.0, -3.0}),
             Catch::Matchers::WithinAbs(a.eval(x), 1e-9));
  CHECK_THROWS_AS(pad_vars(a, 1), std::invalid_argument);

  // substituting the tail agrees with direct evaluation
  for (int trial = 0; trial < 100; ++trial) {
    const Poly p = random_poly(rng, 4, 8, 5);
    const auto x = random_point(rng, 4);
    const Poly s = substitute_tail(p, 2, {x[2], x[3]});
    CHECK(s.nvars() == 2);
    CHECK_THAT(s.eval({x[0], x[1]}), Catch::Matchers::WithinAbs(p.eval(x), 1e-7));
  }
  CHECK_THROWS_AS(substitute_tail(a, 1, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("collect_tail reassembles the polynomial") {
  std::mt19937_64 rng(31337);
  for (int trial = 0; trial < 50; ++trial) {
    const Poly p = random_poly(rng, 5, 10, 5);
    const auto parts = collect_tail(p, 3);
    const auto x = random_point(rng, 5);
    double total = 0.0;
    for (const auto& [head, tail_poly] : parts) {
      double h = 1.0;
      for (const auto& [v, e] : head.exps)
        for (int i = 0; i < e; ++i) h *= x[v];
      total += h * tail_poly.eval({x[3], x[4]});
    }
    CHECK_THAT(total, Catch::Matchers::WithinAbs(p.eval(x), 1e-7));
  }
}

TEST_CASE("degree helpers") {
  Poly p(3);
  p.set_coeff(mono_mul(Monomial::var(0, 2), Monomial::var(2, 3)), 1.0);
  p.set_coeff(Monomial::var(1), -2.0);
  CHECK(p.degree() == 5);
  CHECK(p.degree_in(0) == 2);
  CHECK(p.degree_in(1) == 1);
  CHECK(p.degree_in(2) == 3);
  CHECK(Poly::zero(3).degree() == 0);
}
