#include <qmcert/freealg.hpp>

#include <catch_amalgamated.hpp>

#include "test_util.hpp"

using namespace qmcert::freealg;

namespace {

Signature herm2() { return Signature::make(2, true); }
Signature nonherm1() { return Signature::make(1, false); }

}  // namespace

TEST_CASE("word ordering is graded lexicographic", "[freealg]") {
  Word e{}, z1{{0}}, z2{{1}}, z11{{0, 0}}, z12{{0, 1}}, z21{{1, 0}};
  CHECK(e < z1);
  CHECK(z1 < z2);
  CHECK(z2 < z11);
  CHECK(z11 < z12);
  CHECK(z12 < z21);
}

TEST_CASE("multiplication unit law and simple products", "[freealg]") {
  auto sig = herm2();
  std::mt19937_64 rng(7);
  FreePoly p = testutil::random_poly(rng, sig, 3, 6);
  CHECK((FreePoly::one(sig) * p - p).is_zero());
  CHECK((p * FreePoly::one(sig) - p).is_zero());

  FreePoly z1 = FreePoly::variable(sig, 0), z2 = FreePoly::variable(sig, 1);
  FreePoly prod = z1 * z2;
  REQUIRE(prod.terms.size() == 1);
  CHECK(prod.coeff(Word{{0, 1}}) == Complex(1.0));

  // (z1+z2)^2 expands into the four degree-2 words.
  FreePoly sq = (z1 + z2) * (z1 + z2);
  CHECK(sq.terms.size() == 4);
  CHECK(sq.coeff(Word{{0, 0}}) == Complex(1.0));
  CHECK(sq.coeff(Word{{0, 1}}) == Complex(1.0));
  CHECK(sq.coeff(Word{{1, 0}}) == Complex(1.0));
  CHECK(sq.coeff(Word{{1, 1}}) == Complex(1.0));
}

TEST_CASE("adjoint reverses, stars, conjugates", "[freealg]") {
  auto sig = herm2();
  FreePoly p = FreePoly::monomial(sig, Word{{0, 1}}, Complex(0, 1));  // i*z1*z2
  FreePoly pa = p.adjoint();
  REQUIRE(pa.terms.size() == 1);
  CHECK(pa.coeff(Word{{1, 0}}) == Complex(0, -1));  // -i*z2*z1

  CHECK((FreePoly::one(sig).adjoint() - FreePoly::one(sig)).is_zero());

  auto nsig = nonherm1();
  FreePoly z = FreePoly::variable(nsig, 0);
  FreePoly zs = FreePoly::variable(nsig, 0, true);
  CHECK(((z + zs).adjoint() - (z + zs)).is_zero());
  CHECK((z + zs).is_hermitian());
  CHECK_FALSE(z.is_hermitian());
}

TEST_CASE("adjoint is an involutive anti-homomorphism", "[freealg]") {
  auto sig = Signature::make(2, false);
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    FreePoly p = testutil::random_poly(rng, sig, 3, 5);
    FreePoly q = testutil::random_poly(rng, sig, 3, 5);
    CHECK((p.adjoint().adjoint() - p).coeff_norm1() < 1e-12);
    CHECK(((p * q).adjoint() - q.adjoint() * p.adjoint()).coeff_norm1() < 1e-12);
  }
}

TEST_CASE("evaluate is a unital *-homomorphism", "[freealg]") {
  auto sig = Signature::make(2, false);
  std::mt19937_64 rng(13);
  auto x = testutil::random_tuple(rng, sig, 4);
  CHECK((FreePoly::one(sig).evaluate(x) - Matrix::Identity(4, 4)).norm() == 0.0);

  FreePoly z1 = FreePoly::variable(sig, 0), z2 = FreePoly::variable(sig, 1);
  CHECK(((z1 * z2).evaluate(x) - x.mats[0] * x.mats[1]).norm() < 1e-12);

  for (int rep = 0; rep < 10; ++rep) {
    FreePoly p = testutil::random_poly(rng, sig, 3, 5);
    FreePoly q = testutil::random_poly(rng, sig, 3, 5);
    Matrix lhs = (p * q).evaluate(x);
    Matrix rhs = p.evaluate(x) * q.evaluate(x);
    CHECK((lhs - rhs).norm() < 1e-10 * (1.0 + rhs.norm()));
    Matrix astar = p.adjoint().evaluate(x);
    CHECK((astar - p.evaluate(x).adjoint()).norm() < 1e-10 * (1.0 + astar.norm()));
  }
}

TEST_CASE("monomial basis counts and order", "[freealg]") {
  auto b1 = monomial_basis(Signature::make(1, true), 1);
  REQUIRE(b1.size() == 2);
  CHECK(b1[0] == Word{});
  CHECK(b1[1] == Word{{0}});

  CHECK(monomial_basis(Signature::make(2, true), 2).size() == 7);   // 1+2+4
  CHECK(monomial_basis(Signature::make(1, false), 2).size() == 7);  // letters z, z^*

  auto basis = monomial_basis(Signature::make(2, false), 3);
  CHECK(basis.size() == 1 + 4 + 16 + 64);
  CHECK(std::is_sorted(basis.begin(), basis.end()));
  CHECK(std::adjacent_find(basis.begin(), basis.end()) == basis.end());
}

TEST_CASE("hermitian letters collapse stars", "[freealg]") {
  auto sig = Signature::make(1, true);
  FreePoly z = FreePoly::variable(sig, 0);
  CHECK((z.adjoint() - z).is_zero());
  CHECK(sig.letters().size() == 1);

  auto mixed = Signature::make(2, false);
  mixed.hermitian[0] = true;  // z1 hermitian, z2 not
  CHECK(mixed.letters().size() == 3);
  CHECK(mixed.adjoint_letter(0) == 0);
  CHECK(mixed.adjoint_letter(1) == 3);
}

TEST_CASE("tuple validation rejects non-hermitian data", "[freealg]") {
  auto sig = Signature::make(1, true);
  MatrixTuple x;
  x.dim = 2;
  x.mats.push_back((Matrix(2, 2) << 0, 1, 0, 0).finished());
  CHECK_THROWS_AS(x.validate(sig), std::invalid_argument);
  x.mats[0] = (Matrix(2, 2) << 0, 1, 1, 0).finished();
  CHECK_NOTHROW(x.validate(sig));
}

TEST_CASE("parser handles the documented term syntax", "[freealg]") {
  auto sig = Signature::make(2, false);
  FreePoly p = parse_poly("(1.5-2i)*z1*z2^* + 3", sig);
  REQUIRE(p.terms.size() == 2);
  CHECK(p.coeff(Word{}) == Complex(3.0));
  CHECK(p.coeff(Word{{0, 3}}) == Complex(1.5, -2.0));

  FreePoly q = parse_poly("z1+z1^*+z2+z2^*", sig);
  CHECK(q.terms.size() == 4);
  CHECK(q.is_hermitian());

  FreePoly pw = parse_poly("2*z1^2 - z1^*^2", sig);
  CHECK(pw.coeff(Word{{0, 0}}) == Complex(2.0));
  CHECK(pw.coeff(Word{{2, 2}}) == Complex(-1.0));

  FreePoly im = parse_poly("i*z1 - 2i", sig);
  CHECK(im.coeff(Word{{0}}) == Complex(0, 1));
  CHECK(im.coeff(Word{}) == Complex(0, -2));

  CHECK(parse_poly("0", sig).is_zero());
  CHECK_THROWS_AS(parse_poly("z3 + 1", sig), std::invalid_argument);
  CHECK_THROWS_AS(parse_poly("1 +", sig), std::invalid_argument);
  CHECK_THROWS_AS(parse_poly("(1+2j)", sig), std::invalid_argument);
}

TEST_CASE("printer and parser round-trip", "[freealg]") {
  auto sig = Signature::make(2, false);
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 30; ++rep) {
    FreePoly p = testutil::random_poly(rng, sig, 3, 6);
    FreePoly back = parse_poly(p.str(), sig);
    CHECK((back - p).coeff_norm1() < 1e-12);
  }
  // exact round-trip of awkward coefficients via shortest-repr printing
  FreePoly p(sig);
  p += FreePoly::constant(sig, Complex(1.0 / 3.0, -2.0 / 7.0));
  p += FreePoly::monomial(sig, Word{{0, 3, 1}}, Complex(-0.1, 0));
  FreePoly back = parse_poly(p.str(), sig);
  CHECK((back - p).coeff_norm1() == 0.0);

  // pure-imaginary negatives mid-sum print as subtraction, not "+ -1i"
  FreePoly q(sig);
  q += FreePoly::constant(sig, Complex(1.0, 0.0));
  q += FreePoly::monomial(sig, Word{{0}}, Complex(0.0, -1.0));
  q += FreePoly::monomial(sig, Word{{1}}, Complex(0.0, 2.5));
  FreePoly qb = parse_poly(q.str(), sig);
  CHECK((qb - q).coeff_norm1() == 0.0);
}

TEST_CASE("custom variable names parse and print", "[freealg]") {
  auto sig = Signature::make(3, false, {"a", "b", "c"});
  FreePoly p = parse_poly("a*b - c*b*a + 2", sig);
  CHECK(p.coeff(Word{{0, 1}}) == Complex(1.0));
  CHECK(p.coeff(Word{{2, 1, 0}}) == Complex(-1.0));
  CHECK(parse_poly(p.str(), sig).coeff(Word{{2, 1, 0}}) == Complex(-1.0));
  CHECK(parse_poly("a^**a", sig).coeff(Word{{3, 0}}) == Complex(1.0));
}
