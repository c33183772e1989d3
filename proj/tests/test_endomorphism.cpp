#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "vstree/endomorphism.hpp"

using namespace vstree::fg;

namespace {

Endomorphism f6_alpha() {
  Basis b(6);
  std::vector<Word> images = {
      parse_word("a b", b),
      parse_word("b a e b", b),
      parse_word("c d", b),
      parse_word("d c e d", b),
      parse_word("e f f e f", b),
      parse_word("f e f e f f e f f e f", b),
  };
  return Endomorphism(b, std::move(images));
}

Endomorphism f4_alpha() {
  Basis b(4);
  std::vector<Word> images = {
      parse_word("a b", b),
      parse_word("b a c b", b),
      parse_word("d", b),
      parse_word("c d", b),
  };
  return Endomorphism(b, std::move(images));
}

Endomorphism fibonacci() {
  Basis b(2);
  return Endomorphism(b, {parse_word("a b", b), parse_word("a", b)});
}

Word random_word(std::mt19937& rng, int rank, int maxlen) {
  std::uniform_int_distribution<int> len(0, maxlen);
  std::uniform_int_distribution<int> idx(1, rank);
  std::uniform_int_distribution<int> sgn(0, 1);
  std::vector<Letter> out;
  int n = len(rng);
  for (int i = 0; i < n; ++i) {
    Letter l = static_cast<Letter>(idx(rng));
    out.push_back(sgn(rng) ? l : inv(l));
  }
  return Word::reduce(out, rank);
}

Endomorphism random_endo(std::mt19937& rng, int rank, int maxlen) {
  Basis b(rank);
  std::vector<Word> images;
  for (int i = 0; i < rank; ++i) images.push_back(random_word(rng, rank, maxlen));
  return Endomorphism(b, std::move(images));
}

}  // namespace

TEST_CASE("apply matches the nesting substitution") {
  auto alpha = f6_alpha();
  const Basis& b = alpha.basis();
  CHECK(alpha.apply(parse_word("a", b)) == parse_word("a b", b));
  // alpha^2(a) = alpha(ab) = a b b a e b
  CHECK(alpha.apply(alpha.apply(parse_word("a", b))) ==
        parse_word("a b b a e b", b));
}

TEST_CASE("identity endomorphism acts trivially") {
  Basis b(3);
  auto id = Endomorphism::identity(b);
  std::mt19937 rng(7);
  for (int i = 0; i < 50; ++i) {
    Word w = random_word(rng, 3, 15);
    CHECK(id.apply(w) == w);
  }
}

TEST_CASE("apply respects composition on random data") {
  std::mt19937 rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    auto phi = random_endo(rng, 3, 4);
    auto psi = random_endo(rng, 3, 4);
    Word w = random_word(rng, 3, 8);
    CHECK(phi.apply(psi.apply(w)) == phi.compose(psi).apply(w));
  }
}

TEST_CASE("abelianization entries count letters with sign") {
  Basis b(2);
  auto id = Endomorphism::identity(b);
  CHECK(id.abelianization() == IntMatrix::Identity(2, 2));

  auto fib = fibonacci();
  IntMatrix m = fib.abelianization();
  CHECK(m(0, 0) == 1);
  CHECK(m(1, 0) == 1);
  CHECK(m(0, 1) == 1);
  CHECK(m(1, 1) == 0);
}

TEST_CASE("abelianization is multiplicative") {
  std::mt19937 rng(31337);
  for (int trial = 0; trial < 200; ++trial) {
    auto phi = random_endo(rng, 3, 4);
    auto psi = random_endo(rng, 3, 4);
    IntMatrix lhs = phi.compose(psi).abelianization();
    IntMatrix rhs = phi.abelianization() * psi.abelianization();
    CHECK(lhs == rhs);
  }
}

TEST_CASE("F6 abelianization is block triangular with {e,f} at the bottom") {
  IntMatrix m = f6_alpha().abelianization();
  // Upper strata letters never appear in images of {e,f}-letters, and the
  // two rank-2 upper strata do not feed each other.
  for (int i : {0, 1, 2, 3}) {
    for (int j : {4, 5}) CHECK(m(i, j) == 0);
  }
  for (int i : {0, 1})
    for (int j : {2, 3}) {
      CHECK(m(i, j) == 0);
      CHECK(m(j, i) == 0);
    }
  CHECK(det_integer(m) == 2);  // injective but not surjective
}

TEST_CASE("invert handles the swap involution") {
  Basis b(2);
  Endomorphism swap(b, {parse_word("b", b), parse_word("a", b)});
  auto res = invert(swap);
  REQUIRE(std::holds_alternative<Automorphism>(res));
  const auto& aut = std::get<Automorphism>(res);
  CHECK(aut.inverse() == swap);  // self-inverse
  CHECK(swap.compose(swap) == Endomorphism::identity(b));
}

TEST_CASE("the F4 substitution is injective but not surjective") {
  // The image tuple folds to a proper infinite-index subgroup: a is not in
  // <ab, bacb, d, cd>, so no inverse exists.
  auto res = invert(f4_alpha());
  CHECK(std::holds_alternative<NotSurjective>(res));
}

TEST_CASE("invert round-trips composed Nielsen automorphisms of F4") {
  Basis b(4);
  // Build genuine automorphisms as products of elementary maps and recover
  // their inverses through the Nielsen-reduction oracle.
  std::vector<Endomorphism> elementary;
  elementary.push_back(Endomorphism(b, {parse_word("a b", b), parse_word("b", b),
                                        parse_word("c", b), parse_word("d", b)}));
  elementary.push_back(Endomorphism(b, {parse_word("a", b), parse_word("c b", b),
                                        parse_word("c", b), parse_word("d", b)}));
  elementary.push_back(Endomorphism(b, {parse_word("a", b), parse_word("b", b),
                                        parse_word("d", b), parse_word("c", b)}));
  elementary.push_back(Endomorphism(b, {parse_word("a", b), parse_word("b", b),
                                        parse_word("c", b), parse_word("d a^-1", b)}));
  std::mt19937 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    Endomorphism phi = Endomorphism::identity(b);
    int len = std::uniform_int_distribution<int>(2, 6)(rng);
    for (int i = 0; i < len; ++i) {
      phi = phi.compose(elementary[rng() % elementary.size()]);
    }
    auto res = invert(phi);
    REQUIRE(std::holds_alternative<Automorphism>(res));
    const auto& aut = std::get<Automorphism>(res);
    for (int i = 0; i < 20; ++i) {
      Word w = random_word(rng, 4, 8);
      CHECK(aut.inverse().apply(aut.forward().apply(w)) == w);
      CHECK(aut.forward().apply(aut.inverse().apply(w)) == w);
    }
  }
}

TEST_CASE("invert reports rank collapse") {
  Basis b(2);
  Endomorphism collapse(b, {parse_word("a", b), parse_word("a", b)});
  auto res = invert(collapse);
  CHECK(std::holds_alternative<NotSurjective>(res));
}

TEST_CASE("the F6 substitution is not surjective") {
  auto res = invert(f6_alpha());
  CHECK(std::holds_alternative<NotSurjective>(res));
}

TEST_CASE("verified automorphisms have determinant +-1") {
  auto check = [](const Endomorphism& e) {
    auto res = invert(e);
    if (std::holds_alternative<Automorphism>(res)) {
      long long d = det_integer(e.abelianization());
      CHECK((d == 1 || d == -1));
    }
  };
  check(fibonacci());
  check(f4_alpha());
  Basis b2(2);
  check(Endomorphism(b2, {parse_word("b", b2), parse_word("a", b2)}));
  std::mt19937 rng(77);
  for (int i = 0; i < 30; ++i) {
    Basis b(3);
    std::vector<Word> im;
    for (int j = 0; j < 3; ++j) {
      std::vector<Letter> raw;
      for (int k = 0; k < 3; ++k) {
        int v = std::uniform_int_distribution<int>(1, 3)(rng);
        raw.push_back(std::uniform_int_distribution<int>(0, 1)(rng)
                          ? static_cast<Letter>(v)
                          : inv(static_cast<Letter>(v)));
      }
      im.push_back(Word::reduce(raw, 3));
    }
    try {
      check(Endomorphism(b, im));
    } catch (const std::exception&) {
    }
  }
}

TEST_CASE("equal_up_to_inner finds trivial and constructed conjugators") {
  Basis b(2);
  auto fib = fibonacci();
  auto r1 = equal_up_to_inner(fib, fib, 4);
  REQUIRE(r1.has_value());
  CHECK(r1->empty());

  // phi = inn_a ∘ psi by construction
  Word a = parse_word("a", b);
  std::vector<Word> conj_images;
  for (const Word& w : fib.images()) conj_images.push_back(w.conjugate(a));
  Endomorphism phi(b, conj_images);
  auto r2 = equal_up_to_inner(phi, fib, 1);
  REQUIRE(r2.has_value());
  CHECK(*r2 == a);
}

TEST_CASE("swap vs identity has no conjugator within bound 8") {
  Basis b(2);
  Endomorphism swap(b, {parse_word("b", b), parse_word("a", b)});
  auto r = equal_up_to_inner(swap, Endomorphism::identity(b), 8);
  CHECK(!r.has_value());
}
