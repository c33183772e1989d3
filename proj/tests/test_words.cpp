#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "vstree/words.hpp"

using namespace vstree::fg;

namespace {

// Independent oracle: explicit stack machine, no shortcuts shared with Word.
std::vector<Letter> stack_reduce(const std::vector<Letter>& raw) {
  std::vector<Letter> st;
  for (Letter l : raw) {
    if (!st.empty() && st.back() == static_cast<Letter>(-l)) {
      st.pop_back();
    } else {
      st.push_back(l);
    }
  }
  return st;
}

std::vector<Letter> random_raw(std::mt19937& rng, int rank, int maxlen) {
  std::uniform_int_distribution<int> len(0, maxlen);
  std::uniform_int_distribution<int> idx(1, rank);
  std::uniform_int_distribution<int> sgn(0, 1);
  std::vector<Letter> out;
  int n = len(rng);
  for (int i = 0; i < n; ++i) {
    Letter l = static_cast<Letter>(idx(rng));
    out.push_back(sgn(rng) ? l : inv(l));
  }
  return out;
}

Word random_word(std::mt19937& rng, int rank, int maxlen) {
  return Word::reduce(random_raw(rng, rank, maxlen), rank);
}

}  // namespace

TEST_CASE("reduce_word basic cancellations") {
  Basis b(3);
  // a b b^-1 c -> a c
  Word w = parse_word("a b b^-1 c", b);
  CHECK(w == parse_word("a c", b));
  // a a^-1 -> identity
  CHECK(parse_word("a a^-1", b).empty());
}

TEST_CASE("reduce_word agrees with the stack oracle on random input") {
  std::mt19937 rng(12345);
  for (int trial = 0; trial < 1000; ++trial) {
    auto raw = random_raw(rng, 3, 40);
    Word w = Word::reduce(raw, 3);
    CHECK(w.letters() == stack_reduce(raw));
  }
}

TEST_CASE("reduce_word is idempotent") {
  std::mt19937 rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    auto raw = random_raw(rng, 4, 30);
    Word w = Word::reduce(raw, 4);
    CHECK(Word::reduce(w.letters(), 4) == w);
  }
}

TEST_CASE("reduce_word rejects out-of-range letters") {
  std::vector<Letter> raw{1, 5};
  CHECK_THROWS_AS(Word::reduce(raw, 3), std::out_of_range);
}

TEST_CASE("cyclic normal form collapses conjugation") {
  Basis b(2);
  // a b a^-1 -> b
  CHECK(CyclicWord::of(parse_word("a b a^-1", b), 2) ==
        CyclicWord::of(parse_word("b", b), 2));
  // b a rotates to a b (a < b)
  CHECK(CyclicWord::of(parse_word("b a", b), 2) ==
        CyclicWord::of(parse_word("a b", b), 2));
}

TEST_CASE("cyclic normal form is conjugation invariant (fuzz)") {
  std::mt19937 rng(4242);
  for (int trial = 0; trial < 500; ++trial) {
    Word w = random_word(rng, 3, 12);
    Word g = random_word(rng, 3, 6);
    CHECK(CyclicWord::of(w.conjugate(g), 3) == CyclicWord::of(w, 3));
  }
}

TEST_CASE("cyclic root extraction") {
  Basis b(2);
  auto [r1, k1] = CyclicWord::of(parse_word("a a a", b), 2).root(2);
  CHECK(k1 == 3);
  CHECK(r1 == CyclicWord::of(parse_word("a", b), 2));
  auto [r2, k2] = CyclicWord::of(parse_word("a b", b), 2).root(2);
  CHECK(k2 == 1);
  CHECK(r2 == CyclicWord::of(parse_word("a b", b), 2));
  auto [r3, k3] = CyclicWord::of(parse_word("a b a b", b), 2).root(2);
  CHECK(k3 == 2);
}

TEST_CASE("word printing and parsing round-trips") {
  Basis b(std::vector<std::string>{"x", "y"});
  Word w = parse_word("x y^-1 x", b);
  CHECK(w.str(b) == "x y^-1 x");
  CHECK(parse_word(w.str(b), b) == w);
  CHECK(Word{}.str(b) == "1");
}
