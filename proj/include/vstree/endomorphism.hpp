#pragma once

#include <Eigen/Core>
#include <optional>
#include <variant>
#include <vector>

#include "vstree/words.hpp"

namespace vstree::fg {

using IntMatrix = Eigen::Matrix<long long, Eigen::Dynamic, Eigen::Dynamic>;

// An endomorphism of F_N given by images of the positive basis letters.
class Endomorphism {
 public:
  Endomorphism(Basis basis, std::vector<Word> images);

  static Endomorphism identity(const Basis& b);

  const Basis& basis() const { return basis_; }
  int rank() const { return basis_.rank(); }
  const Word& image(int index) const { return images_.at(static_cast<size_t>(index)); }
  const std::vector<Word>& images() const { return images_; }

  Word apply(const Word& w) const;
  CyclicWord apply(const CyclicWord& w) const;
  Endomorphism compose(const Endomorphism& inner) const;  // this ∘ inner
  Endomorphism power(int k) const;

  // Entry (i, j) = signed count of letter i in the image of basis letter j,
  // so abelianizations compose contravariantly: ab(f ∘ g) = ab(f) * ab(g).
  IntMatrix abelianization() const;

  bool operator==(const Endomorphism& o) const {
    return basis_ == o.basis_ && images_ == o.images_;
  }

 private:
  Basis basis_;
  std::vector<Word> images_;
};

class Automorphism {
 public:
  // Verifies that the two maps invert each other on every basis letter.
  Automorphism(Endomorphism forward, Endomorphism inverse);

  const Endomorphism& forward() const { return fwd_; }
  const Endomorphism& inverse() const { return inv_; }

 private:
  Endomorphism fwd_;
  Endomorphism inv_;
};

struct NotSurjective {
  std::string reason;
};

// Constructive inversion: Nielsen-reduce the image tuple while replaying the
// moves on a tuple of formal letters; succeeds iff the images form a basis.
std::variant<Automorphism, NotSurjective> invert(const Endomorphism& phi);

// Bounded search for g with phi = inn_g ∘ psi, |g| <= bound. The identity
// conjugator is reported as an empty word. Inconclusive when nullopt.
std::optional<Word> equal_up_to_inner(const Endomorphism& phi,
                                      const Endomorphism& psi, int bound);

long long det_integer(const IntMatrix& m);  // Bareiss, exact

// Expresses each target letter of F_N as a word in abstract generator symbols
// y_1..y_k (as a Word over a rank-k basis) given their values `gens` in F_N.
// Empty result if `gens` do not generate F_N.
std::optional<std::vector<Word>> express_basis_in(const std::vector<Word>& gens,
                                                  int rank);

}  // namespace vstree::fg
