#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "vstree/endomorphism.hpp"
#include "vstree/stallings.hpp"
#include "vstree/words.hpp"

namespace vstree::wh {

using fg::Basis;
using fg::CyclicWord;
using fg::Endomorphism;
using fg::Letter;
using fg::Word;
using st::SubgroupGraph;

// Whitehead automorphism of the second kind, determined by a multiplier `a`
// and a set A of signed letters with a in A, a^-1 not in A. Acts by
//   x -> x a        if x in A, x^-1 not in A
//   x -> a^-1 x     if x^-1 in A, x not in A
//   x -> a^-1 x a   if both signs in A
// for positive letters x distinct from |a|, and fixes a.
struct WhiteheadMove {
  Letter multiplier = 0;
  std::vector<Letter> set;  // sorted, includes multiplier

  Endomorphism endo(const Basis& b) const;
  std::string str(const Basis& b) const;
};

std::vector<WhiteheadMove> all_whitehead_moves(int rank);

// Adjacency structure between signed letters: for cyclic words, one edge
// {w_i^-1, w_{i+1}} per cyclic position; for subgroup cores, the clique
// expansion of each vertex link.
class WhiteheadGraph {
 public:
  static WhiteheadGraph of_words(const std::vector<CyclicWord>& ws, int rank);
  static WhiteheadGraph of_subgroup(const SubgroupGraph& core);

  int rank() const { return rank_; }
  int edge_count() const;
  int multiplicity(Letter x, Letter y) const;
  bool letter_used(Letter x) const;

  bool connected_on_used() const;           // ignoring untouched letters
  std::optional<Letter> cut_vertex() const; // over the used subgraph

  std::string str(const Basis& b) const;

 private:
  int slot(Letter l) const { return fg::letter_key(l, rank_); }
  int rank_ = 0;
  std::vector<std::vector<int>> adj_;
};

// Either a cyclic word or a subgroup class, in the coordinates of some
// ambient free group of rank `rank`.
struct Target {
  int rank = 0;
  std::optional<CyclicWord> word;
  std::vector<Word> subgroup_gens;  // used when word is empty

  bool is_word() const { return word.has_value(); }
  static Target of_word(CyclicWord w, int rank);
  static Target of_subgroup(std::vector<Word> gens, int rank);

  long complexity() const;  // cyclic length, or core edge count
  Target apply(const WhiteheadMove& m) const;
  std::vector<int> used_letter_indices() const;
  WhiteheadGraph whitehead_graph() const;
  std::string key() const;
};

struct MinimizeResult {
  Target minimal;
  std::vector<WhiteheadMove> moves;  // replays input -> minimal
};

// No Whitehead automorphism strictly decreases the complexity of the result;
// plateau search depth is 2N per the certificate contract.
MinimizeResult whitehead_minimize(const Target& t);

struct InProperFactor {
  std::vector<WhiteheadMove> moves;   // input -> witness form
  std::vector<int> used_letters;      // positive indices used by witness form
  std::optional<Letter> cut_vertex;   // when detected via a cut, informative
  SubgroupGraph factor;               // a proper factor containing the input
};

struct Filling {
  std::vector<WhiteheadMove> moves;  // input -> minimal form
  long minimal_complexity = 0;
  int plateau_bound = 0;  // the searched plateau depth (2N)
};

struct FactorCertificate {
  std::variant<InProperFactor, Filling> verdict;
  bool in_proper_factor() const {
    return std::holds_alternative<InProperFactor>(verdict);
  }
};

FactorCertificate is_in_proper_factor(const Target& t);

// Replays the certificate against the original target; true when every claim
// checks out (move arithmetic, containment, minimality record).
bool replay_certificate(const Target& original, const FactorCertificate& cert);

// Smallest free factor of F_rank containing the target, as a subgroup graph
// in the original coordinates.
SubgroupGraph fill(const Target& t);

// Whitehead-orbit primitivity: the cyclic word minimizes to a single letter.
bool is_primitive(const CyclicWord& w, int rank);

}  // namespace vstree::wh
