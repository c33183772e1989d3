#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vstree/words.hpp"

namespace vstree::st {

using fg::Basis;
using fg::CyclicWord;
using fg::Letter;
using fg::Word;

struct IndexRank {
  std::optional<long> index;  // nullopt = infinite
  int rank = 0;
};

// Folded labeled core graph with base vertex; canonical carrier of a finitely
// generated subgroup of F_N. Immutable after construction.
class SubgroupGraph {
 public:
  static SubgroupGraph build(const std::vector<Word>& generators, int rank);
  static SubgroupGraph trivial(int rank);
  static SubgroupGraph full(int rank);  // the rose, H = F_N

  int rank() const { return rank_; }
  int vertex_count() const { return static_cast<int>(out_.size()); }
  int edge_count() const;
  int base() const { return base_; }

  // -1 when absent; folded graphs have at most one edge per direction.
  int out_edge(int v, int letter_index) const { return out_[v][letter_index]; }
  int in_edge(int v, int letter_index) const { return in_[v][letter_index]; }

  // Endpoint of the path reading w from v, or nullopt if the path dies.
  std::optional<int> trace(int v, const Word& w) const;
  bool contains(const Word& w) const;

  SubgroupGraph intersect(const SubgroupGraph& other) const;
  IndexRank index_and_rank() const;
  bool is_full_group() const;
  bool is_trivial() const { return edge_count() == 0; }

  // Free basis from a spanning tree: one word per non-tree edge.
  std::vector<Word> graph_basis() const;

  // Rewrites w in H as a word over graph_basis() slots (letters over a rank-r
  // alphabet, r = rank of H). nullopt if w is not in H.
  std::optional<Word> express(const Word& w) const;

  // Basepoint-free core: strips all valence-1 vertices. Keys the conjugacy
  // class of H. Empty graph when H is trivial or cyclic collapses... cyclic
  // subgroups keep their loop cycle.
  SubgroupGraph cyclic_core() const;

  // Deterministic encoding of the labeled graph up to isomorphism.
  std::string canonical_key() const;

  // True iff there is a label-preserving graph map (automatically an
  // immersion, both graphs folded) cyclic_core(this) -> cyclic_core(other).
  // Certifies that some conjugate of H lies in K.
  bool conjugate_into(const SubgroupGraph& other) const;
  // Conjugator witness: c with H <= c K c^-1, when conjugate_into holds.
  std::optional<Word> conjugate_into_witness(const SubgroupGraph& other) const;
  bool conjugate_equal(const SubgroupGraph& other) const;

  // All reduced loop words at base of length <= max_len (language sample).
  std::vector<Word> loops_up_to(int max_len, size_t cap = 100000) const;

  std::string describe(const Basis& b) const;

 private:
  int rank_ = 0;
  int base_ = 0;
  std::vector<std::vector<int>> out_;
  std::vector<std::vector<int>> in_;

  void trim_to_core(bool keep_base);
  friend SubgroupGraph core_of(SubgroupGraph g, bool keep_base);
};

}  // namespace vstree::st
