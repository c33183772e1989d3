#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "vstree/stallings.hpp"
#include "vstree/sysiso.hpp"
#include "vstree/whitehead.hpp"
#include "vstree/words.hpp"

namespace vstree::gg {

using fg::Basis;
using fg::CyclicWord;
using fg::Letter;
using fg::Word;
using iso::Rational;
using st::SubgroupGraph;

// Finite quotient data for a simplicial F_N-tree. Vertex groups are
// subgroups of the ambient group given by generator words; edge groups are
// trivial or cyclic. Edges without a stable letter form a spanning tree and
// include their group word identically into both endpoint groups; an edge
// with stable letter s includes g on the from-side and s^-1 g s on the
// to-side.
struct GraphOfGroups {
  int rank = 0;
  struct Vertex {
    std::string name;
    std::vector<Word> gens;
  };
  struct Edge {
    std::string name;
    int from = 0, to = 0;
    Rational length{1};
    std::optional<Word> group;   // cyclic generator; nullopt = trivial
    std::optional<Word> stable;  // nullopt = spanning-tree edge
  };
  std::vector<Vertex> vertices;
  std::vector<Edge> edges;

  void validate() const;  // structure, inclusions, marking generates F_N
  SubgroupGraph vertex_graph(int v) const;
  int nontrivial_edge_count() const;
};

enum class EdgeVerdict { Trivial, MaximalCyclic, Violating };

struct VerySmallReport {
  std::vector<EdgeVerdict> edge_verdicts;
  std::vector<std::string> edge_notes;
  bool minimal = false;
  std::vector<std::string> minimality_notes;
  bool tripod_ok = false;  // sufficient-condition check on quotient data
  std::vector<std::string> tripod_notes;
  bool overall = false;
};

VerySmallReport validate_very_small(const GraphOfGroups& g);

// Bass-Serre fold at the chosen end of an edge by g in that end's vertex
// group: the edge group grows by g and the far end's vertex group absorbs
// the transported element. Folding at the to-end of a loop is not modeled.
GraphOfGroups fold_edge(const GraphOfGroups& g, int edge, int end, const Word& elem);

struct UnfoldMove {
  int edge = 0;
  int end = 0;          // endpoint whose vertex group was split
  Word element;         // the edge-group generator that was pulled off
  std::vector<Word> complement;  // new vertex group generators
};

struct NoUnfoldFound {
  std::string reason;
};

struct UnfoldResult {
  std::vector<UnfoldMove> moves;
  GraphOfGroups splitting;  // has at least one trivial edge group
};

// Iteratively exhibits an edge group as a free factor of an endpoint vertex
// group and pulls it off; each step strictly decreases the number of edges
// with nontrivial stabilizer.
std::variant<UnfoldResult, NoUnfoldFound> unfold_to_free_splitting(
    const GraphOfGroups& g);

struct CsimpEntry {
  std::string subject;  // edge or vertex name
  bool in_proper_factor = false;
  int factor_rank = 0;
  std::vector<Word> factor_gens;
};

struct InternalInconsistency : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CsimpReport {
  std::vector<CsimpEntry> edge_entries;    // every edge group in a proper factor
  std::vector<CsimpEntry> vertex_entries;  // at most one filling class
  int filling_vertex_classes = 0;
};

// Throws InternalInconsistency when two vertex classes certify filling.
CsimpReport csimp_report(const GraphOfGroups& g);

// --- skeletons of transverse coverings ---

struct CoveringData {
  int rank = 0;
  struct Orbit {
    std::string name;
    std::vector<Word> stab_gens;
  };
  std::vector<Orbit> trees;
  std::vector<Orbit> points;
  struct Incidence {
    int tree = 0, point = 0;
    Word conj;  // the point translated by conj lies in the tree representative
  };
  std::vector<Incidence> incidences;
};

struct SkeletonData {
  struct EdgeStab {
    int tree = 0, point = 0;
    SubgroupGraph stabilizer;  // Stab(x)^conj ∩ Stab(Y)
    bool trivial = false;
  };
  std::vector<EdgeStab> edges;
  bool bipartite = true;
  bool free_splitting = false;  // some edge stabilizer trivial
};

// Throws std::invalid_argument when two tree orbits share two or more point
// orbits (the quotient-level transverse-family axiom check).
SkeletonData build_skeleton(const CoveringData& data);

// --- graphs of actions: assembled length functions ---

struct VertexOracle {
  enum class Kind { PointTree, SegmentTrivial, LineTranslation };
  Kind kind = Kind::PointTree;
  // Attaching point positions, keyed by oriented edge ends (edge, end) where
  // end 0 = the from-side copy, 1 = the to-side copy.
  std::map<std::pair<int, int>, Rational> marks;
  // LineTranslation: the (cyclic) vertex group generator translates by tlen.
  Rational tlen{0};
};

struct AssembledLengthFunction {
  GraphOfGroups skeleton;
  std::vector<VertexOracle> oracles;  // one per vertex
};

// Translation length of g in the dual tree of the graph of actions: skeleton
// edge lengths plus vertex-tree gaps between consecutive attaching points
// along the axis; elliptic elements report their vertex tree's own length.
Rational assemble_length(const AssembledLengthFunction& a, const Word& g);

// h = w^k as based elements; returns k (0 when h is trivial).
std::optional<long> power_of(const Word& h, const Word& w);

}  // namespace vstree::gg
