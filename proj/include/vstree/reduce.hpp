#pragma once

#include <optional>
#include <string>
#include <vector>

#include "vstree/endomorphism.hpp"
#include "vstree/gog.hpp"
#include "vstree/limits.hpp"
#include "vstree/stallings.hpp"

namespace vstree::red {

using fg::Basis;
using fg::CyclicWord;
using fg::Endomorphism;
using fg::Letter;
using fg::Word;
using st::SubgroupGraph;

struct FactorClass {
  std::string name;
  std::vector<Word> gens;
  SubgroupGraph graph;
  enum class Evidence { BasisSubset, WhiteheadChain, SplittingVertex };
  Evidence evidence = Evidence::BasisSubset;

  int rank() const { return graph.index_and_rank().rank; }
};

struct Bounds {
  int ball = 6;
  double tol = 1e-6;
  int max_power = 6;
  int order_bound = 12;
  int periodic_radius = 4;   // complexity bound for Fill(periodic) candidates
  int conjugator_bound = 2;  // bounded conjugation in intersection checks
  int n_max = 40;
  long explicit_cap = 1 << 19;
};

// Everything a verdict rests on; numbers carry their provenance.
struct DetectorLedger {
  int ball = 0;
  double tol = 0;
  int classes_scanned = 0;
  int products_checked = 0;
  double max_value = 0;
  double min_positive = 0;
  std::vector<double> minima_per_radius;
  double min_over_max = 0;
  // dynamical components
  bool nondegenerate = false;
  bool growth_saturated = false;
  double factor_lambda = 0;
  bool recurrent = false;
  int recurrence_power = 0;
  bool overlap_evidence = false;
  double overlap_ratio = 1.0;
  // peripheral component
  bool all_below_tol = false;
};

struct PeripheralResult {
  bool positive = false;
  DetectorLedger ledger;
};

struct DynamicalResult {
  bool positive = false;
  DetectorLedger ledger;
};

// Positive iff every nontrivial conjugacy class of F in the ball, including
// sampled pairwise products, has certified limit length below tol.
PeripheralResult peripheral_detect(const lim::LimitLengthFunction& lengths,
                                   const FactorClass& factor, int ball, double tol);

// Dense-orbit evidence: (a) a nondegenerate spectrum, (b) growth saturation
// (the factor reaches the globally fastest stratum), (c) phi-recurrence
// (phi^k(F) conjugate into F, exact), (d) axis-overlap cancellation in the
// sampled spectrum. The ledger also records the raw per-radius minima.
DynamicalResult dynamical_detect(const lim::LimitLengthFunction& lengths,
                                 const FactorClass& factor, int ball, double tol,
                                 int max_power);

struct ReducingEntry {
  FactorClass factor;
  enum class Kind { Peripheral, Dynamical };
  Kind kind = Kind::Peripheral;
  DetectorLedger ledger;
};

struct ReducingReport {
  std::vector<ReducingEntry> peripheral;  // inclusion-maximal
  std::vector<ReducingEntry> dynamical;
  std::vector<int> minimal_dynamical;  // indices into dynamical
  std::vector<int> characteristic;     // orbit representatives within minimal
  std::vector<std::string> intersection_notes;  // pairwise triviality checks
  Bounds bounds;
  bool inverse_available = false;
  int candidates_checked = 0;
};

std::vector<FactorClass> candidate_factors(const Endomorphism& phi,
                                           const Bounds& bounds);

ReducingReport analyze(const Endomorphism& phi, const Bounds& bounds);

// Exact search for factors with phi^k(F) conjugate into F; for verified
// automorphisms this coincides with fixing the conjugacy class.
std::vector<std::pair<int, FactorClass>> invariant_factor_search(
    const Endomorphism& phi, int max_power, int complexity_bound);

bool verify_invariance(const Endomorphism& phi, int power, const FactorClass& f);

struct ArationalityReport {
  bool reducer_found = false;
  std::optional<ReducingEntry> reducer;
  int candidates_checked = 0;
  Bounds bounds;
  // positive-direction evidence
  int lamination_members = 0;
  bool leaf_turns_connected = false;
  std::vector<std::string> leaf_cut_vertices;
  std::vector<std::string> elliptic_periodic_classes;  // surface-type vocabulary
  std::string note;
};

ArationalityReport arationality_report(const Endomorphism& phi, const Bounds& bounds);

struct ControlResult {
  enum class Kind { Constructed, SelfControl, NotConstructed };
  Kind kind = Kind::NotConstructed;
  std::optional<gg::GraphOfGroups> tree;
  std::vector<std::string> covered;    // factors with verified elliptic elements
  std::vector<std::string> uncovered;  // explicit coverage gaps
  std::string reason;
};

ControlResult control_tree(const Endomorphism& phi, const ReducingReport& report,
                           const Bounds& bounds);

struct ClassificationResult {
  enum class Kind { FiniteOrder, FixesFactorClass, FillingLaminationCandidate };
  Kind kind = Kind::FillingLaminationCandidate;
  int power = 0;
  std::optional<FactorClass> factor;
  std::optional<ArationalityReport> forward_evidence;
  std::optional<ArationalityReport> inverse_evidence;
  bool inverse_available = false;
  Bounds bounds;
};

ClassificationResult classify(const Endomorphism& phi, const Bounds& bounds);

}  // namespace vstree::red
