#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace vstree::iso {

using Rational = boost::multiprecision::cpp_rational;

struct Interval {
  Rational lo, hi;
  Rational length() const { return hi - lo; }
};

// Finite list of closed rational intervals; optional tree gluing metadata
// (which endpoints are identified in the ambient finite tree).
struct MultiInterval {
  std::vector<Interval> components;
  struct Gluing {
    int comp_a, end_a;  // end: 0 = lo, 1 = hi
    int comp_b, end_b;
  };
  std::vector<Gluing> gluings;

  Rational total_length() const;
  void validate() const;
};

struct Point {
  int comp = 0;
  Rational x;
  bool operator==(const Point& o) const { return comp == o.comp && x == o.x; }
  bool operator<(const Point& o) const {
    return comp != o.comp ? comp < o.comp : x < o.x;
  }
};

struct PartialIsometry {
  int label = 0;  // 0-based basis letter index
  bool defined = false;
  int dom_comp = 0, ran_comp = 0;
  Rational dom_lo, dom_hi, ran_lo, ran_hi;
  int orientation = 1;  // +1 | -1

  std::optional<Point> apply(const Point& p) const;
  std::optional<Point> apply_inverse(const Point& p) const;
};

struct SystemOfIsometries {
  MultiInterval K;
  std::vector<PartialIsometry> gens;
  int rank_hint = 0;  // declared ambient rank N, 0 when unknown

  void validate() const;
  std::vector<Point> singular_points() const;  // domain/range endpoints
};

struct SuspensionStats {
  int bands = 0;               // generators with nonempty domain
  int singular_points = 0;     // distinct band endpoints
  int full_width_bands = 0;    // domains spanning an entire component
};

SuspensionStats suspend_stats(const SystemOfIsometries& s);

struct OrbitResult {
  bool finite = false;
  std::vector<Point> points;  // full orbit, or the depth-truncated sample
  int depth_used = 0;
};

// BFS closure of the pseudo-group orbit; `depth` bounds the number of
// expansion rounds that may discover new points.
OrbitResult orbit_closure(const SystemOfIsometries& s, const Point& x, int depth);

struct Cell {
  int comp = 0;
  Rational lo, hi;
  Rational length() const { return hi - lo; }
  bool operator==(const Cell& o) const {
    return comp == o.comp && lo == o.lo && hi == o.hi;
  }
};

struct ImanishiComponent {
  Cell cell;
  bool compact_leaves = false;
  int evidence_depth = 0;
};

struct ImanishiDecomposition {
  std::vector<Point> cuts;
  std::vector<ImanishiComponent> components;
  int depth = 0;
  bool all_singular_closed = false;
};

ImanishiDecomposition imanishi_decompose(const SystemOfIsometries& s, int depth);

struct SingularOrbitOpen : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct MeasureRay {
  std::vector<Rational> cell_density;            // per cone cell
  std::vector<std::pair<Point, Rational>> atoms;  // midpoint Diracs
  bool atomic = false;
};

struct MeasureCone {
  std::vector<Cell> cells;  // refinement by all singular orbits
  std::vector<std::vector<int>> cell_classes;  // pseudo-group orbit classes
  std::vector<MeasureRay> rays;
  int depth = 0;
};

// Extremal rays of the invariant-measure cone: one Lebesgue ray per cell
// class, plus a midpoint Dirac per class untouched by every generator.
// Throws SingularOrbitOpen when a needed orbit fails to close within depth.
MeasureCone invariant_measures(const SystemOfIsometries& s, int depth);

MeasureRay lebesgue_ray(const MeasureCone& cone);  // density 1 on every cell

// Independent re-check of invariance, generator by generator.
bool measure_invariant(const SystemOfIsometries& s, const MeasureCone& cone,
                       const MeasureRay& mu);

struct Projection {
  SystemOfIsometries system;
  bool simplicial_residue = false;  // atoms-only measure collapsed everything
  Rational total_mass;
};

Projection project_by_measure(const SystemOfIsometries& s, const MeasureCone& cone,
                              const MeasureRay& mu, int depth);

struct SparseCertificate {
  Point point;
  std::vector<Point> orbit;
};

std::vector<SparseCertificate> detect_sparse(const SystemOfIsometries& s, int depth);

// Invariant unions of subintervals (families of cells at the K level).
using CellUnion = std::vector<Cell>;

bool cell_union_invariant(const SystemOfIsometries& s, const CellUnion& u);

struct MeetResidual {
  CellUnion meet;      // nondegenerate pairwise intersections
  CellUnion residual;  // cells of A meeting no cell of B nondegenerately
};

// Preconditions: both unions invariant (verified; throws otherwise).
MeetResidual family_meet_and_residual(const SystemOfIsometries& s,
                                      const CellUnion& a, const CellUnion& b);

}  // namespace vstree::iso
