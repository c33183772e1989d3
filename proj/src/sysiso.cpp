#include "vstree/sysiso.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <set>

namespace vstree::iso {

Rational MultiInterval::total_length() const {
  Rational t = 0;
  for (const Interval& c : components) t += c.length();
  return t;
}

void MultiInterval::validate() const {
  for (const Interval& c : components) {
    if (c.hi <= c.lo) throw std::invalid_argument("intervals need positive length");
  }
  for (const Gluing& g : gluings) {
    if (g.comp_a < 0 || g.comp_a >= static_cast<int>(components.size()) ||
        g.comp_b < 0 || g.comp_b >= static_cast<int>(components.size()) ||
        g.end_a < 0 || g.end_a > 1 || g.end_b < 0 || g.end_b > 1) {
      throw std::invalid_argument("gluing out of range");
    }
  }
  // Gluing data must stay a forest on the component endpoints.
  if (!gluings.empty()) {
    std::map<std::pair<int, int>, int> node;
    std::vector<int> parent;
    auto id = [&](int c, int e) {
      auto [it, fresh] = node.try_emplace({c, e}, static_cast<int>(parent.size()));
      if (fresh) parent.push_back(it->second);
      return it->second;
    };
    std::function<int(int)> find = [&](int x) {
      while (parent[static_cast<size_t>(x)] != x) x = parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
      return x;
    };
    for (const Gluing& g : gluings) {
      int a = find(id(g.comp_a, g.end_a));
      int b = find(id(g.comp_b, g.end_b));
      if (a == b) throw std::invalid_argument("gluing data contains a cycle");
      parent[static_cast<size_t>(a)] = b;
    }
  }
}

std::optional<Point> PartialIsometry::apply(const Point& p) const {
  if (!defined || p.comp != dom_comp || p.x < dom_lo || p.x > dom_hi) {
    return std::nullopt;
  }
  Rational y = orientation > 0 ? Rational(ran_lo + (p.x - dom_lo))
                               : Rational(ran_hi - (p.x - dom_lo));
  return Point{ran_comp, y};
}

std::optional<Point> PartialIsometry::apply_inverse(const Point& p) const {
  if (!defined || p.comp != ran_comp || p.x < ran_lo || p.x > ran_hi) {
    return std::nullopt;
  }
  Rational y = orientation > 0 ? Rational(dom_lo + (p.x - ran_lo))
                               : Rational(dom_lo + (ran_hi - p.x));
  return Point{dom_comp, y};
}

void SystemOfIsometries::validate() const {
  K.validate();
  std::set<int> labels;
  for (const PartialIsometry& g : gens) {
    if (!labels.insert(g.label).second) {
      throw std::invalid_argument("duplicate generator label");
    }
    if (!g.defined) continue;
    auto inside = [&](int comp, const Rational& lo, const Rational& hi) {
      if (comp < 0 || comp >= static_cast<int>(K.components.size())) return false;
      const Interval& c = K.components[static_cast<size_t>(comp)];
      return lo >= c.lo && hi <= c.hi && lo < hi;
    };
    if (!inside(g.dom_comp, g.dom_lo, g.dom_hi) ||
        !inside(g.ran_comp, g.ran_lo, g.ran_hi)) {
      throw std::invalid_argument("generator domain/range outside K");
    }
    if (g.dom_hi - g.dom_lo != g.ran_hi - g.ran_lo) {
      throw std::invalid_argument("generator is not an isometry");
    }
    if (g.orientation != 1 && g.orientation != -1) {
      throw std::invalid_argument("orientation must be +-1");
    }
  }
}

std::vector<Point> SystemOfIsometries::singular_points() const {
  std::set<Point> pts;
  for (const PartialIsometry& g : gens) {
    if (!g.defined) continue;
    pts.insert({g.dom_comp, g.dom_lo});
    pts.insert({g.dom_comp, g.dom_hi});
    pts.insert({g.ran_comp, g.ran_lo});
    pts.insert({g.ran_comp, g.ran_hi});
  }
  return {pts.begin(), pts.end()};
}

SuspensionStats suspend_stats(const SystemOfIsometries& s) {
  SuspensionStats st;
  std::set<Point> endpoints;
  for (const PartialIsometry& g : s.gens) {
    if (!g.defined) continue;
    ++st.bands;
    const Interval& c = s.K.components[static_cast<size_t>(g.dom_comp)];
    if (g.dom_lo == c.lo && g.dom_hi == c.hi) ++st.full_width_bands;
    endpoints.insert({g.dom_comp, g.dom_lo});
    endpoints.insert({g.dom_comp, g.dom_hi});
    endpoints.insert({g.ran_comp, g.ran_lo});
    endpoints.insert({g.ran_comp, g.ran_hi});
  }
  st.singular_points = static_cast<int>(endpoints.size());
  return st;
}

OrbitResult orbit_closure(const SystemOfIsometries& s, const Point& x, int depth) {
  OrbitResult res;
  std::set<Point> seen{x};
  std::vector<Point> frontier{x};
  int rounds = 0;
  while (!frontier.empty()) {
    std::vector<Point> next;
    for (const Point& p : frontier) {
      for (const PartialIsometry& g : s.gens) {
        for (auto q : {g.apply(p), g.apply_inverse(p)}) {
          if (q && seen.insert(*q).second) next.push_back(*q);
        }
      }
    }
    if (next.empty()) break;
    ++rounds;
    if (rounds > depth) {
      res.finite = false;
      res.depth_used = depth;
      res.points.assign(seen.begin(), seen.end());
      return res;
    }
    frontier = std::move(next);
  }
  res.finite = true;
  res.depth_used = rounds;
  res.points.assign(seen.begin(), seen.end());
  return res;
}

namespace {

// Cells of each component between consecutive cut points.
std::vector<Cell> cells_from_cuts(const MultiInterval& K,
                                  const std::vector<Point>& cuts) {
  std::vector<Cell> cells;
  for (int c = 0; c < static_cast<int>(K.components.size()); ++c) {
    std::vector<Rational> xs{K.components[static_cast<size_t>(c)].lo,
                             K.components[static_cast<size_t>(c)].hi};
    for (const Point& p : cuts) {
      if (p.comp == c && p.x > xs.front() && p.x < K.components[static_cast<size_t>(c)].hi) {
        xs.push_back(p.x);
      }
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    for (size_t i = 0; i + 1 < xs.size(); ++i) {
      cells.push_back({c, xs[i], xs[i + 1]});
    }
  }
  return cells;
}

int cell_containing(const std::vector<Cell>& cells, const Point& p) {
  for (int i = 0; i < static_cast<int>(cells.size()); ++i) {
    const Cell& c = cells[static_cast<size_t>(i)];
    if (c.comp == p.comp && c.lo <= p.x && p.x <= c.hi) return i;
  }
  return -1;
}

// Image cell index of cell i under generator g, or -1 when the cell is not
// inside the domain. With cuts closed under the pseudo-group, a domain cell
// maps onto exactly one cell.
int map_cell(const std::vector<Cell>& cells, const PartialIsometry& g, int i) {
  const Cell& c = cells[static_cast<size_t>(i)];
  if (!g.defined || c.comp != g.dom_comp || c.lo < g.dom_lo || c.hi > g.dom_hi) {
    return -1;
  }
  Rational mid = (c.lo + c.hi) / 2;
  auto q = g.apply({c.comp, mid});
  if (!q) return -1;
  int j = cell_containing(cells, *q);
  if (j < 0) return -1;
  const Cell& d = cells[static_cast<size_t>(j)];
  if (d.length() != c.length()) {
    throw std::logic_error("cut refinement is not generator-compatible");
  }
  return j;
}

}  // namespace

ImanishiDecomposition imanishi_decompose(const SystemOfIsometries& s, int depth) {
  s.validate();
  ImanishiDecomposition out;
  out.depth = depth;
  out.all_singular_closed = true;
  std::set<Point> cutset;
  std::vector<std::vector<Point>> open_samples;
  for (const Point& p : s.singular_points()) {
    OrbitResult orb = orbit_closure(s, p, depth);
    if (orb.finite) {
      for (const Point& q : orb.points) cutset.insert(q);
    } else {
      out.all_singular_closed = false;
      open_samples.push_back(orb.points);
    }
  }
  out.cuts.assign(cutset.begin(), cutset.end());
  std::vector<Cell> cells = cells_from_cuts(s.K, out.cuts);
  // Cells visited by a non-closing orbit sample carry minimal evidence.
  std::vector<bool> minimal(cells.size(), false);
  for (const auto& sample : open_samples) {
    for (const Point& p : sample) {
      int i = cell_containing(cells, p);
      if (i >= 0) minimal[static_cast<size_t>(i)] = true;
    }
  }
  for (size_t i = 0; i < cells.size(); ++i) {
    ImanishiComponent comp;
    comp.cell = cells[i];
    comp.compact_leaves = !minimal[i];
    comp.evidence_depth = depth;
    out.components.push_back(comp);
  }
  return out;
}

MeasureCone invariant_measures(const SystemOfIsometries& s, int depth) {
  s.validate();
  MeasureCone cone;
  cone.depth = depth;
  std::set<Point> cutset;
  for (const Point& p : s.singular_points()) {
    OrbitResult orb = orbit_closure(s, p, depth);
    if (!orb.finite) {
      throw SingularOrbitOpen("a singular orbit did not close within depth");
    }
    for (const Point& q : orb.points) cutset.insert(q);
  }
  std::vector<Point> cuts(cutset.begin(), cutset.end());
  cone.cells = cells_from_cuts(s.K, cuts);
  const int n = static_cast<int>(cone.cells.size());
  // Union cells identified by some generator.
  std::vector<int> parent(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) parent[static_cast<size_t>(i)] = i;
  std::function<int(int)> find = [&](int x) {
    while (parent[static_cast<size_t>(x)] != x) {
      x = parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
    }
    return x;
  };
  std::vector<bool> touched(static_cast<size_t>(n), false);
  for (int i = 0; i < n; ++i) {
    for (const PartialIsometry& g : s.gens) {
      int j = map_cell(cone.cells, g, i);
      if (j >= 0) {
        touched[static_cast<size_t>(i)] = true;
        touched[static_cast<size_t>(j)] = true;
        int a = find(i), b = find(j);
        if (a != b) parent[static_cast<size_t>(a)] = b;
      }
    }
  }
  std::map<int, int> class_id;
  for (int i = 0; i < n; ++i) {
    int r = find(i);
    auto [it, fresh] = class_id.try_emplace(r, static_cast<int>(cone.cell_classes.size()));
    if (fresh) cone.cell_classes.push_back({});
    cone.cell_classes[static_cast<size_t>(it->second)].push_back(i);
  }
  // One Lebesgue ray per class; a midpoint Dirac per untouched class.
  for (const auto& cls : cone.cell_classes) {
    MeasureRay ray;
    ray.cell_density.assign(static_cast<size_t>(n), Rational(0));
    for (int i : cls) ray.cell_density[static_cast<size_t>(i)] = 1;
    cone.rays.push_back(std::move(ray));
    bool untouched = true;
    for (int i : cls) {
      if (touched[static_cast<size_t>(i)]) untouched = false;
    }
    if (untouched) {
      MeasureRay dirac;
      dirac.cell_density.assign(static_cast<size_t>(n), Rational(0));
      dirac.atomic = true;
      for (int i : cls) {
        const Cell& c = cone.cells[static_cast<size_t>(i)];
        dirac.atoms.push_back({Point{c.comp, (c.lo + c.hi) / 2}, Rational(1)});
      }
      cone.rays.push_back(std::move(dirac));
    }
  }
  return cone;
}

MeasureRay lebesgue_ray(const MeasureCone& cone) {
  MeasureRay mu;
  mu.cell_density.assign(cone.cells.size(), Rational(1));
  return mu;
}

bool measure_invariant(const SystemOfIsometries& s, const MeasureCone& cone,
                       const MeasureRay& mu) {
  if (mu.cell_density.size() != cone.cells.size()) return false;
  for (int i = 0; i < static_cast<int>(cone.cells.size()); ++i) {
    for (const PartialIsometry& g : s.gens) {
      int j = map_cell(cone.cells, g, i);
      if (j >= 0 &&
          mu.cell_density[static_cast<size_t>(i)] != mu.cell_density[static_cast<size_t>(j)]) {
        return false;
      }
    }
  }
  for (const auto& [p, w] : mu.atoms) {
    for (const PartialIsometry& g : s.gens) {
      for (auto q : {g.apply(p), g.apply_inverse(p)}) {
        if (!q) continue;
        bool found = false;
        for (const auto& [p2, w2] : mu.atoms) {
          if (p2 == *q && w2 == w) found = true;
        }
        if (!found) return false;
      }
    }
  }
  return true;
}

Projection project_by_measure(const SystemOfIsometries& s, const MeasureCone& cone,
                              const MeasureRay& mu, int depth) {
  (void)depth;
  if (!measure_invariant(s, cone, mu)) {
    throw std::invalid_argument("measure fails the invariance re-check");
  }
  Projection out;
  out.total_mass = 0;
  // Piecewise mass coordinate per component: cells weighted by density, atoms
  // blown up to segments of their weight.
  struct Piece {
    Rational lo, hi;    // original coordinates
    Rational mass;      // contributes this much length
    bool atom = false;
    Rational at;        // atom position when atom
  };
  const int ncomp = static_cast<int>(s.K.components.size());
  std::vector<std::vector<Piece>> pieces(static_cast<size_t>(ncomp));
  for (size_t ci = 0; ci < cone.cells.size(); ++ci) {
    const Cell& c = cone.cells[ci];
    pieces[static_cast<size_t>(c.comp)].push_back(
        {c.lo, c.hi, mu.cell_density[ci] * c.length(), false, 0});
  }
  for (const auto& [p, w] : mu.atoms) {
    pieces[static_cast<size_t>(p.comp)].push_back({p.x, p.x, w, true, p.x});
  }
  for (auto& v : pieces) {
    std::sort(v.begin(), v.end(), [](const Piece& a, const Piece& b) {
      if (a.lo != b.lo) return a.lo < b.lo;
      return a.atom < b.atom;
    });
  }
  // Mass coordinate of an original point (left-continuous at atoms).
  auto mass_coord = [&](const Point& p) {
    Rational m = 0;
    for (const Piece& pc : pieces[static_cast<size_t>(p.comp)]) {
      if (pc.atom) {
        if (pc.at < p.x) m += pc.mass;
      } else {
        if (pc.hi <= p.x) {
          m += pc.mass;
        } else if (pc.lo < p.x) {
          m += pc.mass * (p.x - pc.lo) / (pc.hi - pc.lo);
        }
      }
    }
    return m;
  };
  // New components: one per original component with positive total mass.
  std::vector<int> comp_map(static_cast<size_t>(ncomp), -1);
  for (int c = 0; c < ncomp; ++c) {
    Rational total = 0;
    for (const Piece& pc : pieces[static_cast<size_t>(c)]) total += pc.mass;
    if (total > 0) {
      comp_map[static_cast<size_t>(c)] = static_cast<int>(out.system.K.components.size());
      out.system.K.components.push_back({Rational(0), total});
      out.total_mass += total;
    }
  }
  bool any_density = false;
  for (const Rational& d : mu.cell_density) {
    if (d > 0) any_density = true;
  }
  out.simplicial_residue = !any_density && !mu.atoms.empty();
  // Transport generators.
  for (const PartialIsometry& g : s.gens) {
    PartialIsometry ng;
    ng.label = g.label;
    ng.defined = false;
    if (g.defined && comp_map[static_cast<size_t>(g.dom_comp)] >= 0 &&
        comp_map[static_cast<size_t>(g.ran_comp)] >= 0) {
      Rational dlo = mass_coord({g.dom_comp, g.dom_lo});
      Rational dhi = mass_coord({g.dom_comp, g.dom_hi});
      Rational rlo = mass_coord({g.ran_comp, g.ran_lo});
      Rational rhi = mass_coord({g.ran_comp, g.ran_hi});
      if (dhi > dlo) {
        ng.defined = true;
        ng.dom_comp = comp_map[static_cast<size_t>(g.dom_comp)];
        ng.ran_comp = comp_map[static_cast<size_t>(g.ran_comp)];
        ng.dom_lo = dlo;
        ng.dom_hi = dhi;
        ng.ran_lo = rlo;
        ng.ran_hi = rhi;
        ng.orientation = g.orientation;
      }
    }
    out.system.gens.push_back(ng);
  }
  out.system.rank_hint = s.rank_hint;
  if (!out.system.K.components.empty()) out.system.validate();
  return out;
}

std::vector<SparseCertificate> detect_sparse(const SystemOfIsometries& s, int depth) {
  std::vector<SparseCertificate> out;
  std::set<std::vector<Point>> seen_orbits;
  std::vector<Point> probes = s.singular_points();
  if (probes.empty()) {
    // No bands at all: every component endpoint has a singleton orbit.
    for (int c = 0; c < static_cast<int>(s.K.components.size()); ++c) {
      probes.push_back({c, s.K.components[static_cast<size_t>(c)].lo});
      probes.push_back({c, s.K.components[static_cast<size_t>(c)].hi});
    }
  }
  for (const Point& p : probes) {
    OrbitResult orb = orbit_closure(s, p, depth);
    if (orb.finite && seen_orbits.insert(orb.points).second) {
      out.push_back({p, orb.points});
    }
  }
  return out;
}

bool cell_union_invariant(const SystemOfIsometries& s, const CellUnion& u) {
  auto covered = [&](int comp, Rational lo, Rational hi) {
    // is [lo,hi] covered by u up to measure zero?
    std::vector<std::pair<Rational, Rational>> parts;
    for (const Cell& c : u) {
      if (c.comp != comp) continue;
      Rational a = std::max(c.lo, lo), b = std::min(c.hi, hi);
      if (a < b) parts.push_back({a, b});
    }
    std::sort(parts.begin(), parts.end());
    Rational at = lo;
    for (auto& [a, b] : parts) {
      if (a > at) return false;
      if (b > at) at = b;
    }
    return at >= hi;
  };
  for (const Cell& c : u) {
    for (const PartialIsometry& g : s.gens) {
      if (!g.defined || c.comp != g.dom_comp) continue;
      Rational a = std::max(c.lo, g.dom_lo), b = std::min(c.hi, g.dom_hi);
      if (a >= b) continue;
      auto qa = g.apply({c.comp, a});
      auto qb = g.apply({c.comp, b});
      Rational ilo = std::min(qa->x, qb->x), ihi = std::max(qa->x, qb->x);
      if (!covered(g.ran_comp, ilo, ihi)) return false;
    }
  }
  return true;
}

MeetResidual family_meet_and_residual(const SystemOfIsometries& s,
                                      const CellUnion& a, const CellUnion& b) {
  if (!cell_union_invariant(s, a) || !cell_union_invariant(s, b)) {
    throw std::invalid_argument("family_meet_and_residual requires invariant unions");
  }
  MeetResidual out;
  for (const Cell& x : a) {
    bool meets = false;
    for (const Cell& y : b) {
      if (x.comp != y.comp) continue;
      Rational lo = std::max(x.lo, y.lo), hi = std::min(x.hi, y.hi);
      if (lo < hi) {
        out.meet.push_back({x.comp, lo, hi});
        meets = true;
      }
    }
    if (!meets) out.residual.push_back(x);
  }
  // Dedupe meet cells.
  std::sort(out.meet.begin(), out.meet.end(), [](const Cell& p, const Cell& q) {
    if (p.comp != q.comp) return p.comp < q.comp;
    if (p.lo != q.lo) return p.lo < q.lo;
    return p.hi < q.hi;
  });
  out.meet.erase(std::unique(out.meet.begin(), out.meet.end(),
                             [](const Cell& p, const Cell& q) {
                               return p.comp == q.comp && p.lo == q.lo && p.hi == q.hi;
                             }),
                 out.meet.end());
  return out;
}

}  // namespace vstree::iso
