#include "vstree/gog.hpp"

#include <algorithm>
#include <numeric>
#include <queue>
#include <set>
#include <sstream>

#include "vstree/endomorphism.hpp"

namespace vstree::gg {

namespace {

// w = c u c^-1 with u cyclically reduced; returns (root of w, exponent):
// w = r^k with r = c u0 c^-1, u = u0^k maximal.
std::pair<Word, long> based_root(const Word& w, int rank) {
  if (w.empty()) return {Word{}, 1};
  std::vector<Letter> ls = w.letters();
  size_t lo = 0, hi = ls.size();
  while (hi - lo >= 2 && ls[lo] == fg::inv(ls[hi - 1])) {
    ++lo;
    --hi;
  }
  std::vector<Letter> c(ls.begin(), ls.begin() + static_cast<long>(lo));
  std::vector<Letter> u(ls.begin() + static_cast<long>(lo), ls.begin() + static_cast<long>(hi));
  const size_t n = u.size();
  size_t period = n;
  for (size_t p = 1; p <= n / 2; ++p) {
    if (n % p != 0) continue;
    bool ok = true;
    for (size_t i = 0; i + p < n && ok; ++i) {
      if (u[i] != u[i + p]) ok = false;
    }
    if (ok) {
      period = p;
      break;
    }
  }
  std::vector<Letter> r = c;
  r.insert(r.end(), u.begin(), u.begin() + static_cast<long>(period));
  for (auto it = c.rbegin(); it != c.rend(); ++it) r.push_back(fg::inv(*it));
  return {Word::reduce(r, rank), static_cast<long>(n / period)};
}

bool subgroup_contains_all(const SubgroupGraph& g, const std::vector<Word>& ws) {
  for (const Word& w : ws) {
    if (!g.contains(w)) return false;
  }
  return true;
}

}  // namespace

std::optional<long> power_of(const Word& h, const Word& w) {
  if (h.empty()) return 0;
  if (w.empty()) return std::nullopt;
  for (int sign : {1, -1}) {
    Word base = sign > 0 ? w : w.inverse();
    Word acc = base;
    long k = 1;
    while (acc.size() <= h.size()) {
      if (acc == h) return sign * k;
      acc = acc * base;
      ++k;
      if (k > h.size() + 2) break;
    }
  }
  return std::nullopt;
}

SubgroupGraph GraphOfGroups::vertex_graph(int v) const {
  const auto& gens = vertices.at(static_cast<size_t>(v)).gens;
  if (gens.empty()) return SubgroupGraph::trivial(rank);
  return SubgroupGraph::build(gens, rank);
}

int GraphOfGroups::nontrivial_edge_count() const {
  int n = 0;
  for (const Edge& e : edges) {
    if (e.group && !e.group->empty()) ++n;
  }
  return n;
}

void GraphOfGroups::validate() const {
  if (rank < 1) throw std::invalid_argument("graph of groups needs rank >= 1");
  if (vertices.empty()) throw std::invalid_argument("graph of groups needs a vertex");
  const int nv = static_cast<int>(vertices.size());
  int tree_edges = 0;
  std::vector<int> parent(static_cast<size_t>(nv));
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[static_cast<size_t>(x)] != x) {
      x = parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
    }
    return x;
  };
  for (const Edge& e : edges) {
    if (e.from < 0 || e.from >= nv || e.to < 0 || e.to >= nv) {
      throw std::invalid_argument("edge endpoint out of range");
    }
    if (e.length < 0) throw std::invalid_argument("edge length must be nonnegative");
    if (!e.stable) {
      ++tree_edges;
      int a = find(e.from), b = find(e.to);
      if (a == b) throw std::invalid_argument("spanning-tree edges contain a cycle");
      parent[static_cast<size_t>(a)] = b;
    }
  }
  if (tree_edges != nv - 1) {
    throw std::invalid_argument("edges without stable letters must form a spanning tree");
  }
  // Inclusion checks for cyclic edge groups.
  for (const Edge& e : edges) {
    if (!e.group || e.group->empty()) continue;
    SubgroupGraph gf = vertex_graph(e.from);
    SubgroupGraph gt = vertex_graph(e.to);
    Word to_side = e.stable ? e.stable->inverse() * *e.group * *e.stable : *e.group;
    if (!gf.contains(*e.group)) {
      throw std::invalid_argument("edge group not included in its from-side vertex group");
    }
    if (!gt.contains(to_side)) {
      throw std::invalid_argument("edge group not included in its to-side vertex group");
    }
  }
  // Marking: vertex groups plus stable letters generate the whole group.
  std::vector<Word> gens;
  for (const Vertex& v : vertices) {
    gens.insert(gens.end(), v.gens.begin(), v.gens.end());
  }
  for (const Edge& e : edges) {
    if (e.stable) gens.push_back(*e.stable);
  }
  if (gens.empty() || !SubgroupGraph::build(gens, rank).is_full_group()) {
    throw std::invalid_argument("marking does not generate the full group");
  }
}

VerySmallReport validate_very_small(const GraphOfGroups& g) {
  g.validate();
  VerySmallReport rep;
  // Edge groups: trivial or generated by a non-proper power.
  for (const auto& e : g.edges) {
    if (!e.group || e.group->empty()) {
      rep.edge_verdicts.push_back(EdgeVerdict::Trivial);
      rep.edge_notes.push_back(e.name + ": trivial");
      continue;
    }
    auto [root, k] = based_root(*e.group, g.rank);
    if (k > 1) {
      rep.edge_verdicts.push_back(EdgeVerdict::Violating);
      rep.edge_notes.push_back(e.name + ": generator is a proper power (exponent " +
                               std::to_string(k) + ")");
    } else {
      rep.edge_verdicts.push_back(EdgeVerdict::MaximalCyclic);
      rep.edge_notes.push_back(e.name + ": maximal cyclic");
    }
  }
  // Minimality: no valence-1 vertex whose group equals the incident edge image.
  rep.minimal = true;
  std::vector<std::vector<int>> incident(g.vertices.size());
  for (int i = 0; i < static_cast<int>(g.edges.size()); ++i) {
    incident[static_cast<size_t>(g.edges[static_cast<size_t>(i)].from)].push_back(i);
    incident[static_cast<size_t>(g.edges[static_cast<size_t>(i)].to)].push_back(i);
  }
  for (int v = 0; v < static_cast<int>(g.vertices.size()); ++v) {
    const auto& inc = incident[static_cast<size_t>(v)];
    if (inc.size() != 1) continue;
    const auto& e = g.edges[static_cast<size_t>(inc[0])];
    Word image = (e.to == v && e.stable) ? e.stable->inverse() * e.group.value_or(Word{}) * *e.stable
                                         : e.group.value_or(Word{});
    SubgroupGraph vg = g.vertex_graph(v);
    SubgroupGraph eg = image.empty() ? SubgroupGraph::trivial(g.rank)
                                     : SubgroupGraph::build({image}, g.rank);
    bool equal = subgroup_contains_all(vg, eg.graph_basis()) &&
                 subgroup_contains_all(eg, vg.graph_basis());
    if (equal) {
      rep.minimal = false;
      rep.minimality_notes.push_back("vertex " + g.vertices[static_cast<size_t>(v)].name +
                                     " has valence 1 and equals its edge image");
    }
  }
  // Tripod condition, sufficient check: distinct edge groups at a common
  // vertex intersect trivially, and no edge group meets a conjugate of
  // another nontrivially.
  rep.tripod_ok = true;
  auto cyc_root_key = [&](const Word& w) {
    auto [root, k] = based_root(w, g.rank);
    CyclicWord c = CyclicWord::of(root, g.rank);
    CyclicWord ci = c.inverse(g.rank);
    return std::min(c, ci);
  };
  for (size_t i = 0; i < g.edges.size(); ++i) {
    for (size_t j = i + 1; j < g.edges.size(); ++j) {
      const auto& ei = g.edges[i];
      const auto& ej = g.edges[j];
      if (!ei.group || ei.group->empty() || !ej.group || ej.group->empty()) continue;
      bool share_vertex = ei.from == ej.from || ei.from == ej.to || ei.to == ej.from ||
                          ei.to == ej.to;
      if (share_vertex) {
        auto [ri, ki] = based_root(*ei.group, g.rank);
        auto [rj, kj] = based_root(*ej.group, g.rank);
        if (ri == rj || ri == rj.inverse()) {
          rep.tripod_ok = false;
          rep.tripod_notes.push_back(ei.name + " and " + ej.name +
                                     " share a vertex and intersect nontrivially");
        }
      }
      if (cyc_root_key(*ei.group) == cyc_root_key(*ej.group) && !share_vertex) {
        rep.tripod_ok = false;
        rep.tripod_notes.push_back(ei.name + " meets a conjugate of " + ej.name);
      }
    }
  }
  if (rep.tripod_notes.empty()) {
    rep.tripod_notes.push_back("sufficient-condition check on quotient data passed");
  }
  rep.overall = rep.minimal && rep.tripod_ok;
  for (auto v : rep.edge_verdicts) {
    if (v == EdgeVerdict::Violating) rep.overall = false;
  }
  return rep;
}

GraphOfGroups fold_edge(const GraphOfGroups& g, int edge, int end, const Word& elem) {
  if (edge < 0 || edge >= static_cast<int>(g.edges.size())) {
    throw std::invalid_argument("no such edge");
  }
  const auto& e = g.edges[static_cast<size_t>(edge)];
  if (end != 0 && end != 1) throw std::invalid_argument("end must be 0 or 1");
  if (e.from == e.to && end == 1) {
    throw std::invalid_argument("folding the to-end of a loop is not modeled");
  }
  int v = end == 0 ? e.from : e.to;
  int far = end == 0 ? e.to : e.from;
  if (!g.vertex_graph(v).contains(elem)) {
    throw std::invalid_argument("fold element must lie in the chosen vertex group");
  }
  if (elem.empty()) return g;

  GraphOfGroups out = g;
  auto& ne = out.edges[static_cast<size_t>(edge)];
  if (!ne.group || ne.group->empty()) {
    ne.group = elem;
  } else {
    auto [rg, kg] = based_root(*ne.group, g.rank);
    auto [re, ke] = based_root(elem, g.rank);
    if (rg != re && rg != re.inverse()) {
      throw std::invalid_argument("fold would create a non-cyclic edge group");
    }
    long k = std::gcd(kg, ke);
    Word r = rg;
    Word acc;
    for (long i = 0; i < k; ++i) acc = acc * r;
    ne.group = acc;
  }
  // Transport the element into the far vertex group.
  Word transported = elem;
  if (e.stable) {
    transported = end == 0 ? e.stable->inverse() * elem * *e.stable
                           : *e.stable * elem * e.stable->inverse();
  }
  out.vertices[static_cast<size_t>(far)].gens.push_back(transported);
  out.validate();
  return out;
}

namespace {

// Pull <h> off the vertex group at `vertex` when h is primitive there:
// returns the complement generators in ambient coordinates.
std::optional<std::vector<Word>> split_off(const GraphOfGroups& g, int vertex,
                                           const Word& h) {
  SubgroupGraph vg = g.vertex_graph(vertex);
  if (!vg.contains(h)) return std::nullopt;
  std::vector<Word> basis = vg.graph_basis();
  const int r = static_cast<int>(basis.size());
  if (r == 0) return std::nullopt;
  auto expr = vg.express(h);
  if (!expr || expr->empty()) return std::nullopt;
  if (r == 1) {
    // Rank-1 vertex group: <h> = G_v iff h is the generator (up to sign).
    if (expr->size() != 1) return std::nullopt;
    return std::vector<Word>{};
  }
  CyclicWord c = CyclicWord::of(*expr, r);
  auto mr = wh::whitehead_minimize(wh::Target::of_word(c, r));
  if (mr.minimal.complexity() != 1) return std::nullopt;
  // sigma(h) = d x^s d^-1 for a letter x; the complement is
  // sigma^-1(d y^± d^-1) over the other letters y.
  fg::Endomorphism sigma = fg::Endomorphism::identity(Basis(r));
  for (const auto& m : mr.moves) sigma = m.endo(Basis(r)).compose(sigma);
  Word image = sigma.apply(*expr);
  auto [root, k] = based_root(image, r);
  if (k != 1 || root.empty()) return std::nullopt;
  // root = d x^± d^-1 with cyclic core a single letter
  std::vector<Letter> ls = root.letters();
  size_t mid = ls.size() / 2;
  Letter x = ls[mid];
  Word d = Word(std::vector<Letter>(ls.begin(), ls.begin() + static_cast<long>(mid)));
  auto inv_res = fg::invert(sigma);
  if (!std::holds_alternative<fg::Automorphism>(inv_res)) return std::nullopt;
  const fg::Endomorphism& sigma_inv = std::get<fg::Automorphism>(inv_res).inverse();
  std::vector<Word> complement;
  for (int i = 0; i < r; ++i) {
    Letter y = static_cast<Letter>(i + 1);
    if (y == x || y == fg::inv(x)) continue;
    Word rep = sigma_inv.apply(d * Word::single(y) * d.inverse());
    // Map back into ambient coordinates through the vertex graph basis.
    std::vector<Letter> acc;
    Word out;
    for (Letter l : rep.letters()) {
      const Word& piece = basis[static_cast<size_t>(fg::letter_index(l))];
      out = out * (l > 0 ? piece : piece.inverse());
    }
    complement.push_back(out);
  }
  return complement;
}

}  // namespace

std::variant<UnfoldResult, NoUnfoldFound> unfold_to_free_splitting(
    const GraphOfGroups& g0) {
  GraphOfGroups g = g0;
  g.validate();
  UnfoldResult res;
  while (g.nontrivial_edge_count() > 0) {
    bool progressed = false;
    for (int ei = 0; ei < static_cast<int>(g.edges.size()) && !progressed; ++ei) {
      const auto& e = g.edges[static_cast<size_t>(ei)];
      if (!e.group || e.group->empty()) continue;
      for (int end : {0, 1}) {
        int v = end == 0 ? e.from : e.to;
        Word h = *e.group;
        if (end == 1 && e.stable) h = e.stable->inverse() * h * *e.stable;
        auto complement = split_off(g, v, h);
        if (!complement) continue;
        if (e.from == e.to) {
          // HNN: the other inclusion must land in the complement.
          Word other = end == 0 ? (e.stable ? e.stable->inverse() * *e.group * *e.stable
                                            : *e.group)
                                : *e.group;
          SubgroupGraph cg = complement->empty()
                                 ? SubgroupGraph::trivial(g.rank)
                                 : SubgroupGraph::build(*complement, g.rank);
          if (!cg.contains(other)) continue;
        }
        UnfoldMove mv;
        mv.edge = ei;
        mv.end = end;
        mv.element = h;
        mv.complement = *complement;
        g.vertices[static_cast<size_t>(v)].gens = *complement;
        g.edges[static_cast<size_t>(ei)].group.reset();
        g.validate();
        res.moves.push_back(std::move(mv));
        progressed = true;
        break;
      }
    }
    if (!progressed) {
      return NoUnfoldFound{
          "no edge group is exhibited as a free factor of an endpoint vertex group"};
    }
  }
  res.splitting = std::move(g);
  return res;
}

CsimpReport csimp_report(const GraphOfGroups& g) {
  g.validate();
  CsimpReport rep;
  for (const auto& e : g.edges) {
    if (!e.group || e.group->empty()) continue;
    CsimpEntry entry;
    entry.subject = e.name;
    SubgroupGraph factor =
        wh::fill(wh::Target::of_word(CyclicWord::of(*e.group, g.rank), g.rank));
    entry.factor_rank = factor.index_and_rank().rank;
    entry.in_proper_factor = entry.factor_rank < g.rank;
    entry.factor_gens = factor.graph_basis();
    if (!entry.in_proper_factor) {
      throw InternalInconsistency("edge group " + e.name +
                                  " fills the whole group in a very small tree");
    }
    rep.edge_entries.push_back(std::move(entry));
  }
  for (const auto& v : g.vertices) {
    CsimpEntry entry;
    entry.subject = v.name;
    if (v.gens.empty()) {
      entry.in_proper_factor = true;
      entry.factor_rank = 0;
    } else {
      auto cert = wh::is_in_proper_factor(wh::Target::of_subgroup(v.gens, g.rank));
      entry.in_proper_factor = cert.in_proper_factor();
      if (entry.in_proper_factor) {
        const auto& ipf = std::get<wh::InProperFactor>(cert.verdict);
        entry.factor_rank = ipf.factor.index_and_rank().rank;
        entry.factor_gens = ipf.factor.graph_basis();
      } else {
        entry.factor_rank = g.rank;
        ++rep.filling_vertex_classes;
      }
    }
    rep.vertex_entries.push_back(std::move(entry));
  }
  if (rep.filling_vertex_classes > 1) {
    throw InternalInconsistency("two vertex classes certified filling");
  }
  return rep;
}

SkeletonData build_skeleton(const CoveringData& data) {
  SkeletonData out;
  // Quotient-level transverse axiom: two tree orbits may share at most one
  // point orbit.
  std::map<std::pair<int, int>, int> shared;
  std::set<std::pair<int, int>> seen_pairs;
  for (const auto& inc : data.incidences) {
    if (inc.tree < 0 || inc.tree >= static_cast<int>(data.trees.size()) ||
        inc.point < 0 || inc.point >= static_cast<int>(data.points.size())) {
      throw std::invalid_argument("incidence out of range");
    }
  }
  for (size_t i = 0; i < data.incidences.size(); ++i) {
    for (size_t j = i + 1; j < data.incidences.size(); ++j) {
      const auto& a = data.incidences[i];
      const auto& b = data.incidences[j];
      if (a.point != b.point) {
        // Do the two point orbits meet a common pair of tree orbits?
        for (const auto& c : data.incidences) {
          for (const auto& d : data.incidences) {
            if (c.point == a.point && d.point == b.point && c.tree == d.tree &&
                a.tree == b.tree && c.tree != a.tree) {
              throw std::invalid_argument(
                  "two tree orbits share two distinct point orbits");
            }
          }
        }
      }
    }
  }
  auto graph_of = [&](const CoveringData::Orbit& o) {
    return o.stab_gens.empty() ? SubgroupGraph::trivial(data.rank)
                               : SubgroupGraph::build(o.stab_gens, data.rank);
  };
  for (const auto& inc : data.incidences) {
    SkeletonData::EdgeStab es;
    es.tree = inc.tree;
    es.point = inc.point;
    std::vector<Word> conj_gens;
    for (const Word& w : data.points[static_cast<size_t>(inc.point)].stab_gens) {
      conj_gens.push_back(w.conjugate(inc.conj));
    }
    SubgroupGraph point_stab = conj_gens.empty()
                                   ? SubgroupGraph::trivial(data.rank)
                                   : SubgroupGraph::build(conj_gens, data.rank);
    es.stabilizer = point_stab.intersect(graph_of(data.trees[static_cast<size_t>(inc.tree)]));
    es.trivial = es.stabilizer.is_trivial();
    if (es.trivial) out.free_splitting = true;
    out.edges.push_back(std::move(es));
  }
  out.bipartite = true;  // tree/point sides by construction
  return out;
}

namespace {

struct PathItem {
  int edge = -1;  // -1: a vertex element
  int dir = 0;
  int vertex = -1;
  Word elem;
};

struct BrittonMachine {
  const AssembledLengthFunction& a;
  std::vector<std::vector<std::pair<int, int>>> tree_path;  // vertex -> [(edge,dir)]
  std::vector<std::vector<PathItem>> slot_items;
  std::vector<Word> slot_words;

  explicit BrittonMachine(const AssembledLengthFunction& af) : a(af) {
    const auto& g = a.skeleton;
    const int nv = static_cast<int>(g.vertices.size());
    // BFS tree paths from vertex 0 along spanning-tree edges.
    tree_path.assign(static_cast<size_t>(nv), {});
    std::vector<bool> seen(static_cast<size_t>(nv), false);
    seen[0] = true;
    std::queue<int> q;
    q.push(0);
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      for (int ei = 0; ei < static_cast<int>(g.edges.size()); ++ei) {
        const auto& e = g.edges[static_cast<size_t>(ei)];
        if (e.stable) continue;
        if (e.from == v && !seen[static_cast<size_t>(e.to)]) {
          seen[static_cast<size_t>(e.to)] = true;
          tree_path[static_cast<size_t>(e.to)] = tree_path[static_cast<size_t>(v)];
          tree_path[static_cast<size_t>(e.to)].push_back({ei, +1});
          q.push(e.to);
        } else if (e.to == v && !seen[static_cast<size_t>(e.from)]) {
          seen[static_cast<size_t>(e.from)] = true;
          tree_path[static_cast<size_t>(e.from)] = tree_path[static_cast<size_t>(v)];
          tree_path[static_cast<size_t>(e.from)].push_back({ei, -1});
          q.push(e.from);
        }
      }
    }
    // Generator slots: vertex-group generators and stable letters as loops.
    auto path_items = [&](int v) {
      std::vector<PathItem> items;
      for (auto [ei, dir] : tree_path[static_cast<size_t>(v)]) {
        items.push_back({ei, dir, -1, Word{}});
      }
      return items;
    };
    auto reverse_items = [](std::vector<PathItem> items) {
      std::reverse(items.begin(), items.end());
      for (auto& it : items) {
        if (it.edge >= 0) {
          it.dir = -it.dir;
        } else {
          it.elem = it.elem.inverse();
        }
      }
      return items;
    };
    for (int v = 0; v < nv; ++v) {
      for (const Word& w : g.vertices[static_cast<size_t>(v)].gens) {
        std::vector<PathItem> items = path_items(v);
        items.push_back({-1, 0, v, w});
        auto back = reverse_items(path_items(v));
        items.insert(items.end(), back.begin(), back.end());
        slot_items.push_back(std::move(items));
        slot_words.push_back(w);
      }
    }
    for (int ei = 0; ei < static_cast<int>(g.edges.size()); ++ei) {
      const auto& e = g.edges[static_cast<size_t>(ei)];
      if (!e.stable) continue;
      std::vector<PathItem> items = path_items(e.from);
      items.push_back({ei, +1, -1, Word{}});
      auto back = reverse_items(path_items(e.to));
      items.insert(items.end(), back.begin(), back.end());
      slot_items.push_back(std::move(items));
      slot_words.push_back(*e.stable);
    }
  }

  int head_vertex(int edge, int dir) const {
    const auto& e = a.skeleton.edges[static_cast<size_t>(edge)];
    return dir > 0 ? e.to : e.from;
  }

  // Edge-group word seen at the head of (edge, dir).
  Word head_group(int edge, int dir) const {
    const auto& e = a.skeleton.edges[static_cast<size_t>(edge)];
    Word gw = e.group.value_or(Word{});
    if (gw.empty()) return gw;
    if (dir > 0 && e.stable) return e.stable->inverse() * gw * *e.stable;
    return gw;
  }

  Word cross_word(int edge, int dir) const {
    const auto& e = a.skeleton.edges[static_cast<size_t>(edge)];
    if (!e.stable) return Word{};
    return dir > 0 ? *e.stable : e.stable->inverse();
  }

  // Merge adjacent vertex elements and drop trivial ones.
  static void normalize(std::vector<PathItem>& items) {
    std::vector<PathItem> out;
    for (auto& it : items) {
      if (it.edge < 0) {
        if (!out.empty() && out.back().edge < 0) {
          out.back().elem = out.back().elem * it.elem;
          if (out.back().vertex < 0) out.back().vertex = it.vertex;
        } else {
          out.push_back(it);
        }
      } else {
        out.push_back(it);
      }
    }
    std::vector<PathItem> out2;
    for (auto& it : out) {
      if (it.edge < 0 && it.elem.empty()) continue;
      out2.push_back(it);
    }
    items = std::move(out2);
  }

  // One pinch pass; true when something reduced.
  bool pinch(std::vector<PathItem>& items) const {
    for (size_t i = 0; i < items.size(); ++i) {
      if (items[i].edge < 0) continue;
      // locate the next traversal and the element between
      size_t j = i + 1;
      Word h;
      int hvertex = head_vertex(items[i].edge, items[i].dir);
      if (j < items.size() && items[j].edge < 0) {
        h = items[j].elem;
        ++j;
      }
      if (j >= items.size() || items[j].edge < 0) continue;
      if (items[j].edge != items[i].edge || items[j].dir != -items[i].dir) continue;
      // h must lie in the edge group as seen at the head vertex.
      Word gw = head_group(items[i].edge, items[i].dir);
      bool pinchable = false;
      Word transported;
      if (gw.empty()) {
        if (h.empty()) {
          pinchable = true;
          transported = Word{};
        }
      } else {
        auto k = power_of(h, gw);
        if (k) {
          pinchable = true;
          Word c = cross_word(items[i].edge, items[i].dir);
          transported = c * h * c.inverse();
        }
      }
      if (!pinchable) continue;
      PathItem rep;
      rep.edge = -1;
      rep.vertex = items[i].dir > 0 ? a.skeleton.edges[static_cast<size_t>(items[i].edge)].from
                                    : a.skeleton.edges[static_cast<size_t>(items[i].edge)].to;
      rep.elem = transported;
      (void)hvertex;
      items.erase(items.begin() + static_cast<long>(i), items.begin() + static_cast<long>(j + 1));
      items.insert(items.begin() + static_cast<long>(i), rep);
      normalize(items);
      return true;
    }
    return false;
  }

  // Cyclic form: rotate leading elements to the back; strip wrap backtracks.
  void cyclic_reduce(std::vector<PathItem>& items) const {
    for (;;) {
      normalize(items);
      while (pinch(items)) {
      }
      if (items.size() < 2) return;
      if (items.front().edge < 0) {
        PathItem el = items.front();
        items.erase(items.begin());
        items.push_back(el);
        continue;
      }
      // items starts with a traversal; find the trailing element (if any).
      PathItem& first = items.front();
      size_t last_t = items.size();
      for (size_t i = items.size(); i-- > 0;) {
        if (items[i].edge >= 0) {
          last_t = i;
          break;
        }
      }
      if (last_t == items.size()) return;  // no traversal at all
      PathItem& last = items[last_t];
      Word wrap;
      if (last_t + 1 < items.size()) wrap = items[last_t + 1].elem;
      if (last.edge == first.edge && last.dir == -first.dir) {
        Word gw = head_group(last.edge, last.dir);
        bool strip = gw.empty() ? wrap.empty() : power_of(wrap, gw).has_value();
        if (strip) {
          Word c = cross_word(last.edge, last.dir);
          Word transported = c * wrap * c.inverse();
          // The conjugated core now starts inside the head of `first`.
          int home = head_vertex(first.edge, first.dir);
          // remove last traversal + wrap, remove first traversal, and put the
          // transported element at the front.
          items.resize(last_t);
          items.erase(items.begin());
          PathItem rep;
          rep.edge = -1;
          rep.elem = transported;
          rep.vertex = home;
          items.insert(items.begin(), rep);
          continue;
        }
      }
      return;
    }
  }

  Rational vertex_gap(int vertex, const Word& h, const Rational& from_mark,
                      const Rational& to_mark) const {
    const VertexOracle& o = a.oracles[static_cast<size_t>(vertex)];
    switch (o.kind) {
      case VertexOracle::Kind::PointTree:
        return Rational(0);
      case VertexOracle::Kind::SegmentTrivial: {
        Rational d = to_mark - from_mark;
        return d < 0 ? Rational(-d) : d;
      }
      case VertexOracle::Kind::LineTranslation: {
        const auto& gens = a.skeleton.vertices[static_cast<size_t>(vertex)].gens;
        long k = 0;
        if (!h.empty()) {
          if (gens.empty()) throw std::out_of_range("oracle domain miss: no generator");
          auto kk = power_of(h, gens[0]);
          if (!kk) throw std::out_of_range("oracle domain miss: element is not a power");
          k = *kk;
        }
        Rational target = to_mark + Rational(k) * o.tlen;
        Rational d = target - from_mark;
        return d < 0 ? Rational(-d) : d;
      }
    }
    return Rational(0);
  }

  Rational elliptic_length(int vertex, const Word& h) const {
    const VertexOracle& o = a.oracles[static_cast<size_t>(vertex)];
    if (o.kind == VertexOracle::Kind::LineTranslation && !h.empty()) {
      const auto& gens = a.skeleton.vertices[static_cast<size_t>(vertex)].gens;
      if (gens.empty()) throw std::out_of_range("oracle domain miss: no generator");
      auto k = power_of(h, gens[0]);
      if (!k) throw std::out_of_range("oracle domain miss: element is not a power");
      Rational d = Rational(*k) * o.tlen;
      return d < 0 ? Rational(-d) : d;
    }
    return Rational(0);
  }

  Rational mark(int edge, int end, int vertex) const {
    const VertexOracle& o = a.oracles[static_cast<size_t>(vertex)];
    auto it = o.marks.find({edge, end});
    if (it == o.marks.end()) {
      if (o.kind == VertexOracle::Kind::PointTree) return Rational(0);
      throw std::out_of_range("oracle domain miss: no attaching mark");
    }
    return it->second;
  }

  Rational length(const Word& g) {
    auto expr = fg::express_basis_in(slot_words, a.skeleton.rank);
    if (!expr) throw std::invalid_argument("marking does not generate the group");
    // Rewrite g over the slots, then lay out the path items.
    std::vector<PathItem> items;
    for (Letter l : g.letters()) {
      const Word& e = (*expr)[static_cast<size_t>(fg::letter_index(l))];
      Word use = l > 0 ? e : e.inverse();
      for (Letter s : use.letters()) {
        const auto& slot = slot_items[static_cast<size_t>(fg::letter_index(s))];
        if (s > 0) {
          items.insert(items.end(), slot.begin(), slot.end());
        } else {
          auto rev = slot;
          std::reverse(rev.begin(), rev.end());
          for (auto& it : rev) {
            if (it.edge >= 0) {
              it.dir = -it.dir;
            } else {
              it.elem = it.elem.inverse();
            }
          }
          items.insert(items.end(), rev.begin(), rev.end());
        }
      }
    }
    cyclic_reduce(items);
    bool has_traversal = false;
    for (const auto& it : items) {
      if (it.edge >= 0) has_traversal = true;
    }
    if (!has_traversal) {
      Word h;
      int v = 0;
      for (const auto& it : items) {
        h = h * it.elem;
        if (it.vertex >= 0) v = it.vertex;
      }
      return elliptic_length(v, h);
    }
    // Hyperbolic: sum edge lengths and vertex gaps along the cyclic sequence.
    std::vector<std::pair<std::pair<int, int>, Word>> legs;  // (edge,dir), elem after
    for (size_t i = 0; i < items.size(); ++i) {
      if (items[i].edge < 0) continue;
      Word h;
      if (i + 1 < items.size() && items[i + 1].edge < 0) h = items[i + 1].elem;
      legs.push_back({{items[i].edge, items[i].dir}, h});
    }
    // wrap element: a leading vertex element would have been rotated away
    Rational total = 0;
    for (size_t i = 0; i < legs.size(); ++i) {
      auto [ed, h] = legs[i];
      auto [edge, dir] = ed;
      total += a.skeleton.edges[static_cast<size_t>(edge)].length;
      int v = head_vertex(edge, dir);
      auto [nedge, ndir] = legs[(i + 1) % legs.size()].first;
      // incoming mark: the end of `edge` at v; outgoing: the end of the next
      // edge at v.
      int in_end = dir > 0 ? 1 : 0;
      int out_end = ndir > 0 ? 0 : 1;
      Rational m_in = mark(edge, in_end, v);
      Rational m_out = mark(nedge, out_end, v);
      total += vertex_gap(v, h, m_in, m_out);
    }
    return total;
  }
};

}  // namespace

Rational assemble_length(const AssembledLengthFunction& a, const Word& g) {
  if (a.oracles.size() != a.skeleton.vertices.size()) {
    throw std::invalid_argument("one oracle per skeleton vertex required");
  }
  BrittonMachine machine(a);
  return machine.length(g);
}

}  // namespace vstree::gg
