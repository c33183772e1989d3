#include "vstree/stallings.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <numeric>
#include <queue>
#include <sstream>
#include <stdexcept>

namespace vstree::st {

namespace {

struct RawEdge {
  int from, to, label;  // label is a 0-based positive letter index
};

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
};

}  // namespace

SubgroupGraph SubgroupGraph::trivial(int rank) {
  SubgroupGraph g;
  g.rank_ = rank;
  g.base_ = 0;
  g.out_.assign(1, std::vector<int>(static_cast<size_t>(rank), -1));
  g.in_.assign(1, std::vector<int>(static_cast<size_t>(rank), -1));
  return g;
}

SubgroupGraph SubgroupGraph::full(int rank) {
  SubgroupGraph g = trivial(rank);
  for (int x = 0; x < rank; ++x) {
    g.out_[0][static_cast<size_t>(x)] = 0;
    g.in_[0][static_cast<size_t>(x)] = 0;
  }
  return g;
}

SubgroupGraph SubgroupGraph::build(const std::vector<Word>& generators, int rank) {
  // Wedge of generator paths at a single base vertex, then fold.
  int vcount = 1;
  std::vector<RawEdge> edges;
  for (const Word& w : generators) {
    if (w.empty()) continue;
    int cur = 0;
    const auto& ls = w.letters();
    for (size_t i = 0; i < ls.size(); ++i) {
      int next = (i + 1 == ls.size()) ? 0 : vcount++;
      Letter l = ls[i];
      if (l > 0) {
        edges.push_back({cur, next, fg::letter_index(l)});
      } else {
        edges.push_back({next, cur, fg::letter_index(l)});
      }
      cur = next;
    }
  }

  UnionFind uf(vcount);
  // Fold: identify targets of equal-label edges sharing an origin (and
  // sources sharing a terminus) until stable.
  bool changed = true;
  while (changed) {
    changed = false;
    std::map<std::pair<int, int>, int> out_rep, in_rep;
    for (const RawEdge& e : edges) {
      int f = uf.find(e.from), t = uf.find(e.to);
      auto ko = std::make_pair(f, e.label);
      auto it = out_rep.find(ko);
      if (it == out_rep.end()) {
        out_rep[ko] = t;
      } else if (uf.find(it->second) != t) {
        uf.unite(it->second, t);
        changed = true;
      }
      auto ki = std::make_pair(t, e.label);
      auto jt = in_rep.find(ki);
      if (jt == in_rep.end()) {
        in_rep[ki] = f;
      } else if (uf.find(jt->second) != f) {
        uf.unite(jt->second, f);
        changed = true;
      }
    }
  }

  // Compact vertices and install folded adjacency.
  std::vector<int> remap(static_cast<size_t>(vcount), -1);
  int nv = 0;
  for (int v = 0; v < vcount; ++v) {
    int r = uf.find(v);
    if (remap[static_cast<size_t>(r)] < 0) remap[static_cast<size_t>(r)] = nv++;
  }
  SubgroupGraph g;
  g.rank_ = rank;
  g.base_ = remap[static_cast<size_t>(uf.find(0))];
  g.out_.assign(static_cast<size_t>(nv), std::vector<int>(static_cast<size_t>(rank), -1));
  g.in_.assign(static_cast<size_t>(nv), std::vector<int>(static_cast<size_t>(rank), -1));
  for (const RawEdge& e : edges) {
    int f = remap[static_cast<size_t>(uf.find(e.from))];
    int t = remap[static_cast<size_t>(uf.find(e.to))];
    g.out_[static_cast<size_t>(f)][static_cast<size_t>(e.label)] = t;
    g.in_[static_cast<size_t>(t)][static_cast<size_t>(e.label)] = f;
  }
  g.trim_to_core(true);
  return g;
}

int SubgroupGraph::edge_count() const {
  int e = 0;
  for (const auto& row : out_)
    for (int t : row)
      if (t >= 0) ++e;
  return e;
}

std::optional<int> SubgroupGraph::trace(int v, const Word& w) const {
  int cur = v;
  for (Letter l : w.letters()) {
    int idx = fg::letter_index(l);
    if (idx >= rank_) return std::nullopt;
    cur = (l > 0) ? out_[static_cast<size_t>(cur)][static_cast<size_t>(idx)]
                  : in_[static_cast<size_t>(cur)][static_cast<size_t>(idx)];
    if (cur < 0) return std::nullopt;
  }
  return cur;
}

bool SubgroupGraph::contains(const Word& w) const {
  auto end = trace(base_, w);
  return end && *end == base_;
}

SubgroupGraph SubgroupGraph::intersect(const SubgroupGraph& other) const {
  if (rank_ != other.rank_) throw std::invalid_argument("rank mismatch");
  // Reachable part of the product graph from the base pair.
  std::map<std::pair<int, int>, int> id;
  std::deque<std::pair<int, int>> queue;
  auto get = [&](int a, int b) {
    auto [it, fresh] = id.try_emplace({a, b}, static_cast<int>(id.size()));
    if (fresh) queue.push_back({a, b});
    return it->second;
  };
  get(base_, other.base_);
  std::vector<RawEdge> edges;
  while (!queue.empty()) {
    auto [a, b] = queue.front();
    queue.pop_front();
    int from = id[{a, b}];
    for (int x = 0; x < rank_; ++x) {
      int ta = out_[static_cast<size_t>(a)][static_cast<size_t>(x)];
      int tb = other.out_[static_cast<size_t>(b)][static_cast<size_t>(x)];
      if (ta >= 0 && tb >= 0) edges.push_back({from, get(ta, tb), x});
      // Walk in-edges too: the reachable part of the product is undirected.
      int sa = in_[static_cast<size_t>(a)][static_cast<size_t>(x)];
      int sb = other.in_[static_cast<size_t>(b)][static_cast<size_t>(x)];
      if (sa >= 0 && sb >= 0) get(sa, sb);
    }
  }
  SubgroupGraph g;
  g.rank_ = rank_;
  g.base_ = 0;
  size_t nv = id.size();
  g.out_.assign(nv, std::vector<int>(static_cast<size_t>(rank_), -1));
  g.in_.assign(nv, std::vector<int>(static_cast<size_t>(rank_), -1));
  for (const RawEdge& e : edges) {
    g.out_[static_cast<size_t>(e.from)][static_cast<size_t>(e.label)] = e.to;
    g.in_[static_cast<size_t>(e.to)][static_cast<size_t>(e.label)] = e.from;
  }
  g.trim_to_core(true);
  return g;
}

void SubgroupGraph::trim_to_core(bool keep_base) {
  const int n = vertex_count();
  std::vector<int> degree(static_cast<size_t>(n), 0);
  for (int v = 0; v < n; ++v) {
    for (int x = 0; x < rank_; ++x) {
      if (out_[static_cast<size_t>(v)][static_cast<size_t>(x)] >= 0) {
        ++degree[static_cast<size_t>(v)];
        ++degree[static_cast<size_t>(out_[static_cast<size_t>(v)][static_cast<size_t>(x)])];
      }
    }
  }
  std::vector<bool> dead(static_cast<size_t>(n), false);
  std::queue<int> q;
  for (int v = 0; v < n; ++v) {
    if (degree[static_cast<size_t>(v)] <= 1 && (!keep_base || v != base_)) q.push(v);
  }
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    if (dead[static_cast<size_t>(v)] || degree[static_cast<size_t>(v)] > 1) continue;
    if (keep_base && v == base_) continue;
    dead[static_cast<size_t>(v)] = true;
    for (int x = 0; x < rank_; ++x) {
      int t = out_[static_cast<size_t>(v)][static_cast<size_t>(x)];
      if (t >= 0 && !dead[static_cast<size_t>(t)]) {
        out_[static_cast<size_t>(v)][static_cast<size_t>(x)] = -1;
        in_[static_cast<size_t>(t)][static_cast<size_t>(x)] = -1;
        if (--degree[static_cast<size_t>(t)] <= 1) q.push(t);
      }
      int s = in_[static_cast<size_t>(v)][static_cast<size_t>(x)];
      if (s >= 0 && !dead[static_cast<size_t>(s)]) {
        in_[static_cast<size_t>(v)][static_cast<size_t>(x)] = -1;
        out_[static_cast<size_t>(s)][static_cast<size_t>(x)] = -1;
        if (--degree[static_cast<size_t>(s)] <= 1) q.push(s);
      }
    }
  }
  // Compact.
  std::vector<int> remap(static_cast<size_t>(n), -1);
  int nv = 0;
  for (int v = 0; v < n; ++v)
    if (!dead[static_cast<size_t>(v)]) remap[static_cast<size_t>(v)] = nv++;
  if (keep_base && remap[static_cast<size_t>(base_)] < 0) {
    throw std::logic_error("base vertex trimmed");
  }
  std::vector<std::vector<int>> nout(static_cast<size_t>(nv),
                                     std::vector<int>(static_cast<size_t>(rank_), -1));
  std::vector<std::vector<int>> nin(static_cast<size_t>(nv),
                                    std::vector<int>(static_cast<size_t>(rank_), -1));
  for (int v = 0; v < n; ++v) {
    if (dead[static_cast<size_t>(v)]) continue;
    for (int x = 0; x < rank_; ++x) {
      int t = out_[static_cast<size_t>(v)][static_cast<size_t>(x)];
      if (t >= 0 && !dead[static_cast<size_t>(t)]) {
        nout[static_cast<size_t>(remap[static_cast<size_t>(v)])][static_cast<size_t>(x)] =
            remap[static_cast<size_t>(t)];
        nin[static_cast<size_t>(remap[static_cast<size_t>(t)])][static_cast<size_t>(x)] =
            remap[static_cast<size_t>(v)];
      }
    }
  }
  out_ = std::move(nout);
  in_ = std::move(nin);
  if (keep_base) {
    base_ = remap[static_cast<size_t>(base_)];
  } else {
    base_ = out_.empty() ? 0 : 0;
    if (out_.empty()) {
      out_.assign(1, std::vector<int>(static_cast<size_t>(rank_), -1));
      in_.assign(1, std::vector<int>(static_cast<size_t>(rank_), -1));
    }
  }
}

IndexRank SubgroupGraph::index_and_rank() const {
  IndexRank ir;
  ir.rank = edge_count() - vertex_count() + 1;
  bool complete = true;
  for (int v = 0; v < vertex_count() && complete; ++v) {
    for (int x = 0; x < rank_ && complete; ++x) {
      if (out_[static_cast<size_t>(v)][static_cast<size_t>(x)] < 0 ||
          in_[static_cast<size_t>(v)][static_cast<size_t>(x)] < 0) {
        complete = false;
      }
    }
  }
  if (complete && edge_count() > 0) ir.index = vertex_count();
  if (is_trivial()) ir.rank = 0;
  return ir;
}

bool SubgroupGraph::is_full_group() const {
  return vertex_count() == 1 && edge_count() == rank_;
}

std::vector<Word> SubgroupGraph::graph_basis() const {
  // BFS spanning tree from base; each non-tree edge contributes
  // path(base -> from) * letter * path(to -> base).
  const int n = vertex_count();
  std::vector<Word> to_vertex(static_cast<size_t>(n));
  std::vector<bool> visited(static_cast<size_t>(n), false);
  std::vector<std::vector<bool>> tree_out(static_cast<size_t>(n),
                                          std::vector<bool>(static_cast<size_t>(rank_), false));
  std::queue<int> q;
  visited[static_cast<size_t>(base_)] = true;
  q.push(base_);
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    for (int x = 0; x < rank_; ++x) {
      int t = out_[static_cast<size_t>(v)][static_cast<size_t>(x)];
      if (t >= 0 && !visited[static_cast<size_t>(t)]) {
        visited[static_cast<size_t>(t)] = true;
        tree_out[static_cast<size_t>(v)][static_cast<size_t>(x)] = true;
        to_vertex[static_cast<size_t>(t)] =
            to_vertex[static_cast<size_t>(v)] * Word::single(static_cast<Letter>(x + 1));
        q.push(t);
      }
      int s = in_[static_cast<size_t>(v)][static_cast<size_t>(x)];
      if (s >= 0 && !visited[static_cast<size_t>(s)]) {
        visited[static_cast<size_t>(s)] = true;
        tree_out[static_cast<size_t>(s)][static_cast<size_t>(x)] = true;
        to_vertex[static_cast<size_t>(s)] =
            to_vertex[static_cast<size_t>(v)] * Word::single(fg::inv(static_cast<Letter>(x + 1)));
        q.push(s);
      }
    }
  }
  std::vector<Word> basis;
  for (int v = 0; v < n; ++v) {
    for (int x = 0; x < rank_; ++x) {
      int t = out_[static_cast<size_t>(v)][static_cast<size_t>(x)];
      if (t >= 0 && !tree_out[static_cast<size_t>(v)][static_cast<size_t>(x)]) {
        basis.push_back(to_vertex[static_cast<size_t>(v)] *
                        Word::single(static_cast<Letter>(x + 1)) *
                        to_vertex[static_cast<size_t>(t)].inverse());
      }
    }
  }
  return basis;
}

std::optional<Word> SubgroupGraph::express(const Word& w) const {
  // Same spanning tree as graph_basis(); record non-tree edge crossings.
  const int n = vertex_count();
  std::vector<bool> visited(static_cast<size_t>(n), false);
  std::vector<std::vector<bool>> tree_out(static_cast<size_t>(n),
                                          std::vector<bool>(static_cast<size_t>(rank_), false));
  std::queue<int> q;
  visited[static_cast<size_t>(base_)] = true;
  q.push(base_);
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    for (int x = 0; x < rank_; ++x) {
      int t = out_[static_cast<size_t>(v)][static_cast<size_t>(x)];
      if (t >= 0 && !visited[static_cast<size_t>(t)]) {
        visited[static_cast<size_t>(t)] = true;
        tree_out[static_cast<size_t>(v)][static_cast<size_t>(x)] = true;
        q.push(t);
      }
      int s = in_[static_cast<size_t>(v)][static_cast<size_t>(x)];
      if (s >= 0 && !visited[static_cast<size_t>(s)]) {
        visited[static_cast<size_t>(s)] = true;
        tree_out[static_cast<size_t>(s)][static_cast<size_t>(x)] = true;
        q.push(s);
      }
    }
  }
  // Index the non-tree edges in the same order graph_basis() lists them.
  std::map<std::pair<int, int>, int> slot;  // (vertex, letter) -> basis index
  int k = 0;
  for (int v = 0; v < n; ++v) {
    for (int x = 0; x < rank_; ++x) {
      int t = out_[static_cast<size_t>(v)][static_cast<size_t>(x)];
      if (t >= 0 && !tree_out[static_cast<size_t>(v)][static_cast<size_t>(x)]) {
        slot[{v, x}] = k++;
      }
    }
  }
  std::vector<Letter> expr;
  int cur = base_;
  for (Letter l : w.letters()) {
    int x = fg::letter_index(l);
    if (x >= rank_) return std::nullopt;
    if (l > 0) {
      int t = out_[static_cast<size_t>(cur)][static_cast<size_t>(x)];
      if (t < 0) return std::nullopt;
      if (!tree_out[static_cast<size_t>(cur)][static_cast<size_t>(x)]) {
        expr.push_back(static_cast<Letter>(slot[{cur, x}] + 1));
      }
      cur = t;
    } else {
      int s = in_[static_cast<size_t>(cur)][static_cast<size_t>(x)];
      if (s < 0) return std::nullopt;
      if (!tree_out[static_cast<size_t>(s)][static_cast<size_t>(x)]) {
        expr.push_back(fg::inv(static_cast<Letter>(slot[{s, x}] + 1)));
      }
      cur = s;
    }
  }
  if (cur != base_) return std::nullopt;
  int r = std::max(k, 1);
  return Word::reduce(expr, r);
}

SubgroupGraph core_of(SubgroupGraph g, bool keep_base) {
  g.trim_to_core(keep_base);
  return g;
}

SubgroupGraph SubgroupGraph::cyclic_core() const { return core_of(*this, false); }

std::string SubgroupGraph::canonical_key() const {
  // Min over start vertices of a deterministic BFS encoding.
  const int n = vertex_count();
  if (edge_count() == 0) return "()";
  std::string best;
  for (int s = 0; s < n; ++s) {
    std::vector<int> order(static_cast<size_t>(n), -1);
    int next_id = 0;
    std::queue<int> q;
    order[static_cast<size_t>(s)] = next_id++;
    q.push(s);
    std::ostringstream enc;
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      for (int x = 0; x < rank_; ++x) {
        int t = out_[static_cast<size_t>(v)][static_cast<size_t>(x)];
        enc << 'o' << x << ':';
        if (t < 0) {
          enc << '.';
        } else {
          if (order[static_cast<size_t>(t)] < 0) {
            order[static_cast<size_t>(t)] = next_id++;
            q.push(t);
          }
          enc << order[static_cast<size_t>(t)];
        }
        int u = in_[static_cast<size_t>(v)][static_cast<size_t>(x)];
        enc << 'i' << x << ':';
        if (u < 0) {
          enc << '.';
        } else {
          if (order[static_cast<size_t>(u)] < 0) {
            order[static_cast<size_t>(u)] = next_id++;
            q.push(u);
          }
          enc << order[static_cast<size_t>(u)];
        }
      }
      enc << ';';
    }
    std::string e = enc.str();
    if (best.empty() || e < best) best = e;
  }
  return best;
}

namespace {

// Label-preserving graph map source -> target determined by one seed pair.
bool propagate_map(const SubgroupGraph& src, const SubgroupGraph& dst, int s0,
                   int t0, std::vector<int>* img_out) {
  std::vector<int> img(static_cast<size_t>(src.vertex_count()), -1);
  img[static_cast<size_t>(s0)] = t0;
  std::queue<int> q;
  q.push(s0);
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    for (int x = 0; x < src.rank(); ++x) {
      int t = src.out_edge(v, x);
      if (t >= 0) {
        int it = dst.out_edge(img[static_cast<size_t>(v)], x);
        if (it < 0) return false;
        if (img[static_cast<size_t>(t)] < 0) {
          img[static_cast<size_t>(t)] = it;
          q.push(t);
        } else if (img[static_cast<size_t>(t)] != it) {
          return false;
        }
      }
      int s = src.in_edge(v, x);
      if (s >= 0) {
        int is = dst.in_edge(img[static_cast<size_t>(v)], x);
        if (is < 0) return false;
        if (img[static_cast<size_t>(s)] < 0) {
          img[static_cast<size_t>(s)] = is;
          q.push(s);
        } else if (img[static_cast<size_t>(s)] != is) {
          return false;
        }
      }
    }
  }
  if (img_out) *img_out = std::move(img);
  return true;
}

std::optional<Word> path_word(const SubgroupGraph& g, int from, int to) {
  std::vector<int> prev(static_cast<size_t>(g.vertex_count()), -2);
  std::vector<Letter> via(static_cast<size_t>(g.vertex_count()), 0);
  std::queue<int> q;
  prev[static_cast<size_t>(from)] = -1;
  q.push(from);
  while (!q.empty()) {
    int v = q.front();
    q.pop();
    if (v == to) break;
    for (int x = 0; x < g.rank(); ++x) {
      int t = g.out_edge(v, x);
      if (t >= 0 && prev[static_cast<size_t>(t)] == -2) {
        prev[static_cast<size_t>(t)] = v;
        via[static_cast<size_t>(t)] = static_cast<Letter>(x + 1);
        q.push(t);
      }
      int s = g.in_edge(v, x);
      if (s >= 0 && prev[static_cast<size_t>(s)] == -2) {
        prev[static_cast<size_t>(s)] = v;
        via[static_cast<size_t>(s)] = fg::inv(static_cast<Letter>(x + 1));
        q.push(s);
      }
    }
  }
  if (prev[static_cast<size_t>(to)] == -2) return std::nullopt;
  std::vector<Letter> rev;
  for (int v = to; prev[static_cast<size_t>(v)] != -1; v = prev[static_cast<size_t>(v)]) {
    rev.push_back(via[static_cast<size_t>(v)]);
  }
  std::reverse(rev.begin(), rev.end());
  return Word::reduce(rev, g.rank());
}

// Stem: path from base to the nearest cyclic-core vertex, with that vertex's
// identity inside the trimmed core graph.
struct Stem {
  Word word;
  SubgroupGraph core;
  int entry;  // vertex of `core` the stem lands on
};

std::optional<Stem> stem_of(const SubgroupGraph& g) {
  SubgroupGraph core = g.cyclic_core();
  if (core.edge_count() == 0) return std::nullopt;
  // Identify core vertices inside g: propagate the (unique) embedding of the
  // core back into g by matching from every g-vertex.
  for (int v = 0; v < g.vertex_count(); ++v) {
    for (int c = 0; c < core.vertex_count(); ++c) {
      std::vector<int> img;
      if (propagate_map(core, g, c, v, &img)) {
        auto stem_word = path_word(g, g.base(), v);
        if (!stem_word) continue;
        return Stem{*stem_word, core, c};
      }
    }
  }
  return std::nullopt;
}

}  // namespace

bool SubgroupGraph::conjugate_into(const SubgroupGraph& other) const {
  SubgroupGraph a = cyclic_core();
  SubgroupGraph b = other.cyclic_core();
  if (a.edge_count() == 0) return true;  // trivial subgroup sits anywhere
  if (b.edge_count() == 0) return false;
  for (int t = 0; t < b.vertex_count(); ++t) {
    if (propagate_map(a, b, 0, t, nullptr)) return true;
  }
  return false;
}

std::optional<Word> SubgroupGraph::conjugate_into_witness(
    const SubgroupGraph& other) const {
  if (is_trivial()) return Word{};
  auto sa = stem_of(*this);
  auto sb = stem_of(other);
  if (!sa || !sb) return std::nullopt;
  for (int t = 0; t < sb->core.vertex_count(); ++t) {
    if (propagate_map(sa->core, sb->core, sa->entry, t, nullptr)) {
      auto p = path_word(sb->core, sb->entry, t);
      if (!p) continue;
      // H = stem_a * pi1(core_a, entry_a) * stem_a^-1 and the image sits at
      // vertex t of core_b, reached from other's base by stem_b * p.
      return sa->word * (sb->word * *p).inverse();
    }
  }
  return std::nullopt;
}

bool SubgroupGraph::conjugate_equal(const SubgroupGraph& other) const {
  SubgroupGraph a = cyclic_core();
  SubgroupGraph b = other.cyclic_core();
  if (a.edge_count() != b.edge_count() || a.vertex_count() != b.vertex_count()) {
    return false;
  }
  if (a.edge_count() == 0) return true;
  return a.canonical_key() == b.canonical_key();
}

std::vector<Word> SubgroupGraph::loops_up_to(int max_len, size_t cap) const {
  std::vector<Word> out;
  std::vector<Letter> stack;
  std::function<void(int, int)> rec = [&](int v, int depth) {
    if (out.size() >= cap) return;
    if (v == base_ && depth > 0) out.push_back(Word::reduce(stack, rank_));
    if (depth == max_len) return;
    for (int x = 0; x < rank_; ++x) {
      Letter pos = static_cast<Letter>(x + 1);
      int t = out_[static_cast<size_t>(v)][static_cast<size_t>(x)];
      if (t >= 0 && (stack.empty() || stack.back() != fg::inv(pos))) {
        stack.push_back(pos);
        rec(t, depth + 1);
        stack.pop_back();
      }
      int s = in_[static_cast<size_t>(v)][static_cast<size_t>(x)];
      if (s >= 0 && (stack.empty() || stack.back() != pos)) {
        stack.push_back(fg::inv(pos));
        rec(s, depth + 1);
        stack.pop_back();
      }
    }
  };
  rec(base_, 0);
  return out;
}

std::string SubgroupGraph::describe(const Basis& b) const {
  std::ostringstream os;
  os << "vertices=" << vertex_count() << " edges=" << edge_count() << " rank="
     << index_and_rank().rank << " basis={";
  bool first = true;
  for (const Word& w : graph_basis()) {
    if (!first) os << ", ";
    os << w.str(b);
    first = false;
  }
  os << "}";
  return os.str();
}

}  // namespace vstree::st
