#include "vstree/whitehead.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace vstree::wh {

Endomorphism WhiteheadMove::endo(const Basis& b) const {
  const int n = b.rank();
  auto in_set = [&](Letter l) {
    return std::find(set.begin(), set.end(), l) != set.end();
  };
  Word a = Word::single(multiplier);
  std::vector<Word> images;
  images.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    Letter x = static_cast<Letter>(i + 1);
    if (fg::letter_index(multiplier) == i) {
      images.push_back(Word::single(x));
      continue;
    }
    bool pos = in_set(x), neg = in_set(fg::inv(x));
    Word w = Word::single(x);
    if (pos && neg) {
      w = a.inverse() * w * a;
    } else if (pos) {
      w = w * a;
    } else if (neg) {
      w = a.inverse() * w;
    }
    images.push_back(w);
  }
  return Endomorphism(b, std::move(images));
}

std::string WhiteheadMove::str(const Basis& b) const {
  std::ostringstream os;
  os << "({";
  for (size_t i = 0; i < set.size(); ++i) {
    if (i) os << ',';
    os << b.spell(set[i]);
  }
  os << "}, " << b.spell(multiplier) << ")";
  return os.str();
}

std::vector<WhiteheadMove> all_whitehead_moves(int rank) {
  std::vector<WhiteheadMove> moves;
  std::vector<Letter> others;
  for (int i = 0; i < rank; ++i) {
    Letter l = static_cast<Letter>(i + 1);
    others.push_back(l);
    others.push_back(fg::inv(l));
  }
  for (Letter a : others) {
    std::vector<Letter> rest;
    for (Letter l : others) {
      if (l != a && l != fg::inv(a)) rest.push_back(l);
    }
    const size_t k = rest.size();
    for (size_t mask = 0; mask < (size_t{1} << k); ++mask) {
      if (mask == 0) continue;  // identity
      if (mask + 1 == (size_t{1} << k)) continue;  // inner conjugation
      WhiteheadMove m;
      m.multiplier = a;
      m.set.push_back(a);
      for (size_t i = 0; i < k; ++i) {
        if (mask & (size_t{1} << i)) m.set.push_back(rest[i]);
      }
      std::sort(m.set.begin(), m.set.end());
      moves.push_back(std::move(m));
    }
  }
  return moves;
}

WhiteheadGraph WhiteheadGraph::of_words(const std::vector<CyclicWord>& ws, int rank) {
  WhiteheadGraph g;
  g.rank_ = rank;
  g.adj_.assign(static_cast<size_t>(2 * rank),
                std::vector<int>(static_cast<size_t>(2 * rank), 0));
  for (const CyclicWord& w : ws) {
    const auto& ls = w.letters();
    const size_t n = ls.size();
    for (size_t i = 0; i < n; ++i) {
      Letter x = fg::inv(ls[i]);
      Letter y = ls[(i + 1) % n];
      g.adj_[static_cast<size_t>(g.slot(x))][static_cast<size_t>(g.slot(y))]++;
      g.adj_[static_cast<size_t>(g.slot(y))][static_cast<size_t>(g.slot(x))]++;
    }
  }
  return g;
}

WhiteheadGraph WhiteheadGraph::of_subgroup(const SubgroupGraph& core) {
  WhiteheadGraph g;
  g.rank_ = core.rank();
  g.adj_.assign(static_cast<size_t>(2 * g.rank_),
                std::vector<int>(static_cast<size_t>(2 * g.rank_), 0));
  for (int v = 0; v < core.vertex_count(); ++v) {
    std::vector<Letter> link;
    for (int x = 0; x < core.rank(); ++x) {
      if (core.out_edge(v, x) >= 0) link.push_back(static_cast<Letter>(x + 1));
      if (core.in_edge(v, x) >= 0) link.push_back(fg::inv(static_cast<Letter>(x + 1)));
    }
    for (size_t i = 0; i < link.size(); ++i) {
      for (size_t j = i + 1; j < link.size(); ++j) {
        g.adj_[static_cast<size_t>(g.slot(link[i]))][static_cast<size_t>(g.slot(link[j]))]++;
        g.adj_[static_cast<size_t>(g.slot(link[j]))][static_cast<size_t>(g.slot(link[i]))]++;
      }
    }
  }
  return g;
}

int WhiteheadGraph::edge_count() const {
  int total = 0;
  for (size_t i = 0; i < adj_.size(); ++i) {
    for (size_t j = i; j < adj_.size(); ++j) total += adj_[i][j];
  }
  return total;
}

int WhiteheadGraph::multiplicity(Letter x, Letter y) const {
  return adj_[static_cast<size_t>(slot(x))][static_cast<size_t>(slot(y))];
}

bool WhiteheadGraph::letter_used(Letter x) const {
  size_t s = static_cast<size_t>(slot(x));
  for (size_t j = 0; j < adj_.size(); ++j) {
    if (adj_[s][j] > 0) return true;
  }
  return false;
}

namespace {

int count_components(const std::vector<std::vector<int>>& adj,
                     const std::vector<bool>& active) {
  const size_t n = adj.size();
  std::vector<bool> seen(n, false);
  int comps = 0;
  for (size_t s = 0; s < n; ++s) {
    if (!active[s] || seen[s]) continue;
    ++comps;
    std::queue<size_t> q;
    q.push(s);
    seen[s] = true;
    while (!q.empty()) {
      size_t v = q.front();
      q.pop();
      for (size_t j = 0; j < n; ++j) {
        if (active[j] && !seen[j] && adj[v][j] > 0) {
          seen[j] = true;
          q.push(j);
        }
      }
    }
  }
  return comps;
}

}  // namespace

bool WhiteheadGraph::connected_on_used() const {
  std::vector<bool> active(adj_.size(), false);
  int used = 0;
  for (size_t i = 0; i < adj_.size(); ++i) {
    for (size_t j = 0; j < adj_.size(); ++j) {
      if (adj_[i][j] > 0) {
        active[i] = true;
        break;
      }
    }
    if (active[i]) ++used;
  }
  if (used == 0) return true;
  return count_components(adj_, active) == 1;
}

std::optional<Letter> WhiteheadGraph::cut_vertex() const {
  std::vector<bool> active(adj_.size(), false);
  std::vector<Letter> letters;
  for (int i = 0; i < rank_; ++i) {
    for (Letter l : {static_cast<Letter>(i + 1), fg::inv(static_cast<Letter>(i + 1))}) {
      if (letter_used(l)) {
        active[static_cast<size_t>(slot(l))] = true;
        letters.push_back(l);
      }
    }
  }
  if (letters.size() < 3) return std::nullopt;
  int base = count_components(adj_, active);
  for (Letter l : letters) {
    auto masked = active;
    masked[static_cast<size_t>(slot(l))] = false;
    if (count_components(adj_, masked) > base) return l;
  }
  return std::nullopt;
}

std::string WhiteheadGraph::str(const Basis& b) const {
  std::ostringstream os;
  for (int i = 0; i < 2 * rank_; ++i) {
    for (int j = i; j < 2 * rank_; ++j) {
      if (adj_[static_cast<size_t>(i)][static_cast<size_t>(j)] > 0) {
        Letter x = i < rank_ ? static_cast<Letter>(i + 1)
                             : fg::inv(static_cast<Letter>(i - rank_ + 1));
        Letter y = j < rank_ ? static_cast<Letter>(j + 1)
                             : fg::inv(static_cast<Letter>(j - rank_ + 1));
        os << b.spell(x) << "-" << b.spell(y) << "x"
           << adj_[static_cast<size_t>(i)][static_cast<size_t>(j)] << " ";
      }
    }
  }
  return os.str();
}

Target Target::of_word(CyclicWord w, int rank) {
  Target t;
  t.rank = rank;
  t.word = std::move(w);
  return t;
}

Target Target::of_subgroup(std::vector<Word> gens, int rank) {
  Target t;
  t.rank = rank;
  t.subgroup_gens = std::move(gens);
  return t;
}

long Target::complexity() const {
  if (word) return word->size();
  return SubgroupGraph::build(subgroup_gens, rank).cyclic_core().edge_count();
}

Target Target::apply(const WhiteheadMove& m) const {
  Basis b(rank);
  Endomorphism e = m.endo(b);
  Target out;
  out.rank = rank;
  if (word) {
    out.word = e.apply(*word);
  } else {
    for (const Word& g : subgroup_gens) out.subgroup_gens.push_back(e.apply(g));
  }
  return out;
}

std::vector<int> Target::used_letter_indices() const {
  std::vector<bool> used(static_cast<size_t>(rank), false);
  if (word) {
    for (Letter l : word->letters()) used[static_cast<size_t>(fg::letter_index(l))] = true;
  } else {
    SubgroupGraph core = SubgroupGraph::build(subgroup_gens, rank).cyclic_core();
    for (int v = 0; v < core.vertex_count(); ++v) {
      for (int x = 0; x < rank; ++x) {
        if (core.out_edge(v, x) >= 0) used[static_cast<size_t>(x)] = true;
      }
    }
  }
  std::vector<int> out;
  for (int i = 0; i < rank; ++i) {
    if (used[static_cast<size_t>(i)]) out.push_back(i);
  }
  return out;
}

WhiteheadGraph Target::whitehead_graph() const {
  if (word) return WhiteheadGraph::of_words({*word}, rank);
  return WhiteheadGraph::of_subgroup(
      SubgroupGraph::build(subgroup_gens, rank).cyclic_core());
}

std::string Target::key() const {
  if (word) {
    std::string s = "w:";
    for (Letter l : word->letters()) s.push_back(static_cast<char>(l));
    return s;
  }
  return "g:" + SubgroupGraph::build(subgroup_gens, rank).cyclic_core().canonical_key();
}

namespace {

constexpr size_t kPlateauStateCap = 50000;

struct SearchNode {
  Target t;
  std::vector<WhiteheadMove> path;
};

}  // namespace

MinimizeResult whitehead_minimize(const Target& t0) {
  if (t0.complexity() == 0) {
    throw std::invalid_argument("whitehead_minimize needs a nontrivial target");
  }
  const auto moves = all_whitehead_moves(t0.rank);
  const int plateau_depth = 2 * t0.rank;
  Target cur = t0;
  std::vector<WhiteheadMove> trail;
  long cur_c = cur.complexity();
  for (;;) {
    bool improved = false;
    for (const auto& m : moves) {
      Target cand = cur.apply(m);
      long c = cand.complexity();
      if (c < cur_c) {
        cur = std::move(cand);
        cur_c = c;
        trail.push_back(m);
        improved = true;
        break;
      }
    }
    if (improved) continue;
    // Plateau search: equal-complexity states, looking for a strict drop.
    std::unordered_set<std::string> seen{cur.key()};
    std::deque<std::pair<SearchNode, int>> q;
    q.push_back({{cur, {}}, 0});
    bool dropped = false;
    while (!q.empty() && seen.size() < kPlateauStateCap && !dropped) {
      auto [node, d] = std::move(q.front());
      q.pop_front();
      if (d >= plateau_depth) continue;
      for (const auto& m : moves) {
        Target cand = node.t.apply(m);
        long c = cand.complexity();
        if (c < cur_c) {
          for (const auto& pm : node.path) trail.push_back(pm);
          trail.push_back(m);
          cur = std::move(cand);
          cur_c = c;
          dropped = true;
          break;
        }
        if (c == cur_c) {
          auto key = cand.key();
          if (seen.insert(key).second) {
            SearchNode next{std::move(cand), node.path};
            next.path.push_back(m);
            q.push_back({std::move(next), d + 1});
          }
        }
      }
    }
    if (!dropped) return MinimizeResult{cur, trail};
  }
}

namespace {

Endomorphism compose_moves(const std::vector<WhiteheadMove>& moves, int rank) {
  Basis b(rank);
  Endomorphism acc = Endomorphism::identity(b);
  for (const auto& m : moves) acc = m.endo(b).compose(acc);
  return acc;
}

SubgroupGraph factor_from_moves(const std::vector<WhiteheadMove>& moves,
                                const std::vector<int>& used, int rank) {
  Endomorphism sigma = compose_moves(moves, rank);
  auto inv_res = fg::invert(sigma);
  if (!std::holds_alternative<fg::Automorphism>(inv_res)) {
    throw std::logic_error("whitehead move composition is not invertible");
  }
  const Endomorphism& sigma_inv = std::get<fg::Automorphism>(inv_res).inverse();
  std::vector<Word> gens;
  for (int u : used) {
    gens.push_back(sigma_inv.image(u));
  }
  return SubgroupGraph::build(gens, rank);
}

}  // namespace

FactorCertificate is_in_proper_factor(const Target& t0) {
  if (t0.complexity() == 0) {
    throw std::invalid_argument("is_in_proper_factor needs a nontrivial target");
  }
  auto [mint, trail] = whitehead_minimize(t0);
  const int n = t0.rank;

  auto finish_with_unused = [&](const Target& form,
                                std::vector<WhiteheadMove> all_moves)
      -> FactorCertificate {
    auto used = form.used_letter_indices();
    InProperFactor ipf;
    ipf.moves = std::move(all_moves);
    ipf.used_letters = used;
    ipf.factor = factor_from_moves(ipf.moves, used, n);
    return FactorCertificate{std::move(ipf)};
  };

  if (static_cast<int>(mint.used_letter_indices().size()) < n) {
    return finish_with_unused(mint, trail);
  }

  WhiteheadGraph wg = mint.whitehead_graph();
  bool separable = !wg.connected_on_used() || wg.cut_vertex().has_value();
  if (!separable) {
    Filling f;
    f.moves = trail;
    f.minimal_complexity = mint.complexity();
    f.plateau_bound = 2 * n;
    return FactorCertificate{std::move(f)};
  }

  // Separable at minimal complexity: some level-move path drops a letter.
  const auto moves = all_whitehead_moves(n);
  const long min_c = mint.complexity();
  std::unordered_set<std::string> seen{mint.key()};
  std::deque<std::pair<SearchNode, int>> q;
  q.push_back({{mint, {}}, 0});
  while (!q.empty() && seen.size() < kPlateauStateCap) {
    auto [node, d] = std::move(q.front());
    q.pop_front();
    if (d >= 2 * n) continue;
    for (const auto& m : moves) {
      Target cand = node.t.apply(m);
      if (cand.complexity() > min_c) continue;
      std::vector<WhiteheadMove> path = node.path;
      path.push_back(m);
      if (static_cast<int>(cand.used_letter_indices().size()) < n) {
        std::vector<WhiteheadMove> all_moves = trail;
        for (const auto& pm : path) all_moves.push_back(pm);
        auto cert = finish_with_unused(cand, std::move(all_moves));
        auto& ipf = std::get<InProperFactor>(cert.verdict);
        ipf.cut_vertex = wg.cut_vertex();
        return cert;
      }
      auto key = cand.key();
      if (seen.insert(key).second) {
        q.push_back({{std::move(cand), std::move(path)}, d + 1});
      }
    }
  }
  throw std::runtime_error(
      "separable whitehead graph but factor extraction exhausted the plateau bound");
}

bool replay_certificate(const Target& original, const FactorCertificate& cert) {
  const int n = original.rank;
  Basis b(n);
  if (cert.in_proper_factor()) {
    const auto& ipf = std::get<InProperFactor>(cert.verdict);
    // Replay moves and check the final form omits some letter.
    Target cur = original;
    for (const auto& m : ipf.moves) cur = cur.apply(m);
    if (static_cast<int>(cur.used_letter_indices().size()) >= n) return false;
    if (cur.used_letter_indices() != ipf.used_letters) return false;
    // The claimed factor must be proper and contain the original target.
    if (ipf.factor.index_and_rank().rank >= n) return false;
    SubgroupGraph target_graph =
        original.is_word() ? SubgroupGraph::build({original.word->word()}, n)
                           : SubgroupGraph::build(original.subgroup_gens, n);
    return target_graph.conjugate_into(ipf.factor);
  }
  const auto& f = std::get<Filling>(cert.verdict);
  Target cur = original;
  for (const auto& m : f.moves) cur = cur.apply(m);
  if (cur.complexity() != f.minimal_complexity) return false;
  // Spot-check minimality: no single move strictly decreases.
  for (const auto& m : all_whitehead_moves(n)) {
    if (cur.apply(m).complexity() < f.minimal_complexity) return false;
  }
  WhiteheadGraph wg = cur.whitehead_graph();
  return wg.connected_on_used() && !wg.cut_vertex().has_value();
}

namespace {

Word map_through(const std::vector<Word>& images, const Word& w, int out_rank) {
  std::vector<Letter> acc;
  for (Letter l : w.letters()) {
    const Word& im = images[static_cast<size_t>(fg::letter_index(l))];
    if (l > 0) {
      for (Letter m : im.letters()) acc.push_back(m);
    } else {
      const auto& ls = im.letters();
      for (auto it = ls.rbegin(); it != ls.rend(); ++it) acc.push_back(fg::inv(*it));
    }
  }
  return Word::reduce(acc, out_rank);
}

}  // namespace

SubgroupGraph fill(const Target& t0) {
  if (t0.complexity() == 0) {
    throw std::invalid_argument("fill needs a nontrivial target");
  }
  const int n = t0.rank;
  // Embedding of the current ambient basis into the original group.
  std::vector<Word> emb;
  for (int i = 0; i < n; ++i) emb.push_back(Word::single(static_cast<Letter>(i + 1)));
  Target cur = t0;
  for (;;) {
    FactorCertificate cert = is_in_proper_factor(cur);
    if (!cert.in_proper_factor()) {
      return SubgroupGraph::build(emb, n);
    }
    const auto& ipf = std::get<InProperFactor>(cert.verdict);
    Endomorphism sigma = compose_moves(ipf.moves, cur.rank);
    auto inv_res = fg::invert(sigma);
    const Endomorphism& sigma_inv = std::get<fg::Automorphism>(inv_res).inverse();
    const auto& used = ipf.used_letters;
    const int m = static_cast<int>(used.size());
    // New ambient letter i corresponds to sigma^-1(used[i]) in old coords.
    std::vector<Word> new_emb;
    for (int u : used) {
      new_emb.push_back(map_through(emb, sigma_inv.image(u), n));
    }
    // Rewrite the target through sigma, then compress letters to 1..m.
    std::vector<int> compress(static_cast<size_t>(cur.rank), -1);
    for (int i = 0; i < m; ++i) compress[static_cast<size_t>(used[i])] = i;
    auto reindex = [&](const Word& w) {
      std::vector<Letter> out;
      for (Letter l : w.letters()) {
        int ni = compress[static_cast<size_t>(fg::letter_index(l))];
        if (ni < 0) throw std::logic_error("witness form uses a dropped letter");
        out.push_back(l > 0 ? static_cast<Letter>(ni + 1)
                            : fg::inv(static_cast<Letter>(ni + 1)));
      }
      return Word::reduce(out, m);
    };
    Target next;
    next.rank = m;
    if (cur.is_word()) {
      Basis bc(cur.rank);
      next.word = CyclicWord::of(reindex(sigma.apply(cur.word->word())), m);
    } else {
      for (const Word& g : cur.subgroup_gens) {
        next.subgroup_gens.push_back(reindex(sigma.apply(g)));
      }
    }
    emb = std::move(new_emb);
    cur = std::move(next);
    if (cur.rank == 0) throw std::logic_error("fill reached rank zero");
  }
}

bool is_primitive(const CyclicWord& w, int rank) {
  if (w.trivial()) return false;
  auto res = whitehead_minimize(Target::of_word(w, rank));
  return res.minimal.complexity() == 1;
}

}  // namespace vstree::wh
