#include "vstree/endomorphism.hpp"

#include <deque>
#include <stdexcept>
#include <unordered_set>

#include "vstree/stallings.hpp"

namespace vstree::fg {

Endomorphism::Endomorphism(Basis basis, std::vector<Word> images)
    : basis_(std::move(basis)), images_(std::move(images)) {
  if (static_cast<int>(images_.size()) != basis_.rank()) {
    throw std::invalid_argument("endomorphism needs one image per basis letter");
  }
  for (const Word& w : images_) {
    for (Letter l : w.letters()) {
      if (!basis_.in_range(l)) throw std::out_of_range("image letter out of range");
    }
  }
}

Endomorphism Endomorphism::identity(const Basis& b) {
  std::vector<Word> images;
  images.reserve(static_cast<size_t>(b.rank()));
  for (int i = 0; i < b.rank(); ++i) {
    images.push_back(Word::single(static_cast<Letter>(i + 1)));
  }
  return Endomorphism(b, std::move(images));
}

Word Endomorphism::apply(const Word& w) const {
  std::vector<Letter> out;
  out.reserve(w.letters().size() * 2);
  for (Letter l : w.letters()) {
    const Word& im = images_[static_cast<size_t>(letter_index(l))];
    if (l > 0) {
      for (Letter m : im.letters()) {
        if (!out.empty() && out.back() == inv(m)) {
          out.pop_back();
        } else {
          out.push_back(m);
        }
      }
    } else {
      const auto& ls = im.letters();
      for (auto it = ls.rbegin(); it != ls.rend(); ++it) {
        Letter m = inv(*it);
        if (!out.empty() && out.back() == inv(m)) {
          out.pop_back();
        } else {
          out.push_back(m);
        }
      }
    }
  }
  return Word(std::move(out));
}

CyclicWord Endomorphism::apply(const CyclicWord& w) const {
  return CyclicWord::of(apply(w.word()), rank());
}

Endomorphism Endomorphism::compose(const Endomorphism& inner) const {
  if (!(basis_ == inner.basis_)) throw std::invalid_argument("basis mismatch");
  std::vector<Word> images;
  images.reserve(images_.size());
  for (const Word& w : inner.images_) images.push_back(apply(w));
  return Endomorphism(basis_, std::move(images));
}

Endomorphism Endomorphism::power(int k) const {
  if (k < 0) throw std::invalid_argument("power requires k >= 0");
  Endomorphism acc = identity(basis_);
  for (int i = 0; i < k; ++i) acc = compose(acc);
  return acc;
}

IntMatrix Endomorphism::abelianization() const {
  const int n = rank();
  IntMatrix m = IntMatrix::Zero(n, n);
  for (int j = 0; j < n; ++j) {
    for (Letter l : images_[static_cast<size_t>(j)].letters()) {
      m(letter_index(l), j) += (l > 0 ? 1 : -1);
    }
  }
  return m;
}

Automorphism::Automorphism(Endomorphism forward, Endomorphism inverse)
    : fwd_(std::move(forward)), inv_(std::move(inverse)) {
  if (!(fwd_.basis() == inv_.basis())) throw std::invalid_argument("basis mismatch");
  for (int i = 0; i < fwd_.rank(); ++i) {
    Word x = Word::single(static_cast<Letter>(i + 1));
    if (fwd_.apply(inv_.apply(x)) != x || inv_.apply(fwd_.apply(x)) != x) {
      throw std::invalid_argument("maps are not mutually inverse");
    }
  }
}

long long det_integer(const IntMatrix& m) {
  const int n = static_cast<int>(m.rows());
  std::vector<std::vector<__int128>> a(static_cast<size_t>(n),
                                       std::vector<__int128>(static_cast<size_t>(n)));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[i][j] = m(i, j);
  __int128 prev = 1;
  int sign = 1;
  for (int k = 0; k < n - 1; ++k) {
    if (a[k][k] == 0) {
      int piv = -1;
      for (int r = k + 1; r < n; ++r)
        if (a[r][k] != 0) { piv = r; break; }
      if (piv < 0) return 0;
      std::swap(a[static_cast<size_t>(k)], a[static_cast<size_t>(piv)]);
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i) {
      for (int j = k + 1; j < n; ++j) {
        a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
      }
      a[i][k] = 0;
    }
    prev = a[k][k];
  }
  return static_cast<long long>(sign * a[static_cast<size_t>(n - 1)][static_cast<size_t>(n - 1)]);
}

namespace {

// Nielsen reduction state: parallel tuples (value in F_N, expression in F(y)).
struct Tuple {
  std::vector<Word> u;  // values
  std::vector<Word> v;  // expressions over the generator alphabet

  long total() const {
    long t = 0;
    for (const Word& w : u) t += w.size();
    return t;
  }
  std::string key() const {
    std::string s;
    for (const Word& w : u) {
      for (Letter l : w.letters()) s.push_back(static_cast<char>(l));
      s.push_back(127);
    }
    return s;
  }
};

struct Move {
  int kind;  // 0: u_i <- u_i * u_j^eps, 1: u_i <- u_j^eps * u_i, 2: invert i
  int i, j, eps;
};

Tuple apply_move(const Tuple& t, const Move& m) {
  Tuple out = t;
  auto& ui = out.u[static_cast<size_t>(m.i)];
  auto& vi = out.v[static_cast<size_t>(m.i)];
  if (m.kind == 2) {
    ui = ui.inverse();
    vi = vi.inverse();
    return out;
  }
  Word uj = t.u[static_cast<size_t>(m.j)];
  Word vj = t.v[static_cast<size_t>(m.j)];
  if (m.eps < 0) {
    uj = uj.inverse();
    vj = vj.inverse();
  }
  if (m.kind == 0) {
    ui = ui * uj;
    vi = vi * vj;
  } else {
    ui = uj * ui;
    vi = vj * vi;
  }
  return out;
}

std::vector<Move> all_moves(int k) {
  std::vector<Move> ms;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      for (int eps : {1, -1}) {
        ms.push_back({0, i, j, eps});
        ms.push_back({1, i, j, eps});
      }
    }
  }
  for (int i = 0; i < k; ++i) ms.push_back({2, i, 0, 1});
  return ms;
}

// Greedy strict reduction with a bounded plateau search over length-neutral
// moves. Returns the best tuple reached.
Tuple nielsen_reduce(Tuple t, int plateau_depth, size_t state_cap) {
  const int k = static_cast<int>(t.u.size());
  const auto moves = all_moves(k);
  for (;;) {
    bool improved = false;
    for (const Move& m : moves) {
      if (m.kind == 2) continue;
      Tuple cand = apply_move(t, m);
      if (cand.total() < t.total()) {
        t = std::move(cand);
        improved = true;
        break;
      }
    }
    if (improved) continue;
    // Plateau: BFS over non-increasing moves looking for a strict drop.
    std::unordered_set<std::string> seen;
    std::deque<std::pair<Tuple, int>> queue;
    queue.emplace_back(t, 0);
    seen.insert(t.key());
    bool found = false;
    while (!queue.empty() && seen.size() < state_cap && !found) {
      auto [cur, d] = std::move(queue.front());
      queue.pop_front();
      if (d >= plateau_depth) continue;
      for (const Move& m : moves) {
        Tuple cand = apply_move(cur, m);
        long ct = cand.total();
        if (ct < t.total()) {
          t = std::move(cand);
          found = true;
          break;
        }
        if (ct == t.total()) {
          auto key = cand.key();
          if (seen.insert(key).second) queue.emplace_back(std::move(cand), d + 1);
        }
      }
    }
    if (!found) return t;
  }
}

}  // namespace

std::optional<std::vector<Word>> express_basis_in(const std::vector<Word>& gens,
                                                  int rank) {
  if (gens.empty()) return std::nullopt;
  {
    // Exact surjectivity screen: the folded graph must be the full rose.
    st::SubgroupGraph g = st::SubgroupGraph::build(gens, rank);
    if (!g.is_full_group()) return std::nullopt;
  }
  Tuple t;
  t.u = gens;
  const int k = static_cast<int>(gens.size());
  for (int i = 0; i < k; ++i) t.v.push_back(Word::single(static_cast<Letter>(i + 1)));
  t = nielsen_reduce(std::move(t), 2 * rank + 4, 20000);

  // Expect the values to be single letters covering the basis (duplicates and
  // leftovers would admit further strict reductions and cannot occur for a
  // generating tuple reduced to total length N).
  std::vector<Word> expr(static_cast<size_t>(rank));
  std::vector<bool> got(static_cast<size_t>(rank), false);
  for (int i = 0; i < k; ++i) {
    const Word& ui = t.u[static_cast<size_t>(i)];
    if (ui.empty()) continue;
    if (ui.size() != 1) return std::nullopt;
    Letter l = ui.at(0);
    int idx = letter_index(l);
    if (got[static_cast<size_t>(idx)]) return std::nullopt;
    got[static_cast<size_t>(idx)] = true;
    expr[static_cast<size_t>(idx)] =
        l > 0 ? t.v[static_cast<size_t>(i)] : t.v[static_cast<size_t>(i)].inverse();
  }
  for (bool b : got)
    if (!b) return std::nullopt;
  return expr;
}

std::variant<Automorphism, NotSurjective> invert(const Endomorphism& phi) {
  {
    st::SubgroupGraph g = st::SubgroupGraph::build(phi.images(), phi.rank());
    if (!g.is_full_group()) {
      return NotSurjective{"images do not generate the full group"};
    }
  }
  auto expr = express_basis_in(phi.images(), phi.rank());
  if (!expr) {
    // Generation holds, so this is a search failure, not a math fact.
    throw std::runtime_error("inversion search exhausted on a generating tuple");
  }
  // The expressions are words over generator slots y_i; slot i corresponds to
  // basis letter i, so they read directly as images of an endomorphism.
  Endomorphism psi(phi.basis(), *expr);
  return Automorphism(phi, psi);
}

namespace {

void enumerate_ball(const Basis& b, int radius,
                    const std::function<bool(const Word&)>& visit) {
  // Depth-first over reduced words; visit returns true to stop.
  std::vector<Letter> stack;
  std::function<bool(int)> rec = [&](int depth) -> bool {
    if (depth > 0) {
      if (visit(Word::reduce(stack, b.rank()))) return true;
    }
    if (depth == radius) return false;
    for (int i = 0; i < b.rank(); ++i) {
      for (Letter l : {static_cast<Letter>(i + 1), inv(static_cast<Letter>(i + 1))}) {
        if (!stack.empty() && stack.back() == inv(l)) continue;
        stack.push_back(l);
        if (rec(depth + 1)) return true;
        stack.pop_back();
      }
    }
    return false;
  };
  rec(0);
}

}  // namespace

std::optional<Word> equal_up_to_inner(const Endomorphism& phi,
                                      const Endomorphism& psi, int bound) {
  if (!(phi.basis() == psi.basis())) throw std::invalid_argument("basis mismatch");
  const int n = phi.rank();
  auto matches = [&](const Word& g) {
    for (int i = 0; i < n; ++i) {
      Word x = Word::single(static_cast<Letter>(i + 1));
      if (phi.apply(x) != psi.apply(x).conjugate(g)) return false;
    }
    return true;
  };
  if (matches(Word{})) return Word{};
  std::optional<Word> found;
  enumerate_ball(phi.basis(), bound, [&](const Word& g) {
    if (matches(g)) {
      found = g;
      return true;
    }
    return false;
  });
  return found;
}

}  // namespace vstree::fg
