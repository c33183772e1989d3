#include "vstree/limits.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <queue>
#include <stdexcept>
#include <unordered_set>

namespace vstree::lim {

TransitionMatrix transition_matrix(const Endomorphism& phi) {
  const int n = phi.rank();
  TransitionMatrix tm;
  tm.counts = Eigen::MatrixXi::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (Letter l : phi.image(i).letters()) {
      tm.counts(i, fg::letter_index(l)) += 1;
    }
  }
  // Tarjan SCC over the dependence digraph i -> j iff counts(i, j) > 0.
  std::vector<int> index(static_cast<size_t>(n), -1), low(static_cast<size_t>(n), 0);
  std::vector<bool> on_stack(static_cast<size_t>(n), false);
  std::vector<int> stack;
  std::vector<std::vector<int>> comps;
  int counter = 0;
  std::function<void(int)> strongconnect = [&](int v) {
    index[static_cast<size_t>(v)] = low[static_cast<size_t>(v)] = counter++;
    stack.push_back(v);
    on_stack[static_cast<size_t>(v)] = true;
    for (int w = 0; w < n; ++w) {
      if (tm.counts(v, w) == 0) continue;
      if (index[static_cast<size_t>(w)] < 0) {
        strongconnect(w);
        low[static_cast<size_t>(v)] = std::min(low[static_cast<size_t>(v)], low[static_cast<size_t>(w)]);
      } else if (on_stack[static_cast<size_t>(w)]) {
        low[static_cast<size_t>(v)] = std::min(low[static_cast<size_t>(v)], index[static_cast<size_t>(w)]);
      }
    }
    if (low[static_cast<size_t>(v)] == index[static_cast<size_t>(v)]) {
      std::vector<int> comp;
      for (;;) {
        int w = stack.back();
        stack.pop_back();
        on_stack[static_cast<size_t>(w)] = false;
        comp.push_back(w);
        if (w == v) break;
      }
      std::sort(comp.begin(), comp.end());
      comps.push_back(std::move(comp));
    }
  };
  for (int v = 0; v < n; ++v) {
    if (index[static_cast<size_t>(v)] < 0) strongconnect(v);
  }
  // Order strata so that each references only itself and earlier strata.
  const int k = static_cast<int>(comps.size());
  std::vector<int> comp_of(static_cast<size_t>(n), -1);
  for (int c = 0; c < k; ++c) {
    for (int v : comps[static_cast<size_t>(c)]) comp_of[static_cast<size_t>(v)] = c;
  }
  std::vector<std::vector<int>> refs(static_cast<size_t>(k));  // stratum -> referenced strata
  std::vector<int> pending(static_cast<size_t>(k), 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (tm.counts(i, j) > 0 && comp_of[static_cast<size_t>(i)] != comp_of[static_cast<size_t>(j)]) {
        refs[static_cast<size_t>(comp_of[static_cast<size_t>(j)])].push_back(comp_of[static_cast<size_t>(i)]);
        pending[static_cast<size_t>(comp_of[static_cast<size_t>(i)])]++;
      }
    }
  }
  std::queue<int> ready;
  for (int c = 0; c < k; ++c) {
    if (pending[static_cast<size_t>(c)] == 0) ready.push(c);
  }
  std::vector<int> order;
  while (!ready.empty()) {
    int c = ready.front();
    ready.pop();
    order.push_back(c);
    for (int up : refs[static_cast<size_t>(c)]) {
      if (--pending[static_cast<size_t>(up)] == 0) ready.push(up);
    }
  }
  tm.stratum_of.assign(static_cast<size_t>(n), -1);
  for (int pos = 0; pos < k; ++pos) {
    tm.strata.push_back(comps[static_cast<size_t>(order[static_cast<size_t>(pos)])]);
    for (int v : tm.strata.back()) tm.stratum_of[static_cast<size_t>(v)] = pos;
  }
  return tm;
}

PFData pf(const Eigen::MatrixXi& block, double tol) {
  const int n = static_cast<int>(block.rows());
  if (n != block.cols() || n == 0) throw std::invalid_argument("pf needs a square block");
  if (block.minCoeff() < 0) throw std::invalid_argument("pf needs a nonnegative block");
  PFData out;
  if (n == 1) {
    out.lo = out.hi = static_cast<double>(block(0, 0));
    out.right = Eigen::VectorXd::Ones(1);
    out.residual = 0.0;
    return out;
  }
  // Irreducibility: strong connectivity of the support digraph.
  auto reaches_all = [&](bool transpose) {
    std::vector<bool> seen(static_cast<size_t>(n), false);
    std::queue<int> q;
    q.push(0);
    seen[0] = true;
    int cnt = 1;
    while (!q.empty()) {
      int v = q.front();
      q.pop();
      for (int w = 0; w < n; ++w) {
        int entry = transpose ? block(w, v) : block(v, w);
        if (entry > 0 && !seen[static_cast<size_t>(w)]) {
          seen[static_cast<size_t>(w)] = true;
          ++cnt;
          q.push(w);
        }
      }
    }
    return cnt == n;
  };
  if (!reaches_all(false) || !reaches_all(true)) {
    throw std::invalid_argument("pf requires an irreducible block");
  }
  // Collatz-Wielandt on block + I (primitive), shifted back at the end.
  Eigen::MatrixXd m = block.cast<double>() + Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd x = Eigen::VectorXd::Ones(n);
  double lo = 0.0, hi = 0.0;
  int iters = 0;
  const int cap = 400000;
  for (; iters < cap; ++iters) {
    Eigen::VectorXd y = m * x;
    lo = std::numeric_limits<double>::infinity();
    hi = 0.0;
    for (int i = 0; i < n; ++i) {
      double r = y(i) / x(i);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    x = y / y.maxCoeff();
    if (hi - lo <= 0.5 * tol) break;
  }
  double slack = 4e-13 * hi;
  out.lo = lo - 1.0 - slack;
  out.hi = hi - 1.0 + slack;
  out.right = x;
  out.iterations = iters;
  Eigen::VectorXd res = block.cast<double>() * x - out.mid() * x;
  out.residual = res.cwiseAbs().maxCoeff();
  return out;
}

namespace {

using Mask = std::vector<std::uint64_t>;

void mask_set(Mask& m, int bit) {
  m[static_cast<size_t>(bit >> 6)] |= (std::uint64_t{1} << (bit & 63));
}
bool mask_get(const Mask& m, int bit) {
  return (m[static_cast<size_t>(bit >> 6)] >> (bit & 63)) & 1;
}
void mask_or(Mask& a, const Mask& b) {
  for (size_t i = 0; i < a.size(); ++i) a[i] |= b[i];
}
bool mask_eq(const Mask& a, const Mask& b) { return a == b; }

}  // namespace

struct LimitLengthFunction::Impl {
  Endomorphism phi;
  LimitOptions opt;
  int rank = 0;
  int two_n = 0;
  int pair_count = 0;
  TransitionMatrix tm;
  std::vector<PFData> pfs;
  double lambda_global = 1.0;
  std::vector<double> reach_lambda;  // per letter index

  std::vector<std::vector<Letter>> img;  // per slot
  std::vector<int> canc;                 // per pair index, -1 invalid
  std::vector<char> eats;                // per pair index
  std::vector<std::vector<std::pair<int, int>>> contrib;  // per pair index
  std::vector<Mask> closure1;  // per pair index
  std::vector<char> dirty1;    // closure touches an eating / degenerate pair
  std::vector<std::vector<double>> rrow;  // rrow[n][pair]

  mutable std::unordered_map<CyclicWord, LengthResult, fg::CyclicWordHash> cache;

  explicit Impl(Endomorphism p, LimitOptions o) : phi(std::move(p)), opt(o) {
    rank = phi.rank();
    two_n = 2 * rank;
    pair_count = two_n * two_n;
    tm = transition_matrix(phi);
    for (const auto& stratum : tm.strata) {
      Eigen::MatrixXi block(stratum.size(), stratum.size());
      for (size_t i = 0; i < stratum.size(); ++i) {
        for (size_t j = 0; j < stratum.size(); ++j) {
          block(static_cast<int>(i), static_cast<int>(j)) =
              tm.counts(stratum[i], stratum[j]);
        }
      }
      pfs.push_back(pf(block, 1e-11));
    }
    lambda_global = 1.0;
    for (const auto& p : pfs) lambda_global = std::max(lambda_global, p.mid());

    // Per-letter growth rate: max PF over strata reachable in the
    // dependence digraph (a letter's iterated images touch exactly those).
    const int k = static_cast<int>(tm.strata.size());
    std::vector<std::vector<bool>> sreach(static_cast<size_t>(k),
                                          std::vector<bool>(static_cast<size_t>(k), false));
    for (int s = 0; s < k; ++s) sreach[static_cast<size_t>(s)][static_cast<size_t>(s)] = true;
    // strata are ordered dependency-closed first, so one upward sweep settles.
    for (int s = 0; s < k; ++s) {
      for (int v : tm.strata[static_cast<size_t>(s)]) {
        for (int w = 0; w < rank; ++w) {
          if (tm.counts(v, w) > 0) {
            int t = tm.stratum_of[static_cast<size_t>(w)];
            for (int u = 0; u < k; ++u) {
              if (sreach[static_cast<size_t>(t)][static_cast<size_t>(u)]) {
                sreach[static_cast<size_t>(s)][static_cast<size_t>(u)] = true;
              }
            }
          }
        }
      }
    }
    reach_lambda.assign(static_cast<size_t>(rank), 1.0);
    for (int i = 0; i < rank; ++i) {
      int s = tm.stratum_of[static_cast<size_t>(i)];
      double lam = 0.0;
      for (int u = 0; u < k; ++u) {
        if (sreach[static_cast<size_t>(s)][static_cast<size_t>(u)]) {
          lam = std::max(lam, pfs[static_cast<size_t>(u)].mid());
        }
      }
      reach_lambda[static_cast<size_t>(i)] = lam;
    }

    build_pair_tables();
    build_rows();
  }

  int slot(Letter l) const { return fg::letter_key(l, rank); }
  Letter unslot(int s) const {
    return s < rank ? static_cast<Letter>(s + 1) : fg::inv(static_cast<Letter>(s - rank + 1));
  }
  int pidx(Letter x, Letter y) const { return slot(x) * two_n + slot(y); }
  bool valid_pair(Letter x, Letter y) const { return y != fg::inv(x); }

  void build_pair_tables() {
    img.assign(static_cast<size_t>(two_n), {});
    for (int s = 0; s < two_n; ++s) {
      Letter l = unslot(s);
      Word w = l > 0 ? phi.image(fg::letter_index(l))
                     : phi.image(fg::letter_index(l)).inverse();
      img[static_cast<size_t>(s)] = w.letters();
    }
    canc.assign(static_cast<size_t>(pair_count), -1);
    eats.assign(static_cast<size_t>(pair_count), 0);
    contrib.assign(static_cast<size_t>(pair_count), {});
    for (int sx = 0; sx < two_n; ++sx) {
      for (int sy = 0; sy < two_n; ++sy) {
        Letter x = unslot(sx), y = unslot(sy);
        if (!valid_pair(x, y)) continue;
        const auto& u = img[static_cast<size_t>(sx)];
        const auto& v = img[static_cast<size_t>(sy)];
        int p = sx * two_n + sy;
        if (u.empty() || v.empty()) {
          canc[static_cast<size_t>(p)] = 0;
          eats[static_cast<size_t>(p)] = 1;  // degenerate: explicit path only
          continue;
        }
        int c = 0;
        int m = static_cast<int>(std::min(u.size(), v.size()));
        while (c < m &&
               u[u.size() - 1 - static_cast<size_t>(c)] == fg::inv(v[static_cast<size_t>(c)])) {
          ++c;
        }
        canc[static_cast<size_t>(p)] = c;
        eats[static_cast<size_t>(p)] = (c == m) ? 1 : 0;
        if (eats[static_cast<size_t>(p)]) continue;
        std::map<int, int> acc;
        auto add = [&](Letter a, Letter b, int coef) {
          acc[pidx(a, b)] += coef;
        };
        for (size_t kk = 0; kk + 1 < v.size(); ++kk) add(v[kk], v[kk + 1], +1);
        for (int kk = 0; kk < c; ++kk) {
          add(v[static_cast<size_t>(kk)], v[static_cast<size_t>(kk + 1)], -1);
        }
        for (int t = 0; t < c; ++t) {
          add(u[u.size() - 2 - static_cast<size_t>(t)],
              u[u.size() - 1 - static_cast<size_t>(t)], -1);
        }
        add(u[u.size() - 1 - static_cast<size_t>(c)], v[static_cast<size_t>(c)], +1);
        auto& list = contrib[static_cast<size_t>(p)];
        for (auto [q, coef] : acc) {
          if (coef != 0) list.emplace_back(q, coef);
        }
      }
    }
    // Single-pair closures.
    const size_t words = static_cast<size_t>((pair_count + 63) / 64);
    closure1.assign(static_cast<size_t>(pair_count), Mask(words, 0));
    dirty1.assign(static_cast<size_t>(pair_count), 0);
    for (int p = 0; p < pair_count; ++p) {
      if (canc[static_cast<size_t>(p)] < 0) continue;
      Mask cur(words, 0);
      mask_set(cur, p);
      bool dirty = false;
      for (;;) {
        Mask next = cur;
        for (int q = 0; q < pair_count; ++q) {
          if (!mask_get(cur, q)) continue;
          if (eats[static_cast<size_t>(q)]) {
            dirty = true;
            continue;
          }
          int sx = q / two_n, sy = q % two_n;
          const auto& u = img[static_cast<size_t>(sx)];
          const auto& v = img[static_cast<size_t>(sy)];
          for (size_t kk = 0; kk + 1 < u.size(); ++kk) {
            mask_set(next, pidx(u[kk], u[kk + 1]));
          }
          for (size_t kk = 0; kk + 1 < v.size(); ++kk) {
            mask_set(next, pidx(v[kk], v[kk + 1]));
          }
          int c = canc[static_cast<size_t>(q)];
          mask_set(next, pidx(u[u.size() - 1 - static_cast<size_t>(c)],
                              v[static_cast<size_t>(c)]));
        }
        if (mask_eq(next, cur)) break;
        cur = std::move(next);
      }
      closure1[static_cast<size_t>(p)] = std::move(cur);
      dirty1[static_cast<size_t>(p)] = dirty ? 1 : 0;
    }
  }

  void build_rows() {
    rrow.assign(static_cast<size_t>(opt.n_max + 1),
                std::vector<double>(static_cast<size_t>(pair_count), 0.0));
    for (int p = 0; p < pair_count; ++p) {
      if (canc[static_cast<size_t>(p)] >= 0) rrow[0][static_cast<size_t>(p)] = 1.0;
    }
    for (int n = 0; n < opt.n_max; ++n) {
      auto& cur = rrow[static_cast<size_t>(n)];
      auto& nxt = rrow[static_cast<size_t>(n + 1)];
      for (int p = 0; p < pair_count; ++p) {
        double s = 0.0;
        for (auto [q, coef] : contrib[static_cast<size_t>(p)]) {
          s += coef * cur[static_cast<size_t>(q)];
        }
        nxt[static_cast<size_t>(p)] = s;
      }
    }
  }

  // --- word-level helpers ---

  static void cyclic_pairs(const std::vector<Letter>& ls,
                           std::vector<std::pair<int, int>>& out, const Impl& im) {
    std::map<int, int> acc;
    const size_t n = ls.size();
    for (size_t i = 0; i < n; ++i) {
      acc[im.pidx(ls[i], ls[(i + 1) % n])] += 1;
    }
    out.assign(acc.begin(), acc.end());
  }

  bool closure_and_safety(const std::vector<std::pair<int, int>>& pairs,
                          Mask* closure_out) const {
    const size_t words = static_cast<size_t>((pair_count + 63) / 64);
    Mask m(words, 0);
    for (auto [p, cnt] : pairs) {
      (void)cnt;
      if (dirty1[static_cast<size_t>(p)]) return false;
      mask_or(m, closure1[static_cast<size_t>(p)]);
    }
    // Composition condition on the closed set: per middle letter, the worst
    // incoming and outgoing cancellations must leave at least one letter.
    std::vector<int> max_in(static_cast<size_t>(two_n), 0);
    std::vector<int> max_out(static_cast<size_t>(two_n), 0);
    std::vector<bool> present(static_cast<size_t>(two_n), false);
    for (int p = 0; p < pair_count; ++p) {
      if (!mask_get(m, p)) continue;
      if (eats[static_cast<size_t>(p)]) return false;
      int sx = p / two_n, sy = p % two_n;
      int c = canc[static_cast<size_t>(p)];
      max_out[static_cast<size_t>(sx)] = std::max(max_out[static_cast<size_t>(sx)], c);
      max_in[static_cast<size_t>(sy)] = std::max(max_in[static_cast<size_t>(sy)], c);
      present[static_cast<size_t>(sx)] = present[static_cast<size_t>(sy)] = true;
    }
    for (int s = 0; s < two_n; ++s) {
      if (!present[static_cast<size_t>(s)]) continue;
      long len = static_cast<long>(img[static_cast<size_t>(s)].size());
      if (max_in[static_cast<size_t>(s)] + max_out[static_cast<size_t>(s)] > len - 1) {
        return false;
      }
    }
    if (closure_out) *closure_out = std::move(m);
    return true;
  }

  // One explicit substitution step on a cyclically reduced letter sequence.
  std::vector<Letter> step_cyclic(const std::vector<Letter>& ls) const {
    std::vector<Letter> out;
    out.reserve(ls.size() * 4);
    for (Letter l : ls) {
      const auto& im = img[static_cast<size_t>(slot(l))];
      for (Letter m : im) {
        if (!out.empty() && out.back() == fg::inv(m)) {
          out.pop_back();
        } else {
          out.push_back(m);
        }
      }
    }
    // cyclic reduction
    size_t lo = 0, hi = out.size();
    while (hi - lo >= 2 && out[lo] == fg::inv(out[hi - 1])) {
      ++lo;
      --hi;
    }
    return std::vector<Letter>(out.begin() + static_cast<long>(lo),
                               out.begin() + static_cast<long>(hi));
  }

  LengthResult compute(const CyclicWord& w, double tol, int n_max,
                       long explicit_cap) const {
    LengthResult res;
    if (w.trivial()) {
      res.converged = true;
      res.n_used = 0;
      return res;
    }
    double lam_sub = 0.0;
    for (Letter l : w.letters()) {
      lam_sub = std::max(lam_sub, reach_lambda[static_cast<size_t>(fg::letter_index(l))]);
    }
    res.stratum_lambda = std::max(lam_sub, 1e-30);

    std::vector<double> lengths;  // lengths[n] = |phi^n(w)|_cyclic
    lengths.push_back(static_cast<double>(w.size()));

    std::vector<Letter> cur = w.letters();
    std::vector<std::pair<int, int>> pairs;
    int n = 0;
    bool linear = false;
    int linear_from = 0;
    std::vector<std::pair<int, int>> linear_pairs;
    while (n < n_max) {
      if (!linear) {
        cyclic_pairs(cur, pairs, *this);
        if (closure_and_safety(pairs, nullptr)) {
          linear = true;
          linear_from = n;
          linear_pairs = pairs;
          continue;
        }
        std::vector<Letter> next = step_cyclic(cur);
        if (static_cast<long>(next.size()) > explicit_cap) {
          res.capped = true;
          break;
        }
        cur = std::move(next);
        ++n;
        lengths.push_back(static_cast<double>(cur.size()));
        if (cur.empty()) break;  // died to the identity
      } else {
        // Linear mode: lengths from the precomputed row vectors.
        int steps = n_max - linear_from;
        for (int s = static_cast<int>(lengths.size()) - 1 - linear_from; s < steps; ++s) {
          // lengths for n = linear_from + s + 1
          const auto& row = rrow[static_cast<size_t>(s + 1)];
          double total = 0.0;
          for (auto [p, cnt] : linear_pairs) {
            total += cnt * row[static_cast<size_t>(p)];
          }
          lengths.push_back(total);
        }
        n = n_max;
      }
    }

    // Normalized sequence and the Cauchy stopping rule: two successive gaps
    // below tol.
    double lam = lambda_global;
    double prev = lengths[0];
    double prev_gap = std::numeric_limits<double>::infinity();
    double scale = 1.0;
    res.value = lengths[0];
    res.gap = std::numeric_limits<double>::infinity();
    res.n_used = 0;
    for (size_t i = 1; i < lengths.size(); ++i) {
      scale *= lam;
      double a = lengths[i] / scale;
      double gap = std::abs(a - prev);
      res.value = a;
      res.gap = std::max(gap, 0.0);
      res.n_used = static_cast<int>(i);
      if (gap < tol && prev_gap < tol) {
        res.converged = true;
        res.gap = std::max(gap, prev_gap);
        break;
      }
      prev = a;
      prev_gap = gap;
    }
    if (lengths.size() == 1) {
      // Never advanced (immediate cap): report what is known.
      res.value = lengths[0];
      res.gap = lengths[0];
    }
    // Word died to identity: exact zero.
    if (!lengths.empty() && lengths.back() == 0.0) {
      res.value = 0.0;
      res.gap = 0.0;
      res.converged = true;
    }
    res.stratum_value = res.value * std::pow(lam / res.stratum_lambda,
                                             static_cast<double>(res.n_used));
    return res;
  }
};

LimitLengthFunction::LimitLengthFunction(Endomorphism phi, LimitOptions opt)
    : impl_(std::make_unique<Impl>(std::move(phi), opt)) {}
LimitLengthFunction::~LimitLengthFunction() = default;
LimitLengthFunction::LimitLengthFunction(LimitLengthFunction&&) noexcept = default;

const Endomorphism& LimitLengthFunction::map() const { return impl_->phi; }
const TransitionMatrix& LimitLengthFunction::transition() const { return impl_->tm; }
const std::vector<PFData>& LimitLengthFunction::stratum_pf() const { return impl_->pfs; }
double LimitLengthFunction::lambda() const { return impl_->lambda_global; }
const LimitOptions& LimitLengthFunction::options() const { return impl_->opt; }

const LengthResult& LimitLengthFunction::length(const CyclicWord& w) const {
  auto it = impl_->cache.find(w);
  if (it != impl_->cache.end()) return it->second;
  LengthResult r = impl_->compute(w, impl_->opt.tol, impl_->opt.n_max,
                                  impl_->opt.explicit_cap);
  return impl_->cache.emplace(w, std::move(r)).first->second;
}

LengthResult LimitLengthFunction::length_with(const CyclicWord& w, double tol,
                                              int n_max, long explicit_cap) const {
  if (n_max > impl_->opt.n_max) n_max = impl_->opt.n_max;
  return impl_->compute(w, tol, n_max, explicit_cap);
}

bool LimitLengthFunction::locally_safe(const CyclicWord& w) const {
  if (w.trivial()) return true;
  std::vector<std::pair<int, int>> pairs;
  Impl::cyclic_pairs(w.letters(), pairs, *impl_);
  return impl_->closure_and_safety(pairs, nullptr);
}

LaminationSample lamination_sample(const LimitLengthFunction& lengths,
                                   double epsilon, int ball_radius) {
  if (epsilon <= 0) throw std::invalid_argument("lamination_sample needs epsilon > 0");
  LaminationSample out;
  out.epsilon = epsilon;
  out.ball_radius = ball_radius;
  for_each_cyclic_class(lengths.map().rank(), ball_radius, [&](const CyclicWord& w) {
    const LengthResult& r = lengths.length(w);
    if (r.upper() < epsilon) out.members.emplace_back(w, r);
    return true;
  });
  std::sort(out.members.begin(), out.members.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  // Ray prefixes for expanding letters.
  const auto& tm = lengths.transition();
  const auto& pfs = lengths.stratum_pf();
  for (int i = 0; i < lengths.map().rank(); ++i) {
    double lam = pfs[static_cast<size_t>(tm.stratum_of[static_cast<size_t>(i)])].mid();
    if (lam <= 1.0) continue;
    Word ray = Word::single(static_cast<Letter>(i + 1));
    for (int step = 0; step < 24 && ray.size() < 64; ++step) {
      ray = lengths.map().apply(ray);
    }
    if (ray.size() > 64) {
      ray = Word(std::vector<Letter>(ray.letters().begin(), ray.letters().begin() + 64));
    }
    out.ray_prefixes.emplace_back(static_cast<Letter>(i + 1), ray);
  }
  return out;
}

void for_each_cyclic_class(int rank, int radius,
                           const std::function<bool(const CyclicWord&)>& f) {
  std::unordered_set<CyclicWord, fg::CyclicWordHash> seen;
  std::vector<Letter> stack;
  bool stop = false;
  std::function<void(int)> rec = [&](int depth) {
    if (stop) return;
    if (depth > 0 && (stack.size() < 2 || stack.front() != fg::inv(stack.back()))) {
      CyclicWord w = CyclicWord::of_letters(stack, rank);
      if (w.size() == static_cast<int>(stack.size())) {
        if (seen.insert(w).second) {
          if (!f(w)) {
            stop = true;
            return;
          }
        }
      }
    }
    if (depth == radius) return;
    for (int i = 0; i < rank && !stop; ++i) {
      for (Letter l : {static_cast<Letter>(i + 1), fg::inv(static_cast<Letter>(i + 1))}) {
        if (!stack.empty() && stack.back() == fg::inv(l)) continue;
        stack.push_back(l);
        rec(depth + 1);
        stack.pop_back();
        if (stop) return;
      }
    }
  };
  rec(0);
}

}  // namespace vstree::lim
