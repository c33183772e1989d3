#include "vstree/reduce.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "vstree/whitehead.hpp"

namespace vstree::red {

namespace {

std::string subset_name(const Basis& b, const std::vector<int>& letters) {
  std::ostringstream os;
  os << '<';
  for (size_t i = 0; i < letters.size(); ++i) {
    if (i) os << ',';
    os << b.name(letters[i]);
  }
  os << '>';
  return os.str();
}

FactorClass basis_subset_factor(const Basis& b, const std::vector<int>& letters) {
  FactorClass f;
  f.name = subset_name(b, letters);
  for (int i : letters) f.gens.push_back(Word::single(static_cast<Letter>(i + 1)));
  f.graph = SubgroupGraph::build(f.gens, b.rank());
  f.evidence = FactorClass::Evidence::BasisSubset;
  return f;
}

// Enumerate cyclic classes of the factor's own ball, mapped into ambient
// coordinates through the factor's basis words.
void for_each_factor_class(const FactorClass& f, int rank, int ball,
                           const std::function<bool(const CyclicWord&)>& fn) {
  const std::vector<Word> basis = f.gens;
  const int r = static_cast<int>(basis.size());
  lim::for_each_cyclic_class(r, ball, [&](const CyclicWord& w) {
    std::vector<Letter> mapped;
    for (Letter l : w.letters()) {
      const Word& piece = basis[static_cast<size_t>(fg::letter_index(l))];
      if (l > 0) {
        mapped.insert(mapped.end(), piece.letters().begin(), piece.letters().end());
      } else {
        const auto& ls = piece.letters();
        for (auto it = ls.rbegin(); it != ls.rend(); ++it) mapped.push_back(fg::inv(*it));
      }
    }
    CyclicWord c = CyclicWord::of_letters(mapped, rank);
    if (c.trivial()) return true;
    return fn(c);
  });
}

void require_proper(const FactorClass& f, int rank) {
  int r = f.rank();
  if (r < 1 || r >= rank) {
    throw std::invalid_argument("detector needs a proper nontrivial factor");
  }
}

// Smallest k <= max_power with phi^k(F) conjugate into F, verified exactly.
// Image words are grown incrementally; exceeding the letter cap ends the
// search (a declared bound, recorded by callers).
std::optional<int> recurrence_power(const Endomorphism& phi, const FactorClass& f,
                                    int max_power, long cap = 4000) {
  // Support screen: letters reachable from the generators' letters under the
  // substitution's dependence closure. A factor whose generators eventually
  // touch letters outside every conjugate of F cannot recur; for basis-subset
  // factors the screen is decisive up to cancellation, and the exact
  // conjugate-into check below settles every positive.
  std::vector<Word> images = f.gens;
  for (int k = 1; k <= max_power; ++k) {
    long total = 0;
    std::vector<Word> next;
    next.reserve(images.size());
    for (const Word& g : images) {
      next.push_back(phi.apply(g));
      total += next.back().size();
    }
    if (total > cap) return std::nullopt;  // declared recurrence bound
    images = std::move(next);
    if (SubgroupGraph::build(images, phi.rank()).conjugate_into(f.graph)) {
      return k;
    }
  }
  return std::nullopt;
}

double factor_growth(const lim::LimitLengthFunction& lengths, const FactorClass& f) {
  double lam = 1.0;
  const auto& tm = lengths.transition();
  const auto& pfs = lengths.stratum_pf();
  std::set<int> letters;
  for (const Word& g : f.gens) {
    for (Letter l : g.letters()) letters.insert(fg::letter_index(l));
  }
  // reachable strata from the letters, walked through the dependence order
  std::set<int> strata;
  for (int i : letters) strata.insert(tm.stratum_of[static_cast<size_t>(i)]);
  bool grew = true;
  while (grew) {
    grew = false;
    for (int s : std::vector<int>(strata.begin(), strata.end())) {
      for (int v : tm.strata[static_cast<size_t>(s)]) {
        for (int w = 0; w < lengths.map().rank(); ++w) {
          if (tm.counts(v, w) > 0 && !strata.count(tm.stratum_of[static_cast<size_t>(w)])) {
            strata.insert(tm.stratum_of[static_cast<size_t>(w)]);
            grew = true;
          }
        }
      }
    }
  }
  for (int s : strata) lam = std::max(lam, pfs[static_cast<size_t>(s)].mid());
  return lam;
}

}  // namespace

PeripheralResult peripheral_detect(const lim::LimitLengthFunction& lengths,
                                   const FactorClass& factor, int ball, double tol) {
  require_proper(factor, lengths.map().rank());
  PeripheralResult res;
  res.ledger.ball = ball;
  res.ledger.tol = tol;
  bool all_below = true;
  // Elliptic certification needs tighter stopping gaps and a deeper explicit
  // budget than the shared cache carries: classes that never admit the linear
  // evolution must still decay below tol before the letter cap.
  const auto& opt = lengths.options();
  const long cap = std::max(opt.explicit_cap, long{1} << 22);
  auto measure = [&](const CyclicWord& w) {
    return lengths.length_with(w, tol / 100, opt.n_max, cap);
  };
  std::vector<CyclicWord> short_reps;
  for_each_factor_class(factor, lengths.map().rank(), ball, [&](const CyclicWord& w) {
    auto r = measure(w);
    ++res.ledger.classes_scanned;
    res.ledger.max_value = std::max(res.ledger.max_value, r.value);
    if (r.upper() >= tol) {
      all_below = false;
      // Clearly hyperbolic member: stop scanning.
      if (r.value > 10 * tol) return false;
    }
    if (short_reps.size() < 24) short_reps.push_back(w);
    return true;
  });
  if (all_below) {
    // Fixed-point compatibility surrogate: pairwise products stay short.
    for (size_t i = 0; i < short_reps.size() && all_below; ++i) {
      for (size_t j = i; j < short_reps.size() && all_below; ++j) {
        CyclicWord p = CyclicWord::of(short_reps[i].word() * short_reps[j].word(),
                                      lengths.map().rank());
        if (p.trivial()) continue;
        ++res.ledger.products_checked;
        if (measure(p).upper() >= tol) all_below = false;
      }
    }
  }
  res.ledger.all_below_tol = all_below;
  res.positive = all_below;
  return res;
}

DynamicalResult dynamical_detect(const lim::LimitLengthFunction& lengths,
                                 const FactorClass& factor, int ball, double tol,
                                 int max_power) {
  const int rank = lengths.map().rank();
  require_proper(factor, rank);
  DynamicalResult res;
  auto& led = res.ledger;
  led.ball = ball;
  led.tol = tol;

  // (c) phi-recurrence, checked first: it is exact and cheap.
  if (auto k = recurrence_power(lengths.map(), factor, max_power)) {
    led.recurrent = true;
    led.recurrence_power = *k;
  }

  // (b) growth saturation from the strata, exact.
  led.factor_lambda = factor_growth(lengths, factor);
  led.growth_saturated = std::abs(led.factor_lambda - lengths.lambda()) <=
                         1e-9 * lengths.lambda();

  if (!led.recurrent || !led.growth_saturated) {
    res.positive = false;
    return res;
  }

  // (a) + (d): scan the factor ball.
  led.min_positive = std::numeric_limits<double>::infinity();
  std::map<int, double> minima;
  std::vector<std::pair<double, CyclicWord>> shortest;
  for_each_factor_class(factor, rank, ball, [&](const CyclicWord& w) {
    const auto& r = lengths.length(w);
    ++led.classes_scanned;
    led.max_value = std::max(led.max_value, r.value);
    if (r.upper() >= tol && r.value > 0) {
      led.min_positive = std::min(led.min_positive, r.value);
      int rad = w.size();
      auto it = minima.find(rad);
      if (it == minima.end() || r.value < it->second) minima[rad] = r.value;
      shortest.push_back({r.value, w});
      std::push_heap(shortest.begin(), shortest.end());
      if (shortest.size() > 12) {
        std::pop_heap(shortest.begin(), shortest.end());
        shortest.pop_back();
      }
    }
    return true;
  });
  for (auto& [rad, m] : minima) led.minima_per_radius.push_back(m);
  led.nondegenerate = led.max_value > tol;
  led.min_over_max = led.max_value > 0 ? led.min_positive / led.max_value : 0;

  // (d) axis overlap among the shortest classes.
  led.overlap_ratio = 1.0;
  std::sort(shortest.begin(), shortest.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (size_t i = 0; i < shortest.size(); ++i) {
    for (size_t j = i; j < shortest.size(); ++j) {
      CyclicWord p =
          CyclicWord::of(shortest[i].second.word() * shortest[j].second.word(), rank);
      if (p.trivial()) continue;
      ++led.products_checked;
      const auto& r = lengths.length(p);
      double denom = shortest[i].first + shortest[j].first;
      if (denom > 0 && r.value > 0) {
        led.overlap_ratio = std::min(led.overlap_ratio, r.value / denom);
      }
    }
  }
  led.overlap_evidence = led.overlap_ratio <= 0.9;
  res.positive = led.nondegenerate && led.overlap_evidence;
  return res;
}

std::vector<FactorClass> candidate_factors(const Endomorphism& phi,
                                           const Bounds& bounds) {
  const Basis& b = phi.basis();
  const int n = b.rank();
  std::vector<FactorClass> out;
  std::set<std::string> seen;
  // All nonempty proper basis subsets.
  for (unsigned mask = 1; mask + 1 < (1u << n); ++mask) {
    std::vector<int> letters;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) letters.push_back(i);
    }
    FactorClass f = basis_subset_factor(b, letters);
    if (seen.insert(f.graph.cyclic_core().canonical_key()).second) {
      out.push_back(std::move(f));
    }
  }
  // Fill of phi-periodic conjugacy classes within the periodic radius.
  std::vector<CyclicWord> periodic;
  lim::for_each_cyclic_class(n, bounds.periodic_radius, [&](const CyclicWord& w) {
    CyclicWord cur = w;
    for (int k = 1; k <= bounds.max_power; ++k) {
      cur = phi.apply(cur);
      if (cur == w) {
        periodic.push_back(w);
        break;
      }
      if (cur.size() > 4 * w.size() + 8) break;  // escaping, no return
    }
    return true;
  });
  for (const CyclicWord& w : periodic) {
    SubgroupGraph f = wh::fill(wh::Target::of_word(w, n));
    int r = f.index_and_rank().rank;
    if (r < 1 || r >= n) continue;
    if (!seen.insert(f.cyclic_core().canonical_key()).second) continue;
    FactorClass fc;
    fc.gens = f.graph_basis();
    fc.graph = f;
    fc.evidence = FactorClass::Evidence::WhiteheadChain;
    std::ostringstream os;
    os << "Fill(" << w.str(b) << ")";
    fc.name = os.str();
    out.push_back(std::move(fc));
  }
  return out;
}

ReducingReport analyze(const Endomorphism& phi, const Bounds& bounds) {
  ReducingReport rep;
  rep.bounds = bounds;
  lim::LimitOptions opt;
  opt.tol = bounds.tol / 8;
  opt.n_max = bounds.n_max;
  opt.explicit_cap = bounds.explicit_cap;
  lim::LimitLengthFunction lengths(phi, opt);
  rep.inverse_available = std::holds_alternative<fg::Automorphism>(fg::invert(phi));

  auto candidates = candidate_factors(phi, bounds);
  rep.candidates_checked = static_cast<int>(candidates.size());

  std::vector<ReducingEntry> peripheral_all;
  for (const FactorClass& f : candidates) {
    auto per = peripheral_detect(lengths, f, bounds.ball, bounds.tol);
    if (per.positive) {
      peripheral_all.push_back({f, ReducingEntry::Kind::Peripheral, per.ledger});
      continue;  // mutually exclusive with dynamical at the same bounds
    }
    auto dyn = dynamical_detect(lengths, f, bounds.ball, bounds.tol, bounds.max_power);
    if (dyn.positive) {
      rep.dynamical.push_back({f, ReducingEntry::Kind::Dynamical, dyn.ledger});
    }
  }
  // Peripheral canonicity: keep inclusion-maximal classes only.
  for (size_t i = 0; i < peripheral_all.size(); ++i) {
    bool maximal = true;
    for (size_t j = 0; j < peripheral_all.size() && maximal; ++j) {
      if (i == j) continue;
      const auto& fi = peripheral_all[i].factor.graph;
      const auto& fj = peripheral_all[j].factor.graph;
      if (fi.conjugate_into(fj) && !fj.conjugate_into(fi)) maximal = false;
    }
    if (maximal) rep.peripheral.push_back(peripheral_all[i]);
  }
  // Minimal dynamical members: nothing in D sits conjugately below them.
  for (size_t i = 0; i < rep.dynamical.size(); ++i) {
    bool minimal = true;
    for (size_t j = 0; j < rep.dynamical.size() && minimal; ++j) {
      if (i == j) continue;
      const auto& fi = rep.dynamical[i].factor.graph;
      const auto& fj = rep.dynamical[j].factor.graph;
      if (fj.conjugate_into(fi) && !fi.conjugate_into(fj)) minimal = false;
    }
    if (minimal) rep.minimal_dynamical.push_back(static_cast<int>(i));
  }
  // Characteristic: orbit representatives of the minimal members under phi.
  std::vector<bool> taken(rep.minimal_dynamical.size(), false);
  for (size_t i = 0; i < rep.minimal_dynamical.size(); ++i) {
    if (taken[i]) continue;
    int idx = rep.minimal_dynamical[i];
    rep.characteristic.push_back(idx);
    for (size_t j = i + 1; j < rep.minimal_dynamical.size(); ++j) {
      if (taken[j]) continue;
      const auto& fi = rep.dynamical[static_cast<size_t>(idx)].factor;
      const auto& fj =
          rep.dynamical[static_cast<size_t>(rep.minimal_dynamical[j])].factor;
      std::vector<Word> im = fi.gens;
      long total = 0;
      for (int k = 1; k <= bounds.max_power && total <= 40000; ++k) {
        total = 0;
        for (Word& g : im) {
          g = phi.apply(g);
          total += g.size();
        }
        if (SubgroupGraph::build(im, phi.rank()).conjugate_equal(fj.graph)) {
          taken[j] = true;
          break;
        }
      }
    }
  }
  // Pairwise orbit intersections of characteristic members stay trivial or
  // elliptic (bounded conjugation).
  for (size_t a = 0; a < rep.characteristic.size(); ++a) {
    for (size_t c = a + 1; c < rep.characteristic.size(); ++c) {
      const auto& fa = rep.dynamical[static_cast<size_t>(rep.characteristic[a])].factor;
      const auto& fc = rep.dynamical[static_cast<size_t>(rep.characteristic[c])].factor;
      bool all_ok = true;
      fg::Basis bb(phi.rank());
      std::vector<Word> conjugators{Word{}};
      lim::for_each_cyclic_class(phi.rank(), bounds.conjugator_bound,
                                 [&](const CyclicWord& w) {
                                   conjugators.push_back(w.word());
                                   return true;
                                 });
      for (const Word& g : conjugators) {
        std::vector<Word> conj_gens;
        for (const Word& w : fc.gens) conj_gens.push_back(w.conjugate(g));
        SubgroupGraph meet =
            fa.graph.intersect(SubgroupGraph::build(conj_gens, phi.rank()));
        if (meet.is_trivial()) continue;
        for (const Word& w : meet.graph_basis()) {
          if (lengths.length(CyclicWord::of(w, phi.rank())).upper() >= bounds.tol) {
            all_ok = false;
          }
        }
      }
      std::ostringstream os;
      os << fa.name << " vs " << fc.name << ": "
         << (all_ok ? "intersections trivial or elliptic" : "nontrivial hyperbolic overlap");
      rep.intersection_notes.push_back(os.str());
    }
  }
  return rep;
}

bool verify_invariance(const Endomorphism& phi, int power, const FactorClass& f) {
  Endomorphism pk = phi.power(power);
  std::vector<Word> images;
  for (const Word& g : f.gens) images.push_back(pk.apply(g));
  SubgroupGraph image = SubgroupGraph::build(images, phi.rank());
  auto witness = image.conjugate_into_witness(f.graph);
  if (!witness) return false;
  // Replay: every image generator lies in the conjugated factor, exactly.
  for (const Word& w : images) {
    if (!f.graph.contains(witness->inverse() * w * *witness)) return false;
  }
  return true;
}

std::vector<std::pair<int, FactorClass>> invariant_factor_search(
    const Endomorphism& phi, int max_power, int complexity_bound) {
  Bounds bounds;
  bounds.max_power = max_power;
  bounds.periodic_radius = std::min(complexity_bound, 6);
  if (max_power < 1) throw std::invalid_argument("max_power must be >= 1");
  std::vector<std::pair<int, FactorClass>> out;
  for (const FactorClass& f : candidate_factors(phi, bounds)) {
    if (auto k = recurrence_power(phi, f, max_power)) {
      if (verify_invariance(phi, *k, f)) out.push_back({*k, f});
    }
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first < b.first;
    int ra = a.second.graph.index_and_rank().rank;
    int rb = b.second.graph.index_and_rank().rank;
    if (ra != rb) return ra < rb;
    return a.second.name < b.second.name;
  });
  return out;
}

ArationalityReport arationality_report(const Endomorphism& phi, const Bounds& bounds) {
  ArationalityReport rep;
  rep.bounds = bounds;
  lim::LimitOptions opt;
  opt.tol = bounds.tol / 8;
  opt.n_max = bounds.n_max;
  opt.explicit_cap = bounds.explicit_cap;
  lim::LimitLengthFunction lengths(phi, opt);
  ReducingReport sweep = analyze(phi, bounds);
  rep.candidates_checked = sweep.candidates_checked;
  if (!sweep.dynamical.empty()) {
    rep.reducer_found = true;
    int idx = sweep.minimal_dynamical.empty() ? 0 : sweep.minimal_dynamical.front();
    rep.reducer = sweep.dynamical[static_cast<size_t>(idx)];
    return rep;
  }
  if (!sweep.peripheral.empty()) {
    rep.reducer_found = true;
    rep.reducer = sweep.peripheral.front();
    return rep;
  }
  // Positive-direction evidence: lamination sampling plus the Whitehead
  // structure of leaf turns.
  auto sample = lim::lamination_sample(lengths, std::max(bounds.tol * 10, 1e-4),
                                       std::min(bounds.ball, 5));
  rep.lamination_members = static_cast<int>(sample.members.size());
  std::vector<CyclicWord> turn_words;
  Basis b(phi.rank());
  for (const auto& [letter, ray] : sample.ray_prefixes) {
    if (ray.size() >= 2) turn_words.push_back(CyclicWord::of(ray, phi.rank()));
  }
  if (!turn_words.empty()) {
    auto wg = wh::WhiteheadGraph::of_words(turn_words, phi.rank());
    rep.leaf_turns_connected = wg.connected_on_used();
    auto cut = wg.cut_vertex();
    if (cut) rep.leaf_cut_vertices.push_back(b.spell(*cut));
  }
  // Surface-type vocabulary: periodic classes with vanishing length.
  lim::for_each_cyclic_class(phi.rank(), std::min(bounds.periodic_radius, 4),
                             [&](const CyclicWord& w) {
                               CyclicWord cur = w;
                               for (int k = 1; k <= bounds.max_power; ++k) {
                                 cur = phi.apply(cur);
                                 if (cur == w) {
                                   if (lengths.length(w).upper() < bounds.tol) {
                                     rep.elliptic_periodic_classes.push_back(w.str(b));
                                   }
                                   return true;
                                 }
                                 if (cur.size() > 4 * w.size() + 8) break;
                               }
                               return true;
                             });
  rep.note = rep.elliptic_periodic_classes.empty()
                 ? "no reducer within bounds; free-type evidence"
                 : "no reducer within bounds; elliptic periodic classes suggest a "
                   "surface-type tree";
  return rep;
}

ControlResult control_tree(const Endomorphism& phi, const ReducingReport& report,
                           const Bounds& bounds) {
  ControlResult res;
  if (report.peripheral.empty() && report.dynamical.empty()) {
    res.kind = ControlResult::Kind::NotConstructed;
    res.reason = "nothing to control";
    return res;
  }
  if (report.dynamical.empty()) {
    res.kind = ControlResult::Kind::SelfControl;
    res.reason = "every reducing factor is peripheral; the tree controls itself";
    for (const auto& e : report.peripheral) res.covered.push_back(e.factor.name);
    return res;
  }
  // Look for an invariant basis-subset splitting F_N = A * B and verify an
  // elliptic element of each reported factor.
  const Basis& b = phi.basis();
  const int n = b.rank();
  std::vector<ReducingEntry> all = report.peripheral;
  all.insert(all.end(), report.dynamical.begin(), report.dynamical.end());
  auto invariant = invariant_factor_search(phi, bounds.max_power, bounds.periodic_radius);
  ControlResult best;
  for (const auto& [k, f] : invariant) {
    if (f.evidence != FactorClass::Evidence::BasisSubset) continue;
    std::set<int> inside;
    for (const Word& g : f.gens) inside.insert(fg::letter_index(g.at(0)));
    std::vector<int> rest;
    for (int i = 0; i < n; ++i) {
      if (!inside.count(i)) rest.push_back(i);
    }
    if (rest.empty()) continue;
    FactorClass comp = basis_subset_factor(b, rest);
    gg::GraphOfGroups t;
    t.rank = n;
    t.vertices.push_back({f.name, f.gens});
    t.vertices.push_back({comp.name, comp.gens});
    t.edges.push_back({"e", 0, 1, iso::Rational(1), std::nullopt, std::nullopt});
    t.validate();
    ControlResult cand;
    cand.kind = ControlResult::Kind::Constructed;
    cand.tree = t;
    for (const auto& entry : all) {
      bool covered = false;
      for (const Word& g : entry.factor.gens) {
        SubgroupGraph cyc = SubgroupGraph::build({g}, n);
        if (cyc.conjugate_into(f.graph) || cyc.conjugate_into(comp.graph)) {
          covered = true;
          break;
        }
      }
      (covered ? cand.covered : cand.uncovered).push_back(entry.factor.name);
    }
    if (cand.covered.size() > best.covered.size() ||
        best.kind == ControlResult::Kind::NotConstructed) {
      best = std::move(cand);
    }
  }
  if (best.kind == ControlResult::Kind::Constructed) {
    auto very_small = gg::validate_very_small(*best.tree);
    if (!very_small.overall) {
      best.reason = "constructed splitting failed the very-small check";
    }
    return best;
  }
  res.kind = ControlResult::Kind::NotConstructed;
  res.reason = "no invariant basis-subset splitting found within bounds";
  return res;
}

ClassificationResult classify(const Endomorphism& phi, const Bounds& bounds) {
  ClassificationResult res;
  res.bounds = bounds;
  auto inv = fg::invert(phi);
  res.inverse_available = std::holds_alternative<fg::Automorphism>(inv);

  // (1) finite order, screened through the abelianization.
  fg::IntMatrix m = phi.abelianization();
  fg::IntMatrix acc = m;
  for (int k = 1; k <= bounds.order_bound; ++k) {
    if (k > 1) acc = acc * m;
    if (acc == fg::IntMatrix::Identity(phi.rank(), phi.rank())) {
      auto conj = fg::equal_up_to_inner(phi.power(k), Endomorphism::identity(phi.basis()),
                                        std::min(4, 2 + phi.rank() / 2));
      if (conj) {
        res.kind = ClassificationResult::Kind::FiniteOrder;
        res.power = k;
        return res;
      }
    }
  }
  // (2) an invariant proper factor class.
  auto found = invariant_factor_search(phi, bounds.max_power, bounds.periodic_radius);
  if (!found.empty()) {
    res.kind = ClassificationResult::Kind::FixesFactorClass;
    res.power = found.front().first;
    res.factor = found.front().second;
    return res;
  }
  // (3) filling-lamination candidate, explicitly bounded.
  res.kind = ClassificationResult::Kind::FillingLaminationCandidate;
  res.forward_evidence = arationality_report(phi, bounds);
  if (res.inverse_available) {
    const auto& aut = std::get<fg::Automorphism>(inv);
    res.inverse_evidence = arationality_report(aut.inverse(), bounds);
  }
  return res;
}

}  // namespace vstree::red
