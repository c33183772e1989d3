#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

#include "vstree/endomorphism.hpp"
#include "vstree/words.hpp"

namespace vstree::lim {

using fg::Basis;
using fg::CyclicWord;
using fg::Endomorphism;
using fg::Letter;
using fg::Word;

// Unsigned letter-occurrence counts of the substitution, row = source letter:
// counts(i, j) = occurrences of letter j (either sign) in the image of i.
struct TransitionMatrix {
  Eigen::MatrixXi counts;
  std::vector<std::vector<int>> strata;  // SCCs, dependency-closed strata first
  std::vector<int> stratum_of;           // letter index -> position in `strata`
};

TransitionMatrix transition_matrix(const Endomorphism& phi);

struct PFData {
  double lo = 0.0;
  double hi = 0.0;   // certified enclosure, hi - lo <= tol on success
  double mid() const { return 0.5 * (lo + hi); }
  Eigen::VectorXd right;  // positive eigenvector approximation
  double residual = 0.0;  // ||M v - mid v||_inf
  int iterations = 0;
};

// Collatz-Wielandt enclosure of the spectral radius of an irreducible
// nonnegative block. Throws std::invalid_argument on reducible blocks of
// size >= 2.
PFData pf(const Eigen::MatrixXi& block, double tol);

struct LimitOptions {
  double tol = 1e-6;
  int n_max = 40;
  long explicit_cap = 1 << 21;  // letters held during explicit fallback
};

struct LengthResult {
  double value = 0.0;  // |phi^n(w)|_cyclic / lambda^n at the stopping n
  double gap = 0.0;    // |a_n - a_{n-1}| at the stopping n
  int n_used = 0;
  bool converged = false;  // gap < tol reached within n_max
  bool capped = false;     // explicit fallback overflowed before certifying
  double stratum_value = 0.0;   // normalized by the word's own growth rate
  double stratum_lambda = 1.0;  // that rate (= lambda for top-stratum words)

  double upper() const { return value + 3.0 * gap; }
};

// Normalized limit lengths a_n = |phi^n(w)|_cyclic / lambda^n with a
// posteriori Cauchy certificates. Exact pair-count linear evolution where a
// bounded-cancellation certificate holds; explicit iteration otherwise.
class LimitLengthFunction {
 public:
  explicit LimitLengthFunction(Endomorphism phi, LimitOptions opt = {});
  ~LimitLengthFunction();
  LimitLengthFunction(LimitLengthFunction&&) noexcept;

  const Endomorphism& map() const;
  const TransitionMatrix& transition() const;
  const std::vector<PFData>& stratum_pf() const;
  double lambda() const;  // global top growth rate (enclosure midpoint)
  const LimitOptions& options() const;

  // Cached per cyclic word; the cache confines this object to one owner.
  const LengthResult& length(const CyclicWord& w) const;
  LengthResult length_with(const CyclicWord& w, double tol, int n_max,
                           long explicit_cap) const;

  // True when the pair set of w (closed under the substitution) admits the
  // exact linear evolution from step zero.
  bool locally_safe(const CyclicWord& w) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

struct LaminationSample {
  double epsilon = 0.0;
  int ball_radius = 0;
  std::vector<std::pair<CyclicWord, LengthResult>> members;
  // Symbolic leaf approximations: truncated phi^n(x) for expanding letters.
  std::vector<std::pair<Letter, Word>> ray_prefixes;
};

LaminationSample lamination_sample(const LimitLengthFunction& lengths,
                                   double epsilon, int ball_radius);

// Enumerates one representative per canonical cyclic class of cyclically
// reduced words of length in [1, radius] over the given rank. Stops early if
// the callback returns false.
void for_each_cyclic_class(int rank, int radius,
                           const std::function<bool(const CyclicWord&)>& f);

}  // namespace vstree::lim
