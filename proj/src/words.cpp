#include "vstree/words.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>

namespace vstree::fg {

namespace {

const char* kDefaultNames[] = {"a", "b", "c", "d", "e", "f", "g", "h",
                               "i", "j", "k", "l", "m", "n", "o", "p",
                               "q", "r", "s", "t", "u", "v", "w", "x",
                               "y", "z"};

}  // namespace

Basis::Basis(int rank) {
  if (rank < 1) throw std::invalid_argument("basis rank must be >= 1");
  if (rank > 120) throw std::invalid_argument("basis rank too large");
  names_.reserve(static_cast<size_t>(rank));
  for (int i = 0; i < rank; ++i) {
    if (i < 26) {
      names_.emplace_back(kDefaultNames[i]);
    } else {
      names_.push_back("x" + std::to_string(i + 1));
    }
  }
}

Basis::Basis(std::vector<std::string> names) : names_(std::move(names)) {
  if (names_.empty()) throw std::invalid_argument("basis rank must be >= 1");
  if (names_.size() > 120) throw std::invalid_argument("basis rank too large");
  for (size_t i = 0; i < names_.size(); ++i) {
    if (names_[i].empty()) throw std::invalid_argument("empty basis name");
    for (size_t j = i + 1; j < names_.size(); ++j) {
      if (names_[i] == names_[j]) {
        throw std::invalid_argument("duplicate basis name: " + names_[i]);
      }
    }
  }
}

std::string Basis::spell(Letter l) const {
  std::string s = name(letter_index(l));
  if (l < 0) s += "^-1";
  return s;
}

std::optional<Letter> Basis::parse_letter(std::string_view token) const {
  bool inverse = false;
  if (token.size() > 3 && token.substr(token.size() - 3) == "^-1") {
    inverse = true;
    token.remove_suffix(3);
  }
  for (int i = 0; i < rank(); ++i) {
    if (token == names_[static_cast<size_t>(i)]) {
      Letter l = static_cast<Letter>(i + 1);
      return inverse ? inv(l) : l;
    }
  }
  return std::nullopt;
}

Word::Word(std::vector<Letter> reduced_letters) : ls_(std::move(reduced_letters)) {
  for (size_t i = 0; i + 1 < ls_.size(); ++i) {
    if (ls_[i] == inv(ls_[i + 1])) {
      throw std::invalid_argument("Word constructor requires a reduced word");
    }
  }
}

Word Word::reduce(std::span<const Letter> raw, int rank) {
  std::vector<Letter> out;
  out.reserve(raw.size());
  for (Letter l : raw) {
    if (l == 0 || letter_index(l) >= rank) {
      throw std::out_of_range("letter index out of range for basis");
    }
    if (!out.empty() && out.back() == inv(l)) {
      out.pop_back();
    } else {
      out.push_back(l);
    }
  }
  Word w;
  w.ls_ = std::move(out);
  return w;
}

Word Word::single(Letter l) {
  Word w;
  w.ls_.push_back(l);
  return w;
}

Word Word::inverse() const {
  Word w;
  w.ls_.reserve(ls_.size());
  for (auto it = ls_.rbegin(); it != ls_.rend(); ++it) w.ls_.push_back(inv(*it));
  return w;
}

Word Word::operator*(const Word& rhs) const {
  std::vector<Letter> out = ls_;
  for (Letter l : rhs.ls_) {
    if (!out.empty() && out.back() == inv(l)) {
      out.pop_back();
    } else {
      out.push_back(l);
    }
  }
  Word w;
  w.ls_ = std::move(out);
  return w;
}

Word Word::conjugate(const Word& g) const { return g * (*this) * g.inverse(); }

bool Word::operator<(const Word& o) const {
  if (ls_.size() != o.ls_.size()) return ls_.size() < o.ls_.size();
  for (size_t i = 0; i < ls_.size(); ++i) {
    int a = letter_key(ls_[i], 120);
    int b = letter_key(o.ls_[i], 120);
    if (a != b) return a < b;
  }
  return false;
}

std::string Word::str(const Basis& b) const {
  if (ls_.empty()) return "1";
  std::ostringstream os;
  for (size_t i = 0; i < ls_.size(); ++i) {
    if (i) os << ' ';
    os << b.spell(ls_[i]);
  }
  return os.str();
}

CyclicWord CyclicWord::of(const Word& w, int rank) {
  return of_letters(w.letters(), rank);
}

CyclicWord CyclicWord::of_letters(std::span<const Letter> raw, int rank) {
  Word reduced = Word::reduce(raw, rank);
  std::vector<Letter> ls = reduced.letters();
  // Cyclic reduction: strip mutually inverse first/last letters.
  size_t lo = 0, hi = ls.size();
  while (hi - lo >= 2 && ls[lo] == inv(ls[hi - 1])) {
    ++lo;
    --hi;
  }
  std::vector<Letter> cyc(ls.begin() + static_cast<long>(lo),
                          ls.begin() + static_cast<long>(hi));
  CyclicWord out;
  if (cyc.empty()) return out;
  // Least rotation under letter_key order.
  size_t n = cyc.size();
  size_t best = 0;
  for (size_t r = 1; r < n; ++r) {
    for (size_t i = 0; i < n; ++i) {
      int kb = letter_key(cyc[(best + i) % n], rank);
      int kr = letter_key(cyc[(r + i) % n], rank);
      if (kr != kb) {
        if (kr < kb) best = r;
        break;
      }
    }
  }
  out.ls_.reserve(n);
  for (size_t i = 0; i < n; ++i) out.ls_.push_back(cyc[(best + i) % n]);
  return out;
}

CyclicWord CyclicWord::inverse(int rank) const {
  std::vector<Letter> rev;
  rev.reserve(ls_.size());
  for (auto it = ls_.rbegin(); it != ls_.rend(); ++it) rev.push_back(inv(*it));
  return of_letters(rev, rank);
}

std::pair<CyclicWord, int> CyclicWord::root(int rank) const {
  int n = size();
  if (n == 0) return {CyclicWord{}, 1};
  for (int p = 1; p <= n / 2; ++p) {
    if (n % p != 0) continue;
    bool periodic = true;
    for (int i = 0; i + p < n && periodic; ++i) {
      if (ls_[static_cast<size_t>(i)] != ls_[static_cast<size_t>(i + p)]) periodic = false;
    }
    if (periodic) {
      std::vector<Letter> u(ls_.begin(), ls_.begin() + p);
      return {of_letters(u, rank), n / p};
    }
  }
  return {*this, 1};
}

bool CyclicWord::operator<(const CyclicWord& o) const {
  if (ls_.size() != o.ls_.size()) return ls_.size() < o.ls_.size();
  for (size_t i = 0; i < ls_.size(); ++i) {
    int a = letter_key(ls_[i], 120);
    int b = letter_key(o.ls_[i], 120);
    if (a != b) return a < b;
  }
  return false;
}

std::string CyclicWord::str(const Basis& b) const { return word().str(b); }

Word parse_word(std::string_view text, const Basis& b) {
  std::vector<Letter> raw;
  std::istringstream is{std::string(text)};
  std::string tok;
  while (is >> tok) {
    if (tok == "1") continue;  // identity token
    auto l = b.parse_letter(tok);
    if (!l) throw std::invalid_argument("unknown letter: " + tok);
    raw.push_back(*l);
  }
  return Word::reduce(raw, b.rank());
}

}  // namespace vstree::fg
