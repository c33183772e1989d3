#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vstree::fg {

// Signed letter: +(i+1) is the i-th basis letter, -(i+1) its inverse. Never 0.
using Letter = std::int8_t;

constexpr Letter inv(Letter l) { return static_cast<Letter>(-l); }
constexpr int letter_index(Letter l) { return (l > 0 ? l : -l) - 1; }

// Total order used for canonical rotations: positive letters first
// (ascending index), then negative letters (ascending index).
constexpr int letter_key(Letter l, int rank) {
  return l > 0 ? l - 1 : rank + (-l) - 1;
}

class Basis {
 public:
  explicit Basis(int rank);
  explicit Basis(std::vector<std::string> names);

  int rank() const { return static_cast<int>(names_.size()); }
  const std::string& name(int index) const { return names_.at(index); }
  std::string spell(Letter l) const;
  std::optional<Letter> parse_letter(std::string_view token) const;
  bool in_range(Letter l) const {
    return l != 0 && letter_index(l) < rank();
  }

  bool operator==(const Basis& o) const { return names_ == o.names_; }

 private:
  std::vector<std::string> names_;
};

// A freely reduced word. The empty word is the identity.
class Word {
 public:
  Word() = default;
  explicit Word(std::vector<Letter> reduced_letters);

  // Free reduction of an arbitrary letter sequence. `rank` bounds indices.
  static Word reduce(std::span<const Letter> raw, int rank);
  static Word single(Letter l);

  const std::vector<Letter>& letters() const { return ls_; }
  int size() const { return static_cast<int>(ls_.size()); }
  bool empty() const { return ls_.empty(); }
  Letter at(int i) const { return ls_[static_cast<size_t>(i)]; }

  Word inverse() const;
  Word operator*(const Word& rhs) const;  // reduced concatenation
  Word conjugate(const Word& g) const;    // g * w * g^-1

  bool operator==(const Word& o) const { return ls_ == o.ls_; }
  bool operator!=(const Word& o) const { return ls_ != o.ls_; }
  bool operator<(const Word& o) const;  // length, then letter keys (rank-free)

  std::string str(const Basis& b) const;

 private:
  std::vector<Letter> ls_;
};

// A cyclically reduced word in canonical rotation: the lexicographically
// least rotation under letter_key order. Keys conjugacy classes.
class CyclicWord {
 public:
  CyclicWord() = default;

  static CyclicWord of(const Word& w, int rank);
  static CyclicWord of_letters(std::span<const Letter> raw, int rank);

  const std::vector<Letter>& letters() const { return ls_; }
  int size() const { return static_cast<int>(ls_.size()); }
  bool trivial() const { return ls_.empty(); }

  Word word() const { return Word(ls_); }
  CyclicWord inverse(int rank) const;

  // w = u^k with k maximal; returns (u, k). Identity returns (empty, 1).
  std::pair<CyclicWord, int> root(int rank) const;

  bool operator==(const CyclicWord& o) const { return ls_ == o.ls_; }
  bool operator!=(const CyclicWord& o) const { return ls_ != o.ls_; }
  bool operator<(const CyclicWord& o) const;

  std::string str(const Basis& b) const;

 private:
  std::vector<Letter> ls_;
};

struct CyclicWordHash {
  size_t operator()(const CyclicWord& w) const {
    size_t h = 1469598103934665603ull;
    for (Letter l : w.letters()) {
      h ^= static_cast<size_t>(static_cast<unsigned char>(l));
      h *= 1099511628211ull;
    }
    return h;
  }
};

struct WordHash {
  size_t operator()(const Word& w) const {
    size_t h = 1469598103934665603ull;
    for (Letter l : w.letters()) {
      h ^= static_cast<size_t>(static_cast<unsigned char>(l));
      h *= 1099511628211ull;
    }
    return h;
  }
};

Word parse_word(std::string_view text, const Basis& b);

}  // namespace vstree::fg
