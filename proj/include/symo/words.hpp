#ifndef SYMO_WORDS_HPP
#define SYMO_WORDS_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace symo {

using Nat = std::uint64_t;

/// One symbol of a free-group word: generator index plus sign.
struct Letter {
  Nat gen = 0;
  int sign = +1;  // +1 or -1

  friend bool operator==(const Letter&, const Letter&) = default;
};

inline Letter inverse(Letter l) { return Letter{l.gen, -l.sign}; }

inline bool cancels(Letter a, Letter b) {
  return a.gen == b.gen && a.sign == -b.sign;
}

// generator index ascending, positive sign before negative
inline bool letter_less(Letter a, Letter b) {
  if (a.gen != b.gen) return a.gen < b.gen;
  return a.sign > b.sign;
}

/// Reduced word in the free group on generators x0, x1, ...
///
/// Letters are stored in application order: letters()[0] is the rightmost
/// letter of the written form and is applied first when the word is
/// evaluated as a function. The empty word is the group identity.
class Word {
 public:
  Word() = default;

  /// Free reduction of a letter sequence given in application order.
  static Word from_letters(std::vector<Letter> app_order) {
    std::vector<Letter> out;
    out.reserve(app_order.size());
    for (Letter l : app_order) {
      if (!out.empty() && cancels(out.back(), l))
        out.pop_back();
      else
        out.push_back(l);
    }
    return Word(std::move(out));
  }

  static Word generator(Nat gen, int sign = +1) {
    return Word(std::vector<Letter>{Letter{gen, sign}});
  }

  /// Parses the written form `x0 x1^-2 x0`. Tokens are whitespace separated;
  /// `^k` exponents expand to |k| letters. "1" and the empty string denote
  /// the trivial word. The result is reduced.
  static Word parse(std::string_view text);

  const std::vector<Letter>& letters() const { return letters_; }
  Nat length() const { return letters_.size(); }
  bool trivial() const { return letters_.empty(); }

  bool uses(Nat gen) const {
    return std::any_of(letters_.begin(), letters_.end(),
                       [gen](Letter l) { return l.gen == gen; });
  }

  std::vector<Nat> used_generators() const {
    std::vector<Nat> gens;
    for (Letter l : letters_)
      if (std::find(gens.begin(), gens.end(), l.gen) == gens.end())
        gens.push_back(l.gen);
    std::sort(gens.begin(), gens.end());
    return gens;
  }

  Nat max_generator() const {
    Nat m = 0;
    for (Letter l : letters_) m = std::max(m, l.gen);
    return m;
  }

  Word inverse() const {
    std::vector<Letter> out(letters_.rbegin(), letters_.rend());
    for (Letter& l : out) l.sign = -l.sign;
    return Word(std::move(out));  // reverse of a reduced word is reduced
  }

  /// Group product; rhs is applied first. The product is reduced.
  friend Word operator*(const Word& lhs, const Word& rhs) {
    std::vector<Letter> app(rhs.letters_);
    app.insert(app.end(), lhs.letters_.begin(), lhs.letters_.end());
    return from_letters(std::move(app));
  }

  /// Renames generators through `map` (old index -> new index). The map must
  /// be injective on the used generators so the result stays reduced.
  Word relabeled(const std::map<Nat, Nat>& map) const {
    std::vector<Letter> out = letters_;
    for (Letter& l : out) {
      auto it = map.find(l.gen);
      if (it == map.end()) throw std::invalid_argument("relabeled: unmapped generator");
      l.gen = it->second;
    }
    return Word(std::move(out));
  }

  /// Written form, e.g. "x1 x0^2 x1^-1 x0"; "1" for the trivial word.
  std::string str() const {
    if (letters_.empty()) return "1";
    std::string out;
    // written form reads left to right, i.e. letters_ reversed
    std::size_t i = letters_.size();
    while (i > 0) {
      Letter l = letters_[i - 1];
      long long run = 0;
      while (i > 0 && letters_[i - 1] == l) {
        ++run;
        --i;
      }
      if (!out.empty()) out += ' ';
      out += 'x';
      out += std::to_string(l.gen);
      long long exp = l.sign > 0 ? run : -run;
      if (exp != 1) {
        out += '^';
        out += std::to_string(exp);
      }
    }
    return out;
  }

  friend bool operator==(const Word&, const Word&) = default;

 private:
  explicit Word(std::vector<Letter> reduced) : letters_(std::move(reduced)) {}
  std::vector<Letter> letters_;
};

inline Word make_word(std::vector<Letter> app_order) {
  return Word::from_letters(std::move(app_order));
}

inline Word invert(const Word& w) { return w.inverse(); }
inline Word concat(const Word& a, const Word& b) { return a * b; }
inline bool uses(const Word& w, Nat gen) { return w.uses(gen); }

/// Canonical word order: length first, then written form compared letter by
/// letter under letter_less.
inline bool canonical_less(const Word& a, const Word& b) {
  if (a.length() != b.length()) return a.length() < b.length();
  const auto& la = a.letters();
  const auto& lb = b.letters();
  for (std::size_t i = la.size(); i > 0; --i) {
    if (la[i - 1] == lb[i - 1]) continue;
    return letter_less(la[i - 1], lb[i - 1]);
  }
  return false;
}

inline Word Word::parse(std::string_view text) {
  std::vector<Letter> written;
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  skip_ws();
  while (i < text.size()) {
    if (text[i] == '1') {  // trivial-word token
      ++i;
      skip_ws();
      continue;
    }
    if (text[i] != 'x') throw std::invalid_argument("word parse: expected 'x'");
    ++i;
    if (i >= text.size() || !std::isdigit(static_cast<unsigned char>(text[i])))
      throw std::invalid_argument("word parse: generator index missing");
    Nat gen = 0;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      gen = gen * 10 + static_cast<Nat>(text[i] - '0');
      ++i;
    }
    long long exp = 1;
    if (i < text.size() && text[i] == '^') {
      ++i;
      bool neg = false;
      if (i < text.size() && (text[i] == '-' || text[i] == '+')) {
        neg = text[i] == '-';
        ++i;
      }
      if (i >= text.size() || !std::isdigit(static_cast<unsigned char>(text[i])))
        throw std::invalid_argument("word parse: exponent missing");
      long long mag = 0;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
        mag = mag * 10 + (text[i] - '0');
        ++i;
      }
      exp = neg ? -mag : mag;
    }
    int sign = exp >= 0 ? +1 : -1;
    for (long long k = 0; k < (exp >= 0 ? exp : -exp); ++k)
      written.push_back(Letter{gen, sign});
    skip_ws();
  }
  std::vector<Letter> app(written.rbegin(), written.rend());
  return from_letters(std::move(app));
}

/// Factorization of a word using x0 into maximal x0-power blocks and maximal
/// nontrivial x0-free blocks:
///   W = (utop) x0^{k_m} U_m ... U_1 x0^{k_0} (u0)
/// u0 sits at the applied-first end, utop at the applied-last end; either may
/// be absent. j counts the U-blocks present, lprime = sum |k_i| + j.
struct DaggerDecomposition {
  std::vector<long long> exponents;  // k_0 .. k_m
  std::vector<Word> u_blocks;        // U_1 .. U_m (between consecutive powers)
  std::optional<Word> u0;
  std::optional<Word> utop;
  Nat j = 0;
  Nat lprime = 0;

  Word reassemble() const {
    std::vector<Letter> app;
    auto push_word = [&](const Word& w) {
      app.insert(app.end(), w.letters().begin(), w.letters().end());
    };
    auto push_power = [&](long long k) {
      Letter l{0, k > 0 ? +1 : -1};
      for (long long c = 0; c < (k > 0 ? k : -k); ++c) app.push_back(l);
    };
    if (u0) push_word(*u0);
    for (std::size_t i = 0; i < exponents.size(); ++i) {
      push_power(exponents[i]);
      if (i < u_blocks.size()) push_word(u_blocks[i]);
    }
    if (utop) push_word(*utop);
    return Word::from_letters(std::move(app));
  }
};

inline DaggerDecomposition dagger_decompose(const Word& w) {
  if (!w.uses(0))
    throw std::invalid_argument("dagger_decompose: word does not use x0");
  DaggerDecomposition d;
  const auto& ls = w.letters();
  std::size_t i = 0;
  bool seen_power = false;
  while (i < ls.size()) {
    if (ls[i].gen == 0) {
      // maximal x0 run; constant sign because w is reduced
      int sign = ls[i].sign;
      long long run = 0;
      while (i < ls.size() && ls[i].gen == 0) {
        ++run;
        ++i;
      }
      d.exponents.push_back(sign > 0 ? run : -run);
      seen_power = true;
    } else {
      std::vector<Letter> block;
      while (i < ls.size() && ls[i].gen != 0) {
        block.push_back(ls[i]);
        ++i;
      }
      Word u = Word::from_letters(std::move(block));
      if (!seen_power)
        d.u0 = u;
      else if (i < ls.size())
        d.u_blocks.push_back(u);
      else
        d.utop = u;
    }
  }
  Nat m = d.exponents.empty() ? 0 : d.exponents.size() - 1;
  d.j = m + (d.u0 ? 1 : 0) + (d.utop ? 1 : 0);
  Nat total = 0;
  for (long long k : d.exponents) total += static_cast<Nat>(k > 0 ? k : -k);
  d.lprime = total + d.j;
  return d;
}

/// A single step of a word: one x0 letter or one maximal x0-free block.
struct Atom {
  enum class Kind { X0Pos, X0Neg, UBlock };
  Kind kind = Kind::X0Pos;
  Word block;  // nonempty, x0-free, reduced iff kind == UBlock

  bool is_x0() const { return kind != Kind::UBlock; }
  friend bool operator==(const Atom&, const Atom&) = default;
};

/// Atoms V_0 .. V_{L'-1} in application order; V_0 acts first.
struct AtomSequence {
  std::vector<Atom> atoms;

  Nat lprime() const { return atoms.size(); }

  Word reassemble() const {
    std::vector<Letter> app;
    for (const Atom& a : atoms) {
      switch (a.kind) {
        case Atom::Kind::X0Pos: app.push_back(Letter{0, +1}); break;
        case Atom::Kind::X0Neg: app.push_back(Letter{0, -1}); break;
        case Atom::Kind::UBlock:
          app.insert(app.end(), a.block.letters().begin(), a.block.letters().end());
          break;
      }
    }
    return Word::from_letters(std::move(app));
  }
};

inline AtomSequence atom_sequence(const Word& w) {
  if (!w.uses(0))
    throw std::invalid_argument("atom_sequence: word does not use x0");
  AtomSequence seq;
  const auto& ls = w.letters();
  std::size_t i = 0;
  while (i < ls.size()) {
    if (ls[i].gen == 0) {
      seq.atoms.push_back(Atom{ls[i].sign > 0 ? Atom::Kind::X0Pos : Atom::Kind::X0Neg, Word{}});
      ++i;
    } else {
      std::vector<Letter> block;
      while (i < ls.size() && ls[i].gen != 0) {
        block.push_back(ls[i]);
        ++i;
      }
      seq.atoms.push_back(Atom{Atom::Kind::UBlock, Word::from_letters(std::move(block))});
    }
  }
  return seq;
}

/// Streams, in canonical order, the reduced words over x0..xn that use x0.
/// Batches are produced one length at a time, so arbitrarily many words can
/// be drawn without materializing a full length level up front beyond the
/// one being read.
class WordEnumerator {
 public:
  explicit WordEnumerator(Nat n) : n_(n) {}

  Nat alphabet_top() const { return n_; }

  const Word& at(std::size_t index) {
    while (cache_.size() <= index) grow();
    return cache_[index];
  }

  /// Canonical index of a word that uses x0 over this alphabet.
  std::optional<std::size_t> index_of(const Word& w) {
    if (!w.uses(0) || w.max_generator() > n_) return std::nullopt;
    while (done_len_ < w.length()) grow();
    auto it = index_.find(w.str());
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  void grow() {
    Nat len = done_len_ + 1;
    std::vector<Letter> written;
    gen_rec(len, written);
    done_len_ = len;
  }

  void gen_rec(Nat len, std::vector<Letter>& written) {
    if (written.size() == len) {
      bool has_x0 = std::any_of(written.begin(), written.end(),
                                [](Letter l) { return l.gen == 0; });
      if (!has_x0) return;
      std::vector<Letter> app(written.rbegin(), written.rend());
      Word w = Word::from_letters(std::move(app));
      index_.emplace(w.str(), cache_.size());
      cache_.push_back(std::move(w));
      return;
    }
    for (Nat g = 0; g <= n_; ++g) {
      for (int sign : {+1, -1}) {
        Letter l{g, sign};
        if (!written.empty() && cancels(written.back(), l)) continue;
        written.push_back(l);
        gen_rec(len, written);
        written.pop_back();
      }
    }
  }

  Nat n_;
  Nat done_len_ = 0;
  std::vector<Word> cache_;
  std::map<std::string, std::size_t> index_;
};

/// All reduced words using x0 over x0..xn with length <= max_len, in
/// canonical order.
inline std::vector<Word> enumerate_words(Nat n, Nat max_len) {
  WordEnumerator en(n);
  std::vector<Word> out;
  for (std::size_t i = 0;; ++i) {
    const Word& w = en.at(i);  // lengths are non-decreasing along the stream
    if (w.length() > max_len) break;
    out.push_back(w);
  }
  return out;
}

}  // namespace symo

#endif  // SYMO_WORDS_HPP
