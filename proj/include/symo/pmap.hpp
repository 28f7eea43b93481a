#ifndef SYMO_PMAP_HPP
#define SYMO_PMAP_HPP

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "symo/words.hpp"

namespace symo {

/// Finite injective map on the naturals, kept with both directions indexed.
class PartialBijection {
 public:
  PartialBijection() = default;

  static PartialBijection from_pairs(const std::vector<std::pair<Nat, Nat>>& pairs) {
    PartialBijection pb;
    for (auto [a, b] : pairs) pb.insert(a, b);
    return pb;
  }

  /// Parses `3->4, 4->0`; the empty string is the empty map.
  static PartialBijection parse(std::string_view text);

  std::optional<Nat> apply(Nat a) const {
    auto it = fwd_.find(a);
    if (it == fwd_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<Nat> unapply(Nat b) const {
    auto it = bwd_.find(b);
    if (it == bwd_.end()) return std::nullopt;
    return it->second;
  }

  bool dom_contains(Nat a) const { return fwd_.count(a) != 0; }
  bool ran_contains(Nat b) const { return bwd_.count(b) != 0; }

  /// Union with the pair (a, b); a must be outside the domain and b outside
  /// the range.
  PartialBijection extend(Nat a, Nat b) const {
    PartialBijection out = *this;
    out.insert(a, b);
    return out;
  }

  void insert(Nat a, Nat b) {
    if (fwd_.count(a)) throw std::invalid_argument("PartialBijection: point already in domain");
    if (bwd_.count(b)) throw std::invalid_argument("PartialBijection: point already in range");
    fwd_[a] = b;
    bwd_[b] = a;
  }

  PartialBijection inverse() const {
    PartialBijection out;
    out.fwd_ = bwd_;
    out.bwd_ = fwd_;
    return out;
  }

  std::size_t size() const { return fwd_.size(); }
  bool empty() const { return fwd_.empty(); }

  const std::map<Nat, Nat>& forward() const { return fwd_; }
  const std::map<Nat, Nat>& backward() const { return bwd_; }

  std::vector<std::pair<Nat, Nat>> pairs() const {
    return {fwd_.begin(), fwd_.end()};
  }

  std::string str() const {
    std::string out;
    for (auto [a, b] : fwd_) {
      if (!out.empty()) out += ", ";
      out += std::to_string(a) + "->" + std::to_string(b);
    }
    return out;
  }

  friend bool operator==(const PartialBijection&, const PartialBijection&) = default;

 private:
  std::map<Nat, Nat> fwd_, bwd_;
};

inline PartialBijection PartialBijection::parse(std::string_view text) {
  PartialBijection pb;
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  auto read_nat = [&]() -> Nat {
    if (i >= text.size() || !std::isdigit(static_cast<unsigned char>(text[i])))
      throw std::invalid_argument("pair parse: number expected");
    Nat v = 0;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      v = v * 10 + static_cast<Nat>(text[i] - '0');
      ++i;
    }
    return v;
  };
  skip_ws();
  while (i < text.size()) {
    Nat a = read_nat();
    skip_ws();
    if (i + 1 >= text.size() || text[i] != '-' || text[i + 1] != '>')
      throw std::invalid_argument("pair parse: '->' expected");
    i += 2;
    skip_ws();
    Nat b = read_nat();
    pb.insert(a, b);
    skip_ws();
    if (i < text.size()) {
      if (text[i] != ',') throw std::invalid_argument("pair parse: ',' expected");
      ++i;
      skip_ws();
    }
  }
  return pb;
}

/// Order used for the canonical enumeration of finite partial bijections:
/// fewer pairs first, then lexicographic on the sorted pair list.
inline bool canonical_pb_less(const PartialBijection& x, const PartialBijection& y) {
  if (x.size() != y.size()) return x.size() < y.size();
  return x.pairs() < y.pairs();
}

/// Permutation of the naturals moving only finitely many points, written as
/// disjoint cycles, e.g. "(0 3)(1 5)".
class FiniteSupportPerm {
 public:
  FiniteSupportPerm() = default;

  static FiniteSupportPerm from_cycles(const std::vector<std::vector<Nat>>& cycles) {
    FiniteSupportPerm p;
    for (const auto& cyc : cycles) {
      if (cyc.size() < 2) throw std::invalid_argument("cycle needs at least two points");
      for (std::size_t i = 0; i < cyc.size(); ++i) {
        Nat from = cyc[i];
        Nat to = cyc[(i + 1) % cyc.size()];
        if (p.fwd_.count(from)) throw std::invalid_argument("cycles are not disjoint");
        p.fwd_[from] = to;
      }
    }
    for (auto [a, b] : p.fwd_) {
      if (p.bwd_.count(b)) throw std::invalid_argument("cycles are not disjoint");
      p.bwd_[b] = a;
    }
    p.cycles_ = cycles;
    return p;
  }

  /// Parses "(0 3)(1 5)"; the empty string is the identity.
  static FiniteSupportPerm parse(std::string_view text);

  Nat apply(Nat a) const {
    auto it = fwd_.find(a);
    return it == fwd_.end() ? a : it->second;
  }

  Nat unapply(Nat b) const {
    auto it = bwd_.find(b);
    return it == bwd_.end() ? b : it->second;
  }

  bool is_identity() const { return fwd_.empty(); }

  std::string str() const {
    std::string out;
    for (const auto& cyc : cycles_) {
      out += '(';
      for (std::size_t i = 0; i < cyc.size(); ++i) {
        if (i) out += ' ';
        out += std::to_string(cyc[i]);
      }
      out += ')';
    }
    return out;
  }

  friend bool operator==(const FiniteSupportPerm& a, const FiniteSupportPerm& b) {
    return a.fwd_ == b.fwd_;
  }

 private:
  std::map<Nat, Nat> fwd_, bwd_;
  std::vector<std::vector<Nat>> cycles_;
};

inline FiniteSupportPerm FiniteSupportPerm::parse(std::string_view text) {
  std::vector<std::vector<Nat>> cycles;
  std::size_t i = 0;
  auto skip_ws = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  skip_ws();
  while (i < text.size()) {
    if (text[i] != '(') throw std::invalid_argument("cycle parse: '(' expected");
    ++i;
    std::vector<Nat> cyc;
    skip_ws();
    while (i < text.size() && text[i] != ')') {
      if (!std::isdigit(static_cast<unsigned char>(text[i])))
        throw std::invalid_argument("cycle parse: number expected");
      Nat v = 0;
      while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
        v = v * 10 + static_cast<Nat>(text[i] - '0');
        ++i;
      }
      cyc.push_back(v);
      skip_ws();
    }
    if (i >= text.size()) throw std::invalid_argument("cycle parse: ')' expected");
    ++i;  // consume ')'
    cycles.push_back(std::move(cyc));
    skip_ws();
  }
  return from_cycles(cycles);
}

class LazyPermutation;

/// A stage label plus the finite fragment of the x0-side map that was in
/// force when a word entered the protected schedule, for collision tracing.
struct CertPlan {
  std::size_t stage = 0;
  PartialBijection fragment;
};

/// Total bijection of the naturals realized on demand. A strategy grows a
/// finite memo so that after stage s both s and its preimage are decided;
/// the memo never contradicts earlier entries.
///
/// Handles share state: copies refer to the same underlying permutation.
/// Mutation (advance and the *_total lookups) requires external
/// serialization; read-only snapshots of the memo may be shared freely.
class LazyPermutation {
 public:
  struct State;

  class Strategy {
   public:
    virtual ~Strategy() = default;
    /// Puts s into both the domain and the range of the memo.
    virtual void ensure_stage(State& st, Nat s) = 0;
    /// Maps this permutation built on top of (as substituted for x1, x2, ...).
    virtual std::span<const LazyPermutation> build_context() const { return {}; }
    /// Stage and fragment from which the given word (over this permutation's
    /// own variable convention, using x0) is protected. May advance `self`.
    virtual std::optional<CertPlan> certificate_plan(LazyPermutation& self, const Word& w) {
      (void)self;
      (void)w;
      return std::nullopt;
    }
  };

  struct State {
    PartialBijection seed;
    PartialBijection memo;
    std::vector<std::pair<Nat, Nat>> log;  // insertion order, excludes seed
    std::vector<std::size_t> stage_log;    // log size after each completed stage
    long long realized = -1;
    std::unique_ptr<Strategy> strategy;
    int epoch = -1;

    void record(Nat a, Nat b) {
      memo.insert(a, b);
      log.emplace_back(a, b);
    }
  };

  LazyPermutation() = default;

  LazyPermutation(std::unique_ptr<Strategy> strategy, int epoch = -1,
                  PartialBijection seed = {})
      : st_(std::make_shared<State>()) {
    st_->seed = seed;
    st_->memo = std::move(seed);
    st_->strategy = std::move(strategy);
    st_->epoch = epoch;
  }

  bool valid() const { return st_ != nullptr; }

  /// Realizes all stages up to and including `stage`. Monotone and
  /// idempotent: advancing twice to the same stage leaves the memo unchanged.
  void advance(Nat stage) {
    check();
    for (long long s = st_->realized + 1; s <= static_cast<long long>(stage); ++s) {
      st_->strategy->ensure_stage(*st_, static_cast<Nat>(s));
      st_->stage_log.push_back(st_->log.size());
      st_->realized = s;
    }
  }

  Nat apply_total(Nat a) {
    check();
    if (auto v = st_->memo.apply(a)) return *v;
    advance(a);
    if (auto v = st_->memo.apply(a)) return *v;
    throw std::logic_error("LazyPermutation: strategy failed to decide a point");
  }

  Nat unapply_total(Nat b) {
    check();
    if (auto v = st_->memo.unapply(b)) return *v;
    advance(b);
    if (auto v = st_->memo.unapply(b)) return *v;
    throw std::logic_error("LazyPermutation: strategy failed to decide a preimage");
  }

  std::optional<Nat> apply_realized(Nat a) const {
    check();
    return st_->memo.apply(a);
  }

  const PartialBijection& memo() const {
    check();
    return st_->memo;
  }

  const PartialBijection& seed() const {
    check();
    return st_->seed;
  }

  long long realized() const {
    check();
    return st_->realized;
  }

  int epoch() const {
    check();
    return st_->epoch;
  }

  std::span<const LazyPermutation> build_context() const {
    check();
    return st_->strategy->build_context();
  }

  std::optional<CertPlan> certificate_plan(const Word& w) {
    check();
    return st_->strategy->certificate_plan(*this, w);
  }

  /// Memo fragment consisting of the seed plus the first `log_size` recorded
  /// pairs.
  PartialBijection fragment(std::size_t log_size) const {
    check();
    PartialBijection out = st_->seed;
    for (std::size_t i = 0; i < log_size && i < st_->log.size(); ++i)
      out.insert(st_->log[i].first, st_->log[i].second);
    return out;
  }

  /// Fragment as it stood before the given stage ran (stage 0 -> the seed).
  PartialBijection fragment_before_stage(std::size_t stage) const {
    check();
    if (stage == 0) return st_->seed;
    if (stage - 1 >= st_->stage_log.size())
      throw std::logic_error("fragment_before_stage: stage not realized");
    return fragment(st_->stage_log[stage - 1]);
  }

  bool same_object(const LazyPermutation& other) const { return st_ == other.st_; }

 private:
  void check() const {
    if (!st_) throw std::logic_error("LazyPermutation: empty handle");
  }
  std::shared_ptr<State> st_;
};

/// Permutation given by closed-form forward and backward rules.
class FormulaStrategy final : public LazyPermutation::Strategy {
 public:
  FormulaStrategy(std::function<Nat(Nat)> fwd, std::function<Nat(Nat)> bwd)
      : fwd_(std::move(fwd)), bwd_(std::move(bwd)) {}

  void ensure_stage(LazyPermutation::State& st, Nat s) override {
    if (!st.memo.dom_contains(s)) st.record(s, fwd_(s));
    if (!st.memo.ran_contains(s)) st.record(bwd_(s), s);
  }

 private:
  std::function<Nat(Nat)> fwd_, bwd_;
};

inline LazyPermutation identity_permutation() {
  return LazyPermutation(std::make_unique<FormulaStrategy>(
      [](Nat n) { return n; }, [](Nat n) { return n; }));
}

inline LazyPermutation permutation_from(const FiniteSupportPerm& p, int epoch = -1) {
  return LazyPermutation(std::make_unique<FormulaStrategy>(
                             [p](Nat n) { return p.apply(n); },
                             [p](Nat n) { return p.unapply(n); }),
                         epoch);
}

/// The map substituted for x0 when atoms are evaluated: either a finite
/// fragment g (optionally pre-composed with a total h, giving h o g) or a
/// total permutation.
class X0Map {
 public:
  static X0Map finite(PartialBijection g) {
    X0Map m;
    m.g_ = std::move(g);
    return m;
  }

  static X0Map composed(LazyPermutation h, PartialBijection g) {
    X0Map m;
    m.g_ = std::move(g);
    if (h.valid()) m.h_ = std::move(h);
    return m;
  }

  static X0Map total(LazyPermutation f) {
    X0Map m;
    m.f_ = std::move(f);
    return m;
  }

  bool is_total() const { return f_.has_value(); }

  std::optional<Nat> image(Nat a) {
    if (f_) return f_->apply_total(a);
    auto v = g_.apply(a);
    if (!v) return std::nullopt;
    return h_ ? h_->apply_total(*v) : *v;
  }

  std::optional<Nat> preimage(Nat b) {
    if (f_) return f_->unapply_total(b);
    Nat mid = h_ ? h_->unapply_total(b) : b;
    return g_.unapply(mid);
  }

  /// Domain size of the finite part (0 for total maps).
  std::size_t finite_size() const { return f_ ? 0 : g_.size(); }

 private:
  PartialBijection g_;
  std::optional<LazyPermutation> h_;
  std::optional<LazyPermutation> f_;
};

/// Maps to substitute into a word: x0 -> x0map, xk -> rest[k-1] for k >= 1.
struct AtomMapContext {
  X0Map x0;
  std::vector<LazyPermutation> rest;
};

/// Applies one atom. Forward follows the atom's own direction; backward is
/// its inverse. x0 atoms are partial, block atoms over total maps always
/// land.
inline std::optional<Nat> atom_apply(const Atom& atom, AtomMapContext& ctx, Nat a,
                                     bool forward) {
  switch (atom.kind) {
    case Atom::Kind::X0Pos:
      return forward ? ctx.x0.image(a) : ctx.x0.preimage(a);
    case Atom::Kind::X0Neg:
      return forward ? ctx.x0.preimage(a) : ctx.x0.image(a);
    case Atom::Kind::UBlock: {
      const auto& ls = atom.block.letters();
      Nat v = a;
      auto step = [&](Letter l, bool fwd) {
        if (l.gen == 0) throw std::invalid_argument("atom_apply: block atom uses x0");
        if (l.gen > ctx.rest.size())
          throw std::invalid_argument("atom_apply: generator has no assigned map");
        LazyPermutation& f = ctx.rest[l.gen - 1];
        bool apply_fwd = (l.sign > 0) == fwd;
        v = apply_fwd ? f.apply_total(v) : f.unapply_total(v);
      };
      if (forward) {
        for (auto it = ls.begin(); it != ls.end(); ++it) step(*it, true);
      } else {
        for (auto it = ls.rbegin(); it != ls.rend(); ++it) step(*it, false);
      }
      return v;
    }
  }
  return std::nullopt;
}

/// Canonical enumeration of all finite partial bijections: the empty map,
/// then grade by the largest point mentioned; inside a grade order by
/// (size, lexicographic sorted pair list).
class SeedEnumerator {
 public:
  const PartialBijection& at(std::size_t index) {
    while (cache_.size() <= index) grow();
    return cache_[index];
  }

 private:
  void grow() {
    if (cache_.empty()) {
      cache_.emplace_back();  // the empty map
      return;
    }
    Nat k = next_grade_++;
    std::vector<PartialBijection> grade;
    std::vector<std::pair<Nat, Nat>> chosen;
    std::set<Nat> dom, ran;
    gen_rec(k, 0, chosen, dom, ran, grade);
    std::sort(grade.begin(), grade.end(), canonical_pb_less);
    for (auto& pb : grade) cache_.push_back(std::move(pb));
  }

  // sorted pair lists over {0..k} that mention k somewhere
  void gen_rec(Nat k, Nat from_pair, std::vector<std::pair<Nat, Nat>>& chosen,
               std::set<Nat>& dom, std::set<Nat>& ran,
               std::vector<PartialBijection>& out) {
    if (!chosen.empty()) {
      bool mentions_k = false;
      for (auto [a, b] : chosen)
        if (a == k || b == k) mentions_k = true;
      if (mentions_k) out.push_back(PartialBijection::from_pairs(chosen));
    }
    Nat side = k + 1;
    for (Nat idx = from_pair; idx < side * side; ++idx) {
      Nat a = idx / side, b = idx % side;
      if (dom.count(a) || ran.count(b)) continue;
      chosen.emplace_back(a, b);
      dom.insert(a);
      ran.insert(b);
      gen_rec(k, idx + 1, chosen, dom, ran, out);
      chosen.pop_back();
      dom.erase(a);
      ran.erase(b);
    }
  }

  std::vector<PartialBijection> cache_;
  Nat next_grade_ = 0;
};

}  // namespace symo

#endif  // SYMO_PMAP_HPP
