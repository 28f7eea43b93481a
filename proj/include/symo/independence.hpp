#ifndef SYMO_INDEPENDENCE_HPP
#define SYMO_INDEPENDENCE_HPP

#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "symo/itinerary.hpp"
#include "symo/pmap.hpp"
#include "symo/structures.hpp"
#include "symo/words.hpp"

namespace symo {

/// Precomputed data for the words a safe extension must protect. Every word
/// uses x0; x_plus/x_minus index the positive and negative x0 atoms.
struct WordContextEntry {
  Word word;
  AtomSequence atoms;
  std::vector<std::size_t> x_plus, x_minus;
  bool pure_power = false;  // every atom is an x0 letter
};

class WordContext {
 public:
  WordContext() = default;

  static WordContext from_words(const std::vector<Word>& words) {
    WordContext wc;
    for (const Word& w : words) wc.add(w);
    return wc;
  }

  /// Adds a word (ignored if already present).
  void add(const Word& w) {
    if (!w.uses(0)) throw std::invalid_argument("WordContext: word must use x0");
    for (const auto& e : entries_)
      if (e.word == w) return;
    WordContextEntry e;
    e.word = w;
    e.atoms = atom_sequence(w);
    e.pure_power = true;
    for (std::size_t i = 0; i < e.atoms.atoms.size(); ++i) {
      switch (e.atoms.atoms[i].kind) {
        case Atom::Kind::X0Pos: e.x_plus.push_back(i); break;
        case Atom::Kind::X0Neg: e.x_minus.push_back(i); break;
        case Atom::Kind::UBlock: e.pure_power = false; break;
      }
    }
    entries_.push_back(std::move(e));
  }

  const std::vector<WordContextEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<WordContextEntry> entries_;
};

namespace detail {

// Backward (or forward) orbit of `start` through the x0 map, to the given
// depth, including the start itself. For words that are plain x0 powers the
// bad-value closure collapses to one such orbit segment.
inline std::vector<Nat> orbit_segment(X0Map& m, Nat start, std::size_t depth,
                                      bool backward) {
  std::vector<Nat> out{start};
  Nat v = start;
  for (std::size_t c = 0; c < depth; ++c) {
    auto nx = backward ? m.preimage(v) : m.image(v);
    if (!nx) break;
    v = *nx;
    out.push_back(v);
  }
  return out;
}

// All values reachable at `target_slot` by itineraries passing through some
// element of `sources`, at any slot.
inline std::set<Nat> closure_at_slot(const AtomSequence& atoms, AtomMapContext& ctx,
                                     const std::set<Nat>& sources,
                                     std::size_t target_slot) {
  std::set<Nat> out;
  for (Nat x : sources) {
    for (std::size_t j = 0; j <= atoms.atoms.size(); ++j) {
      if (auto v = path_value(atoms, ctx, j, target_slot, x)) out.insert(*v);
    }
  }
  return out;
}

}  // namespace detail

/// Values of b that would let some protected word connect an itinerary
/// through `a` with one through h(b) after adding the pair (a, b). This is
/// the finite complement of the safe-choice set, already pulled back
/// through h.
inline std::set<Nat> right_bad_set(LazyPermutation h, const PartialBijection& g, Nat a,
                                   std::vector<LazyPermutation> rest,
                                   const WordContext& wc) {
  std::set<Nat> bad;
  AtomMapContext ctx{X0Map::composed(h, g), std::move(rest)};
  for (const WordContextEntry& e : wc.entries()) {
    std::size_t lp = e.atoms.lprime();
    if (e.pure_power) {
      // the closure is the backward orbit of a, one depth short of the length
      for (Nat v : detail::orbit_segment(ctx.x0, a, lp - 1, true))
        bad.insert(h.unapply_total(v));
      continue;
    }
    for (std::size_t i : e.x_plus) {
      std::set<Nat> s = set_of(itinerary_from(e.atoms, ctx, i, a));
      for (Nat v : detail::closure_at_slot(e.atoms, ctx, s, i + 1))
        bad.insert(h.unapply_total(v));
    }
    for (std::size_t i : e.x_minus) {
      std::set<Nat> s = set_of(itinerary_from(e.atoms, ctx, i + 1, a));
      for (Nat v : detail::closure_at_slot(e.atoms, ctx, s, i))
        bad.insert(h.unapply_total(v));
    }
  }
  return bad;
}

/// Mirror of right_bad_set for range extensions: the values of a that would
/// connect itineraries through h(b) after adding (a, b).
inline std::set<Nat> left_bad_set(LazyPermutation h, const PartialBijection& g, Nat b,
                                  std::vector<LazyPermutation> rest,
                                  const WordContext& wc) {
  std::set<Nat> bad;
  AtomMapContext ctx{X0Map::composed(h, g), std::move(rest)};
  Nat hb = h.apply_total(b);
  for (const WordContextEntry& e : wc.entries()) {
    std::size_t lp = e.atoms.lprime();
    if (e.pure_power) {
      for (Nat v : detail::orbit_segment(ctx.x0, hb, lp - 1, false)) bad.insert(v);
      continue;
    }
    for (std::size_t i : e.x_plus) {
      std::set<Nat> s = set_of(itinerary_from(e.atoms, ctx, i + 1, hb));
      for (Nat v : detail::closure_at_slot(e.atoms, ctx, s, i)) bad.insert(v);
    }
    for (std::size_t i : e.x_minus) {
      std::set<Nat> s = set_of(itinerary_from(e.atoms, ctx, i, hb));
      for (Nat v : detail::closure_at_slot(e.atoms, ctx, s, i + 1)) bad.insert(v);
    }
  }
  return bad;
}

struct SafeExtendResult {
  Nat chosen = 0;
  PartialBijection extended;
  std::set<Nat> bad;  // the excluded values that were avoided
};

/// Extends g at a new domain point so that the extension stays inside the
/// structure's family and no protected word gains an itinerary collision
/// that was not already present.
inline SafeExtendResult safe_extend_right(const FlexibleStructure& s, LazyPermutation h,
                                          const PartialBijection& g, Nat a,
                                          const std::vector<LazyPermutation>& rest,
                                          const WordContext& wc) {
  if (g.dom_contains(a))
    throw std::invalid_argument("safe_extend_right: point already in domain");
  SafeExtendResult res;
  res.bad = right_bad_set(h, g, a, rest, wc);
  Nat excluded = h.unapply_total(a);
  CandidateStream stream = s.right_candidates(g, a);
  for (;;) {
    Nat b = stream.next();
    if (b == excluded || res.bad.count(b)) continue;
    res.chosen = b;
    res.extended = g.extend(a, b);
    return res;
  }
}

/// Mirror of safe_extend_right for a new range point.
inline SafeExtendResult safe_extend_left(const FlexibleStructure& s, LazyPermutation h,
                                         const PartialBijection& g, Nat b,
                                         const std::vector<LazyPermutation>& rest,
                                         const WordContext& wc) {
  if (g.ran_contains(b))
    throw std::invalid_argument("safe_extend_left: point already in range");
  SafeExtendResult res;
  res.bad = left_bad_set(h, g, b, rest, wc);
  Nat excluded = h.apply_total(b);
  CandidateStream stream = s.left_candidates(g, b);
  for (;;) {
    Nat a = stream.next();
    if (a == excluded || res.bad.count(a)) continue;
    res.chosen = a;
    res.extended = g.extend(a, b);
    return res;
  }
}

/// Builds one family member over its seed: at stage s the point s is put
/// into the domain and then the range by safe extension, protecting the
/// distinctness guards x0 xk^-1 and the first s+1 canonically enumerated
/// words over the member and the previously built ones.
class MemberStrategy final : public LazyPermutation::Strategy {
 public:
  MemberStrategy(FlexibleStructure structure, std::vector<LazyPermutation> previous)
      : structure_(std::move(structure)),
        rest_(std::move(previous)),
        h_(identity_permutation()),
        words_(rest_.size()) {
    for (Nat k = 1; k <= rest_.size(); ++k)
      schedule_.add(Word::generator(0) * Word::generator(k, -1));
  }

  void ensure_stage(LazyPermutation::State& st, Nat s) override {
    while (canon_added_ <= s) {
      schedule_.add(words_.at(canon_added_));
      ++canon_added_;
    }
    if (!st.memo.dom_contains(s)) {
      SafeExtendResult r = safe_extend_right(structure_, h_, st.memo, s, rest_, schedule_);
      st.record(s, r.chosen);
    }
    if (!st.memo.ran_contains(s)) {
      SafeExtendResult r = safe_extend_left(structure_, h_, st.memo, s, rest_, schedule_);
      st.record(r.chosen, s);
    }
  }

  std::span<const LazyPermutation> build_context() const override { return rest_; }

  std::optional<CertPlan> certificate_plan(LazyPermutation& self, const Word& w) override {
    auto idx = words_.index_of(w);
    if (!idx) return std::nullopt;
    std::size_t p = *idx;
    self.advance(p);  // the word is protected from stage p onward
    return CertPlan{p, self.fragment_before_stage(p)};
  }

 private:
  FlexibleStructure structure_;
  std::vector<LazyPermutation> rest_;
  LazyPermutation h_;
  WordEnumerator words_;
  WordContext schedule_;
  std::size_t canon_added_ = 0;
};

/// Grows a family of pairwise independent permutations, one member per seed.
/// Member n extends its seed and is built against members 0..n-1.
class FamilyBuilder {
 public:
  explicit FamilyBuilder(FlexibleStructure structure = FlexibleStructure(StructureDescriptor{}))
      : structure_(std::move(structure)) {}

  LazyPermutation& add_member(const PartialBijection& seed) {
    if (!structure_.contains(seed))
      throw std::invalid_argument("FamilyBuilder: seed not in the structure's family");
    auto strat = std::make_unique<MemberStrategy>(structure_, members_);
    members_.emplace_back(std::move(strat), static_cast<int>(members_.size()), seed);
    seeds_.push_back(seed);
    return members_.back();
  }

  LazyPermutation& add_member_from_next_seed() {
    return add_member(seed_enum_.at(seed_cursor_++));
  }

  void realize_all(Nat horizon) {
    for (auto& m : members_) m.advance(horizon);
  }

  const std::vector<LazyPermutation>& members() const { return members_; }
  std::vector<LazyPermutation>& members() { return members_; }
  const std::vector<PartialBijection>& seeds() const { return seeds_; }
  const FlexibleStructure& structure() const { return structure_; }

 private:
  FlexibleStructure structure_;
  SeedEnumerator seed_enum_;
  std::size_t seed_cursor_ = 0;
  std::vector<LazyPermutation> members_;
  std::vector<PartialBijection> seeds_;
};

/// Family of `count` members over the canonical seed enumeration, realized
/// to `horizon`.
inline FamilyBuilder build_dense_family(std::size_t count, Nat horizon) {
  FamilyBuilder fb;
  for (std::size_t i = 0; i < count; ++i) fb.add_member_from_next_seed();
  fb.realize_all(horizon);
  return fb;
}

// ---------------------------------------------------------------------------
// Fixed-point audits.
// ---------------------------------------------------------------------------

struct FixedPointCert {
  Nat point = 0;
  std::size_t i0 = 0, j0 = 0;  // collision slots in the stage fragment
  std::size_t stage = 0;       // stage whose fragment already collides
};

struct StrongIndependenceReport {
  Word word;
  Nat window = 0;
  std::vector<FixedPointCert> certificates;  // one per fixed point, ascending
  Nat bound = 0;                // windowed itinerary-collision bound
  std::size_t stage = 0;        // protection stage of the audited word
  std::size_t fragment_size = 0;

  std::vector<Nat> fixed_points() const {
    std::vector<Nat> out;
    for (const auto& c : certificates) out.push_back(c.point);
    return out;
  }
  bool within_bound() const { return certificates.size() <= bound; }
};

/// Finds every fixed point of W(family[0], family[1], ...) in the window and
/// traces each one to an itinerary collision already present in the stage
/// fragment of the member built last. A fixed point without such a
/// certificate is an error, never ignored.
inline StrongIndependenceReport audit_fixed_points(std::vector<LazyPermutation>& family,
                                                   const Word& w, Nat window) {
  if (w.trivial())
    throw std::invalid_argument("audit_fixed_points: word is trivial");
  std::vector<Nat> used = w.used_generators();
  for (Nat v : used)
    if (v >= family.size())
      throw std::invalid_argument("audit_fixed_points: word variable without family member");

  // the carrier is the used member built last; its construction log holds
  // the certificates against everything it was built on top of
  Nat carrier_var = used.front();
  for (Nat v : used)
    if (family[v].epoch() > family[carrier_var].epoch()) carrier_var = v;
  for (Nat v : used)
    if (v != carrier_var && family[v].epoch() == family[carrier_var].epoch())
      throw std::logic_error("audit_fixed_points: no unique certificate carrier");
  LazyPermutation carrier = family[carrier_var];

  std::span<const LazyPermutation> ctxspan = carrier.build_context();
  std::map<Nat, Nat> varmap;
  varmap[carrier_var] = 0;
  for (Nat v : used) {
    if (v == carrier_var) continue;
    bool found = false;
    for (std::size_t r = 0; r < ctxspan.size(); ++r) {
      if (ctxspan[r].same_object(family[v])) {
        varmap[v] = r + 1;
        found = true;
        break;
      }
    }
    if (!found)
      throw std::logic_error("audit_fixed_points: member outside the carrier's build context");
  }
  Word wn = w.relabeled(varmap);

  auto plan = carrier.certificate_plan(wn);
  if (!plan)
    throw std::logic_error("audit_fixed_points: word is not protected by the carrier");

  AtomSequence atoms = atom_sequence(wn);
  std::vector<LazyPermutation> rest(ctxspan.begin(), ctxspan.end());
  AtomMapContext total{X0Map::total(carrier), rest};
  AtomMapContext frag{X0Map::finite(plan->fragment), rest};

  StrongIndependenceReport rep;
  rep.word = w;
  rep.window = window;
  rep.stage = plan->stage;
  rep.fragment_size = plan->fragment.size();

  std::set<Nat> touched;  // slot values of the fixed-point itineraries
  std::size_t top = atoms.atoms.size();
  for (Nat a = 0; a <= window; ++a) {
    Itinerary t = itinerary_from(atoms, total, 0, a);
    if (*t.slots[top] != a) continue;
    for (const auto& s : t.slots) touched.insert(*s);
    bool certified = false;
    for (std::size_t i0 = 0; i0 <= top && !certified; ++i0) {
      Nat v = *t.slots[i0];
      Itinerary tc = itinerary_from(atoms, frag, i0, v);
      for (std::size_t j0 = i0 + 1; j0 <= top; ++j0) {
        if (tc.slots[j0] && *tc.slots[j0] == v) {
          rep.certificates.push_back(FixedPointCert{a, i0, j0, plan->stage});
          certified = true;
          break;
        }
      }
    }
    if (!certified)
      throw std::logic_error("audit_fixed_points: fixed point " + std::to_string(a) +
                             " of " + w.str() + " has no stage certificate");
  }

  // windowed form of the collision-count bound: x0 sites can only collide
  // inside the stage fragment, block sites only at fixed points of the block
  std::size_t x0_atoms = 0;
  for (const Atom& at : atoms.atoms)
    if (at.is_x0()) ++x0_atoms;
  Nat bound = static_cast<Nat>(x0_atoms) * static_cast<Nat>(plan->fragment.size());
  std::set<Nat> audited_range = touched;
  for (Nat x = 0; x <= window; ++x) audited_range.insert(x);
  for (const Atom& at : atoms.atoms) {
    if (at.is_x0()) continue;
    for (Nat x : audited_range) {
      auto v = atom_apply(at, total, x, true);
      if (v && *v == x) ++bound;
    }
  }
  rep.bound = bound;
  return rep;
}

// ---------------------------------------------------------------------------
// Family files.
// ---------------------------------------------------------------------------

inline void write_family(std::ostream& os, const FamilyBuilder& fb, Nat horizon) {
  os << "symo-family v1\n";
  os << "count " << fb.members().size() << "\n";
  os << "horizon " << horizon << "\n";
  for (std::size_t i = 0; i < fb.members().size(); ++i) {
    os << "member " << i << "\n";
    os << "seed " << fb.seeds()[i].str() << "\n";
    os << "memo " << fb.members()[i].memo().str() << "\n";
  }
  os << "end\n";
}

/// Rebuilds the family from its seeds and checks the rebuild against the
/// stored memo fragments; a mismatch means the file does not describe a run
/// of this construction.
inline FamilyBuilder read_family(std::istream& is) {
  std::string line;
  auto next_line = [&]() -> std::string {
    if (!std::getline(is, line)) throw std::runtime_error("family file: truncated");
    return line;
  };
  if (next_line() != "symo-family v1")
    throw std::runtime_error("family file: bad header");
  auto expect_field = [&](const std::string& key) -> std::string {
    std::string l = next_line();
    if (l.rfind(key, 0) != 0) throw std::runtime_error("family file: expected " + key);
    std::string rest = l.substr(key.size());
    if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
    return rest;
  };
  std::size_t count = std::stoull(expect_field("count"));
  Nat horizon = std::stoull(expect_field("horizon"));
  std::vector<PartialBijection> seeds(count), memos(count);
  for (std::size_t i = 0; i < count; ++i) {
    expect_field("member");
    seeds[i] = PartialBijection::parse(expect_field("seed"));
    memos[i] = PartialBijection::parse(expect_field("memo"));
  }
  FamilyBuilder fb;
  for (const auto& s : seeds) fb.add_member(s);
  fb.realize_all(horizon);
  for (std::size_t i = 0; i < count; ++i) {
    if (!(fb.members()[i].memo() == memos[i]))
      throw std::runtime_error("family file: stored fragments do not match the rebuild");
  }
  return fb;
}

}  // namespace symo

#endif  // SYMO_INDEPENDENCE_HPP
