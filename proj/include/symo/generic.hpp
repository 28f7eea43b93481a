#ifndef SYMO_GENERIC_HPP
#define SYMO_GENERIC_HPP

#include <algorithm>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "symo/independence.hpp"
#include "symo/itinerary.hpp"
#include "symo/pmap.hpp"
#include "symo/structures.hpp"
#include "symo/words.hpp"

namespace symo {

/// Poset condition: a finite map from the source structure's family plus an
/// ordered, duplicate-free set of generator handles (indices into the run's
/// generator list).
struct Condition {
  PartialBijection g;
  std::vector<std::size_t> handles;

  bool has_handle(std::size_t h) const {
    return std::find(handles.begin(), handles.end(), h) != handles.end();
  }
  friend bool operator==(const Condition&, const Condition&) = default;
};

/// Conditions with the same finite map land in the same centered class.
inline PartialBijection class_key(const Condition& p) { return p.g; }

/// Upper bound of finitely many conditions sharing a class key: the common
/// map with the ordered union of the handle sets.
inline Condition centered_upper_bound(std::span<const Condition> conds) {
  if (conds.empty()) throw std::invalid_argument("centered_upper_bound: empty input");
  Condition out{conds.front().g, {}};
  for (const Condition& c : conds) {
    if (!(c.g == out.g))
      throw std::invalid_argument("centered_upper_bound: conditions have different maps");
    for (std::size_t h : c.handles)
      if (!out.has_handle(h)) out.handles.push_back(h);
  }
  return out;
}

/// A demand a condition can be extended to meet: a point entering the
/// domain or the range of the map, or a generator joining the handles.
struct Requirement {
  enum class Kind { DomCovers, RanCovers, Includes };
  Kind kind = Kind::DomCovers;
  Nat value = 0;

  static Requirement dom_covers(Nat a) { return {Kind::DomCovers, a}; }
  static Requirement ran_covers(Nat a) { return {Kind::RanCovers, a}; }
  static Requirement includes(std::size_t handle) { return {Kind::Includes, handle}; }
};

/// Shared inputs of one run: the structure pair, a window-checked
/// isomorphism h between them, and the generator family the new map must
/// stay independent from.
struct GenericContext {
  FlexibleStructure s1, s2;
  LazyPermutation h;
  std::vector<LazyPermutation> gens;

  std::vector<LazyPermutation> handle_maps(const std::vector<std::size_t>& handles) const {
    std::vector<LazyPermutation> out;
    for (std::size_t h : handles) {
      if (h >= gens.size()) throw std::invalid_argument("handle out of range");
      out.push_back(gens[h]);
    }
    return out;
  }
};

/// Words a condition with n handles protects: every word using x0 over
/// x0..xn of length at most n.
inline WordContext protected_words(std::size_t n) {
  return WordContext::from_words(enumerate_words(n, n));
}

/// Order check, bounded form: map and handle containment exactly, and the
/// collision-tracing clause restricted to itineraries seeded in the window.
/// Sound but not complete for the unbounded clause.
inline bool leq_check_bounded(const Condition& p, const Condition& q, GenericContext& ctx,
                              Nat window) {
  std::vector<std::pair<Nat, Nat>> qp = q.g.pairs(), pp = p.g.pairs();
  if (!std::includes(qp.begin(), qp.end(), pp.begin(), pp.end())) return false;
  for (std::size_t h : p.handles)
    if (!q.has_handle(h)) return false;

  std::size_t n = p.handles.size();
  WordContext wc = protected_words(n);
  std::vector<LazyPermutation> rest = ctx.handle_maps(p.handles);
  for (const WordContextEntry& e : wc.entries()) {
    AtomMapContext big{X0Map::composed(ctx.h, q.g), rest};
    AtomMapContext small{X0Map::composed(ctx.h, p.g), rest};
    std::size_t top = e.atoms.lprime();
    std::set<std::pair<std::size_t, Nat>> seen;  // canonical itinerary keys
    for (std::size_t slot = 0; slot <= top; ++slot) {
      for (Nat a = 0; a <= window; ++a) {
        Itinerary t = itinerary_from(e.atoms, big, slot, a);
        std::size_t first = 0;
        while (first <= top && !t.slots[first]) ++first;
        if (first > top) continue;
        if (!seen.insert({first, *t.slots[first]}).second) continue;
        auto col = find_collision(t);
        if (!col) continue;
        bool traced = false;
        for (std::size_t i0 = 0; i0 <= top && !traced; ++i0) {
          if (!t.slots[i0]) continue;
          Nat v = *t.slots[i0];
          Itinerary tc = itinerary_from(e.atoms, small, i0, v);
          for (std::size_t j0 = i0 + 1; j0 <= top; ++j0) {
            if (tc.slots[j0] && *tc.slots[j0] == v) {
              traced = true;
              break;
            }
          }
        }
        if (!traced) return false;
      }
    }
  }
  return true;
}

/// Least extension of p meeting r. Map extensions go through safe extension
/// over the words the condition protects, so the poset order holds by
/// construction.
inline Condition extend_to_meet(const Condition& p, const Requirement& r,
                                GenericContext& ctx) {
  switch (r.kind) {
    case Requirement::Kind::DomCovers: {
      if (p.g.dom_contains(r.value)) return p;
      WordContext wc = protected_words(p.handles.size());
      SafeExtendResult res = safe_extend_right(ctx.s1, ctx.h, p.g, r.value,
                                               ctx.handle_maps(p.handles), wc);
      return Condition{res.extended, p.handles};
    }
    case Requirement::Kind::RanCovers: {
      if (p.g.ran_contains(r.value)) return p;
      WordContext wc = protected_words(p.handles.size());
      SafeExtendResult res = safe_extend_left(ctx.s1, ctx.h, p.g, r.value,
                                              ctx.handle_maps(p.handles), wc);
      return Condition{res.extended, p.handles};
    }
    case Requirement::Kind::Includes: {
      std::size_t h = static_cast<std::size_t>(r.value);
      if (h >= ctx.gens.size())
        throw std::invalid_argument("extend_to_meet: handle out of range");
      if (p.has_handle(h)) return p;
      Condition out = p;
      out.handles.push_back(h);
      return out;
    }
  }
  throw std::logic_error("extend_to_meet: bad requirement");
}

namespace detail {

struct RunState {
  GenericContext ctx;
  std::vector<Condition> chain;          // chain.front() = (empty, {})
  std::vector<Requirement> schedule;     // requirements met, in order
  std::vector<std::pair<Nat, Nat>> g_log;  // map pairs in insertion order
  Nat next_step = 0;

  void meet(const Requirement& r) {
    Condition next = extend_to_meet(chain.back(), r, ctx);
    if (next.g.size() > chain.back().g.size()) {
      // a safe extension adds exactly one pair
      for (auto [a, b] : next.g.forward())
        if (!chain.back().g.dom_contains(a)) g_log.emplace_back(a, b);
    }
    schedule.push_back(r);
    chain.push_back(std::move(next));
  }

  // one round of the dense-set schedule: domain point, range point, next
  // generator handle
  void run_one_step() {
    Nat s = next_step++;
    meet(Requirement::dom_covers(s));
    meet(Requirement::ran_covers(s));
    if (s < ctx.gens.size()) meet(Requirement::includes(s));
  }
};

/// Presents h composed with the chain's growing map as a total permutation;
/// realizing a point extends the chain to cover it.
class IsoStrategy final : public LazyPermutation::Strategy {
 public:
  explicit IsoStrategy(std::shared_ptr<RunState> st) : st_(std::move(st)) {}

  void ensure_stage(LazyPermutation::State& lp, Nat s) override {
    st_->meet(Requirement::dom_covers(s));
    st_->meet(Requirement::ran_covers(st_->ctx.h.unapply_total(s)));
    sync(lp);
  }

  std::span<const LazyPermutation> build_context() const override { return st_->ctx.gens; }

  std::optional<CertPlan> certificate_plan(LazyPermutation& self, const Word& w) override {
    (void)self;
    std::size_t needed = std::max<std::size_t>(w.length(), w.max_generator());
    if (needed > st_->ctx.gens.size() || !w.uses(0)) return std::nullopt;
    while (st_->chain.back().handles.size() < needed) st_->run_one_step();
    for (std::size_t t = 0; t < st_->chain.size(); ++t) {
      if (st_->chain[t].handles.size() < needed) continue;
      PartialBijection frag;
      for (auto [a, ga] : st_->chain[t].g.forward())
        frag.insert(a, st_->ctx.h.apply_total(ga));
      return CertPlan{t, frag};
    }
    return std::nullopt;
  }

 private:
  void sync(LazyPermutation::State& lp) {
    while (cursor_ < st_->g_log.size()) {
      auto [a, ga] = st_->g_log[cursor_++];
      lp.record(a, st_->ctx.h.apply_total(ga));
    }
  }

  std::shared_ptr<RunState> st_;
  std::size_t cursor_ = 0;
};

}  // namespace detail

struct PropernessReport {
  Nat window = 0;
  std::vector<Nat> fixed_points;
};

/// The chain and outputs of one generic run.
class FilterRun {
 public:
  static FilterRun start(GenericContext ctx) {
    FilterRun run;
    run.st_ = std::make_shared<detail::RunState>();
    run.st_->ctx = std::move(ctx);
    run.st_->chain.push_back(Condition{});
    int epoch = 0;
    for (const auto& g : run.st_->ctx.gens) epoch = std::max(epoch, g.epoch() + 1);
    run.iso_ = LazyPermutation(std::make_unique<detail::IsoStrategy>(run.st_), epoch);
    return run;
  }

  void run_to(Nat horizon) {
    while (st_->next_step <= horizon) st_->run_one_step();
  }

  /// The isomorphism h o g as a lazily realized permutation; querying it
  /// past the run horizon extends the chain on demand.
  LazyPermutation iso() const { return iso_; }

  const std::vector<Condition>& chain() const { return st_->chain; }
  const std::vector<Requirement>& schedule() const { return st_->schedule; }
  const Condition& current() const { return st_->chain.back(); }
  GenericContext& context() { return st_->ctx; }

 private:
  std::shared_ptr<detail::RunState> st_;
  LazyPermutation iso_;
};

/// Runs the dense-set schedule to the horizon after checking that h is an
/// isomorphism of the pair on the window. The result's map g lies in the
/// source family, covers the window both ways, carries every scheduled
/// handle, and h o g transports relations on the window.
inline FilterRun run_generic(FlexibleStructure s1, FlexibleStructure s2, LazyPermutation h,
                             std::vector<LazyPermutation> gens, Nat horizon) {
  WindowIsoReport hcheck = verify_window_iso(s1, s2, h, horizon);
  if (!hcheck.ok)
    throw std::invalid_argument("run_generic: h is not a window isomorphism: " +
                                hcheck.format());
  FilterRun run = FilterRun::start(GenericContext{std::move(s1), std::move(s2),
                                                  std::move(h), std::move(gens)});
  run.run_to(horizon);
  return run;
}

/// Total permutation shifting the even-indexed copy of the integers by one
/// step and fixing the rest; under the integer coding z >= 0 -> 2z,
/// z < 0 -> -2z-1 it moves index z to z+2 on evens. Roughly half of every
/// window is fixed, which no member of a strongly independent family can
/// match.
inline std::pair<LazyPermutation, PropernessReport> properness_witness(Nat window) {
  auto fwd = [](Nat n) -> Nat {
    if (n % 4 == 0) return n + 4;
    if (n % 4 == 3) return n == 3 ? 0 : n - 4;
    return n;
  };
  auto bwd = [](Nat n) -> Nat {
    if (n % 4 == 0) return n == 0 ? 3 : n - 4;
    if (n % 4 == 3) return n + 4;
    return n;
  };
  LazyPermutation w(std::make_unique<FormulaStrategy>(fwd, bwd));
  PropernessReport rep;
  rep.window = window;
  for (Nat n = 0; n <= window; ++n)
    if (fwd(n) == n) rep.fixed_points.push_back(n);
  return {std::move(w), std::move(rep)};
}

// ---------------------------------------------------------------------------
// Iso files.
// ---------------------------------------------------------------------------

struct IsoFile {
  StructureDescriptor from, to;
  Nat horizon = 0;
  PartialBijection map;
};

inline void write_iso_file(std::ostream& os, const StructureDescriptor& from,
                           const StructureDescriptor& to, Nat horizon,
                           const PartialBijection& map) {
  os << "symo-iso v1\n";
  os << "from " << from.str() << "\n";
  os << "to " << to.str() << "\n";
  os << "horizon " << horizon << "\n";
  os << "map " << map.str() << "\n";
  os << "end\n";
}

inline IsoFile read_iso_file(std::istream& is) {
  std::string line;
  auto next_line = [&]() -> std::string {
    if (!std::getline(is, line)) throw std::runtime_error("iso file: truncated");
    return line;
  };
  if (next_line() != "symo-iso v1") throw std::runtime_error("iso file: bad header");
  auto expect_field = [&](const std::string& key) -> std::string {
    std::string l = next_line();
    if (l.rfind(key, 0) != 0) throw std::runtime_error("iso file: expected " + key);
    std::string rest = l.substr(key.size());
    if (!rest.empty() && rest.front() == ' ') rest.erase(0, 1);
    return rest;
  };
  IsoFile f;
  f.from = StructureDescriptor::parse(expect_field("from"));
  f.to = StructureDescriptor::parse(expect_field("to"));
  f.horizon = std::stoull(expect_field("horizon"));
  f.map = PartialBijection::parse(expect_field("map"));
  return f;
}

}  // namespace symo

#endif  // SYMO_GENERIC_HPP
