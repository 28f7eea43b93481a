#ifndef SYMO_STRUCTURES_HPP
#define SYMO_STRUCTURES_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "symo/pmap.hpp"

namespace symo {

// ---------------------------------------------------------------------------
// Canonical base structures on the naturals.
// ---------------------------------------------------------------------------

/// Signed rational with positive denominator; values come from the
/// Calkin-Wilf coding below, so numerators and denominators stay small.
struct QRat {
  long long num = 0;
  long long den = 1;
};

inline bool qrat_less(QRat a, QRat b) {
  return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
}

/// k-th positive rational in the Calkin-Wilf order, k >= 0: consecutive
/// values of Stern's diatomic sequence, computed by one pass over the bits
/// of k+1.
inline QRat calkin_wilf(Nat k) {
  Nat n = k + 1;
  // (a, b) = (s(m), s(m+1)) built by appending the bits of n to m
  unsigned long long a = 0, b = 1;
  int bits = 0;
  for (Nat t = n; t > 0; t >>= 1) ++bits;
  for (int i = bits - 1; i >= 0; --i) {
    if ((n >> i) & 1)
      a = a + b;  // m -> 2m+1
    else
      b = a + b;  // m -> 2m
  }
  return QRat{static_cast<long long>(a), static_cast<long long>(b)};
}

/// Order embedding of the naturals into the rationals with dense image and
/// no endpoints: 0 -> 0, odd 2k+1 -> +cw(k), even 2k+2 -> -cw(k).
inline QRat canonical_rational(Nat n) {
  if (n == 0) return QRat{0, 1};
  if (n % 2 == 1) return calkin_wilf((n - 1) / 2);
  QRat q = calkin_wilf((n - 2) / 2);
  return QRat{-q.num, q.den};
}

inline bool q_less(Nat a, Nat b) {
  return qrat_less(canonical_rational(a), canonical_rational(b));
}

/// Class label of n under the inverse Cantor pairing (first coordinate);
/// partitions the naturals into infinitely many infinite classes.
inline Nat section_class(Nat n) {
  Nat w = static_cast<Nat>((std::sqrt(8.0L * static_cast<long double>(n) + 1.0L) - 1.0L) / 2.0L);
  while (w * (w + 1) / 2 > n) --w;
  while ((w + 1) * (w + 2) / 2 <= n) ++w;
  Nat y = n - w * (w + 1) / 2;
  return w - y;
}

/// Adjacency of the canonical computable random graph: for m < n, m and n
/// are joined when bit m of n is set.
inline bool rado_edge(Nat a, Nat b) {
  if (a == b) return false;
  Nat lo = std::min(a, b), hi = std::max(a, b);
  if (lo >= 64) return false;
  return (hi >> lo) & 1ULL;
}

// ---------------------------------------------------------------------------
// Descriptors and structures.
// ---------------------------------------------------------------------------

enum class StructureKind { Trivial, QOrder, Sections, Rado };

inline std::string kind_name(StructureKind k) {
  switch (k) {
    case StructureKind::Trivial: return "trivial";
    case StructureKind::QOrder: return "qorder";
    case StructureKind::Sections: return "sections";
    case StructureKind::Rado: return "rado";
  }
  return "?";
}

/// A built-in structure transported along a finite-support permutation.
/// Text form: `kind=qorder;scramble=(0 3)(1 5)` (scramble part optional).
struct StructureDescriptor {
  StructureKind kind = StructureKind::Trivial;
  FiniteSupportPerm scramble;

  static StructureDescriptor parse(std::string_view text) {
    StructureDescriptor d;
    bool have_kind = false;
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t end = text.find(';', pos);
      if (end == std::string_view::npos) end = text.size();
      std::string_view field = text.substr(pos, end - pos);
      pos = end + 1;
      if (field.empty()) continue;
      std::size_t eq = field.find('=');
      std::string_view key = eq == std::string_view::npos ? field : field.substr(0, eq);
      std::string_view val = eq == std::string_view::npos ? std::string_view{} : field.substr(eq + 1);
      if (key == "kind" || eq == std::string_view::npos) {
        std::string_view k = eq == std::string_view::npos ? key : val;
        if (k == "trivial") d.kind = StructureKind::Trivial;
        else if (k == "qorder") d.kind = StructureKind::QOrder;
        else if (k == "sections") d.kind = StructureKind::Sections;
        else if (k == "rado") d.kind = StructureKind::Rado;
        else throw std::invalid_argument("descriptor: unknown kind");
        have_kind = true;
      } else if (key == "scramble") {
        d.scramble = FiniteSupportPerm::parse(val);
      } else {
        throw std::invalid_argument("descriptor: unknown field");
      }
    }
    if (!have_kind) throw std::invalid_argument("descriptor: kind missing");
    return d;
  }

  std::string str() const {
    return "kind=" + kind_name(kind) + ";scramble=" + scramble.str();
  }
};

struct RelationSig {
  Nat id = 0;
  int arity = 2;
};

class CandidateStream;

/// A structure on the naturals presented through its finite partial
/// automorphisms: membership testing, one-point extension streams, and
/// relation evaluation. For every map the family accepts, the empty map,
/// all restrictions and the inverse are accepted too, and every point has
/// infinitely many legal extensions.
class FlexibleStructure {
 public:
  FlexibleStructure() = default;
  explicit FlexibleStructure(StructureDescriptor d) : desc_(std::move(d)) {}

  const StructureDescriptor& descriptor() const { return desc_; }
  StructureKind kind() const { return desc_.kind; }

  /// Membership of a finite partial map in the automorphism family.
  bool contains(const PartialBijection& pb) const {
    for (auto [a, fa] : pb.forward())
      if (!pair_ok_against(pb, a, fa)) return false;
    return true;
  }

  /// Legality of adding (a, b) on top of an already accepted map. Does not
  /// re-check injectivity; callers extend through PartialBijection.
  bool extension_ok(const PartialBijection& pb, Nat a, Nat b) const {
    switch (desc_.kind) {
      case StructureKind::Trivial:
        return true;
      case StructureKind::QOrder:
      case StructureKind::Rado:
        for (auto [x, fx] : pb.forward())
          if (rel2(a, x) != rel2(b, fx) || rel2(x, a) != rel2(fx, b)) return false;
        return true;
      case StructureKind::Sections:
        return label(a) == label(b);
    }
    return false;
  }

  bool rel_eval(Nat rel_id, std::span<const Nat> tuple) const {
    switch (desc_.kind) {
      case StructureKind::Trivial:
        throw std::invalid_argument("rel_eval: structure has no relations");
      case StructureKind::QOrder:
        if (rel_id != 0 || tuple.size() != 2)
          throw std::invalid_argument("rel_eval: qorder has one binary relation");
        return rel2(tuple[0], tuple[1]);
      case StructureKind::Rado:
        if (rel_id != 0 || tuple.size() != 2)
          throw std::invalid_argument("rel_eval: rado has one binary relation");
        return rel2(tuple[0], tuple[1]);
      case StructureKind::Sections:
        if (tuple.size() != 1)
          throw std::invalid_argument("rel_eval: sections relations are unary");
        return label(tuple[0]) == rel_id;
    }
    return false;
  }

  std::string rel_name(Nat rel_id) const {
    switch (desc_.kind) {
      case StructureKind::QOrder: return "<";
      case StructureKind::Rado: return "E";
      case StructureKind::Sections: return "R" + std::to_string(rel_id);
      case StructureKind::Trivial: break;
    }
    return "?";
  }

  /// Relations that can hold on tuples from the given points.
  std::vector<RelationSig> relations_for(std::span<const Nat> points) const {
    switch (desc_.kind) {
      case StructureKind::Trivial:
        return {};
      case StructureKind::QOrder:
      case StructureKind::Rado:
        return {RelationSig{0, 2}};
      case StructureKind::Sections: {
        std::set<Nat> labels;
        for (Nat p : points) labels.insert(label(p));
        std::vector<RelationSig> out;
        for (Nat l : labels) out.push_back(RelationSig{l, 1});
        return out;
      }
    }
    return {};
  }

  CandidateStream right_candidates(const PartialBijection& pb, Nat a) const;
  CandidateStream left_candidates(const PartialBijection& pb, Nat b) const;

  /// Section label of a point (sections structures only).
  Nat label(Nat p) const { return section_class(desc_.scramble.unapply(p)); }

 private:
  bool rel2(Nat x, Nat y) const {
    Nat bx = desc_.scramble.unapply(x), by = desc_.scramble.unapply(y);
    return desc_.kind == StructureKind::QOrder ? q_less(bx, by) : rado_edge(bx, by);
  }

  bool pair_ok_against(const PartialBijection& pb, Nat a, Nat fa) const {
    switch (desc_.kind) {
      case StructureKind::Trivial:
        return true;
      case StructureKind::QOrder:
      case StructureKind::Rado:
        for (auto [x, fx] : pb.forward()) {
          if (x == a) continue;
          if (rel2(a, x) != rel2(fa, fx) || rel2(x, a) != rel2(fx, fa)) return false;
        }
        return true;
      case StructureKind::Sections:
        return label(a) == label(fa);
    }
    return false;
  }

  StructureDescriptor desc_;
};

/// Strictly increasing stream of the legal one-point extensions of a map at
/// a fixed point. Never exhausts for the built-in structures; a hard cap
/// guards against contract violations.
class CandidateStream {
 public:
  CandidateStream(FlexibleStructure s, PartialBijection base, Nat point, bool right)
      : s_(std::move(s)), base_(std::move(base)), point_(point), right_(right) {}

  Nat next() {
    for (; cursor_ < kScanCap; ++cursor_) {
      Nat c = cursor_;
      if (right_) {
        if (base_.ran_contains(c)) continue;
        if (!s_.extension_ok(base_, point_, c)) continue;
      } else {
        if (base_.dom_contains(c)) continue;
        if (!s_.extension_ok(base_, c, point_)) continue;
      }
      ++cursor_;
      return c;
    }
    throw std::logic_error("CandidateStream: scan cap exceeded");
  }

 private:
  static constexpr Nat kScanCap = 100'000'000;
  FlexibleStructure s_;
  PartialBijection base_;
  Nat point_;
  bool right_;
  Nat cursor_ = 0;
};

inline CandidateStream FlexibleStructure::right_candidates(const PartialBijection& pb,
                                                           Nat a) const {
  if (!contains(pb))
    throw std::invalid_argument("right_candidates: map not in the family");
  if (pb.dom_contains(a))
    throw std::invalid_argument("right_candidates: point already in domain");
  return CandidateStream(*this, pb, a, true);
}

inline CandidateStream FlexibleStructure::left_candidates(const PartialBijection& pb,
                                                          Nat b) const {
  if (!contains(pb))
    throw std::invalid_argument("left_candidates: map not in the family");
  if (pb.ran_contains(b))
    throw std::invalid_argument("left_candidates: point already in range");
  return CandidateStream(*this, pb, b, false);
}

inline FlexibleStructure build_structure(const StructureDescriptor& d) {
  return FlexibleStructure(d);
}

// ---------------------------------------------------------------------------
// Window isomorphism checks.
// ---------------------------------------------------------------------------

struct WindowIsoReport {
  bool ok = true;
  std::string relation;     // name in the target structure
  std::vector<Nat> tuple;   // source-side tuple of the first counterexample
  std::string message;

  std::string format() const {
    if (ok) return "OK";
    std::string out = "FAIL rel" + relation + " at (";
    for (std::size_t i = 0; i < tuple.size(); ++i) {
      if (i) out += ',';
      out += std::to_string(tuple[i]);
    }
    out += ")";
    if (!message.empty()) out += " " + message;
    return out;
  }
};

/// Checks that f transports every relation both ways on all tuples from
/// {0..window}. f must be defined on the whole window.
inline WindowIsoReport verify_window_iso(const FlexibleStructure& s1,
                                         const FlexibleStructure& s2,
                                         const PartialBijection& f, Nat window) {
  WindowIsoReport rep;
  std::vector<Nat> src, img;
  for (Nat a = 0; a <= window; ++a) {
    auto v = f.apply(a);
    if (!v) {
      rep.ok = false;
      rep.relation = "?";
      rep.tuple = {a};
      rep.message = "map undefined inside the window";
      return rep;
    }
    src.push_back(a);
    img.push_back(*v);
  }
  std::vector<RelationSig> rels = s1.relations_for(src);
  for (const RelationSig& r : s2.relations_for(img)) {
    bool seen = false;
    for (const RelationSig& q : rels)
      if (q.id == r.id && q.arity == r.arity) seen = true;
    if (!seen) rels.push_back(r);
  }
  for (const RelationSig& r : rels) {
    if (r.arity == 1) {
      for (Nat a = 0; a <= window; ++a) {
        Nat t1[1] = {a}, t2[1] = {img[a]};
        if (s1.rel_eval(r.id, t1) != s2.rel_eval(r.id, t2)) {
          rep.ok = false;
          rep.relation = s2.rel_name(r.id);
          rep.tuple = {a};
          return rep;
        }
      }
    } else {
      for (Nat a = 0; a <= window; ++a) {
        for (Nat b = 0; b <= window; ++b) {
          Nat t1[2] = {a, b}, t2[2] = {img[a], img[b]};
          if (s1.rel_eval(r.id, t1) != s2.rel_eval(r.id, t2)) {
            rep.ok = false;
            rep.relation = s2.rel_name(r.id);
            rep.tuple = {a, b};
            return rep;
          }
        }
      }
    }
  }
  return rep;
}

inline WindowIsoReport verify_window_iso(const FlexibleStructure& s1,
                                         const FlexibleStructure& s2,
                                         LazyPermutation f, Nat window) {
  f.advance(window);
  return verify_window_iso(s1, s2, f.memo(), window);
}

}  // namespace symo

#endif  // SYMO_STRUCTURES_HPP
