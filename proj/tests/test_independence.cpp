#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <sstream>

#include "symo/independence.hpp"

using namespace symo;

namespace {

PartialBijection PB(const char* text) { return PartialBijection::parse(text); }
Word W(const char* text) { return Word::parse(text); }

FlexibleStructure trivial() {
  return build_structure(StructureDescriptor::parse("trivial"));
}

LazyPermutation random_fsperm(std::mt19937_64& rng, Nat top) {
  std::vector<Nat> pts(top + 1);
  for (Nat i = 0; i <= top; ++i) pts[i] = i;
  std::shuffle(pts.begin(), pts.end(), rng);
  std::map<Nat, Nat> fwd, bwd;
  for (Nat i = 0; i <= top; ++i) {
    fwd[i] = pts[i];
    bwd[pts[i]] = i;
  }
  return LazyPermutation(std::make_unique<FormulaStrategy>(
      [fwd](Nat n) {
        auto it = fwd.find(n);
        return it == fwd.end() ? n : it->second;
      },
      [bwd](Nat n) {
        auto it = bwd.find(n);
        return it == bwd.end() ? n : it->second;
      }));
}

PartialBijection random_pb(std::mt19937_64& rng, Nat top, int tries) {
  PartialBijection pb;
  std::uniform_int_distribution<Nat> d(0, top);
  for (int i = 0; i < tries; ++i) {
    Nat a = d(rng), b = d(rng);
    if (!pb.dom_contains(a) && !pb.ran_contains(b)) pb.insert(a, b);
  }
  return pb;
}

std::mt19937_64& rng_for_audit() {
  static std::mt19937_64 rng(77);
  return rng;
}

Word random_x0_word(std::mt19937_64& rng, Nat n, Nat max_len) {
  std::uniform_int_distribution<Nat> len_d(1, max_len);
  std::uniform_int_distribution<Nat> gen_d(0, n);
  std::uniform_int_distribution<int> sign_d(0, 1);
  for (;;) {
    std::vector<Letter> ls;
    Nat len = len_d(rng);
    for (Nat i = 0; i < len; ++i)
      ls.push_back(Letter{gen_d(rng), sign_d(rng) ? +1 : -1});
    Word w = Word::from_letters(std::move(ls));
    if (w.uses(0)) return w;
  }
}

// direct evaluation of the two-itinerary disjointness conditions, scanning
// every candidate in the window
std::set<Nat> brute_right_bad(LazyPermutation h, const PartialBijection& g, Nat a,
                              std::vector<LazyPermutation> rest, const WordContext& wc,
                              Nat window) {
  std::set<Nat> bad;
  AtomMapContext ctx{X0Map::composed(h, g), std::move(rest)};
  for (Nat b = 0; b <= window; ++b) {
    Nat hb = h.apply_total(b);
    bool is_bad = false;
    for (const WordContextEntry& e : wc.entries()) {
      for (std::size_t i : e.x_plus) {
        auto s1 = set_of(itinerary_from(e.atoms, ctx, i + 1, hb));
        auto s2 = set_of(itinerary_from(e.atoms, ctx, i, a));
        for (Nat v : s1)
          if (s2.count(v)) is_bad = true;
      }
      for (std::size_t i : e.x_minus) {
        auto s1 = set_of(itinerary_from(e.atoms, ctx, i + 1, a));
        auto s2 = set_of(itinerary_from(e.atoms, ctx, i, hb));
        for (Nat v : s1)
          if (s2.count(v)) is_bad = true;
      }
      if (is_bad) break;
    }
    if (is_bad) bad.insert(b);
  }
  return bad;
}

std::set<Nat> brute_left_bad(LazyPermutation h, const PartialBijection& g, Nat b,
                             std::vector<LazyPermutation> rest, const WordContext& wc,
                             Nat window) {
  std::set<Nat> bad;
  AtomMapContext ctx{X0Map::composed(h, g), std::move(rest)};
  Nat hb = h.apply_total(b);
  for (Nat a = 0; a <= window; ++a) {
    bool is_bad = false;
    for (const WordContextEntry& e : wc.entries()) {
      for (std::size_t i : e.x_plus) {
        auto s1 = set_of(itinerary_from(e.atoms, ctx, i + 1, hb));
        auto s2 = set_of(itinerary_from(e.atoms, ctx, i, a));
        for (Nat v : s1)
          if (s2.count(v)) is_bad = true;
      }
      for (std::size_t i : e.x_minus) {
        auto s1 = set_of(itinerary_from(e.atoms, ctx, i + 1, a));
        auto s2 = set_of(itinerary_from(e.atoms, ctx, i, hb));
        for (Nat v : s1)
          if (s2.count(v)) is_bad = true;
      }
      if (is_bad) break;
    }
    if (is_bad) bad.insert(a);
  }
  return bad;
}

std::set<Nat> clip(const std::set<Nat>& s, Nat window) {
  std::set<Nat> out;
  for (Nat v : s)
    if (v <= window) out.insert(v);
  return out;
}

// every collision in an itinerary over the extended map, seeded in the
// window, must trace to a collision over the original map
bool collisions_trace(const WordContext& wc, LazyPermutation h,
                      const PartialBijection& g_old, const PartialBijection& g_new,
                      std::vector<LazyPermutation> rest, Nat window) {
  AtomMapContext big{X0Map::composed(h, g_new), rest};
  AtomMapContext small{X0Map::composed(h, g_old), rest};
  for (const WordContextEntry& e : wc.entries()) {
    std::size_t top = e.atoms.lprime();
    for (std::size_t slot = 0; slot <= top; ++slot) {
      for (Nat v = 0; v <= window; ++v) {
        Itinerary t = itinerary_from(e.atoms, big, slot, v);
        if (!find_collision(t)) continue;
        bool traced = false;
        for (std::size_t i0 = 0; i0 <= top && !traced; ++i0) {
          if (!t.slots[i0]) continue;
          Itinerary tc = itinerary_from(e.atoms, small, i0, *t.slots[i0]);
          for (std::size_t j0 = i0 + 1; j0 <= top; ++j0)
            if (tc.slots[j0] && *tc.slots[j0] == *t.slots[i0]) {
              traced = true;
              break;
            }
        }
        if (!traced) return false;
      }
    }
  }
  return true;
}

}  // namespace

TEST_CASE("safe extension, worked examples") {
  SUBCASE("domain side avoids the orbit of the new point") {
    WordContext wc = WordContext::from_words({W("x0^2")});
    auto res = safe_extend_right(trivial(), identity_permutation(), PB("3->4"), 4, {}, wc);
    CHECK(res.bad == std::set<Nat>{3, 4});
    CHECK(res.chosen == 0);
    CHECK(res.extended == PB("3->4, 4->0"));
  }
  SUBCASE("no fixed point is created for x0") {
    WordContext wc = WordContext::from_words({W("x0")});
    for (Nat a : {0ULL, 5ULL, 17ULL}) {
      auto res = safe_extend_right(trivial(), identity_permutation(), PartialBijection{},
                                   a, {}, wc);
      CHECK(res.bad == std::set<Nat>{a});
      CHECK(res.chosen == (a == 0 ? 1 : 0));
      CHECK(res.chosen != a);
    }
  }
  SUBCASE("range side") {
    WordContext wc = WordContext::from_words({W("x0")});
    auto res = safe_extend_left(trivial(), identity_permutation(), PartialBijection{}, 0,
                                {}, wc);
    CHECK(res.chosen == 1);
    CHECK(res.extended == PB("1->0"));
  }
  SUBCASE("precondition violations") {
    WordContext wc = WordContext::from_words({W("x0")});
    CHECK_THROWS_AS(safe_extend_right(trivial(), identity_permutation(), PB("3->4"), 3,
                                      {}, wc),
                    std::invalid_argument);
    CHECK_THROWS_AS(safe_extend_left(trivial(), identity_permutation(), PB("3->4"), 4,
                                     {}, wc),
                    std::invalid_argument);
  }
}

TEST_CASE("bad sets match the brute-force scan") {
  std::mt19937_64 rng(31);
  const Nat window = 50;
  for (int trial = 0; trial < 60; ++trial) {
    std::uniform_int_distribution<int> nwords_d(1, 3);
    std::uniform_int_distribution<Nat> pt_d(0, 20);
    WordContext wc;
    int nwords = nwords_d(rng);
    for (int i = 0; i < nwords; ++i) wc.add(random_x0_word(rng, 3, 4));
    std::vector<LazyPermutation> rest;
    for (int i = 0; i < 3; ++i) rest.push_back(random_fsperm(rng, 9));
    LazyPermutation h = random_fsperm(rng, 9);
    PartialBijection g = random_pb(rng, 15, 5);

    Nat a = pt_d(rng);
    if (!g.dom_contains(a)) {
      auto fast = clip(right_bad_set(h, g, a, rest, wc), window);
      auto brute = brute_right_bad(h, g, a, rest, wc, window);
      CHECK(fast == brute);
    }
    Nat b = pt_d(rng);
    if (!g.ran_contains(b)) {
      auto fast = clip(left_bad_set(h, g, b, rest, wc), window);
      auto brute = brute_left_bad(h, g, b, rest, wc, window);
      CHECK(fast == brute);
    }
  }
}

TEST_CASE("extensions never create untraceable collisions") {
  std::mt19937_64 rng(37);
  const Nat window = 30;
  for (int trial = 0; trial < 25; ++trial) {
    WordContext wc;
    std::uniform_int_distribution<int> nwords_d(1, 2);
    int nwords = nwords_d(rng);
    for (int i = 0; i < nwords; ++i) wc.add(random_x0_word(rng, 2, 4));
    std::vector<LazyPermutation> rest{random_fsperm(rng, 9), random_fsperm(rng, 9)};
    LazyPermutation h = random_fsperm(rng, 9);
    PartialBijection g = random_pb(rng, 12, 4);
    std::uniform_int_distribution<Nat> pt_d(0, 15);

    Nat a = pt_d(rng);
    if (!g.dom_contains(a)) {
      auto res = safe_extend_right(trivial(), h, g, a, rest, wc);
      CHECK(collisions_trace(wc, h, g, res.extended, rest, window));
    }
    Nat b = pt_d(rng);
    if (!g.ran_contains(b)) {
      auto res = safe_extend_left(trivial(), h, g, b, rest, wc);
      CHECK(collisions_trace(wc, h, g, res.extended, rest, window));
    }
  }
}

TEST_CASE("left extension mirrors right extension on the inverse") {
  // swapping the map for its inverse flips the direction of every x0 step,
  // so the mirrored word context carries the x0 signs reversed
  auto flip_x0 = [](const Word& w) {
    std::vector<Letter> ls = w.letters();
    for (Letter& l : ls)
      if (l.gen == 0) l.sign = -l.sign;
    return Word::from_letters(std::move(ls));
  };
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    WordContext wc, wc_inv;
    int nwords = 1 + (trial % 2);
    for (int i = 0; i < nwords; ++i) {
      Word w = random_x0_word(rng, 2, 4);
      wc.add(w);
      wc_inv.add(flip_x0(w));
    }
    std::vector<LazyPermutation> rest{random_fsperm(rng, 7), random_fsperm(rng, 7)};
    LazyPermutation id = identity_permutation();
    PartialBijection g = random_pb(rng, 10, 4);
    std::uniform_int_distribution<Nat> pt_d(0, 12);
    Nat b = pt_d(rng);
    if (g.ran_contains(b)) continue;
    auto left = safe_extend_left(trivial(), id, g, b, rest, wc);
    auto right = safe_extend_right(trivial(), id, g.inverse(), b, rest, wc_inv);
    CHECK(left.chosen == right.chosen);
    CHECK(left.extended == right.extended.inverse());
  }
}

TEST_CASE("member construction") {
  SUBCASE("the empty seed stays fixed-point free") {
    FamilyBuilder fb;
    LazyPermutation m = fb.add_member(PartialBijection{});
    m.advance(20);
    for (Nat a = 0; a <= 20; ++a) CHECK(m.apply_total(a) != a);

    auto rep = audit_fixed_points(fb.members(), W("x0"), 20);
    CHECK(rep.certificates.empty());
    auto rep2 = audit_fixed_points(fb.members(), W("x0^2"), 20);
    CHECK(rep2.within_bound());
  }
  SUBCASE("a seeded fixed point survives and no other appears") {
    FamilyBuilder fb;
    fb.add_member(PB("0->0"));
    fb.realize_all(50);
    CHECK(fb.members()[0].apply_total(0) == 0);
    auto rep = audit_fixed_points(fb.members(), W("x0"), 50);
    CHECK(rep.fixed_points() == std::vector<Nat>{0});
    CHECK(rep.certificates[0].stage == 0);  // already present in the seed
    CHECK(rep.fragment_size == 1);
  }
  SUBCASE("members restrict to their seeds") {
    FamilyBuilder fb;
    for (const char* seed : {"", "0->0", "5->2, 2->5", "7->7"}) {
      PartialBijection q = PB(seed);
      LazyPermutation m = fb.add_member(q);
      m.advance(15);
      for (auto [a, b] : q.pairs()) CHECK(m.apply_total(a) == b);
    }
  }
  SUBCASE("stage fragments match an independent rebuild") {
    // the fragment before stage s equals the memo of a twin advanced to
    // stage s-1, as long as no later member drags the twin's memo forward
    FamilyBuilder fb1 = build_dense_family(2, 20);
    for (std::size_t s = 0; s <= 20; ++s) {
      FamilyBuilder solo;
      solo.add_member(fb1.seeds()[0]);
      if (s > 0) solo.realize_all(s - 1);
      CHECK(fb1.members()[0].fragment_before_stage(s) == solo.members()[0].memo());

      FamilyBuilder pair;
      pair.add_member(fb1.seeds()[0]);
      pair.add_member(fb1.seeds()[1]);
      if (s > 0) pair.members()[1].advance(s - 1);
      CHECK(fb1.members()[1].fragment_before_stage(s) == pair.members()[1].memo());
    }
  }
  SUBCASE("members cover every stage both ways") {
    FamilyBuilder fb = build_dense_family(2, 30);
    for (const auto& m : fb.members()) {
      for (Nat s = 0; s <= 30; ++s) {
        CHECK(m.memo().dom_contains(s));
        CHECK(m.memo().ran_contains(s));
      }
    }
  }
  SUBCASE("construction is deterministic") {
    auto build = [] {
      FamilyBuilder fb;
      fb.add_member(PartialBijection{});
      fb.add_member(PB("0->0"));
      fb.realize_all(40);
      return std::make_pair(fb.members()[0].memo(), fb.members()[1].memo());
    };
    auto r1 = build();
    auto r2 = build();
    CHECK(r1.first == r2.first);
    CHECK(r1.second == r2.second);
  }
}

TEST_CASE("dense families") {
  SUBCASE("seeds follow the canonical enumeration") {
    FamilyBuilder fb = build_dense_family(6, 15);
    SeedEnumerator seeds;
    for (std::size_t i = 0; i < 6; ++i) {
      CHECK(fb.seeds()[i] == seeds.at(i));
      for (auto [a, b] : fb.seeds()[i].pairs())
        CHECK(fb.members()[i].apply_total(a) == b);
    }
  }
  SUBCASE("pairwise words have certified bounded fixed points") {
    FamilyBuilder fb = build_dense_family(2, 60);
    auto rep = audit_fixed_points(fb.members(), W("x0 x1^-1"), 60);
    CHECK(rep.within_bound());
    auto rep2 = audit_fixed_points(fb.members(), W("x1 x0^-1 x1"), 60);
    CHECK(rep2.within_bound());
    auto rep3 = audit_fixed_points(fb.members(), W("x1^2"), 60);
    CHECK(rep3.within_bound());
  }
}

TEST_CASE("word contexts") {
  WordContext wc;
  CHECK_THROWS_AS(wc.add(W("x1")), std::invalid_argument);
  wc.add(W("x0 x1^-1"));
  wc.add(W("x0 x1^-1"));  // deduplicated
  CHECK(wc.entries().size() == 1);
  CHECK(wc.entries()[0].x_plus == std::vector<std::size_t>{1});
  CHECK_FALSE(wc.entries()[0].pure_power);
  wc.add(W("x0^-2"));
  CHECK(wc.entries()[1].pure_power);
  CHECK(wc.entries()[1].x_minus == std::vector<std::size_t>{0, 1});
}

TEST_CASE("audits") {
  SUBCASE("trivial words are rejected") {
    FamilyBuilder fb = build_dense_family(1, 10);
    CHECK_THROWS_AS(audit_fixed_points(fb.members(), W("x0 x0^-1"), 10),
                    std::invalid_argument);
  }
  SUBCASE("maps without construction logs cannot certify") {
    std::vector<LazyPermutation> plain{random_fsperm(rng_for_audit(), 9),
                                       random_fsperm(rng_for_audit(), 9)};
    CHECK_THROWS_AS(audit_fixed_points(plain, W("x0 x1"), 10), std::logic_error);
  }
  SUBCASE("a word over later members relabels onto the newest one") {
    FamilyBuilder fb = build_dense_family(3, 30);
    auto rep = audit_fixed_points(fb.members(), W("x1 x2^-1"), 30);
    CHECK(rep.within_bound());
    auto rep2 = audit_fixed_points(fb.members(), W("x2"), 30);
    CHECK(rep2.within_bound());
  }
  SUBCASE("missing member is an error") {
    FamilyBuilder fb = build_dense_family(1, 10);
    CHECK_THROWS_AS(audit_fixed_points(fb.members(), W("x0 x1"), 10),
                    std::invalid_argument);
  }
}

TEST_CASE("family files round-trip and verify") {
  FamilyBuilder fb = build_dense_family(2, 25);
  std::ostringstream os;
  write_family(os, fb, 25);
  std::string text = os.str();

  std::istringstream is(text);
  FamilyBuilder loaded = read_family(is);
  CHECK(loaded.members().size() == 2);
  for (std::size_t i = 0; i < 2; ++i)
    CHECK(loaded.members()[i].memo() == fb.members()[i].memo());

  // rewriting reproduces the bytes
  std::ostringstream os2;
  write_family(os2, loaded, 25);
  CHECK(os2.str() == text);

  // a well-formed but wrong memo is rejected
  std::string bad = text;
  auto pos = bad.rfind("memo ");
  auto eol = bad.find('\n', pos);
  bad.replace(pos, eol - pos, "memo 90->91");
  std::istringstream isb(bad);
  CHECK_THROWS_AS(read_family(isb), std::runtime_error);
}
