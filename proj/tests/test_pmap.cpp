#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>
#include <set>

#include "symo/pmap.hpp"

using namespace symo;

namespace {

PartialBijection PB(const char* text) { return PartialBijection::parse(text); }

}  // namespace

TEST_CASE("apply and unapply") {
  PartialBijection pb = PB("0->1");
  CHECK(pb.apply(0) == 1);
  CHECK(pb.apply(2) == std::nullopt);
  CHECK(PartialBijection{}.apply(0) == std::nullopt);

  CHECK(pb.unapply(1) == 0);
  CHECK(pb.unapply(0) == std::nullopt);
  CHECK(PB("3->4, 4->3").unapply(3) == 4);

  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    PartialBijection p;
    std::uniform_int_distribution<Nat> d(0, 30);
    for (int i = 0; i < 8; ++i) {
      Nat a = d(rng), b = d(rng);
      if (!p.dom_contains(a) && !p.ran_contains(b)) p.insert(a, b);
    }
    for (auto [a, b] : p.pairs()) {
      CHECK(p.apply(a) == b);
      CHECK(p.unapply(b) == a);
    }
  }
}

TEST_CASE("extend") {
  CHECK(PartialBijection{}.extend(3, 4) == PB("3->4"));
  CHECK(PB("3->4").extend(4, 0) == PB("3->4, 4->0"));
  CHECK_THROWS_AS(PB("3->4").extend(3, 5), std::invalid_argument);
  CHECK_THROWS_AS(PB("3->4").extend(5, 4), std::invalid_argument);
}

TEST_CASE("pair syntax round-trip") {
  CHECK(PB("3->4, 4->0").str() == "3->4, 4->0");
  CHECK(PB("").empty());
  CHECK(PB(" 1 -> 2 ,3->4").pairs() ==
        std::vector<std::pair<Nat, Nat>>{{1, 2}, {3, 4}});
  CHECK_THROWS_AS(PB("1->"), std::invalid_argument);
  CHECK_THROWS_AS(PB("1->2 3->4"), std::invalid_argument);
  CHECK(PartialBijection::parse(PB("9->1, 2->7, 0->0").str()) == PB("0->0, 2->7, 9->1"));
}

TEST_CASE("inverse") {
  PartialBijection p = PB("0->5, 5->2");
  CHECK(p.inverse() == PB("5->0, 2->5"));
  CHECK(p.inverse().inverse() == p);
}

TEST_CASE("lazy permutation realizes stages monotonically") {
  auto succ_cycle = [](Nat m) {
    // long cycle 0 -> 1 -> ... -> m -> 0; acts as the successor on small points
    return LazyPermutation(std::make_unique<FormulaStrategy>(
        [m](Nat n) { return n == m ? 0 : n + 1; },
        [m](Nat n) { return n == 0 ? m : n - 1; }));
  };
  LazyPermutation f = succ_cycle(1000000);
  f.advance(0);
  CHECK(f.memo().dom_contains(0));
  CHECK(f.memo().ran_contains(0));
  auto before = f.memo();
  f.advance(0);
  CHECK(f.memo() == before);  // idempotent at a fixed stage

  f.advance(5);
  for (Nat s = 0; s <= 5; ++s) {
    CHECK(f.memo().dom_contains(s));
    CHECK(f.memo().ran_contains(s));
  }
  // monotone growth
  for (auto [a, b] : before.pairs()) CHECK(f.memo().apply(a) == b);

  CHECK(f.apply_total(7) == 8);
  CHECK(f.unapply_total(0) == 1000000);

  // injective on the window after advancing
  LazyPermutation g = succ_cycle(50);
  g.advance(20);
  std::set<Nat> images;
  for (Nat a = 0; a <= 20; ++a) {
    auto v = g.memo().apply(a);
    REQUIRE(v.has_value());
    images.insert(*v);
  }
  CHECK(images.size() == 21);
}

TEST_CASE("handles share state") {
  LazyPermutation f = identity_permutation();
  LazyPermutation g = f;
  g.advance(3);
  CHECK(f.realized() == 3);
  CHECK(f.same_object(g));
  CHECK_FALSE(f.same_object(identity_permutation()));
}

TEST_CASE("finite support permutations") {
  auto p = FiniteSupportPerm::parse("(0 3)(1 5)");
  CHECK(p.apply(0) == 3);
  CHECK(p.apply(3) == 0);
  CHECK(p.apply(1) == 5);
  CHECK(p.apply(7) == 7);
  CHECK(p.unapply(3) == 0);
  CHECK(p.str() == "(0 3)(1 5)");
  CHECK(FiniteSupportPerm::parse("").is_identity());
  CHECK(FiniteSupportPerm::parse("(0 1 2)").apply(2) == 0);
  CHECK_THROWS_AS(FiniteSupportPerm::parse("(0 1)(1 2)"), std::invalid_argument);
  CHECK_THROWS_AS(FiniteSupportPerm::parse("(0)"), std::invalid_argument);

  LazyPermutation lp = permutation_from(p);
  CHECK(lp.apply_total(1) == 5);
  CHECK(lp.unapply_total(5) == 1);
}

TEST_CASE("atom evaluation") {
  auto succ = LazyPermutation(std::make_unique<FormulaStrategy>(
      [](Nat n) { return n == 1000000 ? 0 : n + 1; },
      [](Nat n) { return n == 0 ? 1000000 : n - 1; }));
  AtomMapContext ctx{X0Map::finite(PB("0->1")), {succ}};

  Atom x0pos{Atom::Kind::X0Pos, Word{}};
  Atom x0neg{Atom::Kind::X0Neg, Word{}};
  Atom ublock{Atom::Kind::UBlock, Word::parse("x1")};

  CHECK(atom_apply(x0pos, ctx, 0, true) == 1);
  CHECK(atom_apply(x0neg, ctx, 0, true) == std::nullopt);  // 0 not in the range
  CHECK(atom_apply(ublock, ctx, 7, true) == 8);
  CHECK(atom_apply(ublock, ctx, 8, false) == 7);
  CHECK(atom_apply(x0pos, ctx, 1, false) == 0);

  Atom bad{Atom::Kind::UBlock, Word::parse("x0")};
  CHECK_THROWS_AS(atom_apply(bad, ctx, 0, true), std::invalid_argument);
  Atom unbound{Atom::Kind::UBlock, Word::parse("x2")};
  CHECK_THROWS_AS(atom_apply(unbound, ctx, 0, true), std::invalid_argument);

  // composed x0 map: h o g
  auto h = permutation_from(FiniteSupportPerm::parse("(1 9)"));
  AtomMapContext ctx2{X0Map::composed(h, PB("0->1")), {}};
  CHECK(atom_apply(x0pos, ctx2, 0, true) == 9);   // h(g(0)) = h(1) = 9
  CHECK(atom_apply(x0pos, ctx2, 9, false) == 0);  // preimage through h then g
  CHECK(atom_apply(x0neg, ctx2, 9, true) == 0);
}

TEST_CASE("canonical seed enumeration") {
  SeedEnumerator seeds;
  CHECK(seeds.at(0) == PartialBijection{});
  CHECK(seeds.at(1) == PB("0->0"));
  CHECK(seeds.at(2) == PB("0->1"));
  CHECK(seeds.at(3) == PB("1->0"));
  CHECK(seeds.at(4) == PB("1->1"));
  CHECK(seeds.at(5) == PB("0->0, 1->1"));
  CHECK(seeds.at(6) == PB("0->1, 1->0"));
  CHECK(seeds.at(7) == PB("0->2"));

  // duplicate-free and complete over the points {0,1}: every partial
  // bijection on {0,1} appears exactly once among the early seeds
  std::vector<PartialBijection> small;
  for (std::size_t i = 0; i < 40; ++i) small.push_back(seeds.at(i));
  for (std::size_t i = 0; i < small.size(); ++i)
    for (std::size_t j = i + 1; j < small.size(); ++j)
      CHECK_FALSE(small[i] == small[j]);
  std::vector<PartialBijection> expect = {
      PartialBijection{}, PB("0->0"), PB("0->1"), PB("1->0"), PB("1->1"),
      PB("0->0, 1->1"), PB("0->1, 1->0")};
  for (const auto& e : expect)
    CHECK(std::count(small.begin(), small.end(), e) == 1);
}
