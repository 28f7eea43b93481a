#ifndef SYMO_ITINERARY_HPP
#define SYMO_ITINERARY_HPP

#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "symo/pmap.hpp"
#include "symo/words.hpp"

namespace symo {

/// Trajectory of a point through a word's atoms. Slot i sits between atoms
/// i-1 and i; there are lprime+1 slots. An empty entry is the sentinel
/// marking where movement stopped being defined; the naturals always occupy
/// a contiguous block of slots.
struct Itinerary {
  std::vector<std::optional<Nat>> slots;  // index 0 = t_0

  std::size_t top() const { return slots.size() - 1; }
};

/// The unique itinerary whose slot `slot` holds `value`: slots above are
/// filled by forward atom application until undefined, slots below by
/// backward application, with the sentinel absorbing past the first failure.
inline Itinerary itinerary_from(const AtomSequence& atoms, AtomMapContext& ctx,
                                std::size_t slot, Nat value) {
  std::size_t n = atoms.atoms.size();
  if (slot > n) throw std::invalid_argument("itinerary_from: slot out of range");
  Itinerary t;
  t.slots.assign(n + 1, std::nullopt);
  t.slots[slot] = value;
  for (std::size_t i = slot; i < n; ++i) {
    if (!t.slots[i]) break;
    t.slots[i + 1] = atom_apply(atoms.atoms[i], ctx, *t.slots[i], true);
  }
  for (std::size_t i = slot; i > 0; --i) {
    if (!t.slots[i]) break;
    t.slots[i - 1] = atom_apply(atoms.atoms[i - 1], ctx, *t.slots[i], false);
  }
  return t;
}

inline std::set<Nat> set_of(const Itinerary& t) {
  std::set<Nat> out;
  for (const auto& s : t.slots)
    if (s) out.insert(*s);
  return out;
}

/// Least pair (i, j) with i < j and equal natural entries, if any.
inline std::optional<std::pair<std::size_t, std::size_t>> find_collision(
    const Itinerary& t) {
  for (std::size_t i = 0; i + 1 < t.slots.size(); ++i) {
    if (!t.slots[i]) continue;
    for (std::size_t j = i + 1; j < t.slots.size(); ++j) {
      if (t.slots[j] && *t.slots[j] == *t.slots[i]) return std::make_pair(i, j);
    }
  }
  return std::nullopt;
}

/// Value at `to_slot` of the itinerary holding `x` at `from_slot`, when that
/// value is a natural. Reads one coordinate without computing the full tuple.
inline std::optional<Nat> path_value(const AtomSequence& atoms, AtomMapContext& ctx,
                                     std::size_t from_slot, std::size_t to_slot,
                                     Nat x) {
  std::size_t n = atoms.atoms.size();
  if (from_slot > n || to_slot > n)
    throw std::invalid_argument("path_value: slot out of range");
  std::optional<Nat> v = x;
  if (from_slot <= to_slot) {
    for (std::size_t i = from_slot; i < to_slot && v; ++i)
      v = atom_apply(atoms.atoms[i], ctx, *v, true);
  } else {
    for (std::size_t i = from_slot; i > to_slot && v; --i)
      v = atom_apply(atoms.atoms[i - 1], ctx, *v, false);
  }
  return v;
}

}  // namespace symo

#endif  // SYMO_ITINERARY_HPP
