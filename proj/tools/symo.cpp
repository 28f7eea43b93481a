// Command-line front end: word decompositions, itinerary traces, family
// construction, fixed-point audits, generic isomorphism runs and checks.
//
// Exit codes: 0 success, 1 usage or parse error, 2 verification failure.

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "symo/generic.hpp"
#include "symo/independence.hpp"
#include "symo/itinerary.hpp"
#include "symo/pmap.hpp"
#include "symo/structures.hpp"
#include "symo/words.hpp"

using namespace symo;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitVerify = 2;

std::string atom_text(const Atom& a) {
  switch (a.kind) {
    case Atom::Kind::X0Pos: return "x0";
    case Atom::Kind::X0Neg: return "x0^-1";
    case Atom::Kind::UBlock: return "U(" + a.block.str() + ")";
  }
  return "?";
}

// Maps file: one `f0: <pairs>` line (partial bijection) and optional
// `fk: <cycles>` lines (finite-support permutations) for k = 1, 2, ...
struct MapsFile {
  PartialBijection f0;
  std::vector<LazyPermutation> rest;
};

MapsFile read_maps_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open maps file: " + path);
  MapsFile maps;
  std::vector<std::pair<Nat, std::string>> entries;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto colon = line.find(':');
    if (colon == std::string::npos || line[0] != 'f')
      throw std::runtime_error("maps file: expected `f<k>: ...` lines");
    Nat k = std::stoull(line.substr(1, colon - 1));
    entries.emplace_back(k, line.substr(colon + 1));
  }
  for (auto& [k, text] : entries) {
    if (k == 0) {
      maps.f0 = PartialBijection::parse(text);
    } else {
      if (maps.rest.size() < k) maps.rest.resize(k);
      maps.rest[k - 1] = permutation_from(FiniteSupportPerm::parse(text));
    }
  }
  for (auto& lp : maps.rest)
    if (!lp.valid()) lp = identity_permutation();
  return maps;
}

int cmd_decompose(const std::string& word_text) {
  Word w = Word::parse(word_text);
  if (!w.uses(0)) {
    std::cerr << "error: word does not use x0\n";
    return kExitUsage;
  }
  DaggerDecomposition d = dagger_decompose(w);
  AtomSequence atoms = atom_sequence(w);
  std::cout << "word: " << w.str() << "\n";
  std::cout << "exponents:";
  for (long long k : d.exponents) std::cout << ' ' << k;
  std::cout << "\n";
  for (std::size_t i = 0; i < d.u_blocks.size(); ++i)
    std::cout << "U" << (i + 1) << ": " << d.u_blocks[i].str() << "\n";
  std::cout << "U0: " << (d.u0 ? d.u0->str() : "-") << "\n";
  std::cout << "Utop: " << (d.utop ? d.utop->str() : "-") << "\n";
  std::cout << "J: " << d.j << "\n";
  std::cout << "L': " << d.lprime << "\n";
  std::cout << "atoms:";
  for (const Atom& a : atoms.atoms) std::cout << ' ' << atom_text(a);
  std::cout << "\n";
  return kExitOk;
}

int cmd_itinerary(const std::string& word_text, const std::string& maps_path,
                  std::size_t slot, Nat value) {
  Word w = Word::parse(word_text);
  if (!w.uses(0)) {
    std::cerr << "error: word does not use x0\n";
    return kExitUsage;
  }
  MapsFile maps = read_maps_file(maps_path);
  AtomSequence atoms = atom_sequence(w);
  AtomMapContext ctx{X0Map::finite(maps.f0), maps.rest};
  Itinerary t = itinerary_from(atoms, ctx, slot, value);
  for (std::size_t i = t.slots.size(); i > 0; --i) {
    std::cout << "t[" << (i - 1) << "] = ";
    if (t.slots[i - 1])
      std::cout << *t.slots[i - 1];
    else
      std::cout << "c";
    std::cout << "\n";
  }
  if (auto col = find_collision(t))
    std::cout << "collision: (" << col->first << ", " << col->second << ")\n";
  else
    std::cout << "collision: none\n";
  return kExitOk;
}

int cmd_build_family(std::size_t count, Nat horizon, const std::string& out) {
  FamilyBuilder fb = build_dense_family(count, horizon);
  std::ofstream os(out, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open output file: " + out);
  write_family(os, fb, horizon);
  std::cout << "wrote " << count << " members realized to " << horizon << " -> " << out
            << "\n";
  return kExitOk;
}

int cmd_fixpoints(const std::string& family_path, const std::string& word_text,
                  Nat window, bool as_json) {
  std::ifstream is(family_path);
  if (!is) throw std::runtime_error("cannot open family file: " + family_path);
  FamilyBuilder fb = read_family(is);
  Word w = Word::parse(word_text);
  StrongIndependenceReport rep = audit_fixed_points(fb.members(), w, window);
  if (as_json) {
    json j;
    j["word"] = rep.word.str();
    j["window"] = rep.window;
    j["stage"] = rep.stage;
    j["fragment_size"] = rep.fragment_size;
    j["bound"] = rep.bound;
    j["count"] = rep.certificates.size();
    j["fixed_points"] = json::array();
    for (const auto& c : rep.certificates) {
      j["fixed_points"].push_back(
          {{"point", c.point}, {"i0", c.i0}, {"j0", c.j0}, {"stage", c.stage}});
    }
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "word: " << rep.word.str() << "\n";
    std::cout << "window: " << rep.window << "\n";
    std::cout << "stage: " << rep.stage << "\n";
    std::cout << "fragment_size: " << rep.fragment_size << "\n";
    std::cout << "bound: " << rep.bound << "\n";
    std::cout << "count: " << rep.certificates.size() << "\n";
    for (const auto& c : rep.certificates)
      std::cout << "fixed " << c.point << " cert (" << c.i0 << ", " << c.j0
                << ") stage " << c.stage << "\n";
  }
  return kExitOk;
}

// h between two built-ins of the same kind: the target scramble composed
// with the inverse of the source scramble
LazyPermutation transport_map(const StructureDescriptor& from,
                              const StructureDescriptor& to) {
  if (from.kind != to.kind)
    throw std::invalid_argument("structures have different kinds");
  FiniteSupportPerm a = from.scramble, b = to.scramble;
  return LazyPermutation(std::make_unique<FormulaStrategy>(
      [a, b](Nat n) { return b.apply(a.unapply(n)); },
      [a, b](Nat n) { return a.apply(b.unapply(n)); }));
}

int cmd_build_iso(const std::string& from_text, const std::string& to_text,
                  const std::string& family_path, Nat horizon, const std::string& out) {
  StructureDescriptor from_d = StructureDescriptor::parse(from_text);
  StructureDescriptor to_d = StructureDescriptor::parse(to_text);
  std::vector<LazyPermutation> gens;
  if (!family_path.empty()) {
    std::ifstream is(family_path);
    if (!is) throw std::runtime_error("cannot open family file: " + family_path);
    FamilyBuilder fb = read_family(is);
    gens = fb.members();
  }
  LazyPermutation h = transport_map(from_d, to_d);
  FilterRun run = run_generic(build_structure(from_d), build_structure(to_d), h, gens,
                              horizon);
  LazyPermutation f = run.iso();
  f.advance(horizon);
  std::ofstream os(out, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open output file: " + out);
  write_iso_file(os, from_d, to_d, horizon, f.memo());
  std::cout << "wrote isomorphism on window " << horizon << " -> " << out << "\n";
  return kExitOk;
}

int cmd_verify_iso(const std::string& from_text, const std::string& to_text,
                   const std::string& map_path, Nat window) {
  StructureDescriptor from_d = StructureDescriptor::parse(from_text);
  StructureDescriptor to_d = StructureDescriptor::parse(to_text);
  std::ifstream is(map_path);
  if (!is) throw std::runtime_error("cannot open map file: " + map_path);
  PartialBijection map;
  try {
    IsoFile file = read_iso_file(is);
    map = file.map;
  } catch (const std::exception& e) {
    std::cout << "FAIL " << e.what() << "\n";
    return kExitVerify;
  }
  WindowIsoReport rep =
      verify_window_iso(build_structure(from_d), build_structure(to_d), map, window);
  std::cout << rep.format() << "\n";
  return rep.ok ? kExitOk : kExitVerify;
}

int cmd_properness(Nat window) {
  auto [w, rep] = properness_witness(window);
  (void)w;
  std::cout << "window: " << rep.window << "\n";
  std::cout << "fixed_count: " << rep.fixed_points.size() << "\n";
  std::cout << "fixed:";
  for (Nat p : rep.fixed_points) std::cout << ' ' << p;
  std::cout << "\n";
  return kExitOk;
}

int cmd_rel(const std::string& desc_text, const std::vector<Nat>& points) {
  FlexibleStructure s = build_structure(StructureDescriptor::parse(desc_text));
  switch (s.kind()) {
    case StructureKind::QOrder:
    case StructureKind::Rado:
      if (points.size() != 2) throw std::invalid_argument("expected two points");
      std::cout << (s.rel_eval(0, points) ? "true" : "false") << "\n";
      return kExitOk;
    case StructureKind::Sections:
      for (Nat p : points) std::cout << "class(" << p << ") = " << s.label(p) << "\n";
      return kExitOk;
    case StructureKind::Trivial:
      throw std::invalid_argument("trivial structure has no relations");
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"itinerary calculus and generic isomorphisms over the symmetric "
               "group of the naturals"};
  app.require_subcommand(1);

  std::string word_text, maps_path, family_path, out_path, map_path;
  std::string from_text, to_text, desc_text;
  std::size_t slot = 0, count = 1;
  Nat value = 0, horizon = 100, window = 100;
  bool as_json = false;
  std::vector<Nat> points;

  auto* dec = app.add_subcommand("decompose", "block decomposition and atoms of a word");
  dec->add_option("word", word_text, "word, e.g. 'x1 x0^2 x1^-1 x0'")->required();

  auto* itin = app.add_subcommand("itinerary", "trace one itinerary through a word");
  itin->add_option("--word", word_text)->required();
  itin->add_option("--maps", maps_path, "file with f0: pairs and fk: cycles")->required();
  itin->add_option("--slot", slot, "seed slot")->required();
  itin->add_option("--value", value, "seed value")->required();

  auto* bf = app.add_subcommand("build-family", "build a dense independent family");
  bf->add_option("--count", count)->required();
  bf->add_option("--horizon", horizon)->required();
  bf->add_option("--out", out_path)->required();

  auto* fp = app.add_subcommand("fixpoints", "audit fixed points of a word over a family");
  fp->add_option("--family", family_path)->required();
  fp->add_option("--word", word_text)->required();
  fp->add_option("--window", window)->required();
  fp->add_flag("--json", as_json, "machine-readable report");

  auto* bi = app.add_subcommand("build-iso", "run the generic engine between structures");
  bi->add_option("--from", from_text)->required();
  bi->add_option("--to", to_text)->required();
  bi->add_option("--family", family_path, "family file to stay independent from");
  bi->add_option("--horizon", horizon)->required();
  bi->add_option("--out", out_path)->required();

  auto* vi = app.add_subcommand("verify-iso", "check a map file on a window");
  vi->add_option("--from", from_text)->required();
  vi->add_option("--to", to_text)->required();
  vi->add_option("--map", map_path)->required();
  vi->add_option("--window", window)->required();

  auto* pr = app.add_subcommand("properness", "the half-fixing witness permutation");
  pr->add_option("--window", window)->required();

  auto* rel = app.add_subcommand("rel", "evaluate a structure relation");
  rel->add_option("descriptor", desc_text, "e.g. qorder or kind=sections;scramble=(0 1)")
      ->required();
  rel->add_option("points", points, "tuple to test");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (dec->parsed()) return cmd_decompose(word_text);
    if (itin->parsed()) return cmd_itinerary(word_text, maps_path, slot, value);
    if (bf->parsed()) return cmd_build_family(count, horizon, out_path);
    if (fp->parsed()) return cmd_fixpoints(family_path, word_text, window, as_json);
    if (bi->parsed()) return cmd_build_iso(from_text, to_text, family_path, horizon, out_path);
    if (vi->parsed()) return cmd_verify_iso(from_text, to_text, map_path, window);
    if (pr->parsed()) return cmd_properness(window);
    if (rel->parsed()) return cmd_rel(desc_text, points);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
