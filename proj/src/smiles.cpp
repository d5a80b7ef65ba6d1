#include "rrgat/smiles.hpp"

#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <unordered_set>

#include "rrgat/errors.hpp"

namespace rrgat {
namespace {

[[noreturn]] void fail(const std::string& msg, int pos) {
  throw parse_error(msg + " (at position " + std::to_string(pos) + ")");
}

bool is_organic_plain(char c) {
  return c == 'B' || c == 'C' || c == 'N' || c == 'O' || c == 'P' ||
         c == 'S' || c == 'F' || c == 'I';
}

bool is_aromatic_plain(char c) {
  return c == 'b' || c == 'c' || c == 'n' || c == 'o' || c == 'p' || c == 's';
}

// Symbols the parser recognizes inside brackets. Anything outside the core
// twelve maps to Element::kOther (the "special atom" feature slot).
const std::unordered_set<std::string>& known_symbols() {
  static const std::unordered_set<std::string> table = {
      "B",  "C",  "N",  "O",  "F",  "Si", "P",  "S",  "Cl", "Se", "Br", "I",
      "Li", "Na", "K",  "Rb", "Cs", "Be", "Mg", "Ca", "Sr", "Ba", "Al", "Ga",
      "Ge", "As", "Te", "Sn", "Sb", "Pb", "Bi", "Ti", "Zr", "V",  "Cr", "Mo",
      "W",  "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ag", "Au", "Cd", "Hg", "Pd",
      "Pt"};
  return table;
}

struct BracketParts {
  std::string symbol;
  bool aromatic = false;
  int hcount = 0;
  int charge = 0;
  bool chiral = false;
};

// lexeme includes the surrounding brackets.
BracketParts parse_bracket(const std::string& lexeme, int pos) {
  BracketParts out;
  std::size_t i = 1;                     // skip '['
  std::size_t end = lexeme.size() - 1;   // index of ']'
  auto bad = [&](const std::string& why) -> void {
    fail("malformed bracket atom " + lexeme + ": " + why, pos);
  };

  if (i < end && std::isdigit(static_cast<unsigned char>(lexeme[i])))
    bad("isotope specifications are not supported");
  if (i < end && lexeme[i] == '*') bad("wildcard atom is not supported");
  if (i >= end) bad("missing element symbol");

  if (std::isupper(static_cast<unsigned char>(lexeme[i]))) {
    out.symbol += lexeme[i++];
    if (i < end && std::islower(static_cast<unsigned char>(lexeme[i])) &&
        lexeme[i] != 'h')  // lone 'h' would be an H-count in disguise
      out.symbol += lexeme[i++];
    // Two-letter greed can eat a following hcount argument only via 'H',
    // which is uppercase, so no ambiguity here.
  } else if (std::islower(static_cast<unsigned char>(lexeme[i]))) {
    out.aromatic = true;
    if (i + 1 < end && (lexeme.compare(i, 2, "se") == 0 || lexeme.compare(i, 2, "si") == 0)) {
      out.symbol = static_cast<char>(std::toupper(lexeme[i]));
      out.symbol += lexeme[i + 1];
      i += 2;
    } else if (is_aromatic_plain(lexeme[i])) {
      out.symbol = static_cast<char>(std::toupper(lexeme[i]));
      ++i;
    } else {
      bad("unknown aromatic symbol");
    }
  } else {
    bad("missing element symbol");
  }

  if (out.symbol == "H") bad("explicit hydrogen atoms are not supported");
  if (known_symbols().count(out.symbol) == 0) bad("unknown element '" + out.symbol + "'");

  if (i < end && lexeme[i] == '@') {
    out.chiral = true;
    ++i;
    if (i < end && lexeme[i] == '@') ++i;
  }

  if (i < end && lexeme[i] == 'H') {
    ++i;
    if (i < end && std::isdigit(static_cast<unsigned char>(lexeme[i]))) {
      int h = 0;
      while (i < end && std::isdigit(static_cast<unsigned char>(lexeme[i])))
        h = h * 10 + (lexeme[i++] - '0');
      out.hcount = h;
    } else {
      out.hcount = 1;
    }
  }

  if (i < end && (lexeme[i] == '+' || lexeme[i] == '-')) {
    const char sign = lexeme[i];
    int magnitude = 1;
    ++i;
    if (i < end && std::isdigit(static_cast<unsigned char>(lexeme[i]))) {
      magnitude = 0;
      while (i < end && std::isdigit(static_cast<unsigned char>(lexeme[i])))
        magnitude = magnitude * 10 + (lexeme[i++] - '0');
    } else {
      while (i < end && lexeme[i] == sign) {
        ++magnitude;
        ++i;
      }
    }
    out.charge = sign == '+' ? magnitude : -magnitude;
  }

  if (i != end) bad("unexpected trailing content");
  return out;
}

struct BondSpec {
  BondOrder order = BondOrder::kSingle;
  BondStereo stereo = BondStereo::kNone;
};

std::optional<BondSpec> bond_from_char(char c) {
  switch (c) {
    case '-': return BondSpec{BondOrder::kSingle, BondStereo::kNone};
    case '=': return BondSpec{BondOrder::kDouble, BondStereo::kNone};
    case '#': return BondSpec{BondOrder::kTriple, BondStereo::kNone};
    case ':': return BondSpec{BondOrder::kAromatic, BondStereo::kNone};
    case '/': return BondSpec{BondOrder::kSingle, BondStereo::kUp};
    case '\\': return BondSpec{BondOrder::kSingle, BondStereo::kDown};
    default: return std::nullopt;
  }
}

}  // namespace

std::vector<Token> tokenize(std::string_view smiles) {
  if (smiles.empty()) throw parse_error("empty SMILES input");
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < smiles.size()) {
    const char c = smiles[i];
    const int pos = static_cast<int>(i);
    if (c == '[') {
      std::size_t j = smiles.find(']', i);
      if (j == std::string_view::npos) fail("unterminated bracket atom", pos);
      std::string lex(smiles.substr(i, j - i + 1));
      parse_bracket(lex, pos);  // validate now so errors carry the position
      out.push_back({TokenKind::kBracketAtom, std::move(lex), pos});
      i = j + 1;
    } else if (c == 'C' || c == 'B') {
      // two-letter organics take priority: Cl, Br
      if (i + 1 < smiles.size() && ((c == 'C' && smiles[i + 1] == 'l') ||
                                    (c == 'B' && smiles[i + 1] == 'r'))) {
        out.push_back({TokenKind::kAtom, std::string(smiles.substr(i, 2)), pos});
        i += 2;
      } else {
        out.push_back({TokenKind::kAtom, std::string(1, c), pos});
        ++i;
      }
    } else if (is_organic_plain(c) || is_aromatic_plain(c)) {
      out.push_back({TokenKind::kAtom, std::string(1, c), pos});
      ++i;
    } else if (bond_from_char(c)) {
      out.push_back({TokenKind::kBond, std::string(1, c), pos});
      ++i;
    } else if (c == '(') {
      out.push_back({TokenKind::kBranchOpen, "(", pos});
      ++i;
    } else if (c == ')') {
      out.push_back({TokenKind::kBranchClose, ")", pos});
      ++i;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      out.push_back({TokenKind::kRingBond, std::string(1, c), pos});
      ++i;
    } else if (c == '%') {
      if (i + 2 >= smiles.size() ||
          !std::isdigit(static_cast<unsigned char>(smiles[i + 1])) ||
          !std::isdigit(static_cast<unsigned char>(smiles[i + 2])))
        fail("'%' ring closure needs two digits", pos);
      out.push_back({TokenKind::kRingBond, std::string(smiles.substr(i, 3)), pos});
      i += 3;
    } else if (c == '.') {
      out.push_back({TokenKind::kDot, ".", pos});
      ++i;
    } else {
      fail(std::string("unknown character '") + c + "'", pos);
    }
  }
  return out;
}

MolGraph parse_smiles(std::string_view smiles) {
  const std::vector<Token> tokens = tokenize(smiles);

  MolGraph g;
  std::vector<int> branch_stack;
  int prev = -1;
  std::optional<BondSpec> pending;
  bool just_opened_branch = false;

  struct RingOpen {
    int atom;
    std::optional<BondSpec> bond;
    int pos;
  };
  std::map<int, RingOpen> open_rings;
  std::set<std::pair<int, int>> bond_pairs;

  auto add_bond = [&](int a, int b, std::optional<BondSpec> s1,
                      std::optional<BondSpec> s2, int pos) {
    if (a == b) fail("ring closure bonds an atom to itself", pos);
    auto key = std::minmax(a, b);
    if (!bond_pairs.insert({key.first, key.second}).second)
      fail("duplicate bond between the same atom pair", pos);
    BondSpec spec;
    if (s1 && s2) {
      if (s1->order != s2->order)
        fail("conflicting bond orders on ring closure", pos);
      spec = *s1;
    } else if (s1 || s2) {
      spec = s1 ? *s1 : *s2;
    } else {
      spec.order = (g.atoms[a].is_aromatic && g.atoms[b].is_aromatic)
                       ? BondOrder::kAromatic
                       : BondOrder::kSingle;
    }
    if (spec.order == BondOrder::kAromatic &&
        !(g.atoms[a].is_aromatic && g.atoms[b].is_aromatic))
      fail("aromatic bond between non-aromatic atoms", pos);
    g.bonds.push_back({a, b, spec.order, spec.stereo, false});
  };

  auto add_atom = [&](AtomNode atom, int pos) {
    atom.index = g.atom_count();
    g.atoms.push_back(std::move(atom));
    const int cur = g.atom_count() - 1;
    if (prev >= 0) {
      add_bond(prev, cur, pending, std::nullopt, pos);
    } else if (pending) {
      fail("bond symbol with no preceding atom", pos);
    }
    pending.reset();
    prev = cur;
    just_opened_branch = false;
  };

  for (const Token& t : tokens) {
    switch (t.kind) {
      case TokenKind::kAtom: {
        AtomNode a;
        a.is_aromatic = std::islower(static_cast<unsigned char>(t.lexeme[0])) != 0;
        a.symbol = t.lexeme;
        if (a.is_aromatic) a.symbol[0] = static_cast<char>(std::toupper(a.symbol[0]));
        a.element = element_from_symbol(a.symbol);
        add_atom(std::move(a), t.position);
        break;
      }
      case TokenKind::kBracketAtom: {
        BracketParts p = parse_bracket(t.lexeme, t.position);
        AtomNode a;
        a.symbol = p.symbol;
        a.element = element_from_symbol(p.symbol);
        a.is_aromatic = p.aromatic;
        a.formal_charge = p.charge;
        a.explicit_h = p.hcount;
        a.chiral = p.chiral;
        add_atom(std::move(a), t.position);
        break;
      }
      case TokenKind::kBond: {
        if (pending) fail("two consecutive bond symbols", t.position);
        if (prev < 0) fail("bond symbol with no preceding atom", t.position);
        pending = bond_from_char(t.lexeme[0]);
        break;
      }
      case TokenKind::kBranchOpen: {
        if (prev < 0) fail("branch with no preceding atom", t.position);
        if (pending) fail("bond symbol before branch opening", t.position);
        branch_stack.push_back(prev);
        just_opened_branch = true;
        break;
      }
      case TokenKind::kBranchClose: {
        if (branch_stack.empty()) fail("unmatched parenthesis", t.position);
        if (pending) fail("dangling bond symbol before ')'", t.position);
        if (just_opened_branch) fail("empty branch", t.position);
        prev = branch_stack.back();
        branch_stack.pop_back();
        break;
      }
      case TokenKind::kRingBond: {
        if (prev < 0) fail("ring closure with no preceding atom", t.position);
        const int num = t.lexeme[0] == '%' ? std::stoi(t.lexeme.substr(1))
                                           : t.lexeme[0] - '0';
        auto it = open_rings.find(num);
        if (it == open_rings.end()) {
          open_rings[num] = {prev, pending, t.position};
        } else {
          RingOpen open = it->second;
          open_rings.erase(it);
          add_bond(open.atom, prev, open.bond, pending, t.position);
        }
        pending.reset();
        break;
      }
      case TokenKind::kDot:
        fail("multi-fragment input is not supported", t.position);
    }
  }

  if (!branch_stack.empty())
    fail("unmatched parenthesis", static_cast<int>(smiles.size()));
  if (pending) fail("dangling bond symbol", static_cast<int>(smiles.size()));
  if (!open_rings.empty())
    fail("dangling ring closure " + std::to_string(open_rings.begin()->first),
         open_rings.begin()->second.pos);
  if (g.atoms.empty()) throw parse_error("no atoms in input");

  finalize_graph(g);
  return g;
}

namespace {

bool plain_writable(const AtomNode& a) {
  if (a.explicit_h || a.formal_charge != 0) return false;
  switch (a.element) {
    case Element::kB:
    case Element::kC:
    case Element::kN:
    case Element::kO:
    case Element::kP:
    case Element::kS:
      return true;
    case Element::kF:
    case Element::kCl:
    case Element::kBr:
    case Element::kI:
      return !a.is_aromatic;
    default:
      return false;
  }
}

std::string atom_text(const MolGraph& g, int v) {
  const AtomNode& a = g.atoms[v];
  std::string sym = a.symbol;
  if (a.is_aromatic)
    for (auto& ch : sym) ch = static_cast<char>(std::tolower(ch));
  if (plain_writable(a)) return sym;

  std::string out = "[" + sym;
  const int h = a.explicit_h ? *a.explicit_h : implicit_h_count(g, v);
  if (h == 1)
    out += "H";
  else if (h > 1)
    out += "H" + std::to_string(h);
  if (a.formal_charge != 0) {
    out += a.formal_charge > 0 ? "+" : "-";
    const int mag = std::abs(a.formal_charge);
    if (mag > 1) out += std::to_string(mag);
  }
  return out + "]";
}

std::string bond_text(const MolGraph& g, const BondEdge& b) {
  switch (b.order) {
    case BondOrder::kDouble: return "=";
    case BondOrder::kTriple: return "#";
    case BondOrder::kAromatic: return "";  // only between aromatic atoms
    case BondOrder::kSingle:
      // An unmarked bond between two aromatic atoms would read back as
      // aromatic, so spell the single bond out.
      return (g.atoms[b.a].is_aromatic && g.atoms[b.b].is_aromatic) ? "-" : "";
  }
  return "";
}

}  // namespace

std::string write_smiles(const MolGraph& g) {
  if (g.atoms.empty()) throw data_error("cannot write an empty graph");

  const int n = g.atom_count();
  std::vector<char> atom_visited(n, 0), bond_used(g.bonds.size(), 0);
  // closures[v] = list of (ring number, bond index) to print right after v
  std::vector<std::vector<std::pair<int, int>>> closures(n);
  int next_ring = 1;

  // Iterative DFS fixes the spanning tree and numbers the back edges.
  std::vector<int> order;
  std::vector<std::vector<std::pair<int, int>>> children(n);  // (child, bond)
  std::vector<int> stack = {0};
  atom_visited[0] = 1;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    order.push_back(v);
    for (auto [u, e] : g.adjacency[v]) {
      if (bond_used[e]) continue;
      bond_used[e] = 1;
      if (!atom_visited[u]) {
        atom_visited[u] = 1;
        children[v].emplace_back(u, e);
        stack.push_back(u);
      } else {
        if (next_ring > 99) throw data_error("too many ring closures to write");
        closures[v].emplace_back(next_ring, e);
        closures[u].emplace_back(next_ring, e);
        ++next_ring;
      }
    }
  }
  for (int v = 0; v < n; ++v)
    if (!atom_visited[v]) throw data_error("cannot write a disconnected graph");

  std::vector<char> ring_opened(next_ring, 0);
  std::string out;
  // Recursive emitter over the precomputed tree.
  auto emit = [&](auto&& self, int v) -> void {
    out += atom_text(g, v);
    for (auto [num, e] : closures[v]) {
      if (!ring_opened[num]) {
        ring_opened[num] = 1;
        out += bond_text(g, g.bonds[e]);
      }
      out += num < 10 ? std::to_string(num) : "%" + std::to_string(num);
    }
    for (std::size_t i = 0; i < children[v].size(); ++i) {
      auto [u, e] = children[v][i];
      const bool last = i + 1 == children[v].size();
      if (!last) out += "(";
      out += bond_text(g, g.bonds[e]);
      self(self, u);
      if (!last) out += ")";
    }
  };
  emit(emit, 0);
  return out;
}

}  // namespace rrgat
