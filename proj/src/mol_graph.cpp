#include "rrgat/mol_graph.hpp"

#include <algorithm>
#include <array>
#include <unordered_map>

#include "rrgat/errors.hpp"

namespace rrgat {
namespace {

int default_valence(Element e) {
  switch (e) {
    case Element::kB: return 3;
    case Element::kC: return 4;
    case Element::kN: return 3;
    case Element::kO: return 2;
    case Element::kF: return 1;
    case Element::kSi: return 4;
    case Element::kP: return 3;
    case Element::kS: return 2;
    case Element::kCl: return 1;
    case Element::kSe: return 2;
    case Element::kBr: return 1;
    case Element::kI: return 1;
    case Element::kOther: return 0;
  }
  return 0;
}

int twice_order(BondOrder o) {
  switch (o) {
    case BondOrder::kSingle: return 2;
    case BondOrder::kDouble: return 4;
    case BondOrder::kTriple: return 6;
    case BondOrder::kAromatic: return 3;
  }
  return 2;
}

std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
  h ^= v + 0x9e3779b97f4a7c15ull + (h << 12) + (h >> 4);
  h *= 0x2545f4914f6cdd1dull;
  return h ^ (h >> 29);
}

}  // namespace

Element element_from_symbol(const std::string& symbol) {
  static const std::unordered_map<std::string, Element> table = {
      {"B", Element::kB},   {"C", Element::kC},  {"N", Element::kN},
      {"O", Element::kO},   {"F", Element::kF},  {"Si", Element::kSi},
      {"P", Element::kP},   {"S", Element::kS},  {"Cl", Element::kCl},
      {"Se", Element::kSe}, {"Br", Element::kBr}, {"I", Element::kI}};
  auto it = table.find(symbol);
  return it == table.end() ? Element::kOther : it->second;
}

void build_adjacency(MolGraph& g) {
  g.adjacency.assign(g.atoms.size(), {});
  for (int e = 0; e < g.bond_count(); ++e) {
    const BondEdge& b = g.bonds[e];
    g.adjacency[b.a].emplace_back(b.b, e);
    g.adjacency[b.b].emplace_back(b.a, e);
  }
}

void perceive_rings(MolGraph& g) {
  const int n = g.atom_count();
  for (auto& a : g.atoms) a.in_ring = false;
  for (auto& b : g.bonds) b.in_ring = false;
  if (n == 0) return;

  std::vector<int> parent_atom(n, -1), parent_bond(n, -1), depth(n, -1);
  std::vector<int> stack;
  std::vector<std::pair<int, int>> back_edges;  // (atom, bond)
  std::vector<char> bond_seen(g.bonds.size(), 0);

  for (int root = 0; root < n; ++root) {
    if (depth[root] >= 0) continue;
    depth[root] = 0;
    stack.push_back(root);
    while (!stack.empty()) {
      int v = stack.back();
      stack.pop_back();
      for (auto [u, e] : g.adjacency[v]) {
        if (bond_seen[e]) continue;
        bond_seen[e] = 1;
        if (depth[u] < 0) {
          depth[u] = depth[v] + 1;
          parent_atom[u] = v;
          parent_bond[u] = e;
          stack.push_back(u);
        } else {
          back_edges.emplace_back(v, e);
        }
      }
    }
  }

  // Each back edge closes one fundamental cycle: walk both endpoints up the
  // tree to their meeting point and flag everything on the way.
  for (auto [v, e] : back_edges) {
    const BondEdge& be = g.bonds[e];
    int x = be.a, y = be.b;
    g.bonds[e].in_ring = true;
    while (x != y) {
      if (depth[x] < depth[y]) std::swap(x, y);
      g.atoms[x].in_ring = true;
      g.bonds[parent_bond[x]].in_ring = true;
      x = parent_atom[x];
    }
    g.atoms[x].in_ring = true;
  }
}

int implicit_h_count(const MolGraph& g, int atom) {
  const AtomNode& a = g.atoms.at(atom);
  if (a.explicit_h) return *a.explicit_h;
  if (a.element == Element::kOther) return 0;
  int twice = 2 * default_valence(a.element);
  for (auto [u, e] : g.adjacency[atom]) {
    (void)u;
    twice -= twice_order(g.bonds[e].order);
  }
  if (twice < 0) return 0;
  return twice / 2;
}

void finalize_graph(MolGraph& g) {
  build_adjacency(g);
  perceive_rings(g);
  g.over_valent = false;
  for (int i = 0; i < g.atom_count(); ++i) {
    g.atoms[i].index = i;
    const AtomNode& a = g.atoms[i];
    if (a.explicit_h || a.element == Element::kOther) continue;
    int twice = 2 * default_valence(a.element);
    for (auto [u, e] : g.adjacency[i]) {
      (void)u;
      twice -= twice_order(g.bonds[e].order);
    }
    if (twice < 0) g.over_valent = true;
  }
}

MolGraph relabel_atoms(const MolGraph& g, const std::vector<int>& perm) {
  if (perm.size() != g.atoms.size())
    throw data_error("relabel_atoms: permutation size mismatch");
  MolGraph out;
  out.atoms.resize(g.atoms.size());
  for (int i = 0; i < g.atom_count(); ++i) {
    out.atoms[perm[i]] = g.atoms[i];
  }
  out.bonds = g.bonds;
  for (auto& b : out.bonds) {
    b.a = perm[b.a];
    b.b = perm[b.b];
  }
  finalize_graph(out);
  return out;
}

std::vector<std::uint64_t> graph_fingerprint(const MolGraph& g) {
  const int n = g.atom_count();
  std::vector<std::uint64_t> h(n), next(n);
  for (int i = 0; i < n; ++i) {
    const AtomNode& a = g.atoms[i];
    std::uint64_t v = 0x243f6a8885a308d3ull;
    v = hash_combine(v, static_cast<std::uint64_t>(a.element));
    v = hash_combine(v, static_cast<std::uint64_t>(a.formal_charge + 16));
    v = hash_combine(v, a.is_aromatic ? 3 : 7);
    v = hash_combine(v, static_cast<std::uint64_t>(implicit_h_count(g, i)));
    v = hash_combine(v, g.adjacency[i].size());
    std::vector<std::uint64_t> orders;
    for (auto [u, e] : g.adjacency[i]) {
      (void)u;
      orders.push_back(static_cast<std::uint64_t>(g.bonds[e].order));
    }
    std::sort(orders.begin(), orders.end());
    for (auto o : orders) v = hash_combine(v, o + 11);
    h[i] = v;
  }

  auto distinct = [](std::vector<std::uint64_t> v) {
    std::sort(v.begin(), v.end());
    return std::unique(v.begin(), v.end()) - v.begin();
  };

  long classes = distinct(h);
  for (int round = 0; round < n; ++round) {
    for (int i = 0; i < n; ++i) {
      std::vector<std::uint64_t> nbr;
      for (auto [u, e] : g.adjacency[i]) {
        nbr.push_back(hash_combine(h[u], static_cast<std::uint64_t>(g.bonds[e].order) + 101));
      }
      std::sort(nbr.begin(), nbr.end());
      std::uint64_t v = h[i];
      for (auto x : nbr) v = hash_combine(v, x);
      next[i] = v;
    }
    h.swap(next);
    long c = distinct(h);
    if (c == classes) break;
    classes = c;
  }

  std::sort(h.begin(), h.end());
  h.push_back(static_cast<std::uint64_t>(n));
  h.push_back(static_cast<std::uint64_t>(g.bond_count()));
  std::vector<std::uint64_t> all_orders;
  for (const auto& b : g.bonds) all_orders.push_back(static_cast<std::uint64_t>(b.order));
  std::sort(all_orders.begin(), all_orders.end());
  std::uint64_t btag = 0x452821e638d01377ull;
  for (auto o : all_orders) btag = hash_combine(btag, o);
  h.push_back(btag);
  return h;
}

bool same_graph(const MolGraph& a, const MolGraph& b) {
  return graph_fingerprint(a) == graph_fingerprint(b);
}

}  // namespace rrgat
