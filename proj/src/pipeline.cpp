#include "rrgat/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>

#include "rrgat/errors.hpp"
#include "rrgat/rng.hpp"
#include "rrgat/smiles.hpp"

namespace rrgat {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  bool quoted = false;
  for (char c : line) {
    if (quoted) {
      if (c == '"')
        quoted = false;
      else
        cell += c;
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      cells.push_back(trim(cell));
      cell.clear();
    } else {
      cell += c;
    }
  }
  cells.push_back(trim(cell));
  return cells;
}

std::optional<double> parse_double(const std::string& s) {
  try {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) return std::nullopt;
    return v;
  } catch (...) {
    return std::nullopt;
  }
}

struct VinylBond {
  int head = -1;  // CH2-side carbon for terminal vinyls, lower index otherwise
  int tail = -1;
  int bond = -1;
};

bool is_candidate(const MolGraph& g, const BondEdge& b) {
  return b.order == BondOrder::kDouble &&
         g.atoms[b.a].element == Element::kC && g.atoms[b.b].element == Element::kC &&
         !g.atoms[b.a].is_aromatic && !g.atoms[b.b].is_aromatic;
}

bool terminal_ch2(const MolGraph& g, int atom) {
  return g.adjacency[atom].size() == 1 && implicit_h_count(g, atom) == 2;
}

std::optional<VinylBond> find_vinyl(const MolGraph& g) {
  // Prefer a C=C with a terminal CH2= end; fall back to the first
  // non-aromatic C=C (covers internal vinyls such as maleimides).
  std::optional<VinylBond> fallback;
  for (int e = 0; e < g.bond_count(); ++e) {
    const BondEdge& b = g.bonds[e];
    if (!is_candidate(g, b)) continue;
    const int lo = std::min(b.a, b.b), hi = std::max(b.a, b.b);
    if (terminal_ch2(g, lo)) return VinylBond{lo, hi, e};
    if (terminal_ch2(g, hi)) return VinylBond{hi, lo, e};
    if (!fallback) fallback = VinylBond{lo, hi, e};
  }
  return fallback;
}

}  // namespace

std::string generate_copolymer(const MolGraph& m1, const MolGraph& m2) {
  const auto v1 = find_vinyl(m1);
  if (!v1) throw data_error("non-vinyl monomer (monomer 1)");
  const auto v2 = find_vinyl(m2);
  if (!v2) throw data_error("non-vinyl monomer (monomer 2)");

  MolGraph g = m1;
  const int atom_off = g.atom_count();
  const int bond_off = g.bond_count();
  for (const AtomNode& a : m2.atoms) g.atoms.push_back(a);
  for (const BondEdge& b : m2.bonds) {
    BondEdge e = b;
    e.a += atom_off;
    e.b += atom_off;
    g.bonds.push_back(e);
  }

  auto saturate = [&g](int bond) {
    g.bonds[bond].order = BondOrder::kSingle;
    g.bonds[bond].stereo = BondStereo::kNone;
  };
  saturate(v1->bond);
  saturate(bond_off + v2->bond);

  auto add_methyl = [&g](int to) {
    AtomNode c;
    c.element = Element::kC;
    c.symbol = "C";
    g.atoms.push_back(c);
    g.bonds.push_back({to, g.atom_count() - 1, BondOrder::kSingle, BondStereo::kNone, false});
  };
  add_methyl(v1->head);
  g.bonds.push_back({v1->tail, atom_off + v2->head, BondOrder::kSingle,
                     BondStereo::kNone, false});
  add_methyl(atom_off + v2->tail);

  finalize_graph(g);
  return write_smiles(g);
}

CleanResult clean_rows(const std::vector<CsvRow>& rows) {
  CleanResult out;
  int row_id = 0;
  for (const CsvRow& row : rows) {
    ++row_id;
    const auto reject = [&](const std::string& reason) {
      out.rejected.push_back({row_id, reason});
    };

    if (row[3].empty() || row[4].empty()) {
      reject("missing target");
      continue;
    }
    const auto r1 = parse_double(row[3]);
    const auto r2 = parse_double(row[4]);
    if (!r1 || !r2) {
      reject("malformed target");
      continue;
    }
    if (!std::isfinite(*r1) || !std::isfinite(*r2)) {
      reject("non-finite target");
      continue;
    }
    if (*r1 < 0.0 || *r2 < 0.0) {
      reject("negative target");
      continue;
    }

    MolGraph m1, m2;
    try {
      m1 = parse_smiles(row[0]);
    } catch (const parse_error& e) {
      reject(std::string("unparsable structure (monomer 1): ") + e.what());
      continue;
    }
    try {
      m2 = parse_smiles(row[1]);
    } catch (const parse_error& e) {
      reject(std::string("unparsable structure (monomer 2): ") + e.what());
      continue;
    }

    std::string generated;
    try {
      generated = generate_copolymer(m1, m2);
    } catch (const data_error& e) {
      reject(e.what());
      continue;
    }

    if (!row[2].empty()) {
      MolGraph printed;
      try {
        printed = parse_smiles(row[2]);
      } catch (const parse_error& e) {
        reject(std::string("unparsable structure (copolymer): ") + e.what());
        continue;
      }
      if (!same_graph(printed, parse_smiles(generated))) {
        reject("copolymer inconsistent with monomers (errata)");
        continue;
      }
    }

    RawRecord rec;
    rec.row_id = row_id;
    rec.monomer1_smiles = row[0];
    rec.monomer2_smiles = row[1];
    rec.copolymer_smiles = generated;
    rec.r1 = *r1;
    rec.r2 = *r2;
    out.accepted.push_back(std::move(rec));
  }
  return out;
}

CleanResult ingest_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw data_error("cannot open input CSV: " + path);

  std::string line;
  if (!std::getline(is, line)) throw data_error("no records: empty input file");
  const std::vector<std::string> header = split_csv_line(line);
  const std::vector<std::string> expected = {
      "monomer1_smiles", "monomer2_smiles", "copolymer_smiles", "r1", "r2"};
  if (header.size() < expected.size())
    throw data_error("malformed header in " + path);
  for (std::size_t i = 0; i < expected.size(); ++i)
    if (header[i] != expected[i])
      throw data_error("malformed header: expected column '" + expected[i] +
                       "', got '" + header[i] + "'");

  std::vector<CsvRow> rows;
  while (std::getline(is, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_csv_line(line);
    cells.resize(5);
    rows.push_back({cells[0], cells[1], cells[2], cells[3], cells[4]});
  }
  if (rows.empty()) throw data_error("no records in " + path);
  return clean_rows(rows);
}

double sqrt_transform(double r) {
  if (r < 0.0) throw data_error("sqrt_transform: negative input");
  return std::sqrt(r);
}

double sqrt_invert(double y) {
  const double clamped = y < 0.0 ? 0.0 : y;
  return clamped * clamped;
}

double percentile(std::vector<double> values, double p) {
  if (values.empty()) throw data_error("percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = p / 100.0 * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

TargetScaler TargetScaler::fit(const std::vector<std::array<double, 2>>& transformed) {
  TargetScaler s;
  for (int task = 0; task < 2; ++task) {
    std::vector<double> values;
    values.reserve(transformed.size());
    for (const auto& row : transformed) values.push_back(row[task]);
    std::vector<double> distinct = values;
    std::sort(distinct.begin(), distinct.end());
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < 2)
      throw data_error("scaler: need at least 2 distinct training values per target");
    s.center[task] = percentile(values, 50.0);
    s.scale[task] = percentile(values, 95.0) - percentile(values, 5.0);
    if (s.scale[task] <= 0.0)
      throw data_error("scaler: degenerate quantile range (q95 == q5)");
  }
  return s;
}

double skewness(const std::vector<double>& values) {
  if (values.size() < 3) throw data_error("skewness: need at least 3 values");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double m2 = 0.0, m3 = 0.0;
  for (double v : values) {
    const double d = v - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  if (m2 <= 0.0) throw data_error("skewness: zero variance");
  return m3 / std::pow(m2, 1.5);
}

SplitIndices shuffle_split(int n, std::uint64_t seed) {
  if (n < 10) throw data_error("shuffle_split: need at least 10 records");
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  SplitRng rng = SplitRng(seed).split("shuffle_split");
  for (int i = n - 1; i > 0; --i) {
    const auto j = static_cast<std::size_t>(rng.next_below(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[static_cast<std::size_t>(i)], order[j]);
  }
  const int n_train = 7 * n / 10;
  const int n_val = n / 10;
  SplitIndices idx;
  idx.train.assign(order.begin(), order.begin() + n_train);
  idx.val.assign(order.begin() + n_train, order.begin() + n_train + n_val);
  idx.test.assign(order.begin() + n_train + n_val, order.end());
  return idx;
}

PreparedSample prepare_sample(const RawRecord& rec, const TargetScaler& scaler) {
  PreparedSample s;
  s.row_id = rec.row_id;
  s.m1 = featurize_graph(parse_smiles(rec.monomer1_smiles));
  s.m2 = featurize_graph(parse_smiles(rec.monomer2_smiles));
  s.co = featurize_graph(parse_smiles(rec.copolymer_smiles));
  s.r = {rec.r1, rec.r2};
  s.y = {scaler.apply(0, sqrt_transform(rec.r1)),
         scaler.apply(1, sqrt_transform(rec.r2))};
  return s;
}

PreparedDataset prepare_dataset(const std::vector<RawRecord>& records,
                                const SplitIndices& idx, std::uint64_t seed) {
  std::vector<std::array<double, 2>> train_targets;
  train_targets.reserve(idx.train.size());
  for (int i : idx.train) {
    const RawRecord& r = records.at(static_cast<std::size_t>(i));
    train_targets.push_back({sqrt_transform(r.r1), sqrt_transform(r.r2)});
  }

  PreparedDataset ds;
  ds.seed = seed;
  ds.scaler = TargetScaler::fit(train_targets);
  auto fill = [&](const std::vector<int>& ids, std::vector<PreparedSample>& out) {
    out.reserve(ids.size());
    for (int i : ids)
      out.push_back(prepare_sample(records.at(static_cast<std::size_t>(i)), ds.scaler));
  };
  fill(idx.train, ds.train);
  fill(idx.val, ds.val);
  fill(idx.test, ds.test);
  return ds;
}

}  // namespace rrgat
