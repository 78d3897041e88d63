#pragma once

#include "exhier/hierarchy.hpp"
#include "exhier/oracle.hpp"
#include "exhier/rational.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace exhier {

// Binary array R over an index set S, stored row-major by position in S.
class CompositionArray {
 public:
  CompositionArray() = default;
  explicit CompositionArray(std::vector<std::int64_t> index)
      : index_(std::move(index)), bits_(index_.size() * index_.size(), 0) {}

  std::size_t size() const { return index_.size(); }
  const std::vector<std::int64_t>& index() const { return index_; }
  bool at(std::size_t a, std::size_t b) const { return bits_[a * size() + b]; }
  void set_at(std::size_t a, std::size_t b, bool v) { bits_[a * size() + b] = v; }

  std::size_t position(std::int64_t label) const {
    auto it = std::find(index_.begin(), index_.end(), label);
    if (it == index_.end()) throw std::out_of_range("label not in the index set");
    return static_cast<std::size_t>(it - index_.begin());
  }
  bool operator()(std::int64_t j, std::int64_t k) const { return at(position(j), position(k)); }
  void set(std::int64_t j, std::int64_t k, bool v) { set_at(position(j), position(k), v); }

 private:
  std::vector<std::int64_t> index_;
  std::vector<std::uint8_t> bits_;
};

struct CompositionReport {
  bool valid = true;
  int property = 0;  // first violated property, 1..4
  std::array<std::int64_t, 3> witness{0, 0, 0};
  std::string message;
};

// Properties: (i) reflexive, (ii) total, (iii) transitive, (iv) complement transitive.
inline CompositionReport validate_composition(const CompositionArray& r) {
  const std::size_t m = r.size();
  const auto& ix = r.index();
  auto fail = [&](int prop, std::size_t a, std::size_t b, std::size_t c, const char* what) {
    CompositionReport rep;
    rep.valid = false;
    rep.property = prop;
    rep.witness = {ix[a], ix[b], ix[c]};
    std::ostringstream os;
    os << "violates (" << (prop == 1 ? "i" : prop == 2 ? "ii" : prop == 3 ? "iii" : "iv") << ") " << what
       << " at (" << ix[a] << "," << ix[b] << "," << ix[c] << ")";
    rep.message = os.str();
    return rep;
  };
  for (std::size_t a = 0; a < m; ++a)
    if (!r.at(a, a)) return fail(1, a, a, a, "reflexivity");
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      if (!r.at(a, b) && !r.at(b, a)) return fail(2, a, b, b, "totality");
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      for (std::size_t c = 0; c < m; ++c)
        if (r.at(a, b) && r.at(b, c) && !r.at(a, c)) return fail(3, a, b, c, "transitivity");
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      for (std::size_t c = 0; c < m; ++c)
        if (!r.at(a, b) && !r.at(b, c) && r.at(a, c)) return fail(4, a, b, c, "complement transitivity");
  return {};
}

// R_i(j,k) = 1 iff k ∈ (i ∧ j), over the labels other than i.
inline CompositionArray spinal_composition(const FiniteHierarchy& h, Label i) {
  check_label(h, i);
  std::vector<std::int64_t> s;
  for (Label j = 1; j <= h.n(); ++j)
    if (j != i) s.push_back(j);
  CompositionArray r(s);
  for (std::size_t a = 0; a < s.size(); ++a) {
    auto node = h.mrca_node(i, static_cast<Label>(s[a]));
    for (std::size_t b = 0; b < s.size(); ++b) r.set_at(a, b, h.contains(node, static_cast<Label>(s[b])));
  }
  return r;
}

inline CompositionArray spinal_composition(const HierarchyOracle& o, Label i, std::size_t m) {
  return spinal_composition(o.prefix(m), i);
}

// Blocks of the composition in order: j's block precedes k's iff R(j,k)=1, R(k,j)=0.
inline std::vector<std::vector<std::int64_t>> composition_blocks(const CompositionArray& r) {
  const std::size_t m = r.size();
  std::vector<std::size_t> rank(m, 0);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      if (r.at(b, a) && !r.at(a, b)) ++rank[a];
  std::map<std::size_t, std::vector<std::int64_t>> by_rank;
  for (std::size_t a = 0; a < m; ++a) by_rank[rank[a]].push_back(r.index()[a]);
  std::vector<std::vector<std::int64_t>> out;
  for (auto& [k, b] : by_rank) {
    std::sort(b.begin(), b.end());
    out.push_back(std::move(b));
  }
  return out;
}

// Sibling of the hierarchy text format: ordered blocks, one per line.
inline std::string composition_to_text(const CompositionArray& r, std::int64_t spine) {
  std::ostringstream os;
  os << "n=" << r.size() << " spine=" << spine << "\n";
  for (const auto& b : composition_blocks(r)) {
    os << '{';
    for (std::size_t t = 0; t < b.size(); ++t) os << (t ? "," : "") << b[t];
    os << "}\n";
  }
  return os.str();
}

inline CompositionArray composition_from_text(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<std::vector<std::int64_t>> blocks;
  bool header = false;
  while (std::getline(in, line)) {
    auto a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos || line[a] == '#') continue;
    if (!header) {
      if (line.compare(a, 2, "n=") != 0) throw std::invalid_argument("missing composition header");
      header = true;
      continue;
    }
    std::vector<std::int64_t> b;
    for (Label x : parse_block(line)) b.push_back(x);
    blocks.push_back(std::move(b));
  }
  std::vector<std::int64_t> s;
  std::map<std::int64_t, std::size_t> rank;
  for (std::size_t k = 0; k < blocks.size(); ++k)
    for (auto x : blocks[k]) {
      s.push_back(x);
      rank[x] = k;
    }
  std::sort(s.begin(), s.end());
  CompositionArray r(s);
  for (std::size_t a = 0; a < s.size(); ++a)
    for (std::size_t b = 0; b < s.size(); ++b) r.set_at(a, b, rank[s[a]] <= rank[s[b]]);
  return r;
}

// ---- distributions on [0,1] and left-uniformization ------------------------

template <class S>
struct PiecewiseDistribution {
  struct Atom {
    S location;
    S mass;
  };
  struct Segment {
    S lo, hi;
    S mass;
  };
  std::vector<Atom> atoms;
  std::vector<Segment> segments;

  S total_mass() const {
    S t = 0;
    for (const auto& a : atoms) t += a.mass;
    for (const auto& s : segments) t += s.mass;
    return t;
  }

  void validate() const {
    using T = scalar_traits<S>;
    if (!T::eq(total_mass(), S(1))) throw std::invalid_argument("distribution mass is not 1");
    for (const auto& a : atoms)
      if (!T::positive(a.mass)) throw std::invalid_argument("atom with non-positive mass");
    for (std::size_t i = 0; i < atoms.size(); ++i)
      for (std::size_t j = i + 1; j < atoms.size(); ++j)
        if (T::eq(atoms[i].location, atoms[j].location)) throw std::invalid_argument("repeated atom location");
    auto segs = segments;
    std::sort(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) { return a.lo < b.lo; });
    for (std::size_t i = 0; i < segs.size(); ++i) {
      if (!T::lt(segs[i].lo, segs[i].hi) || !T::positive(segs[i].mass))
        throw std::invalid_argument("degenerate segment");
      if (i + 1 < segs.size() && T::lt(segs[i + 1].lo, segs[i].hi))
        throw std::invalid_argument("overlapping segments");
    }
  }

  // Mass strictly below x.
  S mass_below(const S& x) const {
    using T = scalar_traits<S>;
    S m = 0;
    for (const auto& a : atoms)
      if (T::lt(a.location, x)) m += a.mass;
    for (const auto& s : segments) {
      if (T::le(s.hi, x)) m += s.mass;
      else if (T::lt(s.lo, x)) m += s.mass * (x - s.lo) / (s.hi - s.lo);
    }
    return m;
  }
};

// Atoms move to u_i = F(-inf, x_i) followed by an empty gap of length f_i; the
// continuous part becomes Lebesgue measure on the rest of [0,1].
template <class S>
PiecewiseDistribution<S> left_uniformize(const PiecewiseDistribution<S>& f) {
  using T = scalar_traits<S>;
  f.validate();
  PiecewiseDistribution<S> out;
  std::vector<S> cuts;
  for (const auto& a : f.atoms) cuts.push_back(a.location);
  for (const auto& s : f.segments) {
    cuts.push_back(s.lo);
    cuts.push_back(s.hi);
  }
  std::sort(cuts.begin(), cuts.end());
  for (const auto& a : f.atoms) out.atoms.push_back({f.mass_below(a.location), a.mass});
  // Continuous mass between consecutive cut points maps to a unit-density interval.
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const S& lo = cuts[k];
    const S& hi = cuts[k + 1];
    if (!T::lt(lo, hi)) continue;
    S m = 0;
    for (const auto& s : f.segments) {
      S a = std::max(lo, s.lo), b = std::min(hi, s.hi);
      if (T::lt(a, b)) m += s.mass * (b - a) / (s.hi - s.lo);
    }
    if (!T::positive(m)) continue;
    S start = f.mass_below(lo);
    for (const auto& at : f.atoms)
      if (T::eq(at.location, lo)) start += at.mass;
    if (!out.segments.empty() && T::eq(out.segments.back().hi, start)) {
      out.segments.back().hi = start + m;
      out.segments.back().mass += m;
    } else {
      out.segments.push_back({start, start + m, m});
    }
  }
  std::sort(out.atoms.begin(), out.atoms.end(), [](const auto& a, const auto& b) { return a.location < b.location; });
  return out;
}

template <class S>
bool same_distribution(const PiecewiseDistribution<S>& a, const PiecewiseDistribution<S>& b) {
  using T = scalar_traits<S>;
  auto canon = [](PiecewiseDistribution<S> d) {
    std::sort(d.atoms.begin(), d.atoms.end(), [](const auto& x, const auto& y) { return x.location < y.location; });
    std::sort(d.segments.begin(), d.segments.end(), [](const auto& x, const auto& y) { return x.lo < y.lo; });
    PiecewiseDistribution<S> m;
    m.atoms = d.atoms;
    for (const auto& s : d.segments) {
      if (!m.segments.empty() && T::eq(m.segments.back().hi, s.lo) &&
          T::eq(m.segments.back().mass / (m.segments.back().hi - m.segments.back().lo), s.mass / (s.hi - s.lo))) {
        m.segments.back().hi = s.hi;
        m.segments.back().mass += s.mass;
      } else {
        m.segments.push_back(s);
      }
    }
    return m;
  };
  auto x = canon(a), y = canon(b);
  if (x.atoms.size() != y.atoms.size() || x.segments.size() != y.segments.size()) return false;
  for (std::size_t i = 0; i < x.atoms.size(); ++i)
    if (!T::eq(x.atoms[i].location, y.atoms[i].location) || !T::eq(x.atoms[i].mass, y.atoms[i].mass)) return false;
  for (std::size_t i = 0; i < x.segments.size(); ++i)
    if (!T::eq(x.segments[i].lo, y.segments[i].lo) || !T::eq(x.segments[i].hi, y.segments[i].hi) ||
        !T::eq(x.segments[i].mass, y.segments[i].mass))
      return false;
  return true;
}

// ---- spinal variables ----------------------------------------------------

template <class S>
struct SpinalVariables {
  std::int64_t spine = 0;
  std::map<std::int64_t, S> values;  // X^i_j, with X^i_i = 1
};

inline double hoeffding_radius(std::size_t m_eff, double delta) {
  return std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(m_eff)));
}

// X̂^i_j from a materialized prefix H_m: labels of [m] outside (i ∧ j) over m − 2.
inline double spinal_estimate(const FiniteHierarchy& hm, Label i, Label j) {
  check_label(hm, i);
  check_label(hm, j);
  if (i == j) return 1.0;
  if (hm.n() < 3) throw std::invalid_argument("prefix too short for a spinal estimate");
  auto sz = hm.size_of(hm.mrca_node(i, j));
  return static_cast<double>(hm.n() - sz) / static_cast<double>(hm.n() - 2);
}

inline double estimate_spinal_variable(const HierarchyOracle& o, Label i, Label j, std::size_t m) {
  if (i == j) return 1.0;
  const std::size_t top = std::max(i, j);
  if (m < top || m < 3) throw std::invalid_argument("prefix size smaller than the labels");
  auto hm = o.prefix(m);
  if (restrict_prefix(hm, top) != o.prefix(top))
    throw OracleInconsistency("oracle prefixes are not restriction-consistent");
  return spinal_estimate(hm, i, j);
}

struct OrderReport {
  bool ok = true;
  std::int64_t j = 0, k = 0;
};

// R(j,k) = 1 iff X_j <= X_k; pairs closer than tie_tol are not constrained.
template <class S>
OrderReport check_order_consistency(const CompositionArray& r, const SpinalVariables<S>& x, double tie_tol = 0.0) {
  const auto& ix = r.index();
  for (auto j : ix)
    if (!x.values.count(j)) throw std::invalid_argument("index sets differ");
  for (std::size_t a = 0; a < ix.size(); ++a)
    for (std::size_t b = 0; b < ix.size(); ++b) {
      const S& xa = x.values.at(ix[a]);
      const S& xb = x.values.at(ix[b]);
      bool leq;
      if (tie_tol > 0.0) {
        double d = scalar_traits<S>::to_double(xa) - scalar_traits<S>::to_double(xb);
        if (std::abs(d) < tie_tol) continue;
        leq = d < 0;
      } else {
        leq = scalar_traits<S>::le(xa, xb);
      }
      if (r.at(a, b) != leq) return {false, ix[a], ix[b]};
    }
  return {};
}

template <class S>
SpinalVariables<S> exact_spinal_variables(const ExactSpinalOracle& o, Label i, std::size_t n) {
  SpinalVariables<S> x;
  x.spine = i;
  for (Label j = 1; j <= n; ++j) x.values[j] = spinal_value<S>(o, i, j);
  return x;
}

}  // namespace exhier
