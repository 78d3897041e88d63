#pragma once

#include "exhier/hierarchy.hpp"
#include "exhier/rational.hpp"
#include "exhier/rng.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace exhier {

// Finitely supported point of the sequence space; only strictly positive
// coordinates are stored, sorted by index.
template <class S>
class SparsePoint {
 public:
  using Entry = std::pair<std::uint32_t, S>;

  SparsePoint() = default;
  explicit SparsePoint(std::vector<Entry> e) {
    std::sort(e.begin(), e.end(), [](const Entry& a, const Entry& b) { return a.first < b.first; });
    for (auto& [i, v] : e) {
      if (i == 0) throw std::invalid_argument("coordinate indices start at 1");
      if (v < 0 && !scalar_traits<S>::eq(v, S(0))) throw std::invalid_argument("negative coordinate");
      if (!scalar_traits<S>::positive(v)) continue;
      if (!e_.empty() && e_.back().first == i) throw std::invalid_argument("repeated coordinate index");
      e_.emplace_back(i, v);
    }
  }

  static SparsePoint origin() { return {}; }
  static SparsePoint axis(std::uint32_t i, S v) { return SparsePoint({{i, v}}); }

  const std::vector<Entry>& entries() const { return e_; }
  bool is_origin() const { return e_.empty(); }
  std::uint32_t last_index() const { return e_.empty() ? 0 : e_.back().first; }
  S coord(std::uint32_t i) const {
    for (const auto& [k, v] : e_)
      if (k == i) return v;
    return S(0);
  }
  S norm() const {
    S t = 0;
    for (const auto& [k, v] : e_) t += v;
    return t;
  }

  // Point plus s·e_i, with i beyond every stored index.
  SparsePoint extended(std::uint32_t i, S s) const {
    if (i <= last_index()) throw std::invalid_argument("extension direction must exceed the last index");
    SparsePoint p = *this;
    if (scalar_traits<S>::positive(s)) p.e_.emplace_back(i, s);
    return p;
  }

  bool operator==(const SparsePoint& o) const {
    if (e_.size() != o.e_.size()) return false;
    for (std::size_t q = 0; q < e_.size(); ++q)
      if (e_[q].first != o.e_[q].first || !scalar_traits<S>::eq(e_[q].second, o.e_[q].second)) return false;
    return true;
  }
  bool operator!=(const SparsePoint& o) const { return !(*this == o); }

  template <class T>
  SparsePoint<T> cast() const {
    std::vector<typename SparsePoint<T>::Entry> out;
    for (const auto& [k, v] : e_) out.emplace_back(k, static_cast<T>(v));
    return SparsePoint<T>(std::move(out));
  }

 private:
  std::vector<Entry> e_;
};

template <class S>
std::string to_string(const SparsePoint<S>& x) {
  std::ostringstream os;
  os << '(';
  bool first = true;
  for (const auto& [k, v] : x.entries()) {
    os << (first ? "" : ", ") << 'e' << k << ':';
    if constexpr (std::is_same_v<S, Rational>) os << to_string(v);
    else os << v;
    first = false;
  }
  os << ')';
  return os.str();
}

template <class S>
SparsePoint<S> project(const SparsePoint<S>& x, std::uint32_t m) {
  std::vector<typename SparsePoint<S>::Entry> out;
  for (const auto& e : x.entries())
    if (e.first <= m) out.push_back(e);
  return SparsePoint<S>(std::move(out));
}

// y ∈ [[0,x]]_sp: y = project(x,m) + s·e_{m+1}, 0 <= s <= x_{m+1}.
template <class S>
bool on_special_path(const SparsePoint<S>& y, const SparsePoint<S>& x) {
  using T = scalar_traits<S>;
  const auto& ye = y.entries();
  const auto& xe = x.entries();
  if (ye.size() > xe.size()) return false;
  for (std::size_t q = 0; q < ye.size(); ++q) {
    if (ye[q].first != xe[q].first) return false;
    if (q + 1 < ye.size()) {
      if (!T::eq(ye[q].second, xe[q].second)) return false;
    } else if (!T::le(ye[q].second, xe[q].second)) {
      return false;
    }
  }
  return true;
}

// t ∈ F_x.
template <class S>
bool fringe_contains(const SparsePoint<S>& x, const SparsePoint<S>& t) {
  return on_special_path(x, t);
}

// Branch point of the special paths to x and y.
template <class S>
SparsePoint<S> meet(const SparsePoint<S>& x, const SparsePoint<S>& y) {
  const auto& xe = x.entries();
  const auto& ye = y.entries();
  std::vector<typename SparsePoint<S>::Entry> out;
  for (std::size_t q = 0; q < std::min(xe.size(), ye.size()); ++q) {
    if (xe[q].first != ye[q].first) break;
    if (scalar_traits<S>::eq(xe[q].second, ye[q].second)) {
      out.push_back(xe[q]);
      continue;
    }
    out.emplace_back(xe[q].first, std::min(xe[q].second, ye[q].second));
    break;
  }
  return SparsePoint<S>(std::move(out));
}

template <class S>
struct TreeSegment {
  SparsePoint<S> attach;
  std::uint32_t direction = 1;
  S length = 0;

  SparsePoint<S> end() const { return attach.extended(direction, length); }
  SparsePoint<S> at(const S& s) const { return attach.extended(direction, s); }
};

class InvalidRealTree : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Union of axis-aligned segments glued in increasing fresh directions.
template <class S>
class LineBreakTree {
 public:
  const std::vector<TreeSegment<S>>& segments() const { return segs_; }
  std::size_t size() const { return segs_.size(); }

  void add_segment(SparsePoint<S> attach, std::uint32_t direction, S length) {
    if (!scalar_traits<S>::positive(length)) throw InvalidRealTree("segment length must be positive");
    if (!segs_.empty() && direction <= segs_.back().direction)
      throw InvalidRealTree("segment directions must increase");
    if (direction <= attach.last_index()) throw InvalidRealTree("direction already used by the attach point");
    if (segs_.empty() ? !attach.is_origin() : !contains(attach))
      throw InvalidRealTree("attach point is not on the tree");
    segs_.push_back({std::move(attach), direction, std::move(length)});
  }

  // Segment holding y in its half-open range (attach, end], or -1 for the origin / off-tree.
  std::int64_t segment_of(const SparsePoint<S>& y) const {
    if (y.is_origin()) return -1;
    const auto d = y.last_index();
    for (std::size_t k = 0; k < segs_.size(); ++k) {
      if (segs_[k].direction != d) continue;
      if (project(y, d - 1) != segs_[k].attach) return -2;
      return scalar_traits<S>::le(y.coord(d), segs_[k].length) ? static_cast<std::int64_t>(k) : -2;
    }
    return -2;
  }

  bool contains(const SparsePoint<S>& y) const { return segment_of(y) != -2; }

  void validate() const {
    LineBreakTree<S> t;
    for (const auto& s : segs_) t.add_segment(s.attach, s.direction, s.length);
  }

  S total_length() const {
    S t = 0;
    for (const auto& s : segs_) t += s.length;
    return t;
  }

  bool is_prefix_of(const LineBreakTree& o) const {
    if (segs_.size() > o.segs_.size()) return false;
    for (std::size_t k = 0; k < segs_.size(); ++k)
      if (segs_[k].attach != o.segs_[k].attach || segs_[k].direction != o.segs_[k].direction ||
          !scalar_traits<S>::eq(segs_[k].length, o.segs_[k].length))
        return false;
    return true;
  }

 private:
  std::vector<TreeSegment<S>> segs_;
};

template <class S>
struct WeightedTree {
  struct Atom {
    SparsePoint<S> location;
    S mass;
  };
  struct Density {
    std::size_t segment;
    S lo, hi;  // sub-interval of the segment's parameter range
    S mass;
  };
  LineBreakTree<S> tree;
  std::vector<Atom> atoms;
  std::vector<Density> densities;

  S total_mass() const {
    S t = 0;
    for (const auto& a : atoms) t += a.mass;
    for (const auto& d : densities) t += d.mass;
    return t;
  }

  void validate(double eps_trunc = 1e-6) const {
    tree.validate();
    double m = scalar_traits<S>::to_double(total_mass());
    if (m > 1.0 + 1e-12 || m < 1.0 - eps_trunc - 1e-12) throw InvalidRealTree("total mass outside [1 - eps, 1]");
    for (const auto& a : atoms) {
      if (!scalar_traits<S>::positive(a.mass)) throw InvalidRealTree("atom with non-positive mass");
      if (!tree.contains(a.location)) throw InvalidRealTree("atom off the tree");
    }
    for (const auto& d : densities) {
      if (d.segment >= tree.size()) throw InvalidRealTree("density on a missing segment");
      if (!scalar_traits<S>::positive(d.mass)) throw InvalidRealTree("density with non-positive mass");
      if (d.lo < 0 || !scalar_traits<S>::lt(d.lo, d.hi) || !scalar_traits<S>::le(d.hi, tree.segments()[d.segment].length))
        throw InvalidRealTree("density interval outside its segment");
    }
  }
};

template <class S>
S scalar_from_uniform(double u);
template <>
inline double scalar_from_uniform<double>(double u) { return u; }
template <>
inline Rational scalar_from_uniform<Rational>(double u) { return Rational(u); }

template <class S>
SparsePoint<S> sample_point(const WeightedTree<S>& wt, Stream& rng) {
  const double total = scalar_traits<S>::to_double(wt.total_mass());
  if (!(total > 0)) throw InvalidRealTree("weighted tree has zero mass");
  double u = rng.uniform() * total;
  for (const auto& a : wt.atoms) {
    u -= scalar_traits<S>::to_double(a.mass);
    if (u < 0) return a.location;
  }
  for (const auto& d : wt.densities) {
    u -= scalar_traits<S>::to_double(d.mass);
    if (u < 0 || &d == &wt.densities.back()) {
      S s = d.lo + (d.hi - d.lo) * scalar_from_uniform<S>(rng.uniform());
      return wt.tree.segments()[d.segment].at(s);
    }
  }
  return wt.atoms.back().location;
}

// Blocks {j : t_j ∈ F_x} over candidates x: samples, pairwise meets and given extra points.
template <class S>
FiniteHierarchy derived_hierarchy(const std::vector<SparsePoint<S>>& samples, std::size_t n,
                                  const std::vector<SparsePoint<S>>& extra = {}) {
  if (n == 0 || n > samples.size()) throw std::invalid_argument("n must be in 1..#samples");
  std::vector<SparsePoint<S>> cand(samples.begin(), samples.begin() + n);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) cand.push_back(meet(samples[a], samples[b]));
  cand.insert(cand.end(), extra.begin(), extra.end());
  std::set<Block> seen;
  std::vector<Block> blocks;
  for (const auto& x : cand) {
    Block b;
    for (std::size_t j = 0; j < n; ++j)
      if (fringe_contains(x, samples[j])) b.push_back(static_cast<Label>(j + 1));
    if (b.size() >= 2 && b.size() < n && seen.insert(b).second) blocks.push_back(std::move(b));
  }
  return FiniteHierarchy::from_blocks(n, blocks);
}

// Candidate set = samples ∪ attach points of the tree.
template <class S>
FiniteHierarchy derived_hierarchy(const LineBreakTree<S>& tree, const std::vector<SparsePoint<S>>& samples,
                                  std::size_t n) {
  std::vector<SparsePoint<S>> att;
  for (const auto& s : tree.segments()) att.push_back(s.attach);
  return derived_hierarchy(samples, n, att);
}

// ---- serialization ------------------------------------------------------

template <class S>
nlohmann::json scalar_json(const S& v) {
  if constexpr (std::is_same_v<S, Rational>) return to_string(v);
  else return v;
}

template <class S>
S scalar_from_json(const nlohmann::json& j) {
  if constexpr (std::is_same_v<S, Rational>) {
    return j.is_string() ? parse_rational(j.get<std::string>()) : Rational(j.get<double>());
  } else {
    return j.is_string() ? parse_rational(j.get<std::string>()).template convert_to<double>() : j.get<double>();
  }
}

template <class S>
nlohmann::json point_json(const SparsePoint<S>& x) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& [k, v] : x.entries()) a.push_back({k, scalar_json(v)});
  return a;
}

template <class S>
SparsePoint<S> point_from_json(const nlohmann::json& a) {
  std::vector<typename SparsePoint<S>::Entry> e;
  for (const auto& p : a) e.emplace_back(p.at(0).get<std::uint32_t>(), scalar_from_json<S>(p.at(1)));
  return SparsePoint<S>(std::move(e));
}

template <class S>
nlohmann::json tree_json(const LineBreakTree<S>& t) {
  nlohmann::json segs = nlohmann::json::array();
  for (const auto& s : t.segments())
    segs.push_back({{"attach", point_json(s.attach)}, {"direction", s.direction}, {"length", scalar_json(s.length)}});
  return segs;
}

template <class S>
LineBreakTree<S> tree_from_json(const nlohmann::json& segs) {
  LineBreakTree<S> t;
  for (const auto& s : segs)
    t.add_segment(point_from_json<S>(s.at("attach")), s.at("direction").get<std::uint32_t>(),
                  scalar_from_json<S>(s.at("length")));
  return t;
}

template <class S>
nlohmann::json weighted_tree_json(const WeightedTree<S>& wt) {
  nlohmann::json j;
  j["segments"] = tree_json(wt.tree);
  j["atoms"] = nlohmann::json::array();
  for (const auto& a : wt.atoms) j["atoms"].push_back({{"at", point_json(a.location)}, {"mass", scalar_json(a.mass)}});
  j["densities"] = nlohmann::json::array();
  for (const auto& d : wt.densities)
    j["densities"].push_back({{"segment", d.segment}, {"lo", scalar_json(d.lo)}, {"hi", scalar_json(d.hi)},
                              {"mass", scalar_json(d.mass)}});
  return j;
}

template <class S>
WeightedTree<S> weighted_tree_from_json(const nlohmann::json& j) {
  WeightedTree<S> wt;
  wt.tree = tree_from_json<S>(j.at("segments"));
  for (const auto& a : j.value("atoms", nlohmann::json::array()))
    wt.atoms.push_back({point_from_json<S>(a.at("at")), scalar_from_json<S>(a.at("mass"))});
  for (const auto& d : j.value("densities", nlohmann::json::array()))
    wt.densities.push_back({d.at("segment").get<std::size_t>(), scalar_from_json<S>(d.at("lo")),
                            scalar_from_json<S>(d.at("hi")), scalar_from_json<S>(d.at("mass"))});
  return wt;
}

// Combinatorial skeleton: vertices at the origin, attach points and segment ends.
template <class S>
std::string to_dot(const LineBreakTree<S>& t, std::string_view name = "tree") {
  std::ostringstream os;
  os << "digraph " << name << " {\n  v0 [label=\"0\", shape=point];\n";
  std::size_t next = 1;
  std::vector<std::pair<SparsePoint<S>, std::size_t>> verts{{SparsePoint<S>::origin(), 0}};
  auto vertex = [&](const SparsePoint<S>& p) {
    for (const auto& [q, id] : verts)
      if (q == p) return id;
    verts.emplace_back(p, next);
    os << "  v" << next << " [shape=point];\n";
    return next++;
  };
  const auto& segs = t.segments();
  for (std::size_t k = 0; k < segs.size(); ++k) {
    std::vector<S> cuts{S(0), segs[k].length};
    for (const auto& o : segs)
      if (o.attach.last_index() == segs[k].direction && project(o.attach, segs[k].direction - 1) == segs[k].attach)
        cuts.push_back(o.attach.coord(segs[k].direction));
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end(),
                           [](const S& a, const S& b) { return scalar_traits<S>::eq(a, b); }),
               cuts.end());
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      auto a = vertex(segs[k].at(cuts[c]));
      auto b = vertex(segs[k].at(cuts[c + 1]));
      os << "  v" << a << " -> v" << b << " [label=\"e" << segs[k].direction << " "
         << scalar_traits<S>::to_double(cuts[c + 1] - cuts[c]) << "\"];\n";
    }
  }
  os << "}\n";
  return os.str();
}

// ---- line-breaking construction of the Brownian CRT ---------------------

struct CrtSample {
  WeightedTree<double> tree;
  std::vector<double> arrivals;  // T_1 < T_2 < ... (total length after k steps)
};

// Arrivals of a Poisson process of rate t dt; segment k has length T_k − T_{k−1}
// and attaches at a point chosen by length measure on the current tree.
inline CrtSample crt_linebreak(Stream& rng, std::size_t kmax) {
  if (kmax < 1) throw std::invalid_argument("kmax must be at least 1");
  CrtSample out;
  double gamma = 0, prev = 0;
  for (std::size_t k = 1; k <= kmax; ++k) {
    gamma += rng.exponential();
    double tk = std::sqrt(2.0 * gamma);
    double len = tk - prev;
    SparsePoint<double> attach;
    if (k > 1) {
      double u = rng.uniform() * prev;
      const auto& segs = out.tree.tree.segments();
      std::size_t s = 0;
      while (s + 1 < segs.size() && u >= segs[s].length) u -= segs[s++].length;
      attach = segs[s].at(std::min(u, segs[s].length));
    }
    out.tree.tree.add_segment(attach, static_cast<std::uint32_t>(k), len);
    out.arrivals.push_back(tk);
    prev = tk;
  }
  for (std::size_t s = 0; s < out.tree.tree.size(); ++s) {
    double l = out.tree.tree.segments()[s].length;
    out.tree.densities.push_back({s, 0.0, l, l / prev});
  }
  return out;
}

}  // namespace exhier
