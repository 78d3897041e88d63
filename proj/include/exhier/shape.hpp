#pragma once

#include "exhier/hierarchy.hpp"
#include "exhier/rng.hpp"

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace exhier {

inline constexpr std::string_view kLeafGlyph = "\xE2\x80\xA2";  // "•"

// Canonical unlabelled tree key: a leaf is "•", an internal vertex is its
// children's keys sorted and concatenated inside parentheses.
struct HierarchyShape {
  std::string key;
  std::size_t leaves = 0;

  bool operator==(const HierarchyShape& o) const { return key == o.key; }
  bool operator!=(const HierarchyShape& o) const { return key != o.key; }
  bool operator<(const HierarchyShape& o) const {
    return leaves != o.leaves ? leaves < o.leaves : key < o.key;
  }
};

inline HierarchyShape shape(const FiniteHierarchy& h) {
  std::vector<std::string> key(h.node_count());
  for (FiniteHierarchy::Node v = 0; v < h.n(); ++v) key[v] = std::string(kLeafGlyph);
  for (std::size_t v = h.node_count(); v-- > h.n();) {
    std::vector<std::string> parts;
    for (auto c : h.children(static_cast<FiniteHierarchy::Node>(v))) parts.push_back(std::move(key[c]));
    std::sort(parts.begin(), parts.end());
    std::string k = "(";
    for (auto& p : parts) k += p;
    key[v] = k + ")";
  }
  return {key[h.root()], h.n()};
}

// Unlabelled tree parsed from a key; vertex 0 is the root.
struct ShapeTree {
  std::vector<std::int64_t> parent;
  std::vector<char> leaf;
};

inline ShapeTree parse_shape(const std::string& key) {
  ShapeTree t;
  std::vector<std::int64_t> stack;
  std::size_t i = 0;
  auto add = [&](bool is_leaf) {
    t.parent.push_back(stack.empty() ? -1 : stack.back());
    t.leaf.push_back(is_leaf);
    return static_cast<std::int64_t>(t.parent.size() - 1);
  };
  while (i < key.size()) {
    if (key[i] == '(') {
      stack.push_back(add(false));
      ++i;
    } else if (key[i] == ')') {
      if (stack.empty()) throw std::invalid_argument("unbalanced shape key");
      stack.pop_back();
      ++i;
    } else if (key.compare(i, kLeafGlyph.size(), kLeafGlyph) == 0) {
      add(true);
      i += kLeafGlyph.size();
    } else {
      throw std::invalid_argument("bad character in shape key");
    }
  }
  if (!stack.empty() || t.parent.empty()) throw std::invalid_argument("unbalanced shape key");
  return t;
}

// Labelled hierarchy of the given shape, labels assigned in key order.
inline FiniteHierarchy representative(const HierarchyShape& s) {
  ShapeTree t = parse_shape(s.key);
  std::vector<Label> labels(t.parent.size(), 0);
  Label next = 0;
  for (std::size_t v = 0; v < t.parent.size(); ++v)
    if (t.leaf[v]) labels[v] = ++next;
  return FiniteHierarchy::from_rooted_tree(next, t.parent, labels);
}

inline BigInt factorial(std::size_t n) {
  BigInt f = 1;
  for (std::size_t k = 2; k <= n; ++k) f *= k;
  return f;
}

// Size of the automorphism group of the unlabelled tree.
inline BigInt automorphisms(const HierarchyShape& s) {
  ShapeTree t = parse_shape(s.key);
  const std::size_t V = t.parent.size();
  std::vector<std::vector<std::size_t>> kids(V);
  for (std::size_t v = 1; v < V; ++v) kids[t.parent[v]].push_back(v);
  std::vector<std::string> key(V);
  std::vector<BigInt> aut(V, 1);
  for (std::size_t v = V; v-- > 0;) {
    if (t.leaf[v]) {
      key[v] = std::string(kLeafGlyph);
      continue;
    }
    std::map<std::string, std::size_t> mult;
    std::vector<std::string> parts;
    for (auto c : kids[v]) {
      aut[v] *= aut[c];
      ++mult[key[c]];
      parts.push_back(key[c]);
    }
    for (auto& [k, m] : mult) aut[v] *= factorial(m);
    std::sort(parts.begin(), parts.end());
    key[v] = "(";
    for (auto& p : parts) key[v] += p;
    key[v] += ")";
  }
  return aut[0];
}

// Number of labelled hierarchies on [n] with this shape.
inline BigInt labelled_count(const HierarchyShape& s) { return factorial(s.leaves) / automorphisms(s); }

// All hierarchies on [n+1] whose restriction to [n] is h: the new leaf is
// attached to an internal vertex, or subdivides the edge above some vertex
// (above the root makes a new root).
inline std::vector<FiniteHierarchy> extensions(const FiniteHierarchy& h) {
  const std::size_t V = h.node_count(), n = h.n();
  std::vector<std::int64_t> base(V);
  std::vector<Label> labels(V, 0);
  for (std::size_t v = 0; v < V; ++v) {
    auto p = h.parent_of(static_cast<FiniteHierarchy::Node>(v));
    base[v] = p == FiniteHierarchy::kNone ? -1 : static_cast<std::int64_t>(p);
    if (v < n) labels[v] = static_cast<Label>(v + 1);
  }
  std::vector<FiniteHierarchy> out;
  for (std::size_t v = n; v < V; ++v) {
    auto par = base;
    auto lab = labels;
    par.push_back(static_cast<std::int64_t>(v));
    lab.push_back(static_cast<Label>(n + 1));
    out.push_back(FiniteHierarchy::from_rooted_tree(n + 1, par, lab));
  }
  for (std::size_t v = 0; v < V; ++v) {
    auto par = base;
    auto lab = labels;
    const auto w = static_cast<std::int64_t>(V);
    par.push_back(base[v]);
    lab.push_back(0);
    par[v] = w;
    par.push_back(w);
    lab.push_back(static_cast<Label>(n + 1));
    out.push_back(FiniteHierarchy::from_rooted_tree(n + 1, par, lab));
  }
  return out;
}

inline std::set<HierarchyShape> shape_successors(const HierarchyShape& s) {
  std::set<HierarchyShape> out;
  for (const auto& e : extensions(representative(s))) out.insert(shape(e));
  return out;
}

// Brute-force laminar enumeration over nontrivial subsets (bitmasks).
inline std::vector<FiniteHierarchy> enumerate_hierarchies(std::size_t n) {
  if (n < 1 || n > 6) throw std::out_of_range("enumerate_hierarchies supports 1 <= n <= 6");
  std::vector<std::uint32_t> cand;
  for (std::uint32_t m = 1; m < (1u << n); ++m) {
    int c = __builtin_popcount(m);
    if (c >= 2 && c < static_cast<int>(n)) cand.push_back(m);
  }
  std::vector<FiniteHierarchy> out;
  std::vector<std::uint32_t> chosen;
  auto emit = [&] {
    std::vector<Block> bs;
    for (auto m : chosen) {
      Block b;
      for (std::size_t j = 0; j < n; ++j)
        if (m >> j & 1u) b.push_back(static_cast<Label>(j + 1));
      bs.push_back(std::move(b));
    }
    out.push_back(FiniteHierarchy::from_blocks(n, bs));
  };
  auto rec = [&](auto&& self, std::size_t from) -> void {
    emit();
    for (std::size_t k = from; k < cand.size(); ++k) {
      std::uint32_t m = cand[k];
      bool ok = true;
      for (auto c : chosen) {
        std::uint32_t x = m & c;
        if (x != 0 && x != m && x != c) {
          ok = false;
          break;
        }
      }
      if (!ok) continue;
      chosen.push_back(m);
      self(self, k + 1);
      chosen.pop_back();
    }
  };
  rec(rec, 0);
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<HierarchyShape> enumerate_shapes(std::size_t n) {
  std::set<HierarchyShape> cur{shape(FiniteHierarchy::trivial(1))};
  for (std::size_t k = 1; k < n; ++k) {
    std::set<HierarchyShape> next;
    for (const auto& s : cur)
      for (const auto& t : shape_successors(s)) next.insert(t);
    cur = std::move(next);
  }
  return {cur.begin(), cur.end()};
}

inline FiniteHierarchy permute(const FiniteHierarchy& h, const std::vector<Label>& perm) {
  // perm[j-1] is the new label of j.
  std::vector<Block> bs;
  for (const Block& b : h.nontrivial_blocks()) {
    Block nb;
    for (Label x : b) nb.push_back(perm[x - 1]);
    bs.push_back(std::move(nb));
  }
  return FiniteHierarchy::from_blocks(h.n(), bs);
}

inline std::vector<Label> random_permutation(std::size_t n, Stream& rng) {
  std::vector<Label> p(n);
  for (std::size_t j = 0; j < n; ++j) p[j] = static_cast<Label>(j + 1);
  for (std::size_t j = n; j > 1; --j) std::swap(p[j - 1], p[rng.index(j)]);
  return p;
}

// Random hierarchy by uniformly chosen extensions followed by a random relabelling.
inline FiniteHierarchy random_hierarchy(std::size_t n, Stream& rng) {
  FiniteHierarchy h = FiniteHierarchy::trivial(1);
  for (std::size_t k = 1; k < n; ++k) {
    auto ext = extensions(h);
    h = ext[rng.index(ext.size())];
  }
  return permute(h, random_permutation(n, rng));
}

}  // namespace exhier
