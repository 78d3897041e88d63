#pragma once

#include "exhier/hierarchy.hpp"
#include "exhier/oracle.hpp"
#include "exhier/rational.hpp"
#include "exhier/realtree.hpp"
#include "exhier/shape.hpp"
#include "exhier/spinal.hpp"
#include "exhier/stats.hpp"

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace exhier {

// b(2k−1) = −k, b(2k) = k: odd original labels become spines, even ones samples.
struct SpineIndexing {
  static std::int64_t signed_of(std::uint64_t p) {
    if (p == 0) throw std::invalid_argument("labels start at 1");
    return (p % 2) ? -static_cast<std::int64_t>((p + 1) / 2) : static_cast<std::int64_t>(p / 2);
  }
  static std::uint64_t original_of(std::int64_t s) {
    if (s == 0) throw std::invalid_argument("signed labels exclude 0");
    return s < 0 ? static_cast<std::uint64_t>(-2 * s - 1) : static_cast<std::uint64_t>(2 * s);
  }
  static Label spine(std::size_t k) { return static_cast<Label>(2 * k - 1); }   // original label of −k
  static Label sample(std::size_t j) { return static_cast<Label>(2 * j); }      // original label of +j

  static bool bijective_on_prefix(std::size_t m) {
    std::set<std::int64_t> seen;
    for (std::uint64_t p = 1; p <= m; ++p) {
      auto s = signed_of(p);
      if (original_of(s) != p || !seen.insert(s).second) return false;
    }
    return true;
  }
};

class InvalidSpinalInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class AttachMultiplicity : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// t_j^{−K}: coordinate 1 = X^{−1}_j, coordinate l = max(0, X^{−l}_j − max_{l'<l} X^{−l'}_j).
template <class S>
SparsePoint<S> build_sample(const std::vector<S>& x, std::size_t K) {
  using T = scalar_traits<S>;
  if (K > x.size()) throw std::invalid_argument("fewer spinal values than spines");
  std::vector<typename SparsePoint<S>::Entry> e;
  S run = 0;
  for (std::size_t l = 0; l < K; ++l) {
    if (x[l] < 0 || x[l] > 1) {
      if (!(T::eq(x[l], S(0)) || T::eq(x[l], S(1)))) throw InvalidSpinalInput("spinal value outside [0,1]");
    }
    S c = l == 0 ? x[l] : x[l] - run;
    if (T::positive(c)) e.emplace_back(static_cast<std::uint32_t>(l + 1), c);
    if (l == 0 || x[l] > run) run = x[l];
  }
  return SparsePoint<S>(std::move(e));
}

// Union of the special paths [[0, t_j]]: direction l attaches at the common π_{l−1}(t_j).
template <class S>
LineBreakTree<S> build_tree(const std::vector<SparsePoint<S>>& samples, std::size_t K, double merge_tol = 0.0) {
  LineBreakTree<S> t;
  for (std::uint32_t l = 1; l <= K; ++l) {
    std::optional<SparsePoint<S>> attach;
    S len = 0;
    for (const auto& s : samples) {
      S c = s.coord(l);
      if (!scalar_traits<S>::positive(c)) continue;
      auto a = project(s, l - 1);
      if (!attach) attach = a;
      else if (*attach != a) {
        bool close = false;
        if (merge_tol > 0) {
          double d = 0;
          for (std::uint32_t q = 1; q < l; ++q)
            d += std::abs(scalar_traits<S>::to_double(a.coord(q)) - scalar_traits<S>::to_double(attach->coord(q)));
          close = d <= merge_tol;
        }
        if (!close) throw AttachMultiplicity("direction " + std::to_string(l) + " has two attach points");
      }
      if (c > len) len = c;
    }
    if (attach) t.add_segment(*attach, l, len);
  }
  return t;
}

// k ∈ (i ∧ j) in original labels.
using MrcaPredicate = std::function<bool(Label, Label, Label)>;

// G^k_n over l in a signed window [±M]: blocks (i ∧ l) ∩ [n] for spines i ∈ {−1..−k}.
inline FiniteHierarchy aux_hierarchy_window(const MrcaPredicate& in_mrca, std::size_t k, std::size_t n, std::size_t M,
                                            std::size_t label_limit = SIZE_MAX) {
  std::set<Block> seen;
  std::vector<Block> blocks;
  const std::size_t top = std::min(2 * M, label_limit);
  for (std::size_t s = 1; s <= k; ++s) {
    const Label i = SpineIndexing::spine(s);
    for (Label l = 1; l <= top; ++l) {
      if (l == i) continue;
      Block b;
      for (std::size_t j = 1; j <= n; ++j)
        if (in_mrca(i, l, SpineIndexing::sample(j))) b.push_back(static_cast<Label>(j));
      if (b.size() >= 2 && b.size() < n && seen.insert(b).second) blocks.push_back(std::move(b));
    }
  }
  return FiniteHierarchy::from_blocks(n, blocks);
}

struct AuxResult {
  FiniteHierarchy G;
  std::size_t window = 0;  // M at which the blocks stabilized
};

class PrefixTooSmall : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// M doubles until two consecutive doublings leave the blocks unchanged. A source with
// only label_limit labels stops there, since no further labels can change the blocks.
inline AuxResult aux_hierarchy_G(const MrcaPredicate& in_mrca, std::size_t k, std::size_t n, std::size_t max_window = 1u << 12,
                                 std::size_t label_limit = SIZE_MAX) {
  if (k < 1 || n < 1) throw std::invalid_argument("need k >= 1 spines and n >= 1");
  if (2 * std::max(n, k) > label_limit) throw PrefixTooSmall("source has fewer labels than the spines and samples need");
  std::size_t M = std::max(n, k);
  FiniteHierarchy g0 = aux_hierarchy_window(in_mrca, k, n, M, label_limit);
  FiniteHierarchy g1 = aux_hierarchy_window(in_mrca, k, n, 2 * M, label_limit);
  for (;;) {
    if (4 * M >= label_limit) return {aux_hierarchy_window(in_mrca, k, n, label_limit, label_limit), label_limit / 2};
    if (4 * M > max_window) throw PrefixTooSmall("aux hierarchy did not stabilize within the window");
    FiniteHierarchy g2 = aux_hierarchy_window(in_mrca, k, n, 4 * M, label_limit);
    if (g0 == g1 && g1 == g2) return {g2, M};
    g0 = std::move(g1);
    g1 = std::move(g2);
    M *= 2;
  }
}

inline AuxResult aux_hierarchy_G(const HierarchyOracle& o, std::size_t k, std::size_t n) {
  return aux_hierarchy_G([&o](Label i, Label j, Label q) { return o.in_mrca(i, j, q); }, k, n);
}

// Shortcut: l restricted to the positive labels [n].
inline FiniteHierarchy aux_hierarchy_positive(const MrcaPredicate& in_mrca, std::size_t k, std::size_t n) {
  std::set<Block> seen;
  std::vector<Block> blocks;
  for (std::size_t s = 1; s <= k; ++s)
    for (std::size_t l = 1; l <= n; ++l) {
      Block b;
      for (std::size_t j = 1; j <= n; ++j)
        if (in_mrca(SpineIndexing::spine(s), SpineIndexing::sample(l), SpineIndexing::sample(j)))
          b.push_back(static_cast<Label>(j));
      if (b.size() >= 2 && b.size() < n && seen.insert(b).second) blocks.push_back(std::move(b));
    }
  return FiniteHierarchy::from_blocks(n, blocks);
}

// Spinal values X^{−k}_j in signed labels.
template <class S>
class SpinalSource {
 public:
  virtual ~SpinalSource() = default;
  virtual S value(std::size_t k, std::size_t j) const = 0;
  virtual bool in_mrca(Label i, Label j, Label q) const = 0;  // original labels
  virtual std::size_t max_spines() const { return std::size_t(1) << 20; }
  virtual std::size_t label_limit() const { return SIZE_MAX; }
};

template <class S>
class ExactSource : public SpinalSource<S> {
 public:
  explicit ExactSource(const ExactSpinalOracle& o) : o_(o) {}
  S value(std::size_t k, std::size_t j) const override {
    return spinal_value<S>(o_, SpineIndexing::spine(k), SpineIndexing::sample(j));
  }
  bool in_mrca(Label i, Label j, Label q) const override { return o_.in_mrca(i, j, q); }

 private:
  const ExactSpinalOracle& o_;
};

// Frequency estimates from one materialized prefix H_M of the original sequence.
class EmpiricalSource : public SpinalSource<double> {
 public:
  EmpiricalSource(const HierarchyOracle& o, std::size_t M) : h_(o.prefix(M)) {
    if (M < 3) throw std::invalid_argument("window too small");
  }
  explicit EmpiricalSource(FiniteHierarchy h) : h_(std::move(h)) {}
  double value(std::size_t k, std::size_t j) const override {
    return spinal_estimate(h_, SpineIndexing::spine(k), SpineIndexing::sample(j));
  }
  bool in_mrca(Label i, Label j, Label q) const override {
    if (std::max({i, j, q}) > h_.n() || std::min({i, j, q}) < 1) throw std::out_of_range("label outside the window");
    if (i == j) return q == i;
    return h_.contains(h_.mrca_node(i, j), q);
  }
  std::size_t max_spines() const override { return (h_.n() + 1) / 2; }
  std::size_t label_limit() const override { return h_.n(); }
  const FiniteHierarchy& window() const { return h_; }

 private:
  FiniteHierarchy h_;
};

struct ReconstructOptions {
  std::size_t K = 16;
  bool auto_extend = false;  // keep adding spines until the residual vanishes
  std::size_t K_max = std::size_t(1) << 16;
  bool checks = true;
  double tie_tol = 1e-12;  // empirical snapping; 0 for exact input
};

struct LevelReport {
  std::size_t k = 0;
  std::size_t segments = 0;
  double residual = 0;
  bool attach_singleton = true;
  bool projection = true;
  bool norm = true;
  bool tree_prefix = true;
  bool pushout = true;
  bool i_equals_g = true;
  bool ok() const { return attach_singleton && projection && norm && tree_prefix && pushout && i_equals_g; }
};

template <class S>
struct Reconstruction {
  LineBreakTree<S> tree;
  std::vector<SparsePoint<S>> samples;
  FiniteHierarchy I;
  std::optional<FiniteHierarchy> G;
  std::size_t K = 0;
  double residual = 0;
  std::optional<std::size_t> stabilization_depth;
  std::vector<LevelReport> levels;
  bool checks_ok = true;
};

template <class S>
void snap_ties(std::vector<S>& col, double tol) {
  if (tol <= 0) return;
  std::vector<std::size_t> ord(col.size());
  for (std::size_t q = 0; q < ord.size(); ++q) ord[q] = q;
  std::sort(ord.begin(), ord.end(), [&](std::size_t a, std::size_t b) { return col[a] < col[b]; });
  for (std::size_t q = 1; q < ord.size(); ++q)
    if (scalar_traits<S>::to_double(col[ord[q]] - col[ord[q - 1]]) < tol) col[ord[q]] = col[ord[q - 1]];
}

template <class S>
Reconstruction<S> reconstruct(const SpinalSource<S>& src, std::size_t n, const ReconstructOptions& opt = {}) {
  if (n < 1) throw std::invalid_argument("n must be positive");
  if (opt.K < 1) throw std::invalid_argument("K must be positive");
  Reconstruction<S> out;
  std::vector<std::vector<S>> x(n);  // x[j-1][k-1] = X^{−k}_j
  std::vector<SparsePoint<S>> prev(n), cur(n);
  std::vector<S> run(n, S(0));
  std::vector<std::pair<std::size_t, std::size_t>> open;
  for (std::size_t u = 1; u <= n; ++u)
    for (std::size_t v = u + 1; v <= n; ++v) open.emplace_back(u, v);
  const double pairs = static_cast<double>(open.size());
  LineBreakTree<S> prev_tree;
  const MrcaPredicate pred = [&src](Label i, Label j, Label q) { return src.in_mrca(i, j, q); };
  const std::size_t cap = std::min(opt.K_max, src.max_spines());
  std::size_t k = 0;
  for (;;) {
    ++k;
    if (k > cap) throw PrefixTooSmall("spine budget exhausted before the residual vanished");
    std::vector<S> col(n);
    for (std::size_t j = 1; j <= n; ++j) col[j - 1] = src.value(k, j);
    snap_ties(col, opt.tie_tol);
    for (std::size_t j = 0; j < n; ++j) {
      if (opt.checks) x[j].push_back(col[j]);
      S c = k == 1 ? col[j] : col[j] - run[j];
      if (opt.checks) prev[j] = cur[j];
      if (scalar_traits<S>::positive(c)) cur[j] = cur[j].extended(static_cast<std::uint32_t>(k), c);
      if (k == 1 || col[j] > run[j]) run[j] = col[j];
    }
    const Label sp = SpineIndexing::spine(k);
    std::erase_if(open, [&](const auto& p) {
      return src.in_mrca(SpineIndexing::sample(p.first), SpineIndexing::sample(p.second), sp);
    });
    const double residual = pairs > 0 ? static_cast<double>(open.size()) / pairs : 0.0;
    if (open.empty() && !out.stabilization_depth) out.stabilization_depth = k;

    if (opt.checks) {
      LevelReport rep;
      rep.k = k;
      rep.residual = residual;
      LineBreakTree<S> tk;
      try {
        tk = build_tree(cur, k, opt.tie_tol);
      } catch (const AttachMultiplicity&) {
        rep.attach_singleton = false;
      }
      rep.segments = tk.size();
      for (std::size_t j = 0; j < n; ++j) {
        if (build_sample(x[j], k) != cur[j]) rep.norm = false;
        S mx = x[j][0];
        for (const auto& v : x[j]) mx = std::max(mx, v);
        if (!scalar_traits<S>::eq(cur[j].norm(), mx)) rep.norm = false;
        if (k > 1 && project(cur[j], static_cast<std::uint32_t>(k - 1)) != prev[j]) rep.projection = false;
      }
      if (rep.attach_singleton) {
        if (k > 1 && !prev_tree.is_prefix_of(tk)) rep.tree_prefix = false;
        if (k > 1) {
          std::vector<SparsePoint<S>> cand(prev.begin(), prev.end());
          for (const auto& s : prev_tree.segments()) {
            cand.push_back(s.attach);
            cand.push_back(s.end());
          }
          for (const auto& c : cand)
            for (std::size_t j = 0; j < n; ++j)
              if (fringe_contains(c, prev[j]) != fringe_contains(c, cur[j])) rep.pushout = false;
        }
        auto ik = derived_hierarchy(tk, cur, n);
        auto gk = aux_hierarchy_G(pred, k, n, 1u << 12, src.label_limit()).G;
        rep.i_equals_g = ik == gk;
        prev_tree = tk;
      }
      if (!rep.ok()) out.checks_ok = false;
      out.levels.push_back(rep);
    }
    out.residual = residual;
    const bool done = opt.auto_extend ? (k >= opt.K && open.empty()) : k >= opt.K;
    if (done) break;
  }
  out.K = k;
  out.samples = cur;
  out.tree = build_tree(cur, k, opt.tie_tol);
  out.I = n == 1 ? FiniteHierarchy::trivial(1) : derived_hierarchy(out.tree, cur, n);
  if (opt.checks) out.G = aux_hierarchy_G(pred, k, n, 1u << 12, src.label_limit()).G;
  return out;
}

// Directly sampled hierarchy restricted to the positive (even original) labels.
inline FiniteHierarchy positive_restriction(const HierarchyOracle& o, std::size_t n) {
  auto h = o.prefix(2 * n);
  std::vector<Label> pos;
  for (std::size_t j = 1; j <= n; ++j) pos.push_back(SpineIndexing::sample(j));
  return restrict(h, pos);
}

template <class S>
std::string reconstruction_report(const Reconstruction<S>& r, const FiniteHierarchy* expected, bool machine) {
  std::ostringstream os;
  const bool match = expected && *expected == r.I;
  if (machine) {
    os << "K=" << r.K << "\nsegments=" << r.tree.size() << "\nresidual=" << r.residual << "\n";
    os << "stabilization_depth=" << (r.stabilization_depth ? std::to_string(*r.stabilization_depth) : "none") << "\n";
    for (const auto& l : r.levels)
      os << "level." << l.k << "=segments:" << l.segments << ",residual:" << l.residual
         << ",attach_singleton:" << l.attach_singleton << ",projection:" << l.projection << ",norm:" << l.norm
         << ",tree_prefix:" << l.tree_prefix << ",pushout:" << l.pushout << ",i_equals_g:" << l.i_equals_g << "\n";
    os << "checks_ok=" << (r.checks_ok ? 1 : 0) << "\n";
    if (expected) os << "matches_input=" << (match ? 1 : 0) << "\n";
    std::string t = to_text(r.I);
    for (auto& c : t)
      if (c == '\n') c = ';';
    os << "I=" << t << "\n";
  } else {
    os << "reconstruction with K=" << r.K << " spines, " << r.tree.size() << " segments\n";
    for (const auto& l : r.levels)
      os << "  k=" << l.k << " segments=" << l.segments << " residual=" << l.residual
         << (l.ok() ? "  identities hold" : "  IDENTITY FAILURE") << (l.i_equals_g ? "" : " (I^k != G^k)") << "\n";
    os << "residual " << r.residual << ", stabilization depth "
       << (r.stabilization_depth ? std::to_string(*r.stabilization_depth) : "not reached") << "\n";
    os << "reconstructed hierarchy:\n" << to_text(r.I);
    if (expected) os << (match ? "I_n equals the input hierarchy restricted to positive labels\n"
                               : "I_n DIFFERS from the input hierarchy restricted to positive labels\n");
  }
  return os.str();
}

// Shape frequencies of direct sampling vs the reconstruction pipeline.
inline TestReport check_distributional_equality(const CountTable& direct, const CountTable& reconstructed,
                                                double significance) {
  auto r = chi_square_two_sample(direct, reconstructed, significance);
  r.name = "distributional_equality";
  return r;
}

}  // namespace exhier
