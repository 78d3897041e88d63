#pragma once

#include "exhier/analysis.hpp"
#include "exhier/definetti.hpp"
#include "exhier/ehpf.hpp"
#include "exhier/factory.hpp"
#include "exhier/parallel.hpp"
#include "exhier/spinal.hpp"
#include "exhier/stats.hpp"
#include "exhier/xi.hpp"

#include <bit>
#include <chrono>
#include <functional>
#include <iomanip>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace exhier::acceptance {

// ==== pinned constants ======================================================

inline constexpr std::uint64_t kSeed = 20240917ULL;

inline constexpr std::size_t kHierarchyCounts[] = {1, 1, 4, 26, 236};
inline constexpr std::size_t kShapeCounts3 = 2, kShapeCounts4 = 5;
inline constexpr double kEnumerationSeconds = 10.0;

inline constexpr std::size_t kRandomHierarchies = 1000, kRandomHierarchyN = 8;
inline constexpr std::size_t kLaminarityTrees = 10000;

inline constexpr unsigned kRoundTripDepth = 12;
inline constexpr std::size_t kRoundTripN = 8, kRoundTripK = 12, kRoundTripSeeds = 100;
inline constexpr double kRoundTripSeconds = 60.0;

inline constexpr std::size_t kDistN = 4;
inline constexpr std::uint64_t kDistReplicas = 100000;
inline constexpr std::size_t kMetaTrials = 100, kMetaPassMin = 97, kNegativeFailMin = 99;
inline constexpr double kSignificance = 0.01;

inline constexpr std::size_t kSpinalMaxN = 8, kSpinalSeeds = 50;

inline constexpr std::size_t kEstimateWindow = 100000, kEstimateSeeds = 100, kEstimateLabels = 10;
inline constexpr double kEstimateTol = 0.01, kEstimatePairFraction = 0.99, kHoeffdingDelta = 0.01;

inline constexpr std::uint64_t kProbReplicas = 1000000;
inline constexpr double kProbSigmas = 4.0, kCherryTol = 0.005;

inline constexpr std::uint64_t kAdditionReplicas = 100000;
inline constexpr double kAdditionSigmas = 4.0;

inline constexpr std::size_t kAtomN = 10000, kAtomSeeds = 10, kCombAtomLabels = 5;
inline constexpr double kAtomTol = 0.02, kCombAtomMax = 0.01;
inline constexpr std::size_t kCombRegionN = 50, kCombRegionSeeds = 100, kCombRegionHorizon = std::size_t(1) << 18;

inline constexpr unsigned kXiMaxDepth = 8;

inline constexpr std::uint64_t kCrtReplicas = 100000;
inline constexpr std::size_t kCrtAttachSteps = 5;
inline constexpr double kCrtSigmas = 3.0;

// ==== results ================================================================

struct Result {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;

  std::string line() const {
    std::ostringstream os;
    os << "criterion " << std::setw(2) << id << "  " << std::left << std::setw(26) << name << std::right
       << (pass ? "PASS" : "FAIL") << "  " << detail << "  (" << std::fixed << std::setprecision(1) << seconds
       << " s)";
    return os.str();
  }
  std::string machine() const {
    std::ostringstream os;
    os << "criterion." << id << ".name=" << name << "\ncriterion." << id << ".pass=" << (pass ? 1 : 0) << "\ncriterion."
       << id << ".detail=" << detail << "\ncriterion." << id << ".seconds=" << seconds << "\n";
    return os.str();
  }
};

struct Options {
  std::uint64_t seed = kSeed;
  unsigned jobs = 1;
};

namespace detail {

inline std::uint64_t seed_for(const Options& o, std::string_view tag, std::uint64_t index) {
  return derive_seed(o.seed, hash_tag(tag), index);
}

inline void merge_counts(CountTable& out, const CountTable& a) {
  for (const auto& [k, v] : a) out[k] += v;
}

inline CountTable parallel_counts(std::uint64_t reps, unsigned jobs, const std::function<std::string(std::uint64_t)>& key) {
  return parallel_reduce<CountTable>(
      reps, jobs, [&](std::uint64_t r, CountTable& c) { ++c[key(r)]; }, merge_counts);
}

inline bool laminar(const std::vector<Block>& blocks) {
  for (std::size_t a = 0; a < blocks.size(); ++a)
    for (std::size_t b = a + 1; b < blocks.size(); ++b) {
      const auto& x = blocks[a];
      const auto& y = blocks[b];
      std::vector<Label> both;
      std::set_intersection(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(both));
      if (!both.empty() && both.size() != x.size() && both.size() != y.size()) return false;
    }
  return true;
}

// Laminar families of subsets B of [n] with 2 ≤ |B| < n, by backtracking over bitmasks.
inline std::size_t brute_laminar_count(std::size_t n) {
  std::vector<std::uint32_t> cand;
  for (std::uint32_t m = 1; m < (1u << n); ++m) {
    const auto c = static_cast<std::size_t>(std::popcount(m));
    if (c >= 2 && c < n) cand.push_back(m);
  }
  std::vector<std::uint32_t> chosen;
  std::function<std::size_t(std::size_t)> go = [&](std::size_t q) -> std::size_t {
    if (q == cand.size()) return 1;
    std::size_t total = go(q + 1);
    const auto m = cand[q];
    bool ok = true;
    for (auto c : chosen) {
      const auto i = m & c;
      if (i != 0 && i != m && i != c) {
        ok = false;
        break;
      }
    }
    if (ok) {
      chosen.push_back(m);
      total += go(q + 1);
      chosen.pop_back();
    }
    return total;
  };
  return go(0);
}

// Random line-breaking tree with attachments at segment ends, starts and interior points.
inline LineBreakTree<double> adversarial_tree(Stream& rng, std::size_t k) {
  LineBreakTree<double> t;
  for (std::size_t s = 1; s <= k; ++s) {
    SparsePoint<double> attach;
    if (s > 1) {
      const auto& seg = t.segments()[rng.index(t.size())];
      const auto r = rng.index(3);
      attach = seg.at(r == 0 ? seg.length : r == 1 ? 0.0 : rng.uniform() * seg.length);
    }
    t.add_segment(attach, static_cast<std::uint32_t>(s), 0.1 + rng.uniform());
  }
  return t;
}

inline SparsePoint<double> vertex_or_interior(const LineBreakTree<double>& t, Stream& rng) {
  const auto& seg = t.segments()[rng.index(t.size())];
  switch (rng.index(3)) {
    case 0: return seg.attach;
    case 1: return seg.end();
    default: return seg.at(rng.uniform() * seg.length);
  }
}

// Position of a tree point in cumulative length measure over the segments in order.
inline double length_position(const LineBreakTree<double>& t, const SparsePoint<double>& x) {
  if (x.is_origin()) return 0.0;
  double cum = 0;
  for (const auto& s : t.segments()) {
    if (s.direction == x.last_index()) return cum + x.coord(s.direction);
    cum += s.length;
  }
  throw std::logic_error("point is not on the tree");
}

template <class Body>
Result timed(int id, std::string name, Body body) {
  const auto t0 = std::chrono::steady_clock::now();
  Result r;
  r.id = id;
  r.name = std::move(name);
  try {
    body(r);
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail += std::string(r.detail.empty() ? "" : "; ") + "exception: " + e.what();
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

inline std::string fmt(double x, int prec = 4) {
  std::ostringstream os;
  os << std::setprecision(prec) << x;
  return os.str();
}

inline WeightTree thirds() { return WeightTree::flat({Rational(1, 3), Rational(1, 3), Rational(1, 3)}); }

inline WeightTree fixed_random_tree(const Options& o) {
  Stream rng(o.seed, "random-weight-tree");
  return random_weight_tree(rng, 3);
}

}  // namespace detail

// ==== 1: enumeration ==========================================================

inline Result enumeration(const Options&) {
  return detail::timed(1, "enumeration", [](Result& r) {
    bool ok = true;
    std::ostringstream os;
    os << "counts=";
    for (std::size_t n = 1; n <= 5; ++n) {
      const auto hs = enumerate_hierarchies(n);
      std::set<FiniteHierarchy> distinct(hs.begin(), hs.end());
      const auto brute = detail::brute_laminar_count(n);
      ok = ok && hs.size() == kHierarchyCounts[n - 1] && distinct.size() == hs.size() && brute == hs.size();
      os << hs.size() << (n < 5 ? "," : "");
    }
    const auto s3 = enumerate_shapes(3).size(), s4 = enumerate_shapes(4).size();
    std::set<std::string> k4;
    for (const auto& h : enumerate_hierarchies(4)) k4.insert(shape(h).key);
    ok = ok && s3 == kShapeCounts3 && s4 == kShapeCounts4 && k4.size() == s4;
    os << " shapes=" << s3 << "," << s4;
    r.pass = ok;
    r.detail = os.str();
  });
}

// ==== 2: tree bijection =======================================================

inline Result bijection(const Options&) {
  return detail::timed(2, "tree_bijection", [](Result& r) {
    std::size_t checked = 0, bad = 0;
    for (std::size_t n : {4u, 5u})
      for (const auto& h : enumerate_hierarchies(n)) {
        ++checked;
        if (from_tree(to_tree(h)) != h) ++bad;
      }
    r.pass = bad == 0 && checked == kHierarchyCounts[3] + kHierarchyCounts[4];
    r.detail = "checked=" + std::to_string(checked) + " mismatches=" + std::to_string(bad);
  });
}

// ==== 3: MRCA closure =========================================================

inline Result mrca_closure_fixed_point(const Options& o) {
  return detail::timed(3, "mrca_closure", [&o](Result& r) {
    std::size_t checked = 0, bad = 0;
    for (std::size_t n = 1; n <= 5; ++n)
      for (const auto& h : enumerate_hierarchies(n)) {
        ++checked;
        if (mrca_closure(h) != h) ++bad;
      }
    Stream rng(o.seed, "mrca-closure");
    for (std::size_t q = 0; q < kRandomHierarchies; ++q) {
      const auto h = random_hierarchy(kRandomHierarchyN, rng);
      ++checked;
      if (mrca_closure(h) != h) ++bad;
    }
    r.pass = bad == 0;
    r.detail = "checked=" + std::to_string(checked) + " mismatches=" + std::to_string(bad);
  });
}

// ==== 4: laminarity fuzz ======================================================

// Raw fringe blocks over samples, pairwise meets, attach points and segment ends must be
// laminar and agree with derived_hierarchy.
inline Result laminarity(const Options& o) {
  return detail::timed(4, "laminarity_fuzz", [&o](Result& r) {
    std::size_t violations = 0, mismatches = 0, crt = 0;
    for (std::size_t q = 0; q < kLaminarityTrees; ++q) {
      Stream rng(o.seed, "laminarity", q);
      LineBreakTree<double> tree;
      std::vector<SparsePoint<double>> samples;
      const std::size_t n = 2 + rng.index(9);
      if (q % 2 == 0) {
        auto s = crt_linebreak(rng, 1 + rng.index(8));
        tree = s.tree.tree;
        for (std::size_t j = 0; j < n; ++j) samples.push_back(sample_point(s.tree, rng));
        ++crt;
      } else {
        tree = detail::adversarial_tree(rng, 1 + rng.index(6));
        for (std::size_t j = 0; j < n; ++j) samples.push_back(detail::vertex_or_interior(tree, rng));
      }
      std::vector<SparsePoint<double>> cand(samples);
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) cand.push_back(meet(samples[a], samples[b]));
      for (const auto& s : tree.segments()) {
        cand.push_back(s.attach);
        cand.push_back(s.end());
      }
      std::set<Block> raw;
      for (const auto& x : cand) {
        Block b;
        for (std::size_t j = 0; j < n; ++j)
          if (fringe_contains(x, samples[j])) b.push_back(static_cast<Label>(j + 1));
        if (b.size() >= 2 && b.size() < n) raw.insert(b);
      }
      const std::vector<Block> rawv(raw.begin(), raw.end());
      if (!detail::laminar(rawv)) {
        ++violations;
        continue;
      }
      try {
        const auto h = derived_hierarchy(tree, samples, n);
        auto blocks = h.blocks();
        bool whole = false;
        std::size_t singles = 0;
        for (const auto& b : blocks) {
          whole = whole || b.size() == n;
          singles += b.size() == 1;
        }
        if (!detail::laminar(blocks) || !whole || singles != n) ++violations;
        if (h != FiniteHierarchy::from_blocks(n, rawv)) ++mismatches;
      } catch (const InvalidHierarchy&) {
        ++violations;
      }
    }
    r.pass = violations == 0 && mismatches == 0;
    r.detail = "trees=" + std::to_string(kLaminarityTrees) + " (crt " + std::to_string(crt) +
               ") violations=" + std::to_string(violations) + " candidate_mismatches=" + std::to_string(mismatches);
  });
}

// ==== 5: exact round trip =====================================================

inline Result exact_round_trip(const Options& o) {
  return detail::timed(5, "exact_round_trip", [&o](Result& r) {
    auto tree = shared_dyadic(kRoundTripDepth);
    ReconstructOptions opt;
    opt.K = kRoundTripK;
    opt.tie_tol = 0;
    std::size_t match[2] = {0, 0}, levels[2] = {0, 0}, vanished[2] = {0, 0};
    for (std::size_t s = 0; s < kRoundTripSeeds; ++s)
      for (int g = 0; g < 2; ++g) {
        const auto seed = detail::seed_for(o, g == 0 ? "round-trip-dyadic" : "round-trip-triple", s);
        std::unique_ptr<ExactSpinalOracle> oracle;
        if (g == 0) oracle = std::make_unique<WeightTreeOracle>(tree, seed, "dyadic");
        else oracle = std::make_unique<TripleOracle>(seed);
        auto rec = reconstruct(ExactSource<Rational>(*oracle), kRoundTripN, opt);
        match[g] += rec.I == positive_restriction(*oracle, kRoundTripN);
        bool lv = rec.G.has_value() && *rec.G == rec.I;
        for (const auto& l : rec.levels) lv = lv && l.i_equals_g;
        levels[g] += lv;
        vanished[g] += rec.residual == 0.0;
      }
    std::ostringstream os;
    os << "I_n=input dyadic " << match[0] << "/" << kRoundTripSeeds << " triple " << match[1] << "/" << kRoundTripSeeds
       << "; I^k=G^k all k dyadic " << levels[0] << " triple " << levels[1] << "; all pairs separated by K="
       << kRoundTripK << " dyadic " << vanished[0] << " triple " << vanished[1];
    r.detail = os.str();
    r.pass = match[0] == kRoundTripSeeds && match[1] == kRoundTripSeeds && levels[0] == kRoundTripSeeds &&
             levels[1] == kRoundTripSeeds;
  });
}

// ==== 6: distributional equality ==============================================

// Reconstruction uses as many spines as the source needs to separate every sample pair.
inline Result distributional_equality(const Options& o) {
  return detail::timed(6, "distributional_equality", [&o](Result& r) {
    auto tree = shared_dyadic(kRoundTripDepth);
    ReconstructOptions opt;
    opt.K = 1;
    opt.auto_extend = true;
    opt.checks = false;
    opt.tie_tol = 0;
    std::size_t passes = 0, neg_fails = 0;
    std::uint64_t max_K = 0;
    double min_p = 1;
    for (std::size_t m = 0; m < kMetaTrials; ++m) {
      const auto sd = detail::seed_for(o, "dist-direct", m), sr = detail::seed_for(o, "dist-recon", m),
                 sc = detail::seed_for(o, "dist-comb", m);
      auto direct = detail::parallel_counts(kDistReplicas, o.jobs, [&](std::uint64_t q) {
        return shape(WeightTreeOracle(tree, derive_seed(sd, q)).prefix(kDistN)).key;
      });
      std::vector<std::uint64_t> ks;
      auto recon = parallel_reduce<std::pair<CountTable, std::uint64_t>>(
          kDistReplicas, o.jobs,
          [&](std::uint64_t q, std::pair<CountTable, std::uint64_t>& acc) {
            WeightTreeOracle w(tree, derive_seed(sr, q));
            auto rec = reconstruct(ExactSource<double>(w), kDistN, opt);
            ++acc.first[shape(rec.I).key];
            acc.second = std::max<std::uint64_t>(acc.second, rec.K);
          },
          [](std::pair<CountTable, std::uint64_t>& out, const std::pair<CountTable, std::uint64_t>& a) {
            detail::merge_counts(out.first, a.first);
            out.second = std::max(out.second, a.second);
          });
      max_K = std::max(max_K, recon.second);
      auto comb = detail::parallel_counts(kDistReplicas, o.jobs, [&](std::uint64_t q) {
        return shape(CombOracle(derive_seed(sc, q)).prefix(kDistN)).key;
      });
      const auto t = check_distributional_equality(direct, recon.first, kSignificance);
      passes += t.pass;
      min_p = std::min(min_p, t.p_value);
      neg_fails += !check_distributional_equality(direct, comb, kSignificance).pass;
    }
    r.pass = passes >= kMetaPassMin && neg_fails >= kNegativeFailMin;
    r.detail = "meta-trials passed " + std::to_string(passes) + "/" + std::to_string(kMetaTrials) +
               " (min p " + detail::fmt(min_p) + ", max K " + std::to_string(max_K) + "); dyadic-vs-comb failed " +
               std::to_string(neg_fails) + "/" + std::to_string(kMetaTrials);
  });
}

// ==== 7: spinal machinery =====================================================

inline Result spinal_identities(const Options& o) {
  return detail::timed(7, "spinal_identities", [&o](Result& r) {
    auto tree = shared_dyadic(kRoundTripDepth);
    std::size_t sym = 0, set_id = 0, impl = 0, order = 0, checked = 0;
    for (std::size_t s = 0; s < kSpinalSeeds; ++s) {
      WeightTreeOracle w(tree, detail::seed_for(o, "spinal", s), "dyadic");
      for (std::size_t n = 2; n <= kSpinalMaxN; ++n) {
        const auto h = w.prefix(n);
        auto X = [&w](Label i, Label j) { return spinal_value<Rational>(w, i, j); };
        for (Label i = 1; i <= n; ++i) {
          for (Label j = 1; j <= n; ++j) {
            if (i == j) continue;
            ++checked;
            sym += X(i, j) != X(j, i);
            Block want = mrca(h, i, j), got;
            for (Label m = 1; m <= n; ++m)
              if (m == i || X(i, m) >= X(i, j)) got.push_back(m);
            set_id += got != want;
            for (Label k = 1; k <= n; ++k)
              if (k != i && k != j && X(i, k) < X(j, k) && X(i, k) != X(i, j)) ++impl;
          }
          const auto rc = spinal_composition(h, i);
          order += !check_order_consistency(rc, exact_spinal_variables<Rational>(w, i, n)).ok;
        }
      }
    }
    r.pass = sym == 0 && set_id == 0 && impl == 0 && order == 0;
    r.detail = "pairs=" + std::to_string(checked) + " symmetry=" + std::to_string(sym) + " set_identity=" +
               std::to_string(set_id) + " implication=" + std::to_string(impl) + " order=" + std::to_string(order) +
               " failures";
  });
}

// ==== 8: empirical spinal convergence =========================================

inline Result spinal_convergence(const Options& o) {
  return detail::timed(8, "spinal_convergence", [&o](Result& r) {
    auto tree = shared_dyadic(kRoundTripDepth);
    const std::size_t per = kEstimateLabels * (kEstimateLabels - 1) / 2;
    auto within = parallel_reduce<std::pair<std::size_t, double>>(
        kEstimateSeeds, o.jobs,
        [&](std::uint64_t s, std::pair<std::size_t, double>& acc) {
          WeightTreeOracle w(tree, detail::seed_for(o, "spinal-estimate", s), "dyadic");
          const auto hm = w.prefix(kEstimateWindow);
          for (Label i = 1; i <= kEstimateLabels; ++i)
            for (Label j = i + 1; j <= kEstimateLabels; ++j) {
              const double err = std::abs(spinal_estimate(hm, i, j) - w.spinal_double(i, j));
              acc.first += err <= kEstimateTol;
              acc.second = std::max(acc.second, err);
            }
        },
        [](std::pair<std::size_t, double>& out, const std::pair<std::size_t, double>& a) {
          out.first += a.first;
          out.second = std::max(out.second, a.second);
        });
    const double frac = static_cast<double>(within.first) / static_cast<double>(per * kEstimateSeeds);
    const double radius = hoeffding_radius(kEstimateWindow - 2, kHoeffdingDelta);
    r.pass = frac >= kEstimatePairFraction;
    r.detail = "within " + detail::fmt(kEstimateTol) + ": " + std::to_string(within.first) + "/" +
               std::to_string(per * kEstimateSeeds) + " (max error " + detail::fmt(within.second) +
               ", Hoeffding radius " + detail::fmt(radius) + " at delta " + detail::fmt(kHoeffdingDelta) + ")";
  });
}

// ==== 9: exact probabilities vs Monte Carlo ===================================

inline Result exact_probabilities(const Options& o) {
  return detail::timed(9, "exact_vs_monte_carlo", [&o](Result& r) {
    const std::vector<std::pair<std::string, WeightTree>> trees{
        {"dyadic", WeightTree::dyadic(kRoundTripDepth)}, {"thirds", detail::thirds()},
        {"random", detail::fixed_random_tree(o)}};
    std::size_t rows = 0, bad = 0;
    double worst = 0, cherry = 0;
    for (const auto& [name, t] : trees) {
      // One H_4 per replica; H_2 and H_3 are its restrictions.
      auto counts = parallel_reduce<CountTable>(
          kProbReplicas, o.jobs,
          [&](std::uint64_t q, CountTable& c) {
            Stream s(o.seed, "prob-" + name, q);
            const auto h = sample_hierarchy(t, 4, s);
            ++c["4|" + shape(h).key];
            const auto h3 = restrict_prefix(h, 3);
            ++c["3|" + shape(h3).key];
            ++c["2|" + shape(restrict_prefix(h, 2)).key];
            if (name == "dyadic" && h3 == FiniteHierarchy::from_blocks(3, {{1, 2}})) ++c["cherry12"];
          },
          detail::merge_counts);
      const double R = static_cast<double>(kProbReplicas);
      for (std::size_t n = 2; n <= 4; ++n)
        for (const auto& s : enumerate_shapes(n)) {
          const auto pr = prob_exact(t, representative(s));
          const double p = (pr.p * Rational(labelled_count(s))).convert_to<double>();
          const double slack = (pr.truncation_bound * Rational(labelled_count(s))).convert_to<double>();
          const auto it = counts.find(std::to_string(n) + "|" + s.key);
          const double f = it == counts.end() ? 0.0 : static_cast<double>(it->second) / R;
          const double se = binomial_se(p, kProbReplicas);
          const double dev = std::abs(f - p);
          ++rows;
          if (dev > kProbSigmas * se + slack) ++bad;
          if (se > 0) worst = std::max(worst, dev / se);
        }
      if (name == "dyadic") cherry = static_cast<double>(counts["cherry12"]) / R;
    }
    const Rational cherry_exact =
        prob_exact(trees[0].second, FiniteHierarchy::from_blocks(3, {{1, 2}})).p;
    const bool cherry_ok = std::abs(cherry - 1.0 / 3.0) <= kCherryTol &&
                           std::abs(cherry_exact.convert_to<double>() - 1.0 / 3.0) <= kCherryTol;
    r.pass = bad == 0 && cherry_ok;
    r.detail = "shape rows " + std::to_string(rows) + " outside 4 SE " + std::to_string(bad) + " (worst " +
               detail::fmt(worst, 3) + " SE); dyadic cherry MC " + detail::fmt(cherry, 5) + " exact " +
               detail::fmt(cherry_exact.convert_to<double>(), 8);
  });
}

// ==== 10: addition rules ======================================================

inline Result addition_rules(const Options& o) {
  return detail::timed(10, "addition_rules", [&o](Result& r) {
    const std::vector<WeightTree> trees{WeightTree::dyadic(kRoundTripDepth), detail::thirds(),
                                        detail::fixed_random_tree(o)};
    std::size_t exact_bad = 0, exact_rows = 0;
    for (const auto& t : trees)
      for (std::size_t n = 1; n <= 4; ++n) {
        const auto a = check_addition_rule(ehpf_exact(t, n), ehpf_exact(t, n + 1));
        const auto b = eppf_addition_check(eppf_exact(t, n), eppf_exact(t, n + 1));
        exact_rows += a.rows.size() + b.rows.size();
        for (const auto& row : a.rows) exact_bad += !row.ok;
        for (const auto& row : b.rows) exact_bad += !row.ok;
      }
    // Empirical tables at n = 3 and n = 4 come from independent replicas.
    bool emp_ok = true;
    std::ostringstream emp;
    for (std::string kind : {"dyadic", "triple"}) {
      GeneratorSpec spec;
      spec.kind = kind;
      const OracleFactory f(spec);
      auto table = [&](std::size_t n, bool partition) {
        const auto base = detail::seed_for(o, "addition-" + kind + (partition ? "-eppf" : "-ehpf"), n);
        return detail::parallel_counts(kAdditionReplicas, o.jobs, [&](std::uint64_t q) {
          const auto oracle = f.make(derive_seed(base, q));
          return partition ? size_key(top_block_sizes(*oracle, n, 1u << 12)) : shape(oracle->prefix(n)).key;
        });
      };
      const auto he = check_addition_rule(ehpf_from_counts(table(3, false), 3), ehpf_from_counts(table(4, false), 4),
                                          kAdditionSigmas);
      const auto pe = eppf_addition_check(eppf_from_counts(table(3, true), 3), eppf_from_counts(table(4, true), 4),
                                          kAdditionSigmas);
      emp_ok = emp_ok && he.ok && pe.ok;
      emp << "; " << kind << " EHPF max " << detail::fmt(he.max_sigmas, 3) << " SE, EPPF max "
          << detail::fmt(pe.max_sigmas, 3) << " SE";
    }
    r.pass = exact_bad == 0 && emp_ok;
    r.detail = "exact rows " + std::to_string(exact_rows) + " violations " + std::to_string(exact_bad) +
               "; empirical 3->4" + emp.str();
  });
}

// ==== 11: diagnostics =========================================================

inline Result diagnostics(const Options& o) {
  return detail::timed(11, "diagnostics", [&o](Result& r) {
    std::size_t atom_ok = 0, comb_ok = 0, region_ok = 0;
    double atom_lo = 1, atom_hi = 0, comb_max = 0;
    for (std::size_t s = 0; s < kAtomSeeds; ++s) {
      TripleOracle t(detail::seed_for(o, "atom-triple", s));
      Label j = 1;
      while (t.region(j) != 1) ++j;
      const double a = atom_mass_estimate(t, j, kAtomN);
      atom_lo = std::min(atom_lo, a);
      atom_hi = std::max(atom_hi, a);
      atom_ok += std::abs(a - 1.0 / 3.0) <= kAtomTol;
      CombOracle c(detail::seed_for(o, "atom-comb", s));
      bool all = true;
      for (Label l = 1; l <= kCombAtomLabels; ++l) {
        const double m = atom_mass_estimate(c, l, kAtomN);
        comb_max = std::max(comb_max, m);
        all = all && m <= kCombAtomMax;
      }
      comb_ok += all;
    }
    for (std::size_t s = 0; s < kCombRegionSeeds; ++s) {
      TripleOracle t(detail::seed_for(o, "comb-region", s));
      const auto p = comb_partition(t, kCombRegionN, kCombRegionHorizon);
      Block want, got;
      for (Label j = 1; j <= kCombRegionN; ++j)
        if (t.region(j) == 2) want.push_back(j);
      for (std::size_t b = 0; b < p.blocks.size(); ++b)
        if (p.comb[b]) got.insert(got.end(), p.blocks[b].begin(), p.blocks[b].end());
      std::sort(got.begin(), got.end());
      region_ok += got == want;
    }
    r.pass = atom_ok == kAtomSeeds && comb_ok == kAtomSeeds && region_ok == kCombRegionSeeds;
    r.detail = "triple atom in [" + detail::fmt(atom_lo) + "," + detail::fmt(atom_hi) + "] " + std::to_string(atom_ok) +
               "/" + std::to_string(kAtomSeeds) + "; comb atom max " + detail::fmt(comb_max) + " " +
               std::to_string(comb_ok) + "/" + std::to_string(kAtomSeeds) + "; comb region exact " +
               std::to_string(region_ok) + "/" + std::to_string(kCombRegionSeeds);
  });
}

// ==== 12: xi map ==============================================================

inline Result xi_map(const Options&) {
  return detail::timed(12, "xi_map", [](Result& r) {
    std::size_t cand = 0, interval = 0, measure = 0, monotone = 0;
    for (unsigned d = 1; d <= kXiMaxDepth; ++d) {
      BeadEmbedding e(WeightTree::dyadic(d));
      const auto c = check_xi_properties(e);
      cand += c.candidates;
      interval += c.interval_failures;
      measure += c.measure_failures;
      monotone += !check_xi_monotone(e);
    }
    r.pass = interval == 0 && measure == 0 && monotone == 0;
    r.detail = "candidates=" + std::to_string(cand) + " interval_failures=" + std::to_string(interval) +
               " measure_failures=" + std::to_string(measure) + " monotone_failures=" + std::to_string(monotone);
  });
}

// ==== 13: CRT sanity ==========================================================

inline Result crt_sanity(const Options& o) {
  return detail::timed(13, "crt_sanity", [&o](Result& r) {
    struct Acc {
      std::vector<double> t1, pos;
    };
    auto acc = parallel_reduce<Acc>(
        kCrtReplicas, o.jobs,
        [&](std::uint64_t q, Acc& a) {
          Stream rng(o.seed, "crt", q);
          const auto s = crt_linebreak(rng, kCrtAttachSteps);
          a.t1.push_back(s.arrivals[0]);
          const auto& segs = s.tree.tree.segments();
          // Segment k attaches uniformly in length measure on the first k−1 segments.
          for (std::size_t k = 1; k < segs.size(); ++k)
            a.pos.push_back(detail::length_position(s.tree.tree, segs[k].attach) / s.arrivals[k - 1]);
        },
        [](Acc& out, const Acc& a) {
          out.t1.insert(out.t1.end(), a.t1.begin(), a.t1.end());
          out.pos.insert(out.pos.end(), a.pos.begin(), a.pos.end());
        });
    const auto m = mean_of(acc.t1);
    const double target = std::sqrt(std::acos(-1.0) / 2);
    const bool mean_ok = std::abs(m.mean - target) <= kCrtSigmas * m.se;
    const auto ks = ks_uniform(acc.pos, kSignificance);
    r.pass = mean_ok && ks.pass;
    r.detail = "mean T1 " + detail::fmt(m.mean, 6) + " vs " + detail::fmt(target, 6) + " (" +
               detail::fmt(std::abs(m.mean - target) / m.se, 3) + " se); attach KS D=" + detail::fmt(ks.statistic) +
               " p=" + detail::fmt(ks.p_value);
  });
}

// ==== registry ================================================================

struct Criterion {
  int id;
  std::string name;
  std::function<Result(const Options&)> run;
};

inline const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> all{
      {1, "enumeration", enumeration},
      {2, "tree_bijection", bijection},
      {3, "mrca_closure", mrca_closure_fixed_point},
      {4, "laminarity_fuzz", laminarity},
      {5, "exact_round_trip", exact_round_trip},
      {6, "distributional_equality", distributional_equality},
      {7, "spinal_identities", spinal_identities},
      {8, "spinal_convergence", spinal_convergence},
      {9, "exact_vs_monte_carlo", exact_probabilities},
      {10, "addition_rules", addition_rules},
      {11, "diagnostics", diagnostics},
      {12, "xi_map", xi_map},
      {13, "crt_sanity", crt_sanity},
  };
  return all;
}

// Criteria selected by number, name, or "all"/"acceptance".
inline std::vector<const Criterion*> select(const std::string& key) {
  std::vector<const Criterion*> out;
  for (const auto& c : criteria())
    if (key == "all" || key == "acceptance" || key == c.name || key == std::to_string(c.id) ||
        key == "criterion-" + std::to_string(c.id))
      out.push_back(&c);
  return out;
}

// Runs one criterion and applies its time limit, if any.
inline Result run(const Criterion& c, const Options& o) {
  auto r = c.run(o);
  const double limit = c.id == 1 ? kEnumerationSeconds : c.id == 5 ? kRoundTripSeconds : 0.0;
  if (limit > 0 && r.seconds >= limit) {
    r.pass = false;
    r.detail += "; over the " + detail::fmt(limit) + " s limit";
  }
  return r;
}

}  // namespace exhier::acceptance
